#pragma once

#include <array>

#include "jers/common.hpp"
#include "jers/tensor.hpp"

namespace jers {

// 12 parameters filling the top three rows of a homogeneous 4x4 matrix in
// row-major order; the identity is (1,0,0,0, 0,1,0,0, 0,0,1,0).
struct AffineParams {
    std::array<real, 12> a{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};

    static AffineParams identity() { return AffineParams{}; }
};

// Homogeneous 4x4 with the bottom row pinned to (0,0,0,1), row-major.
struct AffineMatrix {
    std::array<real, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    static AffineMatrix identity() { return AffineMatrix{}; }
    real at(int r, int c) const { return m[static_cast<size_t>(r * 4 + c)]; }
    real& at(int r, int c) { return m[static_cast<size_t>(r * 4 + c)]; }
};

AffineMatrix params_to_matrix(const AffineParams& p);
AffineParams matrix_to_params(const AffineMatrix& m);

// Matrix product incremental * accumulated; the first argument is the
// transform applied on top of everything accumulated so far.
AffineMatrix compose(const AffineMatrix& incremental, const AffineMatrix& accumulated);

// Closed-form inverse via the 3x3 adjugate plus translation back-substitution.
// Throws SingularityError (naming the determinant) below a 1e-8 guard.
AffineMatrix invert(const AffineMatrix& m);

std::array<real, 3> apply_point(const AffineMatrix& m, const std::array<real, 3>& p);

real det3(const AffineMatrix& m);

// ---- differentiable counterparts on tape tensors -------------------------
// Matrices travel through the registration cascade as [4,4] tensors so that
// gradients reach the parameters that produced them.

Tensor params_to_matrix(const Tensor& params12);      // [12] -> [4,4]
Tensor compose(const Tensor& incremental, const Tensor& accumulated);  // [4,4]x[4,4]
Tensor invert(const Tensor& mat44);                   // [4,4] -> [4,4]

Tensor tensor_from_matrix(const AffineMatrix& m);
AffineMatrix matrix_from_tensor(const Tensor& t);

} // namespace jers

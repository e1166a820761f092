#include "jers/affine.hpp"

#include <cmath>
#include <sstream>

namespace jers {

namespace {

void require_finite_params(const real* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i])) throw ValueError("affine parameters must be finite");
    }
}

// 4x4 row-major product helper shared by the plain and tape paths.
void mat4_multiply(const real* a, const real* b, real* out) {
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            real acc = 0;
            for (int k = 0; k < 4; ++k) acc += a[r * 4 + k] * b[k * 4 + c];
            out[r * 4 + c] = acc;
        }
    }
}

void affine_invert_raw(const real* m, real* out) {
    real det = m[0] * (m[5] * m[10] - m[6] * m[9]) - m[1] * (m[4] * m[10] - m[6] * m[8]) +
               m[2] * (m[4] * m[9] - m[5] * m[8]);
    if (std::abs(det) <= real(1e-8)) {
        std::ostringstream os;
        os << "affine matrix is near-singular (det = " << det << ")";
        throw SingularityError(os.str());
    }
    real inv = real(1) / det;
    // Adjugate of the upper-left 3x3.
    out[0] = (m[5] * m[10] - m[6] * m[9]) * inv;
    out[1] = (m[2] * m[9] - m[1] * m[10]) * inv;
    out[2] = (m[1] * m[6] - m[2] * m[5]) * inv;
    out[4] = (m[6] * m[8] - m[4] * m[10]) * inv;
    out[5] = (m[0] * m[10] - m[2] * m[8]) * inv;
    out[6] = (m[2] * m[4] - m[0] * m[6]) * inv;
    out[8] = (m[4] * m[9] - m[5] * m[8]) * inv;
    out[9] = (m[1] * m[8] - m[0] * m[9]) * inv;
    out[10] = (m[0] * m[5] - m[1] * m[4]) * inv;
    // Translation back-substitution: t' = -R^{-1} t.
    out[3] = -(out[0] * m[3] + out[1] * m[7] + out[2] * m[11]);
    out[7] = -(out[4] * m[3] + out[5] * m[7] + out[6] * m[11]);
    out[11] = -(out[8] * m[3] + out[9] * m[7] + out[10] * m[11]);
    out[12] = 0;
    out[13] = 0;
    out[14] = 0;
    out[15] = 1;
}

} // namespace

real det3(const AffineMatrix& m) {
    const real* p = m.m.data();
    return p[0] * (p[5] * p[10] - p[6] * p[9]) - p[1] * (p[4] * p[10] - p[6] * p[8]) +
           p[2] * (p[4] * p[9] - p[5] * p[8]);
}

AffineMatrix params_to_matrix(const AffineParams& p) {
    require_finite_params(p.a.data(), 12);
    AffineMatrix m;
    for (int i = 0; i < 12; ++i) m.m[static_cast<size_t>(i)] = p.a[static_cast<size_t>(i)];
    m.m[12] = 0;
    m.m[13] = 0;
    m.m[14] = 0;
    m.m[15] = 1;
    return m;
}

AffineParams matrix_to_params(const AffineMatrix& m) {
    AffineParams p;
    for (int i = 0; i < 12; ++i) p.a[static_cast<size_t>(i)] = m.m[static_cast<size_t>(i)];
    return p;
}

AffineMatrix compose(const AffineMatrix& incremental, const AffineMatrix& accumulated) {
    AffineMatrix out;
    mat4_multiply(incremental.m.data(), accumulated.m.data(), out.m.data());
    out.m[12] = 0;
    out.m[13] = 0;
    out.m[14] = 0;
    out.m[15] = 1;
    return out;
}

AffineMatrix invert(const AffineMatrix& m) {
    AffineMatrix out;
    affine_invert_raw(m.m.data(), out.m.data());
    return out;
}

std::array<real, 3> apply_point(const AffineMatrix& m, const std::array<real, 3>& p) {
    std::array<real, 3> out;
    for (int r = 0; r < 3; ++r) {
        out[static_cast<size_t>(r)] = m.at(r, 0) * p[0] + m.at(r, 1) * p[1] +
                                      m.at(r, 2) * p[2] + m.at(r, 3);
    }
    return out;
}

// ---- tape variants --------------------------------------------------------

Tensor params_to_matrix(const Tensor& params12) {
    if (params12.rank() != 1 || params12.dim(0) != 12) {
        throw DimensionError("params_to_matrix: expected a [12] tensor");
    }
    require_finite_params(params12.data(), 12);
    Tensor out = Tensor::zeros({4, 4});
    real* po = out.data();
    for (int i = 0; i < 12; ++i) po[i] = params12.data()[i];
    po[15] = 1;
    if (detail::wants_grad({&params12})) {
        auto pi = params12.impl().get();
        auto oi = out.impl().get();
        detail::record("params_to_matrix", {&params12}, out, [pi, oi] {
            detail::ensure_grad(pi);
            for (int i = 0; i < 12; ++i) pi->grad[i] += oi->grad[i];
        });
    }
    return out;
}

Tensor compose(const Tensor& incremental, const Tensor& accumulated) {
    if (incremental.shape() != std::vector<int64_t>{4, 4} ||
        accumulated.shape() != std::vector<int64_t>{4, 4}) {
        throw DimensionError("compose: expected [4,4] tensors");
    }
    Tensor out = Tensor::zeros({4, 4});
    mat4_multiply(incremental.data(), accumulated.data(), out.data());
    detail::check_finite("compose", out);
    if (detail::wants_grad({&incremental, &accumulated})) {
        auto ai = incremental.impl().get();
        auto bi = accumulated.impl().get();
        auto oi = out.impl().get();
        detail::record("compose", {&incremental, &accumulated}, out, [ai, bi, oi] {
            if (ai->requires_grad) {
                detail::ensure_grad(ai);
                // gA += gC * B^T
                for (int r = 0; r < 4; ++r) {
                    for (int c = 0; c < 4; ++c) {
                        real acc = 0;
                        for (int k = 0; k < 4; ++k) acc += oi->grad[r * 4 + k] * bi->data[c * 4 + k];
                        ai->grad[r * 4 + c] += acc;
                    }
                }
            }
            if (bi->requires_grad) {
                detail::ensure_grad(bi);
                // gB += A^T * gC
                for (int r = 0; r < 4; ++r) {
                    for (int c = 0; c < 4; ++c) {
                        real acc = 0;
                        for (int k = 0; k < 4; ++k) acc += ai->data[k * 4 + r] * oi->grad[k * 4 + c];
                        bi->grad[r * 4 + c] += acc;
                    }
                }
            }
        });
    }
    return out;
}

Tensor invert(const Tensor& mat44) {
    if (mat44.shape() != std::vector<int64_t>{4, 4}) {
        throw DimensionError("invert: expected a [4,4] tensor");
    }
    Tensor out = Tensor::zeros({4, 4});
    affine_invert_raw(mat44.data(), out.data());
    detail::check_finite("invert", out);
    if (detail::wants_grad({&mat44})) {
        auto mi = mat44.impl().get();
        auto oi = out.impl().get();
        detail::record("invert", {&mat44}, out, [mi, oi] {
            detail::ensure_grad(mi);
            // d(A^{-1}) = -A^{-1} dA A^{-1}  =>  gA = -Y^T gY Y^T with Y = A^{-1}.
            real tmp[16];
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    real acc = 0;
                    for (int k = 0; k < 4; ++k) acc += oi->data[k * 4 + r] * oi->grad[k * 4 + c];
                    tmp[r * 4 + c] = acc;
                }
            }
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    real acc = 0;
                    for (int k = 0; k < 4; ++k) acc += tmp[r * 4 + k] * oi->data[c * 4 + k];
                    mi->grad[r * 4 + c] -= acc;
                }
            }
        });
    }
    return out;
}

Tensor tensor_from_matrix(const AffineMatrix& m) {
    return Tensor::from_data({4, 4}, std::vector<real>(m.m.begin(), m.m.end()));
}

AffineMatrix matrix_from_tensor(const Tensor& t) {
    if (t.shape() != std::vector<int64_t>{4, 4}) {
        throw DimensionError("matrix_from_tensor: expected a [4,4] tensor");
    }
    AffineMatrix m;
    for (int i = 0; i < 16; ++i) m.m[static_cast<size_t>(i)] = t.data()[i];
    return m;
}

} // namespace jers

#pragma once

#include <array>
#include <string>
#include <vector>

#include "jers/affine.hpp"
#include "jers/tensor.hpp"

namespace jers {

// Dense scalar field over a [W,H,D] grid. Intensities are normalized into
// [0,1] on ingest; spacing is carried as metadata only.
struct Volume {
    Tensor data;                            // [W,H,D]
    std::array<real, 3> spacing{1, 1, 1};

    int64_t width() const { return data.dim(0); }
    int64_t height() const { return data.dim(1); }
    int64_t depth() const { return data.dim(2); }
};

// Per-voxel class field, channel 0 being the background class. Hard masks
// are one-hot; warped/soft masks stay within [0,1] with per-voxel channel
// sums renormalized to 1.
struct LabelMask {
    Tensor data;                            // [C,W,H,D]
    std::vector<std::string> class_names;

    int64_t channels() const { return data.dim(0); }
};

bool is_hard_mask(const LabelMask& mask, real tol = real(0));

// Resamples `src` on its own grid under the gather rule: the output voxel at
// p reads src at A applied to p in center-origin coordinates, trilinearly
// interpolated, with out-of-bounds corners contributing `oob_value`.
// Differentiable w.r.t. both the source values and the matrix entries.
Tensor warp(const Tensor& src, const Tensor& mat44, real oob_value = 0);

// Channel-wise warp of a [C,X,Y,Z] label field. Out-of-bounds mass is
// absorbed by the background channel (its fill value is 1) and per-voxel
// channel sums are renormalized to 1. Fully differentiable.
Tensor warp_label_field(const Tensor& labels, const Tensor& mat44);

Volume warp_volume(const Volume& src, const AffineMatrix& a);
LabelMask warp_labels(const LabelMask& mask, const AffineMatrix& a_inv);

} // namespace jers

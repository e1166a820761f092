#include "jers/resampler.hpp"

#include <cmath>

namespace jers {

namespace {

struct WarpDims {
    int64_t x, y, z;
    real cx, cy, cz;   // grid center, the origin for rotations and scaling
};

WarpDims warp_dims(const Tensor& src) {
    WarpDims d;
    d.x = src.dim(0);
    d.y = src.dim(1);
    d.z = src.dim(2);
    d.cx = real(d.x - 1) / 2;
    d.cy = real(d.y - 1) / 2;
    d.cz = real(d.z - 1) / 2;
    return d;
}

void require_finite_matrix(const Tensor& m) {
    const real* p = m.data();
    for (int i = 0; i < 16; ++i) {
        if (!std::isfinite(p[i])) throw ValueError("warp: non-finite transform matrix");
    }
}

inline real sample_at(const real* v, const WarpDims& d, int64_t x, int64_t y, int64_t z,
                      real oob) {
    if (x < 0 || y < 0 || z < 0 || x >= d.x || y >= d.y || z >= d.z) return oob;
    return v[(x * d.y + y) * d.z + z];
}

// Trilinear value plus the derivative of the value w.r.t. the sample point.
struct TriSample {
    real value;
    real dqx, dqy, dqz;
};

TriSample trilinear(const real* v, const WarpDims& d, real qx, real qy, real qz, real oob) {
    real fxq = std::floor(qx), fyq = std::floor(qy), fzq = std::floor(qz);
    int64_t x0 = static_cast<int64_t>(fxq);
    int64_t y0 = static_cast<int64_t>(fyq);
    int64_t z0 = static_cast<int64_t>(fzq);
    real fx = qx - fxq, fy = qy - fyq, fz = qz - fzq;

    real c[2][2][2];
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            for (int e = 0; e < 2; ++e) {
                c[a][b][e] = sample_at(v, d, x0 + a, y0 + b, z0 + e, oob);
            }
        }
    }
    real c00 = c[0][0][0] * (1 - fz) + c[0][0][1] * fz;
    real c01 = c[0][1][0] * (1 - fz) + c[0][1][1] * fz;
    real c10 = c[1][0][0] * (1 - fz) + c[1][0][1] * fz;
    real c11 = c[1][1][0] * (1 - fz) + c[1][1][1] * fz;
    real c0 = c00 * (1 - fy) + c01 * fy;
    real c1 = c10 * (1 - fy) + c11 * fy;

    TriSample s;
    s.value = c0 * (1 - fx) + c1 * fx;
    s.dqx = c1 - c0;
    real d00 = c[0][0][1] - c[0][0][0];
    real d01 = c[0][1][1] - c[0][1][0];
    real d10 = c[1][0][1] - c[1][0][0];
    real d11 = c[1][1][1] - c[1][1][0];
    s.dqz = ((d00 * (1 - fy) + d01 * fy) * (1 - fx)) + ((d10 * (1 - fy) + d11 * fy) * fx);
    real e0 = c01 - c00;
    real e1 = c11 - c10;
    s.dqy = e0 * (1 - fx) + e1 * fx;
    return s;
}

inline void map_point(const real* m, const WarpDims& d, int64_t x, int64_t y, int64_t z,
                      real& qx, real& qy, real& qz) {
    real ux = real(x) - d.cx;
    real uy = real(y) - d.cy;
    real uz = real(z) - d.cz;
    qx = m[0] * ux + m[1] * uy + m[2] * uz + m[3] + d.cx;
    qy = m[4] * ux + m[5] * uy + m[6] * uz + m[7] + d.cy;
    qz = m[8] * ux + m[9] * uy + m[10] * uz + m[11] + d.cz;
}

} // namespace

Tensor warp(const Tensor& src, const Tensor& mat44, real oob_value) {
    if (src.rank() != 3) throw DimensionError("warp: source must be [X,Y,Z]");
    if (mat44.shape() != std::vector<int64_t>{4, 4}) {
        throw DimensionError("warp: transform must be a [4,4] tensor");
    }
    require_finite_matrix(mat44);
    WarpDims d = warp_dims(src);
    Tensor out = Tensor::zeros(src.shape());
    const real* pv = src.data();
    const real* pm = mat44.data();
    real* po = out.data();
    parallel_for(d.x, [&](int64_t x0i, int64_t x1i) {
        for (int64_t x = x0i; x < x1i; ++x) {
            for (int64_t y = 0; y < d.y; ++y) {
                for (int64_t z = 0; z < d.z; ++z) {
                    real qx, qy, qz;
                    map_point(pm, d, x, y, z, qx, qy, qz);
                    po[(x * d.y + y) * d.z + z] = trilinear(pv, d, qx, qy, qz, oob_value).value;
                }
            }
        }
    });
    detail::check_finite("warp", out);

    if (detail::wants_grad({&src, &mat44})) {
        auto si = src.impl().get();
        auto mi = mat44.impl().get();
        auto oi = out.impl().get();
        detail::record("warp", {&src, &mat44}, out, [si, mi, oi, d, oob_value] {
            if (si->requires_grad) detail::ensure_grad(si);
            if (mi->requires_grad) detail::ensure_grad(mi);
            const real* pv = si->data.data();
            const real* pm = mi->data.data();
            for (int64_t x = 0; x < d.x; ++x) {
                for (int64_t y = 0; y < d.y; ++y) {
                    for (int64_t z = 0; z < d.z; ++z) {
                        real g = oi->grad[(x * d.y + y) * d.z + z];
                        if (g == real(0)) continue;
                        real qx, qy, qz;
                        map_point(pm, d, x, y, z, qx, qy, qz);
                        if (si->requires_grad) {
                            real fxq = std::floor(qx), fyq = std::floor(qy), fzq = std::floor(qz);
                            int64_t x0 = static_cast<int64_t>(fxq);
                            int64_t y0 = static_cast<int64_t>(fyq);
                            int64_t z0 = static_cast<int64_t>(fzq);
                            real fx = qx - fxq, fy = qy - fyq, fz = qz - fzq;
                            for (int a = 0; a < 2; ++a) {
                                real wx = a ? fx : 1 - fx;
                                int64_t sx = x0 + a;
                                if (sx < 0 || sx >= d.x || wx == real(0)) continue;
                                for (int b = 0; b < 2; ++b) {
                                    real wy = b ? fy : 1 - fy;
                                    int64_t sy = y0 + b;
                                    if (sy < 0 || sy >= d.y || wy == real(0)) continue;
                                    for (int e = 0; e < 2; ++e) {
                                        real wz = e ? fz : 1 - fz;
                                        int64_t sz = z0 + e;
                                        if (sz < 0 || sz >= d.z || wz == real(0)) continue;
                                        si->grad[(sx * d.y + sy) * d.z + sz] += g * wx * wy * wz;
                                    }
                                }
                            }
                        }
                        if (mi->requires_grad) {
                            TriSample s = trilinear(pv, d, qx, qy, qz, oob_value);
                            real u[4] = {real(x) - d.cx, real(y) - d.cy, real(z) - d.cz, 1};
                            real dq[3] = {s.dqx, s.dqy, s.dqz};
                            for (int r = 0; r < 3; ++r) {
                                real gr = g * dq[r];
                                if (gr == real(0)) continue;
                                for (int cidx = 0; cidx < 4; ++cidx) {
                                    mi->grad[r * 4 + cidx] += gr * u[cidx];
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor warp_label_field(const Tensor& labels, const Tensor& mat44) {
    if (labels.rank() != 4) throw DimensionError("warp_label_field: expected [C,X,Y,Z]");
    int64_t c = labels.dim(0);
    int64_t vox = labels.numel() / c;
    std::vector<Tensor> warped;
    warped.reserve(static_cast<size_t>(c));
    for (int64_t ch = 0; ch < c; ++ch) {
        Tensor channel = Tensor::from_data(
            {labels.dim(1), labels.dim(2), labels.dim(3)},
            std::vector<real>(labels.data() + ch * vox, labels.data() + (ch + 1) * vox));
        if (grad_enabled() && labels.requires_grad()) {
            auto li = labels.impl().get();
            auto ci = channel.impl().get();
            detail::record("label_channel", {&labels}, channel, [li, ci, ch, vox] {
                detail::ensure_grad(li);
                for (int64_t i = 0; i < vox; ++i) li->grad[ch * vox + i] += ci->grad[i];
            });
        }
        // Outside the field of view everything is background.
        warped.push_back(warp(channel, mat44, ch == 0 ? real(1) : real(0)));
    }
    Tensor total = warped[0];
    for (int64_t ch = 1; ch < c; ++ch) total = add(total, warped[static_cast<size_t>(ch)]);
    Tensor denom = max_scalar(total, real(1e-6));
    std::vector<Tensor> normalized;
    normalized.reserve(static_cast<size_t>(c));
    for (int64_t ch = 0; ch < c; ++ch) {
        normalized.push_back(div(warped[static_cast<size_t>(ch)], denom));
    }
    return stack_volumes(normalized);
}

Volume warp_volume(const Volume& src, const AffineMatrix& a) {
    NoGradGuard ng;
    Volume out;
    out.data = warp(src.data, tensor_from_matrix(a), 0);
    out.spacing = src.spacing;
    return out;
}

LabelMask warp_labels(const LabelMask& mask, const AffineMatrix& a_inv) {
    NoGradGuard ng;
    LabelMask out;
    out.data = warp_label_field(mask.data, tensor_from_matrix(a_inv));
    out.class_names = mask.class_names;
    return out;
}

bool is_hard_mask(const LabelMask& mask, real tol) {
    const real* p = mask.data.data();
    int64_t c = mask.channels();
    int64_t vox = mask.data.numel() / c;
    for (int64_t v = 0; v < vox; ++v) {
        real s = 0;
        for (int64_t ch = 0; ch < c; ++ch) {
            real val = p[ch * vox + v];
            if (std::abs(val) > tol && std::abs(val - 1) > tol) return false;
            s += val;
        }
        if (std::abs(s - 1) > tol + real(1e-6)) return false;
    }
    return true;
}

} // namespace jers

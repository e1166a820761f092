#include "jers/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace jers {

namespace {

using detail::TensorImpl;

struct ConvDims {
    int64_t batch, cin, cout, k;
    int64_t ix, iy, iz;       // input spatial extents
    int64_t ox, oy, oz;       // output spatial extents
    int64_t px, py, pz;       // padded extents
    int stride, pad;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernel, int stride, int padding) {
    if (input.rank() != 5) throw DimensionError("conv3d: input must be [N,Cin,X,Y,Z]");
    if (kernel.rank() != 5) throw DimensionError("conv3d: kernel must be [Cout,Cin,k,k,k]");
    if (stride < 1) throw ValueError("conv3d: stride must be positive");
    if (padding < 0) throw ValueError("conv3d: padding must be non-negative");
    ConvDims d;
    d.batch = input.dim(0);
    d.cin = input.dim(1);
    d.ix = input.dim(2);
    d.iy = input.dim(3);
    d.iz = input.dim(4);
    d.cout = kernel.dim(0);
    d.k = kernel.dim(2);
    if (kernel.dim(1) != d.cin) throw DimensionError("conv3d: kernel channel count mismatch");
    if (kernel.dim(3) != d.k || kernel.dim(4) != d.k) {
        throw DimensionError("conv3d: kernel must be cubic");
    }
    if (d.k % 2 == 0) throw ValueError("conv3d: kernel extent must be odd");
    d.stride = stride;
    d.pad = padding;
    d.px = d.ix + 2 * padding;
    d.py = d.iy + 2 * padding;
    d.pz = d.iz + 2 * padding;
    if (d.px < d.k || d.py < d.k || d.pz < d.k) {
        throw DimensionError("conv3d: spatial extents after padding smaller than kernel");
    }
    d.ox = (d.px - d.k) / stride + 1;
    d.oy = (d.py - d.k) / stride + 1;
    d.oz = (d.pz - d.k) / stride + 1;
    return d;
}

// Copies one [X,Y,Z] channel into a zero-initialized padded buffer.
void pad_channel(const real* src, real* dst, const ConvDims& d) {
    std::fill(dst, dst + d.px * d.py * d.pz, real(0));
    for (int64_t x = 0; x < d.ix; ++x) {
        for (int64_t y = 0; y < d.iy; ++y) {
            const real* s = src + (x * d.iy + y) * d.iz;
            real* t = dst + ((x + d.pad) * d.py + (y + d.pad)) * d.pz + d.pad;
            std::memcpy(t, s, sizeof(real) * static_cast<size_t>(d.iz));
        }
    }
}

// out[o] += w * padded[o*stride + tap] over the whole output block. The
// stride-1 case runs contiguously along z and is the training hot loop.
void tap_axpy(real w, const real* padded, real* out, const ConvDims& d, int64_t kx, int64_t ky,
              int64_t kz) {
    if (d.stride == 1) {
        for (int64_t x = 0; x < d.ox; ++x) {
            for (int64_t y = 0; y < d.oy; ++y) {
                const real* src = padded + ((x + kx) * d.py + (y + ky)) * d.pz + kz;
                real* dst = out + (x * d.oy + y) * d.oz;
                for (int64_t z = 0; z < d.oz; ++z) dst[z] += w * src[z];
            }
        }
    } else {
        for (int64_t x = 0; x < d.ox; ++x) {
            for (int64_t y = 0; y < d.oy; ++y) {
                const real* src = padded + ((x * d.stride + kx) * d.py + (y * d.stride + ky)) * d.pz + kz;
                real* dst = out + (x * d.oy + y) * d.oz;
                for (int64_t z = 0; z < d.oz; ++z) dst[z] += w * src[z * d.stride];
            }
        }
    }
}

// padded[o*stride + tap] += w * gout[o]; transpose of tap_axpy.
void tap_scatter(real w, const real* gout, real* padded, const ConvDims& d, int64_t kx,
                 int64_t ky, int64_t kz) {
    for (int64_t x = 0; x < d.ox; ++x) {
        for (int64_t y = 0; y < d.oy; ++y) {
            real* dst = padded + ((x * d.stride + kx) * d.py + (y * d.stride + ky)) * d.pz + kz;
            const real* src = gout + (x * d.oy + y) * d.oz;
            if (d.stride == 1) {
                for (int64_t z = 0; z < d.oz; ++z) dst[z] += w * src[z];
            } else {
                for (int64_t z = 0; z < d.oz; ++z) dst[z * d.stride] += w * src[z];
            }
        }
    }
}

// dot(gout, padded shifted by tap) for the kernel gradient.
double tap_dot(const real* gout, const real* padded, const ConvDims& d, int64_t kx, int64_t ky,
               int64_t kz) {
    double acc = 0;
    for (int64_t x = 0; x < d.ox; ++x) {
        for (int64_t y = 0; y < d.oy; ++y) {
            const real* src = padded + ((x * d.stride + kx) * d.py + (y * d.stride + ky)) * d.pz + kz;
            const real* g = gout + (x * d.oy + y) * d.oz;
            if (d.stride == 1) {
                for (int64_t z = 0; z < d.oz; ++z) acc += static_cast<double>(g[z]) * src[z];
            } else {
                for (int64_t z = 0; z < d.oz; ++z) acc += static_cast<double>(g[z]) * src[z * d.stride];
            }
        }
    }
    return acc;
}

} // namespace

Tensor conv3d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
    ConvDims d = conv_dims(input, kernel, stride, padding);
    Tensor out = Tensor::zeros({d.batch, d.cout, d.ox, d.oy, d.oz});

    int64_t in_ch_vol = d.ix * d.iy * d.iz;
    int64_t out_ch_vol = d.ox * d.oy * d.oz;
    int64_t pad_vol = d.px * d.py * d.pz;
    int64_t ktap = d.k * d.k * d.k;

    std::vector<real> padded(static_cast<size_t>(d.cin * pad_vol));
    const real* kw = kernel.data();
    for (int64_t n = 0; n < d.batch; ++n) {
        const real* in_n = input.data() + n * d.cin * in_ch_vol;
        real* out_n = out.data() + n * d.cout * out_ch_vol;
        for (int64_t ci = 0; ci < d.cin; ++ci) {
            pad_channel(in_n + ci * in_ch_vol, padded.data() + ci * pad_vol, d);
        }
        parallel_for(d.cout, [&](int64_t co0, int64_t co1) {
            for (int64_t co = co0; co < co1; ++co) {
                real* dst = out_n + co * out_ch_vol;
                for (int64_t ci = 0; ci < d.cin; ++ci) {
                    const real* src = padded.data() + ci * pad_vol;
                    const real* w = kw + (co * d.cin + ci) * ktap;
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        for (int64_t ky = 0; ky < d.k; ++ky) {
                            for (int64_t kz = 0; kz < d.k; ++kz) {
                                real wv = w[(kx * d.k + ky) * d.k + kz];
                                if (wv != real(0)) tap_axpy(wv, src, dst, d, kx, ky, kz);
                            }
                        }
                    }
                }
            }
        });
    }
    detail::check_finite("conv3d", out);

    if (detail::wants_grad({&input, &kernel})) {
        auto in_i = input.impl().get();
        auto k_i = kernel.impl().get();
        auto o_i = out.impl().get();
        detail::record("conv3d", {&input, &kernel}, out, [in_i, k_i, o_i, d, in_ch_vol,
                                                          out_ch_vol, pad_vol, ktap] {
            if (in_i->requires_grad) detail::ensure_grad(in_i);
            if (k_i->requires_grad) detail::ensure_grad(k_i);
            std::vector<real> padded_in(static_cast<size_t>(d.cin * pad_vol));
            std::vector<real> padded_gin;
            if (in_i->requires_grad) padded_gin.assign(static_cast<size_t>(d.cin * pad_vol), 0);

            for (int64_t n = 0; n < d.batch; ++n) {
                const real* in_n = in_i->data.data() + n * d.cin * in_ch_vol;
                const real* gout_n = o_i->grad.data() + n * d.cout * out_ch_vol;
                for (int64_t ci = 0; ci < d.cin; ++ci) {
                    pad_channel(in_n + ci * in_ch_vol, padded_in.data() + ci * pad_vol, d);
                }
                if (k_i->requires_grad) {
                    parallel_for(d.cout, [&](int64_t co0, int64_t co1) {
                        for (int64_t co = co0; co < co1; ++co) {
                            const real* g = gout_n + co * out_ch_vol;
                            for (int64_t ci = 0; ci < d.cin; ++ci) {
                                const real* src = padded_in.data() + ci * pad_vol;
                                real* gw = k_i->grad.data() + (co * d.cin + ci) * ktap;
                                for (int64_t kx = 0; kx < d.k; ++kx) {
                                    for (int64_t ky = 0; ky < d.k; ++ky) {
                                        for (int64_t kz = 0; kz < d.k; ++kz) {
                                            gw[(kx * d.k + ky) * d.k + kz] +=
                                                static_cast<real>(tap_dot(g, src, d, kx, ky, kz));
                                        }
                                    }
                                }
                            }
                        }
                    });
                }
                if (in_i->requires_grad) {
                    std::fill(padded_gin.begin(), padded_gin.end(), real(0));
                    parallel_for(d.cin, [&](int64_t ci0, int64_t ci1) {
                        for (int64_t ci = ci0; ci < ci1; ++ci) {
                            real* gpad = padded_gin.data() + ci * pad_vol;
                            for (int64_t co = 0; co < d.cout; ++co) {
                                const real* g = gout_n + co * out_ch_vol;
                                const real* w = k_i->data.data() + (co * d.cin + ci) * ktap;
                                for (int64_t kx = 0; kx < d.k; ++kx) {
                                    for (int64_t ky = 0; ky < d.k; ++ky) {
                                        for (int64_t kz = 0; kz < d.k; ++kz) {
                                            real wv = w[(kx * d.k + ky) * d.k + kz];
                                            if (wv != real(0)) tap_scatter(wv, g, gpad, d, kx, ky, kz);
                                        }
                                    }
                                }
                            }
                            // Fold the padded gradient back onto the unpadded channel.
                            real* gin = in_i->grad.data() + (n * d.cin + ci) * in_ch_vol;
                            for (int64_t x = 0; x < d.ix; ++x) {
                                for (int64_t y = 0; y < d.iy; ++y) {
                                    const real* s =
                                        gpad + ((x + d.pad) * d.py + (y + d.pad)) * d.pz + d.pad;
                                    real* t = gin + (x * d.iy + y) * d.iz;
                                    for (int64_t z = 0; z < d.iz; ++z) t[z] += s[z];
                                }
                            }
                        }
                    });
                }
            }
        });
    }
    return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    if (x.rank() < 2) throw DimensionError("add_channel_bias: input rank must be >= 2");
    if (bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
        throw DimensionError("add_channel_bias: bias extent must match channel axis");
    }
    int64_t batch = x.dim(0);
    int64_t c = x.dim(1);
    int64_t inner = x.numel() / (batch * c);
    Tensor out = Tensor::zeros(x.shape());
    const real* px = x.data();
    const real* pb = bias.data();
    real* po = out.data();
    for (int64_t n = 0; n < batch; ++n) {
        for (int64_t ch = 0; ch < c; ++ch) {
            const real* s = px + (n * c + ch) * inner;
            real* t = po + (n * c + ch) * inner;
            real b = pb[ch];
            for (int64_t i = 0; i < inner; ++i) t[i] = s[i] + b;
        }
    }
    detail::check_finite("add_channel_bias", out);
    if (detail::wants_grad({&x, &bias})) {
        auto xi = x.impl().get();
        auto bi = bias.impl().get();
        auto oi = out.impl().get();
        detail::record("add_channel_bias", {&x, &bias}, out, [xi, bi, oi, batch, c, inner] {
            if (xi->requires_grad) {
                detail::ensure_grad(xi);
                for (size_t i = 0; i < xi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
            }
            if (bi->requires_grad) {
                detail::ensure_grad(bi);
                for (int64_t n = 0; n < batch; ++n) {
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const real* g = oi->grad.data() + (n * c + ch) * inner;
                        double acc = 0;
                        for (int64_t i = 0; i < inner; ++i) acc += g[i];
                        bi->grad[ch] += static_cast<real>(acc);
                    }
                }
            }
        });
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 2 || weight.rank() != 2 || bias.rank() != 1) {
        throw DimensionError("linear: expected x [N,F], weight [G,F], bias [G]");
    }
    int64_t n = x.dim(0), f = x.dim(1), g = weight.dim(0);
    if (weight.dim(1) != f) throw DimensionError("linear: inner dimensions disagree");
    if (bias.dim(0) != g) throw DimensionError("linear: bias extent mismatch");
    Tensor out = Tensor::zeros({n, g});
    const real* px = x.data();
    const real* pw = weight.data();
    const real* pb = bias.data();
    real* po = out.data();
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < g; ++j) {
            double acc = pb[j];
            const real* xr = px + i * f;
            const real* wr = pw + j * f;
            for (int64_t t = 0; t < f; ++t) acc += static_cast<double>(xr[t]) * wr[t];
            po[i * g + j] = static_cast<real>(acc);
        }
    }
    detail::check_finite("linear", out);
    if (detail::wants_grad({&x, &weight, &bias})) {
        auto xi = x.impl().get();
        auto wi = weight.impl().get();
        auto bi = bias.impl().get();
        auto oi = out.impl().get();
        detail::record("linear", {&x, &weight, &bias}, out, [xi, wi, bi, oi, n, f, g] {
            if (xi->requires_grad) detail::ensure_grad(xi);
            if (wi->requires_grad) detail::ensure_grad(wi);
            if (bi->requires_grad) detail::ensure_grad(bi);
            for (int64_t i = 0; i < n; ++i) {
                for (int64_t j = 0; j < g; ++j) {
                    real gy = oi->grad[i * g + j];
                    if (gy == real(0)) continue;
                    if (xi->requires_grad) {
                        for (int64_t t = 0; t < f; ++t) {
                            xi->grad[i * f + t] += gy * wi->data[j * f + t];
                        }
                    }
                    if (wi->requires_grad) {
                        for (int64_t t = 0; t < f; ++t) {
                            wi->grad[j * f + t] += gy * xi->data[i * f + t];
                        }
                    }
                    if (bi->requires_grad) bi->grad[j] += gy;
                }
            }
        });
    }
    return out;
}

namespace {

// One clipped sliding-window sum along the leading axis of a [A,inner]
// view; used three times (once per axis) for the separable cubic sum.
void box_pass_axis0(const real* in, real* out, int64_t a, int64_t inner, int half) {
    for (int64_t i = 0; i < a; ++i) {
        int64_t lo = std::max<int64_t>(0, i - half);
        int64_t hi = std::min<int64_t>(a - 1, i + half);
        real* dst = out + i * inner;
        std::fill(dst, dst + inner, real(0));
        for (int64_t j = lo; j <= hi; ++j) {
            const real* src = in + j * inner;
            for (int64_t t = 0; t < inner; ++t) dst[t] += src[t];
        }
    }
}

void box_sum_raw(const real* in, real* out, int64_t x, int64_t y, int64_t z, int window) {
    int half = window / 2;
    std::vector<real> tmp(static_cast<size_t>(x * y * z));
    // x-axis: treat as [X, Y*Z]
    box_pass_axis0(in, out, x, y * z, half);
    // y-axis: per x-slab, [Y, Z]
    for (int64_t i = 0; i < x; ++i) {
        box_pass_axis0(out + i * y * z, tmp.data() + i * y * z, y, z, half);
    }
    // z-axis: per row, [Z, 1]
    for (int64_t i = 0; i < x * y; ++i) {
        box_pass_axis0(tmp.data() + i * z, out + i * z, z, 1, half);
    }
}

} // namespace

Tensor box_sum(const Tensor& v, int window) {
    if (v.rank() != 3) throw DimensionError("box_sum: expected [X,Y,Z]");
    if (window < 1 || window % 2 == 0) throw ValueError("box_sum: window must be odd and positive");
    int64_t x = v.dim(0), y = v.dim(1), z = v.dim(2);
    Tensor out = Tensor::zeros(v.shape());
    box_sum_raw(v.data(), out.data(), x, y, z, window);
    detail::check_finite("box_sum", out);
    if (detail::wants_grad({&v})) {
        auto vi = v.impl().get();
        auto oi = out.impl().get();
        detail::record("box_sum", {&v}, out, [vi, oi, x, y, z, window] {
            detail::ensure_grad(vi);
            // Symmetric window with clipping is self-adjoint.
            std::vector<real> g(vi->grad.size());
            box_sum_raw(oi->grad.data(), g.data(), x, y, z, window);
            for (size_t i = 0; i < g.size(); ++i) vi->grad[i] += g[i];
        });
    }
    return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
    if (x.rank() != 5) throw DimensionError("upsample_nearest2x: expected [N,C,X,Y,Z]");
    int64_t n = x.dim(0), c = x.dim(1), ix = x.dim(2), iy = x.dim(3), iz = x.dim(4);
    int64_t ox = ix * 2, oy = iy * 2, oz = iz * 2;
    Tensor out = Tensor::zeros({n, c, ox, oy, oz});
    const real* pin = x.data();
    real* pout = out.data();
    int64_t channels = n * c;
    for (int64_t ch = 0; ch < channels; ++ch) {
        const real* s = pin + ch * ix * iy * iz;
        real* t = pout + ch * ox * oy * oz;
        for (int64_t a = 0; a < ox; ++a) {
            for (int64_t b = 0; b < oy; ++b) {
                const real* row = s + ((a / 2) * iy + (b / 2)) * iz;
                real* trow = t + (a * oy + b) * oz;
                for (int64_t d = 0; d < oz; ++d) trow[d] = row[d / 2];
            }
        }
    }
    detail::check_finite("upsample_nearest2x", out);
    if (detail::wants_grad({&x})) {
        auto xi = x.impl().get();
        auto oi = out.impl().get();
        detail::record("upsample_nearest2x", {&x}, out, [xi, oi, channels, ix, iy, iz, ox, oy, oz] {
            detail::ensure_grad(xi);
            for (int64_t ch = 0; ch < channels; ++ch) {
                real* gin = xi->grad.data() + ch * ix * iy * iz;
                const real* gout = oi->grad.data() + ch * ox * oy * oz;
                for (int64_t a = 0; a < ox; ++a) {
                    for (int64_t b = 0; b < oy; ++b) {
                        real* grow = gin + ((a / 2) * iy + (b / 2)) * iz;
                        const real* gr = gout + (a * oy + b) * oz;
                        for (int64_t d = 0; d < oz; ++d) grow[d / 2] += gr[d];
                    }
                }
            }
        });
    }
    return out;
}

Tensor global_mean_pool(const Tensor& x) {
    if (x.rank() != 5) throw DimensionError("global_mean_pool: expected [N,C,X,Y,Z]");
    int64_t n = x.dim(0), c = x.dim(1);
    int64_t vox = x.dim(2) * x.dim(3) * x.dim(4);
    Tensor out = Tensor::zeros({n, c});
    const real* px = x.data();
    real* po = out.data();
    for (int64_t i = 0; i < n * c; ++i) {
        double acc = 0;
        const real* s = px + i * vox;
        for (int64_t v = 0; v < vox; ++v) acc += s[v];
        po[i] = static_cast<real>(acc / static_cast<double>(vox));
    }
    detail::check_finite("global_mean_pool", out);
    if (detail::wants_grad({&x})) {
        auto xi = x.impl().get();
        auto oi = out.impl().get();
        detail::record("global_mean_pool", {&x}, out, [xi, oi, n, c, vox] {
            detail::ensure_grad(xi);
            for (int64_t i = 0; i < n * c; ++i) {
                real g = oi->grad[i] / static_cast<real>(vox);
                real* t = xi->grad.data() + i * vox;
                for (int64_t v = 0; v < vox; ++v) t[v] += g;
            }
        });
    }
    return out;
}

Tensor reshape(const Tensor& a, std::vector<int64_t> shape) {
    Tensor out = Tensor::from_data(std::move(shape), a.values());
    if (out.numel() != a.numel()) throw DimensionError("reshape: element count mismatch");
    if (detail::wants_grad({&a})) {
        auto ai = a.impl().get();
        auto oi = out.impl().get();
        detail::record("reshape", {&a}, out, [ai, oi] {
            detail::ensure_grad(ai);
            for (size_t i = 0; i < ai->grad.size(); ++i) ai->grad[i] += oi->grad[i];
        });
    }
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 5 || b.rank() != 5) throw DimensionError("concat_channels: expected [N,C,X,Y,Z]");
    for (int axis : {0, 2, 3, 4}) {
        if (a.dim(axis) != b.dim(axis)) {
            throw DimensionError("concat_channels: non-channel extents differ");
        }
    }
    int64_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    int64_t vox = a.dim(2) * a.dim(3) * a.dim(4);
    Tensor out = Tensor::zeros({n, ca + cb, a.dim(2), a.dim(3), a.dim(4)});
    real* po = out.data();
    for (int64_t i = 0; i < n; ++i) {
        std::memcpy(po + i * (ca + cb) * vox, a.data() + i * ca * vox,
                    sizeof(real) * static_cast<size_t>(ca * vox));
        std::memcpy(po + (i * (ca + cb) + ca) * vox, b.data() + i * cb * vox,
                    sizeof(real) * static_cast<size_t>(cb * vox));
    }
    detail::check_finite("concat_channels", out);
    if (detail::wants_grad({&a, &b})) {
        auto ai = a.impl().get();
        auto bi = b.impl().get();
        auto oi = out.impl().get();
        detail::record("concat_channels", {&a, &b}, out, [ai, bi, oi, n, ca, cb, vox] {
            if (ai->requires_grad) detail::ensure_grad(ai);
            if (bi->requires_grad) detail::ensure_grad(bi);
            for (int64_t i = 0; i < n; ++i) {
                const real* g = oi->grad.data() + i * (ca + cb) * vox;
                if (ai->requires_grad) {
                    real* t = ai->grad.data() + i * ca * vox;
                    for (int64_t j = 0; j < ca * vox; ++j) t[j] += g[j];
                }
                if (bi->requires_grad) {
                    real* t = bi->grad.data() + i * cb * vox;
                    const real* gb = g + ca * vox;
                    for (int64_t j = 0; j < cb * vox; ++j) t[j] += gb[j];
                }
            }
        });
    }
    return out;
}

Tensor stack_volumes(const std::vector<Tensor>& vols) {
    if (vols.empty()) throw DimensionError("stack_volumes: empty input");
    const auto& s0 = vols[0].shape();
    if (s0.size() != 3) throw DimensionError("stack_volumes: inputs must be [X,Y,Z]");
    for (const Tensor& v : vols) {
        if (v.shape() != s0) throw DimensionError("stack_volumes: shape mismatch");
    }
    int64_t c = static_cast<int64_t>(vols.size());
    int64_t vox = vols[0].numel();
    Tensor out = Tensor::zeros({c, s0[0], s0[1], s0[2]});
    for (int64_t i = 0; i < c; ++i) {
        std::memcpy(out.data() + i * vox, vols[static_cast<size_t>(i)].data(),
                    sizeof(real) * static_cast<size_t>(vox));
    }
    detail::check_finite("stack_volumes", out);

    bool any_grad = false;
    if (grad_enabled()) {
        for (const Tensor& v : vols) any_grad = any_grad || v.requires_grad();
    }
    if (any_grad) {
        auto node = std::make_shared<detail::TapeNode>();
        node->op = "stack_volumes";
        std::vector<detail::TensorImpl*> ins;
        for (const Tensor& v : vols) {
            node->inputs.push_back(v.impl());
            ins.push_back(v.impl().get());
        }
        auto oi = out.impl().get();
        node->output = oi;
        node->backward = [ins, oi, vox] {
            for (size_t i = 0; i < ins.size(); ++i) {
                if (!ins[i]->requires_grad) continue;
                detail::ensure_grad(ins[i]);
                const real* g = oi->grad.data() + static_cast<int64_t>(i) * vox;
                for (int64_t j = 0; j < vox; ++j) ins[i]->grad[j] += g[j];
            }
        };
        out.impl()->node = std::move(node);
        out.impl()->requires_grad = true;
    }
    return out;
}

} // namespace jers

/* Copyright 2026 The fvb authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License. */

#ifndef FVB_TENSOR_HPP
#define FVB_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "fvb/core.hpp"

namespace fvb {

// Dense NCHW tensor of 32-bit floats, contiguous row-major. The one value
// carrier of the whole library; every op below is a pure function over it.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_) {
        if (n < 1 || c < 1 || h < 1 || w < 1)
            throw shape_error("tensor: all dimensions must be >= 1, got (" + shape_str() + ")");
        data.assign(numel(), 0.0f);
    }

    static Tensor full(int n, int c, int h, int w, float v) {
        Tensor t(n, c, h, w);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    size_t numel() const {
        return static_cast<size_t>(n) * c * h * w;
    }

    size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix;
    }

    float& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    float at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    // Pointer to the (in, ic) plane of h*w values.
    float* plane(int in, int ic) { return data.data() + index(in, ic, 0, 0); }
    const float* plane(int in, int ic) const { return data.data() + index(in, ic, 0, 0); }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }
};

inline bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

inline float max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw shape_error("max_abs_diff: shapes " + a.shape_str() + " vs " + b.shape_str());
    float m = 0.0f;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

// Convolution parameters. weight is (out_ch, in_ch/groups, kh, kw); kernels
// are square in this library.
struct ConvParams {
    Tensor weight;
    std::vector<float> bias;
    int stride = 1;
    int padding = 0;
    int groups = 1;

    int out_channels() const { return weight.n; }
    int in_channels() const { return weight.c * groups; }
    int kernel() const { return weight.h; }
};

// Inference-time batch-norm statistics and affine, one entry per channel.
struct BnParams {
    std::vector<float> gamma, beta, mean, var;
    float eps = 1e-5f;

    size_t channels() const { return gamma.size(); }
};

inline void validate_bn(const BnParams& p) {
    if (p.gamma.size() != p.beta.size() || p.gamma.size() != p.mean.size() ||
        p.gamma.size() != p.var.size())
        throw shape_error("batch_norm: parameter vectors must all share one length");
    // eps == 0 is allowed so that the identity normalization (var 1, eps 0)
    // is an exact no-op; var > 0 keeps the denominator safe.
    if (p.eps < 0.0f)
        throw shape_error("batch_norm: eps must be >= 0");
    for (float v : p.var)
        if (v <= 0.0f) throw shape_error("batch_norm: running_var entries must be > 0");
}

// ---------------------------------------------------------------------------
// GEMM kernel: C(m x n) = A(m x k) * B(k x n) + bias (per output row).
//
// Every output element accumulates its k products in ascending-k order in
// all kernel variants, and parallel tiles own disjoint outputs, so results
// are bit-identical for any thread count and tiling. Accumulation is fp32
// like everything else here.
// ---------------------------------------------------------------------------
namespace detail {

// 4-row x 32-column register tile; rows/columns that do not fill a tile fall
// back to thinner variants of the same per-element arithmetic.
inline void gemm_block(const float* A, const float* B, const float* bias, float* C,
                       int64_t m, int64_t k, int64_t n, int64_t i0, int64_t im, int64_t j0,
                       int64_t jn) {
    constexpr int64_t JR = 32;
    int64_t i = i0;
    for (; i + 4 <= i0 + im; i += 4) {
        const float* a0 = A + (i + 0) * k;
        const float* a1 = A + (i + 1) * k;
        const float* a2 = A + (i + 2) * k;
        const float* a3 = A + (i + 3) * k;
        const float b0i = bias ? bias[i + 0] : 0.0f;
        const float b1i = bias ? bias[i + 1] : 0.0f;
        const float b2i = bias ? bias[i + 2] : 0.0f;
        const float b3i = bias ? bias[i + 3] : 0.0f;
        int64_t j = j0;
        for (; j + JR <= j0 + jn; j += JR) {
            float acc0[JR], acc1[JR], acc2[JR], acc3[JR];
            for (int64_t jj = 0; jj < JR; ++jj) {
                acc0[jj] = b0i;
                acc1[jj] = b1i;
                acc2[jj] = b2i;
                acc3[jj] = b3i;
            }
            for (int64_t kk = 0; kk < k; ++kk) {
                const float* brow = B + kk * n + j;
                const float x0 = a0[kk], x1 = a1[kk], x2 = a2[kk], x3 = a3[kk];
                for (int64_t jj = 0; jj < JR; ++jj) {
                    const float b = brow[jj];
                    acc0[jj] += x0 * b;
                    acc1[jj] += x1 * b;
                    acc2[jj] += x2 * b;
                    acc3[jj] += x3 * b;
                }
            }
            for (int64_t jj = 0; jj < JR; ++jj) {
                C[(i + 0) * n + j + jj] = acc0[jj];
                C[(i + 1) * n + j + jj] = acc1[jj];
                C[(i + 2) * n + j + jj] = acc2[jj];
                C[(i + 3) * n + j + jj] = acc3[jj];
            }
        }
        for (; j < j0 + jn; ++j)
            for (int r = 0; r < 4; ++r) {
                float acc = bias ? bias[i + r] : 0.0f;
                const float* arow = A + (i + r) * k;
                for (int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * B[kk * n + j];
                C[(i + r) * n + j] = acc;
            }
    }
    for (; i < i0 + im; ++i) {
        const float* arow = A + i * k;
        const float bi = bias ? bias[i] : 0.0f;
        int64_t j = j0;
        for (; j + JR <= j0 + jn; j += JR) {
            float acc[JR];
            for (int64_t jj = 0; jj < JR; ++jj) acc[jj] = bi;
            for (int64_t kk = 0; kk < k; ++kk) {
                const float* brow = B + kk * n + j;
                const float x = arow[kk];
                for (int64_t jj = 0; jj < JR; ++jj) acc[jj] += x * brow[jj];
            }
            for (int64_t jj = 0; jj < JR; ++jj) C[i * n + j + jj] = acc[jj];
        }
        for (; j < j0 + jn; ++j) {
            float acc = bi;
            for (int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * B[kk * n + j];
            C[i * n + j] = acc;
        }
    }
}

} // namespace detail

inline void gemm_bias(const float* A, const float* B, const float* bias, float* C,
                      int64_t m, int64_t k, int64_t n) {
    constexpr int64_t NB = 512;
    if (n >= m && n >= 2 * NB) {
        const int64_t tiles = (n + NB - 1) / NB;
        parallel_for(tiles, [&](int64_t t) {
            const int64_t j0 = t * NB;
            detail::gemm_block(A, B, bias, C, m, k, n, 0, m, j0, std::min(NB, n - j0));
        });
    } else {
        constexpr int64_t MB = 16;
        const int64_t blocks = (m + MB - 1) / MB;
        parallel_for(blocks, [&](int64_t t) {
            const int64_t i0 = t * MB;
            detail::gemm_block(A, B, bias, C, m, k, n, i0, std::min(MB, m - i0), 0, n);
        });
    }
}

// ---------------------------------------------------------------------------
// conv2d and its brute-force oracle twin
// ---------------------------------------------------------------------------
namespace detail {

inline void validate_conv(const Tensor& x, const ConvParams& p, const char* who) {
    const std::string w(who);
    if (p.weight.h != p.weight.w)
        throw shape_error(w + ": kernel must be square, got " + std::to_string(p.weight.h) +
                          "x" + std::to_string(p.weight.w));
    if (p.stride < 1) throw shape_error(w + ": stride must be >= 1");
    if (p.padding < 0) throw shape_error(w + ": padding must be >= 0");
    if (p.groups < 1) throw shape_error(w + ": groups must be >= 1");
    if (x.c % p.groups != 0)
        throw shape_error(w + ": input channels " + std::to_string(x.c) +
                          " not divisible by groups " + std::to_string(p.groups));
    if (p.weight.n % p.groups != 0)
        throw shape_error(w + ": output channels " + std::to_string(p.weight.n) +
                          " not divisible by groups " + std::to_string(p.groups));
    if (x.c != p.weight.c * p.groups)
        throw shape_error(w + ": input channels " + std::to_string(x.c) +
                          " != weight in-channels " + std::to_string(p.weight.c) +
                          " * groups " + std::to_string(p.groups));
    if (p.bias.size() != static_cast<size_t>(p.weight.n))
        throw shape_error(w + ": bias length " + std::to_string(p.bias.size()) +
                          " != output channels " + std::to_string(p.weight.n));
    if (x.h + 2 * p.padding < p.weight.h || x.w + 2 * p.padding < p.weight.w)
        throw shape_error(w + ": padded input " + std::to_string(x.h + 2 * p.padding) + "x" +
                          std::to_string(x.w + 2 * p.padding) + " smaller than kernel " +
                          std::to_string(p.weight.h) + "x" + std::to_string(p.weight.w));
}

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Depthwise path: groups == channels, one filter per channel. Structured as
// one shifted-row update per kernel tap so the inner loop vectorizes; every
// output element still sums its taps in ascending (ky, kx) order.
inline void conv2d_depthwise(const Tensor& x, const ConvParams& p, Tensor& out) {
    const int k = p.kernel(), s = p.stride, pad = p.padding;
    const int oh = out.h, ow = out.w;
    for (int in_ = 0; in_ < x.n; ++in_) {
        parallel_for(x.c, [&](int64_t ch) {
            const float* src = x.plane(in_, static_cast<int>(ch));
            const float* wgt = p.weight.plane(static_cast<int>(ch), 0);
            float* dst = out.plane(in_, static_cast<int>(ch));
            const float b = p.bias[ch];
            const size_t cells = static_cast<size_t>(oh) * ow;
            for (size_t i = 0; i < cells; ++i) dst[i] = b;
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    const float wv = wgt[static_cast<size_t>(ky) * k + kx];
                    // valid output range for this tap: 0 <= o*s - pad + koff < dim
                    const int ynum = x.h - 1 - ky + pad;
                    const int xnum = x.w - 1 - kx + pad;
                    if (ynum < 0 || xnum < 0) continue;
                    const int oy_lo = pad - ky > 0 ? (pad - ky + s - 1) / s : 0;
                    const int oy_hi = std::min(oh - 1, ynum / s);
                    const int ox_lo = pad - kx > 0 ? (pad - kx + s - 1) / s : 0;
                    const int ox_hi = std::min(ow - 1, xnum / s);
                    const int xoff = kx - pad;
                    for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                        const float* srow = src + static_cast<size_t>(oy * s - pad + ky) * x.w;
                        float* drow = dst + static_cast<size_t>(oy) * ow;
                        if (s == 1) {
                            for (int ox = ox_lo; ox <= ox_hi; ++ox)
                                drow[ox] += wv * srow[ox + xoff];
                        } else {
                            for (int ox = ox_lo; ox <= ox_hi; ++ox)
                                drow[ox] += wv * srow[ox * s + xoff];
                        }
                    }
                }
        });
    }
}

// Patch matrix for one (batch, group): rows follow (ci, ky, kx), columns
// follow (oy, ox); out-of-bounds taps are zero.
inline void im2col(const Tensor& x, int in_, int g, int icpg, int k, int s, int pad,
                   int oh, int ow, std::vector<float>& cols) {
    const int64_t ncols = static_cast<int64_t>(oh) * ow;
    cols.assign(static_cast<size_t>(icpg) * k * k * ncols, 0.0f);
    parallel_for(icpg, [&](int64_t ci) {
        const float* src = x.plane(in_, g * icpg + static_cast<int>(ci));
        float* base = cols.data() + static_cast<size_t>(ci) * k * k * ncols;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* row = base + (static_cast<size_t>(ky) * k + kx) * ncols;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * s - pad + ky;
                    if (iy < 0 || iy >= x.h) continue;
                    const float* srow = src + static_cast<size_t>(iy) * x.w;
                    float* drow = row + static_cast<size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * s - pad + kx;
                        if (ix >= 0 && ix < x.w) drow[ox] = srow[ix];
                    }
                }
            }
        }
    });
}

} // namespace detail

// Fast path: im2col + GEMM, with direct kernels for the pointwise and
// depthwise shapes that dominate this architecture. Correctness twin below.
inline Tensor conv2d(const Tensor& x, const ConvParams& p) {
    detail::validate_conv(x, p, "conv2d");
    const int k = p.kernel();
    const int oh = detail::conv_out_dim(x.h, k, p.stride, p.padding);
    const int ow = detail::conv_out_dim(x.w, k, p.stride, p.padding);
    Tensor out(x.n, p.out_channels(), oh, ow);

    if (p.groups == x.c && p.weight.n == x.c && p.weight.c == 1) {
        detail::conv2d_depthwise(x, p, out);
        return out;
    }

    const int64_t ncols = static_cast<int64_t>(oh) * ow;
    const int icpg = x.c / p.groups;
    const int ocpg = p.weight.n / p.groups;
    const int64_t krows = static_cast<int64_t>(icpg) * k * k;

    if (k == 1 && p.stride == 1 && p.padding == 0 && p.groups == 1) {
        // 1x1: the input plane block already is the patch matrix.
        for (int in_ = 0; in_ < x.n; ++in_)
            gemm_bias(p.weight.data.data(), x.plane(in_, 0), p.bias.data(),
                      out.plane(in_, 0), p.weight.n, x.c, ncols);
        return out;
    }

    std::vector<float> cols;
    for (int in_ = 0; in_ < x.n; ++in_) {
        for (int g = 0; g < p.groups; ++g) {
            detail::im2col(x, in_, g, icpg, k, p.stride, p.padding, oh, ow, cols);
            gemm_bias(p.weight.data.data() + static_cast<size_t>(g) * ocpg * krows,
                      cols.data(), p.bias.data() + static_cast<size_t>(g) * ocpg,
                      out.plane(in_, g * ocpg), ocpg, krows, ncols);
        }
    }
    return out;
}

// The literal nested-loop definition, kept free of layout tricks. This is
// the oracle conv2d is tested against; do not "optimize" it.
inline Tensor conv2d_naive(const Tensor& x, const ConvParams& p) {
    detail::validate_conv(x, p, "conv2d_naive");
    const int k = p.kernel();
    const int oh = detail::conv_out_dim(x.h, k, p.stride, p.padding);
    const int ow = detail::conv_out_dim(x.w, k, p.stride, p.padding);
    const int icpg = x.c / p.groups;
    const int ocpg = p.weight.n / p.groups;
    Tensor out(x.n, p.out_channels(), oh, ow);
    for (int in_ = 0; in_ < x.n; ++in_)
        for (int oc = 0; oc < p.weight.n; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const int g = oc / ocpg;
                    float acc = p.bias[oc];
                    for (int ci = 0; ci < icpg; ++ci)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy * p.stride - p.padding + ky;
                                const int ix = ox * p.stride - p.padding + kx;
                                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                acc += p.weight.at(oc, ci, ky, kx) *
                                       x.at(in_, g * icpg + ci, iy, ix);
                            }
                    out.at(in_, oc, oy, ox) = acc;
                }
    return out;
}

inline Tensor batch_norm_inference(const Tensor& x, const BnParams& p) {
    validate_bn(p);
    if (static_cast<size_t>(x.c) != p.channels())
        throw shape_error("batch_norm: input has " + std::to_string(x.c) +
                          " channels, params have " + std::to_string(p.channels()));
    Tensor out(x.n, x.c, x.h, x.w);
    const size_t hw = static_cast<size_t>(x.h) * x.w;
    for (int in_ = 0; in_ < x.n; ++in_)
        for (int ic = 0; ic < x.c; ++ic) {
            const float scale = p.gamma[ic] / std::sqrt(p.var[ic] + p.eps);
            const float shift = p.beta[ic] - p.mean[ic] * scale;
            const float* src = x.plane(in_, ic);
            float* dst = out.plane(in_, ic);
            for (size_t i = 0; i < hw; ++i) dst[i] = src[i] * scale + shift;
        }
    return out;
}

// tanh-approximate GELU. The two constants are part of the contract so that
// golden outputs stay stable.
inline float gelu_scalar(float v) {
    const float c0 = 0.7978845608f;
    const float c1 = 0.044715f;
    return 0.5f * v * (1.0f + std::tanh(c0 * (v + c1 * v * v * v)));
}

inline Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (float& v : out.data) v = gelu_scalar(v);
    return out;
}

inline Tensor softmax_lastdim(const Tensor& x) {
    Tensor out(x.n, x.c, x.h, x.w);
    const int64_t rows = static_cast<int64_t>(x.n) * x.c * x.h;
    for (int64_t r = 0; r < rows; ++r) {
        const float* src = x.data.data() + r * x.w;
        float* dst = out.data.data() + r * x.w;
        float mx = src[0];
        for (int i = 1; i < x.w; ++i) mx = std::max(mx, src[i]);
        double sum = 0.0;
        for (int i = 0; i < x.w; ++i) {
            dst[i] = std::exp(src[i] - mx);
            sum += dst[i];
        }
        const float inv = static_cast<float>(1.0 / sum);
        for (int i = 0; i < x.w; ++i) dst[i] *= inv;
    }
    return out;
}

// Normalizes across channels at each (n, h, w) position.
inline Tensor layer_norm(const Tensor& x, const std::vector<float>& gamma,
                         const std::vector<float>& beta, float eps) {
    if (gamma.size() != static_cast<size_t>(x.c) || beta.size() != static_cast<size_t>(x.c))
        throw shape_error("layer_norm: gamma/beta length " + std::to_string(gamma.size()) +
                          " != channels " + std::to_string(x.c));
    Tensor out(x.n, x.c, x.h, x.w);
    const size_t hw = static_cast<size_t>(x.h) * x.w;
    for (int in_ = 0; in_ < x.n; ++in_)
        for (size_t pos = 0; pos < hw; ++pos) {
            double mean = 0.0;
            for (int ic = 0; ic < x.c; ++ic) mean += x.plane(in_, ic)[pos];
            mean /= x.c;
            double var = 0.0;
            for (int ic = 0; ic < x.c; ++ic) {
                const double d = x.plane(in_, ic)[pos] - mean;
                var += d * d;
            }
            var /= x.c;
            const float inv = static_cast<float>(1.0 / std::sqrt(var + eps));
            for (int ic = 0; ic < x.c; ++ic)
                out.plane(in_, ic)[pos] =
                    (x.plane(in_, ic)[pos] - static_cast<float>(mean)) * inv * gamma[ic] + beta[ic];
        }
    return out;
}

// Batched matmul over the leading (n, c) dims: (h_a x w_a) * (h_b x w_b).
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || a.c != b.c)
        throw shape_error("matmul: batch dims " + a.shape_str() + " vs " + b.shape_str());
    if (a.w != b.h)
        throw shape_error("matmul: inner dims " + std::to_string(a.w) + " vs " +
                          std::to_string(b.h));
    Tensor out(a.n, a.c, a.h, b.w);
    const int64_t batches = static_cast<int64_t>(a.n) * a.c;
    for (int64_t i = 0; i < batches; ++i)
        gemm_bias(a.data.data() + i * a.h * a.w, b.data.data() + i * b.h * b.w, nullptr,
                  out.data.data() + i * a.h * b.w, a.h, a.w, b.w);
    return out;
}

inline Tensor avg_pool(const Tensor& x, int k, int stride) {
    if (k < 1 || stride < 1)
        throw shape_error("avg_pool: kernel and stride must be >= 1");
    if (x.h < k || x.w < k)
        throw shape_error("avg_pool: input " + x.shape_str() + " smaller than kernel " +
                          std::to_string(k));
    const int oh = (x.h - k) / stride + 1;
    const int ow = (x.w - k) / stride + 1;
    Tensor out(x.n, x.c, oh, ow);
    const float inv = 1.0f / static_cast<float>(k * k);
    for (int in_ = 0; in_ < x.n; ++in_)
        for (int ic = 0; ic < x.c; ++ic) {
            const float* src = x.plane(in_, ic);
            float* dst = out.plane(in_, ic);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            acc += src[static_cast<size_t>(oy * stride + ky) * x.w +
                                       (ox * stride + kx)];
                    dst[static_cast<size_t>(oy) * ow + ox] = static_cast<float>(acc) * inv;
                }
        }
    return out;
}

// Half-pixel-center bilinear resize. Same-size calls return the input
// unchanged so degenerate plans stay bit-exact.
inline Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw shape_error("resize_bilinear: output dims must be >= 1");
    if (out_h == x.h && out_w == x.w) return x;
    Tensor out(x.n, x.c, out_h, out_w);
    const float sy = static_cast<float>(x.h) / out_h;
    const float sx = static_cast<float>(x.w) / out_w;
    for (int in_ = 0; in_ < x.n; ++in_)
        for (int ic = 0; ic < x.c; ++ic) {
            const float* src = x.plane(in_, ic);
            float* dst = out.plane(in_, ic);
            for (int oy = 0; oy < out_h; ++oy) {
                float fy = (oy + 0.5f) * sy - 0.5f;
                fy = std::max(0.0f, std::min(fy, static_cast<float>(x.h - 1)));
                const int y0 = static_cast<int>(fy);
                const int y1 = std::min(y0 + 1, x.h - 1);
                const float wy = fy - y0;
                for (int ox = 0; ox < out_w; ++ox) {
                    float fx = (ox + 0.5f) * sx - 0.5f;
                    fx = std::max(0.0f, std::min(fx, static_cast<float>(x.w - 1)));
                    const int x0 = static_cast<int>(fx);
                    const int x1 = std::min(x0 + 1, x.w - 1);
                    const float wx = fx - x0;
                    const float top = src[static_cast<size_t>(y0) * x.w + x0] * (1 - wx) +
                                      src[static_cast<size_t>(y0) * x.w + x1] * wx;
                    const float bot = src[static_cast<size_t>(y1) * x.w + x0] * (1 - wx) +
                                      src[static_cast<size_t>(y1) * x.w + x1] * wx;
                    dst[static_cast<size_t>(oy) * out_w + ox] = top * (1 - wy) + bot * wy;
                }
            }
        }
    return out;
}

// Multi-head self-attention over the h*w token grid. q/k/v/o projections are
// 1x1 convs; scale is 1/sqrt(head_dim). The residual is the caller's job.
inline Tensor mhsa(const Tensor& x, const ConvParams& wq, const ConvParams& wk,
                   const ConvParams& wv, const ConvParams& wo, int heads) {
    if (heads < 1 || x.c % heads != 0)
        throw shape_error("mhsa: channels " + std::to_string(x.c) +
                          " not divisible by heads " + std::to_string(heads));
    const Tensor q = conv2d(x, wq);
    const Tensor k = conv2d(x, wk);
    const Tensor v = conv2d(x, wv);
    const int hd = x.c / heads;
    const int64_t T = static_cast<int64_t>(x.h) * x.w;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

    Tensor mixed(x.n, x.c, x.h, x.w);
    std::vector<float> qt(static_cast<size_t>(T) * hd);
    std::vector<float> at(static_cast<size_t>(T) * hd);
    for (int b = 0; b < x.n; ++b)
        for (int hh = 0; hh < heads; ++hh) {
            // Channel-major planes give K and V as (hd x T) directly; Q needs
            // the (T x hd) transpose.
            const float* kp = k.plane(b, hh * hd);
            const float* vp = v.plane(b, hh * hd);
            for (int d = 0; d < hd; ++d) {
                const float* qp = q.plane(b, hh * hd + d);
                for (int64_t t = 0; t < T; ++t) qt[static_cast<size_t>(t) * hd + d] = qp[t];
            }
            Tensor logits(1, 1, static_cast<int>(T), static_cast<int>(T));
            gemm_bias(qt.data(), kp, nullptr, logits.data.data(), T, hd, T);
            for (float& vL : logits.data) vL *= scale;
            const Tensor attn = softmax_lastdim(logits);
            // (T x T) * (T x hd): transpose V once.
            for (int d = 0; d < hd; ++d)
                for (int64_t t = 0; t < T; ++t)
                    at[static_cast<size_t>(t) * hd + d] = vp[static_cast<size_t>(d) * T + t];
            std::vector<float> outt(static_cast<size_t>(T) * hd);
            gemm_bias(attn.data.data(), at.data(), nullptr, outt.data(), T, T, hd);
            for (int d = 0; d < hd; ++d) {
                float* mp = mixed.plane(b, hh * hd + d);
                for (int64_t t = 0; t < T; ++t) mp[t] = outt[static_cast<size_t>(t) * hd + d];
            }
        }
    return conv2d(mixed, wo);
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw shape_error("add: shapes " + a.shape_str() + " vs " + b.shape_str());
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

} // namespace fvb

#endif // FVB_TENSOR_HPP

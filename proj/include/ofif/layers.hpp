// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Causal neural primitives.
//
// Every layer is expressed as a per-frame step over an explicit history
// object; the whole-sequence ops below simply drive the same step from a
// fresh history. Offline and streaming inference therefore execute the
// identical arithmetic for each output element. Accumulation is done in
// double in a fixed order, results are stored as float.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ofif/common.hpp"
#include "ofif/tensor.hpp"

namespace ofif {

// ---------------------------------------------------------------------------
// Causal (transposed) 2D convolution over (frequency, time)

struct ConvGeometry {
  int kernel_f = 5;
  int kernel_t = 2;
  int stride_f = 2;
  int pad_f = 2;
  int out_pad_f = 0;  // transposed only

  bool operator==(const ConvGeometry&) const = default;
};

struct Conv2dParams {
  int in_ch = 0;
  int out_ch = 0;
  ConvGeometry geo;
  bool transposed = false;
  // conv: [out][in][kf][kt]; transposed: [in][out][kf][kt]
  std::vector<double> weight;
  std::vector<double> bias;
  // Same values, output channel innermost: conv [in][kf][kt][out],
  // transposed [in][kt][kf][out].
  std::vector<float> packed;

  int out_freq(int in_freq) const {
    const auto& g = geo;
    int out = 0;
    if (transposed) {
      out = (in_freq - 1) * g.stride_f - 2 * g.pad_f + g.kernel_f + g.out_pad_f;
    } else {
      const int span = in_freq + 2 * g.pad_f - g.kernel_f;
      out = span < 0 ? 0 : span / g.stride_f + 1;
    }
    if (out < 1) {
      throw Error(ErrorCode::kInvalidConfiguration,
                  "convolution output frequency size is " +
                      std::to_string(out) + " for input size " +
                      std::to_string(in_freq));
    }
    return out;
  }
};

inline std::vector<int> conv_weight_dims(int in_ch, int out_ch,
                                         const ConvGeometry& g,
                                         bool transposed) {
  if (transposed) return {in_ch, out_ch, g.kernel_f, g.kernel_t};
  return {out_ch, in_ch, g.kernel_f, g.kernel_t};
}

inline Conv2dParams make_conv_params(const WeightTensor& w,
                                     const WeightTensor& b, ConvGeometry geo,
                                     bool transposed) {
  require(geo.kernel_f >= 1 && geo.kernel_t >= 1 && geo.stride_f >= 1 &&
              geo.pad_f >= 0 && geo.out_pad_f >= 0,
          ErrorCode::kInvalidConfiguration, "invalid convolution geometry");
  require(transposed || geo.out_pad_f == 0, ErrorCode::kInvalidConfiguration,
          "output padding only applies to transposed convolution");
  require(w.dims.size() == 4, ErrorCode::kInvalidConfiguration,
          "convolution weight '" + w.name + "' must be rank 4");
  require(w.dims[2] == geo.kernel_f && w.dims[3] == geo.kernel_t,
          ErrorCode::kInvalidConfiguration,
          "convolution weight '" + w.name + "' kernel " +
              shape_string(w.dims) + " does not match geometry");
  Conv2dParams p;
  p.geo = geo;
  p.transposed = transposed;
  p.in_ch = transposed ? w.dims[0] : w.dims[1];
  p.out_ch = transposed ? w.dims[1] : w.dims[0];
  require(b.dims.size() == 1 && b.dims[0] == p.out_ch,
          ErrorCode::kInvalidConfiguration,
          "bias '" + b.name + "' must have shape [" +
              std::to_string(p.out_ch) + "]");
  w.validate();
  b.validate();
  p.weight = to_double(w.data);
  p.bias = to_double(b.data);
  const int kf_n = geo.kernel_f;
  const int kt_n = geo.kernel_t;
  p.packed.resize(p.weight.size());
  for (int ci = 0; ci < p.in_ch; ++ci) {
    for (int co = 0; co < p.out_ch; ++co) {
      for (int kf = 0; kf < kf_n; ++kf) {
        for (int kt = 0; kt < kt_n; ++kt) {
          const std::size_t src =
              transposed
                  ? ((static_cast<std::size_t>(ci) * p.out_ch + co) * kf_n + kf) * kt_n + kt
                  : ((static_cast<std::size_t>(co) * p.in_ch + ci) * kf_n + kf) * kt_n + kt;
          const std::size_t dst =
              transposed
                  ? ((static_cast<std::size_t>(ci) * kt_n + kt) * kf_n + kf) * p.out_ch + co
                  : ((static_cast<std::size_t>(ci) * kf_n + kf) * kt_n + kt) * p.out_ch + co;
          p.packed[dst] = w.data[src];
        }
      }
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Multiply-accumulate shared by the convolution and pointwise layers:
//
//   c[m][n] += sum_k a[k][m] * b[k][n]     (k ascending)
//
// a[k] points at `rows` contiguous doubles, b[k] at `cols` contiguous
// floats, c is rows x cols row-major.

namespace detail {

using Vec8d = double __attribute__((vector_size(64)));
using Vec8f = float __attribute__((vector_size(32)));

// kRows x (8 * kVecs) block of c at (m0, n0), kept in registers across the
// whole depth.
template <int kRows, int kVecs>
void gemm_tile(std::size_t depth, const double* const* a, int m0,
               const float* const* b, int n0, double* c, int ldc) {
  Vec8d acc[kRows][kVecs];
  for (int m = 0; m < kRows; ++m) {
    for (int v = 0; v < kVecs; ++v) {
      std::memcpy(&acc[m][v], c + static_cast<std::size_t>(m0 + m) * ldc + n0 + 8 * v,
                  sizeof(Vec8d));
    }
  }
  for (std::size_t k = 0; k < depth; ++k) {
    Vec8d bv[kVecs];
    for (int v = 0; v < kVecs; ++v) {
      Vec8f f;
      std::memcpy(&f, b[k] + n0 + 8 * v, sizeof(Vec8f));
      bv[v] = __builtin_convertvector(f, Vec8d);
    }
    const double* ak = a[k] + m0;
    for (int m = 0; m < kRows; ++m) {
      const Vec8d x = ak[m] - Vec8d{};  // broadcast, keeps -0
      for (int v = 0; v < kVecs; ++v) acc[m][v] += bv[v] * x;
    }
  }
  for (int m = 0; m < kRows; ++m) {
    for (int v = 0; v < kVecs; ++v) {
      std::memcpy(c + static_cast<std::size_t>(m0 + m) * ldc + n0 + 8 * v, &acc[m][v],
                  sizeof(Vec8d));
    }
  }
}

inline void gemm_accumulate(int rows, int cols, std::span<const double* const> a,
                            std::span<const float* const> b, double* c) {
  if (cols < 8) {
    // Narrow output: run along rows instead, on a transposed copy.
    std::vector<double> ct(static_cast<std::size_t>(rows) * cols);
    for (int m = 0; m < rows; ++m) {
      for (int n = 0; n < cols; ++n) {
        ct[static_cast<std::size_t>(n) * rows + m] = c[static_cast<std::size_t>(m) * cols + n];
      }
    }
    for (int n = 0; n < cols; ++n) {
      double* cn = ct.data() + static_cast<std::size_t>(n) * rows;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double w = b[k][n];
        const double* ak = a[k];
        for (int m = 0; m < rows; ++m) cn[m] += ak[m] * w;
      }
    }
    for (int m = 0; m < rows; ++m) {
      for (int n = 0; n < cols; ++n) {
        c[static_cast<std::size_t>(m) * cols + n] = ct[static_cast<std::size_t>(n) * rows + m];
      }
    }
    return;
  }
  const int rb = rows / 8 * 8;
  const int cb = cols / 16 * 16;
  const std::size_t depth = a.size();
  for (int n0 = 0; n0 < cb; n0 += 16) {
    for (int m0 = 0; m0 < rb; m0 += 8) {
      gemm_tile<8, 2>(depth, a.data(), m0, b.data(), n0, c, cols);
    }
  }
  int m = rb;
  if (rows - m >= 4) {
    int n0 = 0;
    for (; n0 + 32 <= cb; n0 += 32) gemm_tile<4, 4>(depth, a.data(), m, b.data(), n0, c, cols);
    for (; n0 < cb; n0 += 16) gemm_tile<4, 2>(depth, a.data(), m, b.data(), n0, c, cols);
    m += 4;
  }
  for (; m < rows; ++m) {
    int n0 = 0;
    for (; n0 + 64 <= cb; n0 += 64) gemm_tile<1, 8>(depth, a.data(), m, b.data(), n0, c, cols);
    for (; n0 < cb; n0 += 16) gemm_tile<1, 2>(depth, a.data(), m, b.data(), n0, c, cols);
  }
  if (cb == cols) return;
  for (std::size_t k = 0; k < depth; ++k) {
    const double* ak = a[k];
    const float* bk = b[k];
    for (int m = 0; m < rows; ++m) {
      const double x = ak[m];
      double* cm = c + static_cast<std::size_t>(m) * cols;
      for (int n = cb; n < cols; ++n) cm[n] += bk[n] * x;
    }
  }
}

// c (rows x cols) filled with bias[n] on every row.
inline void fill_rows(std::vector<double>& c, int rows,
                      std::span<const double> bias) {
  const std::size_t cols = bias.size();
  c.resize(static_cast<std::size_t>(rows) * cols);
  for (int m = 0; m < rows; ++m) {
    std::copy(bias.begin(), bias.end(),
              c.begin() + static_cast<std::ptrdiff_t>(m * cols));
  }
}

// out[n][m] = float(c[m][n])
inline void store_transposed(const std::vector<double>& c, int rows, int cols,
                             std::span<float> out) {
  for (int n = 0; n < cols; ++n) {
    float* o = out.data() + static_cast<std::size_t>(n) * rows;
    for (int m = 0; m < rows; ++m) {
      o[m] = static_cast<float>(c[static_cast<std::size_t>(m) * cols + n]);
    }
  }
}

}  // namespace detail

// Previous input frames needed by a causal (de)convolution: kernel_t - 1 of
// them, oldest first, stored in the layout the step function consumes.
struct ConvHistory {
  std::deque<std::vector<double>> frames;
};

namespace detail {

inline int phase_len(const Conv2dParams& p, int in_freq) {
  const int padded = in_freq + 2 * p.geo.pad_f;
  return (padded + p.geo.stride_f - 1) / p.geo.stride_f;
}

// [ci][phase][j] with xpad[ci][j*stride + phase]
inline std::vector<double> conv_prepare(const Conv2dParams& p, int in_freq,
                                        std::span<const float> in) {
  const int s = p.geo.stride_f;
  const int len = phase_len(p, in_freq);
  std::vector<double> out(static_cast<std::size_t>(p.in_ch) * s * len, 0.0);
  for (int c = 0; c < p.in_ch; ++c) {
    for (int f = 0; f < in_freq; ++f) {
      const int pos = f + p.geo.pad_f;
      out[(static_cast<std::size_t>(c) * s + pos % s) * len + pos / s] =
          in[static_cast<std::size_t>(c) * in_freq + f];
    }
  }
  return out;
}

// Zero margin on each side of a transposed-conv input row.
inline int deconv_margin(const Conv2dParams& p) {
  return p.geo.kernel_f + p.geo.pad_f + 1;
}

// [ci][margin + in_freq + margin]
inline std::vector<double> deconv_prepare(const Conv2dParams& p, int in_freq,
                                          std::span<const float> in) {
  const int mg = deconv_margin(p);
  const std::size_t row = static_cast<std::size_t>(in_freq) + 2 * mg;
  std::vector<double> out(static_cast<std::size_t>(p.in_ch) * row, 0.0);
  for (int c = 0; c < p.in_ch; ++c) {
    std::copy(in.begin() + static_cast<std::ptrdiff_t>(c) * in_freq,
              in.begin() + static_cast<std::ptrdiff_t>(c + 1) * in_freq,
              out.begin() + static_cast<std::ptrdiff_t>(c * row + mg));
  }
  return out;
}

inline void push_history(const Conv2dParams& p, ConvHistory& hist,
                         std::vector<double> frame) {
  if (p.geo.kernel_t > 1) {
    hist.frames.push_back(std::move(frame));
    if (static_cast<int>(hist.frames.size()) > p.geo.kernel_t - 1) {
      hist.frames.pop_front();
    }
  }
}

}  // namespace detail

// One output frame of a causal convolution. Frame t sees input frames
// t-kernel_t+1 .. t; frames before the start of the stream are zero.
// Each output element sums over (ci, kf, kt) in that order.
inline void conv_step(const Conv2dParams& p, int in_freq, ConvHistory& hist,
                      std::span<const float> in, std::span<float> out) {
  const auto& g = p.geo;
  const int out_freq = p.out_freq(in_freq);
  require(in.size() == static_cast<std::size_t>(p.in_ch) * in_freq &&
              out.size() == static_cast<std::size_t>(p.out_ch) * out_freq,
          ErrorCode::kInvalidConfiguration, "conv frame size mismatch");
  const int s = g.stride_f;
  const int len = detail::phase_len(p, in_freq);
  std::vector<double> cur = detail::conv_prepare(p, in_freq, in);

  // slot j <-> input frame t - (kernel_t - 1) + j
  std::vector<const double*> slots(g.kernel_t, nullptr);
  slots[g.kernel_t - 1] = cur.data();
  const int have = static_cast<int>(hist.frames.size());
  for (int i = 0; i < have; ++i) {
    slots[g.kernel_t - 1 - have + i] = hist.frames[i].data();
  }

  const int oc = p.out_ch;
  std::vector<const double*> a;
  std::vector<const float*> b;
  a.reserve(static_cast<std::size_t>(p.in_ch) * g.kernel_f * g.kernel_t);
  b.reserve(a.capacity());
  for (int ci = 0; ci < p.in_ch; ++ci) {
    for (int kf = 0; kf < g.kernel_f; ++kf) {
      for (int kt = 0; kt < g.kernel_t; ++kt) {
        if (slots[kt] == nullptr) continue;
        a.push_back(slots[kt] + (static_cast<std::size_t>(ci) * s + kf % s) * len + kf / s);
        b.push_back(p.packed.data() +
                    ((static_cast<std::size_t>(ci) * g.kernel_f + kf) * g.kernel_t + kt) * oc);
      }
    }
  }
  std::vector<double> acc;
  detail::fill_rows(acc, out_freq, p.bias);
  detail::gemm_accumulate(out_freq, oc, a, b, acc.data());
  detail::store_transposed(acc, out_freq, oc, out);
  detail::push_history(p, hist, std::move(cur));
}

// One output frame of a causal transposed convolution. The transposed
// convolution along time yields T + kernel_t - 1 raw frames; the trailing
// ones reach into the future and are discarded, so raw frame t (built from
// input frames t-kernel_t+1 .. t) is the output.
//
// Output bin fo = fi * stride + kf - pad. Bins are handled one stride phase
// at a time; each output element sums over (ci, kt, kf) in that order.
inline void deconv_step(const Conv2dParams& p, int in_freq, ConvHistory& hist,
                        std::span<const float> in, std::span<float> out) {
  const auto& g = p.geo;
  const int out_freq = p.out_freq(in_freq);
  require(in.size() == static_cast<std::size_t>(p.in_ch) * in_freq &&
              out.size() == static_cast<std::size_t>(p.out_ch) * out_freq,
          ErrorCode::kInvalidConfiguration, "deconv frame size mismatch");
  const int s = g.stride_f;
  const int mg = detail::deconv_margin(p);
  const std::size_t row = static_cast<std::size_t>(in_freq) + 2 * mg;
  std::vector<double> cur = detail::deconv_prepare(p, in_freq, in);

  // lag k <-> input frame t - k
  std::vector<const double*> lags(g.kernel_t, nullptr);
  lags[0] = cur.data();
  const int have = static_cast<int>(hist.frames.size());
  for (int k = 1; k <= have; ++k) lags[k] = hist.frames[have - k].data();

  const int oc = p.out_ch;
  std::vector<const double*> a;
  std::vector<const float*> b;
  std::vector<double> acc;
  for (int ph = 0; ph < s && ph < out_freq; ++ph) {
    const int rows = (out_freq - ph + s - 1) / s;  // fo = j * s + ph
    a.clear();
    b.clear();
    for (int ci = 0; ci < p.in_ch; ++ci) {
      for (int kt = 0; kt < g.kernel_t; ++kt) {
        if (lags[kt] == nullptr) continue;
        for (int kf = 0; kf < g.kernel_f; ++kf) {
          const int num = ph - (kf - g.pad_f);  // fi = j + num / s
          if (((num % s) + s) % s != 0) continue;
          a.push_back(lags[kt] + static_cast<std::size_t>(ci) * row + mg + num / s);
          b.push_back(p.packed.data() +
                      ((static_cast<std::size_t>(ci) * g.kernel_t + kt) * g.kernel_f + kf) * oc);
        }
      }
    }
    detail::fill_rows(acc, rows, p.bias);
    detail::gemm_accumulate(rows, oc, a, b, acc.data());
    for (int co = 0; co < oc; ++co) {
      float* o = out.data() + static_cast<std::size_t>(co) * out_freq;
      for (int j = 0; j < rows; ++j) {
        o[j * s + ph] = static_cast<float>(acc[static_cast<std::size_t>(j) * oc + co]);
      }
    }
  }
  detail::push_history(p, hist, std::move(cur));
}


inline FeatureMap conv2d_causal(const FeatureMap& input, const Conv2dParams& p) {
  require(!p.transposed, ErrorCode::kInvalidConfiguration,
          "conv2d_causal given transposed parameters");
  require(input.channels() == p.in_ch, ErrorCode::kInvalidConfiguration,
          "conv input has " + std::to_string(input.channels()) +
              " channels, weights expect " + std::to_string(p.in_ch));
  FeatureMap out(p.out_ch, p.out_freq(input.freq()), input.frames());
  ConvHistory hist;
  for (int t = 0; t < input.frames(); ++t) {
    conv_step(p, input.freq(), hist, input.frame(t), out.frame(t));
  }
  return out;
}

inline FeatureMap conv2d_causal(const FeatureMap& input, const WeightTensor& w,
                                const WeightTensor& b, ConvGeometry geo) {
  return conv2d_causal(input, make_conv_params(w, b, geo, false));
}

inline FeatureMap deconv2d_causal(const FeatureMap& input,
                                  const Conv2dParams& p) {
  require(p.transposed, ErrorCode::kInvalidConfiguration,
          "deconv2d_causal given non-transposed parameters");
  require(input.channels() == p.in_ch, ErrorCode::kInvalidConfiguration,
          "deconv input has " + std::to_string(input.channels()) +
              " channels, weights expect " + std::to_string(p.in_ch));
  FeatureMap out(p.out_ch, p.out_freq(input.freq()), input.frames());
  ConvHistory hist;
  for (int t = 0; t < input.frames(); ++t) {
    deconv_step(p, input.freq(), hist, input.frame(t), out.frame(t));
  }
  return out;
}

inline FeatureMap deconv2d_causal(const FeatureMap& input,
                                  const WeightTensor& w, const WeightTensor& b,
                                  ConvGeometry geo) {
  return deconv2d_causal(input, make_conv_params(w, b, geo, true));
}

// ---------------------------------------------------------------------------
// Pointwise layers

struct BatchNormParams {
  std::vector<double> gamma, beta, mean, var;
  std::vector<double> denom;  // sqrt(var + eps)
  double eps = 1e-5;

  int channels() const { return static_cast<int>(gamma.size()); }
};

inline BatchNormParams make_batchnorm_params(std::span<const float> gamma,
                                             std::span<const float> beta,
                                             std::span<const float> mean,
                                             std::span<const float> var,
                                             double eps) {
  require(beta.size() == gamma.size() && mean.size() == gamma.size() &&
              var.size() == gamma.size(),
          ErrorCode::kInvalidConfiguration,
          "batch-norm parameter lengths differ");
  BatchNormParams p;
  p.gamma = to_double(gamma);
  p.beta = to_double(beta);
  p.mean = to_double(mean);
  p.var = to_double(var);
  p.eps = eps;
  for (double v : p.var) {
    require(v >= 0.0 && std::isfinite(v), ErrorCode::kInvalidWeights,
            "batch-norm running variance must be >= 0");
    p.denom.push_back(std::sqrt(v + eps));
  }
  return p;
}

inline void batchnorm_frame(const BatchNormParams& p, int freq,
                            std::span<float> x) {
  for (int c = 0; c < p.channels(); ++c) {
    float* v = x.data() + static_cast<std::size_t>(c) * freq;
    for (int f = 0; f < freq; ++f) {
      v[f] = static_cast<float>(p.gamma[c] * (v[f] - p.mean[c]) / p.denom[c] +
                                p.beta[c]);
    }
  }
}

inline FeatureMap batchnorm_eval(FeatureMap x, const BatchNormParams& p) {
  require(x.channels() == p.channels(), ErrorCode::kInvalidConfiguration,
          "batch-norm channel count mismatch");
  for (int t = 0; t < x.frames(); ++t) batchnorm_frame(p, x.freq(), x.frame(t));
  return x;
}

inline FeatureMap batchnorm_eval(FeatureMap x, std::span<const float> gamma,
                                 std::span<const float> beta,
                                 std::span<const float> mean,
                                 std::span<const float> var, double eps) {
  return batchnorm_eval(std::move(x),
                        make_batchnorm_params(gamma, beta, mean, var, eps));
}

inline void prelu_frame(std::span<const double> slopes, int freq,
                        std::span<float> x) {
  for (std::size_t c = 0; c < slopes.size(); ++c) {
    float* v = x.data() + c * freq;
    for (int f = 0; f < freq; ++f) {
      if (v[f] < 0.0f) v[f] = static_cast<float>(slopes[c] * v[f]);
    }
  }
}

inline FeatureMap prelu(FeatureMap x, std::span<const float> slopes) {
  require(static_cast<int>(slopes.size()) == x.channels(),
          ErrorCode::kInvalidConfiguration, "PReLU needs one slope per channel");
  const std::vector<double> a = to_double(slopes);
  for (int t = 0; t < x.frames(); ++t) prelu_frame(a, x.freq(), x.frame(t));
  return x;
}

inline void tanh_frame(std::span<float> x) {
  for (float& v : x) v = static_cast<float>(std::tanh(static_cast<double>(v)));
}

inline FeatureMap tanh_act(FeatureMap x) {
  tanh_frame(x.data());
  return x;
}

// Dense layer y = W x + b with W stored input-major.
struct LinearParams {
  int in = 0;
  int out = 0;
  std::vector<float> weight_t;  // [in][out]
  std::vector<double> bias;
};

// From an [out][in] (or [out][in][1][1]) tensor.
inline LinearParams make_linear_params(const WeightTensor& w,
                                       const WeightTensor& b) {
  w.validate();
  b.validate();
  require(w.dims.size() >= 2, ErrorCode::kInvalidConfiguration,
          "linear weight '" + w.name + "' must be at least rank 2");
  for (std::size_t i = 2; i < w.dims.size(); ++i) {
    require(w.dims[i] == 1, ErrorCode::kInvalidConfiguration,
            "pointwise weight '" + w.name + "' must have unit kernel dims");
  }
  LinearParams p;
  p.out = w.dims[0];
  p.in = w.dims[1];
  require(b.dims.size() == 1 && b.dims[0] == p.out,
          ErrorCode::kInvalidConfiguration,
          "bias '" + b.name + "' must have shape [" + std::to_string(p.out) +
              "]");
  p.weight_t.resize(static_cast<std::size_t>(p.in) * p.out);
  for (int o = 0; o < p.out; ++o) {
    for (int i = 0; i < p.in; ++i) {
      p.weight_t[static_cast<std::size_t>(i) * p.out + o] =
          w.data[static_cast<std::size_t>(o) * p.in + i];
    }
  }
  p.bias = to_double(b.data);
  return p;
}

// 1x1 convolution over a (in x freq) frame: out[o][f] = b[o] + sum_i W[o][i] x[i][f].
inline void pointwise_frame(const LinearParams& p, int freq,
                            std::span<const float> in, std::span<float> out) {
  require(in.size() == static_cast<std::size_t>(p.in) * freq &&
              out.size() == static_cast<std::size_t>(p.out) * freq,
          ErrorCode::kInvalidConfiguration, "pointwise frame size mismatch");
  std::vector<double> x(in.begin(), in.end());
  std::vector<const double*> a(p.in);
  std::vector<const float*> b(p.in);
  for (int i = 0; i < p.in; ++i) {
    a[i] = x.data() + static_cast<std::size_t>(i) * freq;
    b[i] = p.weight_t.data() + static_cast<std::size_t>(i) * p.out;
  }
  std::vector<double> acc;
  detail::fill_rows(acc, freq, p.bias);
  detail::gemm_accumulate(freq, p.out, a, b, acc.data());
  detail::store_transposed(acc, freq, p.out, out);
}

// y = W x + b for a single vector, accumulated into `acc`.
inline void linear_apply(const LinearParams& p, std::span<const double> x,
                         std::span<double> acc) {
  std::copy(p.bias.begin(), p.bias.end(), acc.begin());
  for (int i = 0; i < p.in; ++i) {
    const double v = x[i];
    const float* row = p.weight_t.data() + static_cast<std::size_t>(i) * p.out;
    for (int o = 0; o < p.out; ++o) acc[o] += row[o] * v;
  }
}

// ---------------------------------------------------------------------------
// GRU
//
//   r  = sigmoid(W_r x + U_r h + b_r)
//   z  = sigmoid(W_z x + U_z h + b_z)
//   n  = tanh(W_n x + r * (U_n h + b_n))
//   h' = (1 - z) * n + z * h
//
// Tensors: w_ih [3h][in], w_hh [3h][h], bias [3h], gate order (r, z, n).

struct GruParams {
  int input = 0;
  int hidden = 0;
  std::vector<float> wx_t;  // [in][3h]
  std::vector<float> wh_t;  // [h][3h]
  std::vector<double> bias;  // [3h]
};

inline GruParams make_gru_params(const WeightTensor& w_ih,
                                 const WeightTensor& w_hh,
                                 const WeightTensor& bias) {
  w_ih.validate();
  w_hh.validate();
  bias.validate();
  require(w_ih.dims.size() == 2 && w_hh.dims.size() == 2 &&
              bias.dims.size() == 1,
          ErrorCode::kInvalidConfiguration, "GRU tensor ranks must be 2, 2, 1");
  GruParams p;
  require(w_ih.dims[0] % 3 == 0, ErrorCode::kInvalidConfiguration,
          "GRU '" + w_ih.name + "' rows must be 3*hidden");
  p.hidden = w_ih.dims[0] / 3;
  p.input = w_ih.dims[1];
  const int g = 3 * p.hidden;
  require(w_hh.dims[0] == g && w_hh.dims[1] == p.hidden && bias.dims[0] == g,
          ErrorCode::kInvalidConfiguration,
          "GRU tensors '" + w_hh.name + "'/'" + bias.name +
              "' inconsistent with hidden size " + std::to_string(p.hidden));
  p.wx_t.resize(static_cast<std::size_t>(p.input) * g);
  p.wh_t.resize(static_cast<std::size_t>(p.hidden) * g);
  for (int r = 0; r < g; ++r) {
    for (int j = 0; j < p.input; ++j) {
      p.wx_t[static_cast<std::size_t>(j) * g + r] =
          w_ih.data[static_cast<std::size_t>(r) * p.input + j];
    }
    for (int j = 0; j < p.hidden; ++j) {
      p.wh_t[static_cast<std::size_t>(j) * g + r] =
          w_hh.data[static_cast<std::size_t>(r) * p.hidden + j];
    }
  }
  p.bias = to_double(bias.data);
  return p;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// x may be strided (stride elements between consecutive features).
namespace detail {

// Gate nonlinearities for one step, given the input and hidden projections.
inline void gru_gates(const GruParams& p, const double* ax, const double* ah,
                      const float* h, float* h_out) {
  const int hd = p.hidden;
  for (int i = 0; i < hd; ++i) {
    const double r = sigmoid(ax[i] + ah[i] + p.bias[i]);
    const double z = sigmoid(ax[hd + i] + ah[hd + i] + p.bias[hd + i]);
    const double n =
        std::tanh(ax[2 * hd + i] + r * (ah[2 * hd + i] + p.bias[2 * hd + i]));
    h_out[i] = static_cast<float>((1.0 - z) * n + z * h[i]);
  }
}

// out[m][r] = sum_k w_t[k][r] x[k][m] for `rows` independent inputs; x is
// feature-major ([depth][rows]).
inline void gru_project(const std::vector<float>& w_t, int depth, int rows,
                        const double* x, std::vector<double>& out) {
  const int g = static_cast<int>(w_t.size() / static_cast<std::size_t>(depth));
  out.assign(static_cast<std::size_t>(rows) * g, 0.0);
  std::vector<const double*> a(depth);
  std::vector<const float*> b(depth);
  for (int k = 0; k < depth; ++k) {
    a[k] = x + static_cast<std::size_t>(k) * rows;
    b[k] = w_t.data() + static_cast<std::size_t>(k) * g;
  }
  gemm_accumulate(rows, g, a, b, out.data());
}

}  // namespace detail

inline void gru_step(const GruParams& p, const float* x, std::size_t stride,
                     std::span<const float> h, std::span<float> h_out) {
  std::vector<double> xd(p.input), hdv(p.hidden), ax, ah;
  for (int j = 0; j < p.input; ++j) xd[j] = x[j * stride];
  for (int j = 0; j < p.hidden; ++j) hdv[j] = h[j];
  detail::gru_project(p.wx_t, p.input, 1, xd.data(), ax);
  detail::gru_project(p.wh_t, p.hidden, 1, hdv.data(), ah);
  detail::gru_gates(p, ax.data(), ah.data(), h.data(), h_out.data());
}

// One step for `rows` independent sequences. x is [input][rows], h and h_out
// are [rows][hidden].
inline void gru_step_rows(const GruParams& p, int rows, std::span<const float> x,
                          std::span<const float> h, std::span<float> h_out) {
  const int hd = p.hidden;
  std::vector<double> xd(x.begin(), x.end());
  std::vector<double> ht(static_cast<std::size_t>(hd) * rows);
  for (int m = 0; m < rows; ++m) {
    for (int j = 0; j < hd; ++j) {
      ht[static_cast<std::size_t>(j) * rows + m] = h[static_cast<std::size_t>(m) * hd + j];
    }
  }
  std::vector<double> ax, ah;
  detail::gru_project(p.wx_t, p.input, rows, xd.data(), ax);
  detail::gru_project(p.wh_t, hd, rows, ht.data(), ah);
  const std::size_t g = static_cast<std::size_t>(3 * hd);
  for (int m = 0; m < rows; ++m) {
    const std::size_t off = static_cast<std::size_t>(m) * hd;
    detail::gru_gates(p, ax.data() + m * g, ah.data() + m * g, h.data() + off,
                      h_out.data() + off);
  }
}

inline void gru_step(const GruParams& p, std::span<const float> x,
                     std::span<const float> h, std::span<float> h_out) {
  require(static_cast<int>(x.size()) == p.input &&
              static_cast<int>(h.size()) == p.hidden &&
              static_cast<int>(h_out.size()) == p.hidden,
          ErrorCode::kInvalidConfiguration, "GRU step size mismatch");
  gru_step(p, x.data(), 1, h, h_out);
}

struct GruSequenceResult {
  Matrix<float> outputs;  // T x hidden
  std::vector<float> final_state;
};

// seq is time-major (T x input).
inline GruSequenceResult gru_sequence(const Matrix<float>& seq,
                                      const GruParams& p,
                                      std::span<const float> h0) {
  require(seq.cols() == p.input, ErrorCode::kInvalidConfiguration,
          "GRU input width mismatch");
  require(static_cast<int>(h0.size()) == p.hidden,
          ErrorCode::kInvalidConfiguration, "GRU initial state size mismatch");
  GruSequenceResult res{Matrix<float>(seq.rows(), p.hidden),
                        std::vector<float>(h0.begin(), h0.end())};
  for (int t = 0; t < seq.rows(); ++t) {
    gru_step(p, seq.row(t), res.final_state, res.outputs.row(t));
    std::copy(res.outputs.row(t).begin(), res.outputs.row(t).end(),
              res.final_state.begin());
  }
  return res;
}

// Forward and backward GRU across the frequency axis of one frame; output
// channels are [forward hidden, backward hidden]. Each direction starts from
// a zero state.
inline void bigru_frame(const GruParams& fwd, const GruParams& bwd, int freq,
                        std::span<const float> in, std::span<float> out) {
  require(fwd.input == bwd.input && fwd.hidden == bwd.hidden,
          ErrorCode::kInvalidConfiguration, "BiGRU directions differ in shape");
  const int hd = fwd.hidden;
  require(in.size() == static_cast<std::size_t>(fwd.input) * freq &&
              out.size() == static_cast<std::size_t>(2 * hd) * freq,
          ErrorCode::kInvalidConfiguration, "BiGRU frame size mismatch");
  const std::vector<double> xd(in.begin(), in.end());
  const std::size_t g = static_cast<std::size_t>(3 * hd);
  auto run = [&](const GruParams& p, bool reverse, int channel0) {
    std::vector<double> ax, ah, hdv(hd);
    detail::gru_project(p.wx_t, p.input, freq, xd.data(), ax);
    std::vector<float> h(hd, 0.0f), next(hd);
    for (int s = 0; s < freq; ++s) {
      const int f = reverse ? freq - 1 - s : s;
      for (int j = 0; j < hd; ++j) hdv[j] = h[j];
      detail::gru_project(p.wh_t, hd, 1, hdv.data(), ah);
      detail::gru_gates(p, ax.data() + f * g, ah.data(), h.data(), next.data());
      h.swap(next);
      for (int i = 0; i < hd; ++i) {
        out[static_cast<std::size_t>(channel0 + i) * freq + f] = h[i];
      }
    }
  };
  run(fwd, false, 0);
  run(bwd, true, hd);
}

inline FeatureMap bigru_over_frequency(const FeatureMap& input,
                                       const GruParams& fwd,
                                       const GruParams& bwd) {
  require(input.channels() == fwd.input, ErrorCode::kInvalidConfiguration,
          "BiGRU feature size must equal channel count");
  FeatureMap out(2 * fwd.hidden, input.freq(), input.frames());
  for (int t = 0; t < input.frames(); ++t) {
    bigru_frame(fwd, bwd, input.freq(), input.frame(t), out.frame(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Softmax

namespace detail {

// exp(x) for x <= 0, in place. Range reduction x = k ln2 + r, |r| <= ln2/2,
// then a degree-12 Taylor polynomial (relative error < 2e-16) and an exact
// power-of-two scale. Written branch-free so the loop vectorizes; results
// do not depend on the platform libm.
inline void exp_nonpositive(std::span<double> v) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kRound = 0x1.8p52;
  double* x = v.data();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i] < -708.0 ? -708.0 : x[i];
    const double kr = a * kLog2e + kRound;
    const double k = kr - kRound;
    const double r = (a - k * kLn2Hi) - k * kLn2Lo;
    double p = 1.0 / 479001600;
    p = p * r + 1.0 / 39916800;
    p = p * r + 1.0 / 3628800;
    p = p * r + 1.0 / 362880;
    p = p * r + 1.0 / 40320;
    p = p * r + 1.0 / 5040;
    p = p * r + 1.0 / 720;
    p = p * r + 1.0 / 120;
    p = p * r + 1.0 / 24;
    p = p * r + 1.0 / 6;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    const std::uint64_t e = (std::bit_cast<std::uint64_t>(kr) + 1023u) << 52;
    x[i] = p * std::bit_cast<double>(e);
  }
}

// Softmax over the entries with keep(j); others get exactly 0.
// Largest of v; lane-split, which is exact for max.
inline double max_of(std::span<const double> v) {
  constexpr int kLanes = 8;
  double lane[kLanes];
  for (double& l : lane) l = -std::numeric_limits<double>::infinity();
  const std::size_t n = v.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int l = 0; l < kLanes; ++l) lane[l] = std::max(lane[l], v[i + l]);
  }
  for (; i < n; ++i) lane[0] = std::max(lane[0], v[i]);
  double m = lane[0];
  for (int l = 1; l < kLanes; ++l) m = std::max(m, lane[l]);
  return m;
}

// Softmax of scores / scale over the entries with keep(j); others get
// exactly 0.
template <typename Keep>
void softmax_row(std::span<const double> scores, Keep keep,
                 std::span<float> out, double scale = 1.0) {
  thread_local std::vector<double> e;
  e.resize(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    e[j] = keep(j) ? scores[j] / scale
                   : -std::numeric_limits<double>::infinity();
  }
  const double mx = max_of(e);
  if (!std::isfinite(mx)) {
    std::fill(out.begin(), out.end(), 0.0f);
    return;
  }
  for (double& v : e) v -= mx;
  exp_nonpositive(e);
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!keep(j)) e[j] = 0.0;
    sum += e[j];
  }
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out[j] = static_cast<float>(e[j] / sum);
  }
}

}  // namespace detail

// Softmax over the first `valid` scores; the rest are treated as -inf.
inline void softmax_prefix(std::span<const double> scores, std::size_t valid,
                           std::span<float> out) {
  detail::softmax_row(scores, [valid](std::size_t j) { return j < valid; },
                      out);
}

namespace detail {

// Unmasked softmax of `rows` rows of length n, each divided by `scale`.
// Eight rows go through together so the per-row left-to-right sums overlap.
// With `transposed`, out is written column-major (out[j][row]).
inline void softmax_rows(const double* scores, int n, int rows, double scale,
                         float* out, bool transposed = false) {
  constexpr int kBlock = 8;
  thread_local std::vector<double> e;
  const auto len = static_cast<std::size_t>(n);
  e.resize(kBlock * len);
  const double inv_scale = 1.0 / scale;
  for (int r0 = 0; r0 < rows; r0 += kBlock) {
    const int nb = std::min(kBlock, rows - r0);
    const double* src = scores + static_cast<std::size_t>(r0) * len;
    const std::size_t cnt = static_cast<std::size_t>(nb) * len;
    for (std::size_t j = 0; j < cnt; ++j) e[j] = src[j] * inv_scale;
    for (int r = 0; r < nb; ++r) {
      const std::span<double> row(e.data() + r * len, len);
      const double mx = max_of(row);
      for (double& v : row) v -= mx;
    }
    exp_nonpositive(std::span(e.data(), cnt));
    double sum[kBlock] = {};
    for (std::size_t j = 0; j < len; ++j) {
      for (int r = 0; r < nb; ++r) sum[r] += e[r * len + j];
    }
    double inv[kBlock];
    for (int r = 0; r < nb; ++r) inv[r] = 1.0 / sum[r];
    if (transposed) {
      for (std::size_t j = 0; j < len; ++j) {
        float* o = out + j * static_cast<std::size_t>(rows) + r0;
        for (int r = 0; r < nb; ++r) o[r] = static_cast<float>(e[r * len + j] * inv[r]);
      }
    } else {
      for (int r = 0; r < nb; ++r) {
        const double* er = e.data() + r * len;
        float* o = out + static_cast<std::size_t>(r0 + r) * len;
        for (std::size_t j = 0; j < len; ++j) o[j] = static_cast<float>(er[j] * inv[r]);
      }
    }
  }
}

}  // namespace detail

inline void softmax_full(std::span<const double> scores, std::span<float> out,
                         double scale = 1.0) {
  detail::softmax_rows(scores.data(), static_cast<int>(scores.size()), 1, scale,
                       out.data());
}

inline Matrix<std::uint8_t> causal_mask(int n) {
  Matrix<std::uint8_t> m(n, n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) m(i, j) = 1;
  }
  return m;
}

// Entries where mask == 0 get an additive -inf before normalization.
inline Matrix<float> masked_softmax(const Matrix<float>& scores,
                                    const Matrix<std::uint8_t>& mask) {
  require(scores.rows() == scores.cols(), ErrorCode::kInvalidConfiguration,
          "masked_softmax needs a square score matrix");
  require(mask.rows() == scores.rows() && mask.cols() == scores.cols(),
          ErrorCode::kInvalidConfiguration, "mask shape mismatch");
  Matrix<float> out(scores.rows(), scores.cols());
  std::vector<double> row(scores.cols());
  for (int i = 0; i < scores.rows(); ++i) {
    std::copy(scores.row(i).begin(), scores.row(i).end(), row.begin());
    auto m = mask.row(i);
    detail::softmax_row(row, [&m](std::size_t j) { return m[j] != 0; },
                        out.row(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pooling

enum class PoolMode { kAvg, kMax };
enum class PoolAxis { kFrequency, kChannel };

// Causal local pooling: for each row (frequency bin or channel) pool over
// the other feature axis and the last `window` frames, with zero frames
// before the start of the stream. Per-frame partial results are kept so
// the window is reduced in chronological order.
struct CausalPoolState {
  std::deque<std::vector<double>> sums;   // per frame, one per row
  std::deque<std::vector<double>> maxes;
};

struct PooledFrame {
  std::vector<float> avg;
  std::vector<float> max;
};

inline PooledFrame causal_pool_step(CausalPoolState& st, PoolAxis axis,
                                    int window, int channels, int freq,
                                    std::span<const float> frame) {
  require(window >= 1, ErrorCode::kInvalidConfiguration,
          "pool window must be >= 1");
  const int rows = axis == PoolAxis::kFrequency ? freq : channels;
  const int reduce = axis == PoolAxis::kFrequency ? channels : freq;
  std::vector<double> sum(rows, 0.0);
  std::vector<double> mx(rows, -std::numeric_limits<double>::infinity());
  if (axis == PoolAxis::kFrequency) {
    for (int c = 0; c < channels; ++c) {
      const float* v = frame.data() + static_cast<std::size_t>(c) * freq;
      for (int f = 0; f < freq; ++f) {
        sum[f] += v[f];
        mx[f] = std::max(mx[f], static_cast<double>(v[f]));
      }
    }
  } else {
    for (int c = 0; c < channels; ++c) {
      const float* v = frame.data() + static_cast<std::size_t>(c) * freq;
      double s = 0.0;
      double m = -std::numeric_limits<double>::infinity();
      for (int f = 0; f < freq; ++f) {
        s += v[f];
        m = std::max(m, static_cast<double>(v[f]));
      }
      sum[c] = s;
      mx[c] = m;
    }
  }
  st.sums.push_back(std::move(sum));
  st.maxes.push_back(std::move(mx));
  if (static_cast<int>(st.sums.size()) > window) {
    st.sums.pop_front();
    st.maxes.pop_front();
  }

  const bool padded = static_cast<int>(st.sums.size()) < window;
  const double count = static_cast<double>(window) * reduce;
  PooledFrame out{std::vector<float>(rows), std::vector<float>(rows)};
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    double m = padded ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < st.sums.size(); ++k) {
      s += st.sums[k][r];
      m = std::max(m, st.maxes[k][r]);
    }
    out.avg[r] = static_cast<float>(s / count);
    out.max[r] = static_cast<float>(m);
  }
  return out;
}

// Pools over channels and the last K_T frames; result is (F x T).
inline Matrix<float> causal_pool_time(const FeatureMap& input, int window,
                                      PoolMode mode,
                                      PoolAxis axis = PoolAxis::kFrequency) {
  const int rows =
      axis == PoolAxis::kFrequency ? input.freq() : input.channels();
  Matrix<float> out(rows, input.frames());
  CausalPoolState st;
  for (int t = 0; t < input.frames(); ++t) {
    PooledFrame p = causal_pool_step(st, axis, window, input.channels(),
                                     input.freq(), input.frame(t));
    const auto& v = mode == PoolMode::kAvg ? p.avg : p.max;
    for (int r = 0; r < rows; ++r) out(r, t) = v[r];
  }
  return out;
}

// Global average and maximum of one frame over all (c, f).
inline std::pair<float, float> global_pool_frame(std::span<const float> frame) {
  double s = 0.0;
  double m = -std::numeric_limits<double>::infinity();
  for (float v : frame) {
    s += v;
    m = std::max(m, static_cast<double>(v));
  }
  return {static_cast<float>(s / static_cast<double>(frame.size())),
          static_cast<float>(m)};
}

inline Matrix<float> global_pool_cf(const FeatureMap& input, PoolMode mode) {
  Matrix<float> out(input.frames(), 1);
  for (int t = 0; t < input.frames(); ++t) {
    auto [avg, mx] = global_pool_frame(input.frame(t));
    out(t, 0) = mode == PoolMode::kAvg ? avg : mx;
  }
  return out;
}

}  // namespace ofif

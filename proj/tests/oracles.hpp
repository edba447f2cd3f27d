// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Straightforward reference implementations and fixtures for the tests.
// Nothing here shares code with the engine kernels.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ofif/engine.hpp"

namespace oracle {

using ofif::FeatureMap;
using ofif::WeightTensor;

inline std::vector<float> uniform(std::mt19937_64& rng, std::size_t n,
                                  float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) x = d(rng);
  return v;
}

inline FeatureMap random_map(std::mt19937_64& rng, int c, int f, int t) {
  return FeatureMap(c, f, t, uniform(rng, static_cast<std::size_t>(c) * f * t));
}

inline WeightTensor tensor(std::string name, std::vector<int> dims,
                           std::vector<float> data) {
  return WeightTensor{std::move(name), std::move(dims), std::move(data)};
}

inline WeightTensor random_tensor(std::mt19937_64& rng, std::string name,
                                  std::vector<int> dims, float scale = 0.3f) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return tensor(std::move(name), std::move(dims), uniform(rng, n, -scale, scale));
}

// Seeded random weights for a whole TFCA block.
inline ofif::TfcaParams random_tfca(std::mt19937_64& rng, int channels,
                                    int pool_window = 15) {
  ofif::WeightStore store;
  for (const auto& s : ofif::tfca_tensor_specs("x.", channels, "tfca")) {
    store.add(random_tensor(rng, s.name, s.dims, 0.5f));
  }
  return ofif::make_tfca_params(store, "x.", channels, pool_window);
}

inline ofif::TfsmParams random_tfsm(std::mt19937_64& rng, int channels,
                                    int hidden, float scale = 0.3f) {
  ofif::WeightStore store;
  for (const auto& s : ofif::tfsm_tensor_specs("x.", channels, hidden)) {
    store.add(random_tensor(rng, s.name, s.dims, scale));
  }
  return ofif::make_tfsm_params(store, "x.", channels, hidden);
}

// Small configuration that keeps model-level tests fast.
inline ofif::ModelConfig small_config() {
  ofif::ModelConfig c;
  c.encoder_channels = {4, 8};
  c.decoder_channels = {4, 1};
  c.tfsm_hidden = {8};
  c.pool_window = 5;
  return c;
}

// ---------------------------------------------------------------------------

inline double dct_coeff(int k, int i, int n) {
  const double a = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
  return a * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
}

inline std::vector<double> dct(std::span<const float> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(n, 0.0);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) out[k] += dct_coeff(k, i, n) * x[i];
  }
  return out;
}

inline double hamming(int n, int len) {
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (len - 1));
}

// w: [out][in][kf][kt]. Output frame t sees input frames t-kt+1 .. t.
inline FeatureMap conv2d(const FeatureMap& x, const WeightTensor& w,
                         const WeightTensor& b, int stride, int pad) {
  const int co_n = w.dims[0], ci_n = w.dims[1], kf_n = w.dims[2], kt_n = w.dims[3];
  const int fo_n = (x.freq() + 2 * pad - kf_n) / stride + 1;
  FeatureMap y(co_n, fo_n, x.frames());
  for (int co = 0; co < co_n; ++co)
    for (int fo = 0; fo < fo_n; ++fo)
      for (int t = 0; t < x.frames(); ++t) {
        double s = b.data[co];
        for (int ci = 0; ci < ci_n; ++ci)
          for (int kf = 0; kf < kf_n; ++kf)
            for (int kt = 0; kt < kt_n; ++kt) {
              const int fi = fo * stride + kf - pad;
              const int ti = t - (kt_n - 1) + kt;
              if (fi < 0 || fi >= x.freq() || ti < 0) continue;
              s += static_cast<double>(
                       w.data[((static_cast<std::size_t>(co) * ci_n + ci) * kf_n + kf) * kt_n + kt]) *
                   x.at(ci, fi, ti);
            }
        y.at(co, fo, t) = static_cast<float>(s);
      }
  return y;
}

// w: [in][out][kf][kt]; scatter form of the transposed convolution, keeping
// only the causal (first T) output frames.
inline FeatureMap deconv2d(const FeatureMap& x, const WeightTensor& w,
                           const WeightTensor& b, int stride, int pad,
                           int out_pad) {
  const int ci_n = w.dims[0], co_n = w.dims[1], kf_n = w.dims[2], kt_n = w.dims[3];
  const int fo_n = (x.freq() - 1) * stride - 2 * pad + kf_n + out_pad;
  std::vector<double> acc(static_cast<std::size_t>(co_n) * fo_n * x.frames(), 0.0);
  auto at = [&](int co, int fo, int t) -> double& {
    return acc[(static_cast<std::size_t>(t) * co_n + co) * fo_n + fo];
  };
  for (int ci = 0; ci < ci_n; ++ci)
    for (int fi = 0; fi < x.freq(); ++fi)
      for (int ti = 0; ti < x.frames(); ++ti)
        for (int co = 0; co < co_n; ++co)
          for (int kf = 0; kf < kf_n; ++kf)
            for (int kt = 0; kt < kt_n; ++kt) {
              const int fo = fi * stride + kf - pad;
              const int to = ti + kt;
              if (fo < 0 || fo >= fo_n || to >= x.frames()) continue;
              at(co, fo, to) +=
                  static_cast<double>(
                      w.data[((static_cast<std::size_t>(ci) * co_n + co) * kf_n + kf) * kt_n + kt]) *
                  x.at(ci, fi, ti);
            }
  FeatureMap y(co_n, fo_n, x.frames());
  for (int co = 0; co < co_n; ++co)
    for (int fo = 0; fo < fo_n; ++fo)
      for (int t = 0; t < x.frames(); ++t) {
        y.at(co, fo, t) = static_cast<float>(at(co, fo, t) + b.data[co]);
      }
  return y;
}

// w_ih [3h][in], w_hh [3h][h], bias [3h]; gates (r, z, n).
inline std::vector<double> gru_step(const WeightTensor& w_ih,
                                    const WeightTensor& w_hh,
                                    const WeightTensor& bias,
                                    std::span<const float> x,
                                    std::span<const double> h) {
  const int hd = static_cast<int>(h.size());
  const int in = static_cast<int>(x.size());
  auto proj = [&](const WeightTensor& w, int row, auto vec, int n) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += static_cast<double>(w.data[static_cast<std::size_t>(row) * n + j]) * vec[j];
    return s;
  };
  std::vector<double> out(hd);
  for (int i = 0; i < hd; ++i) {
    const double r = 1.0 / (1.0 + std::exp(-(proj(w_ih, i, x, in) + proj(w_hh, i, h, hd) + bias.data[i])));
    const double z = 1.0 / (1.0 + std::exp(-(proj(w_ih, hd + i, x, in) + proj(w_hh, hd + i, h, hd) + bias.data[hd + i])));
    const double n = std::tanh(proj(w_ih, 2 * hd + i, x, in) +
                               r * (proj(w_hh, 2 * hd + i, h, hd) + bias.data[2 * hd + i]));
    out[i] = (1.0 - z) * n + z * h[i];
  }
  return out;
}

inline std::vector<double> softmax(std::span<const double> s) {
  double mx = -INFINITY;
  for (double v : s) mx = std::max(mx, v);
  std::vector<double> e(s.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) sum += e[i] = std::exp(s[i] - mx);
  for (double& v : e) v /= sum;
  return e;
}

inline double si_snr(std::span<const float> est, std::span<const float> ref) {
  const std::size_t n = est.size();
  double me = 0, mr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    me += est[i];
    mr += ref[i];
  }
  me /= static_cast<double>(n);
  mr /= static_cast<double>(n);
  double dot = 0, rr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += (est[i] - me) * (ref[i] - mr);
    rr += (ref[i] - mr) * (ref[i] - mr);
  }
  double ts = 0, ns = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = dot / rr * (ref[i] - mr);
    const double noise = (est[i] - me) - target;
    ts += target * target;
    ns += noise * noise;
  }
  return std::clamp(10.0 * std::log10(ts / ns), -120.0, 120.0);
}

inline double loss(std::span<const float> est, std::span<const float> ref,
                   std::span<const float> est_mask, std::span<const float> ref_mask) {
  double l1 = 0;
  for (std::size_t i = 0; i < est.size(); ++i) l1 += std::fabs(double(est[i]) - double(ref[i]));
  double se = 0;
  for (std::size_t i = 0; i < est_mask.size(); ++i) {
    se += (double(est_mask[i]) - ref_mask[i]) * (double(est_mask[i]) - ref_mask[i]);
  }
  return l1 / est.size() + (est_mask.empty() ? 0.0 : se / est_mask.size());
}

inline double rel_l2(std::span<const float> a, std::span<const float> b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    den += double(b[i]) * b[i];
  }
  return std::sqrt(num / den);
}

inline bool bit_equal(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
  }
  return true;
}

// Frames [0, t) of two maps agree bit-for-bit.
inline bool prefix_equal(const FeatureMap& a, const FeatureMap& b, int t) {
  for (int k = 0; k < t; ++k) {
    if (!bit_equal(a.frame(k), b.frame(k))) return false;
  }
  return true;
}

}  // namespace oracle

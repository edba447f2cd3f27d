// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Time-frequency-channel attention block.
//
// Three parallel self-attention branches over a (C, F, T) feature map,
// concatenated and fused by a 1x1 convolution:
//
//   time:      Q_t, K_t (T x 1) from global avg+max pooling over (C, F);
//              Atten_t = softmax(mask(Q_t K_t^T)), lower-triangular mask,
//              no scaling.
//   frequency: Q_f, K_f (F x T) from causal avg+max pooling over C and the
//              last K_T frames; Atten_f = softmax(Q_f K_f^T / sqrt(T)).
//   channel:   same recipe with C and F swapped; Atten_c is C x C.
//
// The frequency/channel matrices sum over time. In kOffline mode the sum
// runs over the whole utterance (literal formula, not causal). In
// kCumulative mode frame t uses the running sum over frames 0..t scaled by
// 1/sqrt(t + 1), which is causal and equals the offline matrix at the last
// frame.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ofif/common.hpp"
#include "ofif/layers.hpp"
#include "ofif/tensor.hpp"
#include "ofif/weights.hpp"

namespace ofif {

enum class AttentionMode { kOffline, kCumulative };

inline std::string_view attention_mode_name(AttentionMode m) {
  return m == AttentionMode::kOffline ? "offline" : "cumulative";
}

inline AttentionMode parse_attention_mode(std::string_view s) {
  if (s == "offline") return AttentionMode::kOffline;
  if (s == "cumulative") return AttentionMode::kCumulative;
  throw Error(ErrorCode::kInvalidConfiguration,
              "unknown attention mode '" + std::string(s) +
                  "' (expected offline|cumulative)");
}

// 2 -> 1 pointwise projection of (avg, max) pooled features.
struct QkProjection {
  double w_avg = 0.0;
  double w_max = 0.0;
  double bias = 0.0;

  float apply(float avg, float mx) const {
    return static_cast<float>(w_avg * avg + w_max * mx + bias);
  }
};

struct TfcaParams {
  int channels = 0;
  int pool_window = 15;
  QkProjection t_q, t_k, f_q, f_k, c_q, c_k;
  LinearParams v_t, v_f, v_c;  // C -> C
  LinearParams fuse;           // 3C -> C
};

inline constexpr const char* kTfcaQkNames[] = {"t_q", "t_k", "f_q",
                                               "f_k", "c_q", "c_k"};
inline constexpr const char* kTfcaValueNames[] = {"v_t", "v_f", "v_c"};

inline std::vector<TensorSpec> tfca_tensor_specs(const std::string& prefix,
                                                 int channels,
                                                 const std::string& module) {
  std::vector<TensorSpec> specs;
  for (const char* n : kTfcaQkNames) {
    specs.push_back({prefix + n + ".w", {1, 2, 1}, module});
    specs.push_back({prefix + n + ".b", {1}, module});
  }
  for (const char* n : kTfcaValueNames) {
    specs.push_back({prefix + n + ".w", {channels, channels, 1, 1}, module});
    specs.push_back({prefix + n + ".b", {channels}, module});
  }
  specs.push_back({prefix + "fuse.w", {channels, 3 * channels, 1, 1}, module});
  specs.push_back({prefix + "fuse.b", {channels}, module});
  return specs;
}

inline TfcaParams make_tfca_params(const WeightStore& store,
                                   const std::string& prefix, int channels,
                                   int pool_window) {
  TfcaParams p;
  p.channels = channels;
  p.pool_window = pool_window;
  QkProjection* qk[] = {&p.t_q, &p.t_k, &p.f_q, &p.f_k, &p.c_q, &p.c_k};
  for (int i = 0; i < 6; ++i) {
    const auto& w = store.get(prefix + kTfcaQkNames[i] + ".w");
    const auto& b = store.get(prefix + kTfcaQkNames[i] + ".b");
    require(w.data.size() == 2 && b.data.size() == 1,
            ErrorCode::kInvalidWeights,
            "tensor '" + w.name + "' must hold a 2->1 projection");
    *qk[i] = {w.data[0], w.data[1], b.data[0]};
  }
  LinearParams* v[] = {&p.v_t, &p.v_f, &p.v_c};
  for (int i = 0; i < 3; ++i) {
    *v[i] = make_linear_params(store.get(prefix + kTfcaValueNames[i] + ".w"),
                               store.get(prefix + kTfcaValueNames[i] + ".b"));
  }
  p.fuse = make_linear_params(store.get(prefix + "fuse.w"),
                              store.get(prefix + "fuse.b"));
  require(p.v_t.in == channels && p.v_t.out == channels &&
              p.fuse.in == 3 * channels && p.fuse.out == channels,
          ErrorCode::kInvalidWeights,
          "TFCA tensors under '" + prefix + "' do not match " +
              std::to_string(channels) + " channels");
  return p;
}

// ---------------------------------------------------------------------------
// Per-frame state

struct TimeBranchState {
  std::vector<float> keys;                  // K_t per frame
  std::vector<std::vector<float>> values;   // V_t frame per frame
};

struct AxisBranchState {
  CausalPoolState pool;
  std::vector<double> scores;  // running Q K^T, n x n
  int frames = 0;
};

struct TfcaState {
  TimeBranchState time;
  AxisBranchState freq;
  AxisBranchState chan;
};

namespace detail {

inline void accumulate_outer(std::vector<double>& scores,
                             std::span<const float> q,
                             std::span<const float> k) {
  const std::size_t n = q.size();
  if (scores.empty()) scores.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double qi = q[i];
    double* row = scores.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += qi * static_cast<double>(k[j]);
  }
}

inline Matrix<float> transpose(const Matrix<float>& a) {
  constexpr int kTile = 16;
  Matrix<float> t(a.cols(), a.rows());
  for (int i0 = 0; i0 < a.rows(); i0 += kTile) {
    for (int j0 = 0; j0 < a.cols(); j0 += kTile) {
      for (int i = i0; i < std::min(a.rows(), i0 + kTile); ++i) {
        for (int j = j0; j < std::min(a.cols(), j0 + kTile); ++j) t(j, i) = a(i, j);
      }
    }
  }
  return t;
}

// Applies A (n x n, given transposed) along the given axis of a (C x F)
// frame.
inline void apply_axis_attention(PoolAxis axis, const Matrix<float>& a_t,
                                 int channels, int freq,
                                 std::span<const float> v,
                                 std::span<float> out) {
  const int n = a_t.rows();
  std::vector<const double*> dp(n);
  std::vector<const float*> fp(n);
  if (axis == PoolAxis::kFrequency) {
    // out[c][i] = sum_j A[i][j] v[c][j]
    std::vector<double> vt(static_cast<std::size_t>(n) * channels);
    for (int j = 0; j < n; ++j) {
      for (int c = 0; c < channels; ++c) {
        vt[static_cast<std::size_t>(j) * channels + c] =
            v[static_cast<std::size_t>(c) * freq + j];
      }
      dp[j] = vt.data() + static_cast<std::size_t>(j) * channels;
      fp[j] = a_t.row(j).data();
    }
    std::vector<double> acc(static_cast<std::size_t>(channels) * n, 0.0);
    gemm_accumulate(channels, n, dp, fp, acc.data());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  } else {
    // out[i][f] = sum_j A[i][j] v[j][f]
    std::vector<double> at(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
      std::copy(a_t.row(j).begin(), a_t.row(j).end(),
                at.begin() + static_cast<std::ptrdiff_t>(j) * n);
      dp[j] = at.data() + static_cast<std::size_t>(j) * n;
      fp[j] = v.data() + static_cast<std::size_t>(j) * freq;
    }
    std::vector<double> acc(static_cast<std::size_t>(n) * freq, 0.0);
    gemm_accumulate(n, freq, dp, fp, acc.data());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  }
}

struct AxisProjections {
  std::vector<float> q, k;
};

inline AxisProjections axis_qk(const TfcaParams& p, PoolAxis axis,
                               CausalPoolState& pool, int channels, int freq,
                               std::span<const float> in) {
  const PooledFrame pooled =
      causal_pool_step(pool, axis, p.pool_window, channels, freq, in);
  const QkProjection& pq = axis == PoolAxis::kFrequency ? p.f_q : p.c_q;
  const QkProjection& pk = axis == PoolAxis::kFrequency ? p.f_k : p.c_k;
  AxisProjections qk{std::vector<float>(pooled.avg.size()),
                     std::vector<float>(pooled.avg.size())};
  for (std::size_t i = 0; i < pooled.avg.size(); ++i) {
    qk.q[i] = pq.apply(pooled.avg[i], pooled.max[i]);
    qk.k[i] = pk.apply(pooled.avg[i], pooled.max[i]);
  }
  return qk;
}

inline const LinearParams& axis_values(const TfcaParams& p, PoolAxis axis) {
  return axis == PoolAxis::kFrequency ? p.v_f : p.v_c;
}

}  // namespace detail

// Row-wise softmax of (Q K^T summed over `frames` frames) / sqrt(frames).
inline Matrix<float> axis_attention_from_scores(std::span<const double> scores,
                                                int n, int frames) {
  Matrix<float> a(n, n);
  detail::softmax_rows(scores.data(), n, n, std::sqrt(static_cast<double>(frames)),
                       a.row(0).data());
  return a;
}

// Time branch for one frame: attends over all frames seen so far.
inline void t_branch_step(const TfcaParams& p, TimeBranchState& st, int freq,
                          std::span<const float> in, std::span<float> out,
                          std::vector<float>* attention_row = nullptr) {
  const auto [avg, mx] = global_pool_frame(in);
  const float q = p.t_q.apply(avg, mx);
  st.keys.push_back(p.t_k.apply(avg, mx));
  std::vector<float> v(in.size());
  pointwise_frame(p.v_t, freq, in, v);
  st.values.push_back(std::move(v));

  const std::size_t n = st.keys.size();
  std::vector<double> scores(n);
  for (std::size_t j = 0; j < n; ++j) {
    scores[j] = static_cast<double>(q) * static_cast<double>(st.keys[j]);
  }
  std::vector<float> a(n);
  softmax_prefix(scores, n, a);

  std::vector<double> w(a.begin(), a.end()), acc(in.size(), 0.0);
  std::vector<const double*> wp(n);
  std::vector<const float*> vp(n);
  for (std::size_t j = 0; j < n; ++j) {
    wp[j] = w.data() + j;
    vp[j] = st.values[j].data();
  }
  detail::gemm_accumulate(1, static_cast<int>(acc.size()), wp, vp, acc.data());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  if (attention_row != nullptr) *attention_row = std::move(a);
}

// Frequency/channel branch for one frame, cumulative statistics.
inline void axis_branch_step(const TfcaParams& p, PoolAxis axis,
                             AxisBranchState& st, int freq,
                             std::span<const float> in, std::span<float> out,
                             Matrix<float>* attention = nullptr) {
  const int channels = p.channels;
  auto qk = detail::axis_qk(p, axis, st.pool, channels, freq, in);
  detail::accumulate_outer(st.scores, qk.q, qk.k);
  ++st.frames;
  const int n = static_cast<int>(qk.q.size());
  Matrix<float> a_t(n, n);
  detail::softmax_rows(st.scores.data(), n, n,
                       std::sqrt(static_cast<double>(st.frames)), a_t.row(0).data(),
                       /*transposed=*/true);
  std::vector<float> v(in.size());
  pointwise_frame(detail::axis_values(p, axis), freq, in, v);
  detail::apply_axis_attention(axis, a_t, channels, freq, v, out);
  if (attention != nullptr) *attention = detail::transpose(a_t);
}

inline void tfca_fuse_frame(const TfcaParams& p, int freq,
                            std::span<const float> ft, std::span<const float> ff,
                            std::span<const float> fc, std::span<float> out) {
  std::vector<float> cat;
  cat.reserve(ft.size() * 3);
  cat.insert(cat.end(), ft.begin(), ft.end());
  cat.insert(cat.end(), ff.begin(), ff.end());
  cat.insert(cat.end(), fc.begin(), fc.end());
  pointwise_frame(p.fuse, freq, cat, out);
}

// One causal TFCA frame (cumulative mode).
inline void tfca_step(const TfcaParams& p, TfcaState& st, int freq,
                      std::span<const float> in, std::span<float> out) {
  require(in.size() == static_cast<std::size_t>(p.channels) * freq,
          ErrorCode::kInvalidConfiguration, "TFCA frame size mismatch");
  std::vector<float> ft(in.size()), ff(in.size()), fc(in.size());
  t_branch_step(p, st.time, freq, in, ft);
  axis_branch_step(p, PoolAxis::kFrequency, st.freq, freq, in, ff);
  axis_branch_step(p, PoolAxis::kChannel, st.chan, freq, in, fc);
  tfca_fuse_frame(p, freq, ft, ff, fc, out);
}

// ---------------------------------------------------------------------------
// Whole-sequence forms

inline FeatureMap t_branch(const FeatureMap& in, const TfcaParams& p) {
  require(in.channels() == p.channels, ErrorCode::kInvalidConfiguration,
          "TFCA channel mismatch");
  FeatureMap out(in.channels(), in.freq(), in.frames());
  TimeBranchState st;
  for (int t = 0; t < in.frames(); ++t) {
    t_branch_step(p, st, in.freq(), in.frame(t), out.frame(t));
  }
  return out;
}

// Atten_t (T x T), row t as used when producing output frame t.
inline Matrix<float> t_attention(const FeatureMap& in, const TfcaParams& p) {
  const int T = in.frames();
  Matrix<float> a(T, T);
  TimeBranchState st;
  std::vector<float> scratch(in.frame_size()), row;
  for (int t = 0; t < T; ++t) {
    t_branch_step(p, st, in.freq(), in.frame(t), scratch, &row);
    std::copy(row.begin(), row.end(), a.row(t).begin());
  }
  return a;
}

namespace detail {

struct OfflineAxis {
  std::vector<double> scores;
  int frames = 0;
};

inline OfflineAxis offline_axis_scores(const FeatureMap& in,
                                       const TfcaParams& p, PoolAxis axis) {
  OfflineAxis res;
  CausalPoolState pool;
  for (int t = 0; t < in.frames(); ++t) {
    auto qk = axis_qk(p, axis, pool, in.channels(), in.freq(), in.frame(t));
    accumulate_outer(res.scores, qk.q, qk.k);
    ++res.frames;
  }
  return res;
}

}  // namespace detail

inline Matrix<float> axis_attention_offline(const FeatureMap& in,
                                            const TfcaParams& p,
                                            PoolAxis axis) {
  const int n = axis == PoolAxis::kFrequency ? in.freq() : in.channels();
  auto s = detail::offline_axis_scores(in, p, axis);
  return axis_attention_from_scores(s.scores, n, s.frames);
}

// Cumulative attention matrix used at frame `frame`.
inline Matrix<float> axis_attention_cumulative(const FeatureMap& in,
                                               const TfcaParams& p,
                                               PoolAxis axis, int frame) {
  require(frame >= 0 && frame < in.frames(), ErrorCode::kInvalidConfiguration,
          "frame index out of range");
  AxisBranchState st;
  Matrix<float> a;
  std::vector<float> scratch(in.frame_size());
  for (int t = 0; t <= frame; ++t) {
    axis_branch_step(p, axis, st, in.freq(), in.frame(t), scratch, &a);
  }
  return a;
}

inline FeatureMap fc_branch(const FeatureMap& in, const TfcaParams& p,
                            PoolAxis axis, AttentionMode mode) {
  require(in.channels() == p.channels, ErrorCode::kInvalidConfiguration,
          "TFCA channel mismatch");
  FeatureMap out(in.channels(), in.freq(), in.frames());
  if (mode == AttentionMode::kCumulative) {
    AxisBranchState st;
    for (int t = 0; t < in.frames(); ++t) {
      axis_branch_step(p, axis, st, in.freq(), in.frame(t), out.frame(t));
    }
    return out;
  }
  const Matrix<float> a_t = detail::transpose(axis_attention_offline(in, p, axis));
  std::vector<float> v(in.frame_size());
  for (int t = 0; t < in.frames(); ++t) {
    pointwise_frame(detail::axis_values(p, axis), in.freq(), in.frame(t), v);
    detail::apply_axis_attention(axis, a_t, in.channels(), in.freq(), v,
                                 out.frame(t));
  }
  return out;
}

inline FeatureMap tfca_forward(const FeatureMap& in, const TfcaParams& p,
                               AttentionMode mode) {
  require(in.channels() == p.channels, ErrorCode::kInvalidConfiguration,
          "TFCA expects " + std::to_string(p.channels) + " channels, got " +
              std::to_string(in.channels()));
  FeatureMap out(in.channels(), in.freq(), in.frames());
  if (mode == AttentionMode::kCumulative) {
    TfcaState st;
    for (int t = 0; t < in.frames(); ++t) {
      tfca_step(p, st, in.freq(), in.frame(t), out.frame(t));
    }
    return out;
  }
  const FeatureMap ft = t_branch(in, p);
  const FeatureMap ff = fc_branch(in, p, PoolAxis::kFrequency, mode);
  const FeatureMap fc = fc_branch(in, p, PoolAxis::kChannel, mode);
  for (int t = 0; t < in.frames(); ++t) {
    tfca_fuse_frame(p, in.freq(), ft.frame(t), ff.frame(t), fc.frame(t),
                    out.frame(t));
  }
  return out;
}

}  // namespace ofif

// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Time-frequency sequence modeling: dual-path recurrence at the bottleneck.
//
//   stage 1 (per frame): BiGRU over frequency, C -> 2h, linear 2h -> C,
//                        residual add
//   stage 2 (per bin):   GRU over time, C -> h, linear h -> C, residual add
//
// Stage 1 never looks across frames and stage 2 is unidirectional in time,
// so the block is causal.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "ofif/layers.hpp"
#include "ofif/tensor.hpp"
#include "ofif/weights.hpp"

namespace ofif {

struct TfsmParams {
  int channels = 0;
  int hidden = 0;
  GruParams f_fwd, f_bwd;
  LinearParams f_proj;  // 2h -> C
  GruParams t_gru;
  LinearParams t_proj;  // h -> C
};

// Per-bin GRU hidden states, [f][h].
struct TfsmState {
  std::vector<float> hidden;
};

inline void append_gru_specs(std::vector<TensorSpec>& specs,
                             const std::string& prefix, int input, int hidden,
                             const std::string& module) {
  specs.push_back({prefix + "w_ih", {3 * hidden, input}, module});
  specs.push_back({prefix + "w_hh", {3 * hidden, hidden}, module});
  specs.push_back({prefix + "bias", {3 * hidden}, module});
}

inline std::vector<TensorSpec> tfsm_tensor_specs(const std::string& prefix,
                                                 int channels, int hidden) {
  const std::string m = "tfsm";
  std::vector<TensorSpec> specs;
  append_gru_specs(specs, prefix + "fgru.fwd.", channels, hidden, m);
  append_gru_specs(specs, prefix + "fgru.bwd.", channels, hidden, m);
  specs.push_back({prefix + "fproj.w", {channels, 2 * hidden}, m});
  specs.push_back({prefix + "fproj.b", {channels}, m});
  append_gru_specs(specs, prefix + "tgru.", channels, hidden, m);
  specs.push_back({prefix + "tproj.w", {channels, hidden}, m});
  specs.push_back({prefix + "tproj.b", {channels}, m});
  return specs;
}

inline GruParams load_gru(const WeightStore& store, const std::string& prefix) {
  return make_gru_params(store.get(prefix + "w_ih"), store.get(prefix + "w_hh"),
                         store.get(prefix + "bias"));
}

inline TfsmParams make_tfsm_params(const WeightStore& store,
                                   const std::string& prefix, int channels,
                                   int hidden) {
  TfsmParams p;
  p.channels = channels;
  p.hidden = hidden;
  p.f_fwd = load_gru(store, prefix + "fgru.fwd.");
  p.f_bwd = load_gru(store, prefix + "fgru.bwd.");
  p.f_proj = make_linear_params(store.get(prefix + "fproj.w"),
                                store.get(prefix + "fproj.b"));
  p.t_gru = load_gru(store, prefix + "tgru.");
  p.t_proj = make_linear_params(store.get(prefix + "tproj.w"),
                                store.get(prefix + "tproj.b"));
  require(p.f_fwd.hidden == hidden && p.t_gru.hidden == hidden &&
              p.f_fwd.input == channels && p.t_gru.input == channels &&
              p.f_proj.out == channels && p.t_proj.out == channels,
          ErrorCode::kInvalidWeights,
          "TFSM tensors under '" + prefix + "' do not match C=" +
              std::to_string(channels) + ", h=" + std::to_string(hidden));
  return p;
}

namespace detail {

inline void residual_add(std::span<const float> x, std::span<const float> y,
                         std::span<float> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(x[i]) + y[i]);
  }
}

}  // namespace detail

inline void tfsm_step(const TfsmParams& p, TfsmState& st, int freq,
                      std::span<const float> in, std::span<float> out) {
  const int c = p.channels;
  const int h = p.hidden;
  require(in.size() == static_cast<std::size_t>(c) * freq &&
              out.size() == in.size(),
          ErrorCode::kInvalidConfiguration, "TFSM frame size mismatch");
  if (st.hidden.empty()) st.hidden.assign(static_cast<std::size_t>(freq) * h, 0.0f);

  // Stage 1: frequency path.
  std::vector<float> bi(static_cast<std::size_t>(2 * h) * freq);
  bigru_frame(p.f_fwd, p.f_bwd, freq, in, bi);
  std::vector<float> proj(in.size()), mid(in.size());
  pointwise_frame(p.f_proj, freq, bi, proj);
  detail::residual_add(in, proj, mid);

  // Stage 2: time path, one recurrent state per bin.
  std::vector<float> next(st.hidden.size());
  gru_step_rows(p.t_gru, freq, mid, st.hidden, next);
  st.hidden.swap(next);
  std::vector<float> hid_frame(static_cast<std::size_t>(h) * freq);
  for (int f = 0; f < freq; ++f) {
    for (int j = 0; j < h; ++j) {
      hid_frame[static_cast<std::size_t>(j) * freq + f] =
          st.hidden[static_cast<std::size_t>(f) * h + j];
    }
  }
  pointwise_frame(p.t_proj, freq, hid_frame, proj);
  detail::residual_add(mid, proj, out);
}

inline FeatureMap tfsm_block(const FeatureMap& in, const TfsmParams& p) {
  require(in.channels() == p.channels, ErrorCode::kInvalidConfiguration,
          "TFSM expects " + std::to_string(p.channels) + " channels, got " +
              std::to_string(in.channels()));
  FeatureMap out(in.channels(), in.freq(), in.frames());
  TfsmState st;
  for (int t = 0; t < in.frames(); ++t) {
    tfsm_step(p, st, in.freq(), in.frame(t), out.frame(t));
  }
  return out;
}

}  // namespace ofif

// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Chunk-in / chunk-out inference with carried per-layer state, and the
// causality harness built on top of it.
//
// Emission policy: after `consumed` input samples, exactly
// max(0, consumed - W) output samples have been emitted. Output sample m is
// covered by frames floor(m/H) - 3 .. floor(m/H); the last of these needs
// input up to floor(m/H)*H + W, so W samples of latency is the smallest
// constant delay that is always final.

#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ofif/common.hpp"
#include "ofif/layers.hpp"
#include "ofif/model.hpp"
#include "ofif/ofif.hpp"
#include "ofif/stdct.hpp"
#include "ofif/tfca.hpp"
#include "ofif/tfsm.hpp"

namespace ofif {

struct EncoderState {
  ConvHistory conv;
  TfcaState skip;
};

struct DecoderState {
  ConvHistory deconv;
  TfcaState tfca;
};

// Everything the network carries from one frame to the next.
struct NetworkState {
  TfcaState ofif;
  std::vector<EncoderState> encoder;
  std::vector<TfsmState> tfsm;
  std::vector<DecoderState> decoder;

  explicit NetworkState(const Model& m)
      : encoder(m.encoder().size()),
        tfsm(m.tfsm().size()),
        decoder(m.decoder().size()) {}
};

// One frame through the network: raw W samples in, mask frame and the
// noisy spectrum frame (channel 0 of the pseudo-frame stack) out.
inline void network_step(const Model& model, NetworkState& st,
                         std::span<const float> raw, std::span<float> mask,
                         std::span<float> noisy) {
  const auto& cfg = model.config();
  std::vector<float> stacked(static_cast<std::size_t>(cfg.input_channels) *
                             kDctPoints);
  ofif_frame(raw, cfg.input_channels, stacked);
  std::copy(stacked.begin(), stacked.begin() + kDctPoints, noisy.begin());

  std::vector<float> x(stacked.size());
  tfca_step(model.ofif_tfca(), st.ofif, kDctPoints, stacked, x);

  std::vector<std::vector<float>> skips(model.encoder().size());
  for (std::size_t i = 0; i < model.encoder().size(); ++i) {
    const auto& b = model.encoder()[i];
    std::vector<float> y(static_cast<std::size_t>(b.conv.out_ch) * b.out_freq);
    conv_step(b.conv, b.in_freq, st.encoder[i].conv, x, y);
    batchnorm_frame(b.bn, b.out_freq, y);
    prelu_frame(b.prelu, b.out_freq, y);
    skips[i].resize(y.size());
    tfca_step(b.skip_tfca, st.encoder[i].skip, b.out_freq, y, skips[i]);
    x = std::move(y);
  }

  const int bottleneck_freq = model.encoder().back().out_freq;
  for (std::size_t k = 0; k < model.tfsm().size(); ++k) {
    std::vector<float> y(x.size());
    tfsm_step(model.tfsm()[k], st.tfsm[k], bottleneck_freq, x, y);
    x = std::move(y);
  }

  for (std::size_t i = 0; i < model.decoder().size(); ++i) {
    const auto& b = model.decoder()[i];
    const auto& skip = skips[b.skip_index];
    std::vector<float> cat;
    cat.reserve(x.size() + skip.size());
    cat.insert(cat.end(), x.begin(), x.end());
    cat.insert(cat.end(), skip.begin(), skip.end());
    std::vector<float> y(static_cast<std::size_t>(b.deconv.out_ch) * b.out_freq);
    deconv_step(b.deconv, b.in_freq, st.decoder[i].deconv, cat, y);
    batchnorm_frame(b.bn, b.out_freq, y);
    if (b.last()) {
      tanh_frame(y);
    } else {
      prelu_frame(b.prelu, b.out_freq, y);
      std::vector<float> z(y.size());
      tfca_step(*b.tfca, st.decoder[i].tfca, b.out_freq, y, z);
      y = std::move(z);
    }
    x = std::move(y);
  }
  std::copy(x.begin(), x.end(), mask.begin());
}

class StreamState {
 public:
  explicit StreamState(const Model& model) : net_(model) {
    require(model.config().attention_mode == AttentionMode::kCumulative,
            ErrorCode::kInvalidConfiguration,
            "streaming requires cumulative attention mode");
  }

  std::uint64_t consumed() const { return consumed_; }
  std::uint64_t emitted() const { return emitted_; }
  std::uint64_t frames() const { return frames_; }
  bool closed() const { return closed_; }
  std::size_t clamped() const { return ola_.clamped(); }

 private:
  friend std::vector<float> stream_push(StreamState&, const Model&,
                                        std::span<const float>);
  friend std::vector<float> stream_flush(StreamState&, const Model&);

  // Runs every frame fully contained in the pending input.
  void process_frames(const Model& model) {
    std::vector<float> mask(kDctPoints), noisy(kDctPoints), enh(kDctPoints);
    while (pending_.size() >= static_cast<std::size_t>(kWindow)) {
      network_step(model, net_, std::span(pending_).first(kWindow), mask, noisy);
      apply_mask_frame(mask, noisy, enh);
      ola_.add_frame(enh);
      ++frames_;
      pending_.erase(pending_.begin(), pending_.begin() + kHop);
    }
  }

  std::vector<float> emit_until(std::uint64_t target) {
    std::vector<float> out;
    if (target > emitted_) {
      out = ola_.take(target - emitted_);
      require(out.size() == target - emitted_, ErrorCode::kInvalidConfiguration,
              "overlap-add is behind the emission schedule");
      emitted_ = target;
    }
    return out;
  }

  NetworkState net_;
  std::vector<float> pending_;  // input from frame `frames_` onward
  OverlapAdd ola_;
  std::uint64_t consumed_ = 0;
  std::uint64_t emitted_ = 0;
  std::uint64_t frames_ = 0;
  bool closed_ = false;
};

inline std::vector<float> stream_push(StreamState& st, const Model& model,
                                      std::span<const float> chunk) {
  require(!st.closed_, ErrorCode::kStreamClosed, "push after flush");
  if (chunk.empty()) return {};
  st.pending_.insert(st.pending_.end(), chunk.begin(), chunk.end());
  st.consumed_ += chunk.size();
  st.process_frames(model);
  const std::uint64_t target =
      st.consumed_ > static_cast<std::uint64_t>(kWindow) ? st.consumed_ - kWindow
                                                         : 0;
  return st.emit_until(target);
}

// Zero-pads the trailing partial frame (or the whole input, if shorter than
// one window), drains the overlap-add and emits up to the consumed length.
inline std::vector<float> stream_flush(StreamState& st, const Model& model) {
  require(!st.closed_, ErrorCode::kStreamClosed, "stream already flushed");
  st.closed_ = true;
  if (st.consumed_ == 0) return {};
  const std::size_t total = padded_length(st.consumed_);
  st.pending_.resize(st.pending_.size() + (total - st.consumed_), 0.0f);
  st.process_frames(model);
  std::vector<float> out = st.ola_.drain();
  out.resize(st.consumed_ - st.emitted_);
  st.emitted_ = st.consumed_;
  return out;
}

// Convenience: whole signal streamed in fixed-size chunks.
inline std::vector<float> stream_enhance(const Model& model,
                                         std::span<const float> wave,
                                         std::size_t chunk) {
  require(chunk >= 1, ErrorCode::kInvalidConfiguration, "chunk size must be >= 1");
  StreamState st(model);
  std::vector<float> out;
  out.reserve(wave.size());
  for (std::size_t pos = 0; pos < wave.size(); pos += chunk) {
    auto piece = stream_push(st, model,
                             wave.subspan(pos, std::min(chunk, wave.size() - pos)));
    out.insert(out.end(), piece.begin(), piece.end());
  }
  auto tail = stream_flush(st, model);
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

// ---------------------------------------------------------------------------
// Causality harness

struct CausalityReport {
  bool passed = false;
  AttentionMode mode = AttentionMode::kCumulative;
  std::uint64_t seed = 0;
  std::size_t split = 0;   // first sample where the inputs differ
  std::size_t length = 0;  // samples per input
  std::size_t compared = 0;                 // prefix length checked
  std::optional<std::size_t> divergence;    // first differing output sample
  std::optional<std::uint64_t> latency;     // consumed - emitted, steady state
  bool latency_constant = true;
};

// Uniform [-1, 1) from the top 24 bits, so the sequence is portable.
inline std::vector<float> seeded_noise(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<float> v(n);
  for (float& x : v) {
    x = static_cast<float>(static_cast<double>(rng() >> 40) * 0x1.0p-23 - 1.0);
  }
  return v;
}

struct CausalityOptions {
  std::size_t length = 99 * kHop + kWindow;  // 100 frames
  std::optional<AttentionMode> mode;         // defaults to the model's
};

// Runs two inputs that agree on [0, split) and differ from `split` on, and
// checks that the outputs agree bit-for-bit on [0, split - W).
inline CausalityReport verify_causality(const Model& model, std::uint64_t seed,
                                        std::size_t split,
                                        const CausalityOptions& opt = {}) {
  CausalityReport r;
  r.mode = opt.mode.value_or(model.config().attention_mode);
  r.seed = seed;
  r.split = split;
  r.length = opt.length;
  require(opt.length >= static_cast<std::size_t>(kWindow),
          ErrorCode::kTooShort, "causality trial shorter than one window");
  require(split <= opt.length, ErrorCode::kInvalidConfiguration,
          "split sample beyond the trial length");

  const std::vector<float> a = seeded_noise(seed, opt.length);
  std::vector<float> b = a;
  const std::vector<float> tail =
      seeded_noise(seed ^ 0x9E3779B97F4A7C15ull, opt.length);
  for (std::size_t i = split; i < opt.length; ++i) {
    b[i] = tail[i] == a[i] ? -a[i] - 0.5f : tail[i];
  }

  std::vector<float> ya, yb;
  if (r.mode == AttentionMode::kCumulative) {
    const Model m = model.with_mode(AttentionMode::kCumulative);
    auto run = [&](const std::vector<float>& in) {
      StreamState st(m);
      std::vector<float> out;
      for (std::size_t pos = 0; pos < in.size(); pos += kHop) {
        const std::size_t n = std::min<std::size_t>(kHop, in.size() - pos);
        auto piece = stream_push(st, m, std::span(in).subspan(pos, n));
        out.insert(out.end(), piece.begin(), piece.end());
        if (st.consumed() >= static_cast<std::uint64_t>(kWindow)) {
          const std::uint64_t lat = st.consumed() - st.emitted();
          if (r.latency && *r.latency != lat) r.latency_constant = false;
          r.latency = r.latency ? std::max(*r.latency, lat) : lat;
        }
      }
      auto rest = stream_flush(st, m);
      out.insert(out.end(), rest.begin(), rest.end());
      return out;
    };
    ya = run(a);
    yb = run(b);
  } else {
    ya = model_forward(model, a, r.mode).enhanced;
    yb = model_forward(model, b, r.mode).enhanced;
  }

  r.compared = split > static_cast<std::size_t>(kWindow) ? split - kWindow : 0;
  for (std::size_t i = 0; i < r.compared; ++i) {
    if (std::bit_cast<std::uint32_t>(ya[i]) != std::bit_cast<std::uint32_t>(yb[i])) {
      r.divergence = i;
      break;
    }
  }
  r.passed = !r.divergence.has_value();
  if (r.mode == AttentionMode::kCumulative) {
    r.passed = r.passed && r.latency_constant &&
               r.latency.value_or(kWindow) == static_cast<std::uint64_t>(kWindow);
  }
  return r;
}

}  // namespace ofif

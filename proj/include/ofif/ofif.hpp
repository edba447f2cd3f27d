// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Overlapped-frame information fusion.
//
// With W = 4H, frame x_t already holds the first (4 - k) * H samples of the
// future frame x_{t+k}. Pseudo frame k is x_t shifted left by k * H with the
// unknown tail zero-filled; the group [x_t, x~_{t+1}, x~_{t+2}, x~_{t+3}] is
// windowed and transformed member by member and stacked as input channels.
// No sample beyond the current frame is used.

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "ofif/common.hpp"
#include "ofif/stdct.hpp"
#include "ofif/tensor.hpp"
#include "ofif/tfca.hpp"

namespace ofif {

inline constexpr int kOfifMembers = 4;

// Rows: [x_t, x~_{t+1}, ..., x~_{t+members-1}], raw (unwindowed) samples.
using PseudoFrameGroup = Matrix<float>;

inline PseudoFrameGroup make_pseudo_frames(std::span<const float> frame,
                                           int hop, int members = kOfifMembers) {
  const int w = static_cast<int>(frame.size());
  if (hop < 1 || w != 4 * hop) {
    throw Error(ErrorCode::kInvalidConfiguration,
                "pseudo frames need W == 4H (W=" + std::to_string(w) +
                    ", H=" + std::to_string(hop) + ")");
  }
  require(members >= 1 && members <= 4, ErrorCode::kInvalidConfiguration,
          "pseudo-frame group size must be 1..4");
  PseudoFrameGroup g(members, w, 0.0f);
  for (int k = 0; k < members; ++k) {
    const int shift = k * hop;
    std::copy(frame.begin() + shift, frame.end(), g.row(k).begin());
  }
  return g;
}

// Transforms one raw frame into `members` stacked spectra (members x N).
inline void ofif_frame(std::span<const float> raw, int members,
                       std::span<float> out) {
  require(out.size() == static_cast<std::size_t>(members) * kDctPoints,
          ErrorCode::kInvalidConfiguration, "OFIF frame size mismatch");
  const PseudoFrameGroup g = make_pseudo_frames(raw, kHop, members);
  std::vector<float> windowed(out.size());
  for (int k = 0; k < members; ++k) {
    window_frame(g.row(k), std::span(windowed).subspan(
                               static_cast<std::size_t>(k) * kDctPoints, kDctPoints));
  }
  dct_basis().forward_rows(windowed, members, out);
}

// (members, 512, T); channel 0 is the plain STDCT of the signal.
inline FeatureMap ofif_stack(std::span<const float> wave,
                             int members = kOfifMembers) {
  require(wave.size() >= static_cast<std::size_t>(kWindow),
          ErrorCode::kTooShort,
          "signal of " + std::to_string(wave.size()) +
              " samples is shorter than one window");
  const int frames = frame_count(wave.size());
  FeatureMap out(members, kDctPoints, frames);
  for (int t = 0; t < frames; ++t) {
    ofif_frame(wave.subspan(static_cast<std::size_t>(t) * kHop, kWindow),
               members, out.frame(t));
  }
  return out;
}

inline Spectrogram ofif_channel(const FeatureMap& stacked, int channel) {
  Spectrogram s(stacked.freq(), stacked.frames());
  for (int t = 0; t < stacked.frames(); ++t) {
    auto src = stacked.frame(t).subspan(
        static_cast<std::size_t>(channel) * stacked.freq(), stacked.freq());
    std::copy(src.begin(), src.end(), s.frame(t).begin());
  }
  return s;
}

inline FeatureMap ofif_fuse(const FeatureMap& stacked, const TfcaParams& p,
                            AttentionMode mode) {
  return tfca_forward(stacked, p, mode);
}

}  // namespace ofif

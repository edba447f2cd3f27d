// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ofif/common.hpp"

namespace ofif {

// Network activation with dims (C channels, F bins, T frames).
//
// Storage is frame-major ([t][c][f]) so that one time frame is a contiguous
// C*F block; streaming code hands single frames around as spans.
class FeatureMap {
 public:
  FeatureMap() = default;

  FeatureMap(int channels, int freq, int frames)
      : channels_(channels), freq_(freq), frames_(frames) {
    require(channels >= 1 && freq >= 1 && frames >= 1,
            ErrorCode::kInvalidConfiguration,
            "feature map dims must be >= 1, got (" + std::to_string(channels) +
                ", " + std::to_string(freq) + ", " + std::to_string(frames) +
                ")");
    data_.assign(static_cast<std::size_t>(channels) * freq * frames, 0.0f);
  }

  FeatureMap(int channels, int freq, int frames, std::vector<float> data)
      : FeatureMap(channels, freq, frames) {
    require(data.size() == data_.size(), ErrorCode::kInvalidConfiguration,
            "feature map data length does not match C*F*T");
    data_ = std::move(data);
  }

  int channels() const { return channels_; }
  int freq() const { return freq_; }
  int frames() const { return frames_; }
  std::size_t frame_size() const {
    return static_cast<std::size_t>(channels_) * freq_;
  }
  bool empty() const { return data_.empty(); }

  float& at(int c, int f, int t) {
    return data_[t * frame_size() + static_cast<std::size_t>(c) * freq_ + f];
  }
  float at(int c, int f, int t) const {
    return data_[t * frame_size() + static_cast<std::size_t>(c) * freq_ + f];
  }

  std::span<float> frame(int t) {
    return {data_.data() + t * frame_size(), frame_size()};
  }
  std::span<const float> frame(int t) const {
    return {data_.data() + t * frame_size(), frame_size()};
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](float v) { return std::isfinite(v); });
  }

  bool same_shape(const FeatureMap& o) const {
    return channels_ == o.channels_ && freq_ == o.freq_ &&
           frames_ == o.frames_;
  }

  bool operator==(const FeatureMap&) const = default;

 private:
  int channels_ = 0;
  int freq_ = 0;
  int frames_ = 0;
  std::vector<float> data_;
};

inline std::string shape_string(std::span<const int> dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

// Named parameter tensor as stored in a weight container.
struct WeightTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<float> data;

  std::size_t numel() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, int d) {
                             return a * static_cast<std::size_t>(d);
                           });
  }

  void validate() const {
    require(!name.empty(), ErrorCode::kInvalidWeights, "unnamed tensor");
    for (int d : dims) {
      require(d >= 0, ErrorCode::kInvalidWeights,
              "tensor '" + name + "' has a negative dim");
    }
    require(numel() == data.size(), ErrorCode::kInvalidWeights,
            "tensor '" + name + "' data length " +
                std::to_string(data.size()) + " != product of dims " +
                shape_string(dims));
  }

  bool operator==(const WeightTensor&) const = default;
};

inline std::vector<double> to_double(std::span<const float> v) {
  return {v.begin(), v.end()};
}

}  // namespace ofif

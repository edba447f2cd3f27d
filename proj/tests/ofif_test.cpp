// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace {

using namespace ofif;

TEST(PseudoFrames, ShiftAndZeroFill) {
  const std::vector<float> x{1, 2, 3, 4, 5, 6, 7, 8};
  const PseudoFrameGroup g = make_pseudo_frames(x, 2);
  const std::vector<std::vector<float>> want{{1, 2, 3, 4, 5, 6, 7, 8},
                                             {3, 4, 5, 6, 7, 8, 0, 0},
                                             {5, 6, 7, 8, 0, 0, 0, 0},
                                             {7, 8, 0, 0, 0, 0, 0, 0}};
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(std::vector<float>(g.row(k).begin(), g.row(k).end()), want[k]) << k;
  }
}

TEST(PseudoFrames, ZeroFrame) {
  const PseudoFrameGroup g = make_pseudo_frames(std::vector<float>(16, 0.0f), 4);
  for (float v : g.data()) EXPECT_EQ(v, 0.0f);
}

TEST(PseudoFrames, RequiresFourfoldOverlap) {
  try {
    make_pseudo_frames(std::vector<float>(10), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfiguration);
  }
}

TEST(PseudoFrames, MatchFutureFramesOnKnownSupport) {
  std::mt19937_64 rng(1);
  const auto x = oracle::uniform(rng, 3000);
  const int frames = frame_count(x.size());
  for (int t = 0; t + 3 < frames; ++t) {
    const auto g = make_pseudo_frames(std::span(x).subspan(t * kHop, kWindow), kHop);
    for (int k = 1; k < 4; ++k) {
      const int known = (4 - k) * kHop;
      for (int n = 0; n < kWindow; ++n) {
        const float want = n < known ? x[(t + k) * kHop + n] : 0.0f;
        ASSERT_EQ(g(k, n), want) << "t=" << t << " k=" << k << " n=" << n;
      }
    }
  }
}

TEST(OfifStack, ShapeAndFirstChannel) {
  std::mt19937_64 rng(2);
  const auto x = oracle::uniform(rng, 16000);
  const FeatureMap s = ofif_stack(x);
  EXPECT_EQ(s.channels(), 4);
  EXPECT_EQ(s.freq(), 512);
  EXPECT_EQ(s.frames(), 122);
  EXPECT_TRUE(oracle::bit_equal(ofif_channel(s, 0).data(), stdct(x).data()));
}

TEST(OfifStack, MembersAreTransformsOfPseudoFrames) {
  std::mt19937_64 rng(3);
  const auto x = oracle::uniform(rng, 1024);
  const FeatureMap s = ofif_stack(x);
  const auto g = make_pseudo_frames(std::span(x).subspan(2 * kHop, kWindow), kHop);
  std::vector<float> y(512);
  for (int k = 0; k < 4; ++k) {
    analyze_frame(g.row(k), y);
    EXPECT_TRUE(oracle::bit_equal(y, s.frame(2).subspan(k * 512, 512))) << k;
  }
}

TEST(OfifStack, ColumnsIgnoreLaterSamples) {
  std::mt19937_64 rng(4);
  auto x = oracle::uniform(rng, 3000);
  const FeatureMap a = ofif_stack(x);
  const std::size_t n = 1700;
  x[n] = 2.0f;
  const FeatureMap b = ofif_stack(x);
  for (int t = 0; t < a.frames(); ++t) {
    if (static_cast<std::size_t>(t) * kHop + kWindow <= n) {
      EXPECT_TRUE(oracle::bit_equal(a.frame(t), b.frame(t))) << t;
    }
  }
}

TEST(OfifFuse, PreservesShapeAndZero) {
  std::mt19937_64 rng(5);
  ofif::WeightStore store;
  for (const auto& s : tfca_tensor_specs("x.", 4, "m")) {
    auto t = oracle::random_tensor(rng, s.name, s.dims);
    if (s.dims.size() == 1) std::fill(t.data.begin(), t.data.end(), 0.0f);
    store.add(std::move(t));
  }
  const TfcaParams p = make_tfca_params(store, "x.", 4, 15);
  const FeatureMap zero(4, 512, 3);
  for (AttentionMode m : {AttentionMode::kOffline, AttentionMode::kCumulative}) {
    const FeatureMap y = ofif_fuse(zero, p, m);
    EXPECT_TRUE(y.same_shape(zero));
    for (float v : y.data()) EXPECT_EQ(v, 0.0f);
  }
  const auto x = ofif_stack(oracle::uniform(rng, 1024));
  EXPECT_TRUE(ofif_fuse(x, p, AttentionMode::kCumulative).same_shape(x));
}

}  // namespace

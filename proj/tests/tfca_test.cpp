// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace {

using namespace ofif;

FeatureMap values(const LinearParams& v, const FeatureMap& x) {
  FeatureMap out(x.channels(), x.freq(), x.frames());
  for (int t = 0; t < x.frames(); ++t) pointwise_frame(v, x.freq(), x.frame(t), out.frame(t));
  return out;
}

TEST(TimeAttention, SingleFrameCopiesValues) {
  std::mt19937_64 rng(1);
  const TfcaParams p = oracle::random_tfca(rng, 3);
  const auto x = oracle::random_map(rng, 3, 8, 1);
  const Matrix<float> a = t_attention(x, p);
  EXPECT_EQ(a(0, 0), 1.0f);
  EXPECT_EQ(t_branch(x, p), values(p.v_t, x));
}

TEST(TimeAttention, ZeroQueryIsUniformOverPast) {
  std::mt19937_64 rng(2);
  TfcaParams p = oracle::random_tfca(rng, 2);
  p.t_q = {};
  const auto x = oracle::random_map(rng, 2, 5, 6);
  const Matrix<float> a = t_attention(x, p);
  for (int t = 0; t < 6; ++t)
    for (int j = 0; j < 6; ++j) {
      EXPECT_NEAR(a(t, j), j <= t ? 1.0 / (t + 1) : 0.0, 1e-7);
    }
}

TEST(TimeAttention, LowerTriangularRowStochastic) {
  std::mt19937_64 rng(3);
  const TfcaParams p = oracle::random_tfca(rng, 4);
  const auto x = oracle::random_map(rng, 4, 9, 15);
  const Matrix<float> a = t_attention(x, p);
  for (int t = 0; t < 15; ++t) {
    double sum = 0;
    for (int j = 0; j < 15; ++j) {
      if (j > t) EXPECT_EQ(a(t, j), 0.0f);
      sum += a(t, j);
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(TimeAttention, MatchesDirectComputation) {
  std::mt19937_64 rng(4);
  const TfcaParams p = oracle::random_tfca(rng, 3);
  const auto x = oracle::random_map(rng, 3, 6, 7);
  const FeatureMap y = t_branch(x, p);
  const FeatureMap v = values(p.v_t, x);
  std::vector<double> q(7), k(7);
  for (int t = 0; t < 7; ++t) {
    double s = 0, m = -INFINITY;
    for (float e : x.frame(t)) {
      s += e;
      m = std::max<double>(m, e);
    }
    const float avg = static_cast<float>(s / 18.0), mx = static_cast<float>(m);
    q[t] = p.t_q.apply(avg, mx);
    k[t] = p.t_k.apply(avg, mx);
  }
  for (int t = 0; t < 7; ++t) {
    std::vector<double> sc(t + 1);
    for (int j = 0; j <= t; ++j) sc[j] = q[t] * k[j];
    const auto a = oracle::softmax(sc);
    for (std::size_t i = 0; i < x.frame_size(); ++i) {
      double ref = 0;
      for (int j = 0; j <= t; ++j) ref += a[j] * v.frame(j)[i];
      EXPECT_NEAR(y.frame(t)[i], ref, 1e-6);
    }
  }
}

class AxisAttention : public ::testing::TestWithParam<PoolAxis> {};

TEST_P(AxisAttention, OfflineRowsAreStochastic) {
  std::mt19937_64 rng(5);
  const TfcaParams p = oracle::random_tfca(rng, 6, 4);
  const auto x = oracle::random_map(rng, 6, 10, 9);
  const Matrix<float> a = axis_attention_offline(x, p, GetParam());
  for (int i = 0; i < a.rows(); ++i) {
    double sum = 0;
    for (float v : a.row(i)) {
      EXPECT_GE(v, 0.0f);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST_P(AxisAttention, CumulativeReachesOfflineAtLastFrame) {
  std::mt19937_64 rng(6);
  const TfcaParams p = oracle::random_tfca(rng, 5, 3);
  const auto x = oracle::random_map(rng, 5, 12, 8);
  const Matrix<float> off = axis_attention_offline(x, p, GetParam());
  const Matrix<float> cum = axis_attention_cumulative(x, p, GetParam(), 7);
  ASSERT_EQ(off.rows(), cum.rows());
  for (std::size_t i = 0; i < off.data().size(); ++i) {
    EXPECT_NEAR(off.data()[i], cum.data()[i], 1e-6);
  }
}

TEST_P(AxisAttention, MatchesScoreOracle) {
  const PoolAxis axis = GetParam();
  std::mt19937_64 rng(7);
  const TfcaParams p = oracle::random_tfca(rng, 4, 3);
  const auto x = oracle::random_map(rng, 4, 7, 5);
  const Matrix<float> avg = causal_pool_time(x, 3, PoolMode::kAvg, axis);
  const Matrix<float> mx = causal_pool_time(x, 3, PoolMode::kMax, axis);
  const QkProjection& pq = axis == PoolAxis::kFrequency ? p.f_q : p.c_q;
  const QkProjection& pk = axis == PoolAxis::kFrequency ? p.f_k : p.c_k;
  const int n = avg.rows();
  std::vector<double> sc(n * n, 0.0);
  for (int t = 0; t < 5; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        sc[i * n + j] += double(pq.apply(avg(i, t), mx(i, t))) * pk.apply(avg(j, t), mx(j, t));
      }
  const Matrix<float> a = axis_attention_offline(x, p, axis);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(sc.begin() + i * n, sc.begin() + (i + 1) * n);
    for (double& v : row) v /= std::sqrt(5.0);
    const auto ref = oracle::softmax(row);
    for (int j = 0; j < n; ++j) EXPECT_NEAR(a(i, j), ref[j], 1e-6);
  }

  // Offline output applies that matrix to every frame's values.
  const FeatureMap y = fc_branch(x, p, axis, AttentionMode::kOffline);
  const FeatureMap v = values(axis == PoolAxis::kFrequency ? p.v_f : p.v_c, x);
  for (int t = 0; t < 5; ++t)
    for (int c = 0; c < 4; ++c)
      for (int f = 0; f < 7; ++f) {
        double ref = 0;
        if (axis == PoolAxis::kFrequency) {
          for (int j = 0; j < 7; ++j) ref += double(a(f, j)) * v.at(c, j, t);
        } else {
          for (int j = 0; j < 4; ++j) ref += double(a(c, j)) * v.at(j, f, t);
        }
        EXPECT_NEAR(y.at(c, f, t), ref, 1e-6);
      }
}

TEST_P(AxisAttention, SingletonAxisCopiesValues) {
  const PoolAxis axis = GetParam();
  std::mt19937_64 rng(8);
  const int c = axis == PoolAxis::kChannel ? 1 : 3;
  const int f = axis == PoolAxis::kFrequency ? 1 : 6;
  const TfcaParams p = oracle::random_tfca(rng, c);
  const auto x = oracle::random_map(rng, c, f, 4);
  const Matrix<float> a = axis_attention_offline(x, p, axis);
  ASSERT_EQ(a.rows(), 1);
  EXPECT_EQ(a(0, 0), 1.0f);
  const FeatureMap v = values(axis == PoolAxis::kFrequency ? p.v_f : p.v_c, x);
  for (AttentionMode m : {AttentionMode::kOffline, AttentionMode::kCumulative}) {
    EXPECT_EQ(fc_branch(x, p, axis, m), v);
  }
}

INSTANTIATE_TEST_SUITE_P(Axes, AxisAttention,
                         ::testing::Values(PoolAxis::kFrequency, PoolAxis::kChannel),
                         [](const auto& info) {
                           return info.param == PoolAxis::kFrequency ? "Frequency" : "Channel";
                         });

TEST(Tfca, PreservesShape) {
  std::mt19937_64 rng(9);
  const TfcaParams p = oracle::random_tfca(rng, 128);
  const auto x = oracle::random_map(rng, 128, 16, 20);
  for (AttentionMode m : {AttentionMode::kOffline, AttentionMode::kCumulative}) {
    const FeatureMap y = tfca_forward(x, p, m);
    EXPECT_TRUE(y.same_shape(x));
    EXPECT_TRUE(y.all_finite());
  }
}

TEST(Tfca, ZeroInputZeroBiasGivesZero) {
  std::mt19937_64 rng(10);
  WeightStore store;
  for (const auto& s : tfca_tensor_specs("x.", 3, "m")) {
    auto t = oracle::random_tensor(rng, s.name, s.dims);
    if (s.name.ends_with(".b")) std::fill(t.data.begin(), t.data.end(), 0.0f);
    store.add(std::move(t));
  }
  const TfcaParams p = make_tfca_params(store, "x.", 3, 15);
  for (AttentionMode m : {AttentionMode::kOffline, AttentionMode::kCumulative}) {
    const FeatureMap y = tfca_forward(FeatureMap(3, 8, 4), p, m);
    for (float v : y.data()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(Tfca, CumulativeIsPrefixStable) {
  std::mt19937_64 rng(11);
  const TfcaParams p = oracle::random_tfca(rng, 4);
  auto x = oracle::random_map(rng, 4, 16, 10);
  const FeatureMap y0 = tfca_forward(x, p, AttentionMode::kCumulative);
  for (float& v : x.frame(6)) v *= -3.0f;
  const FeatureMap y1 = tfca_forward(x, p, AttentionMode::kCumulative);
  EXPECT_TRUE(oracle::prefix_equal(y0, y1, 6));
}

TEST(Tfca, OfflineLooksAhead) {
  std::mt19937_64 rng(12);
  const TfcaParams p = oracle::random_tfca(rng, 4);
  auto x = oracle::random_map(rng, 4, 16, 10);
  const FeatureMap y0 = tfca_forward(x, p, AttentionMode::kOffline);
  for (float& v : x.frame(9)) v *= -3.0f;
  const FeatureMap y1 = tfca_forward(x, p, AttentionMode::kOffline);
  EXPECT_FALSE(oracle::bit_equal(y0.frame(0), y1.frame(0)));
}

TEST(Tfca, StepEqualsWholeSequence) {
  std::mt19937_64 rng(13);
  const TfcaParams p = oracle::random_tfca(rng, 5);
  const auto x = oracle::random_map(rng, 5, 24, 6);
  const FeatureMap y = tfca_forward(x, p, AttentionMode::kCumulative);
  TfcaState st;
  std::vector<float> out(x.frame_size());
  for (int t = 0; t < 6; ++t) {
    tfca_step(p, st, 24, x.frame(t), out);
    EXPECT_TRUE(oracle::bit_equal(out, y.frame(t)));
  }
}

TEST(Tfca, ModeNames) {
  EXPECT_EQ(parse_attention_mode("offline"), AttentionMode::kOffline);
  EXPECT_EQ(parse_attention_mode("cumulative"), AttentionMode::kCumulative);
  EXPECT_THROW(parse_attention_mode("causal"), Error);
}

}  // namespace

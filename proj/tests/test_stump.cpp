// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>

#include "oocd/classifier/stump.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace oocd;

namespace {

testkit::Rows as_rows(const TrainingMatrix& m) {
  testkit::Rows out;
  for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
  return out;
}

std::vector<double> random_weights(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double s = 0;
  for (auto& v : w) s += (v = 0.05 + uniform_unit(rng));
  for (auto& v : w) v /= s;
  return w;
}

}  // namespace

TEST(Stump, SeparableOneFeature) {
  const auto rows = testkit::one_dim_rows({1, 2, 3, 4}, {-1, -1, 1, 1});
  const std::vector<double> w(4, 0.25);
  const auto fit = best_stump(rows, w);
  EXPECT_EQ(fit.stump.feature_index, 0u);
  EXPECT_DOUBLE_EQ(fit.stump.threshold, 2.5);
  EXPECT_EQ(fit.stump.polarity, 1);
  EXPECT_DOUBLE_EQ(fit.error, 0.0);
}

TEST(Stump, Thresholds) {
  const std::vector<double> d{1.0, 2.0, 4.0};
  EXPECT_EQ(stump_thresholds(d), (std::vector<double>{0.0, 1.5, 3.0, 5.0}));
  const std::vector<double> one{7.0};
  EXPECT_EQ(stump_thresholds(one), (std::vector<double>{6.0, 8.0}));
}

TEST(Stump, TieGoesToEarliestCandidate) {
  // Features 0 and 1 are identical: both separate perfectly; feature 0 wins.
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 4; ++i) {
    std::array<double, kFeatureCount> f{};
    f[0] = f[1] = i;
    rows.push_back(testkit::make_row("r" + std::to_string(i), f, i < 2 ? Label::NOOC : Label::OOC));
  }
  const auto fit = best_stump(rows, std::vector<double>(4, 0.25));
  EXPECT_EQ(fit.stump.feature_index, 0u);
  EXPECT_DOUBLE_EQ(fit.stump.threshold, 1.5);
}

TEST(Stump, Errors) {
  auto rows = testkit::one_dim_rows({1, 2}, {1, 1});
  EXPECT_THROW(best_stump(rows, std::vector<double>(2, 0.5)), DegenerateData);
  rows = testkit::one_dim_rows({1, 2}, {1, -1});
  EXPECT_THROW(best_stump(rows, std::vector<double>(3, 0.5)), Error);
  EXPECT_THROW(best_stump(rows, std::vector<double>{0.5, -0.5}), Error);
}

TEST(Stump, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = 2 + uniform_index(rng, 40);
    auto rows = testkit::random_rows(rng, n, trial % 2 == 0);
    rows[0].label = Label::NOOC;
    rows[1].label = Label::OOC;
    const auto m = training_matrix(rows);
    const auto w = random_weights(rng, n);
    const auto got = best_stump(m, w);
    const auto want = testkit::brute_force_stump(as_rows(m), m.y, w);
    ASSERT_EQ(got.stump.feature_index, want.feature) << "trial " << trial;
    ASSERT_EQ(got.stump.threshold, want.threshold) << "trial " << trial;
    ASSERT_EQ(got.stump.polarity, want.polarity) << "trial " << trial;
    ASSERT_NEAR(got.error, want.error, 1e-12);
  }
}

TEST(Stump, RowOrderInvariant) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 3 + uniform_index(rng, 30);
    auto rows = testkit::random_rows(rng, n, true);
    rows[0].label = Label::NOOC;
    rows[1].label = Label::OOC;
    const auto w = random_weights(rng, n);
    const auto a = best_stump(rows, w);
    auto perm = shuffled_indices(n, trial);
    std::vector<FeatureRow> prow;
    std::vector<double> pw;
    for (auto i : perm) {
      prow.push_back(rows[i]);
      pw.push_back(w[i]);
    }
    const auto b = best_stump(prow, pw);
    EXPECT_EQ(a.stump, b.stump);
    EXPECT_NEAR(a.error, b.error, 1e-12);
  }
}

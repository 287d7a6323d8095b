// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oocd/gate.hpp"
#include "oocd/random.hpp"

using namespace oocd;

TEST(Gate, BoundaryCases) {
  EXPECT_EQ(gate_by_iou(0.0), GateDecision::EarlyNOOC);
  EXPECT_EQ(gate_by_iou(0.2499), GateDecision::EarlyNOOC);
  EXPECT_EQ(gate_by_iou(0.25), GateDecision::Proceed);
  EXPECT_EQ(gate_by_iou(0.9), GateDecision::Proceed);
  EXPECT_EQ(gate_by_iou(1.0), GateDecision::Proceed);
}

TEST(Gate, OutOfRangeScores) {
  EXPECT_THROW(gate_by_iou(-0.1), OutOfRangeScore);
  EXPECT_THROW(gate_by_iou(1.2), OutOfRangeScore);
  EXPECT_THROW(gate_by_iou(std::numeric_limits<double>::quiet_NaN()), OutOfRangeScore);
}

TEST(Gate, ThresholdIsConfigurable) {
  EXPECT_EQ(gate_by_iou(0.3, {0.5}), GateDecision::EarlyNOOC);
  EXPECT_EQ(gate_by_iou(0.5, {0.5}), GateDecision::Proceed);
  EXPECT_EQ(gate_by_iou(0.0, {0.0}), GateDecision::Proceed);
  EXPECT_THROW(gate_by_iou(0.5, {1.5}), ConfigError);
}

TEST(Gate, MonotoneInScore) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    double a = uniform_unit(rng), b = uniform_unit(rng);
    if (a > b) std::swap(a, b);
    if (gate_by_iou(a) == GateDecision::Proceed) {
      EXPECT_EQ(gate_by_iou(b), GateDecision::Proceed);
    }
  }
}

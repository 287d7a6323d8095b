// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "oocd/error.hpp"

namespace oocd {

/// Image-caption coherence gate. Triplets whose coherence (IoU) score is below
/// the threshold are predicted NOOC without looking at the captions; a score
/// equal to the threshold proceeds.
struct GateConfig {
  double threshold = 0.25;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw ConfigError("iou threshold must lie in [0,1], got " + std::to_string(threshold));
    }
  }
};

enum class GateDecision { EarlyNOOC, Proceed };

inline GateDecision gate_by_iou(double iou, const GateConfig& config = {}) {
  config.validate();
  if (!(iou >= 0.0 && iou <= 1.0)) {
    throw OutOfRangeScore("iou score outside [0,1]: " + std::to_string(iou));
  }
  return iou < config.threshold ? GateDecision::EarlyNOOC : GateDecision::Proceed;
}

}  // namespace oocd

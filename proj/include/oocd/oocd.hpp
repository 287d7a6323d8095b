// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "oocd/audit.hpp"
#include "oocd/cache.hpp"
#include "oocd/classifier/adaboost.hpp"
#include "oocd/classifier/feature_row.hpp"
#include "oocd/classifier/forest.hpp"
#include "oocd/classifier/model.hpp"
#include "oocd/classifier/stump.hpp"
#include "oocd/classifier/svm.hpp"
#include "oocd/config.hpp"
#include "oocd/dataset.hpp"
#include "oocd/error.hpp"
#include "oocd/eval.hpp"
#include "oocd/features_io.hpp"
#include "oocd/gate.hpp"
#include "oocd/gpt_features.hpp"
#include "oocd/parallel.hpp"
#include "oocd/prompt.hpp"
#include "oocd/provider.hpp"
#include "oocd/random.hpp"
#include "oocd/similarity.hpp"
#include "oocd/util.hpp"

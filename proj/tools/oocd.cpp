// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#include "oocd/cli.hpp"

int main(int argc, char** argv) { return oocd::cli::run(argc, argv); }

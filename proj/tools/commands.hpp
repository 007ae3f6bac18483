// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace metok::cli {

/// Exit codes: 0 success, 1 usage error, 2 data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

int run(int argc, char** argv);

}  // namespace metok::cli

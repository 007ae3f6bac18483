// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

int main(int argc, char** argv) {
    return metok::cli::run(argc, argv);
}

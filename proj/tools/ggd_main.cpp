// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#include "ggd/cli.hpp"

int main(int argc, char** argv) { return ggd::cli_main(argc, argv); }

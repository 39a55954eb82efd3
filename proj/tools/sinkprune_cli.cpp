// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinkprune/cli.hpp"

int main(int argc, char** argv) { return sinkprune::cli::cli_main(argc, argv); }

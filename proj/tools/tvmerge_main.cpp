// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "tvmerge/cli.hpp"

int main(int argc, char** argv) {
  return tvmerge::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tvmerge {

/// Runs one command line (without the program name). Returns the process
/// exit code; diagnostics go to `err`, primary output to files or `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvmerge

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace s2sum {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDivergence = 3,
};

/// Every recognised configuration key with its default value. Config files
/// use these flat dotted keys; command-line flags override file values.
nlohmann::ordered_json default_run_config();

/// Runs one subcommand (preprocess, train, decode, eval, gen-copy,
/// gen-template, gen-highlights). Data goes to `out` unless an output path
/// is given; the resolved configuration line, logs and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace s2sum

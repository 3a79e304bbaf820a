// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_CLI_HPP
#define NLDIR_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace nldir {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on a domain error (a JSON object {"error", "message", "field"}
/// is written to `err`) and 2 on a usage error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nldir

#endif  // NLDIR_CLI_HPP

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace leod::cli {

// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;  // domain error, reported as JSON on `err`
inline constexpr int kExitUsage = 2;  // bad command line, also reported as JSON

/// Runs one `leod` invocation. `args` excludes the program name. Results go
/// to `out` (or to --out files); failures print a single JSON object
/// {"error": code, "message": text} to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace leod::cli

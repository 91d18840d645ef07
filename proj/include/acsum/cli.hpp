#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace acsum::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kDiverged = 3 };

/// Runs one `acsum` invocation. `args` excludes the program name; `in` feeds
/// `summarize` when the code comes from standard input.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace acsum::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polymerlab {

/// Runs one command line (without the program name). Returns 0 on success,
/// 2 on usage errors and 1 on runtime errors; errors are written to `err` as
/// a single JSON object {code, message, context}.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses `a,b,c` or an inclusive range `lo:hi:step`.
std::vector<double> parse_grid(const std::string& text);

/// Roughly ten points per decade in [1, depth], always ending at depth.
std::vector<int> log_checkpoints(int depth);

}  // namespace polymerlab

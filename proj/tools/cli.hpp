#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcg::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kNoSolution = 3,
  kToleranceFailure = 4,
};

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "pi", "pi/2", "3pi/4", "-pi", "2pi", "0" or a plain number of radians.
double parse_angle(const std::string& text);

}  // namespace dcg::cli

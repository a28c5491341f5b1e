#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace laftr::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

/// Entry point of the `laftr` tool; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count: hardware concurrency, capped by LAFTR_THREADS when set.
std::size_t thread_budget();

}  // namespace laftr::cli

#pragma once
#include <ostream>
#include <string>
#include <vector>

namespace slecut::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2 };

// args excludes the program name. Messages go to out / err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace slecut::cli

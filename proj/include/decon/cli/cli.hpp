#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace decon::cli {

/// Runs one command line. Returns 0 on success, 1 on domain errors and 2 on
/// usage errors. Diagnostics go to `err`.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace decon::cli

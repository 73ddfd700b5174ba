#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace robustgw::cli {

/// Runs the robustgw command line. args excludes the program name.
/// Returns 0 on success, 1 on usage errors, 2 on numerical failures.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace robustgw::cli

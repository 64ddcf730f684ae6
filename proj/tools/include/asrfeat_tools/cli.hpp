#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asrfeat::tools {

// Entry point shared by the asrfeat binary and the tests. args excludes the
// program name. Returns the process exit code: 0 iff every requested output
// was produced.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asrfeat::tools

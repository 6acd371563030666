#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bplab::cli {

/// Entry point shared by the bplab executable and the CLI tests. `args`
/// excludes the program name. Returns the process exit code.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bplab::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xrprobe::cli {

// args excludes the program name. Returns 0 on success, 1 on runtime
// errors (message on `err`), 2 on usage errors (usage text on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xrprobe::cli

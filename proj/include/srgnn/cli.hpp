#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srgnn::cli {

// Exit codes: 0 success, 1 numeric or I/O failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace srgnn::cli

#pragma once

#include <iosfwd>

namespace wids::cli {

/// Exit codes: 0 success, 1 operational failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wids::cli

#pragma once

#include <ostream>

namespace xmodal::cli {

// Runs one command line. Reports go to `out` (or --report), diagnostics and
// errors to `err`. Returns 0 on success, 1 on a runtime error, 2 on a usage
// error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xmodal::cli

#pragma once

#include <iosfwd>

namespace cosum {

// Runs the command line. Results go to `out`; failures print one JSON line
// {"error": {"code", "message"}} to `err` and return a nonzero status.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cosum

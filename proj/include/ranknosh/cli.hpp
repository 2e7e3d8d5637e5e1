#pragma once

#include <iosfwd>

namespace ranknosh {

// Entry point of the `ranknosh` tool. Returns the process exit status;
// diagnostics go to err.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ranknosh

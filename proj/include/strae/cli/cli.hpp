#pragma once

#include <iosfwd>

namespace strae::cli {

/// Entry point of the `strae` command. Returns the process exit status.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace strae::cli

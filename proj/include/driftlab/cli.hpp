#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace driftlab {

// Entry point behind the driftlab executable. Returns 0 on success, 1 on a
// usage or validation error and 2 on any other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace driftlab

#pragma once

#include <stdexcept>

namespace qbranch {

// Work was refused because it would exceed a hard size/time guard.
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A fit ended on a search boundary instead of an interior minimum.
struct unconverged_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qbranch

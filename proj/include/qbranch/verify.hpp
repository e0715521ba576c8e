#pragma once

#include <string>
#include <vector>

namespace qbranch {

struct VerifyCheck {
  std::string name;
  bool passed;
  std::string detail;  // empty when passed
};

// Built-in consistency suites over the library's own routes and reductions.
// quick trims the grids to a fast subset; inject_perturbation biases one
// oracle comparison so the run must report a named failure (self-test that
// the checks can actually fail).
std::vector<VerifyCheck> run_verification(bool quick, bool inject_perturbation);

}  // namespace qbranch

#pragma once
// Built-in self checks, runnable from the command line.  They cover the
// layers the library stands on: closed-form conic solves, the packed
// quadratic forms against a first-principles recomputation from the raw
// channel coefficients, optimizer properties (monotone descent, certified
// relaxation ceilings, substream dominance), a Monte Carlo link check of a
// designed beamformer, backend agreement, and rerun determinism.

#include <cstdint>
#include <string>
#include <vector>

#include "relaybf/harness.hpp"

namespace relaybf::verification {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // the numbers behind the verdict, or why it failed
};

// Runs the suite.  `profile` scales instance sizes, iteration budgets and
// Monte Carlo depth; `seed` drives every random draw.  A check that throws
// fails with the exception text; the run itself does not throw.
std::vector<CheckResult> run_all(harness::Profile profile, std::uint64_t seed);

}  // namespace relaybf::verification

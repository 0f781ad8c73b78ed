#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "invfilt/design.hpp"
#include "invfilt/simulation.hpp"

namespace invfilt {

/// (z - 1.5)/(z - 0.5): one non-minimum-phase zero.
LtiSystem case1_system();
/// Two-output, two-fault plant with no known input; zeros near -1.5 and 0.47.
FaultLtiSystem case2_system();
/// (z + 1)(z^2 + 1)/z^4 as a fault channel: zeros on the unit circle.
FaultLtiSystem case3_system();
/// Two-input, two-output plant with zeros at 0.6072 and 1.9928.
LtiSystem case4_system();

struct CaseOptions {
  std::optional<Index> steps;
  /// Rotation seed for the cases that use random rotations.
  std::optional<std::uint64_t> seed;
  /// Convergence tolerance; defaults to 1e-6 for Case 1 and 1e-3 otherwise.
  std::optional<double> tolerance;
  /// Replaces the default input (Cases 1, 4) or fault (Cases 2, 3) signals.
  std::optional<std::vector<Signal>> signals;
};

struct CaseRun {
  std::string label;
  FilterDesign design;
  SimTrace trace;
  double seconds = 0.0;
};

struct CaseResult {
  int case_id = 0;
  std::vector<CaseRun> runs;
};

/// Builds the case plant, designs its filter(s), simulates, and measures.
/// Case 1 runs plane rotations of 5 and 45 degrees; Case 2 runs the ramp
/// filter and, for comparison, the step filter. Throws InvalidArgument for
/// ids outside 1..4.
CaseResult run_case(int case_id, const CaseOptions& opts = {});

/// Runs several cases concurrently; results are ordered as `ids`.
std::vector<CaseResult> run_cases(const std::vector<int>& ids, const CaseOptions& opts = {});

}  // namespace invfilt

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invfilt/design.hpp"
#include "invfilt/system.hpp"

namespace invfilt {

/// One scalar test signal driving a single channel.
struct Signal {
  enum class Kind { Step, Ramp, Zero, Samples };

  Kind kind = Kind::Zero;
  Index channel = 0;
  /// Step height, or ramp slope per sample.
  double amplitude = 0.0;
  Index start = 0;
  /// Explicit values for Kind::Samples; zero past the end.
  std::vector<double> samples;

  double value_at(Index k) const;

  static Signal step(Index channel, double amplitude, Index start);
  static Signal ramp(Index channel, double slope, Index start);
  static Signal zero(Index channel);
  static Signal from_samples(Index channel, std::vector<double> values);
};

std::string_view to_string(Signal::Kind kind);
std::optional<Signal::Kind> parse_signal_kind(std::string_view text);

/// Per-sample vectors of `channels` entries, summing every signal on its channel.
std::vector<Vector> sample_signals(const std::vector<Signal>& signals, Index channels, Index steps);

struct Trajectory {
  std::vector<Vector> x;  ///< steps + 1 states
  std::vector<Vector> y;
  std::vector<Vector> u;
  std::vector<Vector> f;  ///< empty for plain systems
};

Trajectory simulate(const LtiSystem& sys, const Vector& x0, const std::vector<Signal>& inputs, Index steps);
Trajectory simulate(const FaultLtiSystem& sys, const Vector& x0, const std::vector<Signal>& inputs,
                    const std::vector<Signal>& faults, Index steps);

/// Controllable canonical realization of num(z)/den(z), coefficients highest
/// power first. Equal degrees give a direct feedthrough. Throws
/// ImproperTransferFunction when deg num > deg den.
LtiSystem realize_tf(const std::vector<double>& num, const std::vector<double>& den);

struct SimTrace {
  std::string label;
  Index delay = 0;
  std::vector<Index> k;            ///< sample at which the estimate was produced
  std::vector<Vector> y;           ///< y(k)
  std::vector<Vector> truth;       ///< true signal at k - delay
  std::vector<Vector> estimate;
  std::vector<Vector> abs_err;
  double steady_state_err = 0.0;
  std::optional<Index> convergence_step;
};

struct TraceMetrics {
  /// Largest error over the final 10% of the trace.
  double steady_state_err = 0.0;
  /// First k from which every later error stays below the tolerance.
  std::optional<Index> convergence_step;
};

TraceMetrics metrics(const SimTrace& trace, double tolerance);

/// Runs a designed filter over a simulated trajectory. The estimated signal
/// is the input for input kinds and the fault for fault kinds.
SimTrace run_filter(const FilterDesign& design, const Trajectory& traj, double tolerance = 1e-6,
                    std::string label = {});

}  // namespace invfilt

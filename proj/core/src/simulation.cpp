#include "invfilt/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "invfilt/error.hpp"
#include "invfilt/runtime.hpp"

namespace invfilt {

double Signal::value_at(Index k) const {
  switch (kind) {
    case Kind::Step: return k >= start ? amplitude : 0.0;
    case Kind::Ramp: return k >= start ? amplitude * static_cast<double>(k - start) : 0.0;
    case Kind::Zero: return 0.0;
    case Kind::Samples:
      return k >= 0 && k < static_cast<Index>(samples.size()) ? samples[static_cast<std::size_t>(k)] : 0.0;
  }
  return 0.0;
}

Signal Signal::step(Index channel, double amplitude, Index start) {
  return {Kind::Step, channel, amplitude, start, {}};
}
Signal Signal::ramp(Index channel, double slope, Index start) { return {Kind::Ramp, channel, slope, start, {}}; }
Signal Signal::zero(Index channel) { return {Kind::Zero, channel, 0.0, 0, {}}; }
Signal Signal::from_samples(Index channel, std::vector<double> values) {
  return {Kind::Samples, channel, 0.0, 0, std::move(values)};
}

std::string_view to_string(Signal::Kind kind) {
  switch (kind) {
    case Signal::Kind::Step: return "step";
    case Signal::Kind::Ramp: return "ramp";
    case Signal::Kind::Zero: return "zero";
    case Signal::Kind::Samples: return "samples";
  }
  return "unknown";
}

std::optional<Signal::Kind> parse_signal_kind(std::string_view text) {
  for (auto k : {Signal::Kind::Step, Signal::Kind::Ramp, Signal::Kind::Zero, Signal::Kind::Samples}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

std::vector<Vector> sample_signals(const std::vector<Signal>& signals, Index channels, Index steps) {
  for (const Signal& s : signals) {
    if (s.channel < 0 || s.channel >= channels) {
      throw Error(ErrorCode::DimensionMismatch, "signal channel " + std::to_string(s.channel) +
                                                    " out of range for " + std::to_string(channels) + " channels");
    }
  }
  std::vector<Vector> out(static_cast<std::size_t>(steps), Vector::Zero(channels));
  for (Index k = 0; k < steps; ++k) {
    for (const Signal& s : signals) out[static_cast<std::size_t>(k)](s.channel) += s.value_at(k);
  }
  return out;
}

namespace {

Trajectory run(const LtiSystem& sys, const Matrix* L, const Matrix* E, const Vector& x0,
               std::vector<Vector> u, std::vector<Vector> f, Index steps) {
  const Index n = sys.states();
  if (x0.size() != n) throw Error(ErrorCode::DimensionMismatch, "x0 has the wrong length");
  Trajectory t;
  t.x.reserve(static_cast<std::size_t>(steps + 1));
  t.y.reserve(static_cast<std::size_t>(steps));
  t.x.push_back(x0);
  for (Index k = 0; k < steps; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const Vector& x = t.x.back();
    Vector y = sys.C * x + sys.D * u[ku];
    Vector xn = sys.A * x + sys.B * u[ku];
    if (L) {
      y += *E * f[ku];
      xn += *L * f[ku];
    }
    t.y.push_back(std::move(y));
    t.x.push_back(std::move(xn));
  }
  t.u = std::move(u);
  t.f = std::move(f);
  return t;
}

}  // namespace

Trajectory simulate(const LtiSystem& sys, const Vector& x0, const std::vector<Signal>& inputs, Index steps) {
  sys.check_dimensions();
  return run(sys, nullptr, nullptr, x0, sample_signals(inputs, sys.inputs(), steps), {}, steps);
}

Trajectory simulate(const FaultLtiSystem& sys, const Vector& x0, const std::vector<Signal>& inputs,
                    const std::vector<Signal>& faults, Index steps) {
  sys.check_dimensions();
  return run(sys.base, &sys.L, &sys.E, x0, sample_signals(inputs, sys.base.inputs(), steps),
             sample_signals(faults, sys.faults(), steps), steps);
}

LtiSystem realize_tf(const std::vector<double>& num_in, const std::vector<double>& den_in) {
  auto trim = [](std::vector<double> p) {
    auto it = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
    p.erase(p.begin(), it);
    return p;
  };
  std::vector<double> num = trim(num_in);
  std::vector<double> den = trim(den_in);
  if (den.empty()) throw Error(ErrorCode::ImproperTransferFunction, "denominator is zero");
  if (num.size() > den.size()) {
    throw Error(ErrorCode::ImproperTransferFunction, "numerator degree exceeds denominator degree");
  }
  const auto n = static_cast<Index>(den.size()) - 1;
  if (n == 0) throw Error(ErrorCode::ImproperTransferFunction, "a static gain has no state-space realization");
  const double lead = den[0];
  for (double& c : den) c /= lead;
  for (double& c : num) c /= lead;
  // Pad the numerator to n + 1 coefficients and split off the feedthrough.
  std::vector<double> b(static_cast<std::size_t>(n + 1) - num.size(), 0.0);
  b.insert(b.end(), num.begin(), num.end());
  const double d = b[0];
  for (Index i = 1; i <= n; ++i) b[static_cast<std::size_t>(i)] -= d * den[static_cast<std::size_t>(i)];

  LtiSystem sys;
  sys.A = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) sys.A(i, i + 1) = 1.0;
  for (Index j = 0; j < n; ++j) sys.A(n - 1, j) = -den[static_cast<std::size_t>(n - j)];
  sys.B = Matrix::Zero(n, 1);
  sys.B(n - 1, 0) = 1.0;
  sys.C = Matrix(1, n);
  for (Index j = 0; j < n; ++j) sys.C(0, j) = b[static_cast<std::size_t>(n - j)];
  sys.D = Matrix::Constant(1, 1, d);
  return sys;
}

TraceMetrics metrics(const SimTrace& trace, double tolerance) {
  TraceMetrics m;
  const std::size_t n = trace.abs_err.size();
  if (n == 0) return m;
  auto worst = [&](std::size_t i) { return trace.abs_err[i].size() ? trace.abs_err[i].maxCoeff() : 0.0; };
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  for (std::size_t i = n - tail; i < n; ++i) m.steady_state_err = std::max(m.steady_state_err, worst(i));
  std::size_t first_ok = n;
  for (std::size_t i = n; i-- > 0;) {
    if (!(worst(i) < tolerance)) break;
    first_ok = i;
  }
  if (first_ok < n) m.convergence_step = trace.k[first_ok];
  return m;
}

SimTrace run_filter(const FilterDesign& design, const Trajectory& traj, double tolerance, std::string label) {
  const bool fault = is_fault_kind(design.kind);
  const std::vector<Vector>& truth = fault ? traj.f : traj.u;
  if (fault && traj.f.size() != traj.y.size()) {
    throw Error(ErrorCode::InvalidArgument, "fault filter needs a trajectory with a fault signal");
  }
  FilterState fs(std::make_shared<const FilterDesign>(design));
  SimTrace t;
  t.label = std::move(label);
  t.delay = design.delay();
  for (std::size_t k = 0; k < traj.y.size(); ++k) {
    const auto est = fault ? fs.push_sample(traj.y[k], traj.u[k]) : fs.push_sample(traj.y[k]);
    if (!est) continue;
    const Vector& tr = truth[static_cast<std::size_t>(est->k_estimated)];
    t.k.push_back(static_cast<Index>(k));
    t.y.push_back(traj.y[k]);
    t.truth.push_back(tr);
    t.estimate.push_back(est->value);
    t.abs_err.push_back((est->value - tr).cwiseAbs());
  }
  const TraceMetrics m = metrics(t, tolerance);
  t.steady_state_err = m.steady_state_err;
  t.convergence_step = m.convergence_step;
  return t;
}

}  // namespace invfilt

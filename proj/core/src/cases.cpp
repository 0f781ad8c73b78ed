#include "invfilt/cases.hpp"

#include <chrono>
#include <future>
#include <numbers>

#include "invfilt/error.hpp"

namespace invfilt {

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  const auto nr = static_cast<Index>(r.size());
  const auto nc = static_cast<Index>(r.begin()->size());
  Matrix m(nr, nc);
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

template <class Sys>
CaseRun timed_run(const std::string& label, const Sys& sys, const DesignOptions& d, const Trajectory& traj,
                  double tol) {
  const auto t0 = std::chrono::steady_clock::now();
  CaseRun run;
  run.label = label;
  run.design = design(sys, d);
  run.trace = run_filter(run.design, traj, tol, label);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

DesignOptions seeded(FilterKind kind, std::uint64_t seed, std::optional<Spectrum> poles = std::nullopt) {
  DesignOptions d;
  d.kind = kind;
  d.rotation.mode = RandomSeeded{seed, 20};
  d.poles = std::move(poles);
  return d;
}

}  // namespace

LtiSystem case1_system() {
  return {Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, -1.0),
          Matrix::Constant(1, 1, 1.0)};
}

FaultLtiSystem case2_system() {
  FaultLtiSystem s;
  s.base.A = rows({{0, 0, 0, 0.1}, {1, 0, 0, -0.09}, {0, 1, 0, 0.28}, {0, 0, 1, 0.07}});
  s.base.C = rows({{-0.46, -0.35, -0.1, 0.14}, {0.59, -0.52, -0.01, 0.04}});
  s.base.B = Matrix::Zero(4, 0);
  s.base.D = Matrix::Zero(2, 0);
  s.L = rows({{1, -0.8}, {0, -2.05}, {0, 5.13}, {0, 1.78}});
  s.E = Matrix::Zero(2, 2);
  return s;
}

FaultLtiSystem case3_system() {
  const LtiSystem r = realize_tf({1, 1, 1, 1}, {1, 0, 0, 0, 0});
  FaultLtiSystem s;
  s.base.A = r.A;
  s.base.C = r.C;
  s.base.B = Matrix::Zero(r.states(), 0);
  s.base.D = Matrix::Zero(r.outputs(), 0);
  s.L = r.B;
  s.E = r.D;
  return s;
}

LtiSystem case4_system() {
  LtiSystem s;
  s.A = rows({{0.6, -0.3, 0, 0}, {0.1, 1, 0, 0}, {-0.4, -1.5, 0.4, -0.3}, {0.3, 1.1, 0.2, 0.9}});
  s.B = rows({{0, 0.4}, {0, 0}, {0, -0.1}, {0.1, 0.1}});
  s.C = rows({{1, 2, 3, 4}, {2, 1, 5, 6}});
  s.D = Matrix::Zero(2, 2);
  return s;
}

CaseResult run_case(int case_id, const CaseOptions& opts) {
  CaseResult res;
  res.case_id = case_id;
  const double tol = opts.tolerance.value_or(case_id == 1 ? 1e-6 : 1e-3);
  switch (case_id) {
    case 1: {
      const LtiSystem sys = case1_system();
      const auto sig = opts.signals.value_or(std::vector<Signal>{Signal::step(0, 1.0, 10)});
      const Trajectory traj = simulate(sys, Vector::Zero(1), sig, opts.steps.value_or(80));
      for (double deg : {5.0, 45.0}) {
        DesignOptions d;
        d.kind = FilterKind::Step;
        d.rotation.mode = PlaneAngle{0, 1, deg * std::numbers::pi / 180.0};
        d.poles = Spectrum{0.1, -0.1};
        res.runs.push_back(timed_run("case1_theta" + std::to_string(static_cast<int>(deg)), sys, d, traj, tol));
      }
      break;
    }
    case 2: {
      const FaultLtiSystem sys = case2_system();
      const auto sig = opts.signals.value_or(std::vector<Signal>{Signal::step(0, 1.0, 20), Signal::ramp(1, 0.02, 20)});
      const Trajectory traj = simulate(sys, Vector::Zero(4), {}, sig, opts.steps.value_or(200));
      const std::uint64_t seed = opts.seed.value_or(1);
      res.runs.push_back(timed_run("case2_ramp", sys, seeded(FilterKind::FaultRamp, seed), traj, tol));
      res.runs.push_back(timed_run("case2_step", sys, seeded(FilterKind::FaultStep, seed), traj, tol));
      break;
    }
    case 3: {
      const FaultLtiSystem sys = case3_system();
      const auto sig = opts.signals.value_or(std::vector<Signal>{Signal::step(0, 1.0, 20)});
      const Trajectory traj = simulate(sys, Vector::Zero(4), {}, sig, opts.steps.value_or(150));
      const Spectrum poles{-0.5, -0.3571, -0.2143, -0.0714, 0.0714, 0.2143, 0.3571, 0.5};
      res.runs.push_back(
          timed_run("case3_step", sys, seeded(FilterKind::FaultStep, opts.seed.value_or(1), poles), traj, tol));
      break;
    }
    case 4: {
      const LtiSystem sys = case4_system();
      const auto sig = opts.signals.value_or(std::vector<Signal>{Signal::step(0, 1.0, 20), Signal::step(1, 1.0, 60)});
      const Trajectory traj = simulate(sys, Vector::Zero(4), sig, opts.steps.value_or(200));
      res.runs.push_back(timed_run("case4_step", sys, seeded(FilterKind::Step, opts.seed.value_or(1)), traj, tol));
      break;
    }
    default:
      throw Error(ErrorCode::InvalidArgument, "case id must be 1..4, got " + std::to_string(case_id));
  }
  return res;
}

std::vector<CaseResult> run_cases(const std::vector<int>& ids, const CaseOptions& opts) {
  std::vector<std::future<CaseResult>> jobs;
  jobs.reserve(ids.size());
  for (int id : ids) jobs.push_back(std::async(std::launch::async, [id, &opts] { return run_case(id, opts); }));
  std::vector<CaseResult> out;
  out.reserve(ids.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace invfilt

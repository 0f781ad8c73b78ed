#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "generators.hpp"
#include "invfilt/cases.hpp"
#include "invfilt/simulation.hpp"
#include "test_util.hpp"

namespace invfilt {
namespace {

using testing::mat;
using testing::near;
using testing::throws_code;

// Series coefficients of num/den in powers of 1/z, by long division.
std::vector<double> long_division(std::vector<double> num, const std::vector<double>& den, std::size_t terms) {
  const std::size_t lead = den.size() - num.size();
  std::vector<double> rem(den.size() + terms, 0.0);
  for (std::size_t i = 0; i < num.size(); ++i) rem[lead + i] = num[i];
  std::vector<double> out(terms, 0.0);
  for (std::size_t k = 0; k < terms; ++k) {
    const double q = rem[k] / den[0];
    out[k] = q;
    for (std::size_t i = 0; i < den.size(); ++i) rem[k + i] -= q * den[i];
  }
  return out;
}

std::vector<double> impulse_response(const LtiSystem& s, Index steps) {
  const Trajectory t = simulate(s, Vector::Zero(s.states()), {Signal::from_samples(0, {1.0})}, steps);
  std::vector<double> h;
  for (const Vector& y : t.y) h.push_back(y(0));
  return h;
}

TEST(Signal, Shapes) {
  EXPECT_EQ(Signal::step(0, 2.0, 3).value_at(2), 0.0);
  EXPECT_EQ(Signal::step(0, 2.0, 3).value_at(3), 2.0);
  EXPECT_EQ(Signal::ramp(0, 0.5, 2).value_at(2), 0.0);
  EXPECT_EQ(Signal::ramp(0, 0.5, 2).value_at(6), 2.0);
  EXPECT_EQ(Signal::zero(0).value_at(7), 0.0);
  EXPECT_EQ(Signal::from_samples(0, {1, 2}).value_at(1), 2.0);
  EXPECT_EQ(Signal::from_samples(0, {1, 2}).value_at(5), 0.0);
}

TEST(Signal, KindNamesRoundTrip) {
  for (auto k : {Signal::Kind::Step, Signal::Kind::Ramp, Signal::Kind::Zero, Signal::Kind::Samples}) {
    EXPECT_EQ(parse_signal_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_signal_kind("sine"));
}

TEST(Signal, SamplingSumsPerChannel) {
  const auto u = sample_signals({Signal::step(1, 1.0, 0), Signal::step(1, 2.0, 2), Signal::ramp(0, 1.0, 0)}, 2, 4);
  ASSERT_EQ(u.size(), 4u);
  EXPECT_TRUE(near(u[3], (Vector(2) << 3.0, 3.0).finished(), 0.0));
  EXPECT_TRUE(throws_code([] { sample_signals({Signal::step(2, 1.0, 0)}, 2, 4); }, ErrorCode::DimensionMismatch));
}

TEST(Simulate, CaseOneHandRecursion) {
  const Trajectory t = simulate(case1_system(), Vector::Zero(1), {Signal::step(0, 1.0, 0)}, 3);
  EXPECT_DOUBLE_EQ(t.y[0](0), 1.0);
  EXPECT_DOUBLE_EQ(t.y[1](0), 0.0);
  EXPECT_DOUBLE_EQ(t.x[1](0), 1.0);
  EXPECT_EQ(t.x.size(), 4u);
}

TEST(Simulate, ZeroInZeroOut) {
  const Trajectory t = simulate(case4_system(), Vector::Zero(4), {}, 50);
  for (const Vector& y : t.y) EXPECT_EQ(y, Vector::Zero(2));
}

TEST(Simulate, Deterministic) {
  const Vector x0 = (Vector(4) << 1, -1, 0.5, 2).finished();
  const auto a = simulate(case4_system(), x0, {Signal::ramp(0, 0.1, 3)}, 40);
  const auto b = simulate(case4_system(), x0, {Signal::ramp(0, 0.1, 3)}, 40);
  for (std::size_t k = 0; k < a.y.size(); ++k) EXPECT_EQ(a.y[k], b.y[k]);
}

TEST(Simulate, FaultChannelEntersThroughLAndE) {
  const FaultLtiSystem s{LtiSystem{mat(1, 1, {0.5}), Matrix::Zero(1, 0), mat(1, 1, {1}), Matrix::Zero(1, 0)},
                         mat(1, 1, {2}), mat(1, 1, {3})};
  const Trajectory t = simulate(s, Vector::Zero(1), {}, {Signal::step(0, 1.0, 0)}, 3);
  EXPECT_DOUBLE_EQ(t.y[0](0), 3.0);
  EXPECT_DOUBLE_EQ(t.y[1](0), 2.0 + 3.0);
  EXPECT_EQ(t.f.size(), 3u);
}

TEST(Simulate, RejectsWrongInitialState) {
  EXPECT_TRUE(throws_code([] { simulate(case1_system(), Vector::Zero(2), {}, 3); }, ErrorCode::DimensionMismatch));
}

TEST(RealizeTf, UnitDelay) {
  const LtiSystem s = realize_tf({1}, {1, 0});
  EXPECT_TRUE(near(s.A, mat(1, 1, {0}), 0.0));
  EXPECT_TRUE(near(s.B, mat(1, 1, {1}), 0.0));
  EXPECT_TRUE(near(s.C, mat(1, 1, {1}), 0.0));
  EXPECT_TRUE(near(s.D, mat(1, 1, {0}), 0.0));
}

TEST(RealizeTf, FourFoldDelayChannel) {
  const LtiSystem s = realize_tf({1, 1, 1, 1}, {1, 0, 0, 0, 0});
  EXPECT_EQ(s.states(), 4);
  const auto h = impulse_response(s, 12);
  const auto oracle = long_division({1, 1, 1, 1}, {1, 0, 0, 0, 0}, 12);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_NEAR(h[k], oracle[k], 1e-10) << k;
  EXPECT_EQ(h, (std::vector<double>{0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0}));
  auto z = invariant_zeros(s).zeros;
  ASSERT_EQ(z.size(), 3u);
  EXPECT_LT(spectrum_distance(z, {Complex(-1, 0), Complex(0, 1), Complex(0, -1)}), 1e-6);
}

TEST(RealizeTf, BiproperSplitsFeedthrough) {
  const LtiSystem s = realize_tf({1, -1.5}, {1, -0.5});
  EXPECT_DOUBLE_EQ(s.D(0, 0), 1.0);
  const auto z = invariant_zeros(s).zeros;
  ASSERT_EQ(z.size(), 1u);
  EXPECT_NEAR(z[0].real(), 1.5, 1e-9);
}

TEST(RealizeTf, ImpulseMatchesLongDivisionOnRandomProperFractions) {
  testing::Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 5;
    const int deg_num = t % (n + 1);
    std::vector<double> den{1.0}, num;
    for (int i = 0; i < n; ++i) den.push_back(0.3 * testing::gaussian(rng, 1, 1)(0, 0));
    for (int i = 0; i <= deg_num; ++i) num.push_back(testing::gaussian(rng, 1, 1)(0, 0));
    const LtiSystem s = realize_tf(num, den);
    const auto h = impulse_response(s, 3 * n);
    const auto oracle = long_division(num, den, static_cast<std::size_t>(3 * n));
    for (int k = 0; k < 3 * n; ++k) EXPECT_NEAR(h[static_cast<std::size_t>(k)], oracle[static_cast<std::size_t>(k)], 1e-10);
  }
}

TEST(RealizeTf, NormalizesNonMonicDenominator) {
  const LtiSystem s = realize_tf({2}, {2, -1});
  EXPECT_NEAR(s.A(0, 0), 0.5, 1e-15);
  const auto h = impulse_response(s, 5);
  const auto oracle = long_division({2}, {2, -1}, 5);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(h[k], oracle[k], 1e-12);
}

TEST(RealizeTf, RejectsImproper) {
  EXPECT_TRUE(throws_code([] { realize_tf({1, 0, 0}, {1, 0}); }, ErrorCode::ImproperTransferFunction));
}

SimTrace synthetic(const std::vector<double>& err) {
  SimTrace t;
  t.delay = 2;
  for (std::size_t i = 0; i < err.size(); ++i) {
    t.k.push_back(static_cast<Index>(i) + 2);
    t.y.push_back(Vector::Zero(1));
    t.truth.push_back(Vector::Zero(1));
    t.estimate.push_back(Vector::Constant(1, err[i]));
    t.abs_err.push_back(Vector::Constant(1, std::abs(err[i])));
  }
  return t;
}

TEST(Metrics, PerfectTrace) {
  const TraceMetrics m = metrics(synthetic(std::vector<double>(20, 0.0)), 1e-6);
  EXPECT_EQ(m.steady_state_err, 0.0);
  EXPECT_EQ(m.convergence_step, 2);
}

TEST(Metrics, ConstantError) {
  const TraceMetrics m = metrics(synthetic(std::vector<double>(20, 0.5)), 1e-6);
  EXPECT_EQ(m.steady_state_err, 0.5);
  EXPECT_FALSE(m.convergence_step);
}

TEST(Metrics, ConvergenceIsFirstPermanentEntry) {
  std::vector<double> e(30, 0.0);
  e[3] = 1.0;
  e[10] = 1e-3;
  const TraceMetrics m = metrics(synthetic(e), 1e-6);
  EXPECT_EQ(m.convergence_step, 13);
  EXPECT_EQ(m.steady_state_err, 0.0);
}

TEST(RunFilter, ZeroInputGivesZeroEstimates) {
  DesignOptions o;
  o.rotation.mode = PlaneAngle{0, 1, std::numbers::pi / 4};
  o.poles = Spectrum{0.1, -0.1};
  const FilterDesign d = design(case1_system(), o);
  const SimTrace t = run_filter(d, simulate(case1_system(), Vector::Zero(1), {}, 30));
  ASSERT_EQ(t.k.size(), 28u);
  for (const Vector& e : t.estimate) EXPECT_EQ(e, Vector::Zero(1));
}

TEST(Cases, InvalidIdRejected) {
  EXPECT_TRUE(throws_code([] { run_case(5); }, ErrorCode::InvalidArgument));
}

TEST(Cases, CaseOneBothAnglesConverge) {
  const CaseResult r = run_case(1);
  ASSERT_EQ(r.runs.size(), 2u);
  for (const CaseRun& run : r.runs) {
    EXPECT_EQ(run.trace.delay, 2);
    ASSERT_TRUE(run.trace.convergence_step) << run.label;
    EXPECT_LE(*run.trace.convergence_step, 40) << run.label;
    EXPECT_LT(run.trace.steady_state_err, 1e-6);
  }
  const double g5 = r.runs[0].design.gain_norm(), g45 = r.runs[1].design.gain_norm();
  EXPECT_GT(g5, 5.0 * g45);
}

TEST(Cases, CaseTwoTracksBothFaultChannels) {
  const CaseResult r = run_case(2);
  ASSERT_EQ(r.runs.size(), 2u);
  const CaseRun& ramp = r.runs[0];
  EXPECT_EQ(ramp.design.kind, FilterKind::FaultRamp);
  EXPECT_EQ(ramp.trace.delay, 9);
  EXPECT_LT(ramp.trace.steady_state_err, 1e-3);
  // The step-type filter keeps a bias on the ramp channel; the ramp kind does not.
  const CaseRun& step = r.runs[1];
  EXPECT_EQ(step.design.kind, FilterKind::FaultStep);
  EXPECT_EQ(step.trace.delay, 8);
  EXPECT_GT(step.trace.steady_state_err, 10.0 * ramp.trace.steady_state_err);
}

TEST(Cases, CaseThreeUnitCircleZeros) {
  const CaseResult r = run_case(3);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_LT(r.runs[0].trace.steady_state_err, 1e-3);
}

TEST(Cases, CaseFourDelayEight) {
  const CaseResult r = run_case(4);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.runs[0].trace.delay, 8);
  EXPECT_LT(r.runs[0].trace.steady_state_err, 1e-3);
}

TEST(Cases, EstimateEqualsDelayedTruthAfterConvergence) {
  for (const CaseResult& r : run_cases({1, 4})) {
    for (const CaseRun& run : r.runs) {
      ASSERT_TRUE(run.trace.convergence_step);
      for (std::size_t i = 0; i < run.trace.k.size(); ++i) {
        if (run.trace.k[i] < *run.trace.convergence_step) continue;
        EXPECT_LT((run.trace.estimate[i] - run.trace.truth[i]).cwiseAbs().maxCoeff(), 1e-3);
      }
    }
  }
}

TEST(Cases, ParallelMatchesSequential) {
  const auto batch = run_cases({4, 1, 3});
  ASSERT_EQ(batch.size(), 3u);
  EXPECT_EQ(batch[0].case_id, 4);
  EXPECT_EQ(batch[1].case_id, 1);
  const CaseResult single = run_case(3);
  ASSERT_EQ(single.runs.size(), batch[2].runs.size());
  for (std::size_t i = 0; i < single.runs[0].trace.estimate.size(); ++i) {
    EXPECT_EQ(single.runs[0].trace.estimate[i], batch[2].runs[0].trace.estimate[i]);
  }
}

TEST(Cases, OverridesApply) {
  CaseOptions o;
  o.steps = 50;
  o.signals = std::vector<Signal>{Signal::step(0, 2.0, 5)};
  const CaseResult r = run_case(1, o);
  EXPECT_EQ(r.runs[0].trace.k.back(), 49);
  EXPECT_NEAR(r.runs[1].trace.estimate.back()(0), 2.0, 1e-6);
}

}  // namespace
}  // namespace invfilt

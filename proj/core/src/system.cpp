#include "invfilt/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "invfilt/error.hpp"

namespace invfilt {

namespace {

void expect_shape(const Matrix& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  require_finite(m, name);
}

bool full_column_rank(const Matrix& m, const ToleranceConfig& tol) {
  return m.cols() > 0 && numerical_rank(m, tol) == m.cols();
}

ValidationReport observability_report(const Matrix& A, const Matrix& C, const ToleranceConfig& tol) {
  ValidationReport r;
  r.states = A.rows();
  r.observability_rank = numerical_rank(observability_stack(A, C, std::max<Index>(A.rows(), 1)), tol);
  r.observable = r.observability_rank == r.states;
  if (!r.observable) {
    r.violations.push_back("(A, C) is not observable: rank " + std::to_string(r.observability_rank) +
                           " < " + std::to_string(r.states));
  }
  return r;
}

// Finite eigenvalues of the pencil ([A, -G; C, -F], diag(I, 0)) when F is
// invertible: exactly n of them are finite.
Spectrum finite_pencil_eigenvalues(const Matrix& A, const Matrix& G, const Matrix& C, const Matrix& F) {
  const Index n = A.rows();
  const Index m = G.cols();
  if (n == 0) return {};
  Matrix pencil(n + m, n + m);
  pencil << A, -G, C, -F;
  Matrix mass = Matrix::Zero(n + m, n + m);
  mass.topLeftCorner(n, n).setIdentity();
  Eigen::GeneralizedEigenSolver<Matrix> qz(pencil, mass, false);
  if (qz.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidMatrix, "QZ iteration did not converge on the zero pencil");
  }
  const auto alphas = qz.alphas();
  const auto betas = qz.betas();
  std::vector<Index> order(static_cast<std::size_t>(n + m));
  std::iota(order.begin(), order.end(), Index{0});
  auto finiteness = [&](Index i) {
    const double a = std::abs(alphas(i));
    const double b = std::abs(betas(i));
    return b / (a + b + std::numeric_limits<double>::min());
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return finiteness(i) > finiteness(j); });
  Spectrum zeros;
  for (Index k = 0; k < n; ++k) {
    const Index i = order[static_cast<std::size_t>(k)];
    zeros.push_back(alphas(i) / betas(i));
  }
  return zeros;
}

// Zeros of a square system. The structure at infinity is removed first by
// repeated output/state compressions until the feedthrough is invertible;
// every compression keeps the finite zeros intact.
Spectrum square_system_zeros(Matrix A, Matrix G, Matrix C, Matrix F, const ToleranceConfig& tol) {
  const Index m = G.cols();
  while (true) {
    const Index n = A.rows();
    if (n == 0) return {};
    const Index p = C.rows();
    if (p != m) {
      throw Error(ErrorCode::AssumptionViolated, "transfer matrix is not of full normal rank");
    }
    Eigen::JacobiSVD<Matrix> fsvd(F, Eigen::ComputeFullU);
    const Vector& fsv = fsvd.singularValues();
    const double fmax = std::max({fsv.size() > 0 ? fsv(0) : 0.0, A.norm(), G.norm(), C.norm()});
    // Structural decisions use a looser cut than plain rank: entries that are
    // exactly zero in theory come back at a few ulps after the rotations.
    const double fcut = std::max(rank_threshold(fmax, F.rows() + n, F.cols() + n, tol), 1e-11 * fmax);
    Index r = 0;
    for (Index i = 0; i < fsv.size(); ++i) {
      if (fsv(i) > fcut) ++r;
    }
    if (r == p) return finite_pencil_eigenvalues(A, G, C, F);

    const Matrix ut = fsvd.matrixU().transpose();
    const Matrix c_rot = ut * C;
    const Matrix f_rot = ut * F;
    const Matrix c1 = c_rot.topRows(r);
    const Matrix f1 = f_rot.topRows(r);
    const Matrix c2 = c_rot.bottomRows(p - r);

    Eigen::JacobiSVD<Matrix> csvd(c2, Eigen::ComputeFullV);
    const Vector& csv = csvd.singularValues();
    Index rho = 0;
    for (Index i = 0; i < csv.size(); ++i) {
      if (csv(i) > fcut) ++rho;
    }
    if (rho == 0) {
      throw Error(ErrorCode::AssumptionViolated, "transfer matrix is not of full normal rank");
    }
    // Reorder so the last rho state coordinates carry C2's row space.
    const Matrix& vc = csvd.matrixV();
    Matrix v(n, n);
    v << vc.rightCols(n - rho), vc.leftCols(rho);
    const Matrix at = v.transpose() * A * v;
    const Matrix gt = v.transpose() * G;
    const Matrix ct = c1 * v;
    const Index n1 = n - rho;

    Matrix a_next = at.topLeftCorner(n1, n1);
    Matrix g_next = gt.topRows(n1);
    Matrix c_next(rho + r, n1);
    c_next << at.bottomLeftCorner(rho, n1), ct.leftCols(n1);
    Matrix f_next(rho + r, m);
    f_next << gt.bottomRows(rho), f1;
    A = std::move(a_next);
    G = std::move(g_next);
    C = std::move(c_next);
    F = std::move(f_next);
  }
}

double rosenbrock_rank_gap(const Matrix& A, const Matrix& G, const Matrix& C, const Matrix& F, Complex z) {
  const Index n = A.rows();
  const Index m = G.cols();
  const Index l = C.rows();
  Eigen::MatrixXcd r(n + l, n + m);
  r.topLeftCorner(n, n) = z * Eigen::MatrixXcd::Identity(n, n) - A.cast<Complex>();
  r.topRightCorner(n, m) = G.cast<Complex>();
  r.bottomLeftCorner(l, n) = -C.cast<Complex>();
  r.bottomRightCorner(l, m) = F.cast<Complex>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(r);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) / std::max(sv(0), 1.0);
}

}  // namespace

void LtiSystem::check_dimensions() const {
  const Index n = A.rows();
  if (n == 0) throw Error(ErrorCode::DimensionMismatch, "A must have at least one state");
  expect_shape(A, n, n, "A");
  expect_shape(B, n, B.cols(), "B");
  expect_shape(C, C.rows(), n, "C");
  if (C.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "C must have at least one output");
  expect_shape(D, C.rows(), B.cols(), "D");
}

void FaultLtiSystem::check_dimensions() const {
  base.check_dimensions();
  const Index n = base.states();
  if (L.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "L must have at least one fault column");
  expect_shape(L, n, L.cols(), "L");
  expect_shape(E, base.outputs(), L.cols(), "E");
}

void ValidationReport::require() const {
  if (ok()) return;
  const ErrorCode code = observable ? ErrorCode::AssumptionViolated : ErrorCode::ObservabilityViolated;
  std::string msg;
  for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
  throw Error(code, msg);
}

ValidationReport validate(const LtiSystem& sys, const ToleranceConfig& tol) {
  sys.check_dimensions();
  ValidationReport r = observability_report(sys.A, sys.C, tol);
  r.rank_condition = full_column_rank(sys.B, tol) || full_column_rank(sys.D, tol);
  if (!r.rank_condition) r.violations.push_back("neither B nor D has full column rank");
  r.enough_outputs = sys.outputs() >= sys.inputs();
  if (!r.enough_outputs) r.violations.push_back("fewer outputs than inputs");
  return r;
}

ValidationReport validate(const FaultLtiSystem& sys, const ToleranceConfig& tol) {
  sys.check_dimensions();
  ValidationReport r = observability_report(sys.base.A, sys.base.C, tol);
  r.rank_condition = full_column_rank(sys.L, tol) || full_column_rank(sys.E, tol);
  if (!r.rank_condition) r.violations.push_back("neither L nor E has full column rank");
  r.enough_outputs = sys.base.outputs() >= sys.faults();
  if (!r.enough_outputs) r.violations.push_back("fewer outputs than fault channels");
  return r;
}

Matrix observability_stack(const Matrix& A, const Matrix& C, Index blocks) {
  const Index l = C.rows();
  Matrix out(blocks * l, A.cols());
  Matrix row = C;
  for (Index j = 0; j < blocks; ++j) {
    out.middleRows(j * l, l) = row;
    row = row * A;
  }
  return out;
}

Matrix toeplitz_stack(const Matrix& A, const Matrix& G, const Matrix& C, const Matrix& feedthrough,
                      Index blocks) {
  const Index l = C.rows();
  const Index q = G.cols();
  // markov[d] is the block on the d-th subdiagonal.
  std::vector<Matrix> markov;
  markov.reserve(static_cast<std::size_t>(blocks));
  markov.push_back(feedthrough);
  Matrix ca = C;
  for (Index d = 1; d < blocks; ++d) {
    markov.push_back(ca * G);
    ca = ca * A;
  }
  Matrix out = Matrix::Zero(blocks * l, blocks * q);
  for (Index i = 0; i < blocks; ++i) {
    for (Index j = 0; j <= i; ++j) {
      out.block(i * l, j * q, l, q) = markov[static_cast<std::size_t>(i - j)];
    }
  }
  return out;
}

Matrix first_sample_selector(Index width, Index blocks) {
  Matrix s = Matrix::Zero(width, width * blocks);
  s.leftCols(width).setIdentity();
  return s;
}

StackedOperators build_stacked(const LtiSystem& sys, Index horizon, const ToleranceConfig& tol) {
  validate(sys, tol).require();
  if (horizon < sys.states()) {
    throw Error(ErrorCode::HorizonTooShort,
                "horizon " + std::to_string(horizon) + " < state dimension " + std::to_string(sys.states()));
  }
  StackedOperators st;
  st.horizon = horizon;
  const Index w = 2 * horizon;
  st.C2M = observability_stack(sys.A, sys.C, w);
  st.D2M = toeplitz_stack(sys.A, sys.B, sys.C, sys.D, w);
  st.H2M = orth_complement_rows(st.C2M, tol);
  st.Ip = first_sample_selector(sys.inputs(), w);
  return st;
}

StackedOperators build_fault_stacked(const FaultLtiSystem& sys, Index horizon, const ToleranceConfig& tol) {
  validate(sys, tol).require();
  const LtiSystem& b = sys.base;
  if (horizon < b.states()) {
    throw Error(ErrorCode::HorizonTooShort,
                "horizon " + std::to_string(horizon) + " < state dimension " + std::to_string(b.states()));
  }
  StackedOperators st;
  st.horizon = horizon;
  const Index w = 2 * horizon;
  st.C2M = observability_stack(b.A, b.C, w);
  st.D2M = toeplitz_stack(b.A, b.B, b.C, b.D, w);
  st.H2M = orth_complement_rows(st.C2M, tol);
  st.Ip = first_sample_selector(b.inputs(), w);
  st.E2M = toeplitz_stack(b.A, sys.L, b.C, sys.E, w);
  st.Ipf = first_sample_selector(sys.faults(), w);
  return st;
}

std::string_view to_string(ZeroClass c) {
  switch (c) {
    case ZeroClass::MinimumPhase: return "MinimumPhase";
    case ZeroClass::NonMinimumPhase: return "NonMinimumPhase";
    case ZeroClass::UnitCircleZeros: return "UnitCircleZeros";
    case ZeroClass::NoZeros: return "NoZeros";
  }
  return "Unknown";
}

Spectrum transmission_zeros(const Matrix& A, const Matrix& G, const Matrix& C, const Matrix& F,
                            const ToleranceConfig& tol) {
  const Index m = G.cols();
  const Index l = C.rows();
  if (m == 0 || l == 0) return {};
  if (l == m) return square_system_zeros(A, G, C, F, tol);
  if (l < m) {
    return transmission_zeros(A.transpose(), C.transpose(), G.transpose(), F.transpose(), tol);
  }
  // Tall: every zero is a zero of any squared-down system; keep only the
  // candidates at which the full Rosenbrock matrix really drops rank.
  const Matrix w = random_rotation(std::max<Index>(l, 2), 0x5eedULL).topLeftCorner(m, l);
  Spectrum zeros;
  for (const Complex& z : square_system_zeros(A, G, w * C, w * F, tol)) {
    if (rosenbrock_rank_gap(A, G, C, F, z) < 1e-8) zeros.push_back(z);
  }
  return zeros;
}

ZeroReport classify_zeros(Spectrum zeros, const ToleranceConfig& tol) {
  ZeroReport r;
  r.zeros = std::move(zeros);
  bool outside = false;
  for (const Complex& z : r.zeros) {
    if (std::abs(std::abs(z) - 1.0) < tol.eig_tol) r.on_unit_circle.push_back(z);
    else if (std::abs(z) > 1.0) outside = true;
    if (std::abs(z - Complex(1.0, 0.0)) < kZeroAtOneWindow) r.at_one = true;
  }
  if (r.zeros.empty()) r.classification = ZeroClass::NoZeros;
  else if (!r.on_unit_circle.empty()) r.classification = ZeroClass::UnitCircleZeros;
  else if (outside) r.classification = ZeroClass::NonMinimumPhase;
  else r.classification = ZeroClass::MinimumPhase;
  return r;
}

ZeroReport invariant_zeros(const LtiSystem& sys, const ToleranceConfig& tol) {
  sys.check_dimensions();
  return classify_zeros(transmission_zeros(sys.A, sys.B, sys.C, sys.D, tol), tol);
}

ZeroReport fault_zeros(const FaultLtiSystem& sys, const ToleranceConfig& tol) {
  sys.check_dimensions();
  return classify_zeros(transmission_zeros(sys.base.A, sys.L, sys.base.C, sys.E, tol), tol);
}

Matrix error_dynamics_matrix(const Matrix& A, const Matrix& G, const Matrix& selector, const Matrix& G2M,
                             const Matrix& C2M, const ToleranceConfig& tol) {
  return A - G * selector * pinv(G2M, tol) * C2M;
}

Spectrum inverse_error_eigenvalues(const LtiSystem& sys, const StackedOperators& st,
                                   const ToleranceConfig& tol) {
  if (sys.outputs() != sys.inputs()) {
    throw Error(ErrorCode::NonSquare, "error-dynamics spectrum identity needs l = m");
  }
  return eigenvalues(error_dynamics_matrix(sys.A, sys.B, st.Ip, st.D2M, st.C2M, tol));
}

Matrix past_future_annihilator(const LtiSystem& sys, Index horizon, const ToleranceConfig& tol) {
  sys.check_dimensions();
  if (sys.outputs() != sys.inputs()) {
    throw Error(ErrorCode::NonSquare, "past/future annihilator is only defined for square systems");
  }
  if (horizon < sys.states()) {
    throw Error(ErrorCode::HorizonTooShort, "horizon shorter than state dimension");
  }
  const Matrix cm = observability_stack(sys.A, sys.C, horizon);
  Matrix apow = Matrix::Identity(sys.states(), sys.states());
  for (Index i = 0; i < horizon; ++i) apow = apow * sys.A;
  const Index rows = cm.rows();
  Matrix h(rows, 2 * rows);
  h << -cm * apow * pinv(cm, tol), Matrix::Identity(rows, rows);
  return h;
}

}  // namespace invfilt

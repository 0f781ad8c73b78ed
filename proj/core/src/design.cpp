#include "invfilt/design.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "invfilt/error.hpp"

namespace invfilt {

namespace {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

constexpr double kSamePole = 1e-9;

Index max_multiplicity(const Spectrum& poles) {
  Index best = 0;
  for (const Complex& p : poles) {
    Index k = 0;
    for (const Complex& q : poles) {
      if (std::abs(p - q) < kSamePole) ++k;
    }
    best = std::max(best, k);
  }
  return best;
}

void validate_poles(const Spectrum& poles, Index n) {
  if (static_cast<Index>(poles.size()) != n) {
    throw Error(ErrorCode::BadPoleSet,
                "expected " + std::to_string(n) + " poles, got " + std::to_string(poles.size()));
  }
  for (const Complex& p : poles) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
      throw Error(ErrorCode::BadPoleSet, "pole set has non-finite entries");
    }
    if (std::abs(p) >= 1.0) {
      std::ostringstream os;
      os << "pole " << p << " is not strictly inside the unit circle";
      throw Error(ErrorCode::BadPoleSet, os.str());
    }
  }
  if (!is_conjugate_closed(poles, kSamePole)) {
    throw Error(ErrorCode::BadPoleSet, "pole set is not closed under conjugation");
  }
}

// Real poles first, then each conjugate pair as (p, conj(p)) with Im p > 0.
Spectrum arrange_poles(const Spectrum& poles) {
  Spectrum out;
  for (const Complex& p : poles) {
    if (std::abs(p.imag()) <= kSamePole) out.emplace_back(p.real(), 0.0);
  }
  for (const Complex& p : poles) {
    if (p.imag() > kSamePole) {
      out.push_back(p);
      out.push_back(std::conj(p));
    }
  }
  return out;
}

// Orthonormal basis of {x : U1^T (A - lambda I) x = 0}. Real poles get a real basis.
CMatrix pole_subspace(const Matrix& A, const Matrix& U1, Complex lambda) {
  const Index n = A.rows();
  if (U1.cols() == 0) return CMatrix::Identity(n, n);
  if (lambda.imag() == 0.0) {
    const Matrix m = U1.transpose() * (A - lambda.real() * Matrix::Identity(n, n));
    return null_space(m).cast<Complex>();
  }
  const CMatrix m = U1.transpose().cast<Complex>() * (A.cast<Complex>() - lambda * CMatrix::Identity(n, n));
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = rank_threshold(sv(0), m.rows(), m.cols());
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return svd.matrixV().rightCols(n - r);
}

// Robust eigenstructure assignment (Kautz-Nichols-Van Dooren, method 0)
// extended to conjugate pairs: each eigenvector is in turn made as
// orthogonal as its admissible subspace allows to the others. Returns F with
// eig(A - B F) = poles; B must have full column rank.
std::optional<Matrix> robust_state_feedback(const Matrix& A, const Matrix& B, const Spectrum& poles) {
  const Index n = A.rows();
  const Index r = B.cols();
  Eigen::HouseholderQR<Matrix> qr(B);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix z = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const Matrix u0 = q.leftCols(r);
  const Matrix u1 = q.rightCols(n - r);

  const Spectrum p = arrange_poles(poles);
  std::vector<CMatrix> basis(static_cast<std::size_t>(n));
  CMatrix x(n, n);
  for (Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (p[ju].imag() < 0.0) {
      basis[ju] = basis[ju - 1].conjugate();
      x.col(j) = x.col(j - 1).conjugate();
      continue;
    }
    basis[ju] = pole_subspace(A, u1, p[ju]);
    if (basis[ju].cols() == 0) return std::nullopt;
    Index occurrence = 0;
    for (Index i = 0; i < j; ++i) {
      if (std::abs(p[static_cast<std::size_t>(i)] - p[ju]) < kSamePole) ++occurrence;
    }
    x.col(j) = basis[ju].col(occurrence % basis[ju].cols());
  }

  if (n > 1) {
    double last_det = 0.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
      for (Index j = 0; j < n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (p[ju].imag() < 0.0) continue;
        CMatrix others(n, n - 1);
        others << x.leftCols(j), x.rightCols(n - j - 1);
        Eigen::HouseholderQR<CMatrix> oq(others);
        const CVector y = (oq.householderQ() * CMatrix::Identity(n, n)).col(n - 1);
        CVector cand = basis[ju] * (basis[ju].adjoint() * y);
        if (p[ju].imag() == 0.0) {
          const Vector re = cand.real();
          const Vector im = cand.imag();
          cand = (re.norm() >= im.norm() ? re : im).cast<Complex>();
        }
        const double nrm = cand.norm();
        if (nrm < 1e-12) continue;
        x.col(j) = cand / nrm;
        if (p[ju].imag() > 0.0) x.col(j + 1) = x.col(j).conjugate();
      }
      const double det = std::abs(x.determinant());
      if (sweep > 0 && std::abs(det - last_det) <= 1e-10 * std::max(det, 1e-300)) break;
      last_det = det;
    }
  }

  Eigen::JacobiSVD<CMatrix> xs(x);
  const auto& xsv = xs.singularValues();
  if (!(xsv(n - 1) > 1e-13 * xsv(0))) return std::nullopt;
  CMatrix lambda = CMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) lambda(j, j) = p[static_cast<std::size_t>(j)];
  const Matrix mcl = (x * lambda * x.inverse()).real();
  return Matrix(z.triangularView<Eigen::Upper>().solve(u0.transpose() * (A - mcl)));
}

// Ackermann's formula on a seeded single-input reduction B g. Used when a
// pole is repeated more often than B has columns.
std::optional<Matrix> single_input_feedback(const Matrix& A, const Matrix& B, const Spectrum& poles,
                                            int attempt) {
  const Index n = A.rows();
  const Index r = B.cols();
  std::mt19937_64 gen(0x5eedULL + static_cast<std::uint64_t>(attempt));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector g(r);
  for (Index i = 0; i < r; ++i) g(i) = normal(gen);
  g.normalize();
  const Vector b = B * g;

  Matrix ctrb(n, n);
  ctrb.col(0) = b;
  for (Index j = 1; j < n; ++j) ctrb.col(j) = A * ctrb.col(j - 1);
  Eigen::JacobiSVD<Matrix> cs(ctrb);
  const auto& csv = cs.singularValues();
  if (!(csv(n - 1) > 1e-12 * csv(0))) return std::nullopt;

  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(n + 1);
  coeff(0) = 1.0;
  for (std::size_t k = 0; k < poles.size(); ++k) {
    for (Index i = static_cast<Index>(k) + 1; i >= 1; --i) coeff(i) -= poles[k] * coeff(i - 1);
  }
  Matrix phi = Matrix::Identity(n, n);
  for (Index i = 1; i <= n; ++i) phi = phi * A + coeff(i).real() * Matrix::Identity(n, n);

  const Vector w = ctrb.transpose().partialPivLu().solve(Vector::Unit(n, n - 1));
  const Matrix k = w.transpose() * phi;
  return Matrix(g * k);
}

Matrix stack_composite(std::initializer_list<Matrix> blocks) {
  Index rows = 0, cols = 0;
  for (const Matrix& b : blocks) {
    rows = std::max(rows, b.rows());
    cols += b.cols();
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (const Matrix& b : blocks) {
    out.middleCols(c, b.cols()) = b;
    c += b.cols();
  }
  return out;
}

struct Channel {
  const Matrix& A;
  const Matrix& G;
  Matrix G2M;
  Matrix selector;
  Matrix BF;
  ZeroReport zeros;
  Index outputs;
  Index known_inputs;
};

FilterDesign assemble(StackedOperators st, const Channel& ch, const DesignOptions& opts) {
  const ToleranceConfig& tol = opts.tol;
  FilterDesign d;
  d.kind = opts.kind;
  d.horizon = st.horizon;
  d.states = ch.A.rows();
  d.outputs = ch.outputs;
  d.known_inputs = ch.known_inputs;
  d.unknown_channels = ch.G.cols();

  d.K1 = auxiliary_gain(st.H2M, ch.G2M, tol);
  d.Ph = projector_rowspace(st.H2M, tol);
  d.Pc = projector_colspace(st.C2M, tol);
  d.C2M_pinv = pinv(st.C2M, tol);
  d.unknown_stack = ch.G2M;
  d.unknown_stack_pinv = pinv(ch.G2M, tol);
  d.selector = ch.selector;
  d.BF = ch.BF;
  const Matrix acl = ch.A - ch.G * ch.selector * d.unknown_stack_pinv * st.C2M;
  d.Atilde = st.C2M * acl * d.C2M_pinv;

  if (opts.kind == FilterKind::MinPhase) {
    if (ch.outputs != ch.G.cols()) {
      throw Error(ErrorCode::MinPhaseScope, "the minimum-phase inverse needs as many outputs as inputs");
    }
    if (ch.zeros.classification != ZeroClass::MinimumPhase && ch.zeros.classification != ZeroClass::NoZeros) {
      throw Error(ErrorCode::MinPhaseScope,
                  "system is " + std::string(to_string(ch.zeros.classification)) + "; use a Step or Ramp filter");
    }
    d.PhNew = d.Ph;
    d.PcNew = d.Pc;
    d.closed_loop = acl;
    d.placed_poles = eigenvalues(acl);
    d.input_matrix = -d.BF;
    d.output_map = -d.unknown_stack_pinv * st.C2M;
    d.stacked = std::move(st);
    return d;
  }

  const RotationChoice choice =
      select_rotation(d.Atilde, d.Ph, d.Pc, opts.kind, opts.rotation, ch.zeros.at_one);
  const RotatedProjectors rp = rotated_projectors(d.Ph, d.Pc, choice.R);
  d.R = choice.R;
  d.rotation_margin = choice.margin;
  d.PhNew = rp.PhNew;
  d.PcNew = rp.PcNew;
  d.open_loop = pre_feedback_matrix(opts.kind, d.Atilde, rp);
  const Index dim = d.open_loop.rows();
  d.placed_poles = opts.poles.value_or(default_poles(dim));
  d.K2 = place_poles(d.open_loop, d.Ph, d.placed_poles, tol);
  d.closed_loop = d.open_loop + *d.K2 * d.Ph;

  const Matrix cbf = st.C2M * d.BF;
  if (is_ramp_kind(opts.kind)) {
    d.input_matrix = (rp.PhNew * d.Atilde - 2.0 * rp.PhNew + Matrix::Identity(dim, dim)) * cbf;
    d.lookahead_matrix = rp.PhNew * cbf;
  } else {
    d.input_matrix = rp.PcNew * cbf;
  }
  d.output_map = d.unknown_stack_pinv;
  d.stacked = std::move(st);
  return d;
}

}  // namespace

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::MinPhase: return "MinPhase";
    case FilterKind::Step: return "Step";
    case FilterKind::Ramp: return "Ramp";
    case FilterKind::FaultStep: return "FaultStep";
    case FilterKind::FaultRamp: return "FaultRamp";
  }
  return "Unknown";
}

std::optional<FilterKind> parse_filter_kind(std::string_view text) {
  for (FilterKind k : {FilterKind::MinPhase, FilterKind::Step, FilterKind::Ramp, FilterKind::FaultStep,
                       FilterKind::FaultRamp}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

void RotationStrategy::validate() const {
  if (!(obs_margin > 0.0)) throw Error(ErrorCode::InvalidArgument, "obs_margin must be positive");
  if (const auto* rs = std::get_if<RandomSeeded>(&mode)) {
    if (rs->retry_budget < 1) throw Error(ErrorCode::InvalidArgument, "retry budget must be at least 1");
    return;
  }
  const auto& pa = std::get<PlaneAngle>(mode);
  if (pa.i == pa.j || pa.i < 0 || pa.j < 0) {
    throw Error(ErrorCode::InvalidArgument, "rotation plane needs two distinct non-negative indices");
  }
  if (!std::isfinite(pa.theta)) throw Error(ErrorCode::InvalidArgument, "rotation angle is not finite");
  const double quarter = std::numbers::pi / 2.0;
  const double rem = std::abs(std::remainder(pa.theta, quarter));
  if (rem < 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "rotation angle is a multiple of pi/2; the rotated pair is unobservable");
  }
}

double FilterDesign::gain_norm() const { return K2 ? (*K2 * Ph).norm() : 0.0; }

Spectrum default_poles(Index count, double lo, double hi) {
  Spectrum out;
  if (count <= 0) return out;
  if (count == 1) return {Complex(0.5 * (lo + hi), 0.0)};
  for (Index i = 0; i < count; ++i) {
    out.emplace_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1), 0.0);
  }
  return out;
}

Matrix auxiliary_gain(const Matrix& H2M, const Matrix& G2M, const ToleranceConfig& tol) {
  if (H2M.cols() != G2M.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "annihilator and stacked operator disagree in row count");
  }
  return pinv(H2M * G2M, tol) * H2M;
}

Matrix reduced_dynamics(const Matrix& A, const Matrix& G, const Matrix& selector, const Matrix& G2M,
                        const Matrix& C2M, const ToleranceConfig& tol) {
  return C2M * error_dynamics_matrix(A, G, selector, G2M, C2M, tol) * pinv(C2M, tol);
}

Matrix composite_input_matrix(const LtiSystem& sys, const StackedOperators& st) {
  const Index n = sys.states();
  return stack_composite({Matrix::Identity(n, n), -sys.A, -sys.B * st.Ip});
}

Matrix composite_input_matrix(const FaultLtiSystem& sys, const StackedOperators& st) {
  if (!st.Ipf) throw Error(ErrorCode::InvalidArgument, "stacked operators carry no fault channel");
  const Index n = sys.base.states();
  return stack_composite({Matrix::Identity(n, n), -sys.base.A, -sys.L * *st.Ipf, -sys.base.B * st.Ip});
}

RotatedProjectors rotated_projectors(const Matrix& Ph, const Matrix& Pc, const Matrix& R) {
  if (R.rows() != R.cols() || R.rows() != Ph.rows() || Ph.rows() != Ph.cols() || Pc.rows() != Ph.rows() ||
      Pc.cols() != Ph.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "rotation and projectors must share one square dimension");
  }
  const Index n = R.rows();
  if ((R * R.transpose() - Matrix::Identity(n, n)).norm() > 1e-10 * std::sqrt(static_cast<double>(n))) {
    throw Error(ErrorCode::NonOrthogonal, "rotation matrix is not orthogonal");
  }
  return {R * Ph * R.transpose(), R * Pc * R.transpose()};
}

Matrix pre_feedback_matrix(FilterKind kind, const Matrix& Atilde, const RotatedProjectors& rp) {
  if (kind == FilterKind::MinPhase) {
    throw Error(ErrorCode::InvalidArgument, "the minimum-phase inverse has no feedback gain");
  }
  if (is_ramp_kind(kind)) {
    return rp.PhNew * Atilde * Atilde - 2.0 * rp.PhNew * Atilde + Atilde + rp.PhNew;
  }
  return rp.PcNew * Atilde + rp.PhNew;
}

ObservabilityReport pbh_observability(const Matrix& Aop, const Matrix& Cop, double obs_margin) {
  if (Aop.rows() != Aop.cols() || Cop.cols() != Aop.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "PBH test needs square A and C with matching columns");
  }
  const Index n = Aop.rows();
  ObservabilityReport rep;
  rep.margin = std::numeric_limits<double>::infinity();
  CMatrix stacked(n + Cop.rows(), n);
  stacked.bottomRows(Cop.rows()) = Cop.cast<Complex>();
  for (const Complex& lambda : eigenvalues(Aop)) {
    stacked.topRows(n) = Aop.cast<Complex>() - lambda * CMatrix::Identity(n, n);
    Eigen::JacobiSVD<CMatrix> svd(stacked);
    const double s = svd.singularValues()(n - 1);
    if (s < rep.margin) {
      rep.margin = s;
      rep.weakest_mode = lambda;
    }
  }
  rep.observable = rep.margin > obs_margin;
  return rep;
}

RotationChoice select_rotation(const Matrix& Atilde, const Matrix& Ph, const Matrix& Pc, FilterKind kind,
                               const RotationStrategy& strategy, bool zero_at_one) {
  strategy.validate();
  const Index n = Atilde.rows();
  RotationChoice best;
  best.margin = -1.0;
  auto screen = [&](Matrix R) -> bool {
    ++best.attempts;
    const RotatedProjectors rp = rotated_projectors(Ph, Pc, R);
    const ObservabilityReport rep = pbh_observability(pre_feedback_matrix(kind, Atilde, rp), -Ph, strategy.obs_margin);
    if (rep.margin > best.margin) {
      best.margin = rep.margin;
      best.R = std::move(R);
    }
    return rep.observable;
  };

  bool found = false;
  if (const auto* pa = std::get_if<PlaneAngle>(&strategy.mode)) {
    found = screen(plane_rotation(n, pa->i, pa->j, pa->theta));
  } else {
    const auto& rs = std::get<RandomSeeded>(strategy.mode);
    for (int t = 0; t < rs.retry_budget && !found; ++t) {
      found = screen(random_rotation(n, rs.seed + static_cast<std::uint64_t>(t)));
    }
  }
  if (found) return best;

  std::ostringstream os;
  os << best.attempts << " rotation(s) tried, best PBH margin " << best.margin << " <= " << strategy.obs_margin;
  if (zero_at_one) {
    throw Error(ErrorCode::ZeroAtOne, "system has a zero at z = 1, so no rotation gives an observable pair (" +
                                          os.str() + ")");
  }
  throw Error(ErrorCode::RetriesExhausted, os.str());
}

double placement_tolerance(const Spectrum& poles) {
  const Index k = std::max<Index>(max_multiplicity(poles), 1);
  return std::pow(1e-6, 1.0 / static_cast<double>(k));
}

Matrix place_poles(const Matrix& Aop, const Matrix& Cop, const Spectrum& poles, const ToleranceConfig& tol) {
  if (Aop.rows() != Aop.cols() || Cop.cols() != Aop.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "placement needs square A and C with matching columns");
  }
  require_finite(Aop, "Aop");
  require_finite(Cop, "Cop");
  const Index n = Aop.rows();
  validate_poles(poles, n);
  const ObservabilityReport obs = pbh_observability(Aop, Cop, tol.obs_margin);
  if (!obs.observable) {
    std::ostringstream os;
    os << "pair is not observable (PBH margin " << obs.margin << " at mode " << obs.weakest_mode << ")";
    throw Error(ErrorCode::Unobservable, os.str());
  }

  // Only K2 * Cop matters: compress Cop to its row space and place on the dual.
  Eigen::JacobiSVD<Matrix> svd(Cop, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rank_threshold(sv(0), Cop.rows(), Cop.cols(), tol)) ++r;
  }
  const Matrix ur = svd.matrixU().leftCols(r);
  const Matrix heff = sv.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
  const Matrix ad = Aop.transpose();
  const Matrix bd = heff.transpose();

  const double ptol = placement_tolerance(poles);
  double best_miss = std::numeric_limits<double>::infinity();
  auto accept = [&](const std::optional<Matrix>& f) -> std::optional<Matrix> {
    if (!f || !f->allFinite()) return std::nullopt;
    const Matrix k2 = -f->transpose() * ur.transpose();
    const double miss = spectrum_distance(eigenvalues(Aop + k2 * Cop), poles);
    best_miss = std::min(best_miss, miss);
    if (miss <= ptol) return k2;
    return std::nullopt;
  };

  if (max_multiplicity(poles) <= r) {
    if (auto k2 = accept(robust_state_feedback(ad, bd, poles))) return *k2;
  }
  for (int attempt = 0; attempt < 16; ++attempt) {
    if (auto k2 = accept(single_input_feedback(ad, bd, poles, attempt))) return *k2;
  }
  std::ostringstream os;
  os << "placement missed the requested spectrum (best distance " << best_miss << ", tolerance " << ptol << ")";
  throw Error(ErrorCode::Unobservable, os.str());
}

FilterDesign design(const LtiSystem& sys, const DesignOptions& opts) {
  if (is_fault_kind(opts.kind)) {
    throw Error(ErrorCode::InvalidArgument, "fault filter kinds need a system with a fault channel");
  }
  opts.tol.validate();
  StackedOperators st = build_stacked(sys, opts.horizon.value_or(sys.states()), opts.tol);
  Channel ch{sys.A, sys.B, st.D2M, st.Ip, composite_input_matrix(sys, st), invariant_zeros(sys, opts.tol),
             sys.outputs(), sys.inputs()};
  return assemble(std::move(st), ch, opts);
}

FilterDesign design(const FaultLtiSystem& sys, const DesignOptions& opts) {
  if (!is_fault_kind(opts.kind)) {
    throw Error(ErrorCode::InvalidArgument, "input filter kinds need a system without a fault channel");
  }
  opts.tol.validate();
  StackedOperators st = build_fault_stacked(sys, opts.horizon.value_or(sys.base.states()), opts.tol);
  Channel ch{sys.base.A, sys.L, *st.E2M, *st.Ipf, composite_input_matrix(sys, st), fault_zeros(sys, opts.tol),
             sys.base.outputs(), sys.base.inputs()};
  return assemble(std::move(st), ch, opts);
}

}  // namespace invfilt

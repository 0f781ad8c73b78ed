#include "invfilt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "invfilt/error.hpp"

namespace invfilt {

namespace {

Eigen::JacobiSVD<Matrix> full_svd(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

Index count_above(const Vector& sv, double threshold) {
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++r;
  }
  return r;
}

// Kuhn's augmenting-path matching on the bipartite graph {(i, j) : dist(i, j) <= limit}.
bool perfect_matching(const std::vector<std::vector<double>>& dist, double limit) {
  const std::size_t n = dist.size();
  std::vector<int> owner(n, -1);
  std::vector<char> seen;
  auto augment = [&](auto&& self, std::size_t i) -> bool {
    for (std::size_t j = 0; j < n; ++j) {
      if (dist[i][j] > limit || seen[j]) continue;
      seen[j] = 1;
      if (owner[j] < 0 || self(self, static_cast<std::size_t>(owner[j]))) {
        owner[j] = static_cast<int>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    seen.assign(n, 0);
    if (!augment(augment, i)) return false;
  }
  return true;
}

}  // namespace

void ToleranceConfig::validate() const {
  if (!(rank_tol_factor > 0.0) || !(eig_tol > 0.0) || !(obs_margin > 0.0)) {
    throw Error(ErrorCode::InvalidMatrix, "tolerances must be strictly positive");
  }
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::InvalidMatrix, std::string(what) + " has non-finite entries");
  }
}

double rank_threshold(double sigma_max, Index rows, Index cols, const ToleranceConfig& tol) {
  return tol.rank_tol_factor * std::numeric_limits<double>::epsilon() *
         static_cast<double>(std::max(rows, cols)) * sigma_max;
}

Matrix pinv(const Matrix& m, const ToleranceConfig& tol) {
  require_finite(m, "pinv operand");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  auto svd = Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cut = rank_threshold(sv(0), m.rows(), m.cols(), tol);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Index numerical_rank(const Matrix& m, const ToleranceConfig& tol) {
  require_finite(m, "rank operand");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  return count_above(sv, rank_threshold(sv(0), m.rows(), m.cols(), tol));
}

Matrix null_space(const Matrix& m, const ToleranceConfig& tol) {
  require_finite(m, "null-space operand");
  if (m.rows() == 0) return Matrix::Identity(m.cols(), m.cols());
  auto svd = full_svd(m);
  const Vector& sv = svd.singularValues();
  const Index r = count_above(sv, rank_threshold(sv(0), m.rows(), m.cols(), tol));
  return svd.matrixV().rightCols(m.cols() - r);
}

Matrix orth_complement_rows(const Matrix& m, const ToleranceConfig& tol) {
  require_finite(m, "complement operand");
  if (m.rows() <= m.cols()) {
    throw Error(ErrorCode::InvalidDimension, "complement needs more rows than columns");
  }
  auto svd = full_svd(m);
  const Vector& sv = svd.singularValues();
  const Index r = count_above(sv, rank_threshold(sv(0), m.rows(), m.cols(), tol));
  if (r < m.cols()) {
    throw Error(ErrorCode::RankDeficient, "complement operand is not full column rank");
  }
  return svd.matrixU().rightCols(m.rows() - m.cols()).transpose();
}

Matrix projector_rowspace(const Matrix& h, const ToleranceConfig& tol) {
  require_finite(h, "row-space operand");
  auto svd = full_svd(h);
  const Vector& sv = svd.singularValues();
  const Index r = h.size() == 0 ? 0 : count_above(sv, rank_threshold(sv(0), h.rows(), h.cols(), tol));
  if (r < h.rows()) {
    throw Error(ErrorCode::RankDeficient, "row-space operand is not full row rank");
  }
  const Matrix v = svd.matrixV().leftCols(r);
  return v * v.transpose();
}

Matrix projector_colspace(const Matrix& c, const ToleranceConfig& tol) {
  require_finite(c, "column-space operand");
  auto svd = full_svd(c);
  const Vector& sv = svd.singularValues();
  const Index r = c.size() == 0 ? 0 : count_above(sv, rank_threshold(sv(0), c.rows(), c.cols(), tol));
  if (r < c.cols()) {
    throw Error(ErrorCode::RankDeficient, "column-space operand is not full column rank");
  }
  const Matrix u = svd.matrixU().leftCols(r);
  return u * u.transpose();
}

Spectrum eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "eigenvalues need a square matrix");
  }
  require_finite(m, "eigenvalue operand");
  if (m.size() == 0) return {};
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidMatrix, "real Schur iteration did not converge");
  }
  const auto& ev = es.eigenvalues();
  return Spectrum(ev.data(), ev.data() + ev.size());
}

Matrix random_rotation(Index dim, std::uint64_t seed) {
  if (dim < 2) throw Error(ErrorCode::InvalidDimension, "rotation dimension must be >= 2");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) g(i, j) = normal(gen);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

Matrix plane_rotation(Index dim, Index i, Index j, double theta) {
  if (dim < 2 || i < 0 || j < 0 || i >= dim || j >= dim || i == j) {
    throw Error(ErrorCode::InvalidDimension, "plane rotation indices out of range");
  }
  Matrix r = Matrix::Identity(dim, dim);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  r(i, i) = c;
  r(i, j) = -s;
  r(j, i) = s;
  r(j, j) = c;
  return r;
}

double spectrum_distance(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  if (a.empty()) return 0.0;
  const std::size_t n = a.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n));
  std::vector<double> candidates;
  candidates.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist[i][j] = std::abs(a[i] - b[j]);
      candidates.push_back(dist[i][j]);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfect_matching(dist, candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

bool is_conjugate_closed(const Spectrum& s, double tol) {
  Spectrum conj;
  conj.reserve(s.size());
  for (const auto& z : s) conj.push_back(std::conj(z));
  return spectrum_distance(s, conj) <= tol;
}

double spectral_radius(const Matrix& m) {
  double r = 0.0;
  for (const auto& z : eigenvalues(m)) r = std::max(r, std::abs(z));
  return r;
}

}  // namespace invfilt

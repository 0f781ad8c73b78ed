#pragma once

#include <complex>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace invfilt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Complex = std::complex<double>;

/// Multiset of complex scalars (eigenvalues, zeros, pole sets).
using Spectrum = std::vector<Complex>;

struct ToleranceConfig {
  /// Singular values are counted as non-zero when they exceed
  /// rank_tol_factor * eps * max(rows, cols) * sigma_max.
  double rank_tol_factor = 1.0;
  /// Matching tolerance for eigenvalue / zero multisets.
  double eig_tol = 1e-6;
  /// Smallest PBH singular value accepted as "observable".
  double obs_margin = 1e-6;

  void validate() const;
};

/// Throws InvalidMatrix when any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what = "matrix");

/// Threshold below which a singular value of an rows x cols matrix is treated as zero.
double rank_threshold(double sigma_max, Index rows, Index cols, const ToleranceConfig& tol = {});

/// Moore-Penrose pseudo-inverse through the SVD.
Matrix pinv(const Matrix& m, const ToleranceConfig& tol = {});

Index numerical_rank(const Matrix& m, const ToleranceConfig& tol = {});

/// Orthonormal basis (as columns) of the null space of m.
Matrix null_space(const Matrix& m, const ToleranceConfig& tol = {});

/// Rows spanning the orthogonal complement of the column space of a tall,
/// full-column-rank m. The result H has orthonormal rows and H * m = 0.
Matrix orth_complement_rows(const Matrix& m, const ToleranceConfig& tol = {});

/// Orthogonal projector onto the row space of a full-row-rank h.
Matrix projector_rowspace(const Matrix& h, const ToleranceConfig& tol = {});

/// Orthogonal projector onto the column space of a full-column-rank c.
Matrix projector_colspace(const Matrix& c, const ToleranceConfig& tol = {});

/// Eigenvalues of a square matrix (real Schur), with algebraic multiplicity.
Spectrum eigenvalues(const Matrix& m);

/// Uniformly distributed rotation (det = +1) drawn from a seeded Gaussian sample.
Matrix random_rotation(Index dim, std::uint64_t seed);

/// Identity except for a Givens block rotating the (i, j) plane by theta radians.
Matrix plane_rotation(Index dim, Index i, Index j, double theta);

/// Smallest achievable value of the largest pairing distance between two
/// multisets (bottleneck matching). Returns +inf when the sizes differ.
double spectrum_distance(const Spectrum& a, const Spectrum& b);

bool is_conjugate_closed(const Spectrum& s, double tol);

double spectral_radius(const Matrix& m);

}  // namespace invfilt

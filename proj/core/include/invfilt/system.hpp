#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invfilt/linalg.hpp"

namespace invfilt {

/// x(k+1) = A x(k) + B u(k),  y(k) = C x(k) + D u(k).
struct LtiSystem {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }

  /// Throws DimensionMismatch naming the first inconsistent matrix.
  void check_dimensions() const;
};

/// LtiSystem plus an additive fault channel: +L f(k) in the state
/// equation and +E f(k) in the output equation. B and D may have zero
/// columns when the plant has no known input.
struct FaultLtiSystem {
  LtiSystem base;
  Matrix L;
  Matrix E;

  Index faults() const { return L.cols(); }
  void check_dimensions() const;
};

struct ValidationReport {
  Index states = 0;
  Index observability_rank = 0;
  bool observable = false;
  /// B or D (L or E for fault systems) has full column rank.
  bool rank_condition = false;
  /// l >= m (l >= p for fault systems).
  bool enough_outputs = false;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  /// Throws ObservabilityViolated or AssumptionViolated when !ok().
  void require() const;
};

ValidationReport validate(const LtiSystem& sys, const ToleranceConfig& tol = {});
ValidationReport validate(const FaultLtiSystem& sys, const ToleranceConfig& tol = {});

/// Stacked output, input, and fault operators over a window of 2M samples.
struct StackedOperators {
  Index horizon = 0;
  Matrix C2M;  ///< [C; CA; ...; CA^(2M-1)]
  Matrix D2M;  ///< block lower-triangular Toeplitz of Markov parameters
  Matrix H2M;  ///< orthonormal rows annihilating C2M
  Matrix Ip;   ///< [I_m 0] picks the first sample of an input window
  std::optional<Matrix> E2M;
  std::optional<Matrix> Ipf;

  Index window() const { return 2 * horizon; }
};

/// [C; CA; ...; CA^(blocks-1)]
Matrix observability_stack(const Matrix& A, const Matrix& C, Index blocks);
/// Toeplitz stack with `feedthrough` on the diagonal and C A^(i-j-1) G below it.
Matrix toeplitz_stack(const Matrix& A, const Matrix& G, const Matrix& C, const Matrix& feedthrough,
                      Index blocks);
/// [I_width 0] of size width x (blocks * width).
Matrix first_sample_selector(Index width, Index blocks);

StackedOperators build_stacked(const LtiSystem& sys, Index horizon, const ToleranceConfig& tol = {});
StackedOperators build_fault_stacked(const FaultLtiSystem& sys, Index horizon,
                                     const ToleranceConfig& tol = {});

enum class ZeroClass { MinimumPhase, NonMinimumPhase, UnitCircleZeros, NoZeros };

std::string_view to_string(ZeroClass c);

struct ZeroReport {
  Spectrum zeros;
  Spectrum on_unit_circle;
  bool at_one = false;
  ZeroClass classification = ZeroClass::NoZeros;
};

/// Window for flagging a zero at z = 1.
inline constexpr double kZeroAtOneWindow = 1e-6;

/// Finite transmission zeros of (A, G, C, F): the z at which
/// [zI - A, G; -C, F] loses rank.
Spectrum transmission_zeros(const Matrix& A, const Matrix& G, const Matrix& C, const Matrix& F,
                            const ToleranceConfig& tol = {});
ZeroReport classify_zeros(Spectrum zeros, const ToleranceConfig& tol = {});

ZeroReport invariant_zeros(const LtiSystem& sys, const ToleranceConfig& tol = {});
ZeroReport fault_zeros(const FaultLtiSystem& sys, const ToleranceConfig& tol = {});

/// A - G * I * pinv(G2M) * C2M, the state-error dynamics of the inverse.
Matrix error_dynamics_matrix(const Matrix& A, const Matrix& G, const Matrix& selector,
                             const Matrix& G2M, const Matrix& C2M, const ToleranceConfig& tol = {});

/// Eigenvalues of A - B Ip pinv(D2M) C2M for a square system. These are the
/// invariant zeros plus enough zeros at the origin to fill n slots.
Spectrum inverse_error_eigenvalues(const LtiSystem& sys, const StackedOperators& st,
                                   const ToleranceConfig& tol = {});

/// Annihilator built from a past/future split of the window:
/// [-C_M A^M pinv(C_M), I]. Its rows are orthogonal to C2M's columns.
Matrix past_future_annihilator(const LtiSystem& sys, Index horizon, const ToleranceConfig& tol = {});

}  // namespace invfilt

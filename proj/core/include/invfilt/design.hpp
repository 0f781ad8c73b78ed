#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include "invfilt/linalg.hpp"
#include "invfilt/system.hpp"

namespace invfilt {

enum class FilterKind { MinPhase, Step, Ramp, FaultStep, FaultRamp };

std::string_view to_string(FilterKind kind);
std::optional<FilterKind> parse_filter_kind(std::string_view text);

constexpr bool is_fault_kind(FilterKind k) { return k == FilterKind::FaultStep || k == FilterKind::FaultRamp; }
constexpr bool is_ramp_kind(FilterKind k) { return k == FilterKind::Ramp || k == FilterKind::FaultRamp; }

/// Rotation by theta in the (i, j) coordinate plane.
struct PlaneAngle {
  Index i = 0;
  Index j = 1;
  double theta = 0.0;
};

/// Seeded uniform rotations; candidate t uses seed + t.
struct RandomSeeded {
  std::uint64_t seed = 0;
  int retry_budget = 20;
};

struct RotationStrategy {
  std::variant<PlaneAngle, RandomSeeded> mode = RandomSeeded{};
  double obs_margin = 1e-6;

  /// Rejects an empty retry budget, a non-positive margin, and plane angles
  /// that are (numerically) multiples of pi/2.
  void validate() const;
};

/// Everything needed to run one inversion filter. Fault kinds store the
/// fault channel (L, E2M, Ipf) where the input kinds store (B, D2M, Ip).
struct FilterDesign {
  FilterKind kind = FilterKind::Step;
  Index horizon = 0;
  StackedOperators stacked;

  Matrix K1;
  std::optional<Matrix> R;
  Matrix Ph;
  Matrix Pc;
  Matrix PhNew;
  Matrix PcNew;
  Matrix Atilde;
  Matrix BF;
  std::optional<Matrix> K2;
  Spectrum placed_poles;
  /// State matrix of the filter recursion.
  Matrix closed_loop;
  /// Pre-feedback matrix the gain was placed on (empty for MinPhase).
  Matrix open_loop;
  double rotation_margin = 0.0;

  // Runtime operators, precomputed once.
  Matrix C2M_pinv;
  Matrix unknown_stack;       ///< D2M (input kinds) or E2M (fault kinds)
  Matrix unknown_stack_pinv;
  Matrix selector;            ///< Ip or Ipf
  Matrix input_matrix;        ///< multiplies the composite vector at the current shift
  Matrix lookahead_matrix;    ///< ramp kinds: multiplies the composite vector one shift ahead
  Matrix output_map;          ///< filter state -> correction of the unknown-signal window

  Index states = 0;
  Index outputs = 0;
  Index known_inputs = 0;
  Index unknown_channels = 0;

  /// Samples between the newest measurement and the estimated instant.
  Index delay() const { return 2 * horizon + (is_ramp_kind(kind) ? 1 : 0); }
  Index filter_dim() const { return closed_loop.rows(); }
  /// Norm of K2 * Ph, the part of the gain that acts on the filter.
  double gain_norm() const;
};

struct DesignOptions {
  FilterKind kind = FilterKind::Step;
  std::optional<Index> horizon;  ///< defaults to the state dimension
  RotationStrategy rotation;
  std::optional<Spectrum> poles;  ///< defaults to default_poles(2Ml)
  ToleranceConfig tol;
};

/// Linearly spaced real poles on [lo, hi].
Spectrum default_poles(Index count, double lo = -0.1, double hi = 0.1);

/// (H2M G2M)^+ H2M, mapping an output window to the auxiliary input (or
/// auxiliary fault) window.
Matrix auxiliary_gain(const Matrix& H2M, const Matrix& G2M, const ToleranceConfig& tol = {});

/// C2M (A - G Iq G2M^+ C2M) C2M^+, the dynamics of the output-zeroing part.
Matrix reduced_dynamics(const Matrix& A, const Matrix& G, const Matrix& selector, const Matrix& G2M,
                        const Matrix& C2M, const ToleranceConfig& tol = {});

/// [I, -A, -B Ip] for input kinds.
Matrix composite_input_matrix(const LtiSystem& sys, const StackedOperators& st);
/// [I, -A, -L Ipf, -B Ip] for fault kinds.
Matrix composite_input_matrix(const FaultLtiSystem& sys, const StackedOperators& st);

struct RotatedProjectors {
  Matrix PhNew;
  Matrix PcNew;
};

/// R Ph R^T and R Pc R^T. Throws NonOrthogonal unless R R^T = I.
RotatedProjectors rotated_projectors(const Matrix& Ph, const Matrix& Pc, const Matrix& R);

/// Matrix whose spectrum the gain K2 must place, before feedback:
/// Pc' At + Ph' for step kinds, Ph' At^2 - 2 Ph' At + At + Ph' for ramp kinds.
Matrix pre_feedback_matrix(FilterKind kind, const Matrix& Atilde, const RotatedProjectors& rp);

struct ObservabilityReport {
  bool observable = false;
  /// min over eigenvalues lambda of Aop of sigma_min([Aop - lambda I; Cop]).
  double margin = 0.0;
  Complex weakest_mode;
};

/// Hautus (PBH) test with a numerical margin.
ObservabilityReport pbh_observability(const Matrix& Aop, const Matrix& Cop, double obs_margin);

struct RotationChoice {
  Matrix R;
  double margin = 0.0;
  int attempts = 0;
};

/// First rotation whose (pre-feedback matrix, -Ph) pair passes the PBH screen.
/// Throws ZeroAtOne when every candidate fails and `zero_at_one` is set
/// (no rotation can work then), RetriesExhausted otherwise.
RotationChoice select_rotation(const Matrix& Atilde, const Matrix& Ph, const Matrix& Pc, FilterKind kind,
                               const RotationStrategy& strategy, bool zero_at_one);

/// Output-injection gain K2 with eig(Aop + K2 Cop) = poles. Only the product
/// K2 Cop is determined; Cop may be rank deficient.
Matrix place_poles(const Matrix& Aop, const Matrix& Cop, const Spectrum& poles, const ToleranceConfig& tol = {});

/// Tolerance used to check a placed spectrum: 1e-6 for simple poles,
/// (1e-6)^(1/k) when a pole is repeated k times.
double placement_tolerance(const Spectrum& poles);

FilterDesign design(const LtiSystem& sys, const DesignOptions& opts);
FilterDesign design(const FaultLtiSystem& sys, const DesignOptions& opts);

}  // namespace invfilt

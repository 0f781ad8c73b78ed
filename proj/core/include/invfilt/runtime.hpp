#pragma once

#include <deque>
#include <memory>
#include <optional>

#include "invfilt/design.hpp"

namespace invfilt {

struct EstimateSample {
  /// Time index of the estimated input (or fault) sample.
  Index k_estimated = 0;
  Vector value;
  /// Contribution of the auxiliary signal alone (before the filter correction).
  Vector aux_component;
  double eta_norm = 0.0;
};

/// Filter states larger than this are treated as divergence.
inline constexpr double kDivergenceBound = 1e12;

/// Stacked windows are y(j..j+2M-1) (and u over the same samples), oldest first.
Vector compute_uaux(const FilterDesign& d, const Vector& y_stack, const Vector& u_stack);
Vector compute_z(const FilterDesign& d, const Vector& y_stack, const Vector& u_stack, const Vector& aux);
/// [z(j+1); z(j); aux(j)] plus the known-input window for fault kinds.
Vector build_composite(const FilterDesign& d, const Vector& z_next, const Vector& z_cur, const Vector& aux,
                       const Vector& u_stack);

/// Streaming inversion filter. Feed y(k) (and the known input u(k) for
/// fault kinds) once per sample; estimates come out delay() samples late.
class FilterState {
 public:
  explicit FilterState(std::shared_ptr<const FilterDesign> design);
  explicit FilterState(FilterDesign design);

  /// Returns nullopt during warm-up. Throws Diverged if the filter state blows up.
  std::optional<EstimateSample> push_sample(const Vector& y, const Vector& u = Vector());
  void reset();

  const FilterDesign& design() const { return *design_; }
  Index samples_seen() const { return k_; }
  /// Samples consumed before the first estimate.
  Index warmup() const { return design_->delay() + 1; }
  const Vector& filter_state() const { return eta_; }

 private:
  Vector stack(const std::deque<Vector>& w, Index first, Index count) const;

  std::shared_ptr<const FilterDesign> design_;
  std::deque<Vector> ys_;
  std::deque<Vector> us_;
  Index k_ = 0;
  Vector eta_;
  // Quantities for the window starting one sample after the last advanced one.
  std::optional<Vector> next_aux_;
  std::optional<Vector> next_z_;
  Vector held_composite_;
  Vector held_aux_;
};

}  // namespace invfilt

#include "invfilt/runtime.hpp"

#include <cmath>
#include <sstream>

#include "invfilt/error.hpp"

namespace invfilt {

namespace {

void require_window(const FilterDesign& d, const Vector& y_stack, const Vector& u_stack) {
  const Index w = d.stacked.window();
  if (y_stack.size() != w * d.outputs) {
    throw Error(ErrorCode::WindowNotReady, "output window has " + std::to_string(y_stack.size()) +
                                               " entries, expected " + std::to_string(w * d.outputs));
  }
  if (is_fault_kind(d.kind) && u_stack.size() != w * d.known_inputs) {
    throw Error(ErrorCode::WindowNotReady, "known-input window has " + std::to_string(u_stack.size()) +
                                               " entries, expected " + std::to_string(w * d.known_inputs));
  }
}

}  // namespace

Vector compute_uaux(const FilterDesign& d, const Vector& y_stack, const Vector& u_stack) {
  require_window(d, y_stack, u_stack);
  if (is_fault_kind(d.kind) && d.known_inputs > 0) return d.K1 * (y_stack - d.stacked.D2M * u_stack);
  return d.K1 * y_stack;
}

Vector compute_z(const FilterDesign& d, const Vector& y_stack, const Vector& u_stack, const Vector& aux) {
  require_window(d, y_stack, u_stack);
  Vector r = y_stack - d.unknown_stack * aux;
  if (is_fault_kind(d.kind) && d.known_inputs > 0) r -= d.stacked.D2M * u_stack;
  return d.C2M_pinv * r;
}

Vector build_composite(const FilterDesign& d, const Vector& z_next, const Vector& z_cur, const Vector& aux,
                       const Vector& u_stack) {
  const bool with_u = is_fault_kind(d.kind);
  Vector c(z_next.size() + z_cur.size() + aux.size() + (with_u ? u_stack.size() : 0));
  c << z_next, z_cur, aux, (with_u ? u_stack : Vector());
  if (c.size() != d.BF.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "composite vector does not match the composite input matrix");
  }
  return c;
}

FilterState::FilterState(std::shared_ptr<const FilterDesign> design) : design_(std::move(design)) {
  if (!design_) throw Error(ErrorCode::InvalidArgument, "filter needs a design");
  reset();
}

FilterState::FilterState(FilterDesign design)
    : FilterState(std::make_shared<const FilterDesign>(std::move(design))) {}

void FilterState::reset() {
  ys_.clear();
  us_.clear();
  k_ = 0;
  eta_ = Vector::Zero(design_->filter_dim());
  next_aux_.reset();
  next_z_.reset();
  held_composite_.resize(0);
  held_aux_.resize(0);
}

Vector FilterState::stack(const std::deque<Vector>& w, Index first, Index count) const {
  if (count == 0 || w.empty()) return Vector();
  const Index width = w.front().size();
  Vector s(count * width);
  for (Index i = 0; i < count; ++i) s.segment(i * width, width) = w[static_cast<std::size_t>(first + i)];
  return s;
}

std::optional<EstimateSample> FilterState::push_sample(const Vector& y, const Vector& u) {
  const FilterDesign& d = *design_;
  if (y.size() != d.outputs) {
    throw Error(ErrorCode::DimensionMismatch, "sample has " + std::to_string(y.size()) + " outputs, expected " +
                                                  std::to_string(d.outputs));
  }
  const bool with_u = is_fault_kind(d.kind);
  if (with_u && u.size() != d.known_inputs) {
    throw Error(ErrorCode::DimensionMismatch, "sample has " + std::to_string(u.size()) +
                                                  " known inputs, expected " + std::to_string(d.known_inputs));
  }
  if (!y.allFinite() || (with_u && !u.allFinite())) {
    throw Error(ErrorCode::InvalidMatrix, "sample has non-finite entries");
  }

  const Index w = d.stacked.window();
  ys_.push_back(y);
  if (with_u) us_.push_back(u);
  if (static_cast<Index>(ys_.size()) > w + 1) {
    ys_.pop_front();
    if (with_u) us_.pop_front();
  }
  const Index k = k_++;
  if (k < w) return std::nullopt;

  // ys_ now holds y(k-2M .. k): window j = k-2M starts at 0, window j+1 at 1.
  const Vector ucur = with_u ? stack(us_, 0, w) : Vector();
  Vector aux_cur, z_cur;
  if (next_aux_) {
    aux_cur = std::move(*next_aux_);
    z_cur = std::move(*next_z_);
  } else {
    const Vector ycur = stack(ys_, 0, w);
    aux_cur = compute_uaux(d, ycur, ucur);
    z_cur = compute_z(d, ycur, ucur, aux_cur);
  }
  const Vector ynext = stack(ys_, 1, w);
  const Vector unext = with_u ? stack(us_, 1, w) : Vector();
  Vector aux_next = compute_uaux(d, ynext, unext);
  Vector z_next = compute_z(d, ynext, unext, aux_next);
  Vector composite = build_composite(d, z_next, z_cur, aux_cur, ucur);
  next_aux_ = std::move(aux_next);
  next_z_ = std::move(z_next);

  const Index j = k - w;
  EstimateSample out;
  if (is_ramp_kind(d.kind)) {
    if (held_composite_.size() == 0) {
      held_composite_ = std::move(composite);
      held_aux_ = std::move(aux_cur);
      return std::nullopt;
    }
    out.k_estimated = j - 1;
    out.aux_component = d.selector * held_aux_;
    out.value = d.selector * (d.output_map * eta_ + held_aux_);
    eta_ = d.closed_loop * eta_ + d.lookahead_matrix * composite + d.input_matrix * held_composite_;
    held_composite_ = std::move(composite);
    held_aux_ = std::move(aux_cur);
  } else {
    out.k_estimated = j;
    out.aux_component = d.selector * aux_cur;
    out.value = d.selector * (d.output_map * eta_ + aux_cur);
    eta_ = d.closed_loop * eta_ + d.input_matrix * composite;
  }
  out.eta_norm = eta_.norm();
  if (!std::isfinite(out.eta_norm) || out.eta_norm > kDivergenceBound) {
    std::ostringstream os;
    os << "filter state norm " << out.eta_norm << " exceeded " << kDivergenceBound << " at sample " << k;
    throw Error(ErrorCode::Diverged, os.str());
  }
  return out;
}

}  // namespace invfilt

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace sgain {

/// Raised for time arguments that are not nodes of a grid.
class GridAlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Converts a time to a slot index of a grid with step dt; throws when `t`
/// is not within 1e-9 steps of a node.
std::int64_t to_slot(double t, double dt);

/// A discretised two-sided d-dimensional Wiener path W_t(omega) on
/// [t_min, t_max], pinned at W_0 = 0.
///
/// The path is a view onto an infinite keyed path: increments of the base
/// resolution come from a counter-based generator keyed on (seed, component,
/// absolute slot), refinements insert Brownian-bridge points keyed on the
/// cumulative refinement multiplier. The view carries an origin offset so
/// that shift() realises theta_s omega = omega(s + .) - omega(s) exactly.
/// Grids are immutable; copies share their sample buffer.
class WienerGrid {
 public:
  static WienerGrid sample(int dims, double t_min, double t_max, double dt, std::uint64_t seed);

  [[nodiscard]] int dims() const noexcept { return dims_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::int64_t first_slot() const noexcept { return first_; }
  [[nodiscard]] std::int64_t last_slot() const noexcept { return last_; }
  [[nodiscard]] double t_min() const noexcept { return static_cast<double>(first_) * dt_; }
  [[nodiscard]] double t_max() const noexcept { return static_cast<double>(last_) * dt_; }
  [[nodiscard]] std::int64_t node_count() const noexcept { return last_ - first_ + 1; }
  /// Accumulated shift of this view, in time units.
  [[nodiscard]] double origin_offset() const noexcept { return static_cast<double>(offset_) * dt_; }
  /// Product of all refinement factors applied since sampling.
  [[nodiscard]] std::int64_t refinement() const noexcept { return multiplier_; }

  [[nodiscard]] bool contains_slot(std::int64_t k) const noexcept { return k >= first_ && k <= last_; }

  /// W at grid time t; t must be a node.
  [[nodiscard]] Eigen::VectorXd value_at(double t) const;
  /// Component i of W at node k.
  [[nodiscard]] double value(int component, std::int64_t k) const;
  /// W_{k+1} - W_k for component i; requires nodes k and k+1 in the window.
  /// Computed from the underlying absolute path, so it is invariant under shift.
  [[nodiscard]] double increment(int component, std::int64_t k) const;

  /// Path of theta_s omega on [t_min - s, t_max - s].
  [[nodiscard]] WienerGrid shift(double s) const;
  [[nodiscard]] WienerGrid shift_slots(std::int64_t s) const;

  /// Same path on a larger window; previously returned values are unchanged.
  [[nodiscard]] WienerGrid extended(double t_min, double t_max) const;

  /// Brownian-bridge refinement to step dt/factor. Factors are applied prime by
  /// prime in ascending order, so refine(refine(g, 2), 2) == refine(g, 4).
  [[nodiscard]] WienerGrid refine(int factor) const;

  /// Sub-increments of slot k at resolution dt/factor (factor a power of two),
  /// consistent with refine(factor). Returns a dims x factor matrix.
  [[nodiscard]] Eigen::MatrixXd bridge_increments(std::int64_t k, int factor) const;

 private:
  struct Samples {
    // Absolute path values B(j) for j in [abs_first, abs_first + cols), stored
    // component-major: values[i * cols + (j - abs_first)].
    std::int64_t abs_first = 0;
    std::int64_t cols = 0;
    std::vector<double> values;
  };

  WienerGrid() = default;

  [[nodiscard]] double absolute(int component, std::int64_t abs_slot) const {
    return samples_->values[static_cast<std::size_t>(component * samples_->cols + (abs_slot - samples_->abs_first))];
  }
  static std::shared_ptr<const Samples> build(int dims, std::uint64_t seed, double base_dt,
                                              const std::vector<int>& chain, std::int64_t abs_first,
                                              std::int64_t abs_last);

  int dims_ = 0;
  double dt_ = 0.0;
  double base_dt_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<int> chain_;  // prime refinement factors applied so far
  std::int64_t multiplier_ = 1;
  std::int64_t offset_ = 0;  // absolute slot of this view's origin
  std::int64_t first_ = 0;   // window, relative to origin
  std::int64_t last_ = 0;
  std::shared_ptr<const Samples> samples_;
};

}  // namespace sgain

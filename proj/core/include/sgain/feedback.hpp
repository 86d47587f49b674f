#pragma once

#include "sgain/exact.hpp"
#include "sgain/expression.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgain {

enum class FeedbackFamily {
  goodwin,                // h_1 = V / (K + x_n^m)
  othmer_tyson,           // h_1 = k0 (1 + x_n^m) / (K + x_n^m)
  griffith,               // h_1 = K x_n^m / (1 + K x_n^m)
  competitive_hill,       // h_i = 1 / (K_i + x_1^m + ... + x_n^m)
  shifted_saturating,     // h_i = c + (a + x_j) / (b + x_j),       j = i + offset (cyclic)
  reciprocal_saturating,  // h_i = 1 / (c + (a + x_j) / (b + x_j)), j = i + offset (cyclic)
  constant,
  custom_expression,
};

enum class Monotonicity { monotone, anti_monotone };
enum class ShiftKind { subtract_delta_over_T, reciprocal_shift_S };

std::string to_string(FeedbackFamily f);
FeedbackFamily family_from_string(const std::string& s);
std::string to_string(Monotonicity m);
Monotonicity monotonicity_from_string(const std::string& s);
std::string to_string(ShiftKind k);
ShiftKind shift_kind_from_string(const std::string& s);

/// Shift used by the sublinearity test: h_T = h - delta/T, or
/// h_S^{-1} = 1/h - 1/(S Gamma). No amount means "test h (or 1/h) unshifted".
struct SublinearityShift {
  ShiftKind kind = ShiftKind::subtract_delta_over_T;
  std::optional<Rational> amount;
  friend bool operator==(const SublinearityShift&, const SublinearityShift&) = default;
};

/// User-facing parameters of a feedback family. Scalars are one-element lists.
struct FeedbackParams {
  std::map<std::string, std::vector<Rational>> numbers;
  std::vector<std::string> expressions;
  std::optional<Monotonicity> monotonicity;
  std::optional<SublinearityShift> sublinearity;
  std::optional<bool> allows_zero;
  friend bool operator==(const FeedbackParams&, const FeedbackParams&) = default;
};

/// Range bounds and derivative bound of h.
struct DerivedConstants {
  std::vector<Rational> gamma;  // sup of h_i
  std::vector<Rational> delta;  // inf of h_i
  RadicalNumber M;              // sup_{x, i, j} |dh_i/dx_j|
  std::optional<Rational> M_coarse_bound;
  bool rigorous = true;         // false for lattice-estimated custom expressions
  std::string method;
};

/// Output function h: R^d_+ -> [delta, Gamma] of a feedback system.
class FeedbackSpec {
 public:
  static FeedbackSpec make(FeedbackFamily family, int dim, FeedbackParams params);

  [[nodiscard]] FeedbackFamily family() const noexcept { return family_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] const FeedbackParams& params() const noexcept { return params_; }
  [[nodiscard]] Monotonicity monotonicity() const noexcept { return monotonicity_; }
  [[nodiscard]] const std::optional<SublinearityShift>& sublinearity() const noexcept { return params_.sublinearity; }
  [[nodiscard]] bool allows_zero() const noexcept { return allows_zero_; }
  [[nodiscard]] const DerivedConstants& constants() const noexcept { return constants_; }
  [[nodiscard]] const Eigen::VectorXd& gamma() const noexcept { return gamma_; }
  [[nodiscard]] const Eigen::VectorXd& delta() const noexcept { return delta_; }
  /// True for h = (f(x_n), 0, ..., 0) families.
  [[nodiscard]] bool single_input() const noexcept;

  /// Unchecked evaluation for integrator inner loops.
  void evaluate(std::span<const double> x, std::span<double> out) const;
  /// Checked evaluation: throws on a negative entry of x.
  [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

  friend bool operator==(const FeedbackSpec& a, const FeedbackSpec& b) {
    return a.family_ == b.family_ && a.dim_ == b.dim_ && a.params_ == b.params_;
  }

 private:
  [[nodiscard]] double scalar(const char* name) const { return scalars_.at(name); }

  FeedbackFamily family_ = FeedbackFamily::constant;
  int dim_ = 0;
  FeedbackParams params_;
  Monotonicity monotonicity_ = Monotonicity::monotone;
  bool allows_zero_ = false;
  std::map<std::string, double> scalars_;
  std::vector<double> per_component_;
  int input_ = 0;
  int offset_ = 0;
  std::vector<Expression> expressions_;
  DerivedConstants constants_;
  Eigen::VectorXd gamma_;
  Eigen::VectorXd delta_;
};

/// h(x) per family; throws on a negative entry.
Eigen::VectorXd eval_feedback(const FeedbackSpec& spec, const Eigen::VectorXd& x);

/// Gamma, delta and M of a feedback (closed forms where available).
DerivedConstants derived_constants(const FeedbackSpec& spec);

/// Numeric sup of |dh_i/dx_j| over a log lattice on [lo, hi]^d (plus the
/// origin of each axis) with about `samples` points, refined by coordinate-wise
/// golden-section search around the best lattice point.
double derivative_sup_numeric(const FeedbackSpec& spec, double lo = 1e-4, double hi = 1e4, int samples = 100000);

}  // namespace sgain

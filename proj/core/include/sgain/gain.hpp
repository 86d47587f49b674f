#pragma once

#include "sgain/models.hpp"
#include "sgain/sde.hpp"
#include "sgain/wiener.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgain {

/// An input process along one path, sampled at the grid nodes of [-T, 0].
/// Column j holds u(theta_s omega) at s = -T + j dt.
class InputFunction {
 public:
  InputFunction() = default;
  InputFunction(double window, double dt, Eigen::MatrixXd values);
  static InputFunction constant(double window, double dt, const Eigen::VectorXd& value);

  [[nodiscard]] double window() const noexcept { return window_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.rows()); }
  [[nodiscard]] std::int64_t nodes() const noexcept { return values_.cols(); }
  /// Absolute grid slot of column 0 (that is, -T / dt).
  [[nodiscard]] std::int64_t first_slot() const noexcept { return -(values_.cols() - 1); }
  [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
  [[nodiscard]] Eigen::MatrixXd& values() noexcept { return values_; }
  [[nodiscard]] Eigen::VectorXd at(double s) const;

  /// Largest entrywise difference over all nodes.
  [[nodiscard]] double sup_distance(const InputFunction& other) const;

 private:
  double window_ = 0.0;
  double dt_ = 0.0;
  Eigen::MatrixXd values_;
};

/// K(u)(theta_{s_eval} omega), truncated to [-T, s_eval]: the linear input system
/// dY = (A Y + u) dt + sum_k diag(g_k) Y dW^k swept from Y(-T) = 0.
Eigen::VectorXd k_operator(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u, double s_eval,
                           const IntegratorOptions& options = {});

/// K(u) at every node of the window (column j is the value at s = -T + j dt).
Eigen::MatrixXd k_sweep(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u,
                        const IntegratorOptions& options = {});

/// v(s) = h(K(u)(theta_s omega)) at every node, in one sweep.
InputFunction gain_apply(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u,
                         const IntegratorOptions& options = {});

struct EquilibriumEstimate {
  Eigen::VectorXd value_at_zero;
  int iterations = 0;
  std::vector<double> residual_history;  // sup-node residual of each Picard step
  double window = 0.0;
  bool converged = false;
  InputFunction input;  // last iterate u_k
};

/// Picard iteration did not reach the tolerance; carries the partial estimate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& message, EquilibriumEstimate estimate)
      : std::runtime_error(message), estimate_(std::move(estimate)) {}
  [[nodiscard]] const EquilibriumEstimate& estimate() const noexcept { return estimate_; }

 private:
  EquilibriumEstimate estimate_;
};

/// Picard iteration u_{k+1} = K^h(u_k) from u_0 = Gamma/2 on the window [-T, 0].
EquilibriumEstimate gain_fixed_point(const ModelSpec& model, const WienerGrid& grid, double T, double tol,
                                     int max_iter = 200, const IntegratorOptions& options = {});

/// Window such that exp(-lambda T) * scale < tol / 10, rounded up to a grid node.
double default_window(double lambda, double scale, double tol, double dt);

struct EnvelopePair {
  Eigen::VectorXd xi;
  Eigen::VectorXd eta;
  double tau = 0.0;
};

struct EnvelopeFunctions {
  InputFunction xi;
  InputFunction eta;
  EnvelopePair at_zero;
};

/// Entrywise min and max of h over the pull-back family
/// {phi(t, theta_{s-t} omega) x0 : tau <= t <= T + s} at every node s of [-T, 0].
/// Start times are taken every `stride` nodes (stride 1 samples every grid time).
EnvelopeFunctions envelope_functions(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0,
                                     double tau, double T, int stride = 1, const IntegratorOptions& options = {});

/// The s = 0 slice of envelope_functions().
EnvelopePair envelope(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0, double tau, double T,
                      int stride = 1, const IntegratorOptions& options = {});

/// max_i |log(x_i / y_i)|; throws on a nonpositive entry.
double part_metric(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double part_metric_ensemble(const std::vector<Eigen::VectorXd>& u, const std::vector<Eigen::VectorXd>& v);

struct SublinearityPlan {
  double lo = 1e-3;
  double hi = 1e3;
  int points_per_axis = 13;  // log-spaced; x = 1 is always included
  int lambda_steps = 99;     // lambda = 0.01, ..., 0.99
  double tolerance = 1e-12;  // relative slack
};

struct SublinearityReport {
  bool passed = true;
  double worst_violation = 0.0;
  Eigen::VectorXd worst_x;
  double worst_lambda = 0.0;
  int worst_component = -1;
  std::int64_t evaluations = 0;
  std::string shifted_map;  // description of the tested map
};

/// Tests lambda f(x) <= f(lambda x) for the shifted map f = h - delta/T
/// (subtract) or f = 1/h - 1/(S Gamma) (reciprocal). Without an amount the
/// unshifted h (or 1/h) is tested.
SublinearityReport sublinearity_check(const FeedbackSpec& spec, ShiftKind kind, std::optional<Rational> amount,
                                      const SublinearityPlan& plan = {});
/// Uses the shift declared by the feedback (subtract with no amount if none).
SublinearityReport sublinearity_check(const FeedbackSpec& spec, const SublinearityPlan& plan = {});

struct ContractionOptions {
  int paths = 100;
  int pairs = 50;
  double window = 10.0;
  double dt = 1e-2;
  std::uint64_t seed = 42;
  IntegratorOptions integrator;
};

struct ContractionReport {
  double ratio = 0.0;               // max over pairs
  std::vector<double> pair_ratios;  // one per non-degenerate pair
  int skipped = 0;                  // pairs with p(u, v) = 0
};

/// Empirical part-metric contraction of K^h: for random input pairs u, v with
/// entries uniform in [delta, Gamma] per node and path, the ratio
/// max p(K^h u, K^h v) / max p(u, v) over the ensemble (paths x nodes).
ContractionReport contraction_estimate(const ModelSpec& model, const ContractionOptions& options = {});

/// Same, with caller-supplied inputs (first index: pair, second: path).
ContractionReport contraction_estimate(const ModelSpec& model, const std::vector<WienerGrid>& grids,
                                       const std::vector<std::pair<std::vector<InputFunction>, std::vector<InputFunction>>>& pairs,
                                       const IntegratorOptions& integrator = {});

}  // namespace sgain

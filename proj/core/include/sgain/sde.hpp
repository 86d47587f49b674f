#pragma once

#include "sgain/models.hpp"
#include "sgain/wiener.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sgain {

enum class Scheme {
  euler_maruyama,
  /// Exact diagonal geometric factor times x, plus explicit Euler for the
  /// off-diagonal drift and the forcing. Keeps the orthant invariant.
  splitting,
};

struct IntegratorOptions {
  Scheme scheme = Scheme::euler_maruyama;
  double clamp_epsilon = 1e-12;
  int max_halving = 8;
};

/// The integrator could not keep the state in the orthant even after the
/// maximal number of step halvings.
class PositivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepStats {
  std::int64_t steps = 0;
  std::int64_t clamped = 0;   // entries in [-eps, 0) set to zero
  std::int64_t halvings = 0;  // steps that needed bridge refinement
};

/// One grid step of dX = [A X + f] dt + sum_k diag(g_k) X dW^k.
///
/// f is either h(X) (feedback system) or a given input vector held fixed over
/// the step (linear input system). Both paths share the same update so that
/// the Picard fixed point of the gain operator and the pull-back trajectory
/// satisfy the same discrete recursion.
class Stepper {
 public:
  Stepper(const LinearSystem& linear, const WienerGrid& grid, IntegratorOptions options = {});

  /// Advances x across grid slot k (node k to node k+1) with f = h(x).
  void step(Eigen::VectorXd& x, std::int64_t k, const FeedbackSpec& h);
  /// Advances x across grid slot k with the constant forcing u.
  void step(Eigen::VectorXd& x, std::int64_t k, const Eigen::VectorXd& u);

  [[nodiscard]] const StepStats& stats() const noexcept { return stats_; }

 private:
  void advance(Eigen::VectorXd& x, std::int64_t k, const FeedbackSpec* h, const Eigen::VectorXd* u);
  // Attempts one substep of length dt with the given Wiener increments; false on
  // a positivity violation beyond the clamp tolerance.
  bool try_substep(Eigen::VectorXd& x, double dt, const double* dw, const FeedbackSpec* h, const Eigen::VectorXd* u);

  const LinearSystem& linear_;
  const WienerGrid& grid_;
  IntegratorOptions options_;
  int noise_ = 0;
  Eigen::VectorXd drift_diag_;  // a_ii - C_ii / 2
  Eigen::MatrixXd a_off_;
  Eigen::MatrixXd g_;  // dim x noise, column k = diagonal of G_k
  Eigen::VectorXd forcing_;
  Eigen::VectorXd next_;
  StepStats stats_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  StepStats stats;
};

/// Solution on [t0, t1] started from x0 at t0. States are recorded every
/// `record_every` steps and always at t1.
Trajectory integrate_forward(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0, double t0,
                             double t1, const IntegratorOptions& options = {}, int record_every = 1);

/// phi(T, theta_{-T} omega) x0: the state at time 0 of the solution started
/// from x0 at time -T on the same path.
Eigen::VectorXd pullback(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0, double T,
                         const IntegratorOptions& options = {});

struct PullbackConvergence {
  std::vector<double> windows;                 // ascending T
  std::vector<std::pair<int, int>> pairs;      // index pairs into the start list
  std::vector<std::vector<double>> distances;  // [window][pair], max-norm
  std::vector<std::vector<Eigen::VectorXd>> states;  // [window][start]
  /// Largest distance per window is nonincreasing in T (within 1e-12).
  bool monotone_trend = true;
  [[nodiscard]] double max_distance(std::size_t window) const;
};

PullbackConvergence pullback_convergence(const ModelSpec& model, const WienerGrid& grid,
                                         const std::vector<Eigen::VectorXd>& starts, const std::vector<double>& windows,
                                         const IntegratorOptions& options = {});

}  // namespace sgain

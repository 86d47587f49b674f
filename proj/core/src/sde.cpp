#include "sgain/sde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sgain {

Stepper::Stepper(const LinearSystem& linear, const WienerGrid& grid, IntegratorOptions options)
    : linear_(linear), grid_(grid), options_(options), noise_(linear.noise_count()) {
  const int d = linear.dim();
  if (grid.dims() < noise_) {
    throw std::invalid_argument("Wiener grid has " + std::to_string(grid.dims()) + " components but the model needs " +
                                std::to_string(noise_));
  }
  g_ = Eigen::MatrixXd::Zero(d, noise_);
  for (int k = 0; k < noise_; ++k) g_.col(k) = linear.noise(k);
  const Eigen::VectorXd c = ito_correction(linear);
  drift_diag_ = linear.A().diagonal() - 0.5 * c;
  a_off_ = linear.A();
  a_off_.diagonal().setZero();
  forcing_.resize(d);
  next_.resize(d);
}

bool Stepper::try_substep(Eigen::VectorXd& x, double dt, const double* dw, const FeedbackSpec* h,
                          const Eigen::VectorXd* u) {
  const Eigen::Index d = x.size();
  if (h != nullptr) {
    h->evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(d)),
                std::span<double>(forcing_.data(), static_cast<std::size_t>(d)));
  } else {
    forcing_ = *u;
  }
  if (options_.scheme == Scheme::euler_maruyama) {
    next_.noalias() = linear_.A() * x;
    next_ = x + dt * (next_ + forcing_);
    for (int k = 0; k < noise_; ++k) next_.array() += g_.col(k).array() * x.array() * dw[k];
  } else {
    next_.noalias() = a_off_ * x;
    for (Eigen::Index i = 0; i < d; ++i) {
      double exponent = drift_diag_[i] * dt;
      for (int k = 0; k < noise_; ++k) exponent += g_(i, k) * dw[k];
      next_[i] = std::exp(exponent) * x[i] + dt * (next_[i] + forcing_[i]);
    }
  }
  const double scale = 1.0 + x.cwiseAbs().maxCoeff();
  std::int64_t clamped = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (next_[i] < 0.0) {
      if (next_[i] < -options_.clamp_epsilon * scale) return false;
      next_[i] = 0.0;
      ++clamped;
    }
  }
  stats_.clamped += clamped;
  x.swap(next_);
  return true;
}

void Stepper::advance(Eigen::VectorXd& x, std::int64_t k, const FeedbackSpec* h, const Eigen::VectorXd* u) {
  ++stats_.steps;
  double dw[64];
  if (noise_ > 64) throw std::invalid_argument("at most 64 noise matrices are supported");
  for (int c = 0; c < noise_; ++c) dw[c] = grid_.increment(c, k);
  Eigen::VectorXd saved = x;
  if (try_substep(x, grid_.dt(), dw, h, u)) return;

  ++stats_.halvings;
  for (int level = 1; level <= options_.max_halving; ++level) {
    const int factor = 1 << level;
    const Eigen::MatrixXd sub = grid_.bridge_increments(k, factor);
    x = saved;
    bool ok = true;
    for (int r = 0; r < factor && ok; ++r) {
      for (int c = 0; c < noise_; ++c) dw[c] = sub(c, r);
      ok = try_substep(x, grid_.dt() / factor, dw, h, u);
    }
    if (ok) return;
  }
  x = saved;
  std::ostringstream os;
  os << "state left the nonnegative orthant at t = " << static_cast<double>(k) * grid_.dt() << " after "
     << options_.max_halving << " step halvings; reduce dt";
  throw PositivityError(os.str());
}

void Stepper::step(Eigen::VectorXd& x, std::int64_t k, const FeedbackSpec& h) { advance(x, k, &h, nullptr); }

void Stepper::step(Eigen::VectorXd& x, std::int64_t k, const Eigen::VectorXd& u) { advance(x, k, nullptr, &u); }

namespace {

void check_start(const ModelSpec& model, const Eigen::VectorXd& x0) {
  if (x0.size() != model.dim()) {
    throw std::invalid_argument("initial state has dimension " + std::to_string(x0.size()) + ", model has " +
                                std::to_string(model.dim()));
  }
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    if (!(x0[i] >= 0.0)) throw std::invalid_argument("initial state has a negative entry x" + std::to_string(i + 1));
  }
}

}  // namespace

Trajectory integrate_forward(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0, double t0,
                             double t1, const IntegratorOptions& options, int record_every) {
  check_start(model, x0);
  if (!(t0 < t1)) throw std::invalid_argument("integrate_forward needs t0 < t1");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  const std::int64_t k0 = to_slot(t0, grid.dt());
  const std::int64_t k1 = to_slot(t1, grid.dt());
  const WienerGrid path = (grid.contains_slot(k0) && grid.contains_slot(k1))
                              ? grid
                              : grid.extended(std::min(grid.t_min(), t0), std::max(grid.t_max(), t1));
  Stepper stepper(model.linear, path, options);
  Trajectory out;
  Eigen::VectorXd x = x0;
  out.times.push_back(static_cast<double>(k0) * grid.dt());
  out.states.push_back(x);
  for (std::int64_t k = k0; k < k1; ++k) {
    stepper.step(x, k, model.feedback);
    if ((k + 1 - k0) % record_every == 0 || k + 1 == k1) {
      out.times.push_back(static_cast<double>(k + 1) * grid.dt());
      out.states.push_back(x);
    }
  }
  out.stats = stepper.stats();
  return out;
}

Eigen::VectorXd pullback(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0, double T,
                         const IntegratorOptions& options) {
  check_start(model, x0);
  if (T < 0.0) throw std::invalid_argument("pullback window must be >= 0");
  const std::int64_t n = to_slot(T, grid.dt());
  if (n == 0) return x0;
  // Driving the system by theta_{-T} omega on [0, T] uses the increments of
  // omega on [-T, 0]; they are read directly from the shift-invariant path.
  const WienerGrid path = grid.contains_slot(-n) ? grid : grid.extended(-T, std::max(grid.t_max(), 0.0));
  Stepper stepper(model.linear, path, options);
  Eigen::VectorXd x = x0;
  for (std::int64_t k = -n; k < 0; ++k) stepper.step(x, k, model.feedback);
  return x;
}

double PullbackConvergence::max_distance(std::size_t window) const {
  const auto& row = distances.at(window);
  return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
}

PullbackConvergence pullback_convergence(const ModelSpec& model, const WienerGrid& grid,
                                         const std::vector<Eigen::VectorXd>& starts, const std::vector<double>& windows,
                                         const IntegratorOptions& options) {
  if (starts.empty() || windows.empty()) throw std::invalid_argument("pullback_convergence needs starts and windows");
  if (!std::is_sorted(windows.begin(), windows.end())) throw std::invalid_argument("windows must be ascending");
  PullbackConvergence out;
  out.windows = windows;
  const int n = static_cast<int>(starts.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) out.pairs.emplace_back(i, j);
  }
  for (double T : windows) {
    std::vector<Eigen::VectorXd> states;
    states.reserve(starts.size());
    for (const auto& x0 : starts) states.push_back(pullback(model, grid, x0, T, options));
    std::vector<double> row;
    for (const auto& [i, j] : out.pairs) {
      row.push_back((states[static_cast<std::size_t>(i)] - states[static_cast<std::size_t>(j)]).cwiseAbs().maxCoeff());
    }
    out.distances.push_back(std::move(row));
    out.states.push_back(std::move(states));
  }
  for (std::size_t w = 1; w < windows.size(); ++w) {
    if (out.max_distance(w) > out.max_distance(w - 1) + 1e-12) out.monotone_trend = false;
  }
  return out;
}

}  // namespace sgain

#include "sgain/linearflow.hpp"

#include "sgain/philox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgain {

namespace {

std::string entry_name(int i, int j) { return "A[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]"; }

void require_node(const WienerGrid& grid, double t, std::int64_t& steps) {
  if (t < 0.0) throw std::invalid_argument("time must be >= 0");
  steps = to_slot(t, grid.dt());
  if (!grid.contains_slot(steps)) throw GridAlignmentError("time " + std::to_string(t) + " is outside the grid window");
}

void require_noise_dims(const LinearSystem& system, const WienerGrid& grid) {
  if (grid.dims() < system.noise_count()) {
    throw std::invalid_argument("Wiener grid has fewer components than the system has noise matrices");
  }
}

}  // namespace

std::string to_string(Structure s) {
  switch (s) {
    case Structure::diagonal: return "diagonal";
    case Structure::single_loop: return "single_loop";
    case Structure::general: return "general";
  }
  return "general";
}

Structure structure_from_string(const std::string& s) {
  if (s == "diagonal") return Structure::diagonal;
  if (s == "single_loop") return Structure::single_loop;
  if (s == "general") return Structure::general;
  throw ModelError("unknown structure tag '" + s + "' (expected diagonal, single_loop or general)");
}

LinearSystem LinearSystem::make(int dim, std::vector<Rational> a, std::vector<std::vector<Rational>> noise,
                                Structure structure) {
  if (dim <= 0) throw ModelError("dimension must be positive");
  if (a.size() != static_cast<std::size_t>(dim * dim)) {
    throw ModelError("A has " + std::to_string(a.size()) + " entries, expected " + std::to_string(dim * dim));
  }
  for (std::size_t k = 0; k < noise.size(); ++k) {
    if (noise[k].size() != static_cast<std::size_t>(dim)) {
      throw ModelError("noise matrix " + std::to_string(k + 1) + " has diagonal of length " +
                       std::to_string(noise[k].size()) + ", expected " + std::to_string(dim));
    }
  }
  auto at = [&](int i, int j) -> const Rational& { return a[static_cast<std::size_t>(i * dim + j)]; };
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      if (i != j && at(i, j) < 0) {
        throw ModelError("A is not cooperative: " + entry_name(i, j) + " = " + to_fraction_string(at(i, j)) + " < 0");
      }
    }
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      if (i == j) continue;
      const bool is_zero = at(i, j) == 0;
      if (structure == Structure::diagonal && !is_zero) {
        throw ModelError("structure 'diagonal' but " + entry_name(i, j) + " is nonzero");
      }
      if (structure == Structure::single_loop) {
        if (j == i - 1 && at(i, j) != 1) {
          throw ModelError("structure 'single_loop' needs sub-diagonal entries equal to 1, " + entry_name(i, j) +
                           " = " + to_fraction_string(at(i, j)));
        }
        if (j != i - 1 && !is_zero) {
          throw ModelError("structure 'single_loop' but " + entry_name(i, j) + " is nonzero");
        }
      }
    }
  }

  LinearSystem s;
  s.dim_ = dim;
  s.structure_ = structure;
  s.a_ = Eigen::MatrixXd(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) s.a_(i, j) = to_double(at(i, j));
  }
  for (const auto& g : noise) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = to_double(g[static_cast<std::size_t>(i)]);
    s.noise_.push_back(std::move(v));
  }
  s.a_exact_ = std::move(a);
  s.noise_exact_ = std::move(noise);
  return s;
}

LinearSystem LinearSystem::single_loop(const std::vector<Rational>& alpha, const std::vector<Rational>& sigma) {
  const int n = static_cast<int>(alpha.size());
  if (sigma.size() != alpha.size()) throw ModelError("alpha and sigma lengths differ");
  std::vector<Rational> a(static_cast<std::size_t>(n * n), Rational(0));
  std::vector<std::vector<Rational>> noise(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n), Rational(0)));
  for (int i = 0; i < n; ++i) {
    a[static_cast<std::size_t>(i * n + i)] = -alpha[static_cast<std::size_t>(i)];
    if (i > 0) a[static_cast<std::size_t>(i * n + i - 1)] = 1;
    noise[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = sigma[static_cast<std::size_t>(i)];
  }
  return make(n, std::move(a), std::move(noise), Structure::single_loop);
}

LinearSystem LinearSystem::diagonal(const std::vector<Rational>& alpha, const std::vector<Rational>& sigma) {
  const int n = static_cast<int>(alpha.size());
  if (sigma.size() != alpha.size()) throw ModelError("alpha and sigma lengths differ");
  std::vector<Rational> a(static_cast<std::size_t>(n * n), Rational(0));
  std::vector<std::vector<Rational>> noise(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n), Rational(0)));
  for (int i = 0; i < n; ++i) {
    a[static_cast<std::size_t>(i * n + i)] = -alpha[static_cast<std::size_t>(i)];
    noise[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = sigma[static_cast<std::size_t>(i)];
  }
  return make(n, std::move(a), std::move(noise), Structure::diagonal);
}

bool LinearSystem::noise_separable() const {
  for (const auto& g : noise_exact_) {
    int nonzero = 0;
    for (const auto& v : g) nonzero += (v != 0) ? 1 : 0;
    if (nonzero > 1) return false;
  }
  return true;
}

Rational LinearSystem::noise_square_exact(int i) const {
  Rational c(0);
  for (const auto& g : noise_exact_) c += g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];
  return c;
}

double LyapunovReport::k1() const { return std::sqrt(to_double(frobenius_square)); }

double LyapunovReport::sharp_bound() const { return k1() + to_double(k2 / 2 - k3); }

std::string LyapunovReport::sharp_bound_decimal(int digits) const {
  return sqrt_plus_offset_decimal(frobenius_square, k2 / 2 - k3, digits);
}

bool LyapunovReport::certifies_negative_exponent() const {
  return sqrt_plus_offset_negative(frobenius_square, k2 / 2 - k3);
}

Eigen::VectorXd ito_correction(const LinearSystem& system) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(system.dim());
  for (int k = 0; k < system.noise_count(); ++k) c += system.noise(k).cwiseAbs2();
  return c;
}

std::vector<Rational> ito_correction_exact(const LinearSystem& system) {
  std::vector<Rational> c;
  for (int i = 0; i < system.dim(); ++i) c.push_back(system.noise_square_exact(i));
  return c;
}

namespace {

// Exponent a_ii t - C_ii t/2 + sum_k g_k^i W_t^k of the diagonal factor at node k.
double diagonal_exponent(const LinearSystem& system, const Eigen::VectorXd& ito, const WienerGrid& grid, int i,
                         std::int64_t k) {
  const double t = static_cast<double>(k) * grid.dt();
  double e = (system.A()(i, i) - 0.5 * ito[i]) * t;
  for (int m = 0; m < system.noise_count(); ++m) e += system.noise(m)[i] * grid.value(m, k);
  return e;
}

}  // namespace

FundamentalMatrix phi_exact_diagonal(const LinearSystem& system, const WienerGrid& grid, double t) {
  if (system.structure() != Structure::diagonal) {
    throw std::invalid_argument("phi_exact_diagonal requires structure 'diagonal'");
  }
  require_noise_dims(system, grid);
  std::int64_t steps = 0;
  require_node(grid, t, steps);
  const Eigen::VectorXd ito = ito_correction(system);
  FundamentalMatrix phi{t, Eigen::MatrixXd::Zero(system.dim(), system.dim())};
  for (int i = 0; i < system.dim(); ++i) phi.entries(i, i) = std::exp(diagonal_exponent(system, ito, grid, i, steps));
  return phi;
}

FundamentalMatrix phi_single_loop(const LinearSystem& system, const WienerGrid& grid, double t) {
  if (system.structure() != Structure::single_loop) {
    throw std::invalid_argument("phi_single_loop requires structure 'single_loop'");
  }
  require_noise_dims(system, grid);
  std::int64_t steps = 0;
  require_node(grid, t, steps);
  const int n = system.dim();
  const double dt = grid.dt();
  const Eigen::VectorXd ito = ito_correction(system);

  // Current column state: phi(i, j) at the present node for all i, j.
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd prev_exp(n);
  for (int i = 0; i < n; ++i) prev_exp[i] = diagonal_exponent(system, ito, grid, i, 0);
  Eigen::MatrixXd next(n, n);
  Eigen::VectorXd next_exp(n);
  for (std::int64_t k = 0; k < steps; ++k) {
    for (int i = 0; i < n; ++i) next_exp[i] = diagonal_exponent(system, ito, grid, i, k + 1);
    next.setZero();
    for (int i = 0; i < n; ++i) {
      const double ratio = std::exp(next_exp[i] - prev_exp[i]);  // Phi_ii(t_{k+1}) / Phi_ii(t_k)
      next(i, i) = std::exp(next_exp[i]);
      // Rows are processed top-down so next(i-1, j) is already available.
      for (int j = 0; j < i; ++j) {
        next(i, j) = ratio * phi(i, j) + 0.5 * dt * (ratio * phi(i - 1, j) + next(i - 1, j));
      }
    }
    phi.swap(next);
    prev_exp.swap(next_exp);
  }
  return {t, phi};
}

FundamentalMatrix phi_numeric(const LinearSystem& system, const WienerGrid& grid, double t) {
  require_noise_dims(system, grid);
  std::int64_t steps = 0;
  require_node(grid, t, steps);
  const int n = system.dim();
  const double dt = grid.dt();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd next(n, n);
  Eigen::VectorXd scale(n);
  for (std::int64_t k = 0; k < steps; ++k) {
    scale.setZero();
    for (int m = 0; m < system.noise_count(); ++m) scale += system.noise(m) * grid.increment(m, k);
    next.noalias() = system.A() * phi;
    next *= dt;
    next += phi + scale.asDiagonal() * phi;
    phi.swap(next);
  }
  return {t, phi};
}

LyapunovReport mao_bound(const LinearSystem& system) {
  LyapunovReport r;
  r.empirical_exponent = std::numeric_limits<double>::quiet_NaN();
  const int n = system.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) r.frobenius_square += system.a_exact(i, j) * system.a_exact(i, j);
  }
  r.k1_rounded = half_step_sqrt_ceiling(r.frobenius_square);
  for (int i = 0; i < n; ++i) r.k2 = std::max(r.k2, system.noise_square_exact(i));
  for (int k = 0; k < system.noise_count(); ++k) {
    bool all_positive = true;
    bool all_negative = true;
    Rational smallest = -1;
    for (int i = 0; i < n; ++i) {
      const Rational& g = system.noise_exact(k, i);
      all_positive = all_positive && g > 0;
      all_negative = all_negative && g < 0;
      const Rational mag = g < 0 ? Rational(-g) : g;
      if (smallest < 0 || mag < smallest) smallest = mag;
    }
    // A mixed-sign or zero-containing matrix gives no lower bound on (x'Gx)^2.
    if (all_positive || all_negative) r.k3 += smallest * smallest;
  }
  r.bound = r.k1_rounded + r.k2 / 2 - r.k3;
  return r;
}

double lyapunov_empirical(const LinearSystem& system, const WienerGrid& grid, const Eigen::VectorXd& x0,
                          double t_max) {
  require_noise_dims(system, grid);
  if (x0.size() != system.dim()) throw std::invalid_argument("x0 has wrong dimension");
  if (x0.norm() == 0.0) throw std::invalid_argument("lyapunov_empirical needs x0 != 0");
  std::int64_t steps = 0;
  require_node(grid, t_max, steps);
  if (steps == 0) throw std::invalid_argument("t_max must be positive");
  const int n = system.dim();
  const double dt = grid.dt();
  const auto period = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(1.0 / dt)));
  const Eigen::VectorXd drift = (system.A().diagonal() - 0.5 * ito_correction(system)) * dt;
  Eigen::MatrixXd coupling = system.A();
  coupling.diagonal().setZero();

  Eigen::VectorXd x = x0;
  Eigen::VectorXd next(n);
  Eigen::VectorXd expo(n);
  double log_scale = 0.0;
  for (std::int64_t k = 0; k < steps; ++k) {
    expo = drift;
    for (int m = 0; m < system.noise_count(); ++m) expo += system.noise(m) * grid.increment(m, k);
    next.noalias() = coupling * x;
    next *= dt;
    next.array() += expo.array().exp() * x.array();
    x.swap(next);
    if ((k + 1) % period == 0) {
      const double norm = x.norm();
      if (norm == 0.0 || !std::isfinite(norm)) break;
      log_scale += std::log(norm);
      x /= norm;
    }
  }
  return (log_scale + std::log(x.norm())) / t_max;
}

double gbm_sup_expectation(double mu, double sigma) {
  if (!(mu > 0.0)) throw std::invalid_argument("gbm_sup_expectation needs mu > 0");
  return 1.0 + sigma * sigma / (2.0 * mu);
}

Rational gbm_sup_expectation(const Rational& mu, const Rational& sigma) {
  if (mu <= 0) throw std::invalid_argument("gbm_sup_expectation needs mu > 0");
  return Rational(1) + sigma * sigma / (2 * mu);
}

MonteCarloEstimate gbm_sup_mc(double mu, double sigma, std::int64_t n_paths, double dt, double horizon,
                              std::uint64_t seed) {
  if (!(mu > 0.0)) throw std::invalid_argument("gbm_sup_mc needs mu > 0");
  if (n_paths <= 1) throw std::invalid_argument("gbm_sup_mc needs at least two paths");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(std::exp(-mu * horizon) < 1e-6)) throw std::invalid_argument("horizon too short: need exp(-mu*horizon) < 1e-6");
  const auto steps = to_slot(horizon, dt);
  const double drift = -(mu + 0.5 * sigma * sigma) * dt;
  const double vol = std::abs(sigma) * std::sqrt(dt);
  // P(sup of a Brownian path with drift -nu rises by g) = exp(-2 nu g / sigma^2).
  const double nu = mu + 0.5 * sigma * sigma;
  const double stop_gap = sigma == 0.0 ? 0.0 : -std::log(1e-16) * sigma * sigma / (2.0 * nu);

  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::int64_t p = 0; p < n_paths; ++p) {
    double log_x = 0.0;
    double log_max = 0.0;
    if (sigma != 0.0) {
      const auto path = static_cast<std::uint32_t>(p);
      for (std::int64_t k = 0; k < steps; ++k) {
        const double prev = log_x;
        log_x += drift + vol * keyed_normal({seed, path, 0, k});
        // Exact maximum of the Brownian bridge between the two nodes: without it
        // the grid maximum misses an O(sigma sqrt(dt)) share of the excursion.
        const double u = keyed_uniform({seed, path, 1, k});
        const double jump = log_x - prev;
        const double bridge_max = 0.5 * (prev + log_x + std::sqrt(jump * jump - 2.0 * vol * vol * std::log(u)));
        log_max = std::max(log_max, bridge_max);
        if (log_x < log_max - stop_gap) break;
      }
    }
    const double s = std::exp(log_max);
    sum += s;
    sum_sq += s * s;
  }
  const auto n = static_cast<double>(n_paths);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), n_paths};
}

}  // namespace sgain

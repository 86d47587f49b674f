#include "sgain/wiener.hpp"

#include "sgain/philox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sgain {

namespace {

// Refines component values over absolute slots [first, first + n) at
// multiplier `level` by prime `p`, returning values over
// [first * p, (first + n - 1) * p] at multiplier level * p.
std::vector<double> bridge_refine(const std::vector<double>& coarse, std::int64_t first, int p, std::int64_t level,
                                  double base_dt, std::uint64_t seed, int component) {
  const auto n = static_cast<std::int64_t>(coarse.size());
  std::vector<double> fine(static_cast<std::size_t>((n - 1) * p + 1));
  const std::int64_t new_level = level * p;
  const double fine_dt = base_dt / static_cast<double>(new_level);
  for (std::int64_t j = 0; j + 1 < n; ++j) {
    const double b = coarse[static_cast<std::size_t>(j + 1)];
    double w = coarse[static_cast<std::size_t>(j)];
    fine[static_cast<std::size_t>(j * p)] = w;
    const std::int64_t abs_j = first + j;
    for (int r = 1; r < p; ++r) {
      const double remaining = static_cast<double>(p - r + 1);
      const double mean = w + (b - w) / remaining;
      const double var = fine_dt * static_cast<double>(p - r) / remaining;
      const NoiseKey key{seed, static_cast<std::uint32_t>(component), static_cast<std::uint32_t>(new_level),
                         abs_j * p + r};
      w = mean + std::sqrt(var) * keyed_normal(key);
      fine[static_cast<std::size_t>(j * p + r)] = w;
    }
  }
  fine.back() = coarse.back();
  return fine;
}

std::vector<int> prime_factors(int n) {
  std::vector<int> out;
  for (int p = 2; static_cast<long long>(p) * p <= n; ++p) {
    while (n % p == 0) {
      out.push_back(p);
      n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace

std::int64_t to_slot(double t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const double ratio = t / dt;
  const double k = std::round(ratio);
  if (!std::isfinite(ratio) || std::abs(ratio - k) > 1e-9 * std::max(1.0, std::abs(ratio)) + 1e-9) {
    throw GridAlignmentError("time " + std::to_string(t) + " is not a multiple of dt=" + std::to_string(dt));
  }
  return static_cast<std::int64_t>(k);
}

std::shared_ptr<const WienerGrid::Samples> WienerGrid::build(int dims, std::uint64_t seed, double base_dt,
                                                             const std::vector<int>& chain, std::int64_t abs_first,
                                                             std::int64_t abs_last) {
  std::int64_t multiplier = 1;
  for (int p : chain) multiplier *= p;
  // Base-resolution range covering the requested fine range, plus the pin at 0.
  const std::int64_t base_first = std::min<std::int64_t>(floor_div(abs_first, multiplier), 0);
  const std::int64_t base_last = std::max<std::int64_t>(ceil_div(abs_last, multiplier), 0);
  const double sqrt_dt = std::sqrt(base_dt);

  auto samples = std::make_shared<Samples>();
  samples->abs_first = abs_first;
  samples->cols = abs_last - abs_first + 1;
  samples->values.resize(static_cast<std::size_t>(dims * samples->cols));

  for (int i = 0; i < dims; ++i) {
    const auto n = static_cast<std::size_t>(base_last - base_first + 1);
    std::vector<double> path(n, 0.0);
    const auto zero = static_cast<std::size_t>(-base_first);
    for (std::int64_t j = 0; j < base_last; ++j) {
      const auto at = static_cast<std::size_t>(j - base_first);
      path[at + 1] = path[at] + sqrt_dt * keyed_normal({seed, static_cast<std::uint32_t>(i), 0, j});
    }
    for (std::int64_t j = -1; j >= base_first; --j) {
      const auto at = static_cast<std::size_t>(j - base_first);
      path[at] = path[at + 1] - sqrt_dt * keyed_normal({seed, static_cast<std::uint32_t>(i), 0, j});
    }
    (void)zero;
    std::int64_t first = base_first;
    std::int64_t level = 1;
    for (int p : chain) {
      path = bridge_refine(path, first, p, level, base_dt, seed, i);
      first *= p;
      level *= p;
    }
    for (std::int64_t j = abs_first; j <= abs_last; ++j) {
      samples->values[static_cast<std::size_t>(i * samples->cols + (j - abs_first))] =
          path[static_cast<std::size_t>(j - first)];
    }
  }
  return samples;
}

WienerGrid WienerGrid::sample(int dims, double t_min, double t_max, double dt, std::uint64_t seed) {
  if (dims <= 0) throw std::invalid_argument("Wiener grid needs at least one component");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (t_min > 0.0) throw std::invalid_argument("t_min must be <= 0");
  if (t_max < 0.0) throw std::invalid_argument("t_max must be >= 0");
  std::int64_t first = 0;
  std::int64_t last = 0;
  try {
    first = to_slot(t_min, dt);
    last = to_slot(t_max, dt);
  } catch (const GridAlignmentError&) {
    throw std::invalid_argument("window [t_min, t_max] is not an integer number of steps");
  }
  WienerGrid g;
  g.dims_ = dims;
  g.dt_ = dt;
  g.base_dt_ = dt;
  g.seed_ = seed;
  g.first_ = first;
  g.last_ = last;
  g.samples_ = build(dims, seed, dt, g.chain_, first, last);
  return g;
}

Eigen::VectorXd WienerGrid::value_at(double t) const {
  const std::int64_t k = to_slot(t, dt_);
  if (!contains_slot(k)) throw GridAlignmentError("time " + std::to_string(t) + " is outside the grid window");
  Eigen::VectorXd w(dims_);
  for (int i = 0; i < dims_; ++i) w[i] = value(i, k);
  return w;
}

double WienerGrid::value(int component, std::int64_t k) const {
  return absolute(component, offset_ + k) - absolute(component, offset_);
}

double WienerGrid::increment(int component, std::int64_t k) const {
  return absolute(component, offset_ + k + 1) - absolute(component, offset_ + k);
}

WienerGrid WienerGrid::shift(double s) const { return shift_slots(to_slot(s, dt_)); }

WienerGrid WienerGrid::shift_slots(std::int64_t s) const {
  WienerGrid g = *this;
  if (!contains_slot(s)) {
    g = extended(std::min(t_min(), static_cast<double>(s) * dt_), std::max(t_max(), static_cast<double>(s) * dt_));
  }
  g.offset_ += s;
  g.first_ -= s;
  g.last_ -= s;
  return g;
}

WienerGrid WienerGrid::extended(double t_min, double t_max) const {
  if (t_min > 0.0 || t_max < 0.0) throw std::invalid_argument("extended window must contain 0");
  const std::int64_t first = std::min(first_, to_slot(t_min, dt_));
  const std::int64_t last = std::max(last_, to_slot(t_max, dt_));
  if (first == first_ && last == last_) return *this;
  WienerGrid g = *this;
  g.first_ = first;
  g.last_ = last;
  const std::int64_t need_first = std::min(offset_ + first, offset_);
  const std::int64_t need_last = std::max(offset_ + last, offset_);
  if (need_first < samples_->abs_first || need_last >= samples_->abs_first + samples_->cols) {
    g.samples_ = build(dims_, seed_, base_dt_, chain_, std::min(need_first, samples_->abs_first),
                       std::max(need_last, samples_->abs_first + samples_->cols - 1));
  }
  return g;
}

WienerGrid WienerGrid::refine(int factor) const {
  if (factor < 2) throw std::invalid_argument("refinement factor must be >= 2");
  WienerGrid g = *this;
  for (int p : prime_factors(factor)) {
    g.chain_.push_back(p);
    g.multiplier_ *= p;
  }
  g.dt_ = base_dt_ / static_cast<double>(g.multiplier_);
  g.offset_ = offset_ * factor;
  g.first_ = first_ * factor;
  g.last_ = last_ * factor;
  const std::int64_t abs_first = samples_->abs_first * factor;
  const std::int64_t abs_last = (samples_->abs_first + samples_->cols - 1) * factor;
  g.samples_ = build(dims_, seed_, base_dt_, g.chain_, abs_first, abs_last);
  return g;
}

Eigen::MatrixXd WienerGrid::bridge_increments(std::int64_t k, int factor) const {
  if (factor < 1 || (factor & (factor - 1)) != 0) {
    throw std::invalid_argument("bridge_increments needs a power-of-two factor");
  }
  if (!contains_slot(k) || !contains_slot(k + 1)) throw GridAlignmentError("slot outside the grid window");
  Eigen::MatrixXd out(dims_, factor);
  const std::int64_t abs_k = offset_ + k;
  for (int i = 0; i < dims_; ++i) {
    std::vector<double> vals{absolute(i, abs_k), absolute(i, abs_k + 1)};
    std::int64_t first = abs_k;
    std::int64_t level = multiplier_;
    for (int f = factor; f > 1; f /= 2) {
      vals = bridge_refine(vals, first, 2, level, base_dt_, seed_, i);
      first *= 2;
      level *= 2;
    }
    for (int j = 0; j < factor; ++j) out(i, j) = vals[static_cast<std::size_t>(j + 1)] - vals[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace sgain

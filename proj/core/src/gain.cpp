#include "sgain/gain.hpp"

#include "sgain/philox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgain {

InputFunction::InputFunction(double window, double dt, Eigen::MatrixXd values)
    : window_(window), dt_(dt), values_(std::move(values)) {
  if (!(dt > 0.0)) throw std::invalid_argument("input function needs dt > 0");
  if (!(window > 0.0)) throw std::invalid_argument("input function window must be positive");
  if (values_.cols() != to_slot(window, dt) + 1) {
    throw std::invalid_argument("input function needs one column per node of [-T, 0]");
  }
}

InputFunction InputFunction::constant(double window, double dt, const Eigen::VectorXd& value) {
  const std::int64_t n = to_slot(window, dt) + 1;
  return InputFunction(window, dt, value.replicate(1, static_cast<Eigen::Index>(n)));
}

Eigen::VectorXd InputFunction::at(double s) const {
  const std::int64_t k = to_slot(s, dt_) - first_slot();
  if (k < 0 || k >= nodes()) throw std::out_of_range("time outside the input window");
  return values_.col(static_cast<Eigen::Index>(k));
}

double InputFunction::sup_distance(const InputFunction& other) const {
  if (other.values_.cols() != values_.cols() || other.values_.rows() != values_.rows()) {
    throw std::invalid_argument("input functions live on different windows");
  }
  return (values_ - other.values_).cwiseAbs().maxCoeff();
}

namespace {

WienerGrid covering(const WienerGrid& grid, double T) {
  const std::int64_t n = to_slot(T, grid.dt());
  if (grid.contains_slot(-n) && grid.contains_slot(0)) return grid;
  return grid.extended(std::min(grid.t_min(), -T), std::max(grid.t_max(), 0.0));
}

void check_input(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u) {
  if (u.dim() != model.dim()) throw std::invalid_argument("input function has the wrong dimension");
  if (std::abs(u.dt() - grid.dt()) > 1e-15 * grid.dt()) throw std::invalid_argument("input and grid steps differ");
}

// Y at nodes 0..last of the window, Y(-T) = 0.
Eigen::MatrixXd sweep(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u, std::int64_t last,
                      const IntegratorOptions& options) {
  check_input(model, grid, u);
  const WienerGrid path = covering(grid, u.window());
  Stepper stepper(model.linear, path, options);
  Eigen::MatrixXd y(model.dim(), static_cast<Eigen::Index>(last + 1));
  Eigen::VectorXd state = Eigen::VectorXd::Zero(model.dim());
  Eigen::VectorXd input(model.dim());
  y.col(0) = state;
  for (std::int64_t j = 0; j < last; ++j) {
    input = u.values().col(static_cast<Eigen::Index>(j));
    stepper.step(state, u.first_slot() + j, input);
    y.col(static_cast<Eigen::Index>(j + 1)) = state;
  }
  return y;
}

}  // namespace

Eigen::MatrixXd k_sweep(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u,
                        const IntegratorOptions& options) {
  return sweep(model, grid, u, u.nodes() - 1, options);
}

Eigen::VectorXd k_operator(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u, double s_eval,
                           const IntegratorOptions& options) {
  const std::int64_t j = to_slot(s_eval, u.dt()) - u.first_slot();
  if (j < 0 || j >= u.nodes()) throw std::out_of_range("s_eval lies outside the input window");
  return sweep(model, grid, u, j, options).col(static_cast<Eigen::Index>(j));
}

InputFunction gain_apply(const ModelSpec& model, const WienerGrid& grid, const InputFunction& u,
                         const IntegratorOptions& options) {
  const Eigen::MatrixXd y = k_sweep(model, grid, u, options);
  Eigen::MatrixXd v(y.rows(), y.cols());
  const auto d = static_cast<std::size_t>(y.rows());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    model.feedback.evaluate(std::span<const double>(y.col(j).data(), d), std::span<double>(v.col(j).data(), d));
  }
  return InputFunction(u.window(), u.dt(), std::move(v));
}

EquilibriumEstimate gain_fixed_point(const ModelSpec& model, const WienerGrid& grid, double T, double tol, int max_iter,
                                     const IntegratorOptions& options) {
  if (!(T > 0.0)) throw std::invalid_argument("window must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  const WienerGrid path = covering(grid, T);
  EquilibriumEstimate est;
  est.window = T;
  InputFunction u = InputFunction::constant(T, grid.dt(), 0.5 * model.feedback.gamma());
  for (int k = 0; k < max_iter; ++k) {
    InputFunction v = gain_apply(model, path, u, options);
    const double residual = v.sup_distance(u);
    est.residual_history.push_back(residual);
    est.iterations = k + 1;
    u = std::move(v);
    if (residual < tol) {
      est.converged = true;
      break;
    }
  }
  est.value_at_zero = k_sweep(model, path, u, options).rightCols(1);
  est.input = std::move(u);
  if (!est.converged) {
    // Build the message first: argument evaluation order is unspecified.
    std::string message = "Picard iteration did not reach tolerance " + std::to_string(tol) + " in " +
                          std::to_string(max_iter) + " iterations (last residual " +
                          std::to_string(est.residual_history.back()) + ")";
    throw ConvergenceError(message, std::move(est));
  }
  return est;
}

double default_window(double lambda, double scale, double tol, double dt) {
  if (!(lambda > 0.0) || !(tol > 0.0) || !(dt > 0.0)) throw std::invalid_argument("default_window needs positive inputs");
  const double T = std::max(dt, std::log(10.0 * std::max(scale, tol) / tol) / lambda);
  return std::ceil(T / dt - 1e-9) * dt;
}

EnvelopeFunctions envelope_functions(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0,
                                     double tau, double T, int stride, const IntegratorOptions& options) {
  if (!(tau < T)) throw std::invalid_argument("envelope needs tau < T");
  if (tau < 0.0) throw std::invalid_argument("envelope needs tau >= 0");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    if (!(x0[i] >= 0.0)) throw std::invalid_argument("initial state has a negative entry");
  }
  const WienerGrid path = covering(grid, T);
  const std::int64_t n = to_slot(T, grid.dt());
  const std::int64_t min_elapsed = static_cast<std::int64_t>(std::ceil(tau / grid.dt() - 1e-9));
  const int d = model.dim();
  const auto du = static_cast<std::size_t>(d);
  Eigen::MatrixXd lo = Eigen::MatrixXd::Constant(d, n + 1, std::numeric_limits<double>::infinity());
  Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(d, n + 1, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd h(d);
  Stepper stepper(model.linear, path, options);
  // Start slots -n, -n + stride, ...; node j of the window is slot j - n.
  for (std::int64_t start = 0; start <= n; start += stride) {
    Eigen::VectorXd x = x0;
    for (std::int64_t j = start; j <= n; ++j) {
      if (j > start) stepper.step(x, j - 1 - n, model.feedback);
      if (j - start < min_elapsed) continue;
      model.feedback.evaluate(std::span<const double>(x.data(), du), std::span<double>(h.data(), du));
      lo.col(static_cast<Eigen::Index>(j)) = lo.col(static_cast<Eigen::Index>(j)).cwiseMin(h);
      hi.col(static_cast<Eigen::Index>(j)) = hi.col(static_cast<Eigen::Index>(j)).cwiseMax(h);
    }
  }
  // Nodes too close to -T have no admissible member; fall back to the range of h.
  for (Eigen::Index j = 0; j <= n; ++j) {
    if (!std::isfinite(lo(0, j))) {
      lo.col(j) = model.feedback.delta();
      hi.col(j) = model.feedback.gamma();
    }
  }
  EnvelopeFunctions out;
  out.at_zero = EnvelopePair{lo.col(n), hi.col(n), tau};
  out.xi = InputFunction(T, grid.dt(), std::move(lo));
  out.eta = InputFunction(T, grid.dt(), std::move(hi));
  return out;
}

EnvelopePair envelope(const ModelSpec& model, const WienerGrid& grid, const Eigen::VectorXd& x0, double tau, double T,
                      int stride, const IntegratorOptions& options) {
  // Only trajectories reaching node 0 matter here: one pullback per start time.
  if (!(tau < T)) throw std::invalid_argument("envelope needs tau < T");
  if (tau < 0.0) throw std::invalid_argument("envelope needs tau >= 0");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  const std::int64_t n = to_slot(T, grid.dt());
  const std::int64_t min_elapsed = static_cast<std::int64_t>(std::ceil(tau / grid.dt() - 1e-9));
  const WienerGrid path = covering(grid, T);
  EnvelopePair out;
  out.tau = tau;
  out.xi = Eigen::VectorXd::Constant(model.dim(), std::numeric_limits<double>::infinity());
  out.eta = Eigen::VectorXd::Constant(model.dim(), -std::numeric_limits<double>::infinity());
  for (std::int64_t start = n; start >= min_elapsed; start -= stride) {
    const Eigen::VectorXd x = pullback(model, path, x0, static_cast<double>(start) * grid.dt(), options);
    const Eigen::VectorXd h = model.feedback(x);
    out.xi = out.xi.cwiseMin(h);
    out.eta = out.eta.cwiseMax(h);
  }
  return out;
}

double part_metric(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("part_metric needs vectors of equal length");
  double out = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::invalid_argument("part_metric needs strictly positive entries (component " + std::to_string(i + 1) + ")");
    }
    // Difference of logs keeps p(x, y) == p(y, x) bit-for-bit.
    out = std::max(out, std::abs(std::log(x[i]) - std::log(y[i])));
  }
  return out;
}

double part_metric_ensemble(const std::vector<Eigen::VectorXd>& u, const std::vector<Eigen::VectorXd>& v) {
  if (u.size() != v.size()) throw std::invalid_argument("ensembles have different lengths");
  double out = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) out = std::max(out, part_metric(u[i], v[i]));
  return out;
}

SublinearityReport sublinearity_check(const FeedbackSpec& spec, ShiftKind kind, std::optional<Rational> amount,
                                      const SublinearityPlan& plan) {
  const int d = spec.dim();
  const auto du = static_cast<std::size_t>(d);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(d);
  SublinearityReport report;
  if (kind == ShiftKind::subtract_delta_over_T) {
    if (amount) {
      if ((spec.delta().array() <= 0.0).any()) throw std::invalid_argument("subtract shift needs delta > 0");
      shift = spec.delta() / to_double(*amount);
      report.shifted_map = "h - delta/" + to_fraction_string(*amount);
    } else {
      report.shifted_map = "h";
    }
  } else {
    if (!(spec.gamma().array() > 0.0).all() || !spec.gamma().allFinite()) {
      throw std::invalid_argument("reciprocal shift needs 0 < Gamma < infinity");
    }
    if (amount) {
      shift = (to_double(*amount) * spec.gamma()).cwiseInverse();
      report.shifted_map = "1/h - 1/(" + to_fraction_string(*amount) + " Gamma)";
    } else {
      report.shifted_map = "1/h";
    }
  }
  auto shifted = [&](const std::vector<double>& x, Eigen::VectorXd& out) {
    spec.evaluate(x, std::span<double>(out.data(), du));
    if (kind == ShiftKind::reciprocal_shift_S) out = out.cwiseInverse();
    out -= shift;
  };

  std::vector<double> axis;
  const int pts = std::max(2, plan.points_per_axis);
  for (int k = 0; k < pts; ++k) {
    axis.push_back(std::exp(std::log(plan.lo) + (std::log(plan.hi) - std::log(plan.lo)) * k / (pts - 1)));
  }
  if (std::find(axis.begin(), axis.end(), 1.0) == axis.end()) axis.push_back(1.0);
  std::sort(axis.begin(), axis.end());

  std::vector<std::size_t> idx(du, 0);
  std::vector<double> x(du), lx(du);
  Eigen::VectorXd fx(d), flx(d);
  for (;;) {
    for (std::size_t i = 0; i < du; ++i) x[i] = axis[idx[i]];
    shifted(x, fx);
    for (int s = 1; s <= plan.lambda_steps; ++s) {
      const double lambda = static_cast<double>(s) / (plan.lambda_steps + 1);
      for (std::size_t i = 0; i < du; ++i) lx[i] = lambda * x[i];
      shifted(lx, flx);
      ++report.evaluations;
      for (int i = 0; i < d; ++i) {
        if (!std::isfinite(fx[i]) || !std::isfinite(flx[i])) continue;
        const double slack = plan.tolerance * (1.0 + std::abs(fx[i]) + std::abs(flx[i]));
        const double violation = lambda * fx[i] - flx[i] - slack;
        if (violation > report.worst_violation) {
          report.passed = false;
          report.worst_violation = violation;
          report.worst_x = Eigen::Map<const Eigen::VectorXd>(x.data(), d);
          report.worst_lambda = lambda;
          report.worst_component = i;
        }
      }
    }
    std::size_t k = 0;
    while (k < du && ++idx[k] == axis.size()) idx[k++] = 0;
    if (k == du) break;
  }
  return report;
}

SublinearityReport sublinearity_check(const FeedbackSpec& spec, const SublinearityPlan& plan) {
  const auto& s = spec.sublinearity();
  if (!s) return sublinearity_check(spec, ShiftKind::subtract_delta_over_T, std::nullopt, plan);
  return sublinearity_check(spec, s->kind, s->amount, plan);
}

ContractionReport contraction_estimate(
    const ModelSpec& model, const std::vector<WienerGrid>& grids,
    const std::vector<std::pair<std::vector<InputFunction>, std::vector<InputFunction>>>& pairs,
    const IntegratorOptions& integrator) {
  ContractionReport report;
  auto metric = [](const InputFunction& a, const InputFunction& b) {
    double out = 0.0;
    for (Eigen::Index j = 0; j < a.values().cols(); ++j) out = std::max(out, part_metric(a.values().col(j), b.values().col(j)));
    return out;
  };
  for (const auto& [us, vs] : pairs) {
    if (us.size() != grids.size() || vs.size() != grids.size()) throw std::invalid_argument("one input per path needed");
    double before = 0.0;
    double after = 0.0;
    for (std::size_t p = 0; p < grids.size(); ++p) {
      before = std::max(before, metric(us[p], vs[p]));
      after = std::max(after, metric(gain_apply(model, grids[p], us[p], integrator),
                                      gain_apply(model, grids[p], vs[p], integrator)));
    }
    if (before == 0.0) {
      ++report.skipped;
      continue;
    }
    report.pair_ratios.push_back(after / before);
    report.ratio = std::max(report.ratio, after / before);
  }
  return report;
}

ContractionReport contraction_estimate(const ModelSpec& model, const ContractionOptions& options) {
  if (options.paths < 1 || options.pairs < 1) throw std::invalid_argument("contraction_estimate needs paths and pairs");
  const Eigen::VectorXd lo = model.feedback.delta();
  const Eigen::VectorXd hi = model.feedback.gamma();
  if ((lo.array() <= 0.0).any()) throw std::invalid_argument("contraction_estimate needs delta > 0");
  std::vector<WienerGrid> grids;
  for (int p = 0; p < options.paths; ++p) {
    grids.push_back(WienerGrid::sample(model.noise_dims(), -options.window, 0.0, options.dt,
                                       mix_seed(options.seed, static_cast<std::uint64_t>(p))));
  }
  const std::int64_t nodes = to_slot(options.window, options.dt) + 1;
  const std::uint64_t input_seed = mix_seed(options.seed, 0xC0FFEEULL);
  auto draw = [&](int pair, int side, int path) {
    Eigen::MatrixXd values(model.dim(), static_cast<Eigen::Index>(nodes));
    const std::uint64_t key = mix_seed(input_seed, static_cast<std::uint64_t>((pair * 2 + side) * options.paths + path));
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      for (int i = 0; i < model.dim(); ++i) {
        const double r = keyed_uniform(NoiseKey{key, static_cast<std::uint32_t>(i), 0, static_cast<std::int64_t>(j)});
        values(i, j) = lo[i] + r * (hi[i] - lo[i]);
      }
    }
    return InputFunction(options.window, options.dt, std::move(values));
  };
  // Pairs are processed one at a time to bound memory.
  ContractionReport report;
  for (int m = 0; m < options.pairs; ++m) {
    std::vector<InputFunction> us, vs;
    for (int p = 0; p < options.paths; ++p) {
      us.push_back(draw(m, 0, p));
      vs.push_back(draw(m, 1, p));
    }
    const auto one = contraction_estimate(model, grids, {{std::move(us), std::move(vs)}}, options.integrator);
    report.skipped += one.skipped;
    for (double r : one.pair_ratios) {
      report.pair_ratios.push_back(r);
      report.ratio = std::max(report.ratio, r);
    }
  }
  return report;
}

}  // namespace sgain

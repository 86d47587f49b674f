#include "sgain/feedback.hpp"

#include "sgain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace sgain {

namespace {

struct FamilyInfo {
  FeedbackFamily family;
  const char* name;
  std::set<std::string> keys;
};

const std::vector<FamilyInfo>& families() {
  static const std::vector<FamilyInfo> table{
      {FeedbackFamily::goodwin, "goodwin", {"V", "K", "m", "input"}},
      {FeedbackFamily::othmer_tyson, "othmer_tyson", {"k0", "K", "m", "input"}},
      {FeedbackFamily::griffith, "griffith", {"K", "m", "input"}},
      {FeedbackFamily::competitive_hill, "competitive_hill", {"K", "m"}},
      {FeedbackFamily::shifted_saturating, "shifted_saturating", {"c", "a", "b", "offset"}},
      {FeedbackFamily::reciprocal_saturating, "reciprocal_saturating", {"c", "a", "b", "offset"}},
      {FeedbackFamily::constant, "constant", {"value"}},
      {FeedbackFamily::custom_expression, "custom_expression", {"gamma", "delta"}},
  };
  return table;
}

const FamilyInfo& info(FeedbackFamily f) {
  for (const auto& i : families()) {
    if (i.family == f) return i;
  }
  throw ModelError("unknown feedback family");
}

const Rational& scalar_param(const FeedbackParams& p, const std::string& key) {
  const auto it = p.numbers.find(key);
  if (it == p.numbers.end()) throw ModelError("feedback parameter '" + key + "' is required");
  if (it->second.size() != 1) throw ModelError("feedback parameter '" + key + "' must be a single number");
  return it->second.front();
}

void set_default(FeedbackParams& p, const std::string& key, Rational value) {
  if (!p.numbers.contains(key)) p.numbers[key] = {std::move(value)};
}

bool is_integer(const Rational& q) { return boost::multiprecision::denominator(q) == 1; }

// m * coeff_num * y^{(m-1)/m} / (K + y)^2 at the stationary point y = (m-1)K/(m+1)
// of x -> m c x^{m-1} / (K + x^m)^2.
RadicalNumber hill_derivative_sup(const Rational& c, const Rational& K, const Rational& m) {
  const Rational y = (m - 1) * K / (m + 1);
  const Rational coeff = m * c / ((K + y) * (K + y));
  if (is_integer(m)) {
    RadicalNumber r;
    const auto mi = m.convert_to<unsigned>();
    r.coeff = coeff;
    r.base = pow(y, mi - 1);
    r.root = mi;
    return r;
  }
  const double md = to_double(m);
  return RadicalNumber::upper_bound_of(to_double(coeff) * std::pow(to_double(y), (md - 1.0) / md));
}

double hill_pow(double x, double m) { return std::pow(x, m); }

}  // namespace

std::string to_string(FeedbackFamily f) { return info(f).name; }

FeedbackFamily family_from_string(const std::string& s) {
  for (const auto& i : families()) {
    if (s == i.name) return i.family;
  }
  throw ModelError("unknown feedback family '" + s + "'");
}

std::string to_string(Monotonicity m) { return m == Monotonicity::monotone ? "monotone" : "anti_monotone"; }

Monotonicity monotonicity_from_string(const std::string& s) {
  if (s == "monotone") return Monotonicity::monotone;
  if (s == "anti_monotone") return Monotonicity::anti_monotone;
  throw ModelError("unknown monotonicity '" + s + "' (expected monotone or anti_monotone)");
}

std::string to_string(ShiftKind k) {
  return k == ShiftKind::subtract_delta_over_T ? "subtract_delta_over_T" : "reciprocal_shift_S";
}

ShiftKind shift_kind_from_string(const std::string& s) {
  if (s == "subtract_delta_over_T") return ShiftKind::subtract_delta_over_T;
  if (s == "reciprocal_shift_S") return ShiftKind::reciprocal_shift_S;
  throw ModelError("unknown sublinearity shift '" + s + "'");
}

bool FeedbackSpec::single_input() const noexcept {
  return family_ == FeedbackFamily::goodwin || family_ == FeedbackFamily::othmer_tyson ||
         family_ == FeedbackFamily::griffith;
}

FeedbackSpec FeedbackSpec::make(FeedbackFamily family, int dim, FeedbackParams params) {
  if (dim <= 0) throw ModelError("feedback dimension must be positive");
  const auto& fi = info(family);
  for (const auto& [key, values] : params.numbers) {
    if (!fi.keys.contains(key)) {
      throw ModelError("unknown parameter '" + key + "' for feedback family '" + fi.name + "'");
    }
    if (values.empty()) throw ModelError("feedback parameter '" + key + "' is empty");
  }
  if (family != FeedbackFamily::custom_expression && !params.expressions.empty()) {
    throw ModelError("expressions are only allowed for custom_expression feedback");
  }

  FeedbackSpec s;
  s.family_ = family;
  s.dim_ = dim;
  auto positive = [](const Rational& q, const char* what) {
    if (q <= 0) throw ModelError(std::string("feedback parameter ") + what + " must be > 0");
  };
  auto hill_exponent = [](const Rational& m) {
    if (m <= 1) throw ModelError("Hill exponent m must be > 1, got " + to_fraction_string(m));
  };
  auto index_param = [&](const char* key, long long lo, long long hi) {
    const Rational& q = scalar_param(params, key);
    if (!is_integer(q) || q < lo || q > hi) {
      throw ModelError(std::string("feedback parameter ") + key + " must be an integer in [" + std::to_string(lo) +
                       ", " + std::to_string(hi) + "]");
    }
    return q.convert_to<int>();
  };

  Monotonicity natural = Monotonicity::monotone;
  switch (family) {
    case FeedbackFamily::goodwin:
    case FeedbackFamily::othmer_tyson:
    case FeedbackFamily::griffith: {
      set_default(params, "input", Rational(dim));
      s.input_ = index_param("input", 1, dim) - 1;
      const Rational& m = scalar_param(params, "m");
      const Rational& K = scalar_param(params, "K");
      hill_exponent(m);
      if (family == FeedbackFamily::griffith) {
        positive(K, "K");
      } else if (K <= 1) {
        throw ModelError("feedback parameter K must be > 1, got " + to_fraction_string(K));
      }
      if (family == FeedbackFamily::goodwin) positive(scalar_param(params, "V"), "V");
      if (family == FeedbackFamily::othmer_tyson) positive(scalar_param(params, "k0"), "k0");
      natural = family == FeedbackFamily::goodwin ? Monotonicity::anti_monotone : Monotonicity::monotone;
      break;
    }
    case FeedbackFamily::competitive_hill: {
      hill_exponent(scalar_param(params, "m"));
      auto& K = params.numbers.at("K");
      if (K.size() == 1) K.assign(static_cast<std::size_t>(dim), K.front());
      if (K.size() != static_cast<std::size_t>(dim)) throw ModelError("K must have one entry per component");
      for (const auto& k : K) {
        if (k <= 1) throw ModelError("competitive_hill needs every K_i > 1");
      }
      natural = Monotonicity::anti_monotone;
      break;
    }
    case FeedbackFamily::shifted_saturating:
    case FeedbackFamily::reciprocal_saturating: {
      set_default(params, "offset", Rational(0));
      s.offset_ = index_param("offset", -dim, dim);
      const Rational& c = scalar_param(params, "c");
      const Rational& a = scalar_param(params, "a");
      const Rational& b = scalar_param(params, "b");
      positive(b, "b");
      if (a < 0) throw ModelError("feedback parameter a must be >= 0");
      if (c < 0) throw ModelError("feedback parameter c must be >= 0");
      if (family == FeedbackFamily::reciprocal_saturating && c + std::min(a / b, Rational(1)) <= 0) {
        throw ModelError("reciprocal_saturating denominator can vanish");
      }
      const bool increasing = a <= b;
      natural = (increasing == (family == FeedbackFamily::shifted_saturating)) ? Monotonicity::monotone
                                                                              : Monotonicity::anti_monotone;
      break;
    }
    case FeedbackFamily::constant: {
      auto& v = params.numbers.at("value");
      if (v.size() == 1) v.assign(static_cast<std::size_t>(dim), v.front());
      if (v.size() != static_cast<std::size_t>(dim)) throw ModelError("constant value must have one entry per component");
      for (const auto& q : v) {
        if (q < 0) throw ModelError("constant feedback must be nonnegative");
      }
      break;
    }
    case FeedbackFamily::custom_expression: {
      if (params.expressions.size() != static_cast<std::size_t>(dim)) {
        throw ModelError("custom_expression needs one expression per component (" + std::to_string(dim) + ")");
      }
      for (const auto& e : params.expressions) s.expressions_.push_back(Expression::parse(e, dim));
      if (!params.monotonicity) throw ModelError("custom_expression must declare its monotonicity");
      natural = *params.monotonicity;
      for (const char* key : {"gamma", "delta"}) {
        if (const auto it = params.numbers.find(key); it != params.numbers.end()) {
          if (it->second.size() == 1) it->second.assign(static_cast<std::size_t>(dim), it->second.front());
          if (it->second.size() != static_cast<std::size_t>(dim)) {
            throw ModelError(std::string(key) + " must have one entry per component");
          }
        }
      }
      break;
    }
  }
  if (params.monotonicity && *params.monotonicity != natural && family != FeedbackFamily::constant) {
    throw ModelError("declared monotonicity '" + to_string(*params.monotonicity) + "' contradicts the family");
  }
  s.monotonicity_ = params.monotonicity.value_or(natural);
  params.monotonicity = s.monotonicity_;
  if (!params.allows_zero) params.allows_zero = (family == FeedbackFamily::griffith);
  s.allows_zero_ = *params.allows_zero;
  if (params.sublinearity && params.sublinearity->amount && *params.sublinearity->amount <= 0) {
    throw ModelError("sublinearity shift amount must be positive");
  }

  for (const auto& [key, values] : params.numbers) {
    if (values.size() == 1) s.scalars_[key] = to_double(values.front());
  }
  if (family == FeedbackFamily::competitive_hill) {
    for (const auto& k : params.numbers.at("K")) s.per_component_.push_back(to_double(k));
  }
  if (family == FeedbackFamily::constant) {
    for (const auto& v : params.numbers.at("value")) s.per_component_.push_back(to_double(v));
  }
  s.params_ = std::move(params);

  s.constants_ = derived_constants(s);
  s.gamma_ = Eigen::VectorXd(dim);
  s.delta_ = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i) {
    s.gamma_[i] = to_double(s.constants_.gamma[static_cast<std::size_t>(i)]);
    s.delta_[i] = to_double(s.constants_.delta[static_cast<std::size_t>(i)]);
  }
  if (!s.allows_zero_) {
    const Eigen::VectorXd h0 = s(Eigen::VectorXd::Zero(dim));
    if (h0.isZero(0.0)) throw ModelError("h(0) = 0 but the model does not set allows_zero");
  }
  return s;
}

void FeedbackSpec::evaluate(std::span<const double> x, std::span<double> out) const {
  switch (family_) {
    case FeedbackFamily::goodwin: {
      std::fill(out.begin(), out.end(), 0.0);
      out[0] = scalar("V") / (scalar("K") + hill_pow(x[static_cast<std::size_t>(input_)], scalar("m")));
      return;
    }
    case FeedbackFamily::othmer_tyson: {
      std::fill(out.begin(), out.end(), 0.0);
      const double p = hill_pow(x[static_cast<std::size_t>(input_)], scalar("m"));
      out[0] = scalar("k0") * (1.0 + p) / (scalar("K") + p);
      return;
    }
    case FeedbackFamily::griffith: {
      std::fill(out.begin(), out.end(), 0.0);
      const double p = scalar("K") * hill_pow(x[static_cast<std::size_t>(input_)], scalar("m"));
      out[0] = p / (1.0 + p);
      return;
    }
    case FeedbackFamily::competitive_hill: {
      const double m = scalar("m");
      double total = 0.0;
      for (double xi : x) total += hill_pow(xi, m);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (per_component_[i] + total);
      return;
    }
    case FeedbackFamily::shifted_saturating:
    case FeedbackFamily::reciprocal_saturating: {
      const double c = scalar("c");
      const double a = scalar("a");
      const double b = scalar("b");
      const bool reciprocal = family_ == FeedbackFamily::reciprocal_saturating;
      for (int i = 0; i < dim_; ++i) {
        const double xj = x[static_cast<std::size_t>(((i + offset_) % dim_ + dim_) % dim_)];
        const double v = c + (a + xj) / (b + xj);
        out[static_cast<std::size_t>(i)] = reciprocal ? 1.0 / v : v;
      }
      return;
    }
    case FeedbackFamily::constant: {
      std::copy(per_component_.begin(), per_component_.end(), out.begin());
      return;
    }
    case FeedbackFamily::custom_expression: {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = expressions_[i].evaluate(x);
      return;
    }
  }
}

Eigen::VectorXd FeedbackSpec::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("feedback input has wrong dimension");
  for (int i = 0; i < dim_; ++i) {
    if (x[i] < 0.0) throw std::invalid_argument("feedback input has a negative entry x" + std::to_string(i + 1));
  }
  Eigen::VectorXd out(dim_);
  evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(dim_)),
           std::span<double>(out.data(), static_cast<std::size_t>(dim_)));
  return out;
}

Eigen::VectorXd eval_feedback(const FeedbackSpec& spec, const Eigen::VectorXd& x) { return spec(x); }

namespace {

std::vector<double> lattice_axis(double lo, double hi, int points) {
  std::vector<double> axis{0.0};
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int k = 0; k < points; ++k) {
    axis.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(std::max(1, points - 1))));
  }
  return axis;
}

template <typename Fn>
void for_each_lattice_point(int dim, const std::vector<double>& axis, Fn&& fn) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (;;) {
    for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = axis[idx[static_cast<std::size_t>(i)]];
    fn(x);
    int d = 0;
    while (d < dim && ++idx[static_cast<std::size_t>(d)] == axis.size()) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == dim) break;
  }
}

int points_per_axis(int dim, int samples) {
  return std::max(2, static_cast<int>(std::floor(std::pow(static_cast<double>(samples), 1.0 / dim))) - 1);
}

// max_i |dh_i/dx_j| at x by central differences (one-sided at the boundary).
double partial_sup(const FeedbackSpec& spec, std::vector<double> x, int j, std::vector<double>& hp,
                   std::vector<double>& hm) {
  const auto ju = static_cast<std::size_t>(j);
  const double xj = x[ju];
  const double step = 1e-6 * std::max(std::abs(xj), 1e-3);
  double denom = 0.0;
  if (xj >= step) {
    x[ju] = xj + step;
    spec.evaluate(x, hp);
    x[ju] = xj - step;
    spec.evaluate(x, hm);
    denom = 2.0 * step;
  } else {
    x[ju] = xj + step;
    spec.evaluate(x, hp);
    x[ju] = xj;
    spec.evaluate(x, hm);
    denom = step;
  }
  double best = 0.0;
  for (std::size_t i = 0; i < hp.size(); ++i) best = std::max(best, std::abs(hp[i] - hm[i]) / denom);
  return best;
}

}  // namespace

double derivative_sup_numeric(const FeedbackSpec& spec, double lo, double hi, int samples) {
  const int dim = spec.dim();
  const int per_axis = points_per_axis(dim, samples);
  const auto axis = lattice_axis(lo, hi, per_axis);
  const double ratio = std::exp((std::log(hi) - std::log(lo)) / std::max(1, per_axis - 1));
  std::vector<double> hp(static_cast<std::size_t>(dim));
  std::vector<double> hm(static_cast<std::size_t>(dim));

  double best = 0.0;
  std::vector<double> best_x(static_cast<std::size_t>(dim), 0.0);
  int best_j = 0;
  for_each_lattice_point(dim, axis, [&](const std::vector<double>& x) {
    for (int j = 0; j < dim; ++j) {
      const double v = partial_sup(spec, x, j, hp, hm);
      if (v > best) {
        best = v;
        best_x = x;
        best_j = j;
      }
    }
  });

  // Coordinate-wise golden-section refinement in log space around the best node.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (int k = 0; k < dim; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (best_x[ku] <= 0.0) continue;
      double a = std::log(best_x[ku] / ratio);
      double b = std::log(best_x[ku] * ratio);
      auto objective = [&](double lx) {
        auto x = best_x;
        x[ku] = std::exp(lx);
        return partial_sup(spec, x, best_j, hp, hm);
      };
      double c = b - phi * (b - a);
      double d = a + phi * (b - a);
      double fc = objective(c);
      double fd = objective(d);
      for (int it = 0; it < 80; ++it) {
        if (fc > fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - phi * (b - a);
          fc = objective(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + phi * (b - a);
          fd = objective(d);
        }
      }
      const double lx = 0.5 * (a + b);
      const double v = objective(lx);
      if (v > best) {
        best = v;
        best_x[ku] = std::exp(lx);
      }
    }
  }
  return best;
}

DerivedConstants derived_constants(const FeedbackSpec& spec) {
  const auto& p = spec.params();
  const auto dim = static_cast<std::size_t>(spec.dim());
  DerivedConstants out;
  out.gamma.assign(dim, Rational(0));
  out.delta.assign(dim, Rational(0));
  auto scalar = [&](const char* key) { return scalar_param(p, key); };

  switch (spec.family()) {
    case FeedbackFamily::goodwin: {
      const Rational V = scalar("V"), K = scalar("K"), m = scalar("m");
      out.gamma[0] = V / K;
      out.M = hill_derivative_sup(V, K, m);
      out.M_coarse_bound = m * V / K;
      out.method = "closed form: stationary point x^m = (m-1)K/(m+1) of m V x^(m-1)/(K+x^m)^2";
      break;
    }
    case FeedbackFamily::othmer_tyson: {
      const Rational k0 = scalar("k0"), K = scalar("K"), m = scalar("m");
      out.gamma[0] = k0;
      out.delta[0] = k0 / K;
      out.M = hill_derivative_sup(k0 * (K - 1), K, m);
      out.M_coarse_bound = m * k0 * (K - 1) / K;
      out.method = "closed form: stationary point x^m = (m-1)K/(m+1) of m k0 (K-1) x^(m-1)/(K+x^m)^2";
      break;
    }
    case FeedbackFamily::griffith: {
      const Rational K = scalar("K"), m = scalar("m");
      out.gamma[0] = 1;
      const Rational y = (m - 1) / (m + 1);
      if (is_integer(m)) {
        const auto mi = m.convert_to<unsigned>();
        out.M.coeff = (m + 1) * (m + 1) / (4 * m);
        out.M.base = K * pow(y, mi - 1);
        out.M.root = mi;
      } else {
        const double md = to_double(m);
        out.M = RadicalNumber::upper_bound_of(std::pow(to_double(K), 1.0 / md) * to_double((m + 1) * (m + 1) / (4 * m)) *
                                              std::pow(to_double(y), (md - 1.0) / md));
      }
      out.method = "closed form: stationary point K x^m = (m-1)/(m+1) of m K x^(m-1)/(1+K x^m)^2";
      break;
    }
    case FeedbackFamily::competitive_hill: {
      const auto& K = p.numbers.at("K");
      const Rational m = scalar("m");
      const Rational kmin = *std::min_element(K.begin(), K.end());
      for (std::size_t i = 0; i < dim; ++i) out.gamma[i] = Rational(1) / K[i];
      out.M = hill_derivative_sup(Rational(1), kmin, m);
      out.M_coarse_bound = m / kmin;
      out.method = "closed form: sup of m x_j^(m-1)/(K_i + sum x^m)^2 with the other inputs at 0";
      break;
    }
    case FeedbackFamily::shifted_saturating:
    case FeedbackFamily::reciprocal_saturating: {
      const Rational c = scalar("c"), a = scalar("a"), b = scalar("b");
      const Rational g_lo = std::min(a / b, Rational(1));
      const Rational g_hi = std::max(a / b, Rational(1));
      const Rational slope = (a > b ? Rational(a - b) : Rational(b - a)) / (b * b);  // sup |g'| at x = 0
      if (spec.family() == FeedbackFamily::shifted_saturating) {
        std::fill(out.gamma.begin(), out.gamma.end(), c + g_hi);
        std::fill(out.delta.begin(), out.delta.end(), c + g_lo);
        out.M = RadicalNumber::from_rational(slope);
        out.method = "closed form: |g'| maximal at x = 0";
      } else {
        std::fill(out.gamma.begin(), out.gamma.end(), Rational(1) / (c + g_lo));
        std::fill(out.delta.begin(), out.delta.end(), Rational(1) / (c + g_hi));
        const Rational denom = a <= b ? Rational(c + a / b) : Rational(c + 1);
        out.M = RadicalNumber::from_rational(slope / (denom * denom));
        out.method = a <= b ? "closed form: |g'|/(c+g)^2 maximal at x = 0" : "bound: sup|g'| / (c + inf g)^2";
      }
      break;
    }
    case FeedbackFamily::constant: {
      out.gamma = p.numbers.at("value");
      out.delta = p.numbers.at("value");
      out.M = RadicalNumber::from_rational(Rational(0));
      out.method = "constant";
      break;
    }
    case FeedbackFamily::custom_expression: {
      out.rigorous = false;
      const double msup = derivative_sup_numeric(spec);
      out.M = RadicalNumber::upper_bound_of(1.05 * msup);
      const auto per_axis = points_per_axis(spec.dim(), 100000);
      const auto axis = lattice_axis(1e-4, 1e4, per_axis);
      std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
      std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
      std::vector<double> h(dim);
      for_each_lattice_point(spec.dim(), axis, [&](const std::vector<double>& x) {
        spec.evaluate(x, h);
        for (std::size_t i = 0; i < dim; ++i) {
          hi[i] = std::max(hi[i], h[i]);
          lo[i] = std::min(lo[i], h[i]);
        }
      });
      for (std::size_t i = 0; i < dim; ++i) {
        out.gamma[i] = p.numbers.contains("gamma") ? p.numbers.at("gamma")[i] : rational_upper_bound(hi[i]);
        out.delta[i] = p.numbers.contains("delta") ? p.numbers.at("delta")[i]
                                                   : Rational(-rational_upper_bound(-std::max(lo[i], 0.0)));
        if (out.delta[i] < 0) out.delta[i] = 0;
      }
      out.method = "numeric: log-lattice sup on [1e-4, 1e4]^d inflated by 5% (not rigorous)";
      break;
    }
  }
  return out;
}

}  // namespace sgain

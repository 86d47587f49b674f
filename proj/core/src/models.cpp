#include "sgain/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace sgain {

ModelSpec ModelSpec::make(std::string name, LinearSystem linear, FeedbackSpec feedback) {
  if (linear.dim() != feedback.dim()) {
    throw ModelError("feedback dimension " + std::to_string(feedback.dim()) + " does not match the linear part (" +
                     std::to_string(linear.dim()) + ")");
  }
  return ModelSpec{std::move(name), std::move(linear), std::move(feedback)};
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"goodwin",   "othmer_tyson", "griffith",  "competitive",
                                               "example45", "example46",    "example47", "remark4"};
  return names;
}

std::vector<Rational> parse_rational_list(const std::string& text) {
  std::string body = text;
  std::erase_if(body, [](char c) { return c == '[' || c == ']' || c == '(' || c == ')' || c == ' '; });
  std::vector<Rational> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw ModelError("empty entry in list '" + text + "'");
    try {
      out.push_back(parse_rational(item));
    } catch (const std::invalid_argument& e) {
      throw ModelError("bad number '" + item + "' in '" + text + "'");
    }
  }
  if (out.empty()) throw ModelError("empty list '" + text + "'");
  return out;
}

namespace {

Rational q(long long p, long long d = 1) { return Rational(p) / Rational(d); }

class Overrides {
 public:
  Overrides(const std::string& model, const std::map<std::string, std::string>& values) : model_(model), values_(values) {}

  std::vector<Rational> list(const std::string& key, std::vector<Rational> fallback) {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? std::move(fallback) : parse_rational_list(it->second);
  }
  Rational scalar(const std::string& key, Rational fallback) {
    auto v = list(key, {std::move(fallback)});
    if (v.size() != 1) throw ModelError("override " + key + " of " + model_ + " must be a single number");
    return v.front();
  }
  /// Broadcasts a single value to n entries and checks the length otherwise.
  std::vector<Rational> vector(const std::string& key, const Rational& fallback, int n) {
    auto v = list(key, {fallback});
    if (v.size() == 1) v.assign(static_cast<std::size_t>(n), v.front());
    if (v.size() != static_cast<std::size_t>(n)) {
      throw ModelError("override " + key + " of " + model_ + " needs " + std::to_string(n) + " entries");
    }
    return v;
  }
  std::vector<Rational> vector(const std::string& key, std::vector<Rational> fallback, int n) {
    if (!values_.contains(key) && fallback.size() == static_cast<std::size_t>(n)) {
      used_.insert(key);
      return fallback;
    }
    return vector(key, fallback.front(), n);
  }
  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!used_.contains(key)) throw ModelError("unknown override '" + key + "' for builtin " + model_);
    }
  }

 private:
  std::string model_;
  const std::map<std::string, std::string>& values_;
  std::set<std::string> used_;
};

int dimension_override(Overrides& o, int fallback) {
  const Rational n = o.scalar("n", fallback);
  if (boost::multiprecision::denominator(n) != 1 || n < 1 || n > 64) {
    throw ModelError("override n must be an integer in [1, 64]");
  }
  return n.convert_to<int>();
}

void check_positive(const std::vector<Rational>& v, const char* what) {
  for (const auto& x : v) {
    if (x <= 0) throw ModelError(std::string(what) + " entries must be > 0");
  }
}

ModelSpec chain_model(const std::string& name, FeedbackFamily family, Overrides& o, int n_default,
                      std::vector<Rational> alpha_default, std::vector<Rational> sigma_default,
                      const std::vector<std::pair<std::string, Rational>>& family_defaults) {
  const int n = dimension_override(o, n_default);
  const auto alpha = o.vector("alpha", std::move(alpha_default), n);
  const auto sigma = o.vector("sigma", std::move(sigma_default), n);
  check_positive(alpha, "alpha");
  FeedbackParams p;
  for (const auto& [key, value] : family_defaults) p.numbers[key] = {o.scalar(key, value)};
  p.numbers["input"] = {Rational(n)};
  o.finish();
  return ModelSpec::make(name, LinearSystem::single_loop(alpha, sigma), FeedbackSpec::make(family, n, std::move(p)));
}

// Fixed 3x3 examples with diagonal noise matrices G_k.
LinearSystem fixed_system(const std::vector<Rational>& a, const std::vector<std::vector<Rational>>& g,
                          Structure structure) {
  return LinearSystem::make(3, a, g, structure);
}

ModelSpec saturating_example(const std::string& name, FeedbackFamily family, Rational c, Rational a, Rational b,
                             int offset, ShiftKind shift, Rational amount, LinearSystem linear) {
  FeedbackParams p;
  p.numbers["c"] = {std::move(c)};
  p.numbers["a"] = {std::move(a)};
  p.numbers["b"] = {std::move(b)};
  p.numbers["offset"] = {Rational(offset)};
  p.sublinearity = SublinearityShift{shift, std::move(amount)};
  return ModelSpec::make(name, std::move(linear), FeedbackSpec::make(family, 3, std::move(p)));
}

}  // namespace

ModelSpec builtin(const std::string& name, const std::map<std::string, std::string>& overrides) {
  Overrides o(name, overrides);
  if (name == "goodwin") {
    return chain_model(name, FeedbackFamily::goodwin, o, 3, {q(1)}, {q(1, 10)},
                       {{"V", q(1, 1000)}, {"K", q(2)}, {"m", q(2)}});
  }
  if (name == "othmer_tyson") {
    return chain_model(name, FeedbackFamily::othmer_tyson, o, 3, {q(1)}, {q(1, 10)},
                       {{"k0", q(1, 1000)}, {"K", q(2)}, {"m", q(2)}});
  }
  if (name == "griffith") {
    return chain_model(name, FeedbackFamily::griffith, o, 3, {q(1)}, {q(1, 10)}, {{"K", q(1, 1000000)}, {"m", q(2)}});
  }
  if (name == "remark4") {
    return chain_model(name, FeedbackFamily::othmer_tyson, o, 3, {q(8), q(9), q(10)}, {q(1, 2), q(1, 4), q(1, 3)},
                       {{"k0", q(1, 6)}, {"K", q(4, 3)}, {"m", q(3)}});
  }
  if (name == "competitive") {
    const int n = dimension_override(o, 3);
    const auto alpha = o.vector("alpha", q(1), n);
    const auto sigma = o.vector("sigma", q(1, 10), n);
    check_positive(alpha, "alpha");
    FeedbackParams p;
    p.numbers["K"] = o.vector("K", q(20), n);
    p.numbers["m"] = {o.scalar("m", q(2))};
    o.finish();
    return ModelSpec::make(name, LinearSystem::diagonal(alpha, sigma),
                           FeedbackSpec::make(FeedbackFamily::competitive_hill, n, std::move(p)));
  }
  o.finish();
  if (name == "example45") {
    auto linear = fixed_system({q(-1), q(1), q(0), q(1, 3), q(1, 2), q(0), q(0), q(1), q(-1, 3)},
                               {{q(3, 2), q(2), q(2)}, {q(-3), q(-2), q(-2)}, {q(2), q(2), q(2)}}, Structure::general);
    return saturating_example(name, FeedbackFamily::shifted_saturating, q(2), q(0), q(1), 0,
                              ShiftKind::subtract_delta_over_T, q(2), std::move(linear));
  }
  if (name == "example46") {
    auto linear = fixed_system({q(-1), q(0), q(0), q(0), q(1, 2), q(0), q(0), q(0), q(1)},
                               {{q(1), q(3, 2), q(1)}, {q(-2), q(-2), q(-2)}, {q(-1, 2), q(1, 4), q(1, 3)}},
                               Structure::general);
    return saturating_example(name, FeedbackFamily::reciprocal_saturating, q(1), q(0), q(1), -1,
                              ShiftKind::reciprocal_shift_S, q(2), std::move(linear));
  }
  if (name == "example47") {
    auto linear = fixed_system({q(1, 2), q(0), q(1), q(1), q(-1, 3), q(0), q(0), q(1), q(1, 4)},
                               {{q(3), q(3), q(3)}, {q(3, 2), q(5, 4), q(1)}, {q(-5, 2), q(-3), q(-2)}},
                               Structure::general);
    return saturating_example(name, FeedbackFamily::reciprocal_saturating, q(3), q(1), q(2), 1,
                              ShiftKind::reciprocal_shift_S, q(2), std::move(linear));
  }
  throw ModelError("unknown builtin model '" + name + "'");
}

namespace {

std::vector<double> random_point(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> log_u(std::log(1e-3), std::log(1e3));
  std::bernoulli_distribution zero(0.1);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (auto& v : x) v = zero(rng) ? 0.0 : std::exp(log_u(rng));
  return x;
}

}  // namespace

SampledCheck check_monotonicity(const FeedbackSpec& spec, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> grow(0.0, 2.0);
  const auto dim = static_cast<std::size_t>(spec.dim());
  std::vector<double> hx(dim), hy(dim);
  SampledCheck report;
  report.samples = pairs;
  const double sign = spec.monotonicity() == Monotonicity::monotone ? 1.0 : -1.0;
  for (int p = 0; p < pairs; ++p) {
    auto x = random_point(spec.dim(), rng);
    auto y = x;
    for (auto& v : y) v += v * grow(rng) + (v == 0.0 ? grow(rng) : 0.0);
    spec.evaluate(x, hx);
    spec.evaluate(y, hy);
    for (std::size_t i = 0; i < dim; ++i) {
      const double violation = sign * (hx[i] - hy[i]) - 1e-12 * (1.0 + std::abs(hx[i]));
      if (violation > report.worst) {
        report.worst = violation;
        report.passed = false;
        report.detail = "component " + std::to_string(i + 1) + " breaks the declared " + to_string(spec.monotonicity()) +
                        " order by " + std::to_string(violation);
      }
    }
  }
  if (report.passed) report.detail = to_string(spec.monotonicity()) + " on " + std::to_string(pairs) + " ordered pairs";
  return report;
}

SampledCheck check_range(const FeedbackSpec& spec, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto dim = static_cast<std::size_t>(spec.dim());
  std::vector<double> h(dim);
  SampledCheck report;
  report.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const auto x = random_point(spec.dim(), rng);
    spec.evaluate(x, h);
    for (std::size_t i = 0; i < dim; ++i) {
      const double slack = 1e-12 * (1.0 + std::abs(h[i]));
      const double violation =
          std::max(spec.delta()[static_cast<Eigen::Index>(i)] - h[i], h[i] - spec.gamma()[static_cast<Eigen::Index>(i)]) -
          slack;
      if (violation > report.worst) {
        report.worst = violation;
        report.passed = false;
        report.detail = "h_" + std::to_string(i + 1) + " leaves [delta, Gamma] by " + std::to_string(violation);
      }
    }
  }
  if (report.passed) report.detail = "h within [delta, Gamma] on " + std::to_string(samples) + " samples";
  return report;
}

}  // namespace sgain

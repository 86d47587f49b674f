#include "sgain/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgain {

std::string to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::type_I_single_loop: return "type_I_single_loop";
    case CertificateKind::type_I_diagonal: return "type_I_diagonal";
    case CertificateKind::type_I_chain: return "type_I_chain";
    case CertificateKind::type_II: return "type_II";
  }
  return "unknown";
}

std::string to_string(Verdict v) { return v == Verdict::certified ? "certified" : "not_certified"; }

bool GainCertificate::checks_pass() const {
  return std::all_of(structural_checks.begin(), structural_checks.end(), [](const auto& c) { return c.passed; });
}

const TraceEntry* GainCertificate::find_trace(const std::string& term) const {
  for (const auto& t : trace) {
    if (t.term == term) return &t;
  }
  for (const auto& t : advisory) {
    if (t.term == term) return &t;
  }
  return nullptr;
}

namespace {

TraceEntry entry(std::string term, const Rational& q, std::string formula) {
  return {std::move(term), to_decimal_string(q), to_fraction_string(q), std::move(formula)};
}

TraceEntry entry(std::string term, const RadicalNumber& r, std::string formula) {
  return {std::move(term), r.decimal(), r.exact ? r.exact_string() : std::string(), std::move(formula)};
}

std::vector<Rational> decay_rates(const ModelSpec& model) {
  std::vector<Rational> alpha;
  for (int i = 0; i < model.dim(); ++i) {
    alpha.push_back(-model.linear.a_exact(i, i));
    if (alpha.back() <= 0) {
      throw ModelError("decay rate alpha_" + std::to_string(i + 1) + " = " + to_fraction_string(alpha.back()) +
                       " must be > 0");
    }
  }
  return alpha;
}

std::vector<Rational> noise_squares(const ModelSpec& model) {
  std::vector<Rational> s;
  for (int i = 0; i < model.dim(); ++i) s.push_back(model.linear.noise_square_exact(i));
  return s;
}

void require_single_loop(const ModelSpec& model) {
  if (model.linear.structure() != Structure::single_loop) {
    throw ModelError("model '" + model.name + "' is not tagged single_loop (structure " +
                     to_string(model.linear.structure()) + ")");
  }
  const auto& fb = model.feedback;
  const auto& numbers = fb.params().numbers;
  const bool closes_loop = fb.single_input() && numbers.contains("input") && numbers.at("input").front() == model.dim();
  if (!closes_loop && fb.family() != FeedbackFamily::constant) {
    throw ModelError("single-loop certificates need a feedback of the form (f(x_n), 0, ..., 0)");
  }
}

void type1_checks(const ModelSpec& model, GainCertificate& cert) {
  bool cooperative = true;
  for (int i = 0; i < model.dim(); ++i) {
    for (int j = 0; j < model.dim(); ++j) cooperative = cooperative && (i == j || model.linear.a_exact(i, j) >= 0);
  }
  cert.structural_checks.push_back({"cooperativity", cooperative, "off-diagonal entries of A are >= 0"});
  const auto mono = check_monotonicity(model.feedback);
  cert.structural_checks.push_back({"monotonicity", mono.passed, mono.detail});
  cert.structural_checks.push_back({"noise_separable", model.linear.noise_separable(),
                                    "each Wiener component drives at most one state component"});
  const auto& c = model.feedback.constants();
  cert.structural_checks.push_back(
      {"derivative_bound_rigorous", c.rigorous, c.method});
}

// max{1, lambda^{n-1}} * sum_j lambda^{-(n-j)} prod_{i>=j} (1 + s_i / (2 m_i)).
struct ErTerms {
  Rational with_factor;
  Rational sum;
  std::vector<Rational> factors;
};

ErTerms er_bound(const std::vector<Rational>& sigma_sq, const std::vector<Rational>& margin, const Rational& lambda) {
  const auto n = sigma_sq.size();
  ErTerms t;
  for (std::size_t i = 0; i < n; ++i) t.factors.push_back(1 + sigma_sq[i] / (2 * margin[i]));
  Rational tail = 1;
  t.sum = 0;
  for (std::size_t j = n; j-- > 0;) {
    tail *= t.factors[j];
    t.sum += tail / pow(lambda, static_cast<unsigned>(n - 1 - j));
  }
  const Rational lead = pow(lambda, static_cast<unsigned>(n - 1));
  t.with_factor = std::max(Rational(1), lead) * t.sum;
  return t;
}

void finish_type1(const ModelSpec& model, GainCertificate& cert, const ErTerms& er, const Rational& lambda,
                  const std::string& er_formula) {
  const auto n = static_cast<long long>(model.dim());
  const auto& c = model.feedback.constants();
  cert.lambda = lambda;
  cert.er_bound = er.with_factor;
  cert.M = c.M;
  cert.gain_constant = c.M.scaled(Rational(n * n) * er.with_factor / lambda);
  cert.trace.push_back(entry("lambda", lambda, cert.kind == CertificateKind::type_I_diagonal
                                                   ? "lambda = min(alpha)/2"
                                                   : (cert.kind == CertificateKind::type_I_chain
                                                          ? "lambda chosen by caller"
                                                          : "lambda = min(alpha)/(n+1)")));
  for (std::size_t i = 0; i < er.factors.size(); ++i) {
    cert.trace.push_back(entry("P_" + std::to_string(i + 1), er.factors[i],
                               cert.kind == CertificateKind::type_I_chain ? "1 + sigma_i^2/(2 mu_i)"
                               : cert.kind == CertificateKind::type_I_diagonal ? "1 + sigma_i^2/(2 lambda)"
                                                                               : "1 + sigma_i^2/(2 i lambda)"));
  }
  cert.trace.push_back(entry("er_bound", er.with_factor, er_formula));
  cert.trace.push_back(entry("M", c.M, c.method));
  cert.trace.push_back(entry("gain_constant", *cert.gain_constant, "M n^2 er_bound / lambda"));
  if (cert.kind != CertificateKind::type_I_diagonal) {
    cert.advisory.push_back(entry("er_bound_without_max_factor", er.sum, "er_bound with max{1, lambda^(n-1)} dropped"));
    cert.advisory.push_back(entry("gain_constant_without_max_factor", c.M.scaled(Rational(n * n) * er.sum / lambda),
                                  "M n^2 er_bound_without_max_factor / lambda"));
  }
  if (c.M_coarse_bound) {
    const Rational g = *c.M_coarse_bound * Rational(n * n) * er.with_factor / lambda;
    cert.advisory.push_back(entry("M_coarse_bound", *c.M_coarse_bound, "family upper bound on sup|h'|"));
    cert.advisory.push_back(entry("gain_constant_coarse_bound", g, "M_coarse_bound n^2 er_bound / lambda"));
  }
  const bool small_gain = cert.gain_constant->less_than(Rational(1));
  cert.structural_checks.push_back({"small_gain", small_gain, "gain_constant < 1 (exact comparison)"});
  cert.verdict = cert.checks_pass() ? Verdict::certified : Verdict::not_certified;
}

}  // namespace

GainCertificate certify_single_loop(const ModelSpec& model) {
  require_single_loop(model);
  const auto alpha = decay_rates(model);
  const auto n = alpha.size();
  const Rational lambda = *std::min_element(alpha.begin(), alpha.end()) / Rational(static_cast<long long>(n + 1));
  std::vector<Rational> margin;
  for (std::size_t i = 0; i < n; ++i) margin.push_back(Rational(static_cast<long long>(i + 1)) * lambda);
  GainCertificate cert;
  cert.model = model.name;
  cert.kind = CertificateKind::type_I_single_loop;
  type1_checks(model, cert);
  finish_type1(model, cert, er_bound(noise_squares(model), margin, lambda), lambda,
               "max{1, lambda^(n-1)} sum_i lambda^-(n-i) prod_(j>=i) (1 + sigma_j^2/(2 j lambda))");
  return cert;
}

GainCertificate certify_chain(const ModelSpec& model, const Rational& lambda, const Rational& rho1) {
  require_single_loop(model);
  if (lambda <= 0) throw ModelError("chain lambda must be > 0");
  const auto alpha = decay_rates(model);
  const auto n = alpha.size();
  std::vector<Rational> margin;
  for (std::size_t i = 0; i < n; ++i) {
    const Rational rho = rho1 - Rational(static_cast<long long>(i)) * lambda;
    margin.push_back(alpha[i] - rho);
    if (margin.back() <= 0) {
      throw ModelError("chain margin mu_" + std::to_string(i + 1) + " = alpha_" + std::to_string(i + 1) + " - rho_" +
                       std::to_string(i + 1) + " = " + to_fraction_string(margin.back()) + " must be > 0");
    }
  }
  const Rational rho_n = rho1 - Rational(static_cast<long long>(n - 1)) * lambda;
  if (rho_n < lambda) {
    throw ModelError("chain reserve rho_n = " + to_fraction_string(rho_n) + " must be >= lambda = " +
                     to_fraction_string(lambda));
  }
  GainCertificate cert;
  cert.model = model.name;
  cert.kind = CertificateKind::type_I_chain;
  type1_checks(model, cert);
  cert.trace.push_back(entry("rho1", rho1, "rho_i = rho1 - (i-1) lambda"));
  for (std::size_t i = 0; i < n; ++i) {
    cert.trace.push_back(entry("mu_" + std::to_string(i + 1), margin[i], "mu_i = alpha_i - rho_i"));
  }
  finish_type1(model, cert, er_bound(noise_squares(model), margin, lambda), lambda,
               "max{1, lambda^(n-1)} sum_j lambda^-(n-j) prod_(i>=j) (1 + sigma_i^2/(2 mu_i))");
  return cert;
}

GainCertificate chain_grid_search(const ModelSpec& model, int lambda_steps, int rho_steps) {
  const auto alpha = decay_rates(model);
  const Rational amin = *std::min_element(alpha.begin(), alpha.end());
  const auto n = static_cast<long long>(alpha.size());
  std::optional<GainCertificate> best;
  for (int a = 1; a <= lambda_steps; ++a) {
    const Rational lambda = amin * a / (lambda_steps + 1);
    for (int b = 0; b < rho_steps; ++b) {
      const Rational rho1 = Rational(n) * lambda + amin * b / rho_steps;
      try {
        auto cert = certify_chain(model, lambda, rho1);
        if (!best || cert.gain_constant->value() < best->gain_constant->value()) best = std::move(cert);
      } catch (const ModelError&) {
        // infeasible margins for this pair
      }
    }
  }
  if (!best) throw ModelError("no feasible (lambda, rho1) pair on the search grid");
  best->advisory.push_back({"search", "", "", "experimental coarse grid over lambda and rho1"});
  return *best;
}

GainCertificate certify_diagonal(const ModelSpec& model) {
  if (model.linear.structure() != Structure::diagonal) {
    throw ModelError("model '" + model.name + "' is not tagged diagonal (structure " +
                     to_string(model.linear.structure()) + ")");
  }
  const auto alpha = decay_rates(model);
  const Rational lambda = *std::min_element(alpha.begin(), alpha.end()) / 2;
  const auto sigma_sq = noise_squares(model);
  ErTerms er;
  er.sum = 0;
  for (const auto& s : sigma_sq) {
    er.factors.push_back(1 + s / (2 * lambda));
    er.sum += er.factors.back();
  }
  er.with_factor = er.sum;
  GainCertificate cert;
  cert.model = model.name;
  cert.kind = CertificateKind::type_I_diagonal;
  type1_checks(model, cert);
  finish_type1(model, cert, er, lambda, "sum_i (1 + sigma_i^2/(2 lambda))");
  return cert;
}

double scalar_ratio(double alpha, double sigma, double lambda) {
  return 1.0 / lambda + sigma * sigma / (2.0 * lambda * (alpha - lambda));
}

double golden_section_minimize(const std::function<double(double)>& f, double a, double b, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

ScalarOptimum certify_scalar_optimal(double alpha, double sigma) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  ScalarOptimum out;
  // f'(lambda) = 0 reduces to 2 lambda^2 - 2 c lambda + alpha c = 0 with c = 2 alpha + sigma^2.
  const double c = 2.0 * alpha + sigma * sigma;
  out.lambda0 = (c - std::abs(sigma) * std::sqrt(c)) / 2.0;
  out.min_ratio = sigma == 0.0 ? 1.0 / alpha : scalar_ratio(alpha, sigma, out.lambda0);
  if (sigma == 0.0) {
    out.numeric_lambda = alpha;
    out.numeric_ratio = out.min_ratio;
    return out;
  }
  out.numeric_lambda = golden_section_minimize([&](double l) { return scalar_ratio(alpha, sigma, l); },
                                               alpha * 1e-12, alpha * (1.0 - 1e-12), 1e-13);
  out.numeric_ratio = scalar_ratio(alpha, sigma, out.numeric_lambda);
  return out;
}

GainCertificate certify_type2(const ModelSpec& model, const Type2Options& options) {
  GainCertificate cert;
  cert.model = model.name;
  cert.kind = CertificateKind::type_II;
  const auto& fb = model.feedback;

  bool cooperative = true;
  for (int i = 0; i < model.dim(); ++i) {
    for (int j = 0; j < model.dim(); ++j) cooperative = cooperative && (i == j || model.linear.a_exact(i, j) >= 0);
  }
  cert.structural_checks.push_back({"cooperativity", cooperative, "off-diagonal entries of A are >= 0"});

  const auto mono = check_monotonicity(fb, options.monotonicity_pairs);
  cert.structural_checks.push_back({"monotonicity", mono.passed, mono.detail});

  const auto& c = fb.constants();
  const bool bounded_away = std::all_of(c.delta.begin(), c.delta.end(), [](const Rational& d) { return d > 0; });
  const auto range = check_range(fb, options.monotonicity_pairs);
  cert.structural_checks.push_back({"range", bounded_away && range.passed,
                                    bounded_away ? range.detail : std::string("delta has a zero entry")});
  for (std::size_t i = 0; i < c.delta.size(); ++i) {
    cert.trace.push_back(entry("delta_" + std::to_string(i + 1), c.delta[i], "inf h_i"));
    cert.trace.push_back(entry("Gamma_" + std::to_string(i + 1), c.gamma[i], "sup h_i"));
  }

  if (bounded_away) {
    const auto sub = sublinearity_check(fb, options.sublinearity);
    std::string detail = sub.shifted_map + " on " + std::to_string(sub.evaluations) + " (x, lambda) points";
    if (!sub.passed) {
      detail += "; worst violation " + std::to_string(sub.worst_violation) + " at lambda = " +
                std::to_string(sub.worst_lambda) + ", component " + std::to_string(sub.worst_component + 1);
    }
    cert.structural_checks.push_back({"sublinearity", sub.passed, detail});
  } else {
    cert.structural_checks.push_back({"sublinearity", false, "not evaluated: delta is not bounded away from zero"});
  }

  const auto mao = mao_bound(model.linear);
  cert.lyapunov = mao;
  const bool negative = mao.certifies_negative_exponent();
  cert.structural_checks.push_back(
      {"mao_bound_negative", negative, "sqrt(|A|_F^2) + K2/2 - K3 < 0 (exact sign test)"});
  cert.trace.push_back(entry("K1_squared", mao.frobenius_square, "|A|_F^2"));
  cert.trace.push_back(entry("K1", mao.k1_rounded, "|A|_F rounded up to a multiple of 1/2"));
  cert.trace.push_back(entry("K2", mao.k2, "max_i sum_k (g_k^i)^2"));
  cert.trace.push_back(entry("K3", mao.k3, "sum_k (min_i |g_k^i|)^2 over sign-definite G_k"));
  cert.trace.push_back(entry("mao_bound", mao.bound, "K1 + K2/2 - K3"));
  cert.trace.push_back({"mao_bound_sharp", mao.sharp_bound_decimal(), "", "|A|_F + K2/2 - K3"});
  if (mao.bound < 0) {
    cert.lambda = -mao.bound;
    cert.trace.push_back(entry("lambda", *cert.lambda, "-(K1 + K2/2 - K3)"));
  }

  if (options.empirical && bounded_away) {
    const auto ratio = contraction_estimate(model, options.contraction);
    cert.advisory.push_back({"empirical_contraction_ratio", to_decimal_string(rational_from_double(ratio.ratio), 17), "",
                             "advisory, not part of verdict: max part-metric ratio over " +
                                 std::to_string(options.contraction.pairs) + " input pairs and " +
                                 std::to_string(options.contraction.paths) + " paths"});
  }
  cert.advisory.push_back({"essential_supremum", "", "", "ensemble maximum stands in for the essential supremum"});
  cert.verdict = cert.checks_pass() ? Verdict::certified : Verdict::not_certified;
  return cert;
}

GainCertificate certify_auto(const ModelSpec& model, const std::string& method, std::optional<Rational> lambda,
                             std::optional<Rational> rho1, const Type2Options& type2) {
  std::string m = method;
  if (m.empty()) {
    switch (model.linear.structure()) {
      case Structure::single_loop: m = (lambda || rho1) ? "chain" : "corollary"; break;
      case Structure::diagonal: m = "diagonal"; break;
      case Structure::general: m = "type2"; break;
    }
  }
  if (m == "corollary") return certify_single_loop(model);
  if (m == "diagonal") return certify_diagonal(model);
  if (m == "type2") return certify_type2(model, type2);
  if (m == "chain") {
    const auto alpha = decay_rates(model);
    const Rational l =
        lambda.value_or(*std::min_element(alpha.begin(), alpha.end()) / Rational(static_cast<long long>(alpha.size() + 1)));
    return certify_chain(model, l, rho1.value_or(Rational(static_cast<long long>(alpha.size())) * l));
  }
  throw std::invalid_argument("unknown certification method '" + method + "'");
}

}  // namespace sgain

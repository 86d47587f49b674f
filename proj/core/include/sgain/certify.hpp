#pragma once

#include "sgain/exact.hpp"
#include "sgain/gain.hpp"
#include "sgain/linearflow.hpp"
#include "sgain/models.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sgain {

enum class CertificateKind { type_I_single_loop, type_I_diagonal, type_I_chain, type_II };
enum class Verdict { certified, not_certified };

std::string to_string(CertificateKind k);
std::string to_string(Verdict v);

struct StructuralCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// One named intermediate value. `exact` is empty when only a decimal exists.
struct TraceEntry {
  std::string term;
  std::string decimal;
  std::string exact;
  std::string formula;
};

struct GainCertificate {
  std::string model;
  CertificateKind kind = CertificateKind::type_I_single_loop;
  std::optional<Rational> lambda;
  std::optional<Rational> er_bound;
  std::optional<RadicalNumber> M;
  std::optional<RadicalNumber> gain_constant;
  std::optional<LyapunovReport> lyapunov;
  std::vector<StructuralCheck> structural_checks;
  Verdict verdict = Verdict::not_certified;
  std::vector<TraceEntry> trace;
  /// Values reported for information only; they never affect the verdict.
  std::vector<TraceEntry> advisory;

  [[nodiscard]] bool certified() const noexcept { return verdict == Verdict::certified; }
  [[nodiscard]] bool checks_pass() const;
  [[nodiscard]] const TraceEntry* find_trace(const std::string& term) const;
};

/// lambda = min(alpha)/(n+1),
/// E R <= max{1, lambda^{n-1}} sum_i lambda^{-(n-i)} prod_{j>=i} (1 + sigma_j^2/(2 j lambda)),
/// gain = M n^2 E R / lambda.
GainCertificate certify_single_loop(const ModelSpec& model);

/// Decay reserves rho_i = rho1 - (i-1) lambda and margins mu_i = alpha_i - rho_i:
/// E R <= max{1, lambda^{n-1}} sum_j lambda^{-(n-j)} prod_{i>=j} (1 + sigma_i^2/(2 mu_i)).
GainCertificate certify_chain(const ModelSpec& model, const Rational& lambda, const Rational& rho1);

/// Coarse search over (lambda, rho1) for the smallest chain gain. Experimental.
GainCertificate chain_grid_search(const ModelSpec& model, int lambda_steps = 19, int rho_steps = 20);

/// lambda = min(alpha)/2, E R <= sum_i (1 + sigma_i^2/(2 lambda)).
GainCertificate certify_diagonal(const ModelSpec& model);

struct ScalarOptimum {
  double lambda0 = 0.0;
  double min_ratio = 0.0;
  double numeric_lambda = 0.0;  // golden-section minimiser of f
  double numeric_ratio = 0.0;
};

/// f(lambda) = 1/lambda + sigma^2/(2 lambda (alpha - lambda)) on (0, alpha).
double scalar_ratio(double alpha, double sigma, double lambda);
/// Closed-form minimiser of scalar_ratio, cross-checked by golden section.
ScalarOptimum certify_scalar_optimal(double alpha, double sigma);
/// Golden-section minimiser of a unimodal function on [a, b].
double golden_section_minimize(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

struct Type2Options {
  bool empirical = true;  // attach an advisory contraction ratio
  ContractionOptions contraction{.paths = 8, .pairs = 8, .window = 5.0, .dt = 1e-2, .seed = 42, .integrator = {}};
  SublinearityPlan sublinearity;
  int monotonicity_pairs = 1000;
};

/// Structural certificate for feedbacks bounded away from zero: cooperativity,
/// monotonicity, range in [delta, Gamma], sublinearity of the declared shift
/// and a negative Lyapunov bound from the Mao recipe.
GainCertificate certify_type2(const ModelSpec& model, const Type2Options& options = {});

/// Picks the certificate by structure tag (single_loop: corollary, diagonal:
/// diagonal, otherwise type II) unless `method` names one explicitly
/// ("corollary", "chain", "diagonal", "type2").
GainCertificate certify_auto(const ModelSpec& model, const std::string& method = "",
                             std::optional<Rational> lambda = std::nullopt, std::optional<Rational> rho1 = std::nullopt,
                             const Type2Options& type2 = {});

/// Certificate as JSON text (numbers carry a 30-digit decimal and, where
/// available, an exact "p/q" string).
std::string certificate_json(const GainCertificate& cert, int indent = 2);

}  // namespace sgain

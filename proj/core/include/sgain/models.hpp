#pragma once

#include "sgain/errors.hpp"
#include "sgain/feedback.hpp"
#include "sgain/linearflow.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sgain {

/// Full system dX = [A X + h(X)] dt + sum_k diag(g_k) X dW^k.
struct ModelSpec {
  std::string name;
  LinearSystem linear;
  FeedbackSpec feedback;

  /// Validates that the linear part and the feedback agree in dimension.
  static ModelSpec make(std::string name, LinearSystem linear, FeedbackSpec feedback);

  [[nodiscard]] int dim() const noexcept { return linear.dim(); }
  /// Wiener components needed to drive the noise.
  [[nodiscard]] int noise_dims() const noexcept { return std::max(1, linear.noise_count()); }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Names accepted by builtin().
const std::vector<std::string>& builtin_names();

/// Reference systems with fixed default parameters.
///
/// Overrides are "key" -> "value" strings. Chain models (goodwin,
/// othmer_tyson, griffith, remark4) and competitive accept n, alpha, sigma and
/// the family parameters (V, k0, K, m); lists are comma separated and a single
/// value is broadcast. The fixed-matrix examples accept no overrides.
ModelSpec builtin(const std::string& name, const std::map<std::string, std::string>& overrides = {});

/// Parses "1,2,3", "[1, 2, 3]" or "(1,2,3)" into exact rationals.
std::vector<Rational> parse_rational_list(const std::string& text);

struct SampledCheck {
  bool passed = true;
  int samples = 0;
  double worst = 0.0;  // largest violation found
  std::string detail;
};

/// h(x) <= h(y) (monotone) or h(x) >= h(y) (anti-monotone) on random ordered
/// pairs x <= y with log-uniform entries in [1e-3, 1e3] and some zero entries.
SampledCheck check_monotonicity(const FeedbackSpec& spec, int pairs = 1000, std::uint64_t seed = 1);

/// delta <= h(x) <= Gamma on random points (the same sampling as above).
SampledCheck check_range(const FeedbackSpec& spec, int samples = 1000, std::uint64_t seed = 2);

}  // namespace sgain

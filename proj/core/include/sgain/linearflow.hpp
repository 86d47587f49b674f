#pragma once

#include "sgain/errors.hpp"
#include "sgain/exact.hpp"
#include "sgain/wiener.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgain {

enum class Structure { diagonal, single_loop, general };

std::string to_string(Structure s);
Structure structure_from_string(const std::string& s);

/// Homogeneous part dX = A X dt + sum_k diag(g_k) X dW^k of a feedback system.
///
/// Coefficients are held exactly (rationals) for certification and as doubles
/// for simulation. A must be cooperative; noise matrices are diagonal and are
/// given by their diagonals g_k. Noise matrix k is driven by Wiener component k.
class LinearSystem {
 public:
  /// `a` is row-major dim x dim; every entry of `noise` has length dim.
  static LinearSystem make(int dim, std::vector<Rational> a, std::vector<std::vector<Rational>> noise,
                           Structure structure);

  /// Single-loop chain: a_ii = -alpha_i, a_{i,i-1} = 1, own noise sigma_i on W^i.
  static LinearSystem single_loop(const std::vector<Rational>& alpha, const std::vector<Rational>& sigma);
  /// Decoupled: a_ii = -alpha_i, own noise sigma_i on W^i.
  static LinearSystem diagonal(const std::vector<Rational>& alpha, const std::vector<Rational>& sigma);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] int noise_count() const noexcept { return static_cast<int>(noise_.size()); }
  [[nodiscard]] Structure structure() const noexcept { return structure_; }
  [[nodiscard]] const Eigen::MatrixXd& A() const noexcept { return a_; }
  /// Diagonal of noise matrix k.
  [[nodiscard]] const Eigen::VectorXd& noise(int k) const { return noise_[static_cast<std::size_t>(k)]; }
  [[nodiscard]] const Rational& a_exact(int i, int j) const {
    return a_exact_[static_cast<std::size_t>(i * dim_ + j)];
  }
  [[nodiscard]] const Rational& noise_exact(int k, int i) const {
    return noise_exact_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
  }

  /// True when every Wiener component drives at most one state component.
  [[nodiscard]] bool noise_separable() const;
  /// Combined noise intensity of component i: sqrt(C_ii), as the exact square.
  [[nodiscard]] Rational noise_square_exact(int i) const;

  friend bool operator==(const LinearSystem& a, const LinearSystem& b) {
    return a.dim_ == b.dim_ && a.structure_ == b.structure_ && a.a_exact_ == b.a_exact_ &&
           a.noise_exact_ == b.noise_exact_;
  }

 private:
  int dim_ = 0;
  Structure structure_ = Structure::general;
  std::vector<Rational> a_exact_;
  std::vector<std::vector<Rational>> noise_exact_;
  Eigen::MatrixXd a_;
  std::vector<Eigen::VectorXd> noise_;
};

struct FundamentalMatrix {
  double t = 0.0;
  Eigen::MatrixXd entries;
};

/// Constants of the Lyapunov-exponent upper bound for linear Ito systems with
/// diagonal noise: |Ax| <= K1|x|, sum|G_k x|^2 <= K2|x|^2,
/// sum (x'G_k x)^2 >= K3|x|^4, giving limsup (1/t)log|Phi x| <= K1 + K2/2 - K3.
struct LyapunovReport {
  double empirical_exponent = 0.0;  // filled by ensemble runs; NaN if not computed
  Rational frobenius_square{0};     // K1 sharp = sqrt(frobenius_square)
  Rational k1_rounded{0};           // K1 rounded up to a multiple of 1/2
  Rational k2{0};
  Rational k3{0};
  Rational bound{0};                // -(K3 - K1_rounded - K2/2)
  [[nodiscard]] double k1() const;
  [[nodiscard]] double sharp_bound() const;
  [[nodiscard]] std::string sharp_bound_decimal(int digits = 30) const;
  /// Condition (L) holds with rate -sharp_bound when the sharp bound is negative.
  [[nodiscard]] bool certifies_negative_exponent() const;
};

/// C_ii = sum_k (g_k^i)^2.
Eigen::VectorXd ito_correction(const LinearSystem& system);
std::vector<Rational> ito_correction_exact(const LinearSystem& system);

/// Closed form for diagonal systems:
/// Phi_ii(t) = exp(a_ii t - C_ii t / 2 + sum_k g_k^i W_t^k).
FundamentalMatrix phi_exact_diagonal(const LinearSystem& system, const WienerGrid& grid, double t);

/// Lower-triangular closed form of single-loop chains; off-diagonal entries by
/// trapezoidal quadrature of Phi_ij = Phi_ii int_0^t Phi_ii^{-1} Phi_{i-1,j} ds.
FundamentalMatrix phi_single_loop(const LinearSystem& system, const WienerGrid& grid, double t);

/// Euler-Maruyama solution of the homogeneous system from the identity.
FundamentalMatrix phi_numeric(const LinearSystem& system, const WienerGrid& grid, double t);

LyapunovReport mao_bound(const LinearSystem& system);

/// (1/t_max) log|Phi(t_max) x0| with renormalisation every unit of time.
double lyapunov_empirical(const LinearSystem& system, const WienerGrid& grid, const Eigen::VectorXd& x0,
                          double t_max);

/// E sup_{t>=0} exp(-(mu + sigma^2/2) t + sigma W_t) = 1 + sigma^2 / (2 mu).
double gbm_sup_expectation(double mu, double sigma);
Rational gbm_sup_expectation(const Rational& mu, const Rational& sigma);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

/// Monte Carlo estimate of E sup_{t>=0} of the same process. Log-paths are
/// simulated exactly on the grid and the supremum between nodes is drawn from
/// the Brownian-bridge maximum law, so the estimator has no grid bias. Paths
/// stop once the chance of a later excursion above the running maximum falls
/// below 1e-16 (exponential tail of the supremum of a drifting Brownian path).
MonteCarloEstimate gbm_sup_mc(double mu, double sigma, std::int64_t n_paths, double dt, double horizon,
                              std::uint64_t seed);

}  // namespace sgain

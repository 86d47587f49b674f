#include <sgain/linearflow.hpp>
#include <sgain/models.hpp>
#include <sgain/philox.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using sgain::LinearSystem;
using sgain::Rational;
using sgain::WienerGrid;

namespace {

Rational q(long long p, long long d = 1) { return Rational(p) / Rational(d); }

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(LinearSystem, RejectsNonCooperativeA) {
  EXPECT_THROW((void)LinearSystem::make(2, {q(-1), q(-1), q(0), q(-1)}, {}, sgain::Structure::general),
               sgain::ModelError);
  EXPECT_THROW((void)LinearSystem::make(2, {q(-1), q(0), q(0)}, {}, sgain::Structure::general), sgain::ModelError);
}

TEST(LinearSystem, SingleLoopLayout) {
  const auto s = LinearSystem::single_loop({q(1), q(2), q(3)}, {q(1, 2), q(0), q(1)});
  EXPECT_EQ(s.a_exact(0, 0), q(-1));
  EXPECT_EQ(s.a_exact(1, 0), q(1));
  EXPECT_EQ(s.a_exact(2, 1), q(1));
  EXPECT_EQ(s.a_exact(0, 2), q(0));
  EXPECT_TRUE(s.noise_separable());
  EXPECT_EQ(s.noise_square_exact(0), q(1, 4));
}

TEST(ItoCorrection, SumsSquaresOverNoiseMatrices) {
  const auto model = sgain::builtin("example45");
  const auto c = sgain::ito_correction_exact(model.linear);
  EXPECT_EQ(c[0], q(61, 4));
  EXPECT_EQ(c[1], q(12));
  EXPECT_EQ(c[2], q(12));
  EXPECT_DOUBLE_EQ(sgain::ito_correction(model.linear)[0], 15.25);
  EXPECT_FALSE(model.linear.noise_separable());
}

TEST(PhiExactDiagonal, IdentityAtZeroAndDeterministicDecay) {
  const auto s = LinearSystem::diagonal({q(1), q(2)}, {q(0), q(0)});
  const auto g = WienerGrid::sample(2, 0.0, 2.0, 1e-3, 1);
  EXPECT_TRUE(sgain::phi_exact_diagonal(s, g, 0.0).entries.isIdentity());
  const auto phi = sgain::phi_exact_diagonal(s, g, 1.0).entries;
  EXPECT_NEAR(phi(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(phi(1, 1), std::exp(-2.0), 1e-15);
  EXPECT_EQ(phi(0, 1), 0.0);
}

TEST(PhiSingleLoop, DeterministicOffDiagonalMatchesClosedForm) {
  // alpha = (1, 1), no noise: Phi_21(t) = t e^{-t}.
  const auto s = LinearSystem::single_loop({q(1), q(1)}, {q(0), q(0)});
  const auto g = WienerGrid::sample(2, 0.0, 2.0, 1e-4, 1);
  for (double t : {0.5, 1.0, 2.0}) {
    const auto phi = sgain::phi_single_loop(s, g, t).entries;
    EXPECT_NEAR(phi(1, 0), t * std::exp(-t), 1e-7) << t;
    EXPECT_NEAR(phi(0, 0), std::exp(-t), 1e-12);
    EXPECT_EQ(phi(0, 1), 0.0);
  }
}

TEST(PhiOracles, DiagonalAndSingleLoopMatchNumeric) {
  const auto diag = LinearSystem::diagonal({q(1), q(2), q(1, 2)}, {q(1, 2), q(1, 4), q(1, 3)});
  const auto loop = LinearSystem::single_loop({q(8), q(9), q(10)}, {q(1, 2), q(1, 4), q(1, 3)});
  for (std::uint64_t p = 0; p < 8; ++p) {
    const auto g = WienerGrid::sample(3, 0.0, 1.0, 1e-4, sgain::mix_seed(3, p));
    EXPECT_LT(max_abs_diff(sgain::phi_exact_diagonal(diag, g, 1.0).entries, sgain::phi_numeric(diag, g, 1.0).entries),
              1e-2);
    EXPECT_LT(max_abs_diff(sgain::phi_single_loop(loop, g, 1.0).entries, sgain::phi_numeric(loop, g, 1.0).entries),
              1e-2);
  }
}

TEST(PhiNumeric, CocycleProperty) {
  // Phi(t + s, omega) = Phi(t, theta_s omega) Phi(s, omega).
  const auto model = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, 0.0, 2.0, 1e-4, 9);
  const auto whole = sgain::phi_numeric(model.linear, g, 2.0).entries;
  const auto first = sgain::phi_numeric(model.linear, g, 0.7).entries;
  const auto second = sgain::phi_numeric(model.linear, g.shift(0.7), 1.3).entries;
  EXPECT_LT(max_abs_diff(whole, second * first), 1e-10);
}

TEST(MaoBound, SaturatingExamples) {
  const auto b45 = sgain::mao_bound(sgain::builtin("example45").linear);
  EXPECT_EQ(b45.bound, q(-5, 8));
  EXPECT_EQ(b45.k1_rounded, q(2));
  const auto b46 = sgain::mao_bound(sgain::builtin("example46").linear);
  EXPECT_EQ(b46.bound, q(-11, 32));
  const auto b47 = sgain::mao_bound(sgain::builtin("example47").linear);
  EXPECT_EQ(b47.bound, q(-71, 32));
  for (const auto* r : {&b45, &b46, &b47}) {
    EXPECT_LE(r->sharp_bound(), sgain::to_double(r->bound));
    EXPECT_TRUE(r->certifies_negative_exponent());
  }
}

TEST(LyapunovEmpirical, ScalarGeometricMotion) {
  // dX = -X dt + sigma X dW has exponent -1 - sigma^2/2.
  const auto det = LinearSystem::diagonal({q(1)}, {q(0)});
  const auto g0 = WienerGrid::sample(1, 0.0, 50.0, 1e-3, 4);
  EXPECT_NEAR(sgain::lyapunov_empirical(det, g0, Eigen::VectorXd::Ones(1), 50.0), -1.0, 1e-3);

  const auto noisy = LinearSystem::diagonal({q(1)}, {q(1)});
  const auto g1 = WienerGrid::sample(1, 0.0, 400.0, 1e-3, 4);
  EXPECT_NEAR(sgain::lyapunov_empirical(noisy, g1, Eigen::VectorXd::Ones(1), 400.0), -1.5, 0.1);
}

TEST(LyapunovEmpirical, RespectsMaoBoundOnSaturatingExample) {
  const auto model = sgain::builtin("example45");
  const auto g = WienerGrid::sample(3, 0.0, 20.0, 1e-3, 8);
  const double exponent = sgain::lyapunov_empirical(model.linear, g, Eigen::VectorXd::Ones(3), 20.0);
  EXPECT_LT(exponent, -0.625);
}

TEST(GbmSup, ExactValues) {
  EXPECT_EQ(sgain::gbm_sup_expectation(q(5), q(1, 2)), q(41, 40));
  EXPECT_EQ(sgain::gbm_sup_expectation(q(7), q(1, 4)), q(225, 224));
  EXPECT_EQ(sgain::gbm_sup_expectation(q(9), q(1, 3)), q(163, 162));
  EXPECT_EQ(sgain::gbm_sup_expectation(q(3), q(0)), q(1));
  EXPECT_EQ(sgain::gbm_sup_expectation(q(5), q(1, 2)), sgain::oracle::gbm_sup(q(5), q(1, 2)));
  EXPECT_DOUBLE_EQ(sgain::gbm_sup_expectation(5.0, 0.5), 41.0 / 40.0);
}

TEST(GbmSup, MonteCarloNoiseFreeIsOne) {
  const auto est = sgain::gbm_sup_mc(2.0, 0.0, 100, 1e-2, 10.0, 1);
  EXPECT_DOUBLE_EQ(est.mean, 1.0);
}

TEST(GbmSup, MonteCarloIsUnbiasedEvenOnCoarseGrids) {
  // Bridge maxima make the estimator exact in law, so the step size does not matter.
  for (double dt : {1e-3, 1e-1}) {
    const auto est = sgain::gbm_sup_mc(1.0, 1.0, 5000, dt, 40.0, 3);
    EXPECT_NEAR(est.mean, 1.5, 4 * est.std_error) << dt;
  }
}

#include <sgain/linearflow.hpp>
#include <sgain/models.hpp>
#include <sgain/philox.hpp>
#include <sgain/sde.hpp>

#include <gtest/gtest.h>

#include <cmath>

using sgain::Rational;
using sgain::WienerGrid;

namespace {

Rational q(long long p, long long d = 1) { return Rational(p) / Rational(d); }

// Diagonal linear part with h = 0, so the solution is Phi(t) x0.
sgain::ModelSpec zero_feedback_diagonal() {
  sgain::FeedbackParams p;
  p.numbers["value"] = {q(0)};
  p.allows_zero = true;
  return sgain::ModelSpec::make("diag", sgain::LinearSystem::diagonal({q(1), q(2), q(1, 2)}, {q(1, 2), q(1, 4), q(1, 3)}),
                                sgain::FeedbackSpec::make(sgain::FeedbackFamily::constant, 3, p));
}

}  // namespace

TEST(IntegrateForward, ZeroStaysZeroWhenHVanishesAtZero) {
  const auto m = sgain::builtin("griffith");
  const auto g = WienerGrid::sample(3, 0.0, 5.0, 1e-2, 1);
  const auto traj = sgain::integrate_forward(m, g, Eigen::VectorXd::Zero(3), 0.0, 5.0);
  for (const auto& x : traj.states) ASSERT_TRUE(x.isZero(0.0));
}

TEST(IntegrateForward, RecordsEndpointsAndStride) {
  const auto m = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, 0.0, 1.0, 1e-2, 1);
  const auto traj = sgain::integrate_forward(m, g, Eigen::VectorXd::Ones(3), 0.0, 1.0, {}, 7);
  EXPECT_DOUBLE_EQ(traj.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(traj.times.back(), 1.0);
  EXPECT_EQ(traj.states.size(), traj.times.size());
  EXPECT_EQ(traj.stats.steps, 100);
  // Past the window the path is extended with the same keyed samples.
  const auto longer = sgain::integrate_forward(m, g, Eigen::VectorXd::Ones(3), 0.0, 2.0);
  const auto reference = sgain::integrate_forward(m, WienerGrid::sample(3, 0.0, 2.0, 1e-2, 1), Eigen::VectorXd::Ones(3),
                                                  0.0, 2.0);
  EXPECT_EQ(longer.states.back(), reference.states.back());
  EXPECT_THROW((void)sgain::integrate_forward(m, g, Eigen::VectorXd::Ones(3), 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW((void)sgain::integrate_forward(m, g, -Eigen::VectorXd::Ones(3), 0.0, 1.0), std::invalid_argument);
}

TEST(IntegrateForward, ForwardInvarianceOnBuiltins) {
  for (const auto& name : sgain::builtin_names()) {
    const auto m = sgain::builtin(name);
    for (std::uint64_t p = 0; p < 4; ++p) {
      const auto g = WienerGrid::sample(m.noise_dims(), 0.0, 5.0, 1e-3, sgain::mix_seed(17, p));
      const auto traj = sgain::integrate_forward(m, g, Eigen::VectorXd::Constant(m.dim(), 0.5), 0.0, 5.0);
      for (const auto& x : traj.states) ASSERT_GE(x.minCoeff(), 0.0) << name;
    }
  }
}

TEST(IntegrateForward, DiagonalMatchesClosedForm) {
  const auto m = zero_feedback_diagonal();
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 2.0);
  for (std::uint64_t p = 0; p < 4; ++p) {
    const auto g = WienerGrid::sample(3, 0.0, 1.0, 1e-4, sgain::mix_seed(1, p));
    const auto traj = sgain::integrate_forward(m, g, x0, 0.0, 1.0);
    const Eigen::VectorXd exact = sgain::phi_exact_diagonal(m.linear, g, 1.0).entries * x0;
    EXPECT_LT((traj.states.back() - exact).cwiseAbs().maxCoeff(), 1e-2);
  }
}

TEST(IntegrateForward, SplittingSchemeAgreesWithEulerMaruyama) {
  const auto m = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, 0.0, 2.0, 1e-4, 3);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3);
  const auto em = sgain::integrate_forward(m, g, x0, 0.0, 2.0);
  const auto split = sgain::integrate_forward(m, g, x0, 0.0, 2.0, {.scheme = sgain::Scheme::splitting});
  EXPECT_LT((em.states.back() - split.states.back()).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(IntegrateForward, OrderPreservingForMonotoneFeedback) {
  const auto m = sgain::builtin("othmer_tyson");
  for (std::uint64_t p = 0; p < 8; ++p) {
    const auto g = WienerGrid::sample(3, 0.0, 5.0, 1e-3, sgain::mix_seed(8, p));
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(3, 0.1);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(3, 3.0);
    const auto a = sgain::integrate_forward(m, g, lo, 0.0, 5.0, {}, 100);
    const auto b = sgain::integrate_forward(m, g, hi, 0.0, 5.0, {}, 100);
    for (std::size_t k = 0; k < a.states.size(); ++k) ASSERT_LE((a.states[k] - b.states[k]).maxCoeff(), 1e-12);
  }
}

TEST(IntegrateForward, CocycleProperty) {
  // phi(t + s, omega) x = phi(t, theta_s omega) phi(s, omega) x.
  const auto m = sgain::builtin("goodwin");
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 2.0);
  for (std::uint64_t p = 0; p < 4; ++p) {
    const auto g = WienerGrid::sample(3, 0.0, 3.0, 1e-4, sgain::mix_seed(4, p));
    const auto whole = sgain::integrate_forward(m, g, x0, 0.0, 3.0).states.back();
    const auto mid = sgain::integrate_forward(m, g, x0, 0.0, 1.2).states.back();
    const auto rest = sgain::integrate_forward(m, g.shift(1.2), mid, 0.0, 1.8).states.back();
    EXPECT_LE((whole - rest).cwiseAbs().maxCoeff(), 5e-2);
  }
}

TEST(IntegrateForward, StepHalvingKeepsTheOrthant) {
  // Coarse steps with strong noise push Euler-Maruyama below zero; bridge
  // halving must recover or report failure.
  const auto m = sgain::builtin("example47");
  const auto g = WienerGrid::sample(3, 0.0, 2.0, 0.05, 13);
  const auto traj = sgain::integrate_forward(m, g, Eigen::VectorXd::Ones(3), 0.0, 2.0);
  EXPECT_GT(traj.stats.halvings, 0);
  for (const auto& x : traj.states) ASSERT_GE(x.minCoeff(), 0.0);
  EXPECT_THROW(
      (void)sgain::integrate_forward(m, g, Eigen::VectorXd::Ones(3), 0.0, 2.0, {.max_halving = 0}),
      sgain::PositivityError);
}

TEST(Pullback, ZeroWindowReturnsStart) {
  const auto m = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, -1.0, 0.0, 1e-2, 1);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.3);
  EXPECT_EQ(sgain::pullback(m, g, x0, 0.0), x0);
}

TEST(Pullback, EqualsForwardSolutionOnShiftedPath) {
  const auto m = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, -4.0, 0.0, 1e-3, 6);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.3);
  const auto pb = sgain::pullback(m, g, x0, 4.0);
  const auto fw = sgain::integrate_forward(m, g, x0, -4.0, 0.0).states.back();
  EXPECT_EQ(pb, fw);
}

TEST(Pullback, DifferenceDecaysExponentially) {
  // Without noise and with h constant in practice (V tiny), differences decay like e^{-t}.
  const auto m = sgain::builtin("goodwin", {{"sigma", "0"}});
  const auto g = WienerGrid::sample(3, -20.0, 0.0, 1e-3, 1);
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(3, 10.0);
  for (double T : {5.0, 10.0, 20.0}) {
    const double d = (sgain::pullback(m, g, a, T) - sgain::pullback(m, g, b, T)).cwiseAbs().maxCoeff();
    // Chain of three unit decays: |Phi(T)| <= (1 + T + T^2/2) e^{-T}.
    EXPECT_LE(d, 10.0 * (1 + T + T * T / 2) * std::exp(-T) * 1.01) << T;
  }
}

TEST(PullbackConvergence, DistancesShrinkWithWindow) {
  const auto m = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, -24.0, 0.0, 1e-2, 42);
  const std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Constant(3, 10.0)};
  const auto conv = sgain::pullback_convergence(m, g, starts, {3.0, 6.0, 12.0, 24.0});
  ASSERT_EQ(conv.distances.size(), 4U);
  EXPECT_TRUE(conv.monotone_trend);
  EXPECT_LT(conv.max_distance(3), 1e-6);
  EXPECT_GT(conv.max_distance(0), conv.max_distance(3));
}

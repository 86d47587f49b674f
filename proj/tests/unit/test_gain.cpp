#include <sgain/gain.hpp>
#include <sgain/models.hpp>
#include <sgain/philox.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using sgain::InputFunction;
using sgain::Rational;
using sgain::WienerGrid;

namespace {

Rational q(long long p, long long d = 1) { return Rational(p) / Rational(d); }

sgain::ModelSpec constant_feedback(const sgain::LinearSystem& linear, Rational value) {
  sgain::FeedbackParams p;
  p.numbers["value"] = {std::move(value)};
  return sgain::ModelSpec::make("const", linear, sgain::FeedbackSpec::make(sgain::FeedbackFamily::constant, linear.dim(), p));
}

Eigen::VectorXd positive_vector(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> log_u(-5.0, 5.0);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = std::exp(log_u(rng));
  return x;
}

}  // namespace

TEST(InputFunction, LayoutAndLookup) {
  Eigen::MatrixXd v(1, 3);
  v << 1.0, 2.0, 3.0;
  const InputFunction u(0.2, 0.1, v);
  EXPECT_EQ(u.first_slot(), -2);
  EXPECT_DOUBLE_EQ(u.at(-0.2)[0], 1.0);
  EXPECT_DOUBLE_EQ(u.at(0.0)[0], 3.0);
  EXPECT_THROW((void)u.at(0.1), std::out_of_range);
  EXPECT_THROW((void)InputFunction(0.25, 0.1, v), std::invalid_argument);
  EXPECT_DOUBLE_EQ(u.sup_distance(InputFunction::constant(0.2, 0.1, Eigen::VectorXd::Constant(1, 2.0))), 1.0);
}

TEST(KOperator, ZeroInputGivesZero) {
  const auto m = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, -5.0, 0.0, 1e-2, 1);
  const auto u = InputFunction::constant(5.0, 1e-2, Eigen::VectorXd::Zero(3));
  EXPECT_TRUE(sgain::k_operator(m, g, u, 0.0).isZero(0.0));
}

TEST(KOperator, DeterministicConstantInputIsGeometricSum) {
  // dY = (-a Y + u) dt, Euler: Y_N = u (1 - (1 - a dt)^N) / a.
  const auto m = constant_feedback(sgain::LinearSystem::diagonal({q(1), q(3)}, {q(0), q(0)}), q(1));
  const double dt = 1e-2, T = 4.0;
  const auto g = WienerGrid::sample(2, -T, 0.0, dt, 1);
  const auto u = InputFunction::constant(T, dt, Eigen::Vector2d(2.0, 5.0));
  const auto k = sgain::k_operator(m, g, u, 0.0);
  const double n = T / dt;
  EXPECT_NEAR(k[0], 2.0 * (1 - std::pow(1 - dt, n)), 1e-12);
  EXPECT_NEAR(k[1], 5.0 * (1 - std::pow(1 - 3 * dt, n)) / 3.0, 1e-12);
}

TEST(KOperator, SweepMatchesPhiQuadrature) {
  const std::vector<double> a{-1.0, -2.0}, sig{0.1, 0.2};
  const auto m = constant_feedback(sgain::LinearSystem::diagonal({q(1), q(2)}, {q(1, 10), q(1, 5)}), q(1));
  const double dt = 1e-4, T = 20.0;
  const Eigen::Vector2d uval(1.0, 3.0);
  const auto u = InputFunction::constant(T, dt, uval);
  for (std::uint64_t p = 0; p < 3; ++p) {
    const auto g = WienerGrid::sample(2, -T, 0.0, dt, sgain::mix_seed(12, p));
    const auto sweep = sgain::k_operator(m, g, u, 0.0);
    const auto quad = sgain::oracle::diagonal_k_quadrature(a, sig, g, T, uval);
    EXPECT_LT((sweep - quad).cwiseAbs().maxCoeff(), 1e-3) << sweep.transpose() << " vs " << quad.transpose();
  }
}

TEST(KOperator, SweepColumnsMatchPointEvaluations) {
  const auto m = sgain::builtin("example45");
  const double dt = 1e-2, T = 3.0;
  const auto g = WienerGrid::sample(3, -T, 0.0, dt, 5);
  const auto u = InputFunction::constant(T, dt, Eigen::Vector3d(2.0, 2.5, 3.0));
  const auto sweep = sgain::k_sweep(m, g, u);
  EXPECT_EQ((sweep.col(sweep.cols() - 1) - sgain::k_operator(m, g, u, 0.0)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((sweep.col(100) - sgain::k_operator(m, g, u, -2.0)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GainApply, ConstantFeedbackIgnoresInput) {
  const auto m = constant_feedback(sgain::LinearSystem::diagonal({q(1)}, {q(1, 2)}), q(7, 2));
  const auto g = WienerGrid::sample(1, -2.0, 0.0, 1e-2, 2);
  const auto v = sgain::gain_apply(m, g, InputFunction::constant(2.0, 1e-2, Eigen::VectorXd::Constant(1, 9.0)));
  EXPECT_TRUE((v.values().array() == 3.5).all());
}

TEST(GainApply, RangeWithinDeltaGamma) {
  for (const char* name : {"example45", "example46", "example47", "remark4"}) {
    const auto m = sgain::builtin(name);
    const auto g = WienerGrid::sample(m.noise_dims(), -3.0, 0.0, 1e-2, 3);
    const auto v = sgain::gain_apply(m, g, InputFunction::constant(3.0, 1e-2, m.feedback.gamma()));
    for (Eigen::Index j = 0; j < v.values().cols(); ++j) {
      ASSERT_GE((v.values().col(j) - m.feedback.delta()).minCoeff(), -1e-12) << name;
      ASSERT_LE((v.values().col(j) - m.feedback.gamma()).maxCoeff(), 1e-12) << name;
    }
  }
}

TEST(GainFixedPoint, ConvergesAndAgreesWithPullback) {
  const auto m = sgain::builtin("goodwin");
  const double dt = 1e-2, T = 30.0;
  const auto g = WienerGrid::sample(3, -T, 0.0, dt, 42);
  const auto est = sgain::gain_fixed_point(m, g, T, 1e-12);
  EXPECT_TRUE(est.converged);
  EXPECT_LE(est.residual_history.back(), 1e-12);
  EXPECT_DOUBLE_EQ(est.window, T);
  // The discrete fixed point solves the pull-back recursion started at 0.
  const auto pb = sgain::pullback(m, g, Eigen::VectorXd::Zero(3), T);
  EXPECT_LT((pb - est.value_at_zero).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GainFixedPoint, ReportsNonConvergence) {
  const auto m = sgain::builtin("goodwin");
  const auto g = WienerGrid::sample(3, -10.0, 0.0, 1e-2, 42);
  try {
    (void)sgain::gain_fixed_point(m, g, 10.0, 1e-300, 1);
    FAIL() << "expected ConvergenceError";
  } catch (const sgain::ConvergenceError& e) {
    EXPECT_FALSE(e.estimate().converged);
    EXPECT_EQ(e.estimate().iterations, 1);
  }
}

TEST(DefaultWindow, MeetsTolerance) {
  const double T = sgain::default_window(0.5, 10.0, 1e-6, 1e-2);
  EXPECT_LT(std::exp(-0.5 * T) * 10.0, 1e-7);
  EXPECT_NEAR(std::round(T / 1e-2) * 1e-2, T, 1e-12);
}

TEST(Envelope, SandwichesThePullbackFamily) {
  // The family member of the longest window lies inside the envelope, and so
  // does h(v) up to the pull-back convergence error at that window.
  const auto m = sgain::builtin("example45");
  const double dt = 1e-2, T = 8.0;
  const auto g = WienerGrid::sample(3, -2 * T, 0.0, dt, 4);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3);
  const auto env = sgain::envelope(m, g, x0, 1.0, T, 10);
  const Eigen::VectorXd last = m.feedback(sgain::pullback(m, g, x0, T));
  EXPECT_LE((env.xi - last).maxCoeff(), 1e-12);
  EXPECT_GE((env.eta - last).minCoeff(), -1e-12);
  const auto est = sgain::gain_fixed_point(m, g, T, 1e-10);
  const Eigen::VectorXd hv = m.feedback(est.value_at_zero);
  EXPECT_LE((env.xi - hv).maxCoeff(), 1e-2);
  EXPECT_GE((env.eta - hv).minCoeff(), -1e-2);
  EXPECT_GE((env.xi - m.feedback.delta()).minCoeff(), -1e-12);
  EXPECT_LE((env.eta - m.feedback.gamma()).maxCoeff(), 1e-12);
}

TEST(PartMetric, Axioms) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    const auto x = positive_vector(rng, 4), y = positive_vector(rng, 4), z = positive_vector(rng, 4);
    const double dxy = sgain::part_metric(x, y);
    ASSERT_EQ(sgain::part_metric(x, x), 0.0);
    ASSERT_GT(dxy, 0.0);
    ASSERT_EQ(dxy, sgain::part_metric(y, x));
    ASSERT_LE(sgain::part_metric(x, z), dxy + sgain::part_metric(y, z) + 1e-12);
    const double c = std::exp(1.5);
    ASSERT_NEAR(sgain::part_metric(x, c * x), 1.5, 1e-12);
  }
  EXPECT_THROW((void)sgain::part_metric(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1)), std::invalid_argument);
}

TEST(PartMetric, EnsembleIsMaxOverMembers) {
  const std::vector<Eigen::VectorXd> u{Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 2)};
  const std::vector<Eigen::VectorXd> v{Eigen::Vector2d(1, std::exp(0.5)), Eigen::Vector2d(2, 2 * std::exp(-1.0))};
  EXPECT_NEAR(sgain::part_metric_ensemble(u, v), 1.0, 1e-15);
}

TEST(Sublinearity, SaturatingExamplesPass) {
  for (const char* name : {"example45", "example46", "example47"}) {
    const auto m = sgain::builtin(name);
    const auto r = sgain::sublinearity_check(m.feedback);
    EXPECT_TRUE(r.passed) << name << " worst " << r.worst_violation;
    EXPECT_GT(r.evaluations, 0);
  }
}

TEST(Sublinearity, SquareIsACounterexample) {
  sgain::FeedbackParams p;
  p.expressions = {"x1^2"};
  p.monotonicity = sgain::Monotonicity::monotone;
  p.allows_zero = true;
  const auto h = sgain::FeedbackSpec::make(sgain::FeedbackFamily::custom_expression, 1, p);
  const auto r = sgain::sublinearity_check(h, sgain::ShiftKind::subtract_delta_over_T, std::nullopt);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.worst_violation, 0.0);
}

TEST(Sublinearity, LinearMapIsBorderline) {
  sgain::FeedbackParams p;
  p.expressions = {"2*x1", "x1 + x2"};
  p.monotonicity = sgain::Monotonicity::monotone;
  p.allows_zero = true;
  const auto h = sgain::FeedbackSpec::make(sgain::FeedbackFamily::custom_expression, 2, p);
  EXPECT_TRUE(sgain::sublinearity_check(h, sgain::ShiftKind::subtract_delta_over_T, std::nullopt).passed);
}

TEST(Contraction, ConstantFeedbackContractsToZero) {
  const auto m = constant_feedback(sgain::LinearSystem::diagonal({q(1), q(1)}, {q(1, 10), q(1, 10)}), q(1));
  sgain::ContractionOptions opt;
  opt.paths = 2;
  opt.pairs = 2;
  opt.window = 2.0;
  const auto r = sgain::contraction_estimate(m, opt);
  // delta = Gamma leaves nothing to compare.
  EXPECT_EQ(r.skipped, 2);
  EXPECT_EQ(r.ratio, 0.0);
}

TEST(Contraction, IdenticalPairsAreSkipped) {
  const auto m = sgain::builtin("example45");
  const auto g = WienerGrid::sample(3, -2.0, 0.0, 1e-2, 1);
  const auto u = InputFunction::constant(2.0, 1e-2, Eigen::Vector3d(2.2, 2.4, 2.6));
  const auto w = InputFunction::constant(2.0, 1e-2, Eigen::Vector3d(2.9, 2.1, 2.5));
  const auto r = sgain::contraction_estimate(m, {g}, {{{u}, {u}}, {{u}, {w}}});
  EXPECT_EQ(r.skipped, 1);
  ASSERT_EQ(r.pair_ratios.size(), 1U);
  EXPECT_LT(r.ratio, 1.0);
  EXPECT_GT(r.ratio, 0.0);
}

TEST(Contraction, SmallEnsembleOnSaturatingExample) {
  sgain::ContractionOptions opt;
  opt.paths = 4;
  opt.pairs = 4;
  opt.window = 5.0;
  const auto r = sgain::contraction_estimate(sgain::builtin("example45"), opt);
  EXPECT_EQ(r.pair_ratios.size(), 4U);
  EXPECT_LT(r.ratio, 1.0);
}

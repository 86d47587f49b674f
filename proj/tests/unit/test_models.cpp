#include <sgain/model_io.hpp>
#include <sgain/models.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using sgain::Rational;

namespace {

Rational q(long long p, long long d = 1) { return Rational(p) / Rational(d); }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

constexpr const char* kCustom = R"toml(
[meta]
name = "custom"

[linear]
dim = 2
structure = "diagonal"
A = [[-1, 0], [0, "-1/2"]]

[[noise]]
diag = ["1/10", 0]

[feedback]
family = "custom_expression"
expressions = ["1 + x2/(1 + x2)", "2 + x1/(2 + x1)"]
monotonicity = "monotone"
params = { gamma = [2, 3], delta = [1, 2] }
)toml";

}  // namespace

TEST(Feedback, GoodwinEvaluation) {
  const auto m = sgain::builtin("goodwin");
  const auto h = m.feedback(vec({5.0, 5.0, 2.0}));
  EXPECT_DOUBLE_EQ(h[0], 1e-3 / 6.0);
  EXPECT_EQ(h[1], 0.0);
  EXPECT_EQ(h[2], 0.0);
  EXPECT_DOUBLE_EQ(m.feedback.gamma()[0], 1e-3 / 2.0);
}

TEST(Feedback, OthmerTysonAndGriffithEvaluation) {
  const auto ot = sgain::builtin("remark4");
  // k0 (1 + x^3) / (K + x^3) at x3 = 1: (1/6) * 2 / (7/3) = 1/7.
  EXPECT_NEAR(ot.feedback(vec({0.0, 0.0, 1.0}))[0], 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(ot.feedback(vec({0.0, 0.0, 0.0}))[0], 1.0 / 8.0, 1e-15);
  const auto gr = sgain::builtin("griffith", {{"K", "1/8"}, {"m", "3"}});
  EXPECT_NEAR(gr.feedback(vec({0.0, 0.0, 2.0}))[0], 0.5, 1e-15);
  EXPECT_EQ(gr.feedback(vec({0.0, 0.0, 0.0}))[0], 0.0);
  EXPECT_TRUE(gr.feedback.allows_zero());
}

TEST(Feedback, SaturatingExamples) {
  const auto e45 = sgain::builtin("example45");
  // h_i = 2 + x_i / (1 + x_i).
  const auto h45 = e45.feedback(vec({0.0, 1.0, 3.0}));
  EXPECT_DOUBLE_EQ(h45[0], 2.0);
  EXPECT_DOUBLE_EQ(h45[1], 2.5);
  EXPECT_DOUBLE_EQ(h45[2], 2.75);
  const auto e46 = sgain::builtin("example46");
  // h_i = 1 / (1 + x_{i-1} / (1 + x_{i-1})), cyclic.
  const auto h46 = e46.feedback(vec({1.0, 0.0, 3.0}));
  EXPECT_DOUBLE_EQ(h46[0], 1.0 / 1.75);
  EXPECT_DOUBLE_EQ(h46[1], 1.0 / 1.5);
  EXPECT_DOUBLE_EQ(h46[2], 1.0);
  EXPECT_EQ(e46.feedback.monotonicity(), sgain::Monotonicity::anti_monotone);
}

TEST(Feedback, NegativeInputIsRejected) {
  const auto m = sgain::builtin("example45");
  EXPECT_THROW((void)m.feedback(vec({1.0, -1.0, 1.0})), std::invalid_argument);
}

TEST(DerivedConstants, GriffithClosedForm) {
  // m = 3, K = 1/8: stationary point at K x^3 = 1/2, M = (4/3) (1/32)^(1/3).
  const auto gr = sgain::builtin("griffith", {{"K", "1/8"}, {"m", "3"}});
  const auto& M = gr.feedback.constants().M;
  EXPECT_EQ(M.coeff, q(4, 3));
  EXPECT_EQ(M.base, q(1, 32));
  EXPECT_EQ(M.root, 3U);
  EXPECT_NEAR(M.value(), (4.0 / 3.0) * std::cbrt(1.0 / 32.0), 1e-15);
}

TEST(DerivedConstants, ThreeStageChainMatchesLattice) {
  const auto m = sgain::builtin("remark4");
  const double closed = m.feedback.constants().M.value();
  // Stationary point x^3 = 2/3 of x^2/(4/3 + x^3)^2: M = (1/24) (4/9)^(1/3).
  EXPECT_NEAR(closed, (1.0 / 24.0) * std::cbrt(4.0 / 9.0), 1e-15);
  EXPECT_NEAR(sgain::derivative_sup_numeric(m.feedback), closed, 1e-6);
  ASSERT_TRUE(m.feedback.constants().M_coarse_bound.has_value());
  EXPECT_GE(sgain::to_double(*m.feedback.constants().M_coarse_bound), closed);
}

TEST(DerivedConstants, ClosedFormsAgreeWithLattice) {
  for (const auto& name : sgain::builtin_names()) {
    const auto m = sgain::builtin(name);
    const double closed = m.feedback.constants().M.value();
    const double lattice = sgain::derivative_sup_numeric(m.feedback);
    EXPECT_LE(lattice, closed * (1 + 1e-6)) << name;  // finite-difference accuracy
    EXPECT_NEAR(lattice, closed, 0.01 * closed) << name;
    EXPECT_TRUE(m.feedback.constants().rigorous) << name;
  }
}

TEST(DerivedConstants, RangeMatchesSamples) {
  for (const auto& name : sgain::builtin_names()) {
    const auto m = sgain::builtin(name);
    EXPECT_TRUE(sgain::check_range(m.feedback, 1000).passed) << name;
  }
}

TEST(Monotonicity, BuiltinsHonourTheirDeclaredOrder) {
  for (const auto& name : sgain::builtin_names()) {
    const auto m = sgain::builtin(name);
    const auto r = sgain::check_monotonicity(m.feedback, 1000, 99);
    EXPECT_TRUE(r.passed) << name << ": " << r.detail;
  }
}

TEST(Monotonicity, PropertyOnRandomOrderedPairs) {
  // x <= y entrywise implies h(x) <= h(y) for monotone, >= for anti-monotone.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (const char* name : {"example45", "example46", "example47", "competitive"}) {
    const auto m = sgain::builtin(name);
    const double sign = m.feedback.monotonicity() == sgain::Monotonicity::monotone ? 1.0 : -1.0;
    for (int p = 0; p < 1000; ++p) {
      Eigen::VectorXd x(3), y(3);
      for (int i = 0; i < 3; ++i) {
        x[i] = u(rng);
        y[i] = x[i] + u(rng);
      }
      const Eigen::VectorXd d = sign * (m.feedback(y) - m.feedback(x));
      ASSERT_GE(d.minCoeff(), -1e-15) << name;
    }
  }
}

TEST(Monotonicity, ContradictingDeclarationIsRejected) {
  sgain::FeedbackParams p;
  p.numbers = {{"V", {q(1)}}, {"K", {q(2)}}, {"m", {q(2)}}};
  p.monotonicity = sgain::Monotonicity::monotone;
  EXPECT_THROW((void)sgain::FeedbackSpec::make(sgain::FeedbackFamily::goodwin, 3, p), sgain::ModelError);
}

TEST(Feedback, ParameterValidation) {
  EXPECT_THROW((void)sgain::builtin("goodwin", {{"K", "1"}}), sgain::ModelError);
  EXPECT_THROW((void)sgain::builtin("goodwin", {{"m", "1"}}), sgain::ModelError);
  EXPECT_THROW((void)sgain::builtin("competitive", {{"K", "1/2"}}), sgain::ModelError);
  EXPECT_THROW((void)sgain::builtin("griffith", {{"K", "0"}}), sgain::ModelError);
}

TEST(Builtins, OverridesAreChecked) {
  const auto g5 = sgain::builtin("goodwin", {{"n", "5"}, {"alpha", "1,2,3,4,5"}});
  EXPECT_EQ(g5.dim(), 5);
  EXPECT_EQ(g5.linear.a_exact(4, 4), q(-5));
  EXPECT_THROW((void)sgain::builtin("goodwin", {{"n", "5"}, {"alpha", "1,2"}}), sgain::ModelError);
  EXPECT_THROW((void)sgain::builtin("goodwin", {{"colour", "red"}}), sgain::ModelError);
  EXPECT_THROW((void)sgain::builtin("example45", {{"n", "4"}}), sgain::ModelError);
  EXPECT_THROW((void)sgain::builtin("nonexistent"), sgain::ModelError);
}

TEST(ModelIo, RoundTripOfEveryBuiltin) {
  for (const auto& name : sgain::builtin_names()) {
    const auto m = sgain::builtin(name);
    const auto text = sgain::serialize_model(m);
    EXPECT_EQ(sgain::parse_model_string(text, name), m) << text;
  }
}

TEST(ModelIo, CustomExpressionModel) {
  const auto m = sgain::parse_model_string(kCustom);
  EXPECT_EQ(m.name, "custom");
  const auto h = m.feedback(vec({2.0, 1.0}));
  EXPECT_DOUBLE_EQ(h[0], 1.5);
  EXPECT_DOUBLE_EQ(h[1], 2.5);
  EXPECT_FALSE(m.feedback.constants().rigorous);
  EXPECT_EQ(sgain::parse_model_string(sgain::serialize_model(m)), m);
}

TEST(ModelIo, NonCooperativeMatrixNamesTheEntry) {
  const std::string text = R"(
[linear]
dim = 2
A = [[-1, -1], [0, -1]]

[feedback]
family = "constant"
params = { value = 1 }
)";
  try {
    (void)sgain::parse_model_string(text, "bad.toml");
    FAIL() << "expected a parse error";
  } catch (const sgain::ModelParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("bad.toml"), std::string::npos) << what;
    EXPECT_NE(what.find("A[1,2] = -1"), std::string::npos) << what;
  }
}

TEST(ModelIo, NonDiagonalNoiseIsUnsupported) {
  const std::string text = R"(
[linear]
dim = 2
A = [[-1, 0], [0, -1]]

[[noise]]
matrix = [[1, 1], [0, 1]]

[feedback]
family = "constant"
params = { value = 1 }
)";
  try {
    (void)sgain::parse_model_string(text, "noise.toml");
    FAIL() << "expected a parse error";
  } catch (const sgain::ModelParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported noise"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, UnknownKeysAndBadSyntax) {
  EXPECT_THROW((void)sgain::parse_model_string("[linear]\ndim = 1\nA = [[-1]]\nfoo = 2\n"), sgain::ModelParseError);
  EXPECT_THROW((void)sgain::parse_model_string("[linear\n"), sgain::ModelParseError);
  EXPECT_THROW((void)sgain::parse_model("/nonexistent/model.toml"), sgain::ModelParseError);
}

TEST(Expression, GrammarAndErrors) {
  const auto e = sgain::Expression::parse("pow(x1, 2) - -x2 / (1 + 3) ^ 2", 2);
  const std::vector<double> x{3.0, 16.0};
  EXPECT_DOUBLE_EQ(e.evaluate(x), 9.0 + 1.0);
  EXPECT_THROW((void)sgain::Expression::parse("x3", 2), sgain::ExpressionError);
  EXPECT_THROW((void)sgain::Expression::parse("1 +", 1), sgain::ExpressionError);
  EXPECT_THROW((void)sgain::Expression::parse("(1", 1), sgain::ExpressionError);
  EXPECT_THROW((void)sgain::Expression::parse("sin(x1)", 1), sgain::ExpressionError);
}

TEST(ParseRationalList, CommaSeparated) {
  const auto v = sgain::parse_rational_list("1, 1/2,0.25");
  ASSERT_EQ(v.size(), 3U);
  EXPECT_EQ(v[1], q(1, 2));
  EXPECT_EQ(v[2], q(1, 4));
}

TEST(ModelIo, ShippedModelFilesMatchBuiltins) {
  for (const auto& name : sgain::builtin_names()) {
    const auto path = std::filesystem::path(SGAIN_MODELS_DIR) / (name + ".toml");
    EXPECT_EQ(sgain::parse_model(path), sgain::builtin(name)) << path;
  }
}

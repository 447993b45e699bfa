#include "safecert/core.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace safecert {
namespace {

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

StcTemplate RoomTemplate() { return StcTemplate(1, {{4}, {2}, {0}}); }

CoefficientVector RoomCoeffs() { return CoefficientVector(Vec({0.0151, -0.7, -0.7})); }

double RoomPolynomial(double x) { return 0.0151 * x * x * x * x - 0.7 * x * x - 0.7; }

TEST(IntervalBox, RejectsInvertedBounds) {
  EXPECT_THROW(IntervalBox(Vec({1.0}), Vec({0.0})), InvalidInputError);
  EXPECT_THROW(IntervalBox(Vec({0.0, 0.0}), Vec({1.0})), InvalidInputError);
  EXPECT_THROW(IntervalBox(Eigen::VectorXd(), Eigen::VectorXd()), InvalidInputError);
}

TEST(IntervalBox, MembershipAndProducts) {
  const IntervalBox a = IntervalBox::Interval(10, 13);
  EXPECT_TRUE(a.Contains(Vec({10.0})));
  EXPECT_TRUE(a.Contains(Vec({13.0})));
  EXPECT_FALSE(a.Contains(Vec({13.1})));
  const IntervalBox p = IntervalBox::Product(a, IntervalBox::Interval(0, 1));
  EXPECT_EQ(p.dim(), 2);
  EXPECT_DOUBLE_EQ(p.Diagonal(), std::sqrt(10.0));
  EXPECT_TRUE(p.ContainsBox(IntervalBox(Vec({11, 0.5}), Vec({12, 1}))));
}

TEST(SafetySpec, RejectsOverlap) {
  EXPECT_THROW(SafetySpec(IntervalBox::Interval(10, 12), IntervalBox::Interval(11, 13)),
               InvalidInputError);
  EXPECT_THROW(SafetySpec(IntervalBox::Interval(10, 12), IntervalBox::Interval(12, 13)),
               InvalidInputError);
  EXPECT_NO_THROW(SafetySpec(IntervalBox::Interval(10, 11), IntervalBox::Interval(12, 13)));
  // Boxes overlapping in one coordinate only are disjoint.
  EXPECT_NO_THROW(SafetySpec(IntervalBox(Vec({0, 0}), Vec({1, 1})),
                             IntervalBox(Vec({0, 1.5}), Vec({1, 2}))));
}

TEST(StcTemplate, Validation) {
  EXPECT_THROW(StcTemplate(1, {}), InvalidInputError);
  EXPECT_THROW(StcTemplate(2, {{1}}), InvalidInputError);
  EXPECT_THROW(StcTemplate(1, {{-1}}), InvalidInputError);
  EXPECT_EQ(StcTemplate::FullPolynomial(2, 4).term_count(), 15);
  EXPECT_EQ(StcTemplate::FullPolynomial(1, 4).term_count(), 5);
}

TEST(StcTemplate, FullPolynomialOrdering) {
  const auto e = StcTemplate::FullPolynomial(2, 2).exponents();
  const std::vector<std::vector<int>> expected = {{2, 0}, {1, 1}, {0, 2}, {1, 0}, {0, 1}, {0, 0}};
  EXPECT_EQ(e, expected);
}

TEST(EvalTemplate, RoomPolynomialAtEleven) {
  EXPECT_NEAR(EvalTemplate(RoomTemplate(), RoomCoeffs(), Vec({11.0})), RoomPolynomial(11.0), 1e-10);
  EXPECT_NEAR(EvalTemplate(RoomTemplate(), RoomCoeffs(), Vec({11.0})), 135.6791, 1e-9);
}

TEST(EvalTemplate, RoomPolynomialAtTwelve) {
  EXPECT_NEAR(EvalTemplate(RoomTemplate(), RoomCoeffs(), Vec({12.0})), RoomPolynomial(12.0), 1e-10);
  EXPECT_NEAR(EvalTemplate(RoomTemplate(), RoomCoeffs(), Vec({12.0})), 211.6136, 1e-9);
}

TEST(EvalTemplate, ZeroCoefficients) {
  const StcTemplate t = StcTemplate::FullPolynomial(3, 3);
  const CoefficientVector zero(Eigen::VectorXd::Zero(t.term_count()));
  EXPECT_EQ(EvalTemplate(t, zero, Vec({1.5, -2.0, 7.0})), 0.0);
}

TEST(EvalTemplate, DimensionMismatch) {
  EXPECT_THROW(EvalTemplate(RoomTemplate(), RoomCoeffs(), Vec({1.0, 2.0})), InvalidInputError);
  EXPECT_THROW(EvalTemplate(RoomTemplate(), CoefficientVector(Vec({1.0})), Vec({1.0})),
               InvalidInputError);
}

TEST(EvalTemplate, LinearInCoefficients) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    const StcTemplate t = StcTemplate::FullPolynomial(n, 1 + trial % 4);
    Eigen::VectorXd c1(t.term_count()), c2(t.term_count()), x(n);
    for (auto& v : c1.reshaped()) v = u(rng);
    for (auto& v : c2.reshaped()) v = u(rng);
    for (auto& v : x.reshaped()) v = u(rng);
    const double lambda = u(rng);
    const double sum = EvalTemplate(t, CoefficientVector(c1 + c2), x);
    EXPECT_NEAR(sum, EvalTemplate(t, CoefficientVector(c1), x) + EvalTemplate(t, CoefficientVector(c2), x),
                1e-10);
    EXPECT_NEAR(EvalTemplate(t, CoefficientVector(lambda * c1), x),
                lambda * EvalTemplate(t, CoefficientVector(c1), x), 1e-10);
  }
}

TEST(SupplyRate, RejectsAsymmetricBlocks) {
  Eigen::MatrixXd s(2, 2);
  s << 1, 2, 3, 4;
  EXPECT_THROW(SupplyRate(s, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 1)),
               InvalidInputError);
  EXPECT_THROW(SupplyRate(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(2, 1),
                          Eigen::MatrixXd::Zero(1, 1)),
               InvalidInputError);
}

TEST(EvalSupply, RoomValues) {
  const SupplyRate s(Eigen::MatrixXd::Constant(1, 1, 0.01), Eigen::MatrixXd::Zero(1, 1),
                     Eigen::MatrixXd::Constant(1, 1, -0.1));
  EXPECT_NEAR(EvalSupply(s, Vec({1.0}), Vec({10.0})), 0.01 * 1 - 0.1 * 100, 1e-12);
  EXPECT_NEAR(EvalSupply(s, Vec({1.0}), Vec({10.0})), -9.99, 1e-12);
}

TEST(EvalSupply, CrossTermAndZero) {
  const SupplyRate s(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1),
                     Eigen::MatrixXd::Zero(1, 1));
  EXPECT_DOUBLE_EQ(EvalSupply(s, Vec({2.0}), Vec({3.0})), 12.0);
  EXPECT_DOUBLE_EQ(EvalSupply(s, Vec({0.0}), Vec({0.0})), 0.0);
  EXPECT_THROW(EvalSupply(s, Vec({1.0, 1.0}), Vec({1.0})), InvalidInputError);
}

TEST(EvalSupply, MatchesFullMatrixProduct) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int p = 1 + trial % 3, n = 1 + (trial / 3) % 3;
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(p, p, [&] { return u(rng); });
    Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(p, n, [&] { return u(rng); });
    Eigen::MatrixXd c = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
    const Eigen::MatrixXd s11 = 0.5 * (a + a.transpose());
    const Eigen::MatrixXd s22 = 0.5 * (c + c.transpose());
    const SupplyRate s(s11, b, s22);
    Eigen::MatrixXd full(p + n, p + n);
    full << s11, b, b.transpose(), s22;
    const Eigen::VectorXd d = Eigen::VectorXd::NullaryExpr(p, [&] { return u(rng); });
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
    Eigen::VectorXd z(p + n);
    z << d, x;
    EXPECT_NEAR(EvalSupply(s, d, x), z.dot(full * z), 1e-12);
    EXPECT_TRUE(s.FullMatrix().isApprox(full));
  }
}

TEST(SubsystemClass, ValidatesBoxes) {
  const IntervalBox x = IntervalBox::Interval(10, 13);
  const SafetySpec outside(IntervalBox::Interval(9, 11), IntervalBox::Interval(12, 13));
  EXPECT_THROW(SubsystemClass("c", x, x, outside, RoomTemplate(), {}), InvalidInputError);
  const SubsystemClass cls("c", x, x,
                           SafetySpec(IntervalBox::Interval(10, 11), IntervalBox::Interval(12, 13)),
                           RoomTemplate(), {});
  EXPECT_FALSE(cls.has_oracle());
  EXPECT_THROW(cls.Step(Vec({10.0}), Vec({10.0})), InvalidInputError);
}

TEST(SubsystemClass, NonFiniteOracleOutputIsADataFault) {
  const IntervalBox x = IntervalBox::Interval(0, 1);
  const SubsystemClass cls("nan", x, x,
                           SafetySpec(IntervalBox::Interval(0, 0.2), IntervalBox::Interval(0.8, 1)),
                           StcTemplate(1, {{1}}),
                           [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
                             return Eigen::VectorXd::Constant(1, std::nan(""));
                           });
  EXPECT_THROW(cls.Step(Vec({0.5}), Vec({0.5})), DataFaultError);
}

}  // namespace
}  // namespace safecert

#include "memcost/errors.hpp"
#include "memcost/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace memcost;

TEST(Interval, RejectsReversedAndNonFinite) {
  EXPECT_THROW(Interval(1.0, 0.0), ContractError);
  EXPECT_THROW(Interval(0.0, std::nan("")), ContractError);
  EXPECT_THROW(Interval(-INFINITY, 0.0), ContractError);
  const Interval iv(1.0, 3.0);
  EXPECT_DOUBLE_EQ(iv.center(), 2.0);
  EXPECT_DOUBLE_EQ(iv.half_width(), 1.0);
  EXPECT_DOUBLE_EQ(iv.width(), 2.0);
}

TEST(Bisect, FindsSqrtTwo) {
  const double r = bisect([](double x) { return x * x - 2.0; }, Interval(0.0, 2.0),
                          ToleranceSpec{1e-15, 1e-15, 200});
  EXPECT_NEAR(r, std::numbers::sqrt2, 4e-15);
}

TEST(Bisect, DecreasingFunction) {
  const double r = bisect([](double x) { return std::cos(x); }, Interval(0.0, 3.0), {});
  EXPECT_NEAR(r, std::numbers::pi / 2, 1e-12);
}

TEST(Bisect, EndpointRootReturnedExactly) {
  EXPECT_EQ(bisect([](double x) { return x - 1.0; }, Interval(1.0, 4.0), {}), 1.0);
  EXPECT_EQ(bisect([](double x) { return x - 4.0; }, Interval(1.0, 4.0), {}), 4.0);
}

TEST(Bisect, NoSignChangeIsBracketError) {
  try {
    bisect([](double x) { return x * x + 1.0; }, Interval(-1.0, 1.0), {});
    FAIL();
  } catch (const BracketError& e) {
    EXPECT_GT(e.f_lo(), 0.0);
    EXPECT_GT(e.f_hi(), 0.0);
  }
}

TEST(Bisect, NanAtEndpointIsBracketError) {
  EXPECT_THROW(bisect([](double x) { return x > 0.5 ? std::nan("") : -1.0; }, Interval(0.0, 1.0), {}),
               BracketError);
}

TEST(Bisect, IterationCapIsConvergenceError) {
  try {
    bisect([](double x) { return x - 0.3; }, Interval(0.0, 1.0), ToleranceSpec{1e-300, 0.0, 5});
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_LE(e.last_lo(), 0.3);
    EXPECT_GE(e.last_hi(), 0.3);
  }
}

TEST(Bisect, BadToleranceIsContractError) {
  EXPECT_THROW(bisect([](double x) { return x; }, Interval(-1, 1), ToleranceSpec{-1.0, 0.0, 10}),
               ContractError);
  EXPECT_THROW(bisect([](double x) { return x; }, Interval(-1, 1), ToleranceSpec{0.0, 0.0, 0}),
               ContractError);
}

TEST(Bisect, DetailedBracketContainsRoot) {
  const auto r = bisect_detailed([](double x) { return std::exp(x) - 3.0; }, Interval(0.0, 2.0),
                                 ToleranceSpec{0.0, 1e-14, 200});
  EXPECT_LE(r.lo, std::log(3.0));
  EXPECT_GE(r.hi, std::log(3.0));
  EXPECT_LE(r.hi - r.lo, 1e-13);
  EXPECT_GT(r.iterations, 10);
}

// Bracket property: every root found lies in its bracket and has a small residual.
TEST(Bisect, RandomCubicsProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const double a = u(rng);
    auto f = [a](double x) { return x * x * x + x - a; };
    const double r = bisect(f, Interval(-2.0, 2.0), ToleranceSpec{1e-14, 1e-15, 200});
    EXPECT_LE(std::fabs(f(r)), 1e-13);
  }
}

TEST(ChebyshevRule, NodesAndWeights) {
  const auto rule = chebyshev_gauss_rule(64);
  ASSERT_EQ(rule.node_count(), 64u);
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_NEAR(rule.weights[i], std::numbers::pi / 64, 1e-16);
    EXPECT_GT(rule.nodes[i], -1.0);
    EXPECT_LT(rule.nodes[i], 1.0);
    if (i) {
      EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
    }
  }
  EXPECT_THROW(chebyshev_gauss_rule(0), ContractError);
}

// Gauss-Chebyshev is exact for polynomials up to degree 2k - 1 against 1/sqrt(1 - x^2).
TEST(ChebyshevRule, ExactForPolynomials) {
  const auto rule = chebyshev_gauss_rule(8);
  auto integrate = [&](auto f) {
    double s = 0;
    for (std::size_t i = 0; i < rule.node_count(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
    return s;
  };
  EXPECT_NEAR(integrate([](double) { return 1.0; }), std::numbers::pi, 1e-14);
  EXPECT_NEAR(integrate([](double x) { return x * x; }), std::numbers::pi / 2, 1e-14);
  EXPECT_NEAR(integrate([](double x) { return std::pow(x, 14); }),
              std::numbers::pi * 429.0 / 2048.0 * 1.0, 1e-13);
}

TEST(SqrtWeighted, SemicircleArea) {
  // int_{-1}^{1} sqrt(1 - s^2) ds = pi / 2.
  const auto r = integrate_sqrt_weighted([](double) { return 1.0; }, Interval(-1.0, 1.0));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, std::numbers::pi / 2, 1e-13);
}

TEST(SqrtWeighted, ShiftedMoment) {
  // int_a^b sqrt((b - s)(s - a)) s ds = pi (b - a)^2 (a + b) / 16.
  const double a = 0.5, b = 3.0;
  const auto r = integrate_sqrt_weighted([](double s) { return s; }, Interval(a, b));
  EXPECT_NEAR(r.value, std::numbers::pi * (b - a) * (b - a) * (a + b) / 16.0, 1e-12);
}

TEST(SqrtWeighted, NonFiniteIntegrandIsDomainError) {
  EXPECT_THROW(integrate_sqrt_weighted([](double s) { return s > 1.5 ? std::nan("") : 1.0; },
                                       Interval(0.0, 2.0), AdaptiveOptions{3, 16, 1e-11}),
               DomainError);
}

TEST(SqrtWeighted, ReportsNonConvergenceWithoutThrowing) {
  const auto r = integrate_sqrt_weighted([](double s) { return 1.0 / std::sqrt(std::fabs(s - 0.3)); },
                                         Interval(0.0, 1.0), AdaptiveOptions{16, 64, 1e-14});
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.nodes, 64);
}

TEST(SymEig, DiagonalizesRandomSymmetric) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd B(12, 12);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
  const Eigen::MatrixXd S = B + B.transpose();
  const SymEig e = sym_eig(S);
  for (Eigen::Index i = 1; i < e.values.size(); ++i) EXPECT_LE(e.values(i - 1), e.values(i));
  const Eigen::MatrixXd R = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  EXPECT_LE((R - S).norm(), 1e-12 * S.norm());
  EXPECT_LE((sym_eigenvalues(S) - e.values).norm(), 1e-12 * S.norm());
}

TEST(SymEig, RejectsAsymmetric) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  A(0, 1) = 1.0;
  EXPECT_THROW(sym_eig(A), ContractError);
  EXPECT_THROW(sym_eig(Eigen::MatrixXd(2, 3)), ContractError);
}

TEST(SvdThin, ReconstructsAndReportsRank) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(5, 9);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
  const ThinSvd s = svd_thin(X);
  EXPECT_EQ(s.rank, 5);
  EXPECT_EQ(s.U.cols(), 5);
  EXPECT_EQ(s.V.rows(), 9);
  const Eigen::MatrixXd R = s.U * s.values.asDiagonal() * s.V.transpose();
  EXPECT_LE((R - X).norm(), 1e-12 * X.norm());

  X.row(4) = X.row(3);
  EXPECT_EQ(svd_thin(X).rank, 4);
}

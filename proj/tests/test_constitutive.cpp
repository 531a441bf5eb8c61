#include "forchflow/constitutive.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace forchflow;

namespace {

ForchheimerPolynomial twoTermUnit() { return ForchheimerPolynomial({0.0, 1.0}, {1.0, 1.0}); }

// s of g = 1 + s at xi: positive root of s^2 + s - xi = 0.
double quadraticRoot(double xi) { return 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * xi)); }

ForchheimerPolynomial randomPoly(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> terms(1, 4);
    std::uniform_real_distribution<double> coeff(0.1, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = terms(rng);
    std::vector<double> alpha{0.0}, a{coeff(rng)};
    for (int k = 1; k < n; ++k) {
        alpha.push_back(alpha.back() + 0.1 + unit(rng) * (4.0 - alpha.back() - 0.1 * (n - k)) / (n - k));
        a.push_back(coeff(rng));
    }
    return ForchheimerPolynomial(alpha, a);
}

}  // namespace

TEST(Polynomial, DirectEvaluation) {
    EXPECT_DOUBLE_EQ(evalG(ForchheimerPolynomial::darcy(1.0), 5.0), 1.0);
    EXPECT_DOUBLE_EQ(evalG(twoTermUnit(), 1.0), 2.0);
    EXPECT_DOUBLE_EQ(evalG(ForchheimerPolynomial({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}), 2.0), 7.0);
    EXPECT_THROW(evalG(twoTermUnit(), -1.0), DomainError);
}

TEST(Polynomial, RejectsInvalidCoefficients) {
    try {
        ForchheimerPolynomial({0.0, 1.0}, {0.0, 1.0});
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("a₀ must be positive"), std::string::npos);
    }
    EXPECT_THROW(ForchheimerPolynomial({0.0, 1.0}, {1.0, 0.0}), DomainError);
    EXPECT_THROW(ForchheimerPolynomial({0.5, 1.0}, {1.0, 1.0}), DomainError);
    EXPECT_THROW(ForchheimerPolynomial({0.0, 2.0, 1.0}, {1.0, 1.0, 1.0}), DomainError);
    EXPECT_THROW(ForchheimerPolynomial({0.0, 1.0, 2.0}, {1.0, -1.0, 1.0}), DomainError);
}

TEST(Polynomial, DegeneracyExponent) {
    EXPECT_DOUBLE_EQ(degeneracyExponents(twoTermUnit()).a, 0.5);
    EXPECT_DOUBLE_EQ(degeneracyExponents(ForchheimerPolynomial::darcy(2.0)).a, 0.0);
}

TEST(SolveS, QuadraticAndCubicRoots) {
    EXPECT_NEAR(solveS(twoTermUnit(), 2.0), 1.0, 1e-14);
    EXPECT_EQ(solveS(twoTermUnit(), 0.0), 0.0);
    EXPECT_NEAR(solveS(ForchheimerPolynomial({0.0, 2.0}, {1.0, 1.0}), 10.0), 2.0, 1e-13);
    for (double xi : {1e-8, 0.3, 7.0, 1e3, 1e6}) {
        const double s = solveS(twoTermUnit(), xi);
        EXPECT_NEAR(s, quadraticRoot(xi), 1e-12 * std::max(1.0, quadraticRoot(xi)));
        EXPECT_LE(std::abs(s * evalG(twoTermUnit(), s) - xi) / std::max(xi, 1.0), 1e-12);
    }
}

TEST(Kernel, QuadraticRootOracle) {
    const auto k = evalK(twoTermUnit(), 2.0);
    EXPECT_NEAR(k.s, 1.0, 1e-14);
    EXPECT_NEAR(k.K, 0.5, 1e-10);
    // K = 1/(1+s), K' = -1/(1+s)^2 * ds/dxi with ds/dxi = 1/(1+2s).
    EXPECT_NEAR(k.Kprime, -1.0 / (4.0 * 3.0), 1e-13);
    EXPECT_NEAR(k.xiKprime, -2.0 / 12.0, 1e-13);
}

TEST(Kernel, DarcyIsConstant) {
    for (double xi : {0.0, 1.0, 100.0}) {
        const auto k = evalK(ForchheimerPolynomial::darcy(4.0), xi);
        EXPECT_DOUBLE_EQ(k.K, 0.25);
        EXPECT_EQ(k.Kprime, 0.0);
    }
    EXPECT_THROW(evalK(twoTermUnit(), -1.0), DomainError);
}

TEST(Kernel, AsymptoticBracketForTwoTermLaw) {
    for (double xi : {1e3, 1e6}) {
        const double r = evalK(twoTermUnit(), xi).K * std::sqrt(1.0 + xi);
        EXPECT_GT(r, 0.5);
        EXPECT_LT(r, 2.0);
    }
}

TEST(Kernel, DerivativeMatchesCentralDifference) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto poly = randomPoly(rng);
        const double xi = 0.5 + 5.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double exact = evalK(poly, xi).Kprime;
        double err[2];
        const double hs[2] = {1e-2, 1e-3};
        for (int k = 0; k < 2; ++k)
            err[k] = std::abs((evalK(poly, xi + hs[k]).K - evalK(poly, xi - hs[k]).K) / (2.0 * hs[k]) - exact);
        if (err[1] < 1e-11) continue;
        EXPECT_GE(std::log(err[0] / err[1]) / std::log(10.0), 1.8) << "trial " << trial;
    }
}

TEST(Kernel, HClosedFormMatchesQuadrature) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto poly = randomPoly(rng);
        const double xi = std::exp(std::uniform_real_distribution<double>(-4.0, 6.0)(rng));
        const double h = evalH(poly, xi);
        EXPECT_NEAR(h, evalHQuadrature(poly, xi), 1e-8 * h) << "trial " << trial;
    }
    EXPECT_EQ(evalH(twoTermUnit(), 0.0), 0.0);
    EXPECT_NEAR(evalH(ForchheimerPolynomial::darcy(2.0), 3.0), 4.5, 1e-13);
    const double h2 = evalH(twoTermUnit(), 2.0);
    EXPECT_GE(h2, 2.0);
    EXPECT_LE(h2, 4.0);
    EXPECT_THROW(evalH(twoTermUnit(), -1.0), DomainError);
}

TEST(Inequalities, RandomSamples) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> logXi(-6.0, 6.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto poly = randomPoly(rng);
        const double a = degeneracyExponents(poly).a;
        const double x1 = std::exp(logXi(rng)), x2 = x1 * (1.0 + std::exp(logXi(rng)));
        const auto k1 = evalK(poly, x1), k2 = evalK(poly, x2);
        EXPECT_LE(k1.xiKprime, 1e-15);
        EXPECT_GE(k1.xiKprime, -a * k1.K * (1.0 + 1e-12));
        EXPECT_GE(k1.K, k2.K * (1.0 - 1e-14));
        EXPECT_LE(k1.K * x1, k2.K * x2 * (1.0 + 1e-14));
        const double h = evalH(poly, x1);
        EXPECT_GE(h, k1.K * x1 * x1 * (1.0 - 1e-12));
        EXPECT_LE(h, 2.0 * k1.K * x1 * x1 * (1.0 + 1e-12));
    }
}

TEST(Jacobian, EigenvalueBound) {
    const auto J = fluxJacobian(twoTermUnit(), Vec(2.0, 0.0));
    const auto ev = J.eigenvalues();
    const auto k = evalK(twoTermUnit(), 2.0);
    EXPECT_NEAR(ev[0], k.K + k.xiKprime, 1e-14);
    EXPECT_NEAR(ev[1], 0.5, 1e-14);
    EXPECT_GE(ev[0], 0.25);

    const auto J0 = fluxJacobian(twoTermUnit(), Vec(0.0, 0.0));
    EXPECT_EQ(J0(0, 0), 1.0);
    EXPECT_EQ(J0(0, 1), 0.0);
    EXPECT_EQ(J0(1, 1), 1.0);

    const auto Jd = fluxJacobian(ForchheimerPolynomial::darcy(2.0), Vec(1.0, 3.0));
    EXPECT_DOUBLE_EQ(Jd(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(Jd(1, 1), 0.5);
    EXPECT_DOUBLE_EQ(Jd(0, 1), 0.0);

    std::mt19937_64 rng(13);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 500; ++trial) {
        const auto poly = randomPoly(rng);
        const double a = degeneracyExponents(poly).a;
        const Vec y(3.0 * nd(rng), 3.0 * nd(rng), 3.0 * nd(rng));
        const double lmin = fluxJacobian(poly, y).eigenvalues().front();
        EXPECT_GE(lmin, (1.0 - a) * evalK(poly, y.norm()).K * (1.0 - 1e-10));
    }
}

TEST(DegreeCondition, DimensionThreshold) {
    const auto p2 = ForchheimerPolynomial({0.0, 2.0}, {1.0, 1.0});
    const auto p4 = ForchheimerPolynomial({0.0, 4.0}, {1.0, 1.0});
    EXPECT_TRUE(degreeCondition(p2, 3).satisfiesDC);
    EXPECT_TRUE(degreeCondition(p2, 3).satisfiesSDC);
    EXPECT_TRUE(degreeCondition(p4, 3).satisfiesDC);
    EXPECT_FALSE(degreeCondition(p4, 3).satisfiesSDC);
    EXPECT_TRUE(degreeCondition(p4, 2).satisfiesDC);
    EXPECT_TRUE(degreeCondition(p4, 2).satisfiesSDC);
}

TEST(Monotonicity, GapCases) {
    const auto p = twoTermUnit();
    const auto same = monotonicityGap(p, p, Vec(1.0, 2.0), Vec(1.0, 2.0));
    EXPECT_EQ(same.lhs, 0.0);
    EXPECT_EQ(same.rhsCoercive, 0.0);

    const auto g = monotonicityGap(p, p, Vec(1.0, 0.0), Vec(0.0, 0.0));
    const double K1 = evalK(p, 1.0).K;
    EXPECT_NEAR(g.lhs, K1, 1e-14);
    EXPECT_GE(g.lhs, 0.5 * K1);

    EXPECT_THROW(monotonicityGap(p, ForchheimerPolynomial({0.0, 2.0}, {1.0, 1.0}), Vec(1.0), Vec(0.0)),
                 DomainError);

    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> c(0.1, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p1 = ForchheimerPolynomial({0.0, 0.5, 2.0}, {c(rng), c(rng), c(rng)});
        const auto p2 = ForchheimerPolynomial({0.0, 0.5, 2.0}, {c(rng), c(rng), c(rng)});
        const Vec y(nd(rng), nd(rng)), yp(nd(rng), nd(rng));
        const auto m = monotonicityGap(p1, p2, y, yp);
        EXPECT_GE(m.lhs, m.rhsCoercive - m.rhsPerturb - 1e-12 * std::abs(m.rhsCoercive));
    }
}

TEST(Coefficients, EnvelopeAndDistance) {
    const auto p = ForchheimerPolynomial({0.0, 1.0}, {1.0, 3.0});
    const auto q = ForchheimerPolynomial({0.0, 1.0}, {2.0, 1.5});
    const auto hi = coefficientMax(p, q), lo = coefficientMin(p, q);
    EXPECT_EQ(hi.coefficients()[0], 2.0);
    EXPECT_EQ(hi.coefficients()[1], 3.0);
    EXPECT_EQ(lo.coefficients()[0], 1.0);
    EXPECT_EQ(lo.coefficients()[1], 1.5);
    EXPECT_DOUBLE_EQ(coefficientDistance(p, q), 1.5);
}

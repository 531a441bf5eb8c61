#include "forchflow/estimates.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace forchflow;

namespace {

ObservationLog syntheticLog(const std::vector<double>& t, auto linf) {
    ObservationLog log;
    for (double ti : t) {
        Observation o;
        o.t = ti;
        o.LinfPbar = linf(ti);
        o.L2Pbar = o.LinfPbar;
        o.LinfPbarT = std::abs(linf(ti) - linf(ti - 0.1)) / 0.1;
        log.epochs.push_back(o);
    }
    return log;
}

std::vector<double> times(double tEnd, int n) {
    std::vector<double> t;
    for (int k = 0; k <= n; ++k) t.push_back(tEnd * k / n);
    return t;
}

}  // namespace

TEST(Exponents, ClosedForms) {
    for (double a : {0.1, 0.25, 0.5, 0.7}) {
        for (int n : {1, 2, 3}) {
            if (4.0 - a * (n + 2) <= 0.0) continue;
            EXPECT_NEAR(boundednessExponent(a, n), 4.0 / ((2.0 - a) * (4.0 - a * (n + 2))), 1e-14);
            const double r = 2.0 - a;
            const double mu5 = r >= n ? 4.0 : 4.0 * (1.0 - (n - r) / (n * r));
            EXPECT_NEAR(sobolevTimeExponent(a, n), mu5, 1e-14);
            const double mu6 = 1.0 - 2.0 / mu5;
            EXPECT_NEAR(timeDerivativeExponent(a, n), mu6, 1e-14);
            EXPECT_NEAR(interiorDifferenceExponent(a, n), mu6 - mu6 / 2.0, 1e-14);
        }
    }
    // a = 1/2, n = 2: mu4 = 4/3, r* = 6, mu5 = 10/3, mu6 = 2/5, gamma1 = 1/5.
    EXPECT_NEAR(boundednessExponent(0.5, 2), 4.0 / 3.0, 1e-14);
    EXPECT_NEAR(sobolevTimeExponent(0.5, 2), 10.0 / 3.0, 1e-14);
    EXPECT_NEAR(timeDerivativeExponent(0.5, 2), 0.4, 1e-14);
    EXPECT_NEAR(interiorDifferenceExponent(0.5, 2), 0.2, 1e-14);
}

TEST(JH, ElementaryFieldsAndSandwich) {
    const Grid g = Grid::line(1.0, 32);
    EXPECT_EQ(computeJH(ForchheimerPolynomial::twoTerm(1.0, 1.0), ScalarField(g, 1.0)), 0.0);
    ScalarField lin(g);
    for (std::size_t i = 0; i < g.nx(); ++i) lin[i] = g.centre(0, i);
    EXPECT_NEAR(computeJH(ForchheimerPolynomial::darcy(1.0), lin), 1.0, 1e-12);

    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd;
    const Grid g2 = Grid::rectangle(1.0, 1.0, 12, 12);
    for (int trial = 0; trial < 20; ++trial) {
        ScalarField f(g2);
        for (auto& v : f.values()) v = 3.0 * nd(rng);
        const auto poly = ForchheimerPolynomial::threeTerm(1.0, 0.5 + trial * 0.1, 0.2);
        const double jh = computeJH(poly, f), kg = computeKGradSquared(poly, f);
        EXPECT_GE(jh, kg * (1.0 - 1e-12));
        EXPECT_LE(jh, 2.0 * kg * (1.0 + 1e-12));
    }
}

TEST(FluxFunctionals, ConstantAndDecayingProfiles) {
    const Grid g = Grid::line(1.0, 8);
    const auto one = BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::Constant, 1.0});
    const auto ff = fluxFunctionals(one, g, 0.5, 10.0, 11);
    for (std::size_t k = 0; k < ff.t.size(); ++k) {
        EXPECT_NEAR(ff.f[k], 2.0, 1e-14);
        EXPECT_EQ(ff.fTilde[k], 0.0);
    }
    const double c = 0.7, a = 0.3;
    const auto cf = fluxFunctionals(BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::Constant, c}), g, a, 1.0, 3);
    EXPECT_NEAR(cf.f[1], c * c + std::pow(c, (2.0 - a) / (1.0 - a)), 1e-14);

    const auto dec = fluxFunctionals(BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::DecayingExp, 1.0}), g, 0.5,
                                     40.0, 401);
    EXPECT_LT(dec.Ahat, 1e-6);
}

TEST(Checks, DecayApplicabilityAndVerdicts) {
    const Grid g = Grid::line(1.0, 64);
    const auto t = times(20.0, 40);
    const auto decaying = BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::DecayingExp, 1.0});
    const auto constant = BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::Constant, 1.0});
    const auto ff = fluxFunctionals(decaying, g, 0.5, t);

    const auto good = syntheticLog(t, [](double s) { return std::exp(-s); });
    EXPECT_TRUE(checkDecay({good, ff, decaying, g, 0.5}).pass);
    const auto stuck = syntheticLog(t, [](double) { return 1.0; });
    const auto bad = checkDecay({stuck, ff, decaying, g, 0.5});
    EXPECT_TRUE(bad.applicable);
    EXPECT_FALSE(bad.pass);
    EXPECT_FALSE(checkDecay({good, ff, constant, g, 0.5}).applicable);

    const auto shortT = times(2.0, 20);
    const auto shortLog = syntheticLog(shortT, [](double s) { return std::exp(-s); });
    const auto shortFf = fluxFunctionals(decaying, g, 0.5, shortT);
    EXPECT_FALSE(checkDecay({shortLog, shortFf, decaying, g, 0.5}).applicable);
}

TEST(Checks, BoundednessPlateauAndGrowth) {
    const Grid g = Grid::line(1.0, 64);
    const auto t = times(10.0, 40);
    const auto flux = BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::Constant, 0.5});
    const auto ff = fluxFunctionals(flux, g, 0.5, t);
    const auto plateau = syntheticLog(t, [](double s) { return 1.0 + std::exp(-s); });
    const auto rec = checkUniformBoundedness({plateau, ff, flux, g, 0.5});
    EXPECT_EQ(rec.mode, "boundedness");
    EXPECT_TRUE(rec.pass);
    const auto growing = syntheticLog(t, [](double s) { return 1.0 + s; });
    EXPECT_FALSE(checkUniformBoundedness({growing, ff, flux, g, 0.5}).pass);
}

TEST(Checks, PtDecayApplicability) {
    const Grid g = Grid::line(1.0, 64);
    const auto t = times(10.0, 40);
    const auto log = syntheticLog(t, [](double s) { return 1.0 + std::exp(-s); });
    const auto bounded = BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::Constant, 0.5});
    EXPECT_TRUE(checkPtDecay({log, fluxFunctionals(bounded, g, 0.5, t), bounded, g, 0.5}).pass);
    const auto wave = BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::Sinusoidal, 0.5});
    EXPECT_FALSE(checkPtDecay({log, fluxFunctionals(wave, g, 0.5, t), wave, g, 0.5}).applicable);
}

TEST(Checks, HessianNeedsResolution) {
    const auto t = times(1.0, 8);
    auto log = syntheticLog(t, [](double) { return 1.0; });
    log.deltas = {0.5};
    for (auto& o : log.epochs) o.hessNorm = {1.0};
    const auto flux = BoundaryFluxSpec::uniform(FluxProfile{FluxProfileKind::DecayingExp, 1.0});
    const Grid coarse = Grid::line(1.0, 8);
    auto recs = checkGradientAndHessianBoundedness({log, fluxFunctionals(flux, coarse, 0.5, t), flux, coarse, 0.5});
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_FALSE(recs[0].applicable);
    const Grid fine = Grid::line(1.0, 64);
    recs = checkGradientAndHessianBoundedness({log, fluxFunctionals(flux, fine, 0.5, t), flux, fine, 0.5});
    EXPECT_TRUE(recs[0].applicable);
    EXPECT_TRUE(recs[0].pass);
}

TEST(Checks, SolverLogSatisfiesIdentities) {
    const Grid g = Grid::line(1.0, 128);
    ScalarField p0(g);
    for (std::size_t i = 0; i < g.nx(); ++i) p0[i] = std::cos(std::numbers::pi * g.centre(0, i));
    FluxProfile prof{FluxProfileKind::Sinusoidal, 0.5};
    const BoundaryFluxSpec flux({FluxTerm{prof, {1.0, -1.0, 0.0, 0.0}}});
    SolverConfig cfg;
    cfg.dt = 0.005;
    RunOptions o;
    o.tEnd = 0.5;
    o.observeEvery = 10;
    const auto poly = ForchheimerPolynomial::twoTerm(1.0, 1.0);
    const auto r = run(p0, poly, flux, cfg, o);
    EXPECT_TRUE(checkEnergyIdentity(r.log).pass);
    EXPECT_TRUE(checkJHSandwich(r.log).pass);

    std::vector<double> t;
    for (const auto& e : r.log.epochs) t.push_back(e.t);
    const auto ff = fluxFunctionals(flux, g, 0.5, t);
    const auto rep = verifyLog({r.log, ff, flux, g, 0.5});
    for (const auto& rec : rep.records) EXPECT_FALSE(rec.anchor.empty()) << rec.target;
    EXPECT_NE(rep.find("energy_identity"), nullptr);
    EXPECT_FALSE(rep.find("pt_decay")->applicable);
}

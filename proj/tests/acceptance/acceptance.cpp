// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "forchflow/commands.hpp"
#include "forchflow/constitutive.hpp"
#include "forchflow/estimates.hpp"
#include "forchflow/scenario.hpp"
#include "forchflow/sequences.hpp"
#include "forchflow/solver.hpp"
#include "forchflow/stability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

using namespace forchflow;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(FORCHFLOW_SOURCE_DIR) / "scenarios";

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budgetSeconds;
    std::function<Outcome()> body;
};

// Worst mass-balance residual over every run the suite performs.
double gMaxMassResidual = 0.0;
int gMassRuns = 0;

void noteMass(double r) {
    gMaxMassResidual = std::max(gMaxMassResidual, r);
    ++gMassRuns;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

RunResult runScenario(const Scenario& s) {
    RunResult r = run(s.initialField(), s.poly, s.flux, s.solver, s.runOptions());
    noteMass(r.log.maxMassBalanceResidual);
    return r;
}

int stepIncreases(const ObservationLog& log) {
    double scale = 0.0;
    for (const auto& s : log.steps) scale = std::max(scale, s.L2Pbar);
    int n = 0;
    for (std::size_t k = 1; k < log.steps.size(); ++k)
        if (log.steps[k].L2Pbar > log.steps[k - 1].L2Pbar + 1e-12 * scale) ++n;
    return n;
}

SweepResult runSweepFile(const std::string& file) {
    Scenario base = loadScenario(kScenarios / "darcy_decay.json");
    const PerturbationSweep sw = parseSweep(readJsonFile(kScenarios / file), std::nullopt, &base);
    SweepResult res = runSweep(sw);
    for (const auto& l : res.logs) noteMass(l.maxMassBalanceResidual);
    return res;
}

// ---------------------------------------------------------------------------

Outcome constitutiveOracle() {
    const auto poly = ForchheimerPolynomial::twoTerm(1.0, 1.0);
    const auto t0 = std::chrono::steady_clock::now();
    const double K = evalK(poly, 2.0).K;
    const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    // s (1 + s) = xi  =>  s = (-1 + sqrt(1 + 4 xi)) / 2, K = 1 / (1 + s)
    const double s = 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * 2.0));
    const double err = std::abs(K - 1.0 / (1.0 + s));
    return {err <= 1e-10 && std::abs(K - 0.5) <= 1e-10 && us < 1000.0,
            fmt("K(2)=%.15f |err|=%.2e eval=%.1fus", K, err, us)};
}

ForchheimerPolynomial randomPoly(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> terms(1, 4);
    std::uniform_real_distribution<double> coef(0.05, 5.0);
    std::uniform_real_distribution<double> step(0.2, 1.5);
    const int n = terms(rng);
    std::vector<double> e{0.0}, c{coef(rng)};
    for (int k = 1; k < n; ++k) {
        e.push_back(e.back() + step(rng));
        c.push_back(k + 1 < n && rng() % 3 == 0 ? 0.0 : coef(rng));
    }
    return ForchheimerPolynomial(e, c);
}

Vec randomVec(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> mag(-3.0, 3.0);
    Vec v = dim == 2 ? Vec(nd(rng), nd(rng)) : Vec(nd(rng), nd(rng), nd(rng));
    const double scale = std::pow(10.0, mag(rng)) / std::max(1e-300, v.norm());
    return scale * v;
}

Outcome inequalitySuite() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> logXi(-3.0, 3.0);
    std::uniform_real_distribution<double> mDist(1.0, 3.0);
    int violations = 0;
    std::string first;
    auto fail = [&](const std::string& what) {
        if (violations++ == 0) first = what;
    };
    const int samples = 10000;
    for (int k = 0; k < samples; ++k) {
        const auto poly = randomPoly(rng);
        const double a = degeneracyExponents(poly).a;
        const double x1 = std::pow(10.0, logXi(rng));
        const double x2 = x1 * (1.0 + std::pow(10.0, logXi(rng) / 2.0));
        const auto k1 = evalK(poly, x1);
        const auto k2 = evalK(poly, x2);
        const double tol = 1e-12;

        if (!(k1.xiKprime <= tol * k1.K && k1.xiKprime >= -a * k1.K - tol * k1.K)) fail("derivative bound");
        if (!(k2.K <= k1.K * (1.0 + tol))) fail("K decreasing");
        const double m = mDist(rng);
        if (!(k1.K * std::pow(x1, m) <= k2.K * std::pow(x2, m) * (1.0 + tol))) fail("K xi^m increasing");
        const double H = evalH(poly, x1);
        const double base = k1.K * x1 * x1;
        if (!(H >= base * (1.0 - tol) && H <= 2.0 * base * (1.0 + tol))) fail("H sandwich");

        const int dim = 2 + static_cast<int>(rng() % 2);
        const Vec y = randomVec(rng, dim);
        const Vec yp = randomVec(rng, dim);
        const double Ky = evalK(poly, y.norm()).K;
        const double Kyp = evalK(poly, yp.norm()).K;
        const Vec d = y - yp;
        const Vec fy = Ky * y;
        const Vec fyp = Kyp * yp;
        const double lhs = (fy - fyp).dot(d);
        const double rhs = (1.0 - a) * evalK(poly, std::max(y.norm(), yp.norm())).K * d.dot(d);
        const double scale = (fy.norm() + fyp.norm()) * d.norm();
        if (!(lhs >= rhs - 1e-10 * scale)) fail("monotonicity");

        const SymTensor J = fluxJacobian(poly, y);
        const auto ev = J.eigenvalues();
        if (!(ev.front() >= (1.0 - a) * Ky * (1.0 - 1e-10))) fail("Jacobian lower eigenvalue");
        if (!(ev.back() <= Ky * (1.0 + 1e-10))) fail("Jacobian upper eigenvalue");
    }
    return {violations == 0, fmt("%.0f samples, %.0f violations", samples, violations) +
                                 (first.empty() ? "" : " (first: " + first + ")")};
}

Outcome darcyAnalytic() {
    const double pi = std::acos(-1.0);
    auto maxError = [&](std::size_t cells, double dt) {
        const Grid g = Grid::line(1.0, cells);
        ScalarField p0(g);
        for (std::size_t i = 0; i < cells; ++i) p0[i] = std::cos(pi * g.centre(0, i));
        RunOptions o;
        o.tEnd = 0.1;
        o.observeEvery = 1000000;
        SolverConfig cfg;
        cfg.dt = dt;
        const RunResult r = run(p0, ForchheimerPolynomial::darcy(1.0), BoundaryFluxSpec::zero(), cfg, o);
        noteMass(r.log.maxMassBalanceResidual);
        double err = 0.0;
        for (std::size_t i = 0; i < cells; ++i)
            err = std::max(err, std::abs(r.state.pressure[i] - std::exp(-pi * pi * 0.1) * std::cos(pi * g.centre(0, i))));
        return err;
    };
    const double e256 = maxError(256, 1e-4);
    // refinement with dt proportional to h^2 so the temporal error shrinks with the spatial one
    const double e32 = maxError(32, 1e-4 * 64.0);
    const double e64 = maxError(64, 1e-4 * 16.0);
    const double e128 = maxError(128, 1e-4 * 4.0);
    const double q1 = std::log2(e32 / e64);
    const double q2 = std::log2(e64 / e128);
    const double q3 = std::log2(e128 / e256);
    const double q = std::min({q1, q2, q3});
    return {e256 <= 1e-3 && q >= 1.8,
            fmt("err(256)=%.3e orders %.3f %.3f %.3f", e256, q1, q2, q3)};
}

Outcome decayTheorem(const Scenario& s, const RunResult& r) {
    double runningMax = 0.0;
    for (const auto& o : r.log.epochs) runningMax = std::max(runningMax, o.LinfPbar);
    const double last = r.log.epochs.back().LinfPbar;
    const double a = degeneracyExponents(s.poly).a;
    const auto ff = fluxFunctionals(s.flux, s.grid, a, [&] {
        std::vector<double> t;
        for (const auto& o : r.log.epochs) t.push_back(o.t);
        return t;
    }());
    const auto rec = checkDecay({r.log, ff, s.flux, s.grid, a}, s.thresholds);
    return {last <= 0.02 * runningMax && rec.applicable && rec.pass,
            fmt("|pbar(10)|_inf=%.3e running max=%.3e ratio=%.3e", last, runningMax, last / runningMax)};
}

Outcome ptDecay(const Scenario& s, const RunResult& r) {
    const auto& ep = r.log.epochs;
    const double cutoff = s.thresholds.earlyWindow * s.tEnd;
    double early = 0.0;
    for (std::size_t k = 1; k < ep.size() && ep[k].t <= cutoff + 1e-12; ++k) early = std::max(early, ep[k].LinfPbarT);
    const double last = ep.back().LinfPbarT;
    return {early > 0.0 && last <= 0.02 * early,
            fmt("interior |pbar_t|_inf final=%.3e early max=%.3e ratio=%.3e", last, early, last / early)};
}

Outcome fluxOrder() {
    const SweepResult two = runSweepFile("sweep_flux_two_term.json");
    const SweepResult lin = runSweepFile("sweep_flux_darcy.json");
    const bool ok = !two.l2Fit.skipped && two.l2Fit.exponent >= 0.9 && !lin.l2Fit.skipped &&
                    std::abs(lin.l2Fit.exponent - 1.0) <= 1e-3;
    return {ok, fmt("two-term L2 order %.4f (>= 0.9), Darcy L2 order %.6f (1 +- 1e-3)", two.l2Fit.exponent,
                    lin.l2Fit.exponent)};
}

Outcome coefficientOrder() {
    const SweepResult r = runSweepFile("sweep_coefficient.json");
    return {!r.l2Fit.skipped && r.l2Fit.exponent >= 0.45,
            fmt("L2 order %.4f (>= 0.45), interior gradient order %.4f", r.l2Fit.exponent, r.gradientFit.exponent)};
}

Outcome appendixLemmas() {
    LemmaCheckSpec spec;
    bool all = true;
    const Json v = runLemmaCheck(spec, all);
    std::string detail;
    for (const auto& x : v) detail += x.at("lemma").get<std::string>() + (x.at("pass").get<bool>() ? "=ok " : "=FAIL ");
    return {all, detail};
}

Outcome energyIdentity() {
    const Grid g = Grid::line(1.0, 512);
    InitialDataSpec init;
    init.family = InitialFamily::RandomSmooth;
    init.amplitude = 2.0;
    const ScalarField p0 = buildInitialField(g, init, 17);
    FluxTerm term;
    term.profile = FluxProfile{FluxProfileKind::Sinusoidal, 1.0, 0.2, 1.0, 0.0, 2.0, 0.0};
    term.sideWeights = {1.0, -0.5, 0.0, 0.0};
    const BoundaryFluxSpec flux({term});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    RunOptions o;
    o.tEnd = 1.0;
    o.observeEvery = 20;
    const RunResult r = run(p0, ForchheimerPolynomial::twoTerm(1.0, 1.0), flux, cfg, o);
    noteMass(r.log.maxMassBalanceResidual);
    const auto rec = checkEnergyIdentity(r.log);
    return {rec.pass, fmt("max relative imbalance %.3e over %.0f epochs", rec.statistic,
                          static_cast<double>(r.log.epochs.size()))};
}

Outcome dissipation() {
    int runs = 0, violations = 0, pairRuns = 0;
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json") continue;
        const Json doc = readJsonFile(entry.path());
        if (doc.contains("axis")) {
            Scenario base = loadScenario(kScenarios / "darcy_decay.json");
            const PerturbationSweep sw = parseSweep(doc, std::nullopt, &base);
            if (sw.axis != PerturbationAxis::InitialData) continue;
            const SweepResult res = runSweep(sw);
            for (const auto& l : res.logs) {
                noteMass(l.maxMassBalanceResidual);
                violations += l.contractionViolations();
                ++pairRuns;
            }
            continue;
        }
        if (!doc.contains("poly")) continue;
        const Scenario s = parseScenario(doc);
        if (!s.flux.identicallyZero()) continue;
        violations += stepIncreases(runScenario(s).log);
        ++runs;
    }
    return {violations == 0 && runs > 0 && pairRuns > 0,
            fmt("%.0f zero-flux runs, %.0f zero-difference pairs, %.0f violations", runs, pairRuns, violations)};
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, Outcome>> results;
    std::vector<double> elapsed;
    int failures = 0;

    std::optional<Scenario> decayScenario, ptScenario;
    std::optional<RunResult> decayRun, ptRun;

    const std::vector<Criterion> criteria{
        {"constitutive oracle K(2) = 0.5 for g = 1 + s", 1.0, constitutiveOracle},
        {"inequality suite on 1e4 random samples", 10.0, inequalitySuite},
        {"Darcy analytic solution and spatial order", 30.0, darcyAnalytic},
        {"decay of the shifted pressure for vanishing flux (2D 64x64)", 300.0,
         [&] {
             decayScenario = loadScenario(kScenarios / "two_term_decay_2d.json");
             decayRun = runScenario(*decayScenario);
             return decayTheorem(*decayScenario, *decayRun);
         }},
        {"interior decay of pbar_t for psi = 1 + exp(-t)", 300.0,
         [&] {
             ptScenario = loadScenario(kScenarios / "pt_decay_two_term_2d.json");
             ptRun = runScenario(*ptScenario);
             return ptDecay(*ptScenario, *ptRun);
         }},
        {"flux-dependence order (two-term and Darcy control)", 600.0, fluxOrder},
        {"coefficient-dependence order", 600.0, coefficientOrder},
        {"appendix sequence and limsup lemmas", 5.0, appendixLemmas},
        {"energy identity on a refined 1D run", 60.0, energyIdentity},
        {"dissipation and contraction across the scenario library", 300.0, dissipation},
    };

    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (sec > c.budgetSeconds) {
            o.pass = false;
            o.detail += fmt(" [over budget %.0fs]", c.budgetSeconds);
        }
        results.emplace_back(c.name, o);
        elapsed.push_back(sec);
    }

    // Mass balance is judged last, once every run above has reported.
    results.emplace_back("mass balance at every step of every run",
                         Outcome{gMaxMassResidual <= 1e-10 && gMassRuns > 0,
                                 fmt("max residual %.3e over %.0f runs", gMaxMassResidual, gMassRuns)});
    elapsed.push_back(0.0);

    for (std::size_t k = 0; k < results.size(); ++k) {
        const auto& [name, o] = results[k];
        if (!o.pass) ++failures;
        std::printf("%s  %s  (%s; %.2fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), elapsed[k]);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failures, results.size());
    return failures == 0 ? 0 : 1;
}

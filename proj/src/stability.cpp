#include "forchflow/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <thread>

namespace forchflow {

double PairLog::supL2() const {
    double m = 0.0;
    for (const auto& e : epochs) m = std::max(m, e.L2);
    for (double v : stepL2) m = std::max(m, v);
    return m;
}

double PairLog::supLinfInterior() const {
    double m = 0.0;
    for (const auto& e : epochs) m = std::max(m, e.LinfInterior);
    return m;
}

double PairLog::supGradient(std::size_t deltaIndex) const {
    double m = 0.0;
    for (const auto& e : epochs) m = std::max(m, e.gradient.at(deltaIndex).normL2mDelta);
    return m;
}

int PairLog::contractionViolations(double relTol) const {
    int count = 0;
    double scale = 0.0;
    for (double v : stepL2) scale = std::max(scale, v);
    for (std::size_t k = 1; k < stepL2.size(); ++k)
        if (stepL2[k] > stepL2[k - 1] + relTol * scale) ++count;
    return count;
}

PairEpoch comparePair(double t, const ScalarField& p1, const ForchheimerPolynomial& poly1, const ScalarField& p2,
                      const ForchheimerPolynomial& poly2, const std::vector<double>& deltas) {
    const Grid& g = p1.grid();
    if (!(g == p2.grid())) throw DomainError("paired fields live on different grids");
    PairEpoch e;
    e.t = t;
    const ScalarField pbar = zeroMeanShift(p1 - p2);
    e.L2 = normLs(pbar, 2.0);
    e.LinfInterior = normLs(pbar, kInfinity, Region::Interior);

    const auto g1 = cellGradients(p1);
    const auto g2 = cellGradients(p2);
    const ForchheimerPolynomial weightPoly = coefficientMax(poly1, poly2);
    const double a = degeneracyExponents(weightPoly).a;
    const double vol = g.cellVolume();

    std::vector<double> K(g.cellCount(), 0.0);
    std::vector<double> dP(g.cellCount(), 0.0);
    std::vector<double> ramp(g.cellCount(), 0.0);
    double weighted = 0.0;
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t c = g.index(i, j);
            const double n1 = g1[c].norm();
            const double n2 = g2[c].norm();
            dP[c] = (g1[c] - g2[c]).norm();
            K[c] = evalK(weightPoly, std::max(n1, n2)).K;
            ramp[c] = 1.0 + n1 + n2;
            if (g.isInterior(i, j)) weighted += K[c] * dP[c] * dP[c] * vol;
        }
    }
    for (double delta : deltas) {
        if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
        GradientDifference d;
        d.delta = delta;
        d.weighted = weighted;
        d.normL2mDelta = normLs(g, dP, 2.0 - delta, Region::Interior);
        double kInv = 0.0;
        double poly = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j) {
            for (std::size_t i = 0; i < g.nx(); ++i) {
                if (!g.isInterior(i, j)) continue;
                const std::size_t c = g.index(i, j);
                kInv += std::pow(K[c], -(2.0 - delta) / delta) * vol;
                poly += std::pow(ramp[c], a * (2.0 - delta) / delta) * vol;
            }
        }
        const double w = std::pow(weighted, (2.0 - delta) / 2.0);
        d.holderBound = w * std::pow(kInv, delta / 2.0);
        d.polynomialBound = w * std::pow(poly, delta / 2.0);
        e.gradient.push_back(d);
    }
    return e;
}

PairLog runPair(const RunSpec& first, const RunSpec& second, const PairSchedule& schedule) {
    schedule.config.validate();
    if (!(first.initial.grid() == second.initial.grid())) throw DomainError("paired runs must share the grid");
    if (!(schedule.tEnd > 0.0)) throw DomainError("t_end must be positive");
    if (schedule.observeEvery < 1) throw DomainError("observation interval must be at least one step");

    PairLog log;
    log.deltas = schedule.deltas;
    if (log.deltas.empty()) {
        const double a = degeneracyExponents(first.poly).a;
        log.deltas.push_back(a > 0.0 ? a : 0.25);
    }

    SolverState s1(first.initial);
    SolverState s2(second.initial);
    auto record = [&](bool epoch) {
        if (epoch) {
            log.epochs.push_back(comparePair(s1.time, s1.pressure, first.poly, s2.pressure, second.poly, log.deltas));
            log.stepL2.push_back(log.epochs.back().L2);
        } else {
            log.stepL2.push_back(normLs(zeroMeanShift(s1.pressure - s2.pressure), 2.0));
        }
        log.stepTimes.push_back(s1.time);
    };
    record(true);

    const SolverConfig& cfg = schedule.config;
    const auto nSteps = static_cast<long long>(std::ceil(schedule.tEnd / cfg.dt - 1e-9));
    for (long long k = 1; k <= nSteps; ++k) {
        const double target = k == nSteps ? schedule.tEnd : static_cast<double>(k) * cfg.dt;
        SolverState n1 = newtonStep(s1, target - s1.time, first.poly, first.flux, cfg);
        SolverState n2 = newtonStep(s2, target - s2.time, second.poly, second.flux, cfg);
        n1.time = target;
        n2.time = target;
        s1 = std::move(n1);
        s2 = std::move(n2);
        log.maxMassBalanceResidual =
            std::max({log.maxMassBalanceResidual, s1.massBalanceResidual(), s2.massBalanceResidual()});
        record(k % schedule.observeEvery == 0 || k == nSteps);
    }
    return log;
}

// ---------------------------------------------------------------------------

OrderFit fitOrder(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size()) throw DomainError("ladder and values differ in length");
    if (eps.size() < 4) throw DomainError("an order fit needs at least 4 ladder points");
    OrderFit fit;
    std::vector<double> x, y;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0)) throw DomainError("ladder magnitudes must be positive");
        if (values[k] > 0.0 && std::isfinite(values[k])) {
            x.push_back(std::log(eps[k]));
            y.push_back(std::log(values[k]));
            fit.window.push_back(eps[k]);
        }
    }
    if (x.empty()) {
        fit.skipped = true;
        fit.reason = "all differences vanish";
        return fit;
    }
    if (x.size() < 4) {
        fit.skipped = true;
        fit.reason = "fewer than 4 nonzero ladder points";
        return fit;
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx <= 0.0) {
        fit.skipped = true;
        fit.reason = "degenerate ladder";
        return fit;
    }
    fit.exponent = sxy / sxx;
    fit.logPrefactor = my - fit.exponent * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

std::string toString(PerturbationAxis axis) {
    switch (axis) {
        case PerturbationAxis::FluxAmplitude: return "flux_amplitude";
        case PerturbationAxis::CoefficientVector: return "coefficient_vector";
        case PerturbationAxis::InitialData: return "initial_data";
    }
    return "unknown";
}

PerturbationAxis perturbationAxisFromString(const std::string& name) {
    if (name == "flux_amplitude") return PerturbationAxis::FluxAmplitude;
    if (name == "coefficient_vector") return PerturbationAxis::CoefficientVector;
    if (name == "initial_data") return PerturbationAxis::InitialData;
    throw DomainError("unknown perturbation axis '" + name + "'");
}

std::vector<double> geometricLadder(double first, double ratio, std::size_t count) {
    if (!(first > 0.0) || !(ratio > 0.0 && ratio < 1.0)) throw DomainError("ladder needs first > 0 and ratio in (0, 1)");
    std::vector<double> out(count);
    double v = first;
    for (auto& e : out) {
        e = v;
        v *= ratio;
    }
    return out;
}

unsigned concurrencyLimit() {
    if (const char* env = std::getenv("FORCHFLOW_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

bool SweepResult::anyApplicableFailure() const {
    return std::any_of(targets.begin(), targets.end(), [](const EstimateRecord& r) { return r.applicable && !r.pass; });
}

void SweepResult::writeCsv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "epsilon,magnitude,t,L2_Pbar,Linf_Pbar_interior";
    const std::vector<double> deltas = logs.empty() ? std::vector<double>{} : logs.front().deltas;
    char buf[64];
    for (double d : deltas) {
        std::snprintf(buf, sizeof buf, "%g", d);
        os << ",grad_P_L2m_delta_" << buf << ",weighted_delta_" << buf << ",holder_bound_delta_" << buf;
    }
    os << '\n';
    for (std::size_t k = 0; k < logs.size(); ++k) {
        for (const auto& e : logs[k].epochs) {
            std::snprintf(buf, sizeof buf, "%.17g", epsilons[k]);
            os << buf;
            std::snprintf(buf, sizeof buf, ",%.17g", magnitudes[k]);
            os << buf;
            for (double v : {e.t, e.L2, e.LinfInterior}) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                os << buf;
            }
            for (const auto& gd : e.gradient) {
                for (double v : {gd.normL2mDelta, gd.weighted, gd.holderBound}) {
                    std::snprintf(buf, sizeof buf, ",%.17g", v);
                    os << buf;
                }
            }
            os << '\n';
        }
    }
}

namespace {

RunSpec perturbed(const PerturbationSweep& sw, double eps) {
    RunSpec out = sw.base;
    switch (sw.axis) {
        case PerturbationAxis::FluxAmplitude: out.flux = sw.base.flux.plus(sw.fluxPerturbation, eps); break;
        case PerturbationAxis::CoefficientVector: {
            std::vector<double> c(sw.base.poly.coefficients().begin(), sw.base.poly.coefficients().end());
            if (sw.coefficientIndex >= static_cast<int>(c.size()))
                throw DomainError("coefficient index out of range");
            for (std::size_t k = 0; k < c.size(); ++k)
                if (sw.coefficientIndex < 0 || static_cast<int>(k) == sw.coefficientIndex)
                    c[k] += eps * sw.coefficientScale;
            if (!(c.front() > 0.0)) throw DomainError("perturbed a_0 must be positive");
            if (!(c.back() > 0.0)) throw DomainError("perturbed a_N must be positive");
            out.poly = sw.base.poly.withCoefficients(std::move(c));
            break;
        }
        case PerturbationAxis::InitialData: {
            if (sw.initialMode.size() != out.initial.size()) throw DomainError("initial mode does not match the grid");
            for (std::size_t c = 0; c < out.initial.size(); ++c) out.initial[c] += eps * sw.initialMode[c];
            break;
        }
    }
    return out;
}

EstimateRecord orderRecord(const std::string& target, const std::string& anchor, const OrderFit& fit,
                           double threshold, bool twoSided = false, double tolerance = 0.0) {
    EstimateRecord r{target, anchor, "scaling-order"};
    r.threshold = threshold;
    if (fit.skipped) {
        r.applicable = false;
        r.note = "order fit skipped: " + fit.reason;
        return r;
    }
    r.statistic = fit.exponent;
    r.pass = twoSided ? std::abs(fit.exponent - threshold) <= tolerance : fit.exponent >= threshold;
    char buf[96];
    std::snprintf(buf, sizeof buf, "least-squares slope over %zu points, r2 = %.6f", fit.window.size(), fit.r2);
    r.note = buf;
    return r;
}

}  // namespace

SweepResult runSweep(const PerturbationSweep& sw, unsigned maxThreads) {
    if (sw.epsilons.size() < 4) throw DomainError("a perturbation ladder needs at least 4 points");
    SweepResult res;
    res.axis = sw.axis;
    res.epsilons = sw.epsilons;
    const std::size_t n = sw.epsilons.size();

    // Build every perturbed spec up front so domain errors surface before any run.
    std::vector<RunSpec> specs;
    specs.reserve(n);
    for (double eps : sw.epsilons) specs.push_back(perturbed(sw, eps));
    for (std::size_t k = 0; k < n; ++k) {
        res.magnitudes.push_back(sw.axis == PerturbationAxis::CoefficientVector
                                     ? coefficientDistance(sw.base.poly, specs[k].poly)
                                     : sw.epsilons[k]);
    }

    std::vector<std::optional<PairLog>> logs(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                logs[k] = runPair(sw.base, specs[k], sw.schedule);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::min<unsigned>(maxThreads ? maxThreads : concurrencyLimit(), static_cast<unsigned>(n));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (auto& l : logs) {
        res.supL2.push_back(l->supL2());
        res.supLinfInterior.push_back(l->supLinfInterior());
        res.supGradient.push_back(l->supGradient(0));
        res.logs.push_back(std::move(*l));
    }
    res.l2Fit = fitOrder(res.magnitudes, res.supL2);
    res.linfFit = fitOrder(res.magnitudes, res.supLinfInterior);
    res.gradientFit = fitOrder(res.magnitudes, res.supGradient);

    const SweepThresholds& th = sw.thresholds;
    const Grid& grid = sw.base.initial.grid();
    const double a = degeneracyExponents(sw.base.poly).a;
    switch (sw.axis) {
        case PerturbationAxis::FluxAmplitude: {
            if (sw.base.poly.isDarcy()) {
                res.targets.push_back(orderRecord("flux_l2_order_linear",
                                                  "exact linearity of the Darcy difference problem", res.l2Fit, 1.0,
                                                  true, th.darcyTolerance));
            } else {
                res.targets.push_back(orderRecord("flux_l2_order",
                                                  "Lipschitz dependence of sup |Pbar|_2 on the boundary flux",
                                                  res.l2Fit, th.fluxL2Order));
            }
            const double g1 = interiorDifferenceExponent(a, grid.dim());
            res.targets.push_back(orderRecord("flux_linf_order",
                                              "interior sup-norm dependence on the flux with reduced exponent",
                                              res.linfFit, g1 / (g1 + 1.0) - th.interiorSlack));
            break;
        }
        case PerturbationAxis::CoefficientVector:
            res.targets.push_back(orderRecord("coefficient_l2_order",
                                              "square-root dependence of sup |Pbar|_2^2 on the coefficient vector",
                                              res.l2Fit, th.coefficientL2Order));
            res.targets.push_back(orderRecord("coefficient_gradient_order",
                                              "interior gradient-difference dependence on the coefficient vector",
                                              res.gradientFit, th.gradientOrder));
            break;
        case PerturbationAxis::InitialData: {
            EstimateRecord r{"initial_data_contraction", "L2 contraction of the difference without flux difference",
                             "boundedness"};
            int violations = 0;
            for (const auto& l : res.logs) violations += l.contractionViolations();
            r.statistic = violations;
            r.threshold = 0.0;
            r.pass = violations == 0;
            r.note = "steps where |Pbar|_2 increased, summed over the ladder";
            res.targets.push_back(r);
            break;
        }
    }

    EstimateRecord h{"holder_consistency", "Hoelder split of the gradient difference against the weighted integral",
                     "identity"};
    double worst = 0.0;
    for (const auto& l : res.logs) {
        for (const auto& e : l.epochs) {
            for (const auto& gd : e.gradient) {
                const double lhs = std::pow(gd.normL2mDelta, 2.0 - gd.delta);
                if (lhs == 0.0) continue;
                worst = std::max(worst, lhs / gd.holderBound - 1.0);
            }
        }
    }
    h.statistic = worst;
    h.threshold = th.holderTolerance;
    h.pass = worst <= th.holderTolerance;
    h.note = "max over epochs of |grad P|_{2-delta}^{2-delta} / Hoelder bound - 1";
    res.targets.push_back(h);
    return res;
}

}  // namespace forchflow

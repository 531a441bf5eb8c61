#include "forchflow/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace forchflow {

double computeJH(const ForchheimerPolynomial& poly, const ScalarField& field) {
    const auto grads = cellGradients(field);
    double acc = 0.0;
    for (const Vec& g : grads) acc += evalH(poly, g.norm());
    return acc * field.grid().cellVolume();
}

double computeKGradSquared(const ForchheimerPolynomial& poly, const ScalarField& field) {
    const auto grads = cellGradients(field);
    double acc = 0.0;
    for (const Vec& g : grads) {
        const double xi = g.norm();
        acc += evalK(poly, xi).K * xi * xi;
    }
    return acc * field.grid().cellVolume();
}

double boundednessExponent(double a, int n) { return 4.0 / ((2.0 - a) * (4.0 - a * (n + 2.0))); }

double sobolevTimeExponent(double a, int n) {
    const double r = 2.0 - a;
    // critical Sobolev exponent r* = n r / (n - r); infinite when r >= n
    if (r >= n) return 4.0;
    const double rStar = n * r / (n - r);
    return 4.0 * (1.0 - 1.0 / rStar);
}

double timeDerivativeExponent(double a, int n) { return 1.0 - 2.0 / sobolevTimeExponent(a, n); }

double interiorDifferenceExponent(double a, int n) {
    const double mu6 = timeDerivativeExponent(a, n);
    const double mu = 2.0 / mu6;
    return mu6 - 1.0 / mu;
}

// ---------------------------------------------------------------------------

FluxFunctionals fluxFunctionals(const BoundaryFluxSpec& flux, const Grid& grid, double a,
                                const std::vector<double>& times, double tailFraction) {
    if (!(a >= 0.0 && a < 1.0)) throw DomainError("degeneracy exponent a must lie in [0, 1)");
    if (times.empty()) throw DomainError("flux functionals need at least one sample time");
    const double q = (2.0 - a) / (1.0 - a);
    FluxFunctionals out;
    out.t = times;
    double runningMax = 0.0;
    for (double t : times) {
        const double psi = flux.supNorm(grid, t);
        const double psiT = flux.supNormDerivative(grid, t);
        out.f.push_back(psi * psi + std::pow(psi, q));
        out.fTilde.push_back(psiT * psiT + std::pow(psiT, q));
        // d|psi|_inf/dt from the side attaining the max
        double dN = 0.0;
        double best = -1.0;
        for (Side s : grid.sides()) {
            const double v = flux.value(s, t);
            if (std::abs(v) > best) {
                best = std::abs(v);
                dN = (v >= 0.0 ? 1.0 : -1.0) * flux.timeDerivative(s, t);
            }
        }
        out.fPrime.push_back((2.0 * psi + q * std::pow(psi, q - 1.0)) * dN);
        runningMax = std::max(runningMax, out.f.back());
        out.Mf.push_back(runningMax);
    }
    const double tEnd = times.back();
    const double tailStart = tEnd - tailFraction * (tEnd - times.front());
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] + 1e-12 < tailStart) continue;
        out.Ahat = std::max(out.Ahat, out.f[k]);
        out.betaHat = std::max(out.betaHat, std::max(0.0, -out.fPrime[k]));
    }
    return out;
}

FluxFunctionals fluxFunctionals(const BoundaryFluxSpec& flux, const Grid& grid, double a, double horizon,
                                std::size_t samples, double tailFraction) {
    if (samples < 2) throw DomainError("need at least two samples");
    std::vector<double> times(samples);
    for (std::size_t k = 0; k < samples; ++k) times[k] = horizon * static_cast<double>(k) / (samples - 1.0);
    return fluxFunctionals(flux, grid, a, times, tailFraction);
}

// ---------------------------------------------------------------------------

bool EstimateReport::anyApplicableFailure() const {
    return std::any_of(records.begin(), records.end(), [](const EstimateRecord& r) { return r.applicable && !r.pass; });
}

const EstimateRecord* EstimateReport::find(const std::string& target) const {
    for (const auto& r : records)
        if (r.target == target) return &r;
    return nullptr;
}

namespace {

EstimateRecord notApplicable(EstimateRecord r, std::string why) {
    r.applicable = false;
    r.pass = false;
    r.note = std::move(why);
    return r;
}

// max over the first and second halves of [t0, t_end] of a series
std::pair<double, double> halfMaxima(const std::vector<double>& t, const std::vector<double>& v, std::size_t from) {
    const double t0 = t[from];
    const double mid = 0.5 * (t0 + t.back());
    double first = 0.0, second = 0.0;
    for (std::size_t k = from; k < t.size(); ++k) {
        if (!std::isfinite(v[k])) continue;
        if (t[k] <= mid)
            first = std::max(first, v[k]);
        else
            second = std::max(second, v[k]);
    }
    return {first, second};
}

EstimateRecord growthRecord(EstimateRecord r, const std::vector<double>& t, const std::vector<double>& v,
                            std::size_t from, double threshold) {
    const auto [first, second] = halfMaxima(t, v, from);
    r.threshold = threshold;
    if (first <= 0.0) {
        r.statistic = second <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
        r.statistic = second / first;
    }
    r.pass = r.statistic <= threshold;
    return r;
}

}  // namespace

EstimateRecord checkUniformBoundedness(const VerificationInput& in, const EstimateThresholds& th) {
    EstimateRecord r{"uniform_boundedness", "uniform-in-time sup bound of the shifted pressure", "boundedness"};
    const auto& ep = in.log.epochs;
    if (ep.size() < 4) return notApplicable(r, "insufficient samples");
    if (in.functionals.t.size() != ep.size()) throw DomainError("flux functionals must be sampled at the log epochs");
    const double mu4 = boundednessExponent(in.a, in.grid.dim());
    const double linf0 = ep.front().LinfPbar;
    const double l20 = ep.front().L2Pbar;
    std::vector<double> t, ratio;
    for (std::size_t k = 0; k < ep.size(); ++k) {
        const double denom =
            1.0 + linf0 + std::pow(l20, mu4 * (2.0 - in.a)) + std::pow(in.functionals.Mf[k], mu4);
        t.push_back(ep[k].t);
        ratio.push_back(ep[k].LinfPbar / denom);
    }
    r = growthRecord(r, t, ratio, 0, th.growthFactor);
    r.note = "ratio of |pbar|_inf to its data bound, second-half max over first-half max";
    return r;
}

EstimateRecord checkDecay(const VerificationInput& in, const EstimateThresholds& th) {
    EstimateRecord r{"decay", "vanishing boundary flux forces decay of the shifted pressure", "decay"};
    if (!in.flux.decaysToZero()) return notApplicable(r, "flux profile does not decay to zero");
    const auto& ep = in.log.epochs;
    if (ep.size() < 2) return notApplicable(r, "insufficient samples");
    const double psi0 = in.flux.supNorm(in.grid, ep.front().t);
    const double psiEnd = in.flux.supNorm(in.grid, ep.back().t);
    if (psiEnd > th.psiDecayFraction * psi0) return notApplicable(r, "horizon too short for the flux to decay");
    double runningMax = 0.0;
    for (const auto& o : ep) runningMax = std::max(runningMax, o.LinfPbar);
    r.statistic = ep.back().LinfPbar;
    r.threshold = th.decayFraction * ep.front().LinfPbar + th.decayFraction * runningMax;
    r.pass = r.statistic <= r.threshold;
    r.note = "final |pbar|_inf against a fraction of initial plus running max";
    return r;
}

EstimateRecord checkPtDecay(const VerificationInput& in, const EstimateThresholds& th) {
    EstimateRecord r{"pt_decay", "interior decay of the pressure time derivative", "decay"};
    if (!in.flux.bounded() || !in.flux.derivativeDecays())
        return notApplicable(r, "requires bounded flux with vanishing time derivative");
    const auto& ep = in.log.epochs;
    if (ep.size() < 4) return notApplicable(r, "insufficient samples");
    const double t0 = ep.front().t;
    const double cutoff = t0 + th.earlyWindow * (ep.back().t - t0);
    double early = 0.0;
    for (std::size_t k = 1; k < ep.size() && ep[k].t <= cutoff + 1e-12; ++k) early = std::max(early, ep[k].LinfPbarT);
    r.threshold = th.decayFraction;
    if (early <= 0.0) {
        r.statistic = ep.back().LinfPbarT <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
        r.statistic = ep.back().LinfPbarT / early;
    }
    r.pass = r.statistic <= r.threshold;
    r.note = "final interior |pbar_t|_inf over its early-time max";
    return r;
}

std::vector<EstimateRecord> checkGradientAndHessianBoundedness(const VerificationInput& in,
                                                               const EstimateThresholds& th) {
    std::vector<EstimateRecord> out;
    const auto& ep = in.log.epochs;
    const bool hyp = in.flux.bounded() && in.flux.squareIntegrable();
    const std::string why = "requires bounded and integrable flux functional f";

    std::vector<double> t;
    for (const auto& o : ep) t.push_back(o.t);

    for (std::size_t si = 0; si < in.log.sValues.size(); ++si) {
        char name[64];
        std::snprintf(name, sizeof name, "gradient_s%g", in.log.sValues[si]);
        EstimateRecord r{name, "interior time-averaged gradient integrability bound", "boundedness"};
        if (!hyp) {
            out.push_back(notApplicable(r, why));
            continue;
        }
        if (ep.size() < 4) {
            out.push_back(notApplicable(r, "insufficient samples"));
            continue;
        }
        // running time average of int_{U'} K |grad p|^s
        std::vector<double> avg(ep.size(), 0.0);
        double integral = 0.0;
        for (std::size_t k = 1; k < ep.size(); ++k) {
            integral += 0.5 * (ep[k].KgradS[si] + ep[k - 1].KgradS[si]) * (ep[k].t - ep[k - 1].t);
            avg[k] = integral / (ep[k].t - ep.front().t);
        }
        r = growthRecord(r, t, avg, 1, th.growthFactor);
        r.note = "second-half max over first-half max of the running time average";
        out.push_back(r);
    }
    const std::size_t interiorX = in.grid.nx() - 2 * in.grid.interiorOffset(0);
    const std::size_t interiorY = in.grid.dim() == 2 ? in.grid.ny() - 2 * in.grid.interiorOffset(1) : interiorX;
    for (std::size_t di = 0; di < in.log.deltas.size(); ++di) {
        char name[64];
        std::snprintf(name, sizeof name, "hessian_delta%g", in.log.deltas[di]);
        EstimateRecord r{name, "interior Hessian integrability bound", "boundedness"};
        if (!hyp) {
            out.push_back(notApplicable(r, why));
            continue;
        }
        if (std::min(interiorX, interiorY) < static_cast<std::size_t>(th.minHessianCells)) {
            out.push_back(notApplicable(r, "insufficient resolution for the Hessian stencil"));
            continue;
        }
        if (ep.size() < 4) {
            out.push_back(notApplicable(r, "insufficient samples"));
            continue;
        }
        std::vector<double> v;
        for (const auto& o : ep) v.push_back(o.hessNorm[di]);
        r = growthRecord(r, t, v, 0, th.growthFactor);
        r.note = "second-half max over first-half max of the interior Hessian norm";
        out.push_back(r);
    }
    return out;
}

EstimateRecord checkEnergyIdentity(const ObservationLog& log, const EstimateThresholds& th) {
    EstimateRecord r{"energy_identity", "energy identity for the shifted pressure", "identity"};
    if (log.epochs.size() < 2) return notApplicable(r, "insufficient samples");
    double worst = 0.0;
    for (std::size_t k = 1; k < log.epochs.size(); ++k) {
        const EnergyBudget& e = log.epochs[k].energy;
        const double scale = e.scale();
        if (scale <= 0.0) continue;
        worst = std::max(worst, std::abs(e.imbalance()) / scale);
    }
    r.statistic = worst;
    r.threshold = th.energyTolerance;
    r.pass = worst <= th.energyTolerance;
    r.note = "max relative imbalance of the discrete energy balance per epoch";
    return r;
}

EstimateRecord checkJHSandwich(const ObservationLog& log) {
    EstimateRecord r{"jh_sandwich", "comparison of H(xi) with K(xi) xi^2", "identity"};
    double worst = 0.0;
    for (const auto& o : log.epochs) {
        const double lo = o.KGradSquared;
        const double hi = 2.0 * o.KGradSquared;
        const double scale = std::max(1e-300, hi);
        const double tol = 1e-12 * scale;
        if (o.JH < lo - tol) worst = std::max(worst, (lo - o.JH) / scale);
        if (o.JH > hi + tol) worst = std::max(worst, (o.JH - hi) / scale);
    }
    r.statistic = worst;
    r.threshold = 0.0;
    r.pass = worst == 0.0;
    r.note = "largest relative violation of int K|grad p|^2 <= J_H <= 2 int K|grad p|^2";
    return r;
}

EstimateReport verifyLog(const VerificationInput& in, const EstimateThresholds& th) {
    EstimateReport rep;
    rep.records.push_back(checkUniformBoundedness(in, th));
    rep.records.push_back(checkDecay(in, th));
    rep.records.push_back(checkPtDecay(in, th));
    for (auto& r : checkGradientAndHessianBoundedness(in, th)) rep.records.push_back(std::move(r));
    rep.records.push_back(checkEnergyIdentity(in.log, th));
    rep.records.push_back(checkJHSandwich(in.log));
    return rep;
}

}  // namespace forchflow

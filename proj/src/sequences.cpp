#include "forchflow/sequences.hpp"

#include "forchflow/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace forchflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safeLog(double x) { return x > 0.0 ? std::log(x) : -kInf; }

// log(sum exp(v)) over entries, tolerating -inf and +inf.
double logSumExp(const std::vector<double>& v) {
    double m = -kInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - m);
    return m + std::log(acc);
}

}  // namespace

void GeometricRecurrence::validate() const {
    if (terms.empty()) throw DomainError("a recurrence needs at least one term");
    for (const auto& t : terms) {
        if (!(t.A > 0.0)) throw DomainError("A_k must be positive");
        if (!(t.B > 1.0)) throw DomainError("B_k must exceed 1");
        if (!(t.mu > 0.0)) throw DomainError("mu_k must be positive");
    }
    if (!(Y0 >= 0.0)) throw DomainError("Y0 must be non-negative");
}

double oriseqLogBound(double A, double B, double mu, double Y0, int i) {
    GeometricRecurrence{{{A, B, mu}}, Y0}.validate();
    return oriseqLogBoundFromLog(A, B, mu, safeLog(Y0), i);
}

double oriseqLogBoundFromLog(double A, double B, double mu, double logY0, int i) {
    GeometricRecurrence{{{A, B, mu}}, 0.0}.validate();
    if (i < 0) throw DomainError("index must be non-negative");
    if (i == 0) return logY0;
    if (logY0 == -kInf) return -kInf;
    // Written around the smallness threshold: log Y_i = (1+mu)^i (log Y0 - log Y*) + log Y* - i log B / mu,
    // which is the closed form rearranged so that Y0 = Y* involves no cancellation.
    const double logB = std::log(B);
    const double logStar = -std::log(A) / mu - logB / (mu * mu);
    const double d = logY0 - logStar;
    const double tail = logStar - static_cast<double>(i) * logB / mu;
    if (d == 0.0) return tail;
    const double growth = std::exp(static_cast<double>(i) * std::log1p(mu));
    if (std::isinf(growth)) return d > 0.0 ? kInf : -kInf;
    const double v = growth * d + tail;
    return std::isnan(v) ? kInf : v;
}

double oriseqBound(double A, double B, double mu, double Y0, int i) {
    const double logY = oriseqLogBound(A, B, mu, Y0, i);
    return i == 0 ? Y0 : std::exp(logY);
}

double oriseqLogThreshold(double A, double B, double mu) {
    GeometricRecurrence{{{A, B, mu}}, 0.0}.validate();
    return -std::log(A) / mu - std::log(B) / (mu * mu);
}

double oriseqThreshold(double A, double B, double mu) { return std::exp(oriseqLogThreshold(A, B, mu)); }

MultiseqThreshold multiseqThreshold(const GeometricRecurrence& rec) {
    rec.validate();
    MultiseqThreshold out{};
    out.Bmax = 0.0;
    out.muMin = kInf;
    for (const auto& t : rec.terms) {
        out.Bmax = std::max(out.Bmax, t.B);
        out.muMin = std::min(out.muMin, t.mu);
    }
    const double m = static_cast<double>(rec.terms.size());
    const double logRhs = -std::log(out.Bmax) / out.muMin;
    out.threshold = kInf;
    for (const auto& t : rec.terms)
        out.threshold = std::min(out.threshold, std::exp((-std::log(m) - std::log(t.A) + logRhs) / t.mu));

    out.predicateRhs = std::exp(logRhs);
    auto lhs = [&](double y) {
        double acc = 0.0;
        for (const auto& t : rec.terms) acc += t.A * std::pow(y, t.mu);
        return acc;
    };
    out.predicateLhs = lhs(rec.Y0);
    out.predicate = out.predicateLhs <= out.predicateRhs;

    // lhs is increasing from 0, so bracket then bisect.
    double lo = 0.0, hi = 1.0;
    while (lhs(hi) < out.predicateRhs) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lhs(mid) < out.predicateRhs ? lo : hi) = mid;
    }
    out.rootD = 0.5 * (lo + hi);
    return out;
}

std::vector<double> iterateRecurrenceLog(const GeometricRecurrence& rec, int nSteps, RecurrenceMode mode,
                                         std::uint64_t seed) {
    rec.validate();
    if (nSteps < 1) throw DomainError("need at least one step");
    std::mt19937_64 rng(seed);
    std::vector<double> out{safeLog(rec.Y0)};
    out.reserve(static_cast<std::size_t>(nSteps) + 1);
    std::vector<double> parts(rec.terms.size());
    for (int i = 0; i < nSteps; ++i) {
        const double ly = out.back();
        for (std::size_t k = 0; k < rec.terms.size(); ++k) {
            const auto& t = rec.terms[k];
            parts[k] = ly == -kInf ? -kInf : std::log(t.A) + i * std::log(t.B) + (1.0 + t.mu) * ly;
        }
        double next = logSumExp(parts);
        if (mode == RecurrenceMode::Sampler) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            next += safeLog(u);
        }
        if (std::isnan(next)) next = kInf;
        out.push_back(next);
    }
    return out;
}

// ---------------------------------------------------------------------------

LimsupResult limsupIntegral(const ScalarFunction& h, const ScalarFunction& f, const ScalarFunction& g, double T,
                            double tEnd, double dt, const LimsupOptions& options) {
    if (!(tEnd > T) || !(dt > 0.0)) throw DomainError("need t_end > T and dt > 0");
    const auto n = static_cast<long long>(std::ceil((tEnd - T) / dt - 1e-9));
    LimsupResult r;
    r.t.reserve(static_cast<std::size_t>(n) + 1);
    double z = 0.0;
    auto push = [&](double t) {
        const double gt = g(t);
        const double ft = f(t);
        if (!(gt > 0.0)) throw DomainError("g must be positive");
        if (!(ft >= 0.0)) throw DomainError("f must be non-negative");
        r.t.push_back(t);
        r.y.push_back(h(t) * z);
        r.envelope.push_back(h(t) * ft / gt);
    };
    push(T);
    for (long long k = 1; k <= n; ++k) {
        const double t0 = r.t.back();
        const double t1 = k == n ? tEnd : T + static_cast<double>(k) * dt;
        const double step = t1 - t0;
        const double tm = 0.5 * (t0 + t1);
        const double gm = g(tm);
        const double fm = f(tm);
        const double G = gm * step;
        z = std::exp(-G) * z - fm * std::expm1(-G) / gm;
        r.integralG += G;
        push(t1);
    }
    const double tailStart = tEnd - options.tailFraction * (tEnd - T);
    const double eps = 1e-6 * std::max(1.0, std::abs(tEnd));
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        if (r.t[k] < tailStart) continue;
        r.observedLimsup = std::max(r.observedLimsup, r.y[k]);
        r.predictedBound = std::max(r.predictedBound, r.envelope[k]);
        const double hp = (h(r.t[k] + eps) - h(r.t[k] - eps)) / (2.0 * eps);
        const double hv = h(r.t[k]);
        const double ratio = hv > 0.0 ? std::abs(hp) / (hv * g(r.t[k])) : kInf;
        r.tailHRatio = std::max(r.tailHRatio, ratio);
    }
    r.divergentG = r.integralG >= options.divergenceLevel;
    r.hRatioVanishes = r.tailHRatio <= options.ratioLevel;
    return r;
}

std::vector<LimsupCase> builtinLimsupCases() {
    auto one = [](double) { return 1.0; };
    return {
        {"constant_forcing", one, [](double) { return 3.0; }, one, 0.0, 3.0},
        {"fast_damping", one, one, [](double) { return 2.0; }, 0.0, 0.5},
        {"decaying_forcing", one, [](double t) { return std::exp(-t); }, one, 0.0, 0.0},
    };
}

}  // namespace forchflow

#pragma once

// Fast geometric convergence of Y_{i+1} <= sum_k A_k B_k^i Y_i^{1 + mu_k}
// and the limsup bound for y(t) = h(t) int_T^t exp(-int_tau^t g) f dtau.
// Sequences are carried as natural logarithms; -inf represents zero and
// +inf marks overflow.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace forchflow {

struct RecurrenceTerm {
    double A;
    double B;
    double mu;
};

struct GeometricRecurrence {
    std::vector<RecurrenceTerm> terms;
    double Y0 = 0.0;

    /// Throws DomainError unless m >= 1, A_k > 0, B_k > 1, mu_k > 0 and Y0 >= 0.
    void validate() const;
};

/// log of A^{((1+mu)^i - 1)/mu} B^{((1+mu)^i - 1)/mu^2 - i/mu} Y0^{(1+mu)^i}.
double oriseqLogBound(double A, double B, double mu, double Y0, int i);
/// Same bound with log Y0 given directly, so Y0 can sit exactly on the threshold.
double oriseqLogBoundFromLog(double A, double B, double mu, double logY0, int i);
/// exp of the above; +inf on overflow.
double oriseqBound(double A, double B, double mu, double Y0, int i);
/// Single-term smallness condition A^{-1/mu} B^{-1/mu^2}.
double oriseqThreshold(double A, double B, double mu);
double oriseqLogThreshold(double A, double B, double mu);

struct MultiseqThreshold {
    double threshold;  // min_k (m^{-1} A_k^{-1} B^{-1/mu})^{1/mu_k}
    double Bmax;
    double muMin;
    /// sum_k A_k Y0^{mu_k} <= B^{-1/mu} for the recurrence's Y0
    bool predicate;
    double predicateLhs;
    double predicateRhs;
    /// Positive root D of sum_k A_k D^{mu_k} = B^{-1/mu}, found by bisection.
    double rootD;
};

MultiseqThreshold multiseqThreshold(const GeometricRecurrence& rec);

enum class RecurrenceMode { Equality, Sampler };

/// log Y_0 ... log Y_n. Sampler mode multiplies each step by an independent
/// uniform factor in [0, 1] drawn from a generator seeded with `seed`.
std::vector<double> iterateRecurrenceLog(const GeometricRecurrence& rec, int nSteps, RecurrenceMode mode,
                                         std::uint64_t seed = 0);

// ---------------------------------------------------------------------------

using ScalarFunction = std::function<double(double)>;

struct LimsupResult {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> envelope;  // h f / g
    double observedLimsup = 0.0;   // max of y over the tail window
    double predictedBound = 0.0;   // max of h f / g over the tail window
    double integralG = 0.0;        // int_T^{t_end} g
    double tailHRatio = 0.0;       // max over the tail of |h'| / (h g)
    bool divergentG = false;       // integralG >= divergenceLevel
    bool hRatioVanishes = false;   // tailHRatio <= ratioLevel
    bool hypothesesHold() const { return divergentG && hRatioVanishes; }
};

struct LimsupOptions {
    double tailFraction = 0.1;
    double divergenceLevel = 20.0;
    double ratioLevel = 1e-2;
};

/// Integrates z' = -g z + f with the exact integrating factor per step
/// (midpoint g and f), then y = h z. Throws DomainError if g <= 0 or f < 0 at a node.
LimsupResult limsupIntegral(const ScalarFunction& h, const ScalarFunction& f, const ScalarFunction& g, double T,
                            double tEnd, double dt, const LimsupOptions& options = {});

struct LimsupCase {
    std::string name;
    ScalarFunction h;
    ScalarFunction f;
    ScalarFunction g;
    double T;
    double limit;  // exact limit of h f / g
};

/// Constant forcing, faster damping, and exponentially decaying forcing.
std::vector<LimsupCase> builtinLimsupCases();

}  // namespace forchflow

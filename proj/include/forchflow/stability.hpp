#pragma once

// Paired runs p1, p2 on a shared grid and step schedule. The difference
// P = p1 - p2 and its mean-free part measure continuous dependence on the
// boundary flux, the Forchheimer coefficients and the initial data.

#include "forchflow/constitutive.hpp"
#include "forchflow/estimates.hpp"
#include "forchflow/grid.hpp"
#include "forchflow/solver.hpp"

#include <string>
#include <vector>

namespace forchflow {

struct RunSpec {
    ScalarField initial;
    ForchheimerPolynomial poly;
    BoundaryFluxSpec flux;
};

struct PairSchedule {
    SolverConfig config;
    double tEnd = 1.0;
    int observeEvery = 10;
    std::vector<double> deltas;  // empty: a of the first run, 0.25 for Darcy
};

/// Per-delta gradient-difference quantities on U'.
struct GradientDifference {
    double delta = 0.0;
    double normL2mDelta = 0.0;   // ||grad P||_{L^{2-delta}(U')}
    double weighted = 0.0;       // int_{U'} K(|grad p1| v |grad p2|) |grad P|^2
    /// (weighted)^{(2-delta)/2} (int_{U'} K^{-(2-delta)/delta})^{delta/2}, an exact Hoelder bound
    /// for ||grad P||^{2-delta}_{L^{2-delta}(U')}.
    double holderBound = 0.0;
    /// Same split with K^{-1} replaced by (1 + |grad p1| + |grad p2|)^a; holds only up to a constant.
    double polynomialBound = 0.0;
};

struct PairEpoch {
    double t = 0.0;
    double L2 = 0.0;            // ||Pbar||_{L^2}
    double LinfInterior = 0.0;  // ||Pbar||_{L^inf(U')}
    std::vector<GradientDifference> gradient;
};

struct PairLog {
    std::vector<double> deltas;
    std::vector<PairEpoch> epochs;
    std::vector<double> stepTimes;
    std::vector<double> stepL2;  // ||Pbar||_{L^2} after every step, index 0 is t = 0
    double maxMassBalanceResidual = 0.0;  // over both runs and every step

    double supL2() const;
    double supLinfInterior() const;
    double supGradient(std::size_t deltaIndex) const;
    /// Steps where ||Pbar||_{L^2} grew by more than relTol times its running scale.
    int contractionViolations(double relTol = 1e-12) const;
};

/// Difference quantities for two fields on the same grid.
PairEpoch comparePair(double t, const ScalarField& p1, const ForchheimerPolynomial& poly1, const ScalarField& p2,
                      const ForchheimerPolynomial& poly2, const std::vector<double>& deltas);

/// Advances both runs with identical step targets. Throws DomainError on mismatched grids.
PairLog runPair(const RunSpec& first, const RunSpec& second, const PairSchedule& schedule);

// ---------------------------------------------------------------------------

struct OrderFit {
    double exponent = 0.0;
    double logPrefactor = 0.0;
    double r2 = 0.0;
    std::vector<double> window;  // epsilons that entered the fit
    bool skipped = false;
    std::string reason;
};

/// Least-squares slope of log(value) against log(eps). Needs at least four
/// ladder points; non-positive values are excluded and the fit is skipped
/// when fewer than four remain.
OrderFit fitOrder(const std::vector<double>& eps, const std::vector<double>& values);

enum class PerturbationAxis { FluxAmplitude, CoefficientVector, InitialData };

std::string toString(PerturbationAxis axis);
PerturbationAxis perturbationAxisFromString(const std::string& name);

/// Geometric ladder first, first*ratio, ...
std::vector<double> geometricLadder(double first, double ratio, std::size_t count);

struct SweepThresholds {
    double fluxL2Order = 0.9;
    double coefficientL2Order = 0.45;
    double gradientOrder = 0.2;
    double interiorSlack = 0.1;
    double darcyTolerance = 1e-3;
    double holderTolerance = 1e-10;
};

struct PerturbationSweep {
    PerturbationAxis axis = PerturbationAxis::FluxAmplitude;
    RunSpec base;
    PairSchedule schedule;
    std::vector<double> epsilons = geometricLadder(1.0, 0.5, 6);
    /// flux_amplitude: psi2 = psi1 + eps * fluxPerturbation
    BoundaryFluxSpec fluxPerturbation;
    /// coefficient_vector: a_k -> a_k + eps * coefficientScale for k = coefficientIndex,
    /// or every coefficient when coefficientIndex < 0
    int coefficientIndex = 1;
    double coefficientScale = 1.0;
    /// initial_data: p2(0) = p1(0) + eps * initialMode
    std::vector<double> initialMode;
    SweepThresholds thresholds;
};

struct SweepResult {
    PerturbationAxis axis;
    std::vector<double> epsilons;
    std::vector<double> magnitudes;  // eps, or |a1 - a2| in the max norm
    std::vector<PairLog> logs;
    std::vector<double> supL2;
    std::vector<double> supLinfInterior;
    std::vector<double> supGradient;  // first delta
    OrderFit l2Fit;
    OrderFit linfFit;
    OrderFit gradientFit;
    std::vector<EstimateRecord> targets;

    bool anyApplicableFailure() const;
    void writeCsv(const std::string& path) const;
};

/// Runs every ladder point, concurrently up to maxThreads (0: FORCHFLOW_THREADS or hardware).
SweepResult runSweep(const PerturbationSweep& sweep, unsigned maxThreads = 0);

/// Thread count from FORCHFLOW_THREADS, falling back to the hardware concurrency.
unsigned concurrencyLimit();

}  // namespace forchflow

#pragma once

// Post-processing of solver logs into the constant-free content of the
// long-time estimates: decay, plateau (non-growth) and identity checks.

#include "forchflow/constitutive.hpp"
#include "forchflow/grid.hpp"
#include "forchflow/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace forchflow {

/// int_U H(|grad u|) dx with cell-centred gradients.
double computeJH(const ForchheimerPolynomial& poly, const ScalarField& field);

/// int_U K(|grad u|) |grad u|^2 dx with the same gradients (lower half of the J_H sandwich).
double computeKGradSquared(const ForchheimerPolynomial& poly, const ScalarField& field);

// Exponents of the long-time bounds, as functions of a and the dimension n.
double boundednessExponent(double a, int n);        // mu_4
double sobolevTimeExponent(double a, int n);        // mu_5
double timeDerivativeExponent(double a, int n);     // mu_6
/// Reduced exponent of the interior L-infinity difference bound, with the free
/// parameter chosen as twice its lower limit.
double interiorDifferenceExponent(double a, int n);  // gamma_1

struct FluxFunctionals {
    std::vector<double> t;
    std::vector<double> f;
    std::vector<double> fTilde;
    std::vector<double> fPrime;
    std::vector<double> Mf;
    double Ahat = 0.0;
    double betaHat = 0.0;
    bool fTildeAvailable = true;
};

/// Samples f, f~ and their tail statistics at the given times. The tail
/// window is the last `tailFraction` of the horizon.
FluxFunctionals fluxFunctionals(const BoundaryFluxSpec& flux, const Grid& grid, double a,
                                const std::vector<double>& times, double tailFraction = 0.25);
FluxFunctionals fluxFunctionals(const BoundaryFluxSpec& flux, const Grid& grid, double a, double horizon,
                                std::size_t samples, double tailFraction = 0.25);

struct EstimateThresholds {
    double growthFactor = 1.05;
    double decayFraction = 0.02;
    double psiDecayFraction = 1e-3;
    double earlyWindow = 0.25;
    double energyTolerance = 1e-6;
    int minHessianCells = 8;
};

struct EstimateRecord {
    std::string target;
    std::string anchor;
    std::string mode;  // decay | boundedness | scaling-order | identity
    double statistic = 0.0;
    double threshold = 0.0;
    bool applicable = true;
    bool pass = false;
    std::string note;
};

struct EstimateReport {
    std::vector<EstimateRecord> records;
    bool anyApplicableFailure() const;
    const EstimateRecord* find(const std::string& target) const;
};

struct VerificationInput {
    const ObservationLog& log;
    const FluxFunctionals& functionals;
    const BoundaryFluxSpec& flux;
    const Grid& grid;
    double a;
};

EstimateRecord checkUniformBoundedness(const VerificationInput& in, const EstimateThresholds& th = {});
EstimateRecord checkDecay(const VerificationInput& in, const EstimateThresholds& th = {});
EstimateRecord checkPtDecay(const VerificationInput& in, const EstimateThresholds& th = {});
std::vector<EstimateRecord> checkGradientAndHessianBoundedness(const VerificationInput& in,
                                                               const EstimateThresholds& th = {});
EstimateRecord checkEnergyIdentity(const ObservationLog& log, const EstimateThresholds& th = {});
EstimateRecord checkJHSandwich(const ObservationLog& log);

/// All of the above.
EstimateReport verifyLog(const VerificationInput& in, const EstimateThresholds& th = {});

}  // namespace forchflow

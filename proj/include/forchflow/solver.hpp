#pragma once

// Conservative cell-centred finite volumes for p_t = div(K(|grad p|) grad p)
// with prescribed outward flux -K grad p . nu = psi, backward Euler in time
// and Newton on the face fluxes.

#include "forchflow/constitutive.hpp"
#include "forchflow/grid.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace forchflow {

enum class LinearSolverKind { Auto, DirectBand, BiCgStab };

struct SolverConfig {
    double dt = 1e-3;
    double newtonTol = 1e-10;
    int newtonMaxIter = 50;
    int maxHalvings = 10;
    LinearSolverKind linearSolver = LinearSolverKind::Auto;
    double linearTol = 1e-12;
    int linearMaxIter = 5000;

    void validate() const;
};

struct StepDiagnostics {
    int newtonIterations = 0;
    double residualNorm = 0.0;
    int halvings = 0;
    int linearIterations = 0;
    int linearBreakdowns = 0;
};

/// Terms of the discrete energy balance for one backward-Euler step:
/// dE + numerical + dt * (dissipation + boundary) = dt * sum(r pbar vol).
struct EnergyBudget {
    double energyChange = 0.0;   // 1/2 |pbar_new|^2 - 1/2 |pbar_old|^2
    double numerical = 0.0;      // 1/2 |pbar_new - pbar_old|^2
    double dissipation = 0.0;    // sum_faces K g_n^2 vol, times dt
    double boundary = 0.0;       // sum_bfaces psi pbar area, times dt
    double residualWork = 0.0;   // dt sum r pbar vol

    EnergyBudget& operator+=(const EnergyBudget& o);
    double imbalance() const { return energyChange + numerical + dissipation + boundary; }
    double scale() const;
};

struct SolverState {
    double time = 0.0;
    ScalarField pressure;
    /// int_0^t int_Gamma psi, accumulated with the psi(t_new) weights the scheme applies.
    double accumulatedOutflow = 0.0;
    double initialIntegral = 0.0;
    StepDiagnostics diagnostics;

    explicit SolverState(ScalarField p0)
        : pressure(std::move(p0)), initialIntegral(pressure.integral()) {}

    /// |int p(t) - int p(0) + outflow| / (1 + |int p(0)|)
    double massBalanceResidual() const;
};

class StepFailure : public std::runtime_error {
public:
    StepFailure(const std::string& what, double time, double dt, StepDiagnostics diag)
        : std::runtime_error(what), time(time), dt(dt), diagnostics(diag) {}
    double time;
    double dt;
    StepDiagnostics diagnostics;
};

/// Per-cell backward-Euler residual (c - p_old)/dt - div(K(|grad c|) grad c).
ScalarField residual(const SolverState& state, const ScalarField& candidate, double dt,
                     const ForchheimerPolynomial& poly, const BoundaryFluxSpec& flux, double tNew);

/// Interior face fluxes K(|G|) G_n plus the prescribed boundary values.
FaceFluxes faceFluxes(const ScalarField& field, const ForchheimerPolynomial& poly, const BoundaryFluxSpec& flux,
                      double t);

/// Advances one step of size dt, halving on Newton failure (up to maxHalvings levels).
SolverState newtonStep(const SolverState& state, double dt, const ForchheimerPolynomial& poly,
                       const BoundaryFluxSpec& flux, const SolverConfig& config, EnergyBudget* budget = nullptr);

struct NormMenu {
    std::vector<double> s{2.0, 4.0};
    std::vector<double> deltas;  // empty: use a
};

struct Observation {
    double t = 0.0;
    double L2Pbar = 0.0;
    double LinfPbar = 0.0;
    double LinfPbarT = 0.0;      // interior, backward difference between epochs
    double LinfPbarTStep = 0.0;  // interior, last step's difference quotient
    double JH = 0.0;
    double KGradSquared = 0.0;        // full domain, same gradients as JH
    std::vector<double> gradLs;       // interior ||grad p||_{L^s}
    std::vector<double> KgradS;       // interior int K(|grad p|) |grad p|^s
    std::vector<double> hessNorm;     // interior ||D^2 p||_{L^{2-delta}}
    double massBalanceResidual = 0.0;
    int newtonIters = 0;              // max over the steps since the previous epoch
    double pbarConsistency = 0.0;     // |zero-mean shift - explicit shift formula|_inf
    double meanPressure = 0.0;
    EnergyBudget energy;              // accumulated since the previous epoch
};

struct StepRecord {
    double t;
    double L2Pbar;
    double massBalanceResidual;
    int newtonIters;
};

struct ObservationLog {
    std::vector<double> sValues;
    std::vector<double> deltas;
    std::vector<Observation> epochs;
    std::vector<StepRecord> steps;
    int linearBreakdowns = 0;
    double maxMassBalanceResidual = 0.0;

    void writeCsv(const std::string& path) const;
    void writeDiagnosticsCsv(const std::string& path) const;
};

struct RunOptions {
    double tEnd = 1.0;
    int observeEvery = 10;  // steps between epochs; the final time is always observed
    NormMenu norms;
    bool recordSteps = true;
    std::function<void(const SolverState&)> onStep;
};

struct RunResult {
    SolverState state;
    ObservationLog log;
};

Observation observe(const SolverState& state, const ForchheimerPolynomial& poly, const NormMenu& norms,
                    const std::vector<double>& deltas);

RunResult run(const ScalarField& initial, const ForchheimerPolynomial& poly, const BoundaryFluxSpec& flux,
              const SolverConfig& config, const RunOptions& options);

}  // namespace forchflow

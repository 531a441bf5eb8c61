#include "forchflow/solver.hpp"

#include "forchflow/estimates.hpp"
#include "forchflow/simd/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace forchflow {

void SolverConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    if (!(newtonTol > 0.0)) throw DomainError("newton_tol must be positive");
    if (newtonMaxIter < 1) throw DomainError("newton_max_iter must be at least 1");
    if (maxHalvings < 0) throw DomainError("max_halvings must be non-negative");
    if (!(linearTol > 0.0)) throw DomainError("linear_tol must be positive");
    if (linearMaxIter < 1) throw DomainError("linear_max_iter must be at least 1");
}

EnergyBudget& EnergyBudget::operator+=(const EnergyBudget& o) {
    energyChange += o.energyChange;
    numerical += o.numerical;
    dissipation += o.dissipation;
    boundary += o.boundary;
    residualWork += o.residualWork;
    return *this;
}

double EnergyBudget::scale() const {
    return std::abs(energyChange) + std::abs(numerical) + std::abs(dissipation) + std::abs(boundary);
}

double SolverState::massBalanceResidual() const {
    return std::abs(pressure.integral() - initialIntegral + accumulatedOutflow) / (1.0 + std::abs(initialIntegral));
}

namespace {

// Dependence of a face's reconstructed gradient on nearby cells, relative to
// the lower-index neighbour L. wn: d(G_n)/dc, wt: d(G_t)/dc.
struct FaceDependence {
    int di;
    int dj;
    double wn;
    double wt;
};

struct FaceStencil {
    Vec G;
    std::array<FaceDependence, 6> deps{};
    int count = 0;

    void add(int di, int dj, double wn, double wt) {
        for (int k = 0; k < count; ++k) {
            if (deps[static_cast<std::size_t>(k)].di == di && deps[static_cast<std::size_t>(k)].dj == dj) {
                deps[static_cast<std::size_t>(k)].wn += wn;
                deps[static_cast<std::size_t>(k)].wt += wt;
                return;
            }
        }
        deps[static_cast<std::size_t>(count++)] = {di, dj, wn, wt};
    }
};

// Gradient at the face between (i, j) and its +axis neighbour.
FaceStencil faceStencil(const ScalarField& c, std::size_t i, std::size_t j, int axis) {
    const Grid& g = c.grid();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double hn = g.spacing()[static_cast<std::size_t>(axis)];
    FaceStencil fs;
    fs.G = g.dim() == 1 ? Vec(0.0) : Vec(0.0, 0.0);
    const int tAxis = 1 - axis;
    const int ri = axis == 0 ? 1 : 0;
    const int rj = axis == 0 ? 0 : 1;
    const std::size_t i2 = i + static_cast<std::size_t>(ri);
    const std::size_t j2 = j + static_cast<std::size_t>(rj);
    fs.G[axis] = (c(i2, j2) - c(i, j)) / hn;
    fs.add(0, 0, -1.0 / hn, 0.0);
    fs.add(ri, rj, 1.0 / hn, 0.0);
    if (g.dim() == 1) return fs;

    const double ht = g.spacing()[static_cast<std::size_t>(tAxis)];
    const std::size_t nt = tAxis == 0 ? nx : ny;
    struct Diff {
        int ai, aj, bi, bj;  // (a) - (b), offsets relative to L
    };
    std::array<Diff, 4> diffs{};
    int nd = 0;
    for (int side = 0; side < 2; ++side) {
        const int ci = side * ri;
        const int cj = side * rj;
        const std::size_t tpos = (tAxis == 0 ? i : j);
        const int ti = tAxis == 0 ? 1 : 0;
        const int tj = tAxis == 0 ? 0 : 1;
        if (tpos + 1 < nt) diffs[static_cast<std::size_t>(nd++)] = {ci + ti, cj + tj, ci, cj};
        if (tpos > 0) diffs[static_cast<std::size_t>(nd++)] = {ci, cj, ci - ti, cj - tj};
    }
    if (nd == 0) return fs;
    const double w = 1.0 / (nd * ht);
    double sum = 0.0;
    for (int k = 0; k < nd; ++k) {
        const Diff& d = diffs[static_cast<std::size_t>(k)];
        const double va = c(static_cast<std::size_t>(static_cast<long>(i) + d.ai),
                            static_cast<std::size_t>(static_cast<long>(j) + d.aj));
        const double vb = c(static_cast<std::size_t>(static_cast<long>(i) + d.bi),
                            static_cast<std::size_t>(static_cast<long>(j) + d.bj));
        sum += va - vb;
        fs.add(d.ai, d.aj, 0.0, w);
        fs.add(d.bi, d.bj, 0.0, -w);
    }
    fs.G[tAxis] = sum * w;
    return fs;
}

// K and the normal row of the flux Jacobian K I + xi K' yhat yhat^T.
struct FaceKernel {
    double K;
    double Jnn;
    double Jnt;
};

FaceKernel faceKernel(const ForchheimerPolynomial& poly, const Vec& G, int axis) {
    const double xi = G.norm();
    if (xi < 1e-12) {
        const double k0 = 1.0 / poly.coefficients().front();
        return {k0, k0, 0.0};
    }
    const KernelEvaluation e = evalK(poly, xi);
    const double yn = G[axis] / xi;
    const double yt = G.dim == 2 ? G[1 - axis] / xi : 0.0;
    return {e.K, e.K + e.xiKprime * yn * yn, e.xiKprime * yn * yt};
}

// Sign of the prescribed boundary value stored in FaceFluxes for an outward flux psi:
// the x-flux left of cell 0 is +psi, right of the last cell -psi (q . nu = -psi).
void fillBoundaryFluxes(const Grid& g, const BoundaryFluxSpec& flux, double t, FaceFluxes& q) {
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double left = flux.value(Side::Left, t);
    const double right = flux.value(Side::Right, t);
    for (std::size_t j = 0; j < ny; ++j) {
        q.x[j * (nx + 1)] = left;
        q.x[j * (nx + 1) + nx] = -right;
    }
    if (g.dim() == 2) {
        const double bottom = flux.value(Side::Bottom, t);
        const double top = flux.value(Side::Top, t);
        for (std::size_t i = 0; i < nx; ++i) {
            q.y[i] = bottom;
            q.y[ny * nx + i] = -top;
        }
    }
}

class Jacobian {
public:
    explicit Jacobian(const Grid& g) : grid_(g) {
        for (auto& c : coeff_) c.assign(g.cellCount(), 0.0);
    }

    void addDiagonal(double v) {
        for (double& d : coeff_[4]) d += v;
    }

    void add(std::size_t i, std::size_t j, int di, int dj, double v) {
        coeff_[static_cast<std::size_t>((dj + 1) * 3 + (di + 1))][grid_.index(i, j)] += v;
    }

    simd::StencilView view() const {
        simd::StencilView v;
        v.nx = grid_.nx();
        v.ny = grid_.ny();
        for (std::size_t k = 0; k < 9; ++k) v.coeff[k] = coeff_[k].data();
        if (grid_.dim() == 1) {
            for (std::size_t k : {0u, 1u, 2u, 6u, 7u, 8u}) v.coeff[k] = nullptr;
        }
        return v;
    }

    const std::vector<double>& diagonal() const { return coeff_[4]; }
    const std::vector<double>& band(std::size_t k) const { return coeff_[k]; }

private:
    const Grid& grid_;
    std::array<std::vector<double>, 9> coeff_;
};

struct Assembly {
    ScalarField r;
    std::vector<double> dissipationTerms;  // K g_n^2 vol per interior face
};

// Residual (and optionally the Jacobian) of the backward-Euler system.
ScalarField assemble(const ScalarField& pOld, const ScalarField& c, double dt, const ForchheimerPolynomial& poly,
                     const BoundaryFluxSpec& flux, double tNew, Jacobian* jac, double* dissipation) {
    const Grid& g = c.grid();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    FaceFluxes q(g);
    fillBoundaryFluxes(g, flux, tNew, q);
    double diss = 0.0;
    const double vol = g.cellVolume();

    auto processFace = [&](std::size_t i, std::size_t j, int axis) {
        const FaceStencil fs = faceStencil(c, i, j, axis);
        const FaceKernel fk = faceKernel(poly, fs.G, axis);
        const double gn = fs.G[axis];
        const double qf = fk.K * gn;
        diss += fk.K * gn * gn * vol;
        const int ri = axis == 0 ? 1 : 0;
        const int rj = axis == 0 ? 0 : 1;
        if (axis == 0)
            q.x[j * (nx + 1) + i + 1] = qf;
        else
            q.y[(j + 1) * nx + i] = qf;
        if (jac == nullptr) return;
        const double hn = g.spacing()[static_cast<std::size_t>(axis)];
        for (int k = 0; k < fs.count; ++k) {
            const FaceDependence& d = fs.deps[static_cast<std::size_t>(k)];
            const double dq = fk.Jnn * d.wn + fk.Jnt * d.wt;
            if (dq == 0.0) continue;
            // r_L = ... - q/hn ; r_R = ... + q/hn
            jac->add(i, j, d.di, d.dj, -dq / hn);
            jac->add(i + static_cast<std::size_t>(ri), j + static_cast<std::size_t>(rj), d.di - ri, d.dj - rj,
                     dq / hn);
        }
    };

    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) processFace(i, j, 0);
    if (g.dim() == 2)
        for (std::size_t j = 0; j + 1 < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) processFace(i, j, 1);

    ScalarField div = divergence(g, q);
    std::vector<double> r(g.cellCount());
    for (std::size_t cidx = 0; cidx < r.size(); ++cidx) r[cidx] = (c[cidx] - pOld[cidx]) / dt - div[cidx];
    if (jac != nullptr) jac->addDiagonal(1.0 / dt);
    if (dissipation != nullptr) *dissipation = diss;
    return ScalarField(g, std::move(r));
}

double residualNorm(const ScalarField& r) {
    return std::sqrt(simd::activeKernels().sumSquares(r.values().data(), r.size()) * r.grid().cellVolume());
}

// Thomas algorithm on the (west, centre, east) bands; counts non-positive pivots.
std::vector<double> solveTridiagonal(const Jacobian& J, const std::vector<double>& b, int& breakdowns) {
    const std::size_t n = b.size();
    const auto& lower = J.band(3);
    const auto& diag = J.band(4);
    const auto& upper = J.band(5);
    std::vector<double> cp(n), dp(n), x(n);
    double piv = diag[0];
    if (!(piv > 0.0)) ++breakdowns;
    cp[0] = n > 1 ? upper[0] / piv : 0.0;
    dp[0] = b[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - lower[i] * cp[i - 1];
        if (!(piv > 0.0)) ++breakdowns;
        cp[i] = i + 1 < n ? upper[i] / piv : 0.0;
        dp[i] = (b[i] - lower[i] * dp[i - 1]) / piv;
    }
    x[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
}

// Jacobi-preconditioned BiCGSTAB.
std::vector<double> solveBiCgStab(const Jacobian& J, const Grid& g, const std::vector<double>& b, double tol,
                                  int maxIter, int& iterations, int& breakdowns) {
    const auto& k = simd::activeKernels();
    const std::size_t n = b.size();
    const simd::StencilView op = J.view();
    const std::size_t nx = g.nx();
    std::vector<double> padded((g.nx() + 2) * (g.ny() + 2), 0.0);
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (std::size_t j = 0; j < g.ny(); ++j)
            std::copy_n(in.data() + j * nx, nx, padded.data() + simd::paddedIndex(nx, 0, j));
        k.stencilApply(op, padded.data(), out.data());
    };
    std::vector<double> invDiag(n);
    for (std::size_t i = 0; i < n; ++i) invDiag[i] = 1.0 / J.diagonal()[i];
    auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = invDiag[i] * in[i];
    };

    std::vector<double> x(n, 0.0), r = b, rhat = b, p(n, 0.0), v(n, 0.0), s(n), t(n), y(n), z(n);
    const double bnorm = std::sqrt(k.sumSquares(b.data(), n));
    iterations = 0;
    if (bnorm == 0.0) return x;
    const double target = tol * bnorm;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 0; it < maxIter; ++it) {
        iterations = it + 1;
        const double rhoNew = k.dot(rhat.data(), r.data(), n);
        if (std::abs(rhoNew) < 1e-300 || !std::isfinite(rhoNew)) {
            // restart from the current iterate
            ++breakdowns;
            apply(x, t);
            k.axpby(r.data(), 1.0, b.data(), -1.0, t.data(), n);
            rhat = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            continue;
        }
        const double beta = (rhoNew / rho) * (alpha / omega);
        rho = rhoNew;
        // p = r + beta (p - omega v)
        k.axpby(p.data(), 1.0, p.data(), -omega, v.data(), n);
        k.axpby(p.data(), 1.0, r.data(), beta, p.data(), n);
        precondition(p, y);
        apply(y, v);
        const double rv = k.dot(rhat.data(), v.data(), n);
        if (rv == 0.0 || !std::isfinite(rv)) {
            ++breakdowns;
            rho = 0.0;
            continue;
        }
        alpha = rho / rv;
        k.axpby(s.data(), 1.0, r.data(), -alpha, v.data(), n);
        if (std::sqrt(k.sumSquares(s.data(), n)) <= target) {
            k.axpby(x.data(), 1.0, x.data(), alpha, y.data(), n);
            return x;
        }
        precondition(s, z);
        apply(z, t);
        const double tt = k.sumSquares(t.data(), n);
        omega = tt > 0.0 ? k.dot(t.data(), s.data(), n) / tt : 0.0;
        k.axpby(x.data(), 1.0, x.data(), alpha, y.data(), n);
        k.axpby(x.data(), 1.0, x.data(), omega, z.data(), n);
        k.axpby(r.data(), 1.0, s.data(), -omega, t.data(), n);
        if (std::sqrt(k.sumSquares(r.data(), n)) <= target) return x;
        if (omega == 0.0) {
            ++breakdowns;
            rho = 0.0;
        }
    }
    return x;
}

struct Attempt {
    bool ok = false;
    ScalarField c;
    ScalarField r;
    double dissipation = 0.0;
    StepDiagnostics diag;
};

Attempt attemptStep(const SolverState& state, double dt, const ForchheimerPolynomial& poly,
                    const BoundaryFluxSpec& flux, const SolverConfig& config) {
    const Grid& g = state.pressure.grid();
    const double tNew = state.time + dt;
    const bool direct = config.linearSolver == LinearSolverKind::DirectBand ||
                        (config.linearSolver == LinearSolverKind::Auto && g.dim() == 1);
    if (direct && g.dim() != 1) throw DomainError("direct band solver is only available in 1D");

    Attempt a{false, state.pressure, ScalarField(g), 0.0, {}};
    ScalarField& c = a.c;
    double rn = 0.0;
    a.r = assemble(state.pressure, c, dt, poly, flux, tNew, nullptr, nullptr);
    rn = residualNorm(a.r);
    for (int it = 0; it < config.newtonMaxIter && rn > config.newtonTol; ++it) {
        Jacobian J(g);
        assemble(state.pressure, c, dt, poly, flux, tNew, &J, nullptr);
        std::vector<double> rhs(a.r.values());
        for (double& v : rhs) v = -v;
        std::vector<double> delta;
        if (direct) {
            delta = solveTridiagonal(J, rhs, a.diag.linearBreakdowns);
        } else {
            int iters = 0;
            delta = solveBiCgStab(J, g, rhs, config.linearTol, config.linearMaxIter, iters, a.diag.linearBreakdowns);
            a.diag.linearIterations += iters;
        }
        // backtracking on the residual norm
        double lambda = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 12; ++ls) {
            ScalarField trial = c;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += lambda * delta[i];
            bool finite = std::all_of(trial.values().begin(), trial.values().end(),
                                      [](double v) { return std::isfinite(v); });
            if (finite) {
                ScalarField rt = assemble(state.pressure, trial, dt, poly, flux, tNew, nullptr, nullptr);
                const double rtn = residualNorm(rt);
                if (std::isfinite(rtn) && (rtn < (1.0 - 1e-4 * lambda) * rn || rtn <= config.newtonTol)) {
                    c = std::move(trial);
                    a.r = std::move(rt);
                    rn = rtn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        a.diag.newtonIterations = it + 1;
        if (!accepted) break;
    }
    a.diag.residualNorm = rn;
    if (!(rn <= config.newtonTol)) return a;

    // A constant shift leaves every face flux unchanged and removes the
    // residual's mean, so the discrete mass balance holds to rounding.
    const double shift = -dt * a.r.integral() / g.volume();
    c += shift;
    a.r = assemble(state.pressure, c, dt, poly, flux, tNew, nullptr, &a.dissipation);
    a.diag.residualNorm = residualNorm(a.r);
    a.ok = true;
    return a;
}

double boundaryWork(const ScalarField& pbar, const BoundaryFluxSpec& flux, double t) {
    const Grid& g = pbar.grid();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    double acc = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        acc += flux.value(Side::Left, t) * pbar(0, j) * g.faceArea(Side::Left);
        acc += flux.value(Side::Right, t) * pbar(nx - 1, j) * g.faceArea(Side::Right);
    }
    if (g.dim() == 2) {
        for (std::size_t i = 0; i < nx; ++i) {
            acc += flux.value(Side::Bottom, t) * pbar(i, 0) * g.faceArea(Side::Bottom);
            acc += flux.value(Side::Top, t) * pbar(i, ny - 1) * g.faceArea(Side::Top);
        }
    }
    return acc;
}

SolverState advance(const SolverState& state, double dt, const ForchheimerPolynomial& poly,
                    const BoundaryFluxSpec& flux, const SolverConfig& config, int level, EnergyBudget* budget,
                    StepDiagnostics& total) {
    Attempt a = attemptStep(state, dt, poly, flux, config);
    total.linearIterations += a.diag.linearIterations;
    total.linearBreakdowns += a.diag.linearBreakdowns;
    if (a.ok) {
        SolverState next = state;
        const double tNew = state.time + dt;
        next.time = tNew;
        next.pressure = std::move(a.c);
        next.accumulatedOutflow = state.accumulatedOutflow + dt * flux.totalOutflow(next.pressure.grid(), tNew);
        total.newtonIterations = std::max(total.newtonIterations, a.diag.newtonIterations);
        total.residualNorm = a.diag.residualNorm;
        if (budget != nullptr) {
            const ScalarField pbarOld = zeroMeanShift(state.pressure);
            const ScalarField pbarNew = zeroMeanShift(next.pressure);
            const double vol = pbarNew.grid().cellVolume();
            EnergyBudget e;
            double eOld = 0.0, eNew = 0.0, num = 0.0, work = 0.0;
            for (std::size_t i = 0; i < pbarNew.size(); ++i) {
                eOld += pbarOld[i] * pbarOld[i];
                eNew += pbarNew[i] * pbarNew[i];
                const double d = pbarNew[i] - pbarOld[i];
                num += d * d;
                work += a.r[i] * pbarNew[i];
            }
            e.energyChange = 0.5 * (eNew - eOld) * vol;
            e.numerical = 0.5 * num * vol;
            e.dissipation = dt * a.dissipation;
            e.boundary = dt * boundaryWork(pbarNew, flux, tNew);
            e.residualWork = dt * work * vol;
            *budget += e;
        }
        return next;
    }
    if (level >= config.maxHalvings) {
        std::ostringstream os;
        os << "Newton failed at t=" << state.time << " with dt=" << dt << " after " << level
           << " halvings (residual " << a.diag.residualNorm << ")";
        StepDiagnostics d = a.diag;
        d.halvings = level;
        throw StepFailure(os.str(), state.time, dt, d);
    }
    total.halvings = std::max(total.halvings, level + 1);
    SolverState half = advance(state, 0.5 * dt, poly, flux, config, level + 1, budget, total);
    return advance(half, 0.5 * dt, poly, flux, config, level + 1, budget, total);
}

std::string columnNumber(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

FaceFluxes faceFluxes(const ScalarField& field, const ForchheimerPolynomial& poly, const BoundaryFluxSpec& flux,
                      double t) {
    const Grid& g = field.grid();
    FaceFluxes q(g);
    fillBoundaryFluxes(g, flux, t, q);
    const std::size_t nx = g.nx();
    for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const FaceStencil fs = faceStencil(field, i, j, 0);
            q.x[j * (nx + 1) + i + 1] = faceKernel(poly, fs.G, 0).K * fs.G[0];
        }
    if (g.dim() == 2)
        for (std::size_t j = 0; j + 1 < g.ny(); ++j)
            for (std::size_t i = 0; i < nx; ++i) {
                const FaceStencil fs = faceStencil(field, i, j, 1);
                q.y[(j + 1) * nx + i] = faceKernel(poly, fs.G, 1).K * fs.G[1];
            }
    return q;
}

ScalarField residual(const SolverState& state, const ScalarField& candidate, double dt,
                     const ForchheimerPolynomial& poly, const BoundaryFluxSpec& flux, double tNew) {
    if (!(candidate.grid() == state.pressure.grid())) throw DomainError("candidate grid does not match state");
    return assemble(state.pressure, candidate, dt, poly, flux, tNew, nullptr, nullptr);
}

SolverState newtonStep(const SolverState& state, double dt, const ForchheimerPolynomial& poly,
                       const BoundaryFluxSpec& flux, const SolverConfig& config, EnergyBudget* budget) {
    config.validate();
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    StepDiagnostics total;
    SolverState next = advance(state, dt, poly, flux, config, 0, budget, total);
    next.diagnostics = total;
    return next;
}

// ---------------------------------------------------------------------------

Observation observe(const SolverState& state, const ForchheimerPolynomial& poly, const NormMenu& norms,
                    const std::vector<double>& deltas) {
    Observation o;
    const ScalarField& p = state.pressure;
    const Grid& g = p.grid();
    const ScalarField pbar = zeroMeanShift(p);
    o.t = state.time;
    o.L2Pbar = normLs(pbar, 2.0);
    o.LinfPbar = normLs(pbar, kInfinity);
    o.JH = computeJH(poly, p);
    o.KGradSquared = computeKGradSquared(poly, p);
    o.meanPressure = p.mean();
    o.massBalanceResidual = state.massBalanceResidual();

    const double shift = (-state.initialIntegral + state.accumulatedOutflow) / g.volume();
    double worst = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) worst = std::max(worst, std::abs(pbar[c] - (p[c] + shift)));
    o.pbarConsistency = worst;

    const auto grads = cellGradients(p);
    std::vector<double> mags(grads.size()), kvals(grads.size());
    for (std::size_t c = 0; c < grads.size(); ++c) {
        mags[c] = grads[c].norm();
        kvals[c] = evalK(poly, mags[c]).K;
    }
    for (double s : norms.s) {
        o.gradLs.push_back(normLs(g, mags, s, Region::Interior));
        double acc = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t i = 0; i < g.nx(); ++i) {
                if (!g.isInterior(i, j)) continue;
                const std::size_t c = g.index(i, j);
                acc += kvals[c] * std::pow(mags[c], s);
            }
        o.KgradS.push_back(acc * g.cellVolume());
    }
    for (double d : deltas) {
        try {
            o.hessNorm.push_back(hessianNorm(p, d, Region::Interior));
        } catch (const DomainError&) {
            o.hessNorm.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return o;
}

RunResult run(const ScalarField& initial, const ForchheimerPolynomial& poly, const BoundaryFluxSpec& flux,
              const SolverConfig& config, const RunOptions& options) {
    config.validate();
    if (!(options.tEnd > 0.0)) throw DomainError("t_end must be positive");
    if (options.observeEvery < 1) throw DomainError("observation interval must be at least one step");

    RunResult result{SolverState(initial), {}};
    SolverState& state = result.state;
    ObservationLog& log = result.log;
    log.sValues = options.norms.s;
    log.deltas = options.norms.deltas;
    if (log.deltas.empty()) {
        const double a = degeneracyExponents(poly).a;
        log.deltas.push_back(a > 0.0 ? a : 0.25);
    }
    const Grid& g = initial.grid();

    auto interiorMaxDiff = [&](const ScalarField& x, const ScalarField& y, double scale) {
        double m = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t i = 0; i < g.nx(); ++i)
                if (g.isInterior(i, j)) m = std::max(m, std::abs(x(i, j) - y(i, j)) * scale);
        return m;
    };

    Observation first = observe(state, poly, options.norms, log.deltas);
    log.epochs.push_back(first);
    if (options.recordSteps) log.steps.push_back({0.0, first.L2Pbar, first.massBalanceResidual, 0});

    ScalarField lastEpochPbar = zeroMeanShift(state.pressure);
    double lastEpochTime = 0.0;
    EnergyBudget pending;
    int pendingIters = 0;

    const auto nSteps = static_cast<long long>(std::ceil(options.tEnd / config.dt - 1e-9));
    for (long long k = 1; k <= nSteps; ++k) {
        const double target = k == nSteps ? options.tEnd : static_cast<double>(k) * config.dt;
        const double dt = target - state.time;
        const ScalarField prevPbar = zeroMeanShift(state.pressure);
        EnergyBudget stepBudget;
        SolverState next = newtonStep(state, dt, poly, flux, config, &stepBudget);
        next.time = target;
        state = std::move(next);
        pending += stepBudget;
        pendingIters = std::max(pendingIters, state.diagnostics.newtonIterations);
        log.linearBreakdowns += state.diagnostics.linearBreakdowns;
        const double mbr = state.massBalanceResidual();
        log.maxMassBalanceResidual = std::max(log.maxMassBalanceResidual, mbr);
        if (options.recordSteps) {
            log.steps.push_back({state.time, normLs(zeroMeanShift(state.pressure), 2.0), mbr,
                                 state.diagnostics.newtonIterations});
        }
        if (options.onStep) options.onStep(state);

        if (k % options.observeEvery == 0 || k == nSteps) {
            Observation o = observe(state, poly, options.norms, log.deltas);
            const ScalarField pbar = zeroMeanShift(state.pressure);
            o.LinfPbarT = interiorMaxDiff(pbar, lastEpochPbar, 1.0 / (state.time - lastEpochTime));
            o.LinfPbarTStep = interiorMaxDiff(pbar, prevPbar, 1.0 / dt);
            o.newtonIters = pendingIters;
            o.energy = pending;
            log.epochs.push_back(std::move(o));
            lastEpochPbar = pbar;
            lastEpochTime = state.time;
            pending = EnergyBudget{};
            pendingIters = 0;
        }
    }
    return result;
}

void ObservationLog::writeCsv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "t,L2_pbar,Linf_pbar,Linf_pbar_t,JH";
    for (double s : sValues) os << ",grad_Ls_" << columnNumber(s);
    for (double d : deltas) os << ",hess_norm_delta_" << columnNumber(d);
    os << ",mass_balance_residual,newton_iters\n";
    for (const auto& o : epochs) {
        os << num(o.t) << ',' << num(o.L2Pbar) << ',' << num(o.LinfPbar) << ',' << num(o.LinfPbarT) << ','
           << num(o.JH);
        for (double v : o.gradLs) os << ',' << num(v);
        for (double v : o.hessNorm) os << ',' << num(v);
        os << ',' << num(o.massBalanceResidual) << ',' << o.newtonIters << '\n';
    }
}

void ObservationLog::writeDiagnosticsCsv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "t,mean_p,pbar_consistency,Linf_pbar_t_step";
    for (double s : sValues) os << ",K_grad_s_" << columnNumber(s);
    os << ",energy_change,energy_numerical,energy_dissipation,energy_boundary,energy_residual_work,"
          "energy_imbalance\n";
    for (const auto& o : epochs) {
        os << num(o.t) << ',' << num(o.meanPressure) << ',' << num(o.pbarConsistency) << ','
           << num(o.LinfPbarTStep);
        for (double v : o.KgradS) os << ',' << num(v);
        os << ',' << num(o.energy.energyChange) << ',' << num(o.energy.numerical) << ','
           << num(o.energy.dissipation) << ',' << num(o.energy.boundary) << ',' << num(o.energy.residualWork)
           << ',' << num(o.energy.imbalance()) << '\n';
    }
}

}  // namespace forchflow

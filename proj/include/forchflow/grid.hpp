#pragma once

#include "forchflow/constitutive.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace forchflow {

enum class Region { Full, Interior };

enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };

/// Uniform cell-centred grid on [0, Lx] (dim 1) or [0, Lx] x [0, Ly] (dim 2).
/// A 1D grid carries a unit cross-section so face areas are 1.
class Grid {
public:
    Grid(int dim, std::array<double, 2> extents, std::array<std::size_t, 2> cells, double interiorMargin = 0.125);

    static Grid line(double length, std::size_t cells, double interiorMargin = 0.125);
    static Grid rectangle(double lx, double ly, std::size_t nx, std::size_t ny, double interiorMargin = 0.125);

    int dim() const { return dim_; }
    const std::array<double, 2>& extents() const { return extents_; }
    const std::array<std::size_t, 2>& cells() const { return cells_; }
    const std::array<double, 2>& spacing() const { return spacing_; }
    double interiorMargin() const { return margin_; }
    std::size_t nx() const { return cells_[0]; }
    std::size_t ny() const { return cells_[1]; }

    std::size_t cellCount() const { return cells_[0] * cells_[1]; }
    double cellVolume() const { return spacing_[0] * spacing_[1]; }
    double volume() const { return extents_[0] * extents_[1]; }
    std::size_t index(std::size_t i, std::size_t j = 0) const { return j * cells_[0] + i; }
    double centre(int axis, std::size_t i) const { return (static_cast<double>(i) + 0.5) * spacing_[static_cast<std::size_t>(axis)]; }

    /// Cells per side excluded from U' along each axis.
    std::size_t interiorOffset(int axis) const { return offset_[static_cast<std::size_t>(axis)]; }
    bool isInterior(std::size_t i, std::size_t j = 0) const;
    bool inRegion(std::size_t i, std::size_t j, Region r) const { return r == Region::Full || isInterior(i, j); }

    /// Sides that bound the domain (Left/Right in 1D, all four in 2D).
    std::vector<Side> sides() const;
    /// Length (2D) or area (1D, unit) of one boundary face on the given side.
    double faceArea(Side side) const;
    double sideMeasure(Side side) const;
    double boundaryMeasure() const;

    bool operator==(const Grid& o) const;

private:
    int dim_;
    std::array<double, 2> extents_;
    std::array<std::size_t, 2> cells_;
    std::array<double, 2> spacing_;
    double margin_;
    std::array<std::size_t, 2> offset_;
};

class ScalarField {
public:
    ScalarField(Grid grid, std::vector<double> values);
    explicit ScalarField(Grid grid, double fill = 0.0);

    const Grid& grid() const { return grid_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t c) const { return values_[c]; }
    double& operator[](std::size_t c) { return values_[c]; }
    double operator()(std::size_t i, std::size_t j = 0) const { return values_[grid_.index(i, j)]; }
    std::size_t size() const { return values_.size(); }

    double integral() const;
    double mean() const { return integral() / grid_.volume(); }

    ScalarField& operator+=(double c);
    ScalarField& operator*=(double c);
    friend ScalarField operator-(const ScalarField& x, const ScalarField& y);

private:
    Grid grid_;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Boundary flux psi(x, t): sum of time profiles, each constant along a side.

enum class FluxProfileKind { Constant, DecayingExp, PowerGrowth, Sinusoidal };

struct FluxProfile {
    FluxProfileKind kind = FluxProfileKind::Constant;
    double amplitude = 0.0;
    double offset = 0.0;
    double rate = 1.0;      // decaying_exp
    double exponent = 0.0;  // power_growth
    double omega = 1.0;     // sinusoidal
    double phase = 0.0;     // sinusoidal

    double value(double t) const;
    double derivative(double t) const;
};

std::string toString(FluxProfileKind kind);
FluxProfileKind fluxProfileKindFromString(const std::string& name);

struct FluxTerm {
    FluxProfile profile;
    std::array<double, 4> sideWeights{1.0, 1.0, 1.0, 1.0};
};

class BoundaryFluxSpec {
public:
    BoundaryFluxSpec() = default;
    explicit BoundaryFluxSpec(std::vector<FluxTerm> terms) : terms_(std::move(terms)) {}

    static BoundaryFluxSpec zero() { return {}; }
    static BoundaryFluxSpec uniform(FluxProfile profile);

    const std::vector<FluxTerm>& terms() const { return terms_; }

    /// Outward flux on a side at time t.
    double value(Side side, double t) const;
    double timeDerivative(Side side, double t) const;
    /// Exact sup over the boundary of |psi(., t)| and |psi_t(., t)|.
    double supNorm(const Grid& grid, double t) const;
    double supNormDerivative(const Grid& grid, double t) const;
    /// int_Gamma psi(x, t) dsigma
    double totalOutflow(const Grid& grid, double t) const;

    BoundaryFluxSpec plus(const BoundaryFluxSpec& other, double scale = 1.0) const;

    // Regime flags derived from the profile families, not from samples.
    bool decaysToZero() const;
    bool derivativeDecays() const;
    bool bounded() const;
    /// int_0^inf f(t) dt < inf
    bool squareIntegrable() const;
    bool identicallyZero() const;

private:
    std::vector<FluxTerm> terms_;
};

// ---------------------------------------------------------------------------
// Discrete operators

/// Reconstructed gradient on every interior face. x-faces are indexed
/// j * (nx - 1) + i for the face between cells i and i + 1 on row j;
/// y-faces i + nx * j for the face between rows j and j + 1.
struct FaceGradients {
    std::vector<Vec> xFaces;
    std::vector<Vec> yFaces;
};

FaceGradients faceGradients(const ScalarField& field);

/// Per-face normal fluxes F.e_axis including boundary faces: x-faces indexed
/// j * (nx + 1) + i (face left of cell i), y-faces i + nx * j (face below row j).
struct FaceFluxes {
    std::vector<double> x;
    std::vector<double> y;
    explicit FaceFluxes(const Grid& grid);
};

/// Cellwise divergence of a face flux field.
ScalarField divergence(const Grid& grid, const FaceFluxes& flux);

/// Sum over boundary faces of F.nu times face area.
double boundaryNormalFlux(const Grid& grid, const FaceFluxes& flux);

/// Cell-centred gradient: average of the interior-face normal gradients on each axis.
std::vector<Vec> cellGradients(const ScalarField& field);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

double normLs(const ScalarField& field, double s, Region region = Region::Full);
double normLs(const Grid& grid, const std::vector<double>& cellValues, double s, Region region);
double gradientNormLs(const ScalarField& field, double s, Region region = Region::Full);

/// Frobenius magnitude of the second-difference Hessian on cells with a full
/// stencil inside the region, then its L^{2-delta} norm.
double hessianNorm(const ScalarField& field, double delta, Region region = Region::Full);
std::vector<double> hessianFrobenius(const ScalarField& field, std::vector<unsigned char>& valid);

ScalarField zeroMeanShift(const ScalarField& field);

// ---------------------------------------------------------------------------
// Field snapshot files

enum class SnapshotFormat { Text, Binary };

struct Snapshot {
    ScalarField field;
    double time;
};

void writeSnapshot(const std::filesystem::path& path, const ScalarField& field, double time,
                   SnapshotFormat format = SnapshotFormat::Text);
Snapshot readSnapshot(const std::filesystem::path& path);

}  // namespace forchflow

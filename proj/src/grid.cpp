#include "forchflow/grid.hpp"

#include "forchflow/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace forchflow {

Grid::Grid(int dim, std::array<double, 2> extents, std::array<std::size_t, 2> cells, double interiorMargin)
    : dim_(dim), extents_(extents), cells_(cells), margin_(interiorMargin) {
    if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
    if (dim == 1) {
        cells_[1] = 1;
        extents_[1] = 1.0;
    }
    for (std::size_t a = 0; a < 2; ++a) {
        if (cells_[a] == 0) throw DomainError("grid needs at least one cell per axis");
        if (!(extents_[a] > 0.0) || !std::isfinite(extents_[a])) throw DomainError("grid extents must be positive");
        spacing_[a] = extents_[a] / static_cast<double>(cells_[a]);
    }
    if (!(margin_ >= 0.0 && margin_ < 0.5)) throw DomainError("interior margin must lie in [0, 0.5)");
    for (std::size_t a = 0; a < 2; ++a) {
        offset_[a] = (a == 1 && dim_ == 1)
                         ? 0
                         : static_cast<std::size_t>(std::ceil(margin_ * static_cast<double>(cells_[a]) - 1e-12));
        if (2 * offset_[a] >= cells_[a]) throw DomainError("interior subdomain U' is empty");
    }
}

Grid Grid::line(double length, std::size_t cells, double interiorMargin) {
    return Grid(1, {length, 1.0}, {cells, 1}, interiorMargin);
}

Grid Grid::rectangle(double lx, double ly, std::size_t nx, std::size_t ny, double interiorMargin) {
    return Grid(2, {lx, ly}, {nx, ny}, interiorMargin);
}

bool Grid::isInterior(std::size_t i, std::size_t j) const {
    return i >= offset_[0] && i + offset_[0] < cells_[0] && j >= offset_[1] && j + offset_[1] < cells_[1];
}

std::vector<Side> Grid::sides() const {
    if (dim_ == 1) return {Side::Left, Side::Right};
    return {Side::Left, Side::Right, Side::Bottom, Side::Top};
}

double Grid::faceArea(Side side) const {
    if (dim_ == 1) return 1.0;
    return (side == Side::Left || side == Side::Right) ? spacing_[1] : spacing_[0];
}

double Grid::sideMeasure(Side side) const {
    if (dim_ == 1) return 1.0;
    return (side == Side::Left || side == Side::Right) ? extents_[1] : extents_[0];
}

double Grid::boundaryMeasure() const {
    double m = 0.0;
    for (Side s : sides()) m += sideMeasure(s);
    return m;
}

bool Grid::operator==(const Grid& o) const {
    return dim_ == o.dim_ && extents_ == o.extents_ && cells_ == o.cells_ && margin_ == o.margin_;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.cellCount()) throw DomainError("field value count must equal cell count");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("field values must be finite");
}

ScalarField::ScalarField(Grid grid, double fill) : grid_(std::move(grid)), values_(grid_.cellCount(), fill) {}

double ScalarField::integral() const {
    double acc = 0.0;
    for (double v : values_) acc += v;
    return acc * grid_.cellVolume();
}

ScalarField& ScalarField::operator+=(double c) {
    for (double& v : values_) v += c;
    return *this;
}

ScalarField& ScalarField::operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
}

ScalarField operator-(const ScalarField& x, const ScalarField& y) {
    if (!(x.grid() == y.grid())) throw DomainError("fields live on different grids");
    std::vector<double> d(x.size());
    for (std::size_t c = 0; c < d.size(); ++c) d[c] = x[c] - y[c];
    return ScalarField(x.grid(), std::move(d));
}

// ---------------------------------------------------------------------------

double FluxProfile::value(double t) const {
    switch (kind) {
        case FluxProfileKind::Constant: return amplitude;
        case FluxProfileKind::DecayingExp: return offset + amplitude * std::exp(-rate * t);
        case FluxProfileKind::PowerGrowth: return offset + amplitude * std::pow(1.0 + t, exponent);
        case FluxProfileKind::Sinusoidal: return offset + amplitude * std::sin(omega * t + phase);
    }
    return 0.0;
}

double FluxProfile::derivative(double t) const {
    switch (kind) {
        case FluxProfileKind::Constant: return 0.0;
        case FluxProfileKind::DecayingExp: return -rate * amplitude * std::exp(-rate * t);
        case FluxProfileKind::PowerGrowth: return amplitude * exponent * std::pow(1.0 + t, exponent - 1.0);
        case FluxProfileKind::Sinusoidal: return amplitude * omega * std::cos(omega * t + phase);
    }
    return 0.0;
}

std::string toString(FluxProfileKind kind) {
    switch (kind) {
        case FluxProfileKind::Constant: return "constant";
        case FluxProfileKind::DecayingExp: return "decaying_exp";
        case FluxProfileKind::PowerGrowth: return "power_growth";
        case FluxProfileKind::Sinusoidal: return "sinusoidal";
    }
    return "constant";
}

FluxProfileKind fluxProfileKindFromString(const std::string& name) {
    if (name == "constant") return FluxProfileKind::Constant;
    if (name == "decaying_exp") return FluxProfileKind::DecayingExp;
    if (name == "power_growth") return FluxProfileKind::PowerGrowth;
    if (name == "sinusoidal") return FluxProfileKind::Sinusoidal;
    throw DomainError("unknown flux profile '" + name + "'");
}

BoundaryFluxSpec BoundaryFluxSpec::uniform(FluxProfile profile) { return BoundaryFluxSpec({FluxTerm{profile}}); }

double BoundaryFluxSpec::value(Side side, double t) const {
    double acc = 0.0;
    for (const auto& term : terms_) {
        const double w = term.sideWeights[static_cast<std::size_t>(side)];
        if (w != 0.0) acc += w * term.profile.value(t);
    }
    return acc;
}

double BoundaryFluxSpec::timeDerivative(Side side, double t) const {
    double acc = 0.0;
    for (const auto& term : terms_) {
        const double w = term.sideWeights[static_cast<std::size_t>(side)];
        if (w != 0.0) acc += w * term.profile.derivative(t);
    }
    return acc;
}

double BoundaryFluxSpec::supNorm(const Grid& grid, double t) const {
    double m = 0.0;
    for (Side s : grid.sides()) m = std::max(m, std::abs(value(s, t)));
    return m;
}

double BoundaryFluxSpec::supNormDerivative(const Grid& grid, double t) const {
    double m = 0.0;
    for (Side s : grid.sides()) m = std::max(m, std::abs(timeDerivative(s, t)));
    return m;
}

double BoundaryFluxSpec::totalOutflow(const Grid& grid, double t) const {
    double acc = 0.0;
    for (Side s : grid.sides()) acc += value(s, t) * grid.sideMeasure(s);
    return acc;
}

BoundaryFluxSpec BoundaryFluxSpec::plus(const BoundaryFluxSpec& other, double scale) const {
    std::vector<FluxTerm> terms = terms_;
    for (FluxTerm term : other.terms_) {
        for (double& w : term.sideWeights) w *= scale;
        terms.push_back(term);
    }
    return BoundaryFluxSpec(std::move(terms));
}

namespace {

bool termVanishes(const FluxTerm& term) {
    bool allZero = std::all_of(term.sideWeights.begin(), term.sideWeights.end(), [](double w) { return w == 0.0; });
    if (allZero) return true;
    const auto& p = term.profile;
    if (p.kind == FluxProfileKind::Constant) return p.amplitude == 0.0;
    return p.amplitude == 0.0 && p.offset == 0.0;
}

}  // namespace

bool BoundaryFluxSpec::identicallyZero() const { return std::all_of(terms_.begin(), terms_.end(), termVanishes); }

bool BoundaryFluxSpec::decaysToZero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const FluxTerm& term) {
        if (termVanishes(term)) return true;
        const auto& p = term.profile;
        switch (p.kind) {
            case FluxProfileKind::Constant: return false;
            case FluxProfileKind::DecayingExp: return p.offset == 0.0 && p.rate > 0.0;
            case FluxProfileKind::PowerGrowth: return p.offset == 0.0 && p.exponent < 0.0;
            case FluxProfileKind::Sinusoidal: return false;
        }
        return false;
    });
}

bool BoundaryFluxSpec::derivativeDecays() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const FluxTerm& term) {
        if (termVanishes(term)) return true;
        const auto& p = term.profile;
        switch (p.kind) {
            case FluxProfileKind::Constant: return true;
            case FluxProfileKind::DecayingExp: return p.rate > 0.0 || p.amplitude == 0.0;
            case FluxProfileKind::PowerGrowth: return p.exponent < 1.0 || p.amplitude == 0.0;
            case FluxProfileKind::Sinusoidal: return p.amplitude == 0.0 || p.omega == 0.0;
        }
        return false;
    });
}

bool BoundaryFluxSpec::bounded() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const FluxTerm& term) {
        if (termVanishes(term)) return true;
        const auto& p = term.profile;
        switch (p.kind) {
            case FluxProfileKind::Constant: return true;
            case FluxProfileKind::DecayingExp: return p.rate >= 0.0;
            case FluxProfileKind::PowerGrowth: return p.exponent <= 0.0 || p.amplitude == 0.0;
            case FluxProfileKind::Sinusoidal: return true;
        }
        return false;
    });
}

bool BoundaryFluxSpec::squareIntegrable() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const FluxTerm& term) {
        if (termVanishes(term)) return true;
        const auto& p = term.profile;
        switch (p.kind) {
            case FluxProfileKind::Constant: return false;
            case FluxProfileKind::DecayingExp: return p.offset == 0.0 && p.rate > 0.0;
            case FluxProfileKind::PowerGrowth: return p.offset == 0.0 && 2.0 * p.exponent < -1.0;
            case FluxProfileKind::Sinusoidal: return false;
        }
        return false;
    });
}

// ---------------------------------------------------------------------------

FaceGradients faceGradients(const ScalarField& field) {
    const Grid& g = field.grid();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double hx = g.spacing()[0];
    const double hy = g.spacing()[1];
    FaceGradients out;
    if (nx > 1) out.xFaces.resize((nx - 1) * ny);
    if (g.dim() == 2 && ny > 1) out.yFaces.resize(nx * (ny - 1));

    // mean of the available one-sided differences along `axis` inside cell (i, j)
    auto tangential = [&](std::size_t i, std::size_t j, int axis, double& sum, int& count) {
        if (axis == 1) {
            if (j + 1 < ny) sum += (field(i, j + 1) - field(i, j)) / hy, ++count;
            if (j > 0) sum += (field(i, j) - field(i, j - 1)) / hy, ++count;
        } else {
            if (i + 1 < nx) sum += (field(i + 1, j) - field(i, j)) / hx, ++count;
            if (i > 0) sum += (field(i, j) - field(i - 1, j)) / hx, ++count;
        }
    };

    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            Vec v = g.dim() == 1 ? Vec(0.0) : Vec(0.0, 0.0);
            v[0] = (field(i + 1, j) - field(i, j)) / hx;
            if (g.dim() == 2) {
                double sum = 0.0;
                int count = 0;
                tangential(i, j, 1, sum, count);
                tangential(i + 1, j, 1, sum, count);
                v[1] = count > 0 ? sum / count : 0.0;
            }
            out.xFaces[j * (nx - 1) + i] = v;
        }
    }
    if (g.dim() == 2) {
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                Vec v(0.0, (field(i, j + 1) - field(i, j)) / hy);
                double sum = 0.0;
                int count = 0;
                tangential(i, j, 0, sum, count);
                tangential(i, j + 1, 0, sum, count);
                v[0] = count > 0 ? sum / count : 0.0;
                out.yFaces[j * nx + i] = v;
            }
        }
    }
    return out;
}

FaceFluxes::FaceFluxes(const Grid& grid)
    : x((grid.nx() + 1) * grid.ny(), 0.0), y(grid.dim() == 2 ? grid.nx() * (grid.ny() + 1) : 0, 0.0) {}

ScalarField divergence(const Grid& grid, const FaceFluxes& flux) {
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    std::vector<double> div(grid.cellCount(), 0.0);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            double d = (flux.x[j * (nx + 1) + i + 1] - flux.x[j * (nx + 1) + i]) / grid.spacing()[0];
            if (grid.dim() == 2) d += (flux.y[(j + 1) * nx + i] - flux.y[j * nx + i]) / grid.spacing()[1];
            div[grid.index(i, j)] = d;
        }
    }
    return ScalarField(grid, std::move(div));
}

double boundaryNormalFlux(const Grid& grid, const FaceFluxes& flux) {
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    double acc = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        acc += (flux.x[j * (nx + 1) + nx] - flux.x[j * (nx + 1)]) * grid.faceArea(Side::Left);
    }
    if (grid.dim() == 2) {
        for (std::size_t i = 0; i < nx; ++i) acc += (flux.y[ny * nx + i] - flux.y[i]) * grid.faceArea(Side::Bottom);
    }
    return acc;
}

std::vector<Vec> cellGradients(const ScalarField& field) {
    const Grid& g = field.grid();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    const double hx = g.spacing()[0];
    const double hy = g.spacing()[1];
    std::vector<Vec> out(g.cellCount(), g.dim() == 1 ? Vec(0.0) : Vec(0.0, 0.0));
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            Vec& v = out[g.index(i, j)];
            double sum = 0.0;
            int count = 0;
            if (i + 1 < nx) sum += (field(i + 1, j) - field(i, j)) / hx, ++count;
            if (i > 0) sum += (field(i, j) - field(i - 1, j)) / hx, ++count;
            v[0] = count > 0 ? sum / count : 0.0;
            if (g.dim() == 2) {
                sum = 0.0;
                count = 0;
                if (j + 1 < ny) sum += (field(i, j + 1) - field(i, j)) / hy, ++count;
                if (j > 0) sum += (field(i, j) - field(i, j - 1)) / hy, ++count;
                v[1] = count > 0 ? sum / count : 0.0;
            }
        }
    }
    return out;
}

double normLs(const Grid& grid, const std::vector<double>& cellValues, double s, Region region) {
    if (!(s >= 1.0)) throw DomainError("Lebesgue exponent must satisfy s >= 1");
    const bool full = region == Region::Full;
    if (std::isinf(s)) {
        if (full) return simd::activeKernels().maxAbs(cellValues.data(), cellValues.size());
        double m = 0.0;
        for (std::size_t j = 0; j < grid.ny(); ++j)
            for (std::size_t i = 0; i < grid.nx(); ++i)
                if (grid.isInterior(i, j)) m = std::max(m, std::abs(cellValues[grid.index(i, j)]));
        return m;
    }
    if (s == 2.0 && full) {
        return std::sqrt(simd::activeKernels().sumSquares(cellValues.data(), cellValues.size()) * grid.cellVolume());
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < grid.ny(); ++j) {
        for (std::size_t i = 0; i < grid.nx(); ++i) {
            if (!grid.inRegion(i, j, region)) continue;
            const double v = std::abs(cellValues[grid.index(i, j)]);
            acc += s == 2.0 ? v * v : std::pow(v, s);
        }
    }
    return std::pow(acc * grid.cellVolume(), 1.0 / s);
}

double normLs(const ScalarField& field, double s, Region region) {
    return normLs(field.grid(), field.values(), s, region);
}

double gradientNormLs(const ScalarField& field, double s, Region region) {
    const auto grads = cellGradients(field);
    std::vector<double> mags(grads.size());
    for (std::size_t c = 0; c < grads.size(); ++c) mags[c] = grads[c].norm();
    return normLs(field.grid(), mags, s, region);
}

std::vector<double> hessianFrobenius(const ScalarField& field, std::vector<unsigned char>& valid) {
    const Grid& g = field.grid();
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    if (nx < 3 || (g.dim() == 2 && ny < 3)) throw DomainError("Hessian stencil needs at least 3 cells per axis");
    const double hx = g.spacing()[0];
    const double hy = g.spacing()[1];
    std::vector<double> frob(g.cellCount(), 0.0);
    valid.assign(g.cellCount(), 0);
    for (std::size_t j = 0; j < ny; ++j) {
        if (g.dim() == 2 && (j == 0 || j + 1 == ny)) continue;
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double pxx = (field(i + 1, j) - 2.0 * field(i, j) + field(i - 1, j)) / (hx * hx);
            double f2 = pxx * pxx;
            if (g.dim() == 2) {
                const double pyy = (field(i, j + 1) - 2.0 * field(i, j) + field(i, j - 1)) / (hy * hy);
                const double pxy = (field(i + 1, j + 1) - field(i + 1, j - 1) - field(i - 1, j + 1) +
                                    field(i - 1, j - 1)) /
                                   (4.0 * hx * hy);
                f2 += pyy * pyy + 2.0 * pxy * pxy;
            }
            frob[g.index(i, j)] = std::sqrt(f2);
            valid[g.index(i, j)] = 1;
        }
    }
    return frob;
}

double hessianNorm(const ScalarField& field, double delta, Region region) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("Hessian exponent delta must lie in (0, 1)");
    std::vector<unsigned char> valid;
    const auto frob = hessianFrobenius(field, valid);
    const Grid& g = field.grid();
    const double q = 2.0 - delta;
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t c = g.index(i, j);
            if (!valid[c] || !g.inRegion(i, j, region)) continue;
            acc += std::pow(frob[c], q);
            ++used;
        }
    }
    if (used == 0) throw DomainError("region contains no cell with a full Hessian stencil");
    return std::pow(acc * g.cellVolume(), 1.0 / q);
}

ScalarField zeroMeanShift(const ScalarField& field) {
    ScalarField out = field;
    // two passes: the second removes the rounding left by the first
    for (int pass = 0; pass < 2; ++pass) {
        double sum = 0.0;
        for (double v : out.values()) sum += v;
        out += -sum / static_cast<double>(out.size());
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kTextMagic[] = "forchflow-field";
constexpr char kBinaryMagic[8] = {'F', 'F', 'L', 'D', 'B', 'I', 'N', '1'};

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void writeSnapshot(const std::filesystem::path& path, const ScalarField& field, double time, SnapshotFormat format) {
    const Grid& g = field.grid();
    if (format == SnapshotFormat::Text) {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
        os << kTextMagic << " 1\n";
        os << "dim " << g.dim() << "\n";
        os << "cells " << g.nx() << " " << g.ny() << "\n";
        os << "extents " << fmt17(g.extents()[0]) << " " << fmt17(g.extents()[1]) << "\n";
        os << "time " << fmt17(time) << "\n";
        for (double v : field.values()) os << fmt17(v) << "\n";
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    auto put = [&](const auto& v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    os.write(kBinaryMagic, sizeof kBinaryMagic);
    put(static_cast<std::int32_t>(g.dim()));
    put(static_cast<std::uint64_t>(g.nx()));
    put(static_cast<std::uint64_t>(g.ny()));
    put(g.extents()[0]);
    put(g.extents()[1]);
    put(time);
    os.write(reinterpret_cast<const char*>(field.values().data()),
             static_cast<std::streamsize>(field.values().size() * sizeof(double)));
}

Snapshot readSnapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (is && std::memcmp(magic, kBinaryMagic, sizeof magic) == 0) {
        auto get = [&](auto& v) { is.read(reinterpret_cast<char*>(&v), sizeof v); };
        std::int32_t dim;
        std::uint64_t nx, ny;
        double lx, ly, time;
        get(dim), get(nx), get(ny), get(lx), get(ly), get(time);
        Grid g(dim, {lx, ly}, {static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)});
        std::vector<double> values(g.cellCount());
        is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!is) throw std::runtime_error("truncated binary snapshot " + path.string());
        return {ScalarField(g, std::move(values)), time};
    }
    is.clear();
    is.seekg(0);
    std::string tag, key;
    int version = 0, dim = 0;
    std::size_t nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0, time = 0.0;
    std::string line;
    auto expect = [&](const char* name) {
        if (key != name) throw std::runtime_error("snapshot " + path.string() + ": expected '" + name + "'");
    };
    is >> tag >> version;
    if (tag != kTextMagic || version != 1) throw std::runtime_error("not a field snapshot: " + path.string());
    is >> key >> dim, expect("dim");
    is >> key >> nx >> ny, expect("cells");
    is >> key >> lx >> ly, expect("extents");
    is >> key >> time, expect("time");
    Grid g(dim, {lx, ly}, {nx, ny});
    std::vector<double> values(g.cellCount());
    for (double& v : values) {
        std::string tok;
        if (!(is >> tok)) throw std::runtime_error("truncated text snapshot " + path.string());
        v = std::strtod(tok.c_str(), nullptr);
    }
    return {ScalarField(g, std::move(values)), time};
}

}  // namespace forchflow

#include "forchflow/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace forchflow {

ScenarioError::ScenarioError(const std::string& f, const std::string& message, int l)
    : std::runtime_error((l > 0 ? "line " + std::to_string(l) + ": " : std::string()) +
                         (f.empty() ? message : f + ": " + message)),
      field(f),
      line(l) {}

namespace {

std::string join(const std::string& ctx, const std::string& key) { return ctx.empty() ? key : ctx + "." + key; }

void requireObject(const Json& doc, const std::string& ctx) {
    if (!doc.is_object()) throw ScenarioError(ctx, "expected an object");
}

void checkKeys(const Json& doc, std::initializer_list<const char*> allowed, const std::string& ctx) {
    requireObject(doc, ctx);
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : doc.items())
        if (!ok.count(key)) throw ScenarioError(join(ctx, key), "unknown key");
}

double number(const Json& doc, const char* key, double fallback, const std::string& ctx) {
    if (!doc.contains(key)) return fallback;
    const Json& v = doc.at(key);
    if (!v.is_number()) throw ScenarioError(join(ctx, key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ScenarioError(join(ctx, key), "must be finite");
    return x;
}

long long integer(const Json& doc, const char* key, long long fallback, const std::string& ctx) {
    if (!doc.contains(key)) return fallback;
    const Json& v = doc.at(key);
    if (!v.is_number_integer()) throw ScenarioError(join(ctx, key), "must be an integer");
    return v.get<long long>();
}

std::vector<double> numberList(const Json& doc, const char* key, const std::string& ctx) {
    const Json& v = doc.at(key);
    if (!v.is_array()) throw ScenarioError(join(ctx, key), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ScenarioError(join(ctx, key), "must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

template <class F>
auto withField(const std::string& field, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw ScenarioError(field, e.what());
    }
}

ForchheimerPolynomial parsePoly(const Json& doc, const std::string& ctx) {
    requireObject(doc, ctx);
    if (doc.contains("preset")) {
        const Json& p = doc.at("preset");
        if (!p.is_string()) throw ScenarioError(join(ctx, "preset"), "must be a string");
        const std::string name = p.get<std::string>();
        return withField(ctx, [&] {
            if (name == "darcy") {
                checkKeys(doc, {"preset", "a0"}, ctx);
                return ForchheimerPolynomial::darcy(number(doc, "a0", 1.0, ctx));
            }
            if (name == "two_term") {
                checkKeys(doc, {"preset", "alpha", "beta"}, ctx);
                return ForchheimerPolynomial::twoTerm(number(doc, "alpha", 1.0, ctx), number(doc, "beta", 1.0, ctx));
            }
            if (name == "three_term") {
                checkKeys(doc, {"preset", "alpha", "beta", "gamma"}, ctx);
                return ForchheimerPolynomial::threeTerm(number(doc, "alpha", 1.0, ctx), number(doc, "beta", 1.0, ctx),
                                                        number(doc, "gamma", 1.0, ctx));
            }
            if (name == "power_law") {
                checkKeys(doc, {"preset", "alpha", "gamma", "m"}, ctx);
                return ForchheimerPolynomial::powerLaw(number(doc, "alpha", 1.0, ctx), number(doc, "gamma", 1.0, ctx),
                                                       number(doc, "m", 1.5, ctx));
            }
            throw ScenarioError(join(ctx, "preset"), "unknown preset '" + name + "'");
        });
    }
    checkKeys(doc, {"exponents", "coefficients"}, ctx);
    if (!doc.contains("exponents") || !doc.contains("coefficients"))
        throw ScenarioError(ctx, "needs either a preset or exponents and coefficients");
    auto e = numberList(doc, "exponents", ctx);
    auto c = numberList(doc, "coefficients", ctx);
    return withField(ctx, [&] { return ForchheimerPolynomial(std::move(e), std::move(c)); });
}

Grid parseGrid(const Json& doc, const std::string& ctx) {
    checkKeys(doc, {"dim", "extents", "cells", "interior_margin"}, ctx);
    const long long dim = integer(doc, "dim", 1, ctx);
    if (dim != 1 && dim != 2) throw ScenarioError(join(ctx, "dim"), "must be 1 or 2");
    std::array<double, 2> ext{1.0, 1.0};
    std::array<std::size_t, 2> cells{64, 1};
    if (doc.contains("extents")) {
        auto v = numberList(doc, "extents", ctx);
        if (v.size() != static_cast<std::size_t>(dim)) throw ScenarioError(join(ctx, "extents"), "needs dim entries");
        for (std::size_t k = 0; k < v.size(); ++k) ext[k] = v[k];
    }
    if (!doc.contains("cells")) throw ScenarioError(join(ctx, "cells"), "is required");
    {
        const Json& v = doc.at("cells");
        if (!v.is_array() || v.size() != static_cast<std::size_t>(dim))
            throw ScenarioError(join(ctx, "cells"), "needs dim positive integers");
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number_integer() || v[k].get<long long>() < 1)
                throw ScenarioError(join(ctx, "cells"), "needs dim positive integers");
            cells[k] = static_cast<std::size_t>(v[k].get<long long>());
        }
    }
    const double margin = number(doc, "interior_margin", 0.125, ctx);
    return withField(ctx, [&] { return Grid(static_cast<int>(dim), ext, cells, margin); });
}

SolverConfig parseSolver(const Json& doc, const std::string& ctx) {
    SolverConfig c;
    if (doc.is_null()) return c;
    checkKeys(doc, {"dt", "newton_tol", "newton_max_iter", "max_halvings", "linear_solver", "linear_tol",
                    "linear_max_iter"},
              ctx);
    c.dt = number(doc, "dt", c.dt, ctx);
    c.newtonTol = number(doc, "newton_tol", c.newtonTol, ctx);
    c.newtonMaxIter = static_cast<int>(integer(doc, "newton_max_iter", c.newtonMaxIter, ctx));
    c.maxHalvings = static_cast<int>(integer(doc, "max_halvings", c.maxHalvings, ctx));
    c.linearTol = number(doc, "linear_tol", c.linearTol, ctx);
    c.linearMaxIter = static_cast<int>(integer(doc, "linear_max_iter", c.linearMaxIter, ctx));
    if (doc.contains("linear_solver")) {
        const Json& v = doc.at("linear_solver");
        const std::string s = v.is_string() ? v.get<std::string>() : "";
        if (s == "auto")
            c.linearSolver = LinearSolverKind::Auto;
        else if (s == "direct_band")
            c.linearSolver = LinearSolverKind::DirectBand;
        else if (s == "bicgstab")
            c.linearSolver = LinearSolverKind::BiCgStab;
        else
            throw ScenarioError(join(ctx, "linear_solver"), "must be auto, direct_band or bicgstab");
    }
    withField(ctx, [&] { c.validate(); });
    return c;
}

std::string linearSolverName(LinearSolverKind k) {
    switch (k) {
        case LinearSolverKind::Auto: return "auto";
        case LinearSolverKind::DirectBand: return "direct_band";
        case LinearSolverKind::BiCgStab: return "bicgstab";
    }
    return "auto";
}

EstimateThresholds parseThresholds(const Json& doc, const std::string& ctx) {
    EstimateThresholds t;
    if (doc.is_null()) return t;
    checkKeys(doc, {"growth_factor", "decay_fraction", "psi_decay_fraction", "early_window", "energy_tolerance",
                    "min_hessian_cells"},
              ctx);
    t.growthFactor = number(doc, "growth_factor", t.growthFactor, ctx);
    t.decayFraction = number(doc, "decay_fraction", t.decayFraction, ctx);
    t.psiDecayFraction = number(doc, "psi_decay_fraction", t.psiDecayFraction, ctx);
    t.earlyWindow = number(doc, "early_window", t.earlyWindow, ctx);
    t.energyTolerance = number(doc, "energy_tolerance", t.energyTolerance, ctx);
    t.minHessianCells = static_cast<int>(integer(doc, "min_hessian_cells", t.minHessianCells, ctx));
    return t;
}

const Json& member(const Json& doc, const char* key) {
    static const Json null;
    return doc.contains(key) ? doc.at(key) : null;
}

}  // namespace

BoundaryFluxSpec parseFluxTerms(const Json& doc, const std::string& ctx) {
    if (doc.is_null()) return {};
    if (!doc.is_array()) throw ScenarioError(ctx, "must be an array of flux terms");
    std::vector<FluxTerm> terms;
    for (std::size_t k = 0; k < doc.size(); ++k) {
        const std::string c = ctx + "[" + std::to_string(k) + "]";
        const Json& t = doc[k];
        checkKeys(t, {"kind", "amplitude", "offset", "rate", "exponent", "omega", "phase", "side_weights"}, c);
        FluxTerm term;
        if (!t.contains("kind") || !t.at("kind").is_string()) throw ScenarioError(join(c, "kind"), "is required");
        withField(join(c, "kind"), [&] { term.profile.kind = fluxProfileKindFromString(t.at("kind").get<std::string>()); });
        term.profile.amplitude = number(t, "amplitude", 0.0, c);
        term.profile.offset = number(t, "offset", 0.0, c);
        term.profile.rate = number(t, "rate", 1.0, c);
        term.profile.exponent = number(t, "exponent", 0.0, c);
        term.profile.omega = number(t, "omega", 1.0, c);
        term.profile.phase = number(t, "phase", 0.0, c);
        if (t.contains("side_weights")) {
            auto w = numberList(t, "side_weights", c);
            if (w.size() != 4) throw ScenarioError(join(c, "side_weights"), "needs 4 entries (left, right, bottom, top)");
            for (std::size_t s = 0; s < 4; ++s) term.sideWeights[s] = w[s];
        }
        terms.push_back(term);
    }
    return BoundaryFluxSpec(std::move(terms));
}

Json fluxToJson(const BoundaryFluxSpec& flux) {
    Json out = Json::array();
    for (const auto& t : flux.terms()) {
        Json j;
        j["kind"] = toString(t.profile.kind);
        j["amplitude"] = t.profile.amplitude;
        j["offset"] = t.profile.offset;
        j["rate"] = t.profile.rate;
        j["exponent"] = t.profile.exponent;
        j["omega"] = t.profile.omega;
        j["phase"] = t.profile.phase;
        j["side_weights"] = t.sideWeights;
        out.push_back(j);
    }
    return out;
}

InitialDataSpec parseInitialData(const Json& doc, const std::string& ctx) {
    InitialDataSpec s;
    if (doc.is_null()) return s;
    checkKeys(doc, {"family", "value", "amplitude", "mode", "max_mode", "smoothness"}, ctx);
    if (doc.contains("family")) {
        const std::string f = doc.at("family").is_string() ? doc.at("family").get<std::string>() : "";
        if (f == "constant")
            s.family = InitialFamily::Constant;
        else if (f == "cosine_mode")
            s.family = InitialFamily::CosineMode;
        else if (f == "random_smooth")
            s.family = InitialFamily::RandomSmooth;
        else
            throw ScenarioError(join(ctx, "family"), "must be constant, cosine_mode or random_smooth");
    }
    s.value = number(doc, "value", s.value, ctx);
    s.amplitude = number(doc, "amplitude", s.amplitude, ctx);
    if (doc.contains("mode")) {
        const Json& m = doc.at("mode");
        if (!m.is_array() || m.empty() || m.size() > 2) throw ScenarioError(join(ctx, "mode"), "needs 1 or 2 integers");
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (!m[k].is_number_integer() || m[k].get<int>() < 0)
                throw ScenarioError(join(ctx, "mode"), "needs non-negative integers");
            s.mode[k] = m[k].get<int>();
        }
    }
    s.maxMode = static_cast<int>(integer(doc, "max_mode", s.maxMode, ctx));
    if (s.maxMode < 1) throw ScenarioError(join(ctx, "max_mode"), "must be at least 1");
    s.smoothness = number(doc, "smoothness", s.smoothness, ctx);
    return s;
}

Json initialToJson(const InitialDataSpec& s) {
    Json j;
    switch (s.family) {
        case InitialFamily::Constant: j["family"] = "constant"; break;
        case InitialFamily::CosineMode: j["family"] = "cosine_mode"; break;
        case InitialFamily::RandomSmooth: j["family"] = "random_smooth"; break;
    }
    j["value"] = s.value;
    j["amplitude"] = s.amplitude;
    j["mode"] = s.mode;
    j["max_mode"] = s.maxMode;
    j["smoothness"] = s.smoothness;
    return j;
}

ScalarField buildInitialField(const Grid& grid, const InitialDataSpec& spec, std::uint64_t seed) {
    ScalarField f(grid, spec.value);
    const double pi = std::acos(-1.0);
    const double lx = grid.extents()[0];
    const double ly = grid.extents()[1];
    auto cosine = [&](int kx, int ky, std::size_t i, std::size_t j) {
        double v = std::cos(kx * pi * grid.centre(0, i) / lx);
        if (grid.dim() == 2) v *= std::cos(ky * pi * grid.centre(1, j) / ly);
        return v;
    };
    switch (spec.family) {
        case InitialFamily::Constant: break;
        case InitialFamily::CosineMode:
            for (std::size_t j = 0; j < grid.ny(); ++j)
                for (std::size_t i = 0; i < grid.nx(); ++i)
                    f[grid.index(i, j)] += spec.amplitude * cosine(spec.mode[0], spec.mode[1], i, j);
            break;
        case InitialFamily::RandomSmooth: {
            std::mt19937_64 rng(seed);
            const int kyMax = grid.dim() == 2 ? spec.maxMode : 0;
            for (int ky = 0; ky <= kyMax; ++ky) {
                for (int kx = 0; kx <= spec.maxMode; ++kx) {
                    if (kx == 0 && ky == 0) continue;
                    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                    const double c = spec.amplitude * (2.0 * u - 1.0) *
                                     std::pow(1.0 + kx * kx + ky * ky, -0.5 * spec.smoothness);
                    for (std::size_t j = 0; j < grid.ny(); ++j)
                        for (std::size_t i = 0; i < grid.nx(); ++i) f[grid.index(i, j)] += c * cosine(kx, ky, i, j);
                }
            }
            break;
        }
    }
    return f;
}

RunOptions Scenario::runOptions() const {
    RunOptions o;
    o.tEnd = tEnd;
    o.observeEvery = observeEvery;
    o.norms = norms;
    return o;
}

Json Scenario::normalized() const {
    Json j;
    j["name"] = name;
    j["poly"]["exponents"] = std::vector<double>(poly.exponents().begin(), poly.exponents().end());
    j["poly"]["coefficients"] = std::vector<double>(poly.coefficients().begin(), poly.coefficients().end());
    j["grid"]["dim"] = grid.dim();
    if (grid.dim() == 1) {
        j["grid"]["extents"] = {grid.extents()[0]};
        j["grid"]["cells"] = {grid.nx()};
    } else {
        j["grid"]["extents"] = grid.extents();
        j["grid"]["cells"] = grid.cells();
    }
    j["grid"]["interior_margin"] = grid.interiorMargin();
    j["initial"] = initialToJson(initial);
    j["flux"] = fluxToJson(flux);
    j["solver"] = {{"dt", solver.dt},
                   {"newton_tol", solver.newtonTol},
                   {"newton_max_iter", solver.newtonMaxIter},
                   {"max_halvings", solver.maxHalvings},
                   {"linear_solver", linearSolverName(solver.linearSolver)},
                   {"linear_tol", solver.linearTol},
                   {"linear_max_iter", solver.linearMaxIter}};
    j["observation"] = {{"t_end", tEnd}, {"observe_every", observeEvery}};
    j["norms"]["s"] = norms.s;
    j["norms"]["deltas"] = norms.deltas;
    j["thresholds"] = {{"growth_factor", thresholds.growthFactor},
                       {"decay_fraction", thresholds.decayFraction},
                       {"psi_decay_fraction", thresholds.psiDecayFraction},
                       {"early_window", thresholds.earlyWindow},
                       {"energy_tolerance", thresholds.energyTolerance},
                       {"min_hessian_cells", thresholds.minHessianCells}};
    j["seed"] = seed;
    return j;
}

std::string fnv1a64Hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string Scenario::hash() const { return fnv1a64Hex(normalized().dump()); }

Scenario parseScenario(const Json& doc, const std::string& ctx) {
    checkKeys(doc, {"name", "poly", "grid", "initial", "flux", "solver", "observation", "norms", "thresholds", "seed"},
              ctx);
    if (!doc.contains("poly")) throw ScenarioError(join(ctx, "poly"), "is required");
    if (!doc.contains("grid")) throw ScenarioError(join(ctx, "grid"), "is required");
    std::string name;
    if (doc.contains("name")) {
        if (!doc.at("name").is_string()) throw ScenarioError(join(ctx, "name"), "must be a string");
        name = doc.at("name").get<std::string>();
    }
    Scenario s{name, parsePoly(doc.at("poly"), join(ctx, "poly")), parseGrid(doc.at("grid"), join(ctx, "grid"))};
    s.initial = parseInitialData(member(doc, "initial"), join(ctx, "initial"));
    s.flux = parseFluxTerms(member(doc, "flux"), join(ctx, "flux"));
    s.solver = parseSolver(member(doc, "solver"), join(ctx, "solver"));
    if (const Json& o = member(doc, "observation"); !o.is_null()) {
        const std::string c = join(ctx, "observation");
        checkKeys(o, {"t_end", "observe_every"}, c);
        s.tEnd = number(o, "t_end", s.tEnd, c);
        s.observeEvery = static_cast<int>(integer(o, "observe_every", s.observeEvery, c));
        if (!(s.tEnd > 0.0)) throw ScenarioError(join(c, "t_end"), "must be positive");
        if (s.observeEvery < 1) throw ScenarioError(join(c, "observe_every"), "must be at least 1");
    }
    if (const Json& n = member(doc, "norms"); !n.is_null()) {
        const std::string c = join(ctx, "norms");
        checkKeys(n, {"s", "deltas"}, c);
        if (n.contains("s")) s.norms.s = numberList(n, "s", c);
        if (n.contains("deltas")) s.norms.deltas = numberList(n, "deltas", c);
        for (double v : s.norms.s)
            if (!(v >= 1.0)) throw ScenarioError(join(c, "s"), "entries must be >= 1");
        for (double v : s.norms.deltas)
            if (!(v > 0.0 && v < 1.0)) throw ScenarioError(join(c, "deltas"), "entries must lie in (0, 1)");
    }
    if (s.norms.deltas.empty()) {
        const double a = degeneracyExponents(s.poly).a;
        s.norms.deltas.push_back(a > 0.0 ? a : 0.25);
    }
    s.thresholds = parseThresholds(member(doc, "thresholds"), join(ctx, "thresholds"));
    if (doc.contains("seed")) {
        const Json& v = doc.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ScenarioError(join(ctx, "seed"), "must be a non-negative integer");
        s.seed = v.get<std::uint64_t>();
    }
    return s;
}

Json parseJsonText(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        int line = 1;
        for (std::size_t k = 0; k < e.byte && k < text.size(); ++k)
            if (text[k] == '\n') ++line;
        throw ScenarioError("", e.what(), line);
    }
}

Json readJsonFile(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ScenarioError("", "cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parseJsonText(ss.str());
}

Scenario loadScenario(const std::filesystem::path& path) { return parseScenario(readJsonFile(path)); }

}  // namespace forchflow

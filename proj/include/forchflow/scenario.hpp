#pragma once

// Scenario files: JSON objects describing one run (polynomial, grid, initial
// data, boundary flux, solver, observation and norm menu). Unknown keys are
// rejected and defaults are echoed into a normalized dump whose FNV-1a hash
// tags every report.

#include "forchflow/constitutive.hpp"
#include "forchflow/estimates.hpp"
#include "forchflow/grid.hpp"
#include "forchflow/solver.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace forchflow {

using Json = nlohmann::ordered_json;

/// Parse or validation failure; `field` is a dotted path, `line` is set for parse errors.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& field, const std::string& message, int line = 0);
    std::string field;
    int line;
};

enum class InitialFamily { Constant, CosineMode, RandomSmooth };

struct InitialDataSpec {
    InitialFamily family = InitialFamily::Constant;
    double value = 0.0;       // constant, and the offset of the other families
    double amplitude = 1.0;
    std::array<int, 2> mode{1, 0};  // cosine_mode wave numbers
    int maxMode = 4;          // random_smooth: wave numbers 0..maxMode per axis
    double smoothness = 2.0;  // random_smooth: coefficient decay (1 + |k|^2)^{-smoothness/2}
};

/// Cell values of the initial pressure. random_smooth draws from mt19937_64(seed).
ScalarField buildInitialField(const Grid& grid, const InitialDataSpec& spec, std::uint64_t seed);

struct Scenario {
    std::string name;
    ForchheimerPolynomial poly;
    Grid grid;
    InitialDataSpec initial;
    BoundaryFluxSpec flux;
    SolverConfig solver;
    double tEnd = 1.0;
    int observeEvery = 10;
    NormMenu norms;
    EstimateThresholds thresholds;
    std::uint64_t seed = 0;

    ScalarField initialField() const { return buildInitialField(grid, initial, seed); }
    RunOptions runOptions() const;
    Json normalized() const;
    /// FNV-1a 64 of the normalized dump, as 16 hex digits.
    std::string hash() const;
};

Scenario parseScenario(const Json& doc, const std::string& context = "");
Scenario loadScenario(const std::filesystem::path& path);

/// Parses text into JSON, raising ScenarioError with the line of a syntax error.
Json parseJsonText(const std::string& text);
Json readJsonFile(const std::filesystem::path& path);

std::string fnv1a64Hex(const std::string& bytes);

// Pieces shared with the sweep and lemma-check specs.
BoundaryFluxSpec parseFluxTerms(const Json& doc, const std::string& context);
Json fluxToJson(const BoundaryFluxSpec& flux);
InitialDataSpec parseInitialData(const Json& doc, const std::string& context);
Json initialToJson(const InitialDataSpec& spec);

}  // namespace forchflow

#pragma once

// Workflows behind the forchflow command-line tool. Each writes its outputs
// under `outDir` and returns the process exit code: 0 when every applicable
// check passes, 1 when a check fails, 2 on invalid input or a failed run
// (with failure.json describing the error).

#include "forchflow/estimates.hpp"
#include "forchflow/scenario.hpp"
#include "forchflow/sequences.hpp"
#include "forchflow/stability.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace forchflow {

struct CommandOptions {
    std::filesystem::path scenario;  // may be empty for lemma-check
    std::filesystem::path outDir = ".";
    std::optional<std::uint64_t> seed;
};

int cmdSimulate(const CommandOptions& options);
int cmdVerify(const CommandOptions& options);
int cmdSweep(const CommandOptions& options);
int cmdLemmaCheck(const CommandOptions& options);

Json toJson(const EstimateRecord& record);
Json toJson(const OrderFit& fit);

/// Sweep description: a base scenario plus the perturbation axis and ladder.
PerturbationSweep parseSweep(const Json& doc, std::optional<std::uint64_t> seedOverride, Scenario* baseOut = nullptr);

struct LemmaCheckSpec {
    struct SingleTerm {
        double A, B, mu, Y0;
    };
    std::vector<SingleTerm> singleTerm{{1.0, 2.0, 1.0, 0.25}};
    std::vector<GeometricRecurrence> multiTerm{{{{1.0, 2.0, 1.0}, {1.0, 2.0, 2.0}}, 0.25}};
    int randomSingle = 1000;
    int randomMulti = 1000;
    int steps = 200;
    int closedFormSteps = 40;
    double limsupDt = 0.01;
    double limsupHorizon = 50.0;
    std::uint64_t seed = 0;
};

LemmaCheckSpec parseLemmaCheck(const Json& doc);

/// One verdict per lemma, each with instance parameters and truncated sequences.
Json runLemmaCheck(const LemmaCheckSpec& spec, bool& allPass);

}  // namespace forchflow

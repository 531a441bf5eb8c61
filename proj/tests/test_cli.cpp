#include "forchflow/commands.hpp"
#include "forchflow/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace forchflow;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(FORCHFLOW_SOURCE_DIR) / "scenarios";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("forchflow_cli_" + name);
    fs::remove_all(p);
    return p;
}

int runCli(const std::string& args) {
    const std::string cmd = std::string(FORCHFLOW_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json minimal() {
    return Json::parse(R"({
        "poly": {"exponents": [0, 1], "coefficients": [1, 1]},
        "grid": {"dim": 1, "extents": [1.0], "cells": [16]},
        "flux": []
    })");
}

}  // namespace

TEST(Scenario, MinimalFileGetsDefaults) {
    const Scenario s = parseScenario(minimal());
    EXPECT_EQ(s.grid.nx(), 16u);
    EXPECT_EQ(s.initial.family, InitialFamily::Constant);
    EXPECT_DOUBLE_EQ(s.solver.newtonTol, 1e-10);
    EXPECT_EQ(s.solver.newtonMaxIter, 50);
    EXPECT_EQ(s.seed, 0u);
    EXPECT_TRUE(s.flux.identicallyZero());
    const Json n = s.normalized();
    for (const char* key : {"poly", "grid", "initial", "flux", "solver", "observation", "norms", "thresholds", "seed"})
        EXPECT_TRUE(n.contains(key)) << key;
}

TEST(Scenario, ZeroLeadingCoefficientIsRejected) {
    Json doc = minimal();
    doc["poly"]["coefficients"] = {0, 1};
    try {
        parseScenario(doc);
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_NE(std::string(e.what()).find("a₀ must be positive"), std::string::npos) << e.what();
        EXPECT_EQ(e.field, "poly");
    }
}

TEST(Scenario, UnknownKeysAreRejected) {
    Json doc = minimal();
    doc["grid"]["spacing"] = 0.1;
    try {
        parseScenario(doc);
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_NE(e.field.find("spacing"), std::string::npos) << e.field;
    }
    doc = minimal();
    doc["colour"] = "blue";
    EXPECT_THROW(parseScenario(doc), ScenarioError);
}

TEST(Scenario, ParseErrorsCarryTheLine) {
    try {
        parseJsonText("{\n  \"poly\": {},\n  \"grid\": ,\n}");
        FAIL() << "expected ScenarioError";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.line, 3);
    }
}

TEST(Scenario, NormalizedDumpRoundTrips) {
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        const Json doc = readJsonFile(entry.path());
        if (!doc.contains("poly")) continue;
        const Scenario s = parseScenario(doc);
        const Scenario again = parseScenario(s.normalized());
        EXPECT_EQ(again.normalized().dump(), s.normalized().dump()) << entry.path();
        EXPECT_EQ(again.hash(), s.hash());
    }
}

TEST(Scenario, PresetsAndInitialData) {
    Json doc = minimal();
    doc["poly"] = {{"preset", "power_law"}, {"alpha", 1.0}, {"gamma", 2.0}, {"m", 2.5}};
    doc["initial"] = {{"family", "random_smooth"}, {"amplitude", 2.0}};
    doc["seed"] = 4;
    const Scenario s = parseScenario(doc);
    EXPECT_DOUBLE_EQ(s.poly.degree(), 1.5);
    EXPECT_EQ(s.initialField().values(), s.initialField().values());
    doc["seed"] = 5;
    EXPECT_NE(parseScenario(doc).initialField().values(), s.initialField().values());
    EXPECT_EQ(fnv1a64Hex(""), "cbf29ce484222325");
}

TEST(Cli, VerifyDarcyDecayPasses) {
    const fs::path out = scratch("verify");
    EXPECT_EQ(runCli("verify --scenario " + (kScenarios / "darcy_decay.json").string() + " --out " + out.string()), 0);
    const Json rep = readJsonFile(out / "report.json");
    EXPECT_EQ(rep.at("scenario_hash").get<std::string>(), loadScenario(kScenarios / "darcy_decay.json").hash());
    EXPECT_TRUE(rep.at("all_applicable_pass").get<bool>());
    const Json est = readJsonFile(out / "estimates.json");
    ASSERT_TRUE(est.is_array());
    for (const auto& r : est)
        for (const char* key : {"target", "anchor", "mode", "statistic", "threshold", "pass"})
            EXPECT_TRUE(r.contains(key)) << key;
    EXPECT_TRUE(fs::exists(out / "observations.csv"));
    EXPECT_TRUE(fs::exists(out / "scenario.normalized.json"));
}

TEST(Cli, SimulateIsDeterministic) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const std::string sc = (kScenarios / "zero_flux_power_law_1d.json").string();
    ASSERT_EQ(runCli("simulate --scenario " + sc + " --out " + a.string() + " --seed 9"), 0);
    ASSERT_EQ(runCli("simulate --scenario " + sc + " --out " + b.string() + " --seed 9"), 0);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path().filename();
        ++files;
    }
    EXPECT_GE(files, 5);
}

TEST(Cli, StepFailureWritesFailureJson) {
    const fs::path out = scratch("dt");
    const int code = runCli("simulate --scenario " + (kScenarios / "dt_underflow.json").string() + " --out " +
                            out.string());
    EXPECT_NE(code, 0);
    const Json f = readJsonFile(out / "failure.json");
    EXPECT_EQ(f.at("error").get<std::string>(), "step_failure");
    EXPECT_TRUE(f.at("time").is_number());
    EXPECT_TRUE(f.contains("scenario_hash"));
}

TEST(Cli, InvalidInputExitsWithError) {
    const fs::path out = scratch("invalid");
    fs::create_directories(out);
    const fs::path bad = out / "bad.json";
    std::ofstream(bad) << "{\"poly\": {\"preset\": \"darcy\", \"a0\": 0}, \"grid\": {\"dim\": 1, \"extents\": [1], "
                          "\"cells\": [8]}}";
    EXPECT_EQ(runCli("simulate --scenario " + bad.string() + " --out " + (out / "run").string()), 2);
    const Json f = readJsonFile(out / "run" / "failure.json");
    EXPECT_NE(f.at("message").get<std::string>().find("a₀ must be positive"), std::string::npos);
    EXPECT_EQ(runCli("simulate --scenario " + (out / "missing.json").string() + " --out " + (out / "m").string()), 2);
    EXPECT_NE(runCli("simulate"), 0);
}

TEST(Cli, IdenticalSweepSkipsTheFit) {
    const fs::path out = scratch("sweep");
    EXPECT_EQ(runCli("sweep --scenario " + (kScenarios / "sweep_identical.json").string() + " --out " + out.string()),
              0);
    const Json rep = readJsonFile(out / "sweep.json");
    for (double v : rep.at("sup_norms").at("L2_Pbar")) EXPECT_EQ(v, 0.0);
    for (const auto& [name, fit] : rep.at("order_fits").items()) {
        EXPECT_TRUE(fit.at("skipped").get<bool>()) << name;
        EXPECT_FALSE(fit.at("reason").get<std::string>().empty());
    }
    EXPECT_TRUE(fs::exists(out / "sweep.csv"));
}

TEST(Cli, LemmaCheckPasses) {
    const fs::path out = scratch("lemma");
    EXPECT_EQ(runCli("lemma-check --scenario " + (kScenarios / "lemma_check.json").string() + " --out " +
                     out.string()),
              0);
    const Json rep = readJsonFile(out / "lemmas.json");
    EXPECT_EQ(rep.at("verdicts").size(), 4u);
    for (const auto& v : rep.at("verdicts")) EXPECT_TRUE(v.at("pass").get<bool>()) << v.at("lemma");
}

TEST(LemmaSpec, DefaultsAndValidation) {
    const LemmaCheckSpec d = parseLemmaCheck(Json());
    EXPECT_EQ(d.randomSingle, 1000);
    EXPECT_EQ(d.steps, 200);
    EXPECT_THROW(parseLemmaCheck(Json::parse(R"({"bogus": 1})")), ScenarioError);
    EXPECT_THROW(parseLemmaCheck(Json::parse(R"({"single_term": [{"A": 1, "B": 0.5, "mu": 1, "Y0": 0.1}]})")),
                 DomainError);
}

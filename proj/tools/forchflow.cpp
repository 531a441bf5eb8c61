#include "forchflow/commands.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <string>

int main(int argc, char** argv) {
    using namespace forchflow;
    CLI::App app{"Forchheimer flow simulation and estimate verification"};
    app.require_subcommand(1);

    struct Parsed {
        std::string scenario;
        std::string out = ".";
        std::uint64_t seed = 0;
        CLI::Option* seedOpt = nullptr;
    };
    Parsed simulate, verify, sweep, lemma;

    auto add = [&](const char* name, const char* help, Parsed& p, bool scenarioRequired) {
        CLI::App* sub = app.add_subcommand(name, help);
        auto* opt = sub->add_option("--scenario", p.scenario, "scenario or spec file (JSON)");
        if (scenarioRequired) opt->required();
        sub->add_option("--out", p.out, "output directory")->capture_default_str();
        p.seedOpt = sub->add_option("--seed", p.seed, "overrides the seed in the scenario");
        return sub;
    };
    CLI::App* cSim = add("simulate", "run a scenario and write observation logs", simulate, true);
    CLI::App* cVer = add("verify", "run a scenario and check the long-time estimates", verify, true);
    CLI::App* cSwp = add("sweep", "paired-run perturbation ladder with order fits", sweep, true);
    CLI::App* cLem = add("lemma-check", "check the sequence and limsup lemmas", lemma, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors share the invalid-input exit code; --help exits 0
        return app.exit(e) == 0 ? 0 : 2;
    }

    auto options = [](const Parsed& p) {
        CommandOptions o;
        o.scenario = p.scenario;
        o.outDir = p.out;
        if (*p.seedOpt) o.seed = p.seed;
        return o;
    };
    if (cSim->parsed()) return cmdSimulate(options(simulate));
    if (cVer->parsed()) return cmdVerify(options(verify));
    if (cSwp->parsed()) return cmdSweep(options(sweep));
    if (cLem->parsed()) return cmdLemmaCheck(options(lemma));
    return 2;
}

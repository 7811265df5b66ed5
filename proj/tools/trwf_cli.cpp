// Command-line driver: run a scenario into a bundle directory, compare a
// bundle against a reference criteria table, or list what can be run.
//
// Exit codes: 0 success, 2 configuration error, 3 acceptance failure
// (a failed comparison or a bundle missing required artifacts), 1 anything
// else unexpected.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "trwf/compare.hpp"
#include "trwf/scenarios.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& scenario_name,
                const std::string& out_dir, long long seed, int threads) {
    trwf::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = trwf::load_config(config_path);
        if (!scenario_name.empty() &&
            trwf::scenario_from_name(scenario_name) != cfg.scenario)
            throw trwf::ConfigInvalid("--scenario contradicts the config file");
    } else if (!scenario_name.empty()) {
        cfg = trwf::default_config(trwf::scenario_from_name(scenario_name));
    } else {
        throw trwf::ConfigInvalid("run needs --config or --scenario");
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) cfg.threads = threads;
    trwf::validate_config(cfg);

    const trwf::RunArtifacts art = trwf::run_scenario(cfg, out_dir);
    std::printf("wrote %zu artifacts to %s\n", art.files.size(), out_dir.c_str());
    for (const auto& f : art.files) std::printf("  %s\n", f.c_str());
    return 0;
}

int compare_command(const std::string& bundle, const std::string& reference,
                    const std::string& report_path) {
    const trwf::CompareOutcome out = trwf::compare_bundle(bundle, reference);
    const std::string text = out.report.dump(2) + "\n";
    if (report_path.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        std::ofstream rep(report_path, std::ios::binary);
        if (!rep) throw trwf::ConfigInvalid("cannot open report path " + report_path);
        rep << text;
        std::printf("checked %d criteria, %d failed; report at %s\n", out.checked, out.failed,
                    report_path.c_str());
    }
    return out.all_pass() ? 0 : 3;
}

void list_command() {
    std::puts("squeezed       squeezing spectrum, gated ellipse metrics, Wigner snapshot");
    std::puts("subtracted     origin negativity trace and subtracted-state snapshot");
    std::puts("single-photon  photon statistics of the gated subtracted state");
    std::puts("eos            electro-optic filter scan, mode profiles, phase sweep");
    std::puts("reconstruct    moment-expansion and back-projection fidelity, MC budgets");
    std::puts("extract-mode   dominant-mode recovery from the covariance delay series");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-resolved Wigner function toolkit"};
    app.require_subcommand(1);

    std::string config_path, scenario_name, out_dir = "out";
    long long seed = -1;
    int threads = 0;
    CLI::App* run = app.add_subcommand("run", "execute a scenario into a bundle directory");
    run->add_option("--config", config_path, "JSON run configuration");
    run->add_option("--scenario", scenario_name, "scenario name (defaults without a config)");
    run->add_option("--out", out_dir, "bundle output directory");
    run->add_option("--seed", seed, "override the sampling seed");
    run->add_option("--threads", threads, "override the worker thread count");

    std::string bundle_dir, reference_path, report_path;
    CLI::App* cmp = app.add_subcommand("compare", "check a bundle against a criteria table");
    cmp->add_option("bundle", bundle_dir, "bundle directory")->required();
    cmp->add_option("reference", reference_path, "reference criteria JSON")->required();
    cmp->add_option("--out", report_path, "write the JSON report here instead of stdout");

    CLI::App* list = app.add_subcommand("list-scenarios", "print runnable scenario names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // bad flags are configuration errors
    }

    try {
        if (run->parsed()) return run_command(config_path, scenario_name, out_dir, seed, threads);
        if (cmp->parsed()) return compare_command(bundle_dir, reference_path, report_path);
        if (list->parsed()) {
            list_command();
            return 0;
        }
    } catch (const trwf::ConfigInvalid& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const trwf::MissingArtifact& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const trwf::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected: %s\n", e.what());
        return 1;
    }
    return 0;
}

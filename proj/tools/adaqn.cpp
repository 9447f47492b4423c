#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "adaqn/io/experiment.hpp"
#include "adaqn/io/report.hpp"
#include "adaqn/io/verify.hpp"

using namespace adaqn;

namespace {

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seeds, std::size_t workers, const std::string& out, bool quiet) {
    io::ExperimentConfig cfg;
    try {
        cfg = io::load_experiment(config_path, overrides, seeds);
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 2;
    }
    const std::string dir = out.empty() ? cfg.output_dir : out;
    const auto plan = io::plan_runs(cfg);
    if (!quiet)
        std::cerr << cfg.name << ": " << plan.size() << " runs (" << io::expand_variants(cfg).size() << " variants x "
                  << cfg.seeds.size() << " seeds), config " << cfg.hash << ", output " << dir << "\n";
    std::mutex log;
    const auto summary = io::run_experiment(cfg, dir, workers, [&](const io::ManifestEntry& e) {
        if (quiet && e.status == "ok") return;
        std::lock_guard<std::mutex> lock(log);
        std::cerr << "  " << e.run.file_name() << ": " << e.status << (e.error.empty() ? "" : " (" + e.error + ")")
                  << "\n";
    });
    std::cerr << summary.ok << " ok, " << summary.failed << " failed\n";
    return summary.failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& dir, const std::string& out, const io::ReportOptions& opt) {
    const std::string target = out.empty() ? dir + "/report" : out;
    const auto res = io::report(dir, target, opt);
    for (const auto& f : res.files) std::cout << f << "\n";
    return 0;
}

int cmd_verify(const std::vector<std::string>& suites, std::size_t tabular_seeds) {
    std::vector<io::CheckResult> results;
    auto want = [&](const std::string& s) {
        return suites.empty() || std::find(suites.begin(), suites.end(), s) != suites.end();
    };
    if (want("theorem1")) results.push_back(io::verify_theorem1());
    if (want("gradients"))
        for (auto& r : io::verify_gradients()) results.push_back(std::move(r));
    if (want("tabular")) results.push_back(io::verify_tabular(tabular_seeds));
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensembles of Q-networks sharing one adaptively selected target"};
    app.require_subcommand(1);
    app.set_version_flag("--version", io::kSoftwareVersion);

    auto* run = app.add_subcommand("run", "Execute every (variant x seed) run of an experiment config");
    std::string config_path, run_out;
    std::vector<std::string> overrides;
    std::uint64_t seed_count = 0;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    bool quiet = false;
    run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seeds", seed_count, "Use seeds 0 .. N-1 instead of the configured list");
    run->add_option("--workers", workers, "Runs executed in parallel")->check(CLI::PositiveNumber);
    run->add_option("--out", run_out, "Output directory (default: the config's output_dir)");
    run->add_option("--override", overrides, "Dotted key=value applied before validation (repeatable)");
    run->add_flag("--quiet", quiet, "Only report failed runs");

    auto* rep = app.add_subcommand("report", "Aggregate run records into CSV curves and a JSON summary");
    std::string records_dir, report_out;
    io::ReportOptions ropt;
    rep->add_option("records_dir", records_dir, "Directory holding manifest.json")->required()->check(CLI::ExistingDirectory);
    rep->add_option("--figure", ropt.figure, "all | curves | auc | selection | search");
    rep->add_option("--out", report_out, "Output directory (default: <records_dir>/report)");
    rep->add_option("--resamples", ropt.n_resamples, "Bootstrap resamples");
    rep->add_option("--level", ropt.level, "Confidence level");
    rep->add_option("--mc", ropt.n_mc, "Random-search Monte Carlo orderings");
    rep->add_option("--bins", ropt.max_bins, "Maximum selection-histogram rows");
    rep->add_option("--seed", ropt.seed, "Seed for resampling");

    auto* ver = app.add_subcommand("verify", "Run the oracle suites");
    std::vector<std::string> suites;
    std::size_t tabular_seeds = 20;
    ver->add_option("suites", suites, "theorem1 | gradients | tabular (default: all)")
        ->check(CLI::IsMember({"theorem1", "gradients", "tabular"}));
    ver->add_option("--tabular-seeds", tabular_seeds, "Seeds for the tabular convergence suite");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run)
            return cmd_run(config_path, overrides, seed_count ? std::optional<std::uint64_t>(seed_count) : std::nullopt,
                           workers, run_out, quiet);
        if (*rep) return cmd_report(records_dir, report_out, ropt);
        if (*ver) return cmd_verify(suites, tabular_seeds);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

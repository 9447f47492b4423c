#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "adaqn/io/config.hpp"
#include "adaqn/io/record_io.hpp"

namespace adaqn::io {

inline constexpr const char* kSoftwareVersion = "0.1.0";

struct RunSpec {
    std::string variant;
    std::uint64_t seed = 0;
    std::uint64_t run_index = 0;  // position of the seed in the seed list

    std::string file_name() const { return variant + "-seed" + std::to_string(seed) + ".jsonl"; }
};

/// Variant names after expanding "dqn_k" into one plain DQN per network.
inline std::vector<std::string> expand_variants(const ExperimentConfig& c) {
    if (c.kind == "tabular") return {"tabular"};
    if (c.kind == "adadqn") return {"adadqn"};
    if (c.kind == "adasac") return {"adasac"};
    if (c.kind == "evo") return {"evo"};
    std::vector<std::string> out;
    for (const auto& v : c.variants) {
        if (v == "dqn_k")
            for (std::size_t k = 0; k < c.adadqn.networks.size(); ++k) out.push_back("dqn_" + std::to_string(k));
        else
            out.push_back(v);
    }
    return out;
}

inline std::vector<RunSpec> plan_runs(const ExperimentConfig& c) {
    std::vector<RunSpec> plan;
    for (const auto& v : expand_variants(c))
        for (std::size_t j = 0; j < c.seeds.size(); ++j) plan.push_back({v, c.seeds[j], j});
    return plan;
}

/// AdaDQN settings for one ablation variant of the base agent block.
inline dqn::AdaDqnConfig adadqn_variant(const dqn::AdaDqnConfig& base, const std::string& variant) {
    dqn::AdaDqnConfig c = base;
    if (variant == "adadqn") {
        c.selection_mode = dqn::SelectionMode::Argmin;
        c.behavior_mode = dqn::BehaviorMode::EpsilonB;
    } else if (variant == "adadqn_eps0") {
        c.selection_mode = dqn::SelectionMode::Argmin;
        c.behavior_mode = dqn::BehaviorMode::AlwaysPsi;
    } else if (variant == "randdqn") {
        c.selection_mode = dqn::SelectionMode::Uniform;
        c.behavior_mode = dqn::BehaviorMode::EpsilonB;
    } else if (variant == "adadqn_max") {
        c.selection_mode = dqn::SelectionMode::Argmax;
        c.behavior_mode = dqn::BehaviorMode::EpsilonB;
    } else if (variant == "adadqn_lossprop") {
        c.selection_mode = dqn::SelectionMode::Argmin;
        c.behavior_mode = dqn::BehaviorMode::LossProportional;
    } else {
        throw ContractViolation("unknown AdaDQN variant '" + variant + "'");
    }
    return c;
}

inline harness::RunRecord run_tabular_record(const ExperimentConfig& c, const RunSpec& r) {
    const env::TabularMDP mdp = c.env.make_mdp();
    Rng env_rng = make_stream(r.seed, r.run_index, "env");
    Rng init_rng = make_stream(r.seed, r.run_index, "init");
    const auto res = tabular::run_tabular(mdp, c.tabular, env_rng, init_rng);
    harness::RunRecord rec;
    rec.metric = "sup_error";
    rec.checkpoint_steps = res.checkpoint_steps;
    rec.checkpoint_returns = res.sup_error;
    for (std::size_t i = 0; i < res.psi_history.size(); ++i) {
        harness::SelectionEvent ev;
        ev.step = (i + 1) * c.tabular.selection_period;
        ev.selected = {res.psi_history[i]};
        rec.selections.push_back(std::move(ev));
    }
    for (const auto& m : c.tabular.members)
        rec.network_labels.push_back("step " + std::to_string(m.scale) + "/(1+n)^" + std::to_string(m.exponent));
    rec.ledger.training_steps = c.tabular.total_updates;
    return rec;
}

/// Executes one planned run. Never throws for failures inside the run: they
/// are reported through `status` and `error`.
inline harness::RunRecord execute_run(const ExperimentConfig& c, const RunSpec& r) {
    harness::RunRecord rec;
    try {
        if (c.kind == "tabular") {
            rec = run_tabular_record(c, r);
        } else if (c.kind == "adasac") {
            env::PendulumEnv pendulum(c.env.pendulum);
            rec = sac::run_adasac(c.adasac, pendulum, r.seed, r.run_index);
        } else if (c.kind == "evo") {
            auto environment = c.env.make_discrete();
            rec = evo::run_evo(c.evo, *environment, r.seed, r.run_index);
        } else if (r.variant.rfind("dqn_", 0) == 0) {
            const std::size_t k = std::stoul(r.variant.substr(4));
            auto environment = c.env.make_discrete();
            rec = dqn::run_dqn(dqn::DqnConfig::from(c.adadqn, k), *environment, r.seed, r.run_index);
        } else {
            auto environment = c.env.make_discrete();
            rec = dqn::run_adadqn(adadqn_variant(c.adadqn, r.variant), *environment, r.seed, r.run_index);
        }
    } catch (const std::exception& e) {
        rec = {};
        rec.status = "failed";
        rec.error = e.what();
    }
    rec.experiment = c.name;
    rec.variant = r.variant;
    rec.seed = r.seed;
    rec.run_index = r.run_index;
    rec.config_hash = c.hash;
    return rec;
}

struct ManifestEntry {
    RunSpec run;
    std::string status = "pending";
    std::string error;
};

inline Json manifest_json(const ExperimentConfig& c, const std::vector<ManifestEntry>& entries) {
    Json runs = Json::array();
    for (const auto& e : entries)
        runs.push_back({{"file", e.run.file_name()},
                        {"variant", e.run.variant},
                        {"seed", e.run.seed},
                        {"run_index", e.run.run_index},
                        {"status", e.status},
                        {"error", e.error}});
    return {{"schema_version", kSchemaVersion},
            {"software_version", kSoftwareVersion},
            {"experiment", c.name},
            {"kind", c.kind},
            {"config_hash", c.hash},
            {"config", c.resolved},
            {"runs", runs}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

struct RunSummary {
    std::size_t ok = 0;
    std::size_t failed = 0;
    std::vector<ManifestEntry> entries;
};

using ProgressFn = std::function<void(const ManifestEntry&)>;

/// Runs the whole plan on `workers` threads. Records go to `out_dir`; the
/// manifest is rewritten after every finished run, one writer at a time.
inline RunSummary run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir, std::size_t workers,
                                 const ProgressFn& progress = {}) {
    std::filesystem::create_directories(out_dir);
    const auto plan = plan_runs(c);
    RunSummary summary;
    for (const auto& r : plan) summary.entries.push_back({r});
    std::mutex manifest_mutex;
    const auto manifest_path = out_dir / "manifest.json";
    write_text(manifest_path, manifest_json(c, summary.entries).dump(2) + "\n");

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= plan.size()) return;
            const harness::RunRecord rec = execute_run(c, plan[i]);
            save_record((out_dir / plan[i].file_name()).string(), rec);
            std::lock_guard<std::mutex> lock(manifest_mutex);
            summary.entries[i].status = rec.status;
            summary.entries[i].error = rec.error;
            write_text(manifest_path, manifest_json(c, summary.entries).dump(2) + "\n");
            if (progress) progress(summary.entries[i]);
        }
    };
    const std::size_t width = std::max<std::size_t>(1, std::min(workers, plan.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < width; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& e : summary.entries) (e.status == "ok" ? summary.ok : summary.failed) += 1;
    return summary;
}

}  // namespace adaqn::io

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adaqn/harness/metrics.hpp"
#include "adaqn/io/experiment.hpp"

namespace adaqn::io {

struct ReportOptions {
    std::string figure = "all";  // all | curves | auc | selection | search
    std::size_t n_resamples = 2000;
    double level = 0.95;
    std::size_t n_mc = 2000;        // random-search orderings
    std::size_t max_bins = 20;      // selection histogram rows
    std::uint64_t seed = 0;         // bootstrap and Monte Carlo draws
};

/// The records of one variant, all on the same checkpoint grid.
struct VariantRuns {
    std::string name;
    std::string metric = "return";
    std::vector<harness::RunRecord> ok;
    std::size_t failed = 0;
};

struct LoadedRecords {
    Json manifest;
    std::vector<VariantRuns> variants;  // manifest order
    std::vector<double> steps;
};

inline bool higher_is_better(const std::string& metric) { return metric != "sup_error"; }

/// Reads the manifest and every finished record. Failed runs are counted but
/// not loaded; records on different checkpoint grids are rejected.
inline LoadedRecords load_records(const std::filesystem::path& dir) {
    LoadedRecords out;
    out.manifest = read_json_file((dir / "manifest.json").string());
    std::map<std::string, std::size_t> index;
    std::optional<std::vector<std::uint64_t>> grid;
    for (const auto& run : out.manifest.at("runs")) {
        const std::string variant = run.at("variant").get<std::string>();
        if (!index.count(variant)) {
            index[variant] = out.variants.size();
            out.variants.push_back({variant});
        }
        VariantRuns& v = out.variants[index[variant]];
        if (run.at("status").get<std::string>() != "ok") {
            ++v.failed;
            continue;
        }
        harness::RunRecord rec = load_record((dir / run.at("file").get<std::string>()).string());
        if (rec.status != "ok") {
            ++v.failed;
            continue;
        }
        if (!grid) grid = rec.checkpoint_steps;
        if (rec.checkpoint_steps != *grid)
            throw ContractViolation("mixed checkpoint grids: " + run.at("file").get<std::string>() +
                                    " does not match the first record");
        v.metric = rec.metric;
        v.ok.push_back(std::move(rec));
    }
    if (!grid) throw ContractViolation("no finished run records in " + dir.string());
    if (grid->size() < 2) throw ContractViolation("reports need at least two checkpoints");
    out.steps.assign(grid->begin(), grid->end());
    return out;
}

inline std::vector<std::vector<double>> per_seed_series(const VariantRuns& v) {
    std::vector<std::vector<double>> out;
    for (const auto& r : v.ok) out.push_back(r.checkpoint_returns);
    return out;
}

/// Pointwise IQM over seeds with a bootstrap interval.
struct BandCurve {
    std::vector<double> iqm, lo, hi;
};

inline BandCurve iqm_band(const std::vector<std::vector<double>>& seeds, const ReportOptions& opt, Rng& rng) {
    BandCurve b;
    const std::size_t n_t = seeds.front().size();
    for (std::size_t t = 0; t < n_t; ++t) {
        std::vector<double> col;
        for (const auto& s : seeds) col.push_back(s[t]);
        b.iqm.push_back(harness::iqm(col));
        const auto ci = harness::bootstrap_ci({col}, opt.n_resamples, opt.level, rng);
        b.lo.push_back(ci.lo);
        b.hi.push_back(ci.hi);
    }
    return b;
}

/// AUC of the IQM curve, with a percentile interval from resampling seeds.
inline std::pair<double, harness::Interval> auc_with_ci(const std::vector<std::vector<double>>& seeds,
                                                        std::span<const double> steps, const ReportOptions& opt,
                                                        Rng& rng) {
    auto iqm_curve_of = [&](const std::vector<const std::vector<double>*>& pick) {
        std::vector<double> curve;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            std::vector<double> col;
            for (const auto* s : pick) col.push_back((*s)[t]);
            curve.push_back(harness::iqm(col));
        }
        return curve;
    };
    std::vector<const std::vector<double>*> all;
    for (const auto& s : seeds) all.push_back(&s);
    const double point = harness::auc(steps, iqm_curve_of(all));
    std::vector<double> stats;
    std::vector<const std::vector<double>*> pick(seeds.size());
    for (std::size_t b = 0; b < opt.n_resamples; ++b) {
        for (auto& p : pick) p = &seeds[uniform_index(rng, seeds.size())];
        stats.push_back(harness::auc(steps, iqm_curve_of(pick)));
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - opt.level;
    return {point, {harness::sorted_quantile(stats, 0.5 * alpha), harness::sorted_quantile(stats, 1.0 - 0.5 * alpha)}};
}

inline std::string csv_number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

inline void write_curve_csv(const std::filesystem::path& path, std::span<const double> steps,
                            std::span<const double> value, std::span<const double> lo, std::span<const double> hi) {
    std::ostringstream out;
    out << "step,metric,lo,hi\n";
    for (std::size_t t = 0; t < steps.size(); ++t)
        out << csv_number(steps[t]) << ',' << csv_number(value[t]) << ',' << csv_number(lo[t]) << ','
            << csv_number(hi[t]) << '\n';
    write_text(path, out.str());
}

/// Selection counts per bin of consecutive selection events, summed over
/// seeds. Each row also carries the behaviour-index histogram of the bin.
struct SelectionHistogram {
    std::vector<std::uint64_t> bin_end_step;
    std::vector<std::size_t> events_per_bin;
    std::vector<std::vector<std::uint64_t>> selected;  // [bin][member]
    std::vector<std::vector<std::uint64_t>> behavior;  // [bin][member]
};

inline SelectionHistogram selection_histogram(const VariantRuns& v, std::size_t max_bins) {
    SelectionHistogram h;
    if (v.ok.empty() || v.ok.front().selections.empty()) return h;
    const std::size_t n_events = v.ok.front().selections.size();
    std::size_t members = v.ok.front().network_labels.size();
    for (const auto& r : v.ok) {
        if (r.selections.size() != n_events) throw ContractViolation("runs of one variant logged different selection counts");
        for (const auto& e : r.selections)
            for (std::size_t s : e.selected) members = std::max(members, s + 1);
    }
    const std::size_t per_bin = (n_events + max_bins - 1) / std::max<std::size_t>(max_bins, 1);
    for (std::size_t start = 0; start < n_events; start += per_bin) {
        const std::size_t end = std::min(n_events, start + per_bin);
        std::vector<std::uint64_t> sel(members, 0), beh(members, 0);
        for (const auto& r : v.ok)
            for (std::size_t e = start; e < end; ++e) {
                for (std::size_t s : r.selections[e].selected) ++sel[s];
                const auto& bc = r.selections[e].behavior_counts;
                for (std::size_t k = 0; k < std::min(bc.size(), members); ++k) beh[k] += bc[k];
            }
        h.bin_end_step.push_back(v.ok.front().selections[end - 1].step);
        h.events_per_bin.push_back(end - start);
        h.selected.push_back(std::move(sel));
        h.behavior.push_back(std::move(beh));
    }
    return h;
}

inline void write_histogram_csv(const std::filesystem::path& path, const SelectionHistogram& h,
                                const std::vector<std::vector<std::uint64_t>>& counts) {
    std::ostringstream out;
    out << "bin_end_step,events";
    const std::size_t members = counts.empty() ? 0 : counts.front().size();
    for (std::size_t k = 0; k < members; ++k) out << ",member_" << k;
    out << ",entropy\n";
    for (std::size_t b = 0; b < counts.size(); ++b) {
        out << h.bin_end_step[b] << ',' << h.events_per_bin[b];
        std::vector<double> as_double;
        for (auto c : counts[b]) {
            out << ',' << c;
            as_double.push_back(static_cast<double>(c));
        }
        out << ',' << csv_number(harness::entropy(as_double)) << '\n';
    }
    write_text(path, out.str());
}

struct ReportResult {
    std::vector<std::string> files;
    Json summary;
};

/// Writes per-variant CSVs and summary.json into `out_dir`.
inline ReportResult report(const std::filesystem::path& records_dir, const std::filesystem::path& out_dir,
                           const ReportOptions& opt = {}) {
    static const std::set<std::string> kinds{"all", "curves", "auc", "selection", "search"};
    if (!kinds.count(opt.figure)) throw ConfigError("figure", "expected all, curves, auc, selection or search");
    const LoadedRecords data = load_records(records_dir);
    std::filesystem::create_directories(out_dir);
    const bool all = opt.figure == "all";
    ReportResult res;
    Rng rng = make_stream(opt.seed, 0, "report");
    Json variants = Json::object();
    std::vector<std::pair<std::string, double>> ranking;
    std::string ranking_metric = "return";

    for (const auto& v : data.variants) {
        Json entry{{"runs", v.ok.size() + v.failed}, {"ok", v.ok.size()}, {"failed", v.failed}, {"metric", v.metric}};
        if (v.ok.empty()) {
            variants[v.name] = entry;
            continue;
        }
        ranking_metric = v.metric;
        const auto seeds = per_seed_series(v);
        if (all || opt.figure == "curves") {
            const BandCurve band = iqm_band(seeds, opt, rng);
            const auto f = out_dir / ("curve_" + v.name + ".csv");
            write_curve_csv(f, data.steps, band.iqm, band.lo, band.hi);
            res.files.push_back(f.string());
            entry["final_iqm"] = band.iqm.back();

            // worst seed under the metric's orientation
            std::vector<std::vector<double>> oriented = seeds;
            if (!higher_is_better(v.metric))
                for (auto& s : oriented)
                    for (auto& x : s) x = -x;
            const std::size_t w = harness::worst_seed(oriented, data.steps);
            const auto g = out_dir / ("worst_seed_" + v.name + ".csv");
            write_curve_csv(g, data.steps, seeds[w], seeds[w], seeds[w]);
            res.files.push_back(g.string());
            entry["worst_seed"] = v.ok[w].seed;
        }
        if (all || opt.figure == "auc") {
            const auto [a, ci] = auc_with_ci(seeds, data.steps, opt, rng);
            entry["auc"] = a;
            entry["auc_ci"] = {ci.lo, ci.hi};
            ranking.push_back({v.name, a});
        }
        if (all || opt.figure == "selection") {
            const SelectionHistogram h = selection_histogram(v, opt.max_bins);
            if (!h.selected.empty()) {
                const auto f = out_dir / ("selection_" + v.name + ".csv");
                write_histogram_csv(f, h, h.selected);
                res.files.push_back(f.string());
                const bool has_behavior = std::any_of(h.behavior.begin(), h.behavior.end(), [](const auto& row) {
                    return std::any_of(row.begin(), row.end(), [](auto c) { return c > 0; });
                });
                if (has_behavior) {
                    const auto g = out_dir / ("behavior_" + v.name + ".csv");
                    write_histogram_csv(g, h, h.behavior);
                    res.files.push_back(g.string());
                }
            }
        }
        variants[v.name] = entry;
    }

    Json summary{{"experiment", data.manifest.at("experiment")},
                 {"config_hash", data.manifest.at("config_hash")},
                 {"steps", data.steps},
                 {"variants", variants}};
    if (!ranking.empty()) {
        const bool higher = higher_is_better(ranking_metric);
        std::stable_sort(ranking.begin(), ranking.end(),
                         [&](const auto& a, const auto& b) { return higher ? a.second > b.second : a.second < b.second; });
        Json table = Json::array();
        for (const auto& [name, a] : ranking) table.push_back({{"variant", name}, {"auc", a}});
        summary["auc_ranking"] = table;
    }

    // Grid and random search over the individual DQN runs, when present.
    if (all || opt.figure == "search") {
        std::vector<const VariantRuns*> singles;
        for (std::size_t k = 0;; ++k) {
            auto it = std::find_if(data.variants.begin(), data.variants.end(),
                                   [&](const VariantRuns& v) { return v.name == "dqn_" + std::to_string(k); });
            if (it == data.variants.end()) break;
            singles.push_back(&*it);
        }
        const bool usable = !singles.empty() && std::all_of(singles.begin(), singles.end(), [&](const VariantRuns* v) {
            return !v->ok.empty() && v->ok.size() == singles.front()->ok.size();
        });
        if (usable) {
            harness::ScoreTensor s;
            for (const auto* v : singles) s.push_back({per_seed_series(*v)});
            const auto grid = harness::grid_search_curve(s, data.steps);
            const auto f = out_dir / "grid_search.csv";
            write_curve_csv(f, grid.steps, grid.values, grid.values, grid.values);
            res.files.push_back(f.string());
            Rng mc = make_stream(opt.seed, 0, "random-search");
            const auto est = harness::random_search_estimate(s, data.steps, opt.n_mc, mc);
            std::vector<double> lo, hi;
            for (std::size_t p = 0; p < est.curve.values.size(); ++p) {
                double worst_se = 0.0;
                for (const auto& task : est.std_error)
                    for (const auto& seed : task) worst_se = std::max(worst_se, seed[p]);
                lo.push_back(est.curve.values[p] - 3.0 * worst_se);
                hi.push_back(est.curve.values[p] + 3.0 * worst_se);
            }
            const auto g = out_dir / "random_search.csv";
            write_curve_csv(g, est.curve.steps, est.curve.values, lo, hi);
            res.files.push_back(g.string());
            summary["search"] = {{"hyperparameters", singles.size()},
                                 {"grid_search_auc", harness::auc(grid.steps, grid.values)},
                                 {"random_search_auc", harness::auc(est.curve.steps, est.curve.values)}};
        }
    }

    const auto sf = out_dir / "summary.json";
    write_text(sf, summary.dump(2) + "\n");
    res.files.push_back(sf.string());
    res.summary = std::move(summary);
    return res;
}

}  // namespace adaqn::io

#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "adaqn/common/error.hpp"
#include "adaqn/harness/run_record.hpp"

namespace adaqn::io {

/// Line-delimited RunRecord: a header object, then one object per event
/// tagged by "type" (checkpoint, episode, selection, generation). Doubles are
/// written in shortest round-trip form; non-finite values become null.
inline constexpr int kRecordFormatVersion = 1;

namespace detail {

inline nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json numbers(const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

inline double read_number(const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

inline std::vector<double> read_numbers(const nlohmann::json& v) {
    std::vector<double> out;
    for (const auto& x : v) out.push_back(read_number(x));
    return out;
}

}  // namespace detail

inline void write_record(std::ostream& out, const harness::RunRecord& r) {
    using nlohmann::json;
    json header{{"type", "header"},
                {"format_version", kRecordFormatVersion},
                {"experiment", r.experiment},
                {"variant", r.variant},
                {"seed", r.seed},
                {"run_index", r.run_index},
                {"config_hash", r.config_hash},
                {"status", r.status},
                {"error", r.error},
                {"metric", r.metric},
                {"network_labels", r.network_labels},
                {"ledger", {{"training_steps", r.ledger.training_steps}, {"evaluation_steps", r.ledger.evaluation_steps}}},
                {"counts",
                 {{"checkpoint", r.checkpoint_steps.size()},
                  {"episode", r.episodes.size()},
                  {"selection", r.selections.size()},
                  {"generation", r.generations.size()}}}};
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < r.checkpoint_steps.size(); ++i)
        out << json{{"type", "checkpoint"}, {"step", r.checkpoint_steps[i]}, {"value", detail::number(r.checkpoint_returns[i])}}
                   .dump()
            << '\n';
    for (const auto& e : r.episodes)
        out << json{{"type", "episode"}, {"step", e.step}, {"return", detail::number(e.episode_return)}, {"length", e.length}}
                   .dump()
            << '\n';
    for (const auto& s : r.selections)
        out << json{{"type", "selection"},
                    {"step", s.step},
                    {"selected", s.selected},
                    {"losses", detail::numbers(s.losses)},
                    {"behavior_counts", s.behavior_counts}}
                   .dump()
            << '\n';
    for (const auto& g : r.generations)
        out << json{{"type", "generation"},
                    {"step", g.step},
                    {"fitness", detail::numbers(g.fitness)},
                    {"parents", g.parents},
                    {"mutated", g.mutated},
                    {"eval_steps", g.eval_steps},
                    {"labels", g.labels}}
                   .dump()
            << '\n';
}

inline harness::RunRecord read_record(std::istream& in, const std::string& source = "record") {
    using nlohmann::json;
    harness::RunRecord r;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    json counts;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("type"))
            throw ContractViolation(source + ":" + std::to_string(line_no) + ": malformed line");
        const std::string type = j.at("type").get<std::string>();
        if (!have_header) {
            if (type != "header") throw ContractViolation(source + ": first line must be the header");
            if (j.at("format_version").get<int>() != kRecordFormatVersion)
                throw ContractViolation(source + ": unsupported record format version");
            r.experiment = j.at("experiment").get<std::string>();
            r.variant = j.at("variant").get<std::string>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.run_index = j.at("run_index").get<std::uint64_t>();
            r.config_hash = j.at("config_hash").get<std::string>();
            r.status = j.at("status").get<std::string>();
            r.error = j.at("error").get<std::string>();
            r.metric = j.at("metric").get<std::string>();
            r.network_labels = j.at("network_labels").get<std::vector<std::string>>();
            r.ledger.training_steps = j.at("ledger").at("training_steps").get<std::uint64_t>();
            r.ledger.evaluation_steps = j.at("ledger").at("evaluation_steps").get<std::uint64_t>();
            counts = j.at("counts");
            have_header = true;
        } else if (type == "checkpoint") {
            r.checkpoint_steps.push_back(j.at("step").get<std::uint64_t>());
            r.checkpoint_returns.push_back(detail::read_number(j.at("value")));
        } else if (type == "episode") {
            r.episodes.push_back({j.at("step").get<std::uint64_t>(), detail::read_number(j.at("return")),
                                  j.at("length").get<std::uint64_t>()});
        } else if (type == "selection") {
            harness::SelectionEvent s;
            s.step = j.at("step").get<std::uint64_t>();
            s.selected = j.at("selected").get<std::vector<std::size_t>>();
            s.losses = detail::read_numbers(j.at("losses"));
            s.behavior_counts = j.at("behavior_counts").get<std::vector<std::uint64_t>>();
            r.selections.push_back(std::move(s));
        } else if (type == "generation") {
            harness::GenerationEvent g;
            g.step = j.at("step").get<std::uint64_t>();
            g.fitness = detail::read_numbers(j.at("fitness"));
            g.parents = j.at("parents").get<std::vector<std::size_t>>();
            g.mutated = j.at("mutated").get<std::vector<std::size_t>>();
            g.eval_steps = j.at("eval_steps").get<std::vector<std::uint64_t>>();
            g.labels = j.at("labels").get<std::vector<std::string>>();
            r.generations.push_back(std::move(g));
        } else {
            throw ContractViolation(source + ":" + std::to_string(line_no) + ": unknown record type '" + type + "'");
        }
    }
    if (!have_header) throw ContractViolation(source + ": empty record file");
    if (counts.at("checkpoint").get<std::size_t>() != r.checkpoint_steps.size() ||
        counts.at("episode").get<std::size_t>() != r.episodes.size() ||
        counts.at("selection").get<std::size_t>() != r.selections.size() ||
        counts.at("generation").get<std::size_t>() != r.generations.size())
        throw ContractViolation(source + ": truncated record (event counts disagree with the header)");
    return r;
}

inline void save_record(const std::string& path, const harness::RunRecord& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_record(out, r);
}

inline harness::RunRecord load_record(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractViolation("cannot open " + path);
    return read_record(in, path);
}

}  // namespace adaqn::io

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"
#include "adaqn/dqn/dqn.hpp"
#include "adaqn/evo/runner.hpp"
#include "adaqn/sac/adasac.hpp"
#include "adaqn/tabular/ensemble.hpp"

namespace adaqn::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Read access to one JSON object that remembers which keys were consumed,
/// so that `finish` can reject anything left over.
class ObjectReader {
public:
    ObjectReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(display(), "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) throw ConfigError(field(key), "missing required key");
        return node_.at(key);
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!node_.contains(key)) return fallback;
        return convert<T>(raw(key), field(key));
    }

    template <class T>
    T require(const std::string& key) {
        return convert<T>(raw(key), field(key));
    }

    ObjectReader child(const std::string& key) { return ObjectReader(raw(key), field(key)); }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }

    template <class T>
    static T convert(const Json& v, const std::string& where) {
        try {
            if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
                if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
                    throw ConfigError(where, "expected a non-negative integer");
                return static_cast<T>(v.get<std::uint64_t>());
            } else if constexpr (std::is_same_v<T, int>) {
                if (!v.is_number_integer()) throw ConfigError(where, "expected an integer");
                return v.get<int>();
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(where, "expected a number");
                return v.get<double>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(where, "expected true or false");
                return v.get<bool>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(where, "expected a string");
                return v.get<std::string>();
            } else {
                return v.get<T>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(where, e.what());
        }
    }

private:
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const Json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class T>
std::vector<T> read_list(const Json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where, "expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(ObjectReader::convert<T>(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

/// Wraps a parser call so that library precondition failures surface as field errors.
template <class F>
auto at_field(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ContractViolation& e) {
        throw ConfigError(where, e.what());
    }
}

// ---------------------------------------------------------------- overrides

/// Parses "a.b.c=value". The value is read as JSON when it parses, as a plain string otherwise.
inline std::pair<std::string, Json> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(text, "override must look like key=value");
    const std::string key = text.substr(0, eq);
    const std::string value = text.substr(eq + 1);
    Json parsed = Json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    return {key, parsed};
}

/// Sets a dotted path, creating intermediate objects. Numeric segments index into lists.
inline void apply_override(Json& root, const std::string& dotted, const Json& value) {
    Json* node = &root;
    std::stringstream ss(dotted);
    std::string seg;
    std::vector<std::string> parts;
    while (std::getline(ss, seg, '.')) {
        if (seg.empty()) throw ConfigError(dotted, "empty path segment");
        parts.push_back(seg);
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const bool last = i + 1 == parts.size();
        const std::string& p = parts[i];
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(p);
            } catch (const std::exception&) {
                throw ConfigError(dotted, "'" + p + "' does not index a list");
            }
            if (idx >= node->size()) throw ConfigError(dotted, "list index out of range");
            node = &(*node)[idx];
        } else {
            if (node->is_null()) *node = Json::object();
            if (!node->is_object()) throw ConfigError(dotted, "'" + p + "' is below a scalar");
            node = &(*node)[p];
        }
        if (last) *node = value;
    }
}

inline std::string config_hash(const Json& resolved) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(resolved.dump())));
    return buf;
}

// ---------------------------------------------------------------- sub-parsers

inline dqn::LinearSchedule parse_schedule(ObjectReader r, dqn::LinearSchedule fallback) {
    dqn::LinearSchedule s;
    s.start = r.get("start", fallback.start);
    s.end = r.get("end", fallback.end);
    s.duration = r.get<std::uint64_t>("duration", fallback.duration);
    r.finish();
    return s;
}

inline dqn::LinearSchedule read_schedule(ObjectReader& parent, const std::string& key, dqn::LinearSchedule fallback) {
    if (!parent.has(key)) return fallback;
    return parse_schedule(parent.child(key), fallback);
}

inline nn::Activation parse_activation(const std::string& name, const std::string& where) {
    return at_field(where, [&] { return nn::activation_from_string(name); });
}

inline nn::OptimizerConfig parse_optimizer(ObjectReader& r, nn::OptimizerConfig fallback) {
    nn::OptimizerConfig o = fallback;
    if (r.has("optimizer"))
        o.kind = at_field(r.field("optimizer"),
                          [&] { return nn::optimizer_from_string(r.require<std::string>("optimizer")); });
    o.learning_rate = r.get("learning_rate", o.learning_rate);
    o.eps = r.get("optimizer_eps", o.eps);
    o.weight_decay = r.get("weight_decay", o.weight_decay);
    return o;
}

/// {"hidden": [..], "activation": "relu", "loss": "l2", "optimizer": "adam", "learning_rate": 1e-3, ...}
inline dqn::HyperparamSet parse_network(ObjectReader r) {
    dqn::HyperparamSet h;
    h.optimizer = {nn::OptimizerKind::Adam, 1e-3};
    if (r.has("hidden")) h.arch.hidden = read_list<std::size_t>(r.raw("hidden"), r.field("hidden"));
    if (r.has("activation")) h.arch.activation = parse_activation(r.require<std::string>("activation"), r.field("activation"));
    h.arch.activation.slope = r.get("leaky_slope", h.arch.activation.slope);
    if (r.has("loss"))
        h.loss = at_field(r.field("loss"), [&] { return nn::loss_from_string(r.require<std::string>("loss")); });
    h.loss.delta = r.get("huber_delta", h.loss.delta);
    h.optimizer = parse_optimizer(r, h.optimizer);
    if (r.has("discount")) h.discount = r.require<double>("discount");
    r.finish();
    return h;
}

/// Either a list of network objects or {"grid": {field: [options], ...}}, the
/// latter expanding to the Cartesian product in key order.
inline std::vector<dqn::HyperparamSet> parse_networks(const Json& v, const std::string& where) {
    std::vector<dqn::HyperparamSet> out;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(parse_network(ObjectReader(v[i], where + "[" + std::to_string(i) + "]")));
        return out;
    }
    ObjectReader r(v, where);
    const Json& grid = r.raw("grid");
    r.finish();
    if (!grid.is_object() || grid.empty()) throw ConfigError(where + ".grid", "expected a non-empty object of lists");
    std::vector<Json> combos{Json::object()};
    for (auto it = grid.begin(); it != grid.end(); ++it) {
        if (!it.value().is_array() || it.value().empty())
            throw ConfigError(where + ".grid." + it.key(), "expected a non-empty list of options");
        std::vector<Json> next;
        for (const Json& c : combos)
            for (const Json& option : it.value()) {
                Json n = c;
                n[it.key()] = option;
                next.push_back(std::move(n));
            }
        combos = std::move(next);
    }
    for (std::size_t i = 0; i < combos.size(); ++i)
        out.push_back(parse_network(ObjectReader(combos[i], where + ".grid")));
    return out;
}

inline dqn::SelectionMode parse_selection_mode(const std::string& s, const std::string& where) {
    if (s == "argmin") return dqn::SelectionMode::Argmin;
    if (s == "argmax") return dqn::SelectionMode::Argmax;
    if (s == "uniform") return dqn::SelectionMode::Uniform;
    throw ConfigError(where, "expected argmin, argmax or uniform");
}

inline dqn::BehaviorMode parse_behavior_mode(const std::string& s, const std::string& where) {
    if (s == "epsilon_b") return dqn::BehaviorMode::EpsilonB;
    if (s == "always_psi") return dqn::BehaviorMode::AlwaysPsi;
    if (s == "loss_proportional") return dqn::BehaviorMode::LossProportional;
    throw ConfigError(where, "expected epsilon_b, always_psi or loss_proportional");
}

/// Keys shared by every replay-based value learner.
template <class C>
void read_replay_keys(ObjectReader& r, C& c) {
    c.gamma = r.get("gamma", c.gamma);
    c.target_update_period = r.get<std::uint64_t>("T", c.target_update_period);
    c.train_period = r.get<std::uint64_t>("G", c.train_period);
    c.buffer_capacity = r.get<std::size_t>("buffer_capacity", c.buffer_capacity);
    c.initial_fill = r.get<std::size_t>("initial_fill", c.initial_fill);
    c.batch_size = r.get<std::size_t>("batch_size", c.batch_size);
    c.epsilon = read_schedule(r, "epsilon", c.epsilon);
    c.total_steps = r.get<std::uint64_t>("total_steps", c.total_steps);
}

inline dqn::AdaDqnConfig parse_adadqn(ObjectReader r) {
    dqn::AdaDqnConfig c;
    read_replay_keys(r, c);
    c.networks = parse_networks(r.raw("networks"), r.field("networks"));
    c.epsilon_b = read_schedule(r, "epsilon_b", c.epsilon_b);
    if (r.has("selection")) c.selection_mode = parse_selection_mode(r.require<std::string>("selection"), r.field("selection"));
    if (r.has("behavior")) c.behavior_mode = parse_behavior_mode(r.require<std::string>("behavior"), r.field("behavior"));
    r.finish();
    return c;
}

inline sac::AdaSacConfig parse_adasac(ObjectReader r) {
    sac::AdaSacConfig c;
    c.critics = parse_networks(r.raw("critics"), r.field("critics"));
    if (r.has("actor")) {
        ObjectReader a = r.child("actor");
        if (a.has("hidden")) c.actor_arch.hidden = read_list<std::size_t>(a.raw("hidden"), a.field("hidden"));
        if (a.has("activation"))
            c.actor_arch.activation = parse_activation(a.require<std::string>("activation"), a.field("activation"));
        c.actor_optimizer = parse_optimizer(a, c.actor_optimizer);
        a.finish();
    }
    c.gamma = r.get("gamma", c.gamma);
    c.tau = r.get("tau", c.tau);
    c.alpha = r.get("alpha", c.alpha);
    c.utd = r.get<std::uint64_t>("utd", c.utd);
    c.batch_size = r.get<std::size_t>("batch_size", c.batch_size);
    c.buffer_capacity = r.get<std::size_t>("buffer_capacity", c.buffer_capacity);
    c.initial_fill = r.get<std::size_t>("initial_fill", c.initial_fill);
    c.epsilon_b = read_schedule(r, "epsilon_b", c.epsilon_b);
    c.total_steps = r.get<std::uint64_t>("total_steps", c.total_steps);
    c.selection_log_every = r.get<std::uint64_t>("selection_log_every", c.selection_log_every);
    r.finish();
    return c;
}

inline evo::SearchSpace parse_search_space(ObjectReader r) {
    evo::SearchSpace s;
    if (r.has("activations")) {
        s.activations.clear();
        for (const auto& n : read_list<std::string>(r.raw("activations"), r.field("activations")))
            s.activations.push_back(parse_activation(n, r.field("activations")));
    }
    if (r.has("optimizers")) {
        s.optimizers.clear();
        for (const auto& n : read_list<std::string>(r.raw("optimizers"), r.field("optimizers")))
            s.optimizers.push_back(at_field(r.field("optimizers"), [&] { return nn::optimizer_from_string(n); }));
    }
    if (r.has("losses")) {
        s.losses.clear();
        for (const auto& n : read_list<std::string>(r.raw("losses"), r.field("losses")))
            s.losses.push_back(at_field(r.field("losses"), [&] { return nn::loss_from_string(n); }));
    }
    s.lr_min = r.get("lr_min", s.lr_min);
    s.lr_max = r.get("lr_max", s.lr_max);
    s.min_layers = r.get<std::size_t>("min_layers", s.min_layers);
    s.max_layers = r.get<std::size_t>("max_layers", s.max_layers);
    s.min_width = r.get<std::size_t>("min_width", s.min_width);
    s.max_width = r.get<std::size_t>("max_width", s.max_width);
    s.layer_op_probability = r.get("layer_op_probability", s.layer_op_probability);
    s.neuron_step = r.get<std::size_t>("neuron_step", s.neuron_step);
    s.lr_log10_step = r.get("lr_log10_step", s.lr_log10_step);
    r.finish();
    return s;
}

inline evo::EvoConfig parse_evo(ObjectReader r) {
    evo::EvoConfig c;
    read_replay_keys(r, c);
    if (r.has("initial_population"))
        c.initial_population = parse_networks(r.raw("initial_population"), r.field("initial_population"));
    c.population_size = r.get<std::size_t>("population_size", c.population_size);
    if (r.has("search_space")) c.space = parse_search_space(r.child("search_space"));
    if (r.has("fitness")) {
        const auto f = r.require<std::string>("fitness");
        if (f == "neg_cum_loss") c.fitness = evo::FitnessKind::NegCumLoss;
        else if (f == "eval_return") c.fitness = evo::FitnessKind::EvalReturn;
        else throw ConfigError(r.field("fitness"), "expected neg_cum_loss or eval_return");
    }
    if (r.has("selection")) {
        const auto f = r.require<std::string>("selection");
        if (f == "tournament") c.selection = evo::SelectionScheme::Tournament;
        else if (f == "truncation") c.selection = evo::SelectionScheme::Truncation;
        else throw ConfigError(r.field("selection"), "expected tournament or truncation");
    }
    c.tournament_size = r.get<std::size_t>("tournament_size", c.tournament_size);
    c.hp_period = r.get<std::uint64_t>("M", c.hp_period);
    c.min_eval_steps = r.get<std::uint64_t>("min_eval_steps", c.min_eval_steps);
    r.finish();
    return c;
}

inline tabular::TabularRunConfig parse_tabular(ObjectReader r) {
    tabular::TabularRunConfig c;
    if (r.has("members")) {
        const Json& m = r.raw("members");
        if (!m.is_array() || m.empty()) throw ConfigError(r.field("members"), "expected a non-empty list");
        c.members.clear();
        for (std::size_t i = 0; i < m.size(); ++i) {
            ObjectReader e(m[i], r.field("members") + "[" + std::to_string(i) + "]");
            tabular::StepSchedule s;
            s.scale = e.get("scale", s.scale);
            s.exponent = e.get("exponent", s.exponent);
            e.finish();
            at_field(e.field("exponent"), [&] {
                s.validate();
                return 0;
            });
            c.members.push_back(s);
        }
    }
    c.selection_period = r.get<std::size_t>("selection_period", c.selection_period);
    c.total_updates = r.get<std::uint64_t>("total_updates", c.total_updates);
    c.init_scale = r.get("init_scale", c.init_scale);
    c.exact_selection = r.get("exact_selection", c.exact_selection);
    r.finish();
    if (c.selection_period == 0) throw ConfigError("agent.selection_period", "must be positive");
    if (c.total_updates == 0) throw ConfigError("agent.total_updates", "must be positive");
    return c;
}

// ---------------------------------------------------------------- environments

struct RandomMdpSpec {
    std::size_t states = 5;
    std::size_t actions = 2;
    std::size_t branching = 2;
    double reward_scale = 1.0;
    double gamma = 0.9;
    std::uint64_t seed = 0;
};

struct EnvConfig {
    std::string id = "cartpole";  // cartpole | pendulum | tabular
    env::CartPoleParams cartpole;
    env::PendulumParams pendulum;
    bool benchmark_mdp = true;
    RandomMdpSpec mdp;
    int horizon = 100;  // tabular episodes, when exposed as a discrete environment

    bool discrete() const { return id == "cartpole" || id == "tabular"; }

    env::TabularMDP make_mdp() const {
        if (benchmark_mdp) return tabular::benchmark_mdp();
        Rng rng = make_stream(mdp.seed, 0, "config-mdp");
        return env::random_mdp(mdp.states, mdp.actions, mdp.branching, mdp.reward_scale, mdp.gamma, rng);
    }

    std::unique_ptr<env::DiscreteEnvironment> make_discrete() const {
        if (id == "cartpole") return std::make_unique<env::CartPoleEnv>(cartpole);
        if (id == "tabular") return std::make_unique<env::TabularEnv>(make_mdp(), horizon);
        throw ContractViolation("environment '" + id + "' has no discrete action set");
    }
};

inline EnvConfig parse_env(ObjectReader r) {
    EnvConfig e;
    e.id = r.require<std::string>("id");
    if (e.id == "cartpole") {
        auto& p = e.cartpole;
        p.gravity = r.get("gravity", p.gravity);
        p.cart_mass = r.get("cart_mass", p.cart_mass);
        p.pole_mass = r.get("pole_mass", p.pole_mass);
        p.half_length = r.get("half_length", p.half_length);
        p.force_mag = r.get("force_mag", p.force_mag);
        p.dt = r.get("dt", p.dt);
        p.horizon = r.get("horizon", p.horizon);
        if (p.horizon <= 0) throw ConfigError("env.horizon", "must be positive");
    } else if (e.id == "pendulum") {
        auto& p = e.pendulum;
        p.gravity = r.get("gravity", p.gravity);
        p.mass = r.get("mass", p.mass);
        p.length = r.get("length", p.length);
        p.dt = r.get("dt", p.dt);
        p.max_torque = r.get("max_torque", p.max_torque);
        p.horizon = r.get("horizon", p.horizon);
        if (p.horizon <= 0) throw ConfigError("env.horizon", "must be positive");
    } else if (e.id == "tabular") {
        e.horizon = r.get("horizon", e.horizon);
        if (e.horizon <= 0) throw ConfigError("env.horizon", "must be positive");
        if (r.has("mdp")) {
            const Json& m = r.raw("mdp");
            if (m.is_string()) {
                if (m.get<std::string>() != "benchmark") throw ConfigError("env.mdp", "expected \"benchmark\" or an object");
            } else {
                ObjectReader mr(m, "env.mdp");
                e.benchmark_mdp = false;
                e.mdp.states = mr.get<std::size_t>("states", e.mdp.states);
                e.mdp.actions = mr.get<std::size_t>("actions", e.mdp.actions);
                e.mdp.branching = mr.get<std::size_t>("branching", e.mdp.branching);
                e.mdp.reward_scale = mr.get("reward_scale", e.mdp.reward_scale);
                e.mdp.gamma = mr.get("gamma", e.mdp.gamma);
                e.mdp.seed = mr.get<std::uint64_t>("seed", e.mdp.seed);
                mr.finish();
                at_field("env.mdp", [&] {
                    e.make_mdp().validate();
                    return 0;
                });
            }
        }
    } else {
        throw ConfigError("env.id", "expected cartpole, pendulum or tabular");
    }
    r.finish();
    return e;
}

// ---------------------------------------------------------------- experiment

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::string kind;  // tabular | adadqn | adasac | evo | ablation-suite
    std::string name;
    EnvConfig env;
    std::vector<std::uint64_t> seeds{0};
    std::uint64_t checkpoint_every = 1000;
    std::string output_dir = "runs";
    std::vector<std::string> variants;  // ablation-suite only, before dqn_k expansion

    tabular::TabularRunConfig tabular;
    dqn::AdaDqnConfig adadqn;
    sac::AdaSacConfig adasac;
    evo::EvoConfig evo;

    Json resolved;  // the configuration after overrides, as hashed
    std::string hash;
};

inline const std::vector<std::string>& known_variants() {
    static const std::vector<std::string> v{"dqn_k", "adadqn", "adadqn_eps0", "randdqn", "adadqn_max", "adadqn_lossprop"};
    return v;
}

/// Seeds as a list, or a count n meaning 0 .. n-1.
inline std::vector<std::uint64_t> parse_seeds(const Json& v) {
    if (v.is_number_integer()) {
        const auto n = ObjectReader::convert<std::uint64_t>(v, "seeds");
        if (n == 0) throw ConfigError("seeds", "need at least one seed");
        std::vector<std::uint64_t> out(n);
        for (std::uint64_t i = 0; i < n; ++i) out[i] = i;
        return out;
    }
    auto out = read_list<std::uint64_t>(v, "seeds");
    if (out.empty()) throw ConfigError("seeds", "need at least one seed");
    std::set<std::uint64_t> uniq(out.begin(), out.end());
    if (uniq.size() != out.size()) throw ConfigError("seeds", "duplicate seed");
    return out;
}

/// Validates every sub-config so that no run starts from a bad file.
inline ExperimentConfig parse_experiment(const Json& root) {
    ExperimentConfig c;
    ObjectReader r(root, "");
    c.schema_version = r.require<int>("schema_version");
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                                                " (this build reads " + std::to_string(kSchemaVersion) + ")");
    c.kind = r.require<std::string>("kind");
    c.name = r.get<std::string>("name", c.kind);
    c.env = parse_env(r.child("env"));
    if (r.has("seeds")) c.seeds = parse_seeds(r.raw("seeds"));
    c.checkpoint_every = r.get<std::uint64_t>("checkpoint_every", c.checkpoint_every);
    if (c.checkpoint_every == 0) throw ConfigError("checkpoint_every", "must be positive");
    c.output_dir = r.get<std::string>("output_dir", c.output_dir);

    if (c.kind == "tabular") {
        if (c.env.id != "tabular") throw ConfigError("env.id", "tabular experiments need the tabular environment");
        c.tabular = parse_tabular(r.child("agent"));
        c.tabular.checkpoint_every = c.checkpoint_every;
    } else if (c.kind == "adadqn" || c.kind == "ablation-suite") {
        if (!c.env.discrete()) throw ConfigError("env.id", "value-based agents need a discrete environment");
        c.adadqn = parse_adadqn(r.child("agent"));
        c.adadqn.checkpoint_every = c.checkpoint_every;
        c.adadqn.validate();
        if (c.kind == "ablation-suite") {
            c.variants = read_list<std::string>(r.raw("variants"), "variants");
            if (c.variants.empty()) throw ConfigError("variants", "need at least one variant");
            for (std::size_t i = 0; i < c.variants.size(); ++i) {
                const auto& kv = known_variants();
                if (std::find(kv.begin(), kv.end(), c.variants[i]) == kv.end())
                    throw ConfigError("variants[" + std::to_string(i) + "]", "unknown variant '" + c.variants[i] + "'");
            }
        }
    } else if (c.kind == "adasac") {
        if (c.env.id != "pendulum") throw ConfigError("env.id", "AdaSAC runs on the pendulum");
        c.adasac = parse_adasac(r.child("agent"));
        c.adasac.checkpoint_every = c.checkpoint_every;
        c.adasac.validate();
    } else if (c.kind == "evo") {
        if (!c.env.discrete()) throw ConfigError("env.id", "population agents need a discrete environment");
        c.evo = parse_evo(r.child("agent"));
        c.evo.checkpoint_every = c.checkpoint_every;
        c.evo.validate();
    } else {
        throw ConfigError("kind", "expected tabular, adadqn, adasac, evo or ablation-suite");
    }
    r.finish();
    c.resolved = root;
    c.hash = config_hash(root);
    return c;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    Json j = Json::parse(in, nullptr, false, true);
    if (j.is_discarded()) throw ConfigError(path, "not valid JSON");
    return j;
}

/// File, then overrides, then `seeds` count, then validation.
inline ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides = {},
                                        std::optional<std::uint64_t> seed_count = std::nullopt) {
    Json root = read_json_file(path);
    for (const auto& o : overrides) {
        const auto [key, value] = parse_override(o);
        apply_override(root, key, value);
    }
    if (seed_count) root["seeds"] = *seed_count;
    return parse_experiment(root);
}

}  // namespace adaqn::io

#pragma once

#include <string>
#include <vector>

#include "adaqn/dqn/theorem1.hpp"
#include "adaqn/nn/gradcheck.hpp"
#include "adaqn/sac/policy.hpp"
#include "adaqn/tabular/ensemble.hpp"

namespace adaqn::io {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Random 4-state dyadic MDPs with enumerated datasets; K random networks and
/// a random target per trial. Passes when every trial's argmins agree.
inline CheckResult verify_theorem1(std::size_t trials = 100, std::size_t k = 5, std::uint64_t seed = 0) {
    Rng rng = make_stream(seed, 0, "verify-theorem1");
    nn::MlpSpec spec{4, {6}, 2, nn::Activation::tanh()};
    std::size_t agree = 0, hypothesis = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto mdp = env::random_dyadic_mdp(4, 2, 1 + static_cast<unsigned>(uniform_index(rng, 4)), 1.0, 0.9, rng);
        std::vector<nn::ParamVector> nets;
        for (std::size_t i = 0; i < k; ++i) nets.push_back(nn::mlp_init(spec, rng));
        const auto target = nn::mlp_init(spec, rng);
        const auto rep = dqn::theorem1_oracle_check(nets, spec, target, mdp, dqn::enumerate_dataset(mdp));
        agree += rep.argmin_equal();
        hypothesis += rep.hypothesis_holds;
    }
    return {"theorem1", agree == trials && hypothesis == trials,
            std::to_string(agree) + "/" + std::to_string(trials) + " argmins agree, " + std::to_string(hypothesis) +
                "/" + std::to_string(trials) + " unbiased datasets"};
}

/// Every activation and loss pair on a two-hidden-layer network, then the actor objective.
inline std::vector<CheckResult> verify_gradients(double network_tol = 1e-5, double actor_tol = 1e-4, std::uint64_t seed = 0) {
    std::vector<CheckResult> out;
    Rng rng = make_stream(seed, 0, "verify-gradients");
    const nn::ActivationKind acts[] = {nn::ActivationKind::ReLU, nn::ActivationKind::Sigmoid, nn::ActivationKind::Tanh,
                                       nn::ActivationKind::LeakyReLU, nn::ActivationKind::SiLU};
    const nn::Loss losses[] = {nn::Loss::l2(), nn::Loss::l1(), nn::Loss::huber(), nn::Loss::log_cosh()};
    for (auto a : acts)
        for (const auto& loss : losses) {
            nn::MlpSpec spec{3, {6, 5}, 3, nn::Activation{a}};
            nn::ParamVector p = nn::mlp_init(spec, rng);
            for (const auto& L : spec.layers())
                for (std::size_t i = 0; i < L.fan_out; ++i)
                    p[L.bias_offset() + i] = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
            nn::Matrix x(8, 3);
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::uniform_real_distribution<double>(-1.5, 1.5)(rng);
            std::vector<std::size_t> acts_taken;
            std::vector<double> y;
            for (int i = 0; i < 8; ++i) {
                acts_taken.push_back(uniform_index(rng, 3));
                y.push_back(std::uniform_real_distribution<double>(-2.0, 2.0)(rng));
            }
            const auto res = nn::loss_and_grad(p, spec, x, acts_taken, y, loss);
            const auto numeric = nn::central_differences(
                [&](std::span<const double> q) { return nn::loss_and_grad(q, spec, x, acts_taken, y, loss).train_loss; },
                p, 1e-5);
            const double err = nn::max_relative_error(res.grad, numeric, 1e-6,
                                                      nn::central_difference_roundoff(res.train_loss, 1e-5));
            out.push_back({"grad " + nn::to_string(nn::Activation{a}) + "/" + nn::to_string(loss), err < network_tol,
                           "max rel err " + std::to_string(err)});
        }

    sac::GaussianPolicy pol{nn::MlpSpec{3, {8}, 2, nn::Activation::tanh()}, 1, 2.0};
    const nn::ParamVector actor = nn::mlp_init(pol.arch, rng);
    const nn::MlpSpec cspec{4, {6}, 1, nn::Activation::tanh()};
    const nn::ParamVector c1 = nn::mlp_init(cspec, rng), c2 = nn::mlp_init(cspec, rng);
    const sac::CriticRef refs[2] = {{c1, &cspec}, {c2, &cspec}};
    nn::Matrix states(6, 3);
    std::normal_distribution<double> d;
    for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = d(rng);
    const nn::Matrix noise = sac::standard_normal(6, 1, rng);
    const auto obj = sac::actor_objective(actor, pol, refs, states, noise, 0.2);
    const auto fd = nn::central_differences(
        [&](std::span<const double> p) { return sac::actor_objective(p, pol, refs, states, noise, 0.2).value; }, actor,
        1e-6);
    const double err = nn::max_relative_error(obj.grad, fd, 1e-6, nn::central_difference_roundoff(obj.value, 1e-6));
    out.push_back({"grad actor tanh-gaussian", err < actor_tol, "max rel err " + std::to_string(err)});
    return out;
}

/// The benchmark MDP from `seeds` independent seeds; each must end within `tol` of Q*.
inline CheckResult verify_tabular(std::size_t seeds = 20, std::uint64_t updates = 200000, double tol = 1e-2) {
    const auto mdp = tabular::benchmark_mdp();
    tabular::TabularRunConfig cfg;
    cfg.total_updates = updates;
    double worst = 0.0;
    std::size_t pass = 0;
    for (std::size_t j = 0; j < seeds; ++j) {
        Rng env_rng = make_stream(j, j, "env"), init_rng = make_stream(j, j, "init");
        const auto res = tabular::run_tabular(mdp, cfg, env_rng, init_rng);
        worst = std::max(worst, res.final_error);
        pass += res.final_error < tol;
    }
    return {"tabular convergence", pass == seeds,
            std::to_string(pass) + "/" + std::to_string(seeds) + " seeds below " + std::to_string(tol) +
                ", worst sup error " + std::to_string(worst)};
}

}  // namespace adaqn::io

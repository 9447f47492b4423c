#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"
#include "adaqn/nn/mlp.hpp"

namespace adaqn::sac {

using nn::Matrix;
using nn::ParamVector;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Numerically stable log(1 + exp(x)).
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// log(1 - tanh(u)^2) without cancellation for large |u|.
inline double log_one_minus_tanh_sq(double u) {
    return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

/// Tanh-squashed diagonal Gaussian. The network maps an observation to
/// (mean_1..mean_d, log_std_1..log_std_d); actions are scale * tanh(u).
struct GaussianPolicy {
    nn::MlpSpec arch;  // output_dim == 2 * action_dim
    std::size_t action_dim = 1;
    double action_scale = 1.0;

    void validate() const {
        arch.validate();
        if (action_dim == 0) throw ContractViolation("policy needs at least one action dimension");
        if (arch.output_dim != 2 * action_dim) throw ContractViolation("policy head must output mean and log_std");
        if (!(action_scale > 0.0)) throw ContractViolation("action scale must be positive");
    }
};

/// Reparameterised samples for a batch: u = mean + std * noise, a = scale * tanh(u).
struct PolicySample {
    Matrix mean;
    Matrix log_std;      // clamped
    Matrix raw_log_std;  // network output before clamping
    Matrix noise;
    Matrix pre_tanh;
    Matrix actions;
    std::vector<double> log_prob;
};

inline Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

/// Log-density of a = scale * tanh(u) with u ~ N(mean, std^2), written in terms of the noise.
inline double tanh_gaussian_log_prob(double noise, double log_std, double pre_tanh, double scale) {
    return -0.5 * noise * noise - log_std - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(scale) -
           log_one_minus_tanh_sq(pre_tanh);
}

/// Same density evaluated directly at an action in (-scale, scale).
inline double tanh_gaussian_density(double action, double mean, double log_std, double scale) {
    const double y = action / scale;
    if (!(std::abs(y) < 1.0)) return 0.0;
    const double u = std::atanh(y);
    const double sd = std::exp(log_std);
    const double z = (u - mean) / sd;
    return std::exp(tanh_gaussian_log_prob(z, log_std, u, scale));
}

inline PolicySample policy_sample_with_noise(std::span<const double> params, const GaussianPolicy& policy,
                                             const Matrix& states, const Matrix& noise,
                                             nn::ForwardCache* cache = nullptr) {
    nn::ForwardCache local;
    nn::ForwardCache& c = cache ? *cache : local;
    const Matrix& out = nn::mlp_forward_cached(params, policy.arch, states, c);
    const auto d = static_cast<Eigen::Index>(policy.action_dim);
    if (noise.rows() != out.rows() || noise.cols() != d) throw ContractViolation("noise shape mismatch");
    PolicySample s;
    s.mean = out.leftCols(d);
    s.raw_log_std = out.rightCols(d);
    s.log_std = s.raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    s.noise = noise;
    s.pre_tanh = s.mean + (s.log_std.array().exp() * noise.array()).matrix();
    s.actions = policy.action_scale * s.pre_tanh.array().tanh().matrix();
    s.log_prob.assign(static_cast<std::size_t>(out.rows()), 0.0);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            s.log_prob[static_cast<std::size_t>(i)] +=
                tanh_gaussian_log_prob(noise(i, j), s.log_std(i, j), s.pre_tanh(i, j), policy.action_scale);
    return s;
}

inline PolicySample policy_sample(std::span<const double> params, const GaussianPolicy& policy, const Matrix& states,
                                  Rng& rng, nn::ForwardCache* cache = nullptr) {
    const Matrix noise = standard_normal(states.rows(), static_cast<Eigen::Index>(policy.action_dim), rng);
    return policy_sample_with_noise(params, policy, states, noise, cache);
}

/// Deterministic action scale * tanh(mean), used for evaluation.
inline Matrix policy_mean_action(std::span<const double> params, const GaussianPolicy& policy, const Matrix& states) {
    const Matrix out = nn::mlp_forward(params, policy.arch, states);
    return policy.action_scale * out.leftCols(static_cast<Eigen::Index>(policy.action_dim)).array().tanh().matrix();
}

/// [states | actions] as critic input.
inline Matrix critic_input(const Matrix& states, const Matrix& actions) {
    Matrix x(states.rows(), states.cols() + actions.cols());
    x << states, actions;
    return x;
}

struct CriticRef {
    std::span<const double> params;
    const nn::MlpSpec* spec;
};

struct ActorObjective {
    double value = 0.0;  // mean over the batch of alpha * log_pi - min_k Q_k
    ParamVector grad;
};

/// Actor objective with fixed noise and its exact gradient. The minimum over
/// `critics` is taken per sample (lowest index on ties); dQ/da comes from the
/// critic's input gradient.
inline ActorObjective actor_objective(std::span<const double> params, const GaussianPolicy& policy,
                                      std::span<const CriticRef> critics, const Matrix& states, const Matrix& noise,
                                      double alpha) {
    if (critics.empty()) throw ContractViolation("actor objective needs at least one critic");
    const auto batch = states.rows();
    if (batch == 0) throw ContractViolation("empty batch");
    nn::ForwardCache pcache;
    const PolicySample smp = policy_sample_with_noise(params, policy, states, noise, &pcache);
    const Matrix x = critic_input(states, smp.actions);
    const auto d = static_cast<Eigen::Index>(policy.action_dim);

    std::vector<Matrix> q(critics.size());
    std::vector<nn::ForwardCache> caches(critics.size());
    for (std::size_t k = 0; k < critics.size(); ++k) q[k] = nn::mlp_forward_cached(critics[k].params, *critics[k].spec, x, caches[k]);

    std::vector<std::size_t> pick(static_cast<std::size_t>(batch), 0);
    ActorObjective res;
    for (Eigen::Index i = 0; i < batch; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < critics.size(); ++k)
            if (q[k](i, 0) < q[best](i, 0)) best = k;
        pick[static_cast<std::size_t>(i)] = best;
        res.value += alpha * smp.log_prob[static_cast<std::size_t>(i)] - q[best](i, 0);
    }
    const double inv = 1.0 / static_cast<double>(batch);
    res.value *= inv;

    // dQ/da of the selected critic per sample.
    Matrix dq_da = Matrix::Zero(batch, d);
    for (std::size_t k = 0; k < critics.size(); ++k) {
        Matrix seed = Matrix::Zero(batch, 1);
        bool used = false;
        for (Eigen::Index i = 0; i < batch; ++i)
            if (pick[static_cast<std::size_t>(i)] == k) {
                seed(i, 0) = 1.0;
                used = true;
            }
        if (!used) continue;
        ParamVector scratch(critics[k].params.size(), 0.0);
        Matrix in_grad;
        nn::mlp_backward(critics[k].params, *critics[k].spec, caches[k], seed, scratch, &in_grad);
        dq_da += in_grad.rightCols(d);
    }

    Matrix dout(batch, 2 * d);
    for (Eigen::Index i = 0; i < batch; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const double u = smp.pre_tanh(i, j);
            const double th = std::tanh(u);
            const double sigma_xi = std::exp(smp.log_std(i, j)) * smp.noise(i, j);
            const double da_du = policy.action_scale * (1.0 - th * th);
            const double dmean = alpha * 2.0 * th - dq_da(i, j) * da_du;
            double dlogstd = alpha * (-1.0 + 2.0 * th * sigma_xi) - dq_da(i, j) * da_du * sigma_xi;
            const double raw = smp.raw_log_std(i, j);
            if (raw < kLogStdMin || raw > kLogStdMax) dlogstd = 0.0;
            dout(i, j) = dmean * inv;
            dout(i, d + j) = dlogstd * inv;
        }
    res.grad.assign(params.size(), 0.0);
    nn::mlp_backward(params, policy.arch, pcache, dout, res.grad);
    return res;
}

}  // namespace adaqn::sac

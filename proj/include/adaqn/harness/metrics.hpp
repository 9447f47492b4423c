#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"

namespace adaqn::harness {

/// Mean of the central half of the values. Sorted value i owns the unit
/// interval [i, i + 1) and is weighted by its overlap with [n/4, 3n/4].
inline double iqm(std::span<const double> values) {
    if (values.empty()) throw ContractViolation("IQM of an empty set");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    const double lo = 0.25 * n, hi = 0.75 * n;
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = std::max(lo, static_cast<double>(i));
        const double b = std::min(hi, static_cast<double>(i + 1));
        if (b > a) sum += (b - a) * v[i];
    }
    return sum / (hi - lo);
}

inline double mean(std::span<const double> values) {
    if (values.empty()) throw ContractViolation("mean of an empty set");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// Trapezoidal integral divided by the step span.
inline double auc(std::span<const double> steps, std::span<const double> curve) {
    if (steps.size() != curve.size()) throw ContractViolation("steps and curve must align");
    if (steps.size() < 2) throw ContractViolation("AUC needs at least two checkpoints");
    double area = 0.0;
    for (std::size_t i = 1; i < steps.size(); ++i) {
        const double dt = steps[i] - steps[i - 1];
        if (!(dt > 0.0)) throw ContractViolation("checkpoints must be strictly increasing");
        area += 0.5 * dt * (curve[i] + curve[i - 1]);
    }
    return area / (steps.back() - steps.front());
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

/// Linear-interpolated percentile (q in [0, 1]) of already sorted values.
inline double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ContractViolation("quantile of an empty set");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, sorted.size() - 1);
    return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
}

using Statistic = std::function<double(std::span<const double>)>;

/// Percentile bootstrap: each stratum is resampled with replacement on its
/// own, the statistic is computed on the pooled resample.
inline Interval bootstrap_ci(const std::vector<std::vector<double>>& strata, std::size_t n_resamples, double level,
                             Rng& rng, const Statistic& statistic = iqm) {
    if (strata.empty()) throw ContractViolation("bootstrap needs at least one stratum");
    for (const auto& s : strata)
        if (s.empty()) throw ContractViolation("every stratum needs at least one value");
    if (n_resamples == 0) throw ContractViolation("bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw ContractViolation("confidence level must lie in (0, 1)");
    std::vector<double> stats;
    stats.reserve(n_resamples);
    std::vector<double> pooled;
    for (std::size_t r = 0; r < n_resamples; ++r) {
        pooled.clear();
        for (const auto& s : strata)
            for (std::size_t i = 0; i < s.size(); ++i) pooled.push_back(s[uniform_index(rng, s.size())]);
        stats.push_back(statistic(pooled));
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - level;
    return {sorted_quantile(stats, 0.5 * alpha), sorted_quantile(stats, 1.0 - 0.5 * alpha)};
}

/// Percentile bootstrap interval of mean(a) - mean(b), resampling both groups independently.
inline Interval bootstrap_mean_difference_ci(std::span<const double> a, std::span<const double> b,
                                             std::size_t n_resamples, double level, Rng& rng) {
    if (a.empty() || b.empty()) throw ContractViolation("both groups need values");
    std::vector<double> stats;
    stats.reserve(n_resamples);
    for (std::size_t r = 0; r < n_resamples; ++r) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) sa += a[uniform_index(rng, a.size())];
        for (std::size_t i = 0; i < b.size(); ++i) sb += b[uniform_index(rng, b.size())];
        stats.push_back(sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size()));
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - level;
    return {sorted_quantile(stats, 0.5 * alpha), sorted_quantile(stats, 1.0 - 0.5 * alpha)};
}

/// s[k][i][j][t]: hyperparameter k, task i, seed j, checkpoint t.
using ScoreTensor = std::vector<std::vector<std::vector<std::vector<double>>>>;

struct TensorShape {
    std::size_t hyperparams = 0, tasks = 0, seeds = 0, checkpoints = 0;
};

inline TensorShape check_tensor(const ScoreTensor& s) {
    TensorShape sh;
    sh.hyperparams = s.size();
    if (sh.hyperparams == 0) throw ContractViolation("score tensor has no hyperparameters");
    sh.tasks = s[0].size();
    if (sh.tasks == 0) throw ContractViolation("score tensor has no tasks");
    sh.seeds = s[0][0].size();
    if (sh.seeds == 0) throw ContractViolation("score tensor has no seeds");
    sh.checkpoints = s[0][0][0].size();
    for (const auto& k : s) {
        if (k.size() != sh.tasks) throw ContractViolation("score tensor is not rectangular over tasks");
        for (const auto& i : k) {
            if (i.size() != sh.seeds) throw ContractViolation("score tensor is not rectangular over seeds");
            for (const auto& j : i)
                if (j.size() != sh.checkpoints) throw ContractViolation("score tensor is not rectangular over checkpoints");
        }
    }
    return sh;
}

struct Curve {
    std::vector<double> steps;
    std::vector<double> values;
};

/// IQM over (task, seed) at every checkpoint for one hyperparameter.
inline Curve iqm_curve(const ScoreTensor& s, std::size_t k, std::span<const double> steps) {
    const TensorShape sh = check_tensor(s);
    if (steps.size() != sh.checkpoints) throw ContractViolation("step grid does not match the tensor");
    Curve c{{steps.begin(), steps.end()}, {}};
    std::vector<double> pool;
    for (std::size_t t = 0; t < sh.checkpoints; ++t) {
        pool.clear();
        for (std::size_t i = 0; i < sh.tasks; ++i)
            for (std::size_t j = 0; j < sh.seeds; ++j) pool.push_back(s[k][i][j][t]);
        c.values.push_back(iqm(pool));
    }
    return c;
}

/// Grid search: per task and checkpoint the hyperparameter with the best
/// seed-IQM is picked, the IQM over (task, seed) of its scores is placed at
/// abscissa t * K.
inline Curve grid_search_curve(const ScoreTensor& s, std::span<const double> steps) {
    const TensorShape sh = check_tensor(s);
    if (steps.size() != sh.checkpoints) throw ContractViolation("step grid does not match the tensor");
    Curve c;
    const double stretch = static_cast<double>(sh.hyperparams);
    std::vector<double> pool;
    for (std::size_t t = 0; t < sh.checkpoints; ++t) {
        pool.clear();
        for (std::size_t i = 0; i < sh.tasks; ++i) {
            std::size_t best = 0;
            double best_iqm = 0.0;
            for (std::size_t k = 0; k < sh.hyperparams; ++k) {
                std::vector<double> seeds;
                for (std::size_t j = 0; j < sh.seeds; ++j) seeds.push_back(s[k][i][j][t]);
                const double v = iqm(seeds);
                if (k == 0 || v > best_iqm) {
                    best = k;
                    best_iqm = v;
                }
            }
            for (std::size_t j = 0; j < sh.seeds; ++j) pool.push_back(s[best][i][j][t]);
        }
        c.steps.push_back(steps[t] * stretch);
        c.values.push_back(iqm(pool));
    }
    return c;
}

/// Score, at overall position p in the concatenated trials, of a search that
/// runs the hyperparameters of `order` one after the other. Each trial spans
/// the full checkpoint grid; trial r covers positions [r * n_t, (r + 1) * n_t).
/// The value at a position is the best score found so far: the running score
/// of the current trial against the final scores of the completed ones.
inline double sequential_search_score(const std::vector<std::vector<double>>& per_k, std::span<const std::size_t> order,
                                      std::size_t position) {
    const std::size_t nt = per_k.front().size();
    const std::size_t trial = position / nt;
    const std::size_t t = position % nt;
    double best = per_k[order[trial]][t];
    for (std::size_t r = 0; r < trial; ++r) best = std::max(best, per_k[order[r]].back());
    return best;
}

struct RandomSearchOptions {
    std::size_t trials = 0;           // hyperparameters tried in sequence; 0 means K
    bool with_replacement = false;
};

/// Per-(task, seed) Monte Carlo estimate with its standard error, before IQM aggregation.
struct RandomSearchEstimate {
    Curve curve;                                     // IQM over (task, seed) of the expectations
    std::vector<std::vector<std::vector<double>>> expectation;  // [i][j][position]
    std::vector<std::vector<std::vector<double>>> std_error;    // [i][j][position]
};

/// Random search: expected score of trying uniformly drawn hyperparameters
/// one after the other, each for the full budget, estimated by Monte Carlo
/// over orderings. Abscissa r * steps.back() + steps[t].
inline RandomSearchEstimate random_search_estimate(const ScoreTensor& s, std::span<const double> steps,
                                                   std::size_t n_mc, Rng& rng, RandomSearchOptions opt = {}) {
    const TensorShape sh = check_tensor(s);
    if (steps.size() != sh.checkpoints) throw ContractViolation("step grid does not match the tensor");
    if (n_mc == 0) throw ContractViolation("Monte Carlo needs at least one sample");
    const std::size_t trials = opt.trials == 0 ? sh.hyperparams : opt.trials;
    if (!opt.with_replacement && trials > sh.hyperparams)
        throw ContractViolation("cannot run more distinct trials than hyperparameters without replacement");
    const std::size_t positions = trials * sh.checkpoints;

    RandomSearchEstimate est;
    est.expectation.assign(sh.tasks, std::vector<std::vector<double>>(sh.seeds, std::vector<double>(positions, 0.0)));
    est.std_error = est.expectation;
    // Welford accumulators: est.expectation holds the running mean, m2 the squared deviations.
    std::vector<std::vector<std::vector<double>>> m2 = est.expectation;

    std::vector<std::size_t> order(sh.hyperparams);
    for (std::size_t m = 0; m < n_mc; ++m) {
        // The same ordering is shared by all (task, seed) pairs of one sample.
        if (opt.with_replacement) {
            order.resize(trials);
            for (auto& o : order) o = uniform_index(rng, sh.hyperparams);
        } else {
            order.resize(sh.hyperparams);
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t r = 0; r < trials; ++r) std::swap(order[r], order[r + uniform_index(rng, sh.hyperparams - r)]);
        }
        for (std::size_t i = 0; i < sh.tasks; ++i)
            for (std::size_t j = 0; j < sh.seeds; ++j) {
                std::vector<std::vector<double>> per_k(sh.hyperparams);
                for (std::size_t k = 0; k < sh.hyperparams; ++k) per_k[k] = s[k][i][j];
                for (std::size_t p = 0; p < positions; ++p) {
                    const double v = sequential_search_score(per_k, order, p);
                    double& mu = est.expectation[i][j][p];
                    const double delta = v - mu;
                    mu += delta / static_cast<double>(m + 1);
                    m2[i][j][p] += delta * (v - mu);
                }
            }
    }
    const double n = static_cast<double>(n_mc);
    for (std::size_t i = 0; i < sh.tasks; ++i)
        for (std::size_t j = 0; j < sh.seeds; ++j)
            for (std::size_t p = 0; p < positions; ++p)
                est.std_error[i][j][p] = n > 1 ? std::sqrt(m2[i][j][p] / (n - 1.0) / n) : 0.0;

    std::vector<double> pool;
    for (std::size_t p = 0; p < positions; ++p) {
        pool.clear();
        for (std::size_t i = 0; i < sh.tasks; ++i)
            for (std::size_t j = 0; j < sh.seeds; ++j) pool.push_back(est.expectation[i][j][p]);
        const std::size_t r = p / sh.checkpoints;
        est.curve.steps.push_back(static_cast<double>(r) * steps.back() + steps[p % sh.checkpoints]);
        est.curve.values.push_back(iqm(pool));
    }
    return est;
}

inline Curve random_search_curve(const ScoreTensor& s, std::span<const double> steps, std::size_t n_mc, Rng& rng,
                                 RandomSearchOptions opt = {}) {
    return random_search_estimate(s, steps, n_mc, rng, opt).curve;
}

/// Prefix maximum.
inline std::vector<double> running_max_curve(std::span<const double> series) {
    std::vector<double> out(series.begin(), series.end());
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);
    return out;
}

/// Pointwise min and max across population members.
inline std::pair<std::vector<double>, std::vector<double>> population_min_max_curves(
    const std::vector<std::vector<double>>& members) {
    if (members.empty()) throw ContractViolation("need at least one member");
    std::vector<double> lo = members[0], hi = members[0];
    for (const auto& m : members) {
        if (m.size() != lo.size()) throw ContractViolation("member series must share a length");
        for (std::size_t t = 0; t < m.size(); ++t) {
            lo[t] = std::min(lo[t], m[t]);
            hi[t] = std::max(hi[t], m[t]);
        }
    }
    return {lo, hi};
}

/// Series of the seed with the lowest AUC.
inline std::size_t worst_seed(const std::vector<std::vector<double>>& per_seed, std::span<const double> steps) {
    if (per_seed.empty()) throw ContractViolation("need at least one seed");
    std::size_t worst = 0;
    double worst_auc = auc(steps, per_seed[0]);
    for (std::size_t j = 1; j < per_seed.size(); ++j) {
        const double a = auc(steps, per_seed[j]);
        if (a < worst_auc) {
            worst = j;
            worst_auc = a;
        }
    }
    return worst;
}

/// Shannon entropy (nats) of a histogram.
inline double entropy(std::span<const double> counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (double c : counts)
        if (c > 0.0) h -= (c / total) * std::log(c / total);
    return h;
}

}  // namespace adaqn::harness

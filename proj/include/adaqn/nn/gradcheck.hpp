#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace adaqn::nn {

/// Central differences of `f` at `x`, one coordinate at a time.
inline std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                               std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Rounding error of a central difference when f(x + h) and f(x - h) are
/// each off by `ulps` units in the last place of |f(x)|.
inline double central_difference_roundoff(double f_at_x, double h, double ulps = 4.0) {
    const double a = std::abs(f_at_x);
    const double ulp = std::nextafter(a, std::numeric_limits<double>::infinity()) - a;
    return ulps * ulp / (2.0 * h);
}

/// max_i max(0, |a_i - b_i| - slack) / max(|a_i|, |b_i|, floor)
inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6,
                                 double slack = 0.0) {
    double worst = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::max(0.0, std::abs(a[i] - b[i]) - slack) / denom);
    }
    return worst;
}

}  // namespace adaqn::nn

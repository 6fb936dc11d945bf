#include "probcoh/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "probcoh/error.hpp"
#include "probcoh/random.hpp"

namespace probcoh::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw ValidationError("mean of an empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw ValidationError("sample variance needs at least two values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double student_t_quantile(double p, double dof) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

Interval student_t_interval(std::span<const double> xs, double level) {
    const double m = mean(xs);
    if (xs.size() < 2) {
        const double inf = std::numeric_limits<double>::infinity();
        return {-inf, inf};
    }
    const double n = static_cast<double>(xs.size());
    const double se = std::sqrt(sample_variance(xs) / n);
    const double half = student_t_quantile(0.5 + level / 2.0, n - 1.0) * se;
    // Keep lo <= mean <= hi exactly when se == 0.
    return {std::min(m, m - half), std::max(m, m + half)};
}

Interval bootstrap_percentile_interval(std::span<const double> xs, std::size_t resamples,
                                       std::uint64_t seed, double level) {
    const double m = mean(xs);
    if (resamples == 0) throw ValidationError("bootstrap needs at least one resample");
    StreamRng rng = StreamKey(seed).add("bootstrap").rng();
    std::vector<double> means(resamples);
    for (auto& out : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) sum += xs[rng.below(xs.size())];
        out = sum / static_cast<double>(xs.size());
    }
    std::sort(means.begin(), means.end());
    // Type-7 quantiles (linear interpolation between order statistics).
    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(means.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, means.size() - 1);
        return means[lo] + (h - static_cast<double>(lo)) * (means[hi] - means[lo]);
    };
    const double alpha = 1.0 - level;
    return {std::min(m, quantile(alpha / 2.0)), std::max(m, quantile(1.0 - alpha / 2.0))};
}

} // namespace probcoh::stats

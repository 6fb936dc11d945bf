#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace probcoh::stats {

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

double mean(std::span<const double> xs);
// Unbiased (n - 1) sample variance; requires n >= 2.
double sample_variance(std::span<const double> xs);

double student_t_quantile(double p, double dof);

// mean +/- t_{(1+level)/2, n-1} * sd / sqrt(n). With fewer than two values
// the interval is unbounded.
Interval student_t_interval(std::span<const double> xs, double level = 0.95);

// Percentile interval of the resampled means. Deterministic in seed.
Interval bootstrap_percentile_interval(std::span<const double> xs, std::size_t resamples,
                                       std::uint64_t seed, double level = 0.95);

} // namespace probcoh::stats

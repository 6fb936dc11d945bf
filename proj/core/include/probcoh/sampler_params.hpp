#pragma once

#include <cstdint>

namespace probcoh {

// Bayesian Sampler: Beta(beta, beta) prior updated with N Bernoulli samples.
// N = 0 is allowed and yields the prior mean 0.5 for every query.
struct SamplerParams {
    std::uint32_t n = 0;
    double beta = 1.0;

    // Throws ValidationError unless beta is a positive finite number.
    void validate() const;
};

// Probability Theory plus Noise: N samples, each misread with probability d.
struct PTNParams {
    std::uint32_t n = 1;
    double d = 0.0;

    // Throws ValidationError unless n >= 1 and 0 <= d <= 0.5.
    void validate() const;
};

} // namespace probcoh

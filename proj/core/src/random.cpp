#include "probcoh/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace probcoh {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

StreamRng::result_type StreamRng::operator()() noexcept {
    // Two rounds of mixing over (key, counter) give a counter-based generator.
    const std::uint64_t c = counter_++;
    return splitmix64(splitmix64(key_ ^ (c * 0xd1342543de82ef95ULL)) + c);
}

double StreamRng::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double StreamRng::uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
}

double StreamRng::normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double StreamRng::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw std::invalid_argument("gamma shape must be positive");
    }
    if (shape < 1.0) {
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v;
        }
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

std::uint64_t StreamRng::binomial(std::uint64_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("binomial probability outside [0, 1]");
    }
    if (n == 0 || p == 0.0) {
        return 0;
    }
    if (p == 1.0) {
        return n;
    }
    const bool flip = p > 0.5;
    const double q = flip ? 1.0 - p : p;
    const double odds = q / (1.0 - q);
    const double nd = static_cast<double>(n);

    // Inversion anchored at the mode so that (1-q)^n never underflows.
    auto mode = static_cast<std::uint64_t>(std::floor((nd + 1.0) * q));
    mode = std::min(mode, n);
    const double md = static_cast<double>(mode);
    const double pmf_mode = std::exp(std::lgamma(nd + 1.0) - std::lgamma(md + 1.0) -
                                     std::lgamma(nd - md + 1.0) + md * std::log(q) +
                                     (nd - md) * std::log1p(-q));

    double cdf_mode = pmf_mode;
    {
        double t = pmf_mode;
        for (std::uint64_t k = mode; k > 0; --k) {
            t *= static_cast<double>(k) / (static_cast<double>(n - k) + 1.0) / odds;
            cdf_mode += t;
            if (t < 1e-20 * cdf_mode) {
                break;
            }
        }
    }

    const double u = uniform();
    std::uint64_t k = mode;
    if (u <= cdf_mode) {
        double c = cdf_mode;
        double t = pmf_mode;
        while (k > 0 && c - t >= u) {
            c -= t;
            t *= static_cast<double>(k) / (static_cast<double>(n - k) + 1.0) / odds;
            --k;
        }
    } else {
        double c = cdf_mode;
        double t = pmf_mode;
        while (c < u && k < n) {
            t *= (static_cast<double>(n - k) / static_cast<double>(k + 1)) * odds;
            ++k;
            c += t;
        }
    }
    return flip ? n - k : k;
}

std::uint64_t StreamRng::below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = (*this)();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

} // namespace probcoh

#pragma once

// Counter-based random streams.
//
// Every stream is identified by a 64-bit key; the n-th output of a stream is
// a pure function of (key, n). Keys are derived by hashing a seed together
// with a label (pair id, query, repetition, ...), so a simulated judgment
// depends only on its own coordinates and never on evaluation order.
//
// All samplers here are implemented in-house rather than through <random>
// distributions, whose outputs differ between standard libraries.

#include <cstdint>
#include <limits>
#include <string_view>

namespace probcoh {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// FNV-1a folded through splitmix64; stable across platforms.
std::uint64_t hash_label(std::string_view label) noexcept;

std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) noexcept;

class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept;
    // Uniform on (0, 1).
    double uniform_open() noexcept;
    double normal() noexcept;
    // Marsaglia-Tsang; shape > 0, unit scale.
    double gamma(double shape);
    // Inversion by sequential search over the pmf. n >= 0, p in [0, 1].
    std::uint64_t binomial(std::uint64_t n, double p);
    // Uniform integer in [0, n). n > 0.
    std::uint64_t below(std::uint64_t n) noexcept;

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Builds a stream key from a seed and any number of labels.
class StreamKey {
public:
    explicit StreamKey(std::uint64_t seed) noexcept : value_(splitmix64(seed)) {}

    StreamKey& add(std::string_view label) noexcept {
        value_ = combine_keys(value_, hash_label(label));
        return *this;
    }
    StreamKey& add(std::uint64_t n) noexcept {
        value_ = combine_keys(value_, splitmix64(n ^ 0x6a09e667f3bcc909ULL));
        return *this;
    }

    std::uint64_t value() const noexcept { return value_; }
    StreamRng rng() const noexcept { return StreamRng(value_); }

private:
    std::uint64_t value_;
};

} // namespace probcoh

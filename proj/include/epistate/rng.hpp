#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "epistate/common.hpp"

namespace epistate {

// SplitMix64 step. Statistically solid for simulation workloads and fully
// portable, which matters because report byte-identity is a contract.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view text) {
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

// Seed derivation for named substreams. Streams are split per
// (world, fork, channel, tick, ...) by chaining labels/indices, so that
// counterfactual forks leave unrelated sampling untouched.
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
    uint64_t state = base ^ fnv1a64(label);
    return splitmix64(state);
}

inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    uint64_t state = base ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return splitmix64(state);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return next_double() < p;
    }

    // Index sampled proportionally to non-negative weights.
    std::size_t pick_weighted(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) fail(ErrorCode::InvalidArgument, "pick_weighted: weights sum to zero");
        double u = next_double() * total;
        double cumulative = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            cumulative += weights[i];
            if (u < cumulative) return i;
        }
        return weights.size() - 1;
    }

    // Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) {
        if (hi < lo) fail(ErrorCode::InvalidArgument, "uniform_int: empty range");
        const uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    uint64_t state_;
};

}  // namespace epistate

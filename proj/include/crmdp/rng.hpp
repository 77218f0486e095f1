#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace crmdp {

/// Mixes a 64-bit value through the splitmix64 finalizer.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/**
 * Pure derivation of a child seed from (base seed, stream index).
 *
 * This is the seed-stream contract used everywhere: run i of an experiment
 * with base seed b always uses derive_seed(b, i), independent of scheduling
 * or thread count.
 */
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    return splitmix64(base + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/**
 * Seeded random stream with explicit, implementation-pinned draw methods.
 *
 * std::mt19937_64 output is fully specified by the standard; the helpers
 * below avoid std::uniform_*_distribution so that draw sequences do not
 * depend on the standard library's distribution internals.
 */
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    int uniform_int(int n) {
        // Rejection sampling keeps the draw unbiased and deterministic.
        uint64_t bound = uint64_t(n);
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return int(x % bound);
    }

    /// Samples an index from an unnormalized weight vector.
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform01() * total;
        double acc = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return int(i);
        }
        return int(weights.size()) - 1;
    }

  private:
    std::mt19937_64 gen_;
};

} // namespace crmdp

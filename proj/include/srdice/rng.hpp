#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace srdice {

/// Seedable generator with platform-independent draws.
///
/// std::mt19937_64 has a standard-mandated output sequence, but the standard
/// distributions do not, so every draw here is derived from raw 64-bit words.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(mix(seed)) {}

    /// Independent stream for (master seed, index), e.g. one per trial.
    static Rng derive(std::uint64_t master, std::uint64_t stream) {
        return Rng(mix(master) ^ mix(stream + 0x9e3779b97f4a7c15ULL));
    }

    /// Child generator drawn from this one.
    Rng split() { return Rng(next()); }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    /// Standard normal via Box-Muller; caches the second variate.
    double normal();

    /// Sample an index from unnormalized nonnegative weights.
    std::size_t categorical(std::span<const double> weights);

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace srdice

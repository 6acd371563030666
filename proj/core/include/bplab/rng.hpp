#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace bplab {

/// Seeded random source shared by the generators, samplers and protocols.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
/// builds its own uniform double on top of it, so results do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);

    /// Draws an index from an unnormalized nonnegative weight vector.
    std::size_t categorical(std::span<const double> weights);

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent per-run streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for stream `stream` of run `run` under a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream) {
    return mix_seed(mix_seed(mix_seed(master) ^ run) ^ (stream + 0x51ed270b27ULL));
}

}  // namespace bplab

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace vpdeq {

/// Seedable random source whose output is bit-identical on every platform.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// The standard distributions are not (their algorithms are left to the
/// library vendor), so the transforms below are implemented here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard real Gaussian (Marsaglia polar method).
    double normal();

    /// Complex Gaussian with E|z|^2 = 1: real and imaginary parts i.i.d. N(0, 1/2).
    std::complex<double> complex_normal();

    /// Uniform integer in [0, bound), unbiased by rejection. bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for an independent sub-stream: splitmix64(seed ^ splitmix64(stream + 1)).
/// Used to give every Monte Carlo draw its own generator so results do not
/// depend on how draws are scheduled across threads.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace vpdeq

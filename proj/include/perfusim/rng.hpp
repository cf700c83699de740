#ifndef PERFUSIM_RNG_HPP
#define PERFUSIM_RNG_HPP

#include <cstdint>
#include <random>

namespace perfusim {

/// Seeded generator with explicit draw methods. Distributions are hand-rolled
/// on top of mt19937_64 so that a given seed reproduces the same stream
/// independent of the standard library's <random> distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection keeps the draw unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % n;
    }

    /// Derive an independent stream (used to decouple sub-phases).
    Rng split(std::uint64_t salt) {
        return Rng(gen_() ^ (0x9e3779b97f4a7c15ull * (salt + 1)));
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace perfusim

#endif

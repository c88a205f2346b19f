#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace restructure {

/// Seeded random stream. Every consumer gets its own stream derived from the
/// scenario seed and a tag tuple, so adding draws in one place never shifts
/// another consumer's sequence.
class Rng {
public:
    Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

    double uniform() { return uniform_(engine_); }
    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }
    double normal(double mean, double sd);
    double exponential(double mean);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic standard normal keyed by (seed, key). Lets pure functions of
/// time carry reproducible noise without threading a stream through them.
double keyed_normal(std::uint64_t seed, std::uint64_t key) noexcept;

}  // namespace restructure

#include "restructure/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace restructure {

Rng::Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * tags.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto t : tags) {
        push(t);
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

double Rng::normal(double mean, double sd) {
    if (sd <= 0.0) {
        return mean;
    }
    std::normal_distribution<double> dist(mean, sd);
    return dist(engine_);
}

double Rng::exponential(double mean) {
    if (mean <= 0.0) {
        return 0.0;
    }
    std::exponential_distribution<double> dist(1.0 / mean);
    return dist(engine_);
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double keyed_normal(std::uint64_t seed, std::uint64_t key) noexcept {
    const std::uint64_t a = mix64(seed ^ mix64(key));
    const std::uint64_t b = mix64(a);
    // 53-bit uniforms in (0, 1].
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace restructure

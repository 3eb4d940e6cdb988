#include "cpgg/rng.hpp"

#include <cmath>

namespace cpgg {

double SplitMix64::next_exp() {
    // 1 - u in (0,1], so the log is finite and the result nonnegative.
    return -std::log(1.0 - next_unit());
}

std::uint64_t SplitMix64::next_below(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    std::uint64_t threshold = (0ull - n) % n;
    for (;;) {
        std::uint64_t x = next_u64();
        if (x >= threshold) return x % n;
    }
}

namespace {

// Knuth's product method; only sound for small means (exp(-mean) > 0).
std::uint64_t poisson_small(SplitMix64& rng, double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.next_unit();
    } while (p > limit);
    return k - 1;
}

}  // namespace

std::uint64_t SplitMix64::next_poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    // Additivity: split large means into chunks the product method can handle.
    constexpr double kChunk = 32.0;
    std::uint64_t total = 0;
    while (mean > kChunk) {
        total += poisson_small(*this, kChunk);
        mean -= kChunk;
    }
    return total + poisson_small(*this, mean);
}

}  // namespace cpgg

#pragma once

#include <cstdint>

namespace cpgg {

// 64-bit mixing finalizer (SplitMix64). Bijective, so distinct inputs give
// distinct outputs.
constexpr std::uint64_t GOLDEN_GAMMA = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// Seed for the RNG stream `stream_index` under `master`. Streams with
// distinct indices are statistically independent and bit-exact across runs.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream_index) {
    return mix64(master + stream_index * GOLDEN_GAMMA);
}

inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;  // [0,1)
}

// Counter-based uniform for an unordered key pair. Exact and accelerated
// graph samplers consume the same value per pair, which makes edge decisions
// replayable.
inline double pair_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    if (a > b) { std::uint64_t t = a; a = b; b = t; }
    std::uint64_t h = mix64(seed ^ 0xD1B54A32D192ED03ull);
    h = mix64(h + a * GOLDEN_GAMMA);
    h = mix64(h ^ (b + 0x8CB92BA72F3D8DD7ull));
    return u64_to_unit(h);
}

// Small counter-based generator; state advances by the golden gamma and the
// output is the mixed counter.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() { return mix64(state_ += GOLDEN_GAMMA); }
    double next_unit() { return u64_to_unit(next_u64()); }             // [0,1)
    double next_open() {                                               // (0,1)
        double u;
        do { u = next_unit(); } while (u <= 0.0);
        return u;
    }
    double next_exp();                       // Exp(1)
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
    std::uint64_t next_below(std::uint64_t n);   // uniform on {0,..,n-1}
    std::uint64_t next_poisson(double mean);

  private:
    std::uint64_t state_;
};

}  // namespace cpgg

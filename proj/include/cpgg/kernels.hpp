#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace cpgg {

// Pairwise connection models. The two const kernels are degenerate fixtures
// (planted-structure tests and envelope edge cases).
enum class KernelVariant {
    soft_boolean,
    age_rcm,
    pref_attach_upper,
    min_lower,
    const_one,
    const_zero,
};

std::string to_string(KernelVariant v);
std::optional<KernelVariant> kernel_variant_from_string(const std::string& name);

struct KernelSpec {
    KernelVariant variant = KernelVariant::soft_boolean;
    double gamma = 0.8;        // mark influence, in (0,1)
    double delta = 2.0;        // long-edge decay, > 1
    double alpha = 1.0;        // min_lower scale, in (0,1]
    double kappa1 = 1.0;       // min_lower constant
    double kappa2 = 1.0;       // pref_attach_upper constant
    double beta_scale = 1.0;   // age_rcm spatial scale

    // Ultrasmall regime boundary gamma > delta/(delta+1).
    bool ultrasmall() const { return gamma > delta / (delta + 1.0); }
    void validate() const;     // throws std::invalid_argument on a bad field
};

// Probability that two vertices with marks t, s at euclidean distance `dist`
// in dimension d are joined by an edge:
//   min_lower          alpha * (1 ^ kappa1 (t^s)^-dg dist^-dd)
//   pref_attach_upper  1 ^ kappa2 (t^s)^-dg (tvs)^d(g-1) dist^-dd
//   age_rcm            1 ^ (beta^-1 (t^s)^g (tvs)^(1-g) dist^d)^-d
//   soft_boolean       1 ^ (dist / (t^-g/d + s^-g/d))^-dd
// All four are nonincreasing in dist and in each mark.
double connection_probability(const KernelSpec& spec, int d, double t, double s,
                              double dist);

// Constants making the two-sided bound
//   alpha (1 ^ k1 (t^s)^-dg dist^-dd)  <=  p  <=  1 ^ k2 (t^s)^-dg (tvs)^d(g-1) dist^-dd
// hold pointwise for the given variant.
struct SandwichConstants {
    double alpha;
    double kappa1;
    double kappa2;
};
SandwichConstants sandwich_constants(const KernelSpec& spec, int d);

struct SandwichBounds {
    double lower;
    double upper;
};
SandwichBounds assumption_sandwich(const KernelSpec& spec, int d, double t, double s,
                                   double dist);

// First (t, s, dist) triple violating lower <= p <= upper on a random sweep,
// if any. Used both as a test oracle and as the miscalibration error report.
struct SandwichViolation {
    double t, s, dist, p, lower, upper;
};
std::optional<SandwichViolation> sandwich_sweep(const KernelSpec& spec, int d,
                                                std::size_t triples,
                                                std::uint64_t seed);

// Expected degree of a vertex with mark t on the infinite domain:
//   Lambda(t) = int_0^1 ds int_R^d p(t, s, |x|) dx.
// The radial integral is evaluated in the volume variable w = dist^d, where
// every variant reduces to cap * (1 ^ (w/W)^-delta) with closed-form value
// cap * W * delta/(delta-1); the s-integral is quadrature with a doubling
// check to relative error <= 1e-6. Throws on delta <= 1 (divergent).
double expected_degree_profile(const KernelSpec& spec, int d, double t);

// Effective volume W(t,s) above; exposed for envelope computations.
double kernel_effective_volume(const KernelSpec& spec, int d, double t, double s);
// Multiplier cap (alpha for min_lower, 1 otherwise).
double kernel_cap(const KernelSpec& spec);

// I_rho = int_R^d (1 ^ (kappa2 |x|^d)^-delta) dx = V_d kappa2^-1 delta/(delta-1).
double compute_I_rho(int d, double delta, double kappa2);

// Volume of the d-dimensional unit ball.
double unit_ball_volume(int d);

}  // namespace cpgg

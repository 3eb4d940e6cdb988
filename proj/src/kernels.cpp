#include "cpgg/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "cpgg/quadrature.hpp"
#include "cpgg/rng.hpp"

namespace cpgg {

std::string to_string(KernelVariant v) {
    switch (v) {
        case KernelVariant::soft_boolean: return "soft_boolean";
        case KernelVariant::age_rcm: return "age_rcm";
        case KernelVariant::pref_attach_upper: return "pref_attach_upper";
        case KernelVariant::min_lower: return "min_lower";
        case KernelVariant::const_one: return "const_one";
        case KernelVariant::const_zero: return "const_zero";
    }
    return "?";
}

std::optional<KernelVariant> kernel_variant_from_string(const std::string& name) {
    if (name == "soft_boolean") return KernelVariant::soft_boolean;
    if (name == "age_rcm") return KernelVariant::age_rcm;
    if (name == "pref_attach_upper") return KernelVariant::pref_attach_upper;
    if (name == "min_lower") return KernelVariant::min_lower;
    if (name == "const_one") return KernelVariant::const_one;
    if (name == "const_zero") return KernelVariant::const_zero;
    return std::nullopt;
}

void KernelSpec::validate() const {
    if (variant == KernelVariant::const_one || variant == KernelVariant::const_zero) return;
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("KernelSpec: gamma must lie in (0,1)");
    if (!(delta > 1.0))
        throw std::invalid_argument("KernelSpec: delta must exceed 1");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("KernelSpec: alpha must lie in (0,1]");
    if (!(kappa1 > 0.0) || !(kappa2 > 0.0))
        throw std::invalid_argument("KernelSpec: kappa constants must be positive");
    if (!(beta_scale > 0.0))
        throw std::invalid_argument("KernelSpec: beta_scale must be positive");
}

double kernel_cap(const KernelSpec& spec) {
    return spec.variant == KernelVariant::min_lower ? spec.alpha : 1.0;
}

double kernel_effective_volume(const KernelSpec& spec, int d, double t, double s) {
    const double tmin = std::min(t, s), tmax = std::max(t, s);
    switch (spec.variant) {
        case KernelVariant::soft_boolean: {
            const double radii = std::pow(tmin, -spec.gamma / d) + std::pow(tmax, -spec.gamma / d);
            return std::pow(radii, d);
        }
        case KernelVariant::age_rcm:
            return spec.beta_scale * std::pow(tmin, -spec.gamma) *
                   std::pow(tmax, -(1.0 - spec.gamma));
        case KernelVariant::pref_attach_upper:
            return std::pow(spec.kappa2, 1.0 / spec.delta) * std::pow(tmin, -spec.gamma) *
                   std::pow(tmax, spec.gamma - 1.0);
        case KernelVariant::min_lower:
            return std::pow(spec.kappa1, 1.0 / spec.delta) * std::pow(tmin, -spec.gamma);
        case KernelVariant::const_one:
        case KernelVariant::const_zero:
            throw std::invalid_argument("kernel_effective_volume: const kernel has no scale");
    }
    return 0.0;
}

double connection_probability(const KernelSpec& spec, int d, double t, double s,
                              double dist) {
    if (spec.variant == KernelVariant::const_one) return 1.0;
    if (spec.variant == KernelVariant::const_zero) return 0.0;
    const double w = std::pow(dist, d);
    const double W = kernel_effective_volume(spec, d, t, s);
    if (w <= W) return kernel_cap(spec);
    return kernel_cap(spec) * std::pow(w / W, -spec.delta);
}

SandwichConstants sandwich_constants(const KernelSpec& spec, int d) {
    switch (spec.variant) {
        case KernelVariant::soft_boolean:
            // (t^s)^-g/d <= R_t + R_s <= 2 (t^s)^-g/d.
            return {1.0, 1.0, std::pow(2.0, spec.delta * d)};
        case KernelVariant::age_rcm: {
            const double bd = std::pow(spec.beta_scale, spec.delta);
            return {std::min(1.0, bd), bd, bd};
        }
        case KernelVariant::pref_attach_upper:
            return {1.0, spec.kappa2, spec.kappa2};
        case KernelVariant::min_lower:
            return {spec.alpha, spec.kappa1, spec.kappa1};
        case KernelVariant::const_one:
        case KernelVariant::const_zero:
            throw std::invalid_argument("sandwich_constants: const kernels do not satisfy the sandwich");
    }
    return {1.0, 1.0, 1.0};
}

SandwichBounds assumption_sandwich(const KernelSpec& spec, int d, double t, double s,
                                   double dist) {
    const SandwichConstants c = sandwich_constants(spec, d);
    const double tmin = std::min(t, s), tmax = std::max(t, s);
    const double w = std::pow(dist, d);
    // Both bounds go through the same 1 ^ (w/W)^-delta form as the kernel so
    // that the attained-with-equality cases compare bit-exactly.
    auto form = [&](double W) {
        if (w <= W) return 1.0;
        return std::pow(w / W, -spec.delta);
    };
    double W_low, W_up;
    switch (spec.variant) {
        case KernelVariant::min_lower:
            W_low = kernel_effective_volume(spec, d, t, s);  // lower is the kernel itself
            W_up = std::pow(spec.kappa1, 1.0 / spec.delta) * std::pow(tmin, -spec.gamma) *
                   std::pow(tmax, spec.gamma - 1.0);
            break;
        case KernelVariant::pref_attach_upper:
            W_low = std::pow(spec.kappa2, 1.0 / spec.delta) * std::pow(tmin, -spec.gamma);
            W_up = kernel_effective_volume(spec, d, t, s);  // upper is the kernel itself
            break;
        case KernelVariant::age_rcm:
            W_low = spec.beta_scale * std::pow(tmin, -spec.gamma);
            W_up = kernel_effective_volume(spec, d, t, s);  // upper is the kernel itself
            break;
        case KernelVariant::soft_boolean:
            W_low = std::pow(tmin, -spec.gamma);
            W_up = std::pow(2.0, d) * std::pow(tmin, -spec.gamma) *
                   std::pow(tmax, spec.gamma - 1.0);
            break;
        default:
            throw std::invalid_argument("assumption_sandwich: const kernels are out of scope");
    }
    return {c.alpha * form(W_low), form(W_up)};
}

std::optional<SandwichViolation> sandwich_sweep(const KernelSpec& spec, int d,
                                                std::size_t triples,
                                                std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < triples; ++i) {
        const double t = rng.next_open();
        const double s = rng.next_open();
        // Log-uniform distances spanning the near and far regimes.
        const double dist = std::exp(rng.next_uniform(std::log(1e-3), std::log(1e4)));
        const double p = connection_probability(spec, d, t, s, dist);
        const SandwichBounds b = assumption_sandwich(spec, d, t, s, dist);
        if (!(b.lower <= p && p <= b.upper)) return SandwichViolation{t, s, dist, p, b.lower, b.upper};
    }
    return std::nullopt;
}

double unit_ball_volume(int d) {
    return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double expected_degree_profile(const KernelSpec& spec, int d, double t) {
    if (spec.variant == KernelVariant::const_zero) return 0.0;
    if (spec.variant == KernelVariant::const_one)
        throw std::invalid_argument("expected_degree_profile: const_one diverges");
    spec.validate();
    if (!(spec.delta > 1.0))
        throw std::invalid_argument("expected_degree_profile: delta <= 1 diverges");
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("expected_degree_profile: t must lie in (0,1)");
    const double radial_factor =
        unit_ball_volume(d) * spec.delta / (spec.delta - 1.0) * kernel_cap(spec);
    // Substitute s = v^(1/(1-g)): the s^-g blowup at 0 cancels exactly and the
    // integrand is bounded on (0,1]. Kink stays at s = t, i.e. v = t^(1-g).
    const double inv = 1.0 / (1.0 - spec.gamma);
    const auto integrand = [&](double v) {
        const double s = std::pow(v, inv);
        return kernel_effective_volume(spec, d, t, s) * inv * std::pow(v, inv - 1.0);
    };
    const double kink = std::pow(t, 1.0 - spec.gamma);
    double prev = 0.0;
    for (int panels = 64;; panels *= 2) {
        std::vector<double> breaks;
        for (int i = 0; i <= panels; ++i)
            breaks.push_back(static_cast<double>(i) / panels);
        if (kink > 0.0 && kink < 1.0) breaks.push_back(kink);
        std::sort(breaks.begin(), breaks.end());
        const double cur = integrate_panels(integrand, breaks);
        if (panels > 64 && std::abs(cur - prev) <= 1e-7 * std::max(std::abs(cur), 1e-300))
            return radial_factor * cur;
        if (panels >= 16384) return radial_factor * cur;
        prev = cur;
    }
}

double compute_I_rho(int d, double delta, double kappa2) {
    if (!(delta > 1.0)) throw std::invalid_argument("compute_I_rho: delta must exceed 1");
    if (!(kappa2 > 0.0)) throw std::invalid_argument("compute_I_rho: kappa2 must be positive");
    return unit_ball_volume(d) / kappa2 * delta / (delta - 1.0);
}

}  // namespace cpgg

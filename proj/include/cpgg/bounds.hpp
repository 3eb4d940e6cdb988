#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cpgg/graph.hpp"

namespace cpgg {

// Parameters of the truncated mark-convolution kernel
//   K(u, s) = kappa (u^s)^-gamma (uvs)^(gamma-1)
// on [ell, 1], rooted at mark t0, plus the recursion constant c.
struct BoundsParams {
    double kappa = 1.0;
    double gamma = 0.8;
    double ell = 1e-2;
    double t0 = 0.5;
    double c_const = 1.0;

    void validate() const;
};

// Window c^-2 < log(1/ell)^2 < (1/3) ell^(1-2 gamma) under which the closed
// alpha bound is guaranteed.
struct WindowCheck {
    bool ok = false;
    double lhs = 0.0;  // c^-2
    double mid = 0.0;  // log(1/ell)^2
    double rhs = 0.0;  // (1/3) ell^(1-2 gamma)
};
WindowCheck closed_bound_window(const BoundsParams& p);

// nu_{ell,n}^{t0}(s): n-step kernel convolution over [ell,1], evaluated by
// iterated panel quadrature with refinement doubling to relative error 1e-6.
double nu_value(const BoundsParams& p, int n, double s);

// Exact recursion alpha_{n+1} = c (alpha_n log(1/ell) + beta_n),
// beta_{n+1} = c (alpha_n ell^(1-2g) + beta_n log(1/ell)) from
// alpha_1 = kappa t0^(g-1), beta_1 = kappa t0^-g. Evaluated in log space;
// values overflowing double come back as +inf.
std::pair<double, double> alpha_beta(const BoundsParams& p, int n);

// Closed form (2c)^(n-2) c^2 (ell^(1/2-g) t0^(g-1) + t0^-g) ell^((1-2g)(n/2-1)),
// n >= 2. Throws std::domain_error when the window above fails.
double alpha_closed_bound(const BoundsParams& p, int n);

// Smallest c such that one recursion step dominates the quadrature of the
// nu recursion on the given mark grid, bisected to 1e-4. The c_const field of
// `p` is ignored. Throws if no c <= 1e6 works.
double fit_constant_c(const BoundsParams& p, std::span<const double> grid);

// Ordered root traces. Q_A^n: first n vertices distinct and outside A, last
// in A (n >= 1). R_A^n: first n distinct and outside A, last equal to an
// earlier one (n >= 3).
struct TraceQuery {
    std::uint32_t root = 0;
    std::vector<std::uint32_t> targets;  // the set A; must not contain root
    int max_length = 4;
};

struct TraceEnumeration {
    // Indexed by path length n; each entry lists vertex sequences of n+1 ids.
    std::vector<std::vector<std::vector<std::uint32_t>>> q_paths;
    std::vector<std::vector<std::vector<std::uint32_t>>> r_paths;

    std::uint64_t q_count(int n) const;
    std::uint64_t r_count(int n) const;
    std::uint64_t total_count() const;
};

// Exhaustive depth-first enumeration. Guards: max_length <= 12 and graphs of
// at most 1000 vertices.
TraceEnumeration enumerate_traces(const GraphSample& graph, const TraceQuery& q);

// sum over enumerated Q u R of (2 lambda)^|p|.
double trace_weight_sum(const TraceEnumeration& traces, double lambda);
double trace_weight_sum(const GraphSample& graph, const TraceQuery& q, double lambda);

// exp(c lambda^2 deg)/T + T * weight_sum.
double survival_upper_bound(std::uint64_t deg_root, double lambda, double c_lemma,
                            double T, double weight_sum);
// T minimizing the bound; nullopt when weight_sum == 0 (the infimum is at
// T -> infinity).
std::optional<double> survival_bound_optimal_T(std::uint64_t deg_root, double lambda,
                                               double c_lemma, double weight_sum);

// Metastable density decay rate by power-law exponent tau > 2.
double rho_tau_rate(double lambda, double tau);
// Non-extinction envelope lambda^(2/g-1) / log(1/lambda)^((1-g)/g).
double gamma_envelope(double lambda, double gamma);

}  // namespace cpgg

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cpgg {

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

// Wilson score interval for a binomial proportion. `z` is the normal quantile
// of the requested coverage (1.96 for 95%, 2.576 for 99%).
Interval wilson_ci(std::uint64_t successes, std::uint64_t trials, double z = 1.959964);

// Upper tail of the Kolmogorov distribution, Q(x) = P(K > x).
double kolmogorov_q(double x);
// x with Q(x) = alpha.
double kolmogorov_critical(double alpha);

// One-sample KS statistic against uniform(0,1); `sample` need not be sorted.
double ks_statistic_uniform(std::vector<double> sample);
// Two-sample KS statistic.
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);
// Acceptance of H0 at the given level using the asymptotic distribution
// (Stephens' correction for the one-sample case).
bool ks_uniform_pass(std::vector<double> sample, double level);
bool ks_two_sample_pass(std::vector<double> a, std::vector<double> b, double level);

// Regularized incomplete gamma Q(s, x) = Gamma(s,x)/Gamma(s).
double gamma_q(double s, double x);
// P-value of a chi-square statistic with `dof` degrees of freedom.
double chi_square_pvalue(double statistic, int dof);

// Ordinary least squares y = a + b x; returns (slope, stderr of slope).
std::pair<double, double> ols_slope(std::span<const double> x, std::span<const double> y);

// Pooled two-proportion z-score; 0 when both samples are empty or p_pool is
// degenerate.
double two_proportion_z(std::uint64_t hits_a, std::uint64_t n_a,
                        std::uint64_t hits_b, std::uint64_t n_b);

double median(std::vector<double> values);

}  // namespace cpgg

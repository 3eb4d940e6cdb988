#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cpgg/bounds.hpp"
#include "cpgg/contact.hpp"
#include "cpgg/rng.hpp"
#include "oracles.hpp"

using namespace cpgg;

namespace {

std::vector<double> mark_grid(double ell) {
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) {
        const double f = static_cast<double>(i) / 21.0;
        grid.push_back(std::exp(std::log(ell) * (1.0 - f)) * 0.97);
    }
    return grid;
}

GraphSample triangle() { return graph_from_edges(3, {{0, 1}, {1, 2}, {0, 2}}); }

}  // namespace

TEST_CASE("nu base case is the plain kernel") {
    BoundsParams p;
    p.kappa = 1.0;
    p.gamma = 0.8;
    p.t0 = 0.5;
    CHECK(nu_value(p, 1, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
    // off-diagonal: K(0.5, 0.25) = 0.25^-0.8 * 0.5^-0.2
    CHECK(nu_value(p, 1, 0.25) ==
          doctest::Approx(std::pow(0.25, -0.8) * std::pow(0.5, -0.2)).epsilon(1e-12));
}

TEST_CASE("nu(2) and nu(3) match the brute-force quadrature") {
    BoundsParams p;
    p.kappa = 1.0;
    p.gamma = 0.8;
    p.ell = 0.01;
    for (double t0 : {0.5, 0.12}) {
        p.t0 = t0;
        for (double s : {0.3, 0.07, 0.9}) {
            CHECK(nu_value(p, 2, s) == doctest::Approx(oracle::nu2_brute(p, s)).epsilon(1e-6));
            CHECK(nu_value(p, 3, s) == doctest::Approx(oracle::nu3_brute(p, s)).epsilon(1e-6));
        }
    }
}

TEST_CASE("nu symmetry in (t0, s)") {
    BoundsParams p;
    p.kappa = 1.3;
    p.gamma = 0.7;
    p.ell = 0.02;
    const auto grid = mark_grid(p.ell);
    for (std::size_t i = 0; i < grid.size(); i += 4) {
        for (std::size_t j = 0; j < grid.size(); j += 5) {
            BoundsParams a = p, b = p;
            a.t0 = grid[i];
            b.t0 = grid[j];
            const double va = nu_value(a, 3, grid[j]);
            const double vb = nu_value(b, 3, grid[i]);
            CHECK(va == doctest::Approx(vb).epsilon(1e-8));
        }
    }
}

TEST_CASE("nu grows as the truncation shrinks") {
    BoundsParams big, small;
    big.gamma = small.gamma = 0.8;
    big.t0 = small.t0 = 0.4;
    big.ell = 0.05;
    small.ell = 0.01;
    for (double s : {0.1, 0.5, 0.9})
        CHECK(nu_value(small, 3, s) >= nu_value(big, 3, s) * (1.0 - 1e-8));
}

TEST_CASE("alpha/beta base case and one exact step") {
    BoundsParams p;
    p.kappa = 1.0;
    p.gamma = 0.8;
    p.t0 = 0.25;
    p.ell = std::exp(-10.0);
    p.c_const = 1.0;
    const auto [a1, b1] = alpha_beta(p, 1);
    CHECK(a1 == doctest::Approx(std::pow(0.25, -0.2)).epsilon(1e-12));
    CHECK(b1 == doctest::Approx(std::pow(0.25, -0.8)).epsilon(1e-12));
    const auto [a2, b2] = alpha_beta(p, 2);
    CHECK(a2 == doctest::Approx(10.0 * a1 + b1).epsilon(1e-10));
    CHECK(b2 == doctest::Approx(a1 * std::pow(p.ell, -0.6) + 10.0 * b1).epsilon(1e-10));
}

TEST_CASE("alpha/beta increase once the window holds") {
    BoundsParams p;
    p.gamma = 0.8;
    p.ell = 1e-6;
    p.t0 = 0.5;
    p.c_const = 1.0;  // c log(1/ell) = 13.8 > 1
    double prev_a = 0.0, prev_b = 0.0;
    for (int n = 2; n <= 12; ++n) {
        const auto [a, b] = alpha_beta(p, n);
        if (n > 2) {
            CHECK(a > prev_a);
            CHECK(b > prev_b);
        }
        prev_a = a;
        prev_b = b;
    }
}

TEST_CASE("fitted c validates the nu bound for n in {2,3,4}") {
    BoundsParams p;
    p.kappa = 1.0;
    p.gamma = 0.8;
    p.ell = 0.01;
    p.t0 = 0.5;
    const auto grid = mark_grid(p.ell);
    p.c_const = fit_constant_c(p, grid);
    CHECK(p.c_const > 0.0);
    CHECK(p.c_const < 1e3);
    for (int n : {2, 3, 4}) {
        const auto [alpha, beta] = alpha_beta(p, n);
        for (double s : grid) {
            const double bound = alpha * std::pow(s, -p.gamma) +
                                 (s >= p.ell ? beta * std::pow(s, p.gamma - 1.0) : 0.0);
            CHECK(nu_value(p, n, s) <= bound * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("fit_constant_c is monotone in kappa and finite on one point") {
    BoundsParams p;
    p.gamma = 0.75;
    p.ell = 0.02;
    p.t0 = 0.3;
    const auto grid = mark_grid(p.ell);
    const double c1 = fit_constant_c(p, grid);
    BoundsParams doubled = p;
    doubled.kappa = 2.0;
    const double c2 = fit_constant_c(doubled, grid);
    CHECK(c2 <= 2.0 * c1 + 1e-3);
    CHECK(c2 >= c1 - 1e-6);
    const double single[] = {0.4};
    CHECK(fit_constant_c(p, single) > 0.0);
}

TEST_CASE("closed alpha bound: n=2 value, domination up to 20, exact scaling") {
    BoundsParams p;
    p.gamma = 0.8;
    p.ell = 1e-6;
    p.t0 = 0.5;
    const auto grid = mark_grid(p.ell);
    p.c_const = fit_constant_c(p, grid);
    REQUIRE(closed_bound_window(p).ok);

    const double expected2 =
        p.c_const * p.c_const *
        (std::pow(p.ell, 0.5 - p.gamma) * std::pow(p.t0, p.gamma - 1.0) +
         std::pow(p.t0, -p.gamma));
    CHECK(alpha_closed_bound(p, 2) == doctest::Approx(expected2).epsilon(1e-10));

    for (int n = 2; n <= 20; ++n) {
        const auto [alpha, beta] = alpha_beta(p, n);
        CHECK(alpha <= alpha_closed_bound(p, n) * (1.0 + 1e-9));
    }

    const double ratio = alpha_closed_bound(p, 7) / alpha_closed_bound(p, 5);
    const double expected_ratio =
        std::pow(2.0 * p.c_const, 2.0) * std::pow(p.ell, 1.0 - 2.0 * p.gamma);
    CHECK(ratio == doctest::Approx(expected_ratio).epsilon(1e-9));

    BoundsParams bad = p;
    bad.c_const = 1e-3;  // violates c^-2 < log(1/ell)^2
    CHECK_THROWS_AS(alpha_closed_bound(bad, 4), std::domain_error);
}

TEST_CASE("trace enumeration fixtures") {
    // path 0-1-2 rooted at 0, A = {2}
    const GraphSample path = graph_from_edges(3, {{0, 1}, {1, 2}});
    TraceQuery q;
    q.root = 0;
    q.targets = {2};
    q.max_length = 4;
    const auto traces = enumerate_traces(path, q);
    CHECK(traces.q_count(2) == 1);
    CHECK(traces.q_paths[2][0] == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(traces.total_count() == 1);
    CHECK(trace_weight_sum(traces, 0.2) == doctest::Approx(0.16).epsilon(1e-12));

    // triangle, A empty: R^3 has exactly the four known traces
    TraceQuery empty_a;
    empty_a.root = 0;
    empty_a.max_length = 3;
    const auto tri = enumerate_traces(triangle(), empty_a);
    CHECK(tri.r_count(3) == 4);
    std::vector<std::vector<std::uint32_t>> got = tri.r_paths[3];
    std::sort(got.begin(), got.end());
    const std::vector<std::vector<std::uint32_t>> expected = {
        {0, 1, 2, 0}, {0, 1, 2, 1}, {0, 2, 1, 0}, {0, 2, 1, 2}};
    CHECK(got == expected);
    CHECK(trace_weight_sum(tri, 0.1) == doctest::Approx(0.032).epsilon(1e-12));

    // star rooted at the hub: every length-3 walk repeats inside its first 3
    const GraphSample k13 = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
    TraceQuery hub;
    hub.root = 0;
    hub.max_length = 6;
    const auto star_traces = enumerate_traces(k13, hub);
    for (int n = 0; n <= 6; ++n) CHECK(star_traces.r_count(n) == 0);
    CHECK(star_traces.total_count() == 0);

    // guards
    TraceQuery too_long;
    too_long.max_length = 13;
    CHECK_THROWS(enumerate_traces(path, too_long));
    TraceQuery root_in_a;
    root_in_a.root = 0;
    root_in_a.targets = {0};
    CHECK_THROWS(enumerate_traces(path, root_in_a));
}

TEST_CASE("enumeration matches the naive walk filter on random graphs") {
    SplitMix64 rng(2718);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.next_below(4);  // 4..7 vertices
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (std::uint32_t u = 0; u < n; ++u)
            for (std::uint32_t v = u + 1; v < n; ++v)
                if (rng.next_unit() < 0.45) edges.emplace_back(u, v);
        const GraphSample g = graph_from_edges(n, edges);
        TraceQuery q;
        q.root = 0;
        q.max_length = 5;
        for (std::uint32_t v = 1; v < n; ++v)
            if (rng.next_unit() < 0.3) q.targets.push_back(v);
        const auto mine = enumerate_traces(g, q);
        const auto naive = oracle::naive_traces(g, q.root, q.targets, q.max_length);
        for (int len = 0; len <= q.max_length; ++len) {
            auto qs = mine.q_paths[len];
            auto rs = mine.r_paths[len];
            std::sort(qs.begin(), qs.end());
            std::sort(rs.begin(), rs.end());
            CHECK(qs == naive.q[len]);
            CHECK(rs == naive.r[len]);
        }
    }
}

TEST_CASE("survival bound formula and optimal T") {
    CHECK(survival_upper_bound(4, 0.2, 1.0, 5.0, 0.0) ==
          doctest::Approx(std::exp(1.0 * 0.04 * 4.0) / 5.0).epsilon(1e-12));
    CHECK(!survival_bound_optimal_T(4, 0.2, 1.0, 0.0).has_value());
    const double ws = 0.06;
    const auto tstar = survival_bound_optimal_T(4, 0.2, 1.0, ws);
    REQUIRE(tstar.has_value());
    const double head = std::exp(0.04 * 4.0);
    CHECK(survival_upper_bound(4, 0.2, 1.0, *tstar, ws) ==
          doctest::Approx(2.0 * std::sqrt(head * ws)).epsilon(1e-12));
}

TEST_CASE("survival bound dominates the MC proxy on small fixtures") {
    // K_{1,5} from the hub, A empty: no Q or R traces, so the bound is
    // exp(c lambda^2 deg)/T; with the weight sum zero T* is unbounded and the
    // comparison uses T = horizon.
    const GraphSample k15 =
        graph_from_edges(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
    TraceQuery hub;
    hub.root = 0;
    hub.max_length = 6;
    const double ws_star = trace_weight_sum(k15, hub, 0.2);
    CHECK(ws_star == 0.0);
    const double horizon = 50.0;
    const double bound_star = survival_upper_bound(5, 0.2, 1.0, horizon, ws_star);
    std::uint64_t hits = 0;
    const std::uint64_t runs = 10000;
    for (std::uint64_t r = 0; r < runs; ++r) {
        SimParams params;
        params.lambda = 0.2;
        params.horizon = horizon;
        params.seed = 31000 + r;
        const std::uint32_t init[] = {0};
        if (run_next_event(k15, params, init).survived_proxy) ++hits;
    }
    CHECK(static_cast<double>(hits) / runs <= bound_star);

    // P3 from an end vertex has R traces, so T* exists.
    const GraphSample path = graph_from_edges(3, {{0, 1}, {1, 2}});
    TraceQuery end;
    end.root = 0;
    end.max_length = 5;
    const double ws_path = trace_weight_sum(path, end, 0.2);
    CHECK(ws_path > 0.0);
    const auto tstar = survival_bound_optimal_T(1, 0.2, 1.0, ws_path);
    REQUIRE(tstar.has_value());
    const double bound_path = survival_upper_bound(1, 0.2, 1.0, *tstar, ws_path);
    hits = 0;
    for (std::uint64_t r = 0; r < runs; ++r) {
        SimParams params;
        params.lambda = 0.2;
        params.horizon = horizon;
        params.seed = 62000 + r;
        const std::uint32_t init[] = {0};
        if (run_next_event(path, params, init).survived_proxy) ++hits;
    }
    CHECK(static_cast<double>(hits) / runs <= bound_path);
}

TEST_CASE("rho_tau branches and the gamma envelope") {
    CHECK(rho_tau_rate(0.1, 2.25) == doctest::Approx(std::pow(0.1, 4.0 / 3.0)).epsilon(1e-12));
    CHECK(rho_tau_rate(0.1, 2.75) ==
          doctest::Approx(std::pow(0.1, 2.5) / std::pow(std::log(10.0), 0.75)).epsilon(1e-12));
    CHECK(rho_tau_rate(0.1, 3.5) ==
          doctest::Approx(std::pow(0.1, 4.0) / std::pow(std::log(10.0), 3.0)).epsilon(1e-12));
    CHECK_THROWS(rho_tau_rate(0.1, 2.0));

    CHECK(gamma_envelope(0.1, 0.8) ==
          doctest::Approx(std::pow(0.1, 1.5) / std::pow(std::log(10.0), 0.25)).epsilon(1e-9));
    CHECK(gamma_envelope(0.01, 0.8) ==
          doctest::Approx(std::pow(0.01, 1.5) / std::pow(std::log(100.0), 0.25)).epsilon(1e-9));

    // identity with the middle-branch closed form at tau = 1 + 1/gamma
    // (2 tau - 3 = 2/gamma - 1, tau - 2 = (1-gamma)/gamma)
    for (double gamma : {0.6, 0.7, 0.8, 0.9}) {
        const double tau = 1.0 + 1.0 / gamma;
        for (double lambda : {0.05, 0.2, 0.4}) {
            const double middle = std::pow(lambda, 2.0 * tau - 3.0) /
                                  std::pow(std::log(1.0 / lambda), tau - 2.0);
            CHECK(gamma_envelope(lambda, gamma) == doctest::Approx(middle).epsilon(1e-12));
            // gamma below 2/3 puts tau in (5/2, 3], the branch itself
            if (gamma < 2.0 / 3.0)
                CHECK(gamma_envelope(lambda, gamma) ==
                      doctest::Approx(rho_tau_rate(lambda, tau)).epsilon(1e-12));
        }
    }

    // branch-internal monotonicity in lambda
    for (double tau : {2.3, 2.8, 3.7}) {
        double prev = 0.0;
        for (double lambda : {0.05, 0.1, 0.2, 0.4}) {
            const double v = rho_tau_rate(lambda, tau);
            CHECK(v > prev);
            prev = v;
        }
    }
}

#include "cpgg/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpgg/quadrature.hpp"

namespace cpgg {

void BoundsParams::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("BoundsParams: gamma must lie in (0,1)");
    if (!(ell > 0.0 && ell < 1.0))
        throw std::invalid_argument("BoundsParams: ell must lie in (0,1)");
    if (!(t0 > 0.0 && t0 < 1.0))
        throw std::invalid_argument("BoundsParams: t0 must lie in (0,1)");
    if (!(kappa > 0.0)) throw std::invalid_argument("BoundsParams: kappa must be positive");
    if (!(c_const > 0.0)) throw std::invalid_argument("BoundsParams: c must be positive");
}

WindowCheck closed_bound_window(const BoundsParams& p) {
    WindowCheck w;
    const double L = std::log(1.0 / p.ell);
    w.lhs = 1.0 / (p.c_const * p.c_const);
    w.mid = L * L;
    w.rhs = std::pow(p.ell, 1.0 - 2.0 * p.gamma) / 3.0;
    w.ok = w.lhs < w.mid && w.mid < w.rhs;
    return w;
}

namespace {

// ---------------------------------------------------------------------------
// Iterated quadrature for the nu recursion. Functions live as values on a
// composite 16-point Gauss-Legendre grid over a log partition of [ell, 1]
// with t0 a forced breakpoint. One recursion step uses the exact kink split
//   nu_next(s) = kappa ( s^(g-1) F(s) + s^-g G(s) ),
//   F(s) = int_ell^s u^-g f(u) du,  G(s) = int_s^1 u^(g-1) f(u) du,
// with partial panels evaluated through barycentric interpolation of f.
// ---------------------------------------------------------------------------

constexpr int kOrder = 16;

const double* gl_nodes() {
    // Full 16-point nodes on [-1,1], ascending.
    static const double nodes[kOrder] = {
        -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
        -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
        0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
        0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499,
    };
    return nodes;
}

const double* gl_weights() {
    static const double weights[kOrder] = {
        0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
        0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541,
    };
    return weights;
}

// Barycentric weights of the fixed node set; scale-invariant across panels.
const double* bary_weights() {
    static double w[kOrder];
    static const bool init = [] {
        const double* x = gl_nodes();
        for (int i = 0; i < kOrder; ++i) {
            double prod = 1.0;
            for (int j = 0; j < kOrder; ++j)
                if (j != i) prod *= x[i] - x[j];
            w[i] = 1.0 / prod;
        }
        return true;
    }();
    (void)init;
    return w;
}

struct NuMachine {
    double kappa, gamma, ell, t0;
    std::vector<double> breaks;
    std::vector<double> nodes;    // panel-major, kOrder per panel
    std::vector<double> weights;

    std::size_t panels() const { return breaks.size() - 1; }

    explicit NuMachine(const BoundsParams& p, int log_panels)
        : kappa(p.kappa), gamma(p.gamma), ell(p.ell), t0(p.t0) {
        breaks = log_breaks(ell, 1.0, log_panels, {t0});
        const double* xi = gl_nodes();
        for (std::size_t q = 0; q + 1 < breaks.size(); ++q) {
            const double mid = 0.5 * (breaks[q] + breaks[q + 1]);
            const double half = 0.5 * (breaks[q + 1] - breaks[q]);
            for (int i = 0; i < kOrder; ++i) {
                nodes.push_back(mid + half * xi[i]);
                weights.push_back(gl_weights()[i] * half);
            }
        }
    }

    std::vector<double> base_values() const {
        std::vector<double> v(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double u = nodes[i];
            v[i] = kappa * std::pow(std::min(u, t0), -gamma) *
                   std::pow(std::max(u, t0), gamma - 1.0);
        }
        return v;
    }

    // Interpolates panel q of f at point u inside that panel.
    double interp(const std::vector<double>& f, std::size_t q, double u) const {
        const double lo = breaks[q], hi = breaks[q + 1];
        const double xi = (2.0 * u - lo - hi) / (hi - lo);
        const double* xs = gl_nodes();
        const double* bw = bary_weights();
        double num = 0.0, den = 0.0;
        for (int i = 0; i < kOrder; ++i) {
            const double dx = xi - xs[i];
            if (std::abs(dx) < 1e-14) return f[q * kOrder + i];
            const double c = bw[i] / dx;
            num += c * f[q * kOrder + i];
            den += c;
        }
        return num / den;
    }

    // int_a^b u^expo f(u) du within panel q.
    double partial(const std::vector<double>& f, std::size_t q, double a, double b,
                   double expo) const {
        if (!(b > a)) return 0.0;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        const double* xs = gl_nodes();
        double acc = 0.0;
        for (int i = 0; i < kOrder; ++i) {
            const double u = mid + half * xs[i];
            acc += gl_weights()[i] * std::pow(u, expo) * interp(f, q, u);
        }
        return acc * half;
    }

    std::size_t panel_of(double s) const {
        const auto it = std::upper_bound(breaks.begin(), breaks.end(), s);
        const std::size_t idx = static_cast<std::size_t>(it - breaks.begin());
        return std::min(panels() - 1, idx == 0 ? 0 : idx - 1);
    }

    // One recursion step of f, evaluated at an arbitrary s in (0,1).
    double step_at(const std::vector<double>& f, const std::vector<double>& pref_a,
                   const std::vector<double>& suff_b, double s) const {
        double F = 0.0, G = 0.0;
        if (s <= ell) {
            G = suff_b[0];
        } else if (s >= 1.0) {
            F = pref_a[panels()];
        } else {
            const std::size_t q = panel_of(s);
            F = pref_a[q] + partial(f, q, breaks[q], s, -gamma);
            G = partial(f, q, s, breaks[q + 1], gamma - 1.0) + suff_b[q + 1];
        }
        return kappa * (std::pow(s, gamma - 1.0) * F + std::pow(s, -gamma) * G);
    }

    // Panel prefix/suffix integrals of u^-g f and u^(g-1) f.
    void panel_sums(const std::vector<double>& f, std::vector<double>& pref_a,
                    std::vector<double>& suff_b) const {
        const std::size_t P = panels();
        pref_a.assign(P + 1, 0.0);
        suff_b.assign(P + 1, 0.0);
        for (std::size_t q = 0; q < P; ++q) {
            double pa = 0.0;
            for (int i = 0; i < kOrder; ++i) {
                const std::size_t k = q * kOrder + i;
                pa += weights[k] * std::pow(nodes[k], -gamma) * f[k];
            }
            pref_a[q + 1] = pref_a[q] + pa;
        }
        for (std::size_t q = P; q-- > 0;) {
            double pb = 0.0;
            for (int i = 0; i < kOrder; ++i) {
                const std::size_t k = q * kOrder + i;
                pb += weights[k] * std::pow(nodes[k], gamma - 1.0) * f[k];
            }
            suff_b[q] = suff_b[q + 1] + pb;
        }
    }

    std::vector<double> step_all(const std::vector<double>& f) const {
        std::vector<double> pref_a, suff_b;
        panel_sums(f, pref_a, suff_b);
        std::vector<double> out(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k)
            out[k] = step_at(f, pref_a, suff_b, nodes[k]);
        return out;
    }

    double evaluate(int n, double s) const {
        std::vector<double> f = base_values();
        for (int level = 2; level < n; ++level) f = step_all(f);
        if (n == 1)
            return kappa * std::pow(std::min(s, t0), -gamma) *
                   std::pow(std::max(s, t0), gamma - 1.0);
        std::vector<double> pref_a, suff_b;
        panel_sums(f, pref_a, suff_b);
        return step_at(f, pref_a, suff_b, s);
    }
};

int initial_panels_for(const BoundsParams& p) {
    // Keep panel aspect bounded for very small truncations.
    const double span = std::log(1.0 / p.ell);
    return std::max(48, static_cast<int>(span * 3.0));
}

}  // namespace

double nu_value(const BoundsParams& p, int n, double s) {
    p.validate();
    if (n < 1) throw std::invalid_argument("nu_value: n must be >= 1");
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("nu_value: s must lie in (0,1)");
    if (n == 1)
        return p.kappa * std::pow(std::min(s, p.t0), -p.gamma) *
               std::pow(std::max(s, p.t0), p.gamma - 1.0);
    int panels = initial_panels_for(p);
    double prev = NuMachine(p, panels).evaluate(n, s);
    for (int round = 0; round < 6; ++round) {
        panels *= 2;
        const double cur = NuMachine(p, panels).evaluate(n, s);
        const double scale = std::max({std::abs(cur), std::abs(prev), 1e-300});
        if (std::abs(cur - prev) <= 1e-7 * scale) return cur;
        prev = cur;
    }
    return prev;
}

std::pair<double, double> alpha_beta(const BoundsParams& p, int n) {
    p.validate();
    if (n < 1) throw std::invalid_argument("alpha_beta: n must be >= 1");
    const double L = std::log(1.0 / p.ell);
    const double logc = std::log(p.c_const);
    // Log-space recursion; exact arithmetic would overflow past n ~ 50.
    double la = std::log(p.kappa) + (p.gamma - 1.0) * std::log(p.t0);
    double lb = std::log(p.kappa) - p.gamma * std::log(p.t0);
    const double logL = std::log(L);
    const double log_ell_pow = (1.0 - 2.0 * p.gamma) * std::log(p.ell);
    auto logsum = [](double x, double y) {
        const double m = std::max(x, y);
        return m + std::log1p(std::exp(std::min(x, y) - m));
    };
    for (int k = 1; k < n; ++k) {
        const double na = logc + logsum(la + logL, lb);
        const double nb = logc + logsum(la + log_ell_pow, lb + logL);
        la = na;
        lb = nb;
    }
    return {std::exp(la), std::exp(lb)};
}

double alpha_closed_bound(const BoundsParams& p, int n) {
    p.validate();
    if (n < 2) throw std::invalid_argument("alpha_closed_bound: n must be >= 2");
    const WindowCheck w = closed_bound_window(p);
    if (!w.ok)
        throw std::domain_error(
            "alpha_closed_bound: window c^-2 < log(1/ell)^2 < ell^(1-2g)/3 violated");
    const double combo = std::pow(p.ell, 0.5 - p.gamma) * std::pow(p.t0, p.gamma - 1.0) +
                         std::pow(p.t0, -p.gamma);
    const double logv = (n - 2) * std::log(2.0 * p.c_const) + 2.0 * std::log(p.c_const) +
                        std::log(combo) +
                        (1.0 - 2.0 * p.gamma) * (0.5 * n - 1.0) * std::log(p.ell);
    return std::exp(logv);
}

double fit_constant_c(const BoundsParams& p, std::span<const double> grid) {
    p.validate();
    if (grid.empty()) throw std::invalid_argument("fit_constant_c: empty grid");
    const double L = std::log(1.0 / p.ell);
    const double ell_pow = std::pow(p.ell, 1.0 - 2.0 * p.gamma);

    // One-step images of the two basis shapes u^-g and u^(g-1).
    const NuMachine machine(p, 2 * initial_panels_for(p));
    std::vector<double> fa(machine.nodes.size()), fb(machine.nodes.size());
    for (std::size_t k = 0; k < machine.nodes.size(); ++k) {
        fa[k] = std::pow(machine.nodes[k], -p.gamma);
        fb[k] = std::pow(machine.nodes[k], p.gamma - 1.0);
    }
    std::vector<double> pa_a, sb_a, pa_b, sb_b;
    machine.panel_sums(fa, pa_a, sb_a);
    machine.panel_sums(fb, pa_b, sb_b);

    auto works = [&](double c) {
        for (double s : grid) {
            const double sa = std::pow(s, -p.gamma);
            const double sb = s >= p.ell ? std::pow(s, p.gamma - 1.0) : 0.0;
            const double Ia = machine.step_at(fa, pa_a, sb_a, s) / p.kappa;
            const double Ib = machine.step_at(fb, pa_b, sb_b, s) / p.kappa;
            if (p.kappa * Ia > c * (L * sa + ell_pow * sb)) return false;
            if (p.kappa * Ib > c * (sa + L * sb)) return false;
        }
        return true;
    };

    double hi = 1.0;
    while (!works(hi)) {
        hi *= 2.0;
        if (hi > 1e6)
            throw std::runtime_error("fit_constant_c: no c <= 1e6 dominates (quadrature bug?)");
    }
    double lo = 0.0;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (works(mid) ? hi : lo) = mid;
    }
    return hi;
}

std::uint64_t TraceEnumeration::q_count(int n) const {
    return n >= 0 && n < static_cast<int>(q_paths.size()) ? q_paths[n].size() : 0;
}

std::uint64_t TraceEnumeration::r_count(int n) const {
    return n >= 0 && n < static_cast<int>(r_paths.size()) ? r_paths[n].size() : 0;
}

std::uint64_t TraceEnumeration::total_count() const {
    std::uint64_t total = 0;
    for (const auto& v : q_paths) total += v.size();
    for (const auto& v : r_paths) total += v.size();
    return total;
}

TraceEnumeration enumerate_traces(const GraphSample& graph, const TraceQuery& q) {
    if (q.max_length > 12)
        throw std::invalid_argument("enumerate_traces: max_length capped at 12");
    if (graph.size() > 1000)
        throw std::invalid_argument("enumerate_traces: graph capped at 1000 vertices");
    if (q.root >= graph.size()) throw std::invalid_argument("enumerate_traces: bad root");
    std::vector<std::uint8_t> in_a(graph.size(), 0);
    for (auto v : q.targets) {
        if (v == q.root) throw std::invalid_argument("enumerate_traces: root must not be in A");
        in_a[v] = 1;
    }
    TraceEnumeration out;
    out.q_paths.resize(q.max_length + 1);
    out.r_paths.resize(q.max_length + 1);
    if (q.max_length < 1) return out;

    std::vector<std::uint8_t> on_path(graph.size(), 0);
    std::vector<std::uint32_t> path{q.root};
    on_path[q.root] = 1;

    auto dfs = [&](auto&& self) -> void {
        const int len = static_cast<int>(path.size()) - 1;
        if (len >= q.max_length) return;
        for (std::uint32_t w : graph.neighbors(path.back())) {
            if (in_a[w]) {
                auto rec = path;
                rec.push_back(w);
                out.q_paths[len + 1].push_back(std::move(rec));
            } else if (on_path[w]) {
                if (len + 1 >= 3) {
                    auto rec = path;
                    rec.push_back(w);
                    out.r_paths[len + 1].push_back(std::move(rec));
                }
            } else {
                path.push_back(w);
                on_path[w] = 1;
                self(self);
                on_path[w] = 0;
                path.pop_back();
            }
        }
    };
    dfs(dfs);
    return out;
}

double trace_weight_sum(const TraceEnumeration& traces, double lambda) {
    double sum = 0.0;
    for (std::size_t n = 0; n < traces.q_paths.size(); ++n)
        sum += static_cast<double>(traces.q_paths[n].size()) *
               std::pow(2.0 * lambda, static_cast<double>(n));
    for (std::size_t n = 0; n < traces.r_paths.size(); ++n)
        sum += static_cast<double>(traces.r_paths[n].size()) *
               std::pow(2.0 * lambda, static_cast<double>(n));
    return sum;
}

double trace_weight_sum(const GraphSample& graph, const TraceQuery& q, double lambda) {
    return trace_weight_sum(enumerate_traces(graph, q), lambda);
}

double survival_upper_bound(std::uint64_t deg_root, double lambda, double c_lemma,
                            double T, double weight_sum) {
    if (!(T > 0.0)) throw std::invalid_argument("survival_upper_bound: T must be positive");
    const double head = std::exp(c_lemma * lambda * lambda * static_cast<double>(deg_root));
    return head / T + T * weight_sum;
}

std::optional<double> survival_bound_optimal_T(std::uint64_t deg_root, double lambda,
                                               double c_lemma, double weight_sum) {
    if (!(weight_sum > 0.0)) return std::nullopt;
    const double head = std::exp(c_lemma * lambda * lambda * static_cast<double>(deg_root));
    return std::sqrt(head / weight_sum);
}

double rho_tau_rate(double lambda, double tau) {
    if (!(tau > 2.0)) throw std::invalid_argument("rho_tau_rate: tau must exceed 2");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("rho_tau_rate: lambda must lie in (0,1)");
    const double loginv = std::log(1.0 / lambda);
    if (tau <= 2.5) return std::pow(lambda, 1.0 / (3.0 - tau));
    if (tau <= 3.0) return std::pow(lambda, 2.0 * tau - 3.0) / std::pow(loginv, tau - 2.0);
    return std::pow(lambda, 2.0 * tau - 3.0) / std::pow(loginv, 2.0 * tau - 4.0);
}

double gamma_envelope(double lambda, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma_envelope: gamma must lie in (0,1)");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("gamma_envelope: lambda must lie in (0,1)");
    const double loginv = std::log(1.0 / lambda);
    return std::pow(lambda, 2.0 / gamma - 1.0) / std::pow(loginv, (1.0 - gamma) / gamma);
}

}  // namespace cpgg

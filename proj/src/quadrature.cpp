#include "cpgg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpgg {

namespace {

// 16-point Gauss-Legendre rule on [-1, 1], positive half; nodes are symmetric.
constexpr int kHalf = 8;
constexpr double kNodes[kHalf] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499,
};
constexpr double kWeights[kHalf] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541,
};

}  // namespace

double integrate_panels(const std::function<double(double)>& f,
                        const std::vector<double>& breaks) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i], b = breaks[i + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        if (half <= 0.0) continue;
        double acc = 0.0;
        for (int j = 0; j < kHalf; ++j)
            acc += kWeights[j] * (f(mid - half * kNodes[j]) + f(mid + half * kNodes[j]));
        total += acc * half;
    }
    return total;
}

std::vector<double> log_breaks(double lo, double hi, int panels,
                               const std::vector<double>& inserts) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_breaks: need 0 < lo < hi");
    std::vector<double> breaks;
    breaks.reserve(static_cast<std::size_t>(panels) + inserts.size() + 1);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i <= panels; ++i)
        breaks.push_back(std::exp(llo + (lhi - llo) * i / panels));
    breaks.front() = lo;
    breaks.back() = hi;
    for (double x : inserts)
        if (x > lo && x < hi) breaks.push_back(x);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    return breaks;
}

double integrate_log_adaptive(const std::function<double(double)>& f,
                              double lo, double hi, double rel_tol,
                              const std::vector<double>& inserts,
                              int initial_panels) {
    double prev = integrate_panels(f, log_breaks(lo, hi, initial_panels, inserts));
    for (int panels = 2 * initial_panels; panels <= 65536; panels *= 2) {
        const double cur = integrate_panels(f, log_breaks(lo, hi, panels, inserts));
        const double scale = std::max({std::abs(cur), std::abs(prev), 1e-300});
        if (std::abs(cur - prev) <= rel_tol * scale) return cur;
        prev = cur;
    }
    return prev;
}

PanelGrid make_panel_grid(const std::vector<double>& breaks) {
    PanelGrid g;
    g.breaks = breaks;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
        const double half = 0.5 * (breaks[i + 1] - breaks[i]);
        for (int j = kHalf - 1; j >= 0; --j) {
            g.nodes.push_back(mid - half * kNodes[j]);
            g.weights.push_back(kWeights[j] * half);
        }
        for (int j = 0; j < kHalf; ++j) {
            g.nodes.push_back(mid + half * kNodes[j]);
            g.weights.push_back(kWeights[j] * half);
        }
    }
    return g;
}

}  // namespace cpgg

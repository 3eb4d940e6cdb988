#include "cpgg/structure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpgg/rng.hpp"
#include "cpgg/stats.hpp"

namespace cpgg {

namespace {

constexpr std::uint64_t kColorTag = 0xC0104ull << 40;

}  // namespace

TailFit degree_tail_fit(const GraphSample& graph, std::uint64_t k_min) {
    const auto degrees = degree_sequence(graph);
    return degree_tail_fit(degrees, k_min);
}

TailFit degree_tail_fit(std::span<const std::uint64_t> degrees, std::uint64_t k_min) {
    if (k_min < 1) throw std::invalid_argument("degree_tail_fit: k_min must be >= 1");
    const double n = static_cast<double>(degrees.size());
    std::uint64_t tail = 0, max_deg = 0;
    for (auto d : degrees) {
        if (d >= k_min) ++tail;
        max_deg = std::max(max_deg, d);
    }
    if (tail < 100)
        throw std::invalid_argument("degree_tail_fit: fewer than 100 vertices at or above k_min");

    // Geometric threshold grid, four points per octave; drop thresholds whose
    // tail count is too small for a stable log.
    std::vector<double> xs, ys;
    std::vector<std::uint64_t> sorted(degrees.begin(), degrees.end());
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t prev_k = 0;
    for (double kf = static_cast<double>(k_min); kf <= static_cast<double>(max_deg);
         kf *= std::pow(2.0, 0.25)) {
        const auto k = static_cast<std::uint64_t>(std::llround(kf));
        if (k == prev_k) continue;
        prev_k = k;
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), k);
        const auto count = static_cast<std::uint64_t>(sorted.end() - it);
        if (count < 30) break;
        xs.push_back(std::log(static_cast<double>(k)));
        ys.push_back(std::log(static_cast<double>(count) / n));
    }
    if (xs.size() < 3)
        throw std::invalid_argument("degree_tail_fit: degenerate tail (too few usable thresholds)");
    const auto [slope, se] = ols_slope(xs, ys);
    return {slope, se, static_cast<int>(xs.size())};
}

// ---------------------------------------------------------------------------
// Star chain.
// ---------------------------------------------------------------------------

double StarChainScales::mark_level(int k) const {
    return std::pow(t_sp, theta) * std::exp(-k * theta);
}

double StarChainScales::radius(int k) const {
    if (k <= 0) return 0.0;
    return 0.5 * std::pow(t_sp, -growth) * std::exp(k * growth);
}

StarChainScales star_chain_scales(const StarChainParams& params, const KernelSpec& spec,
                                  int d) {
    spec.validate();
    if (!(params.lambda > 0.0 && params.lambda < 1.0))
        throw std::invalid_argument("star_chain_scales: lambda must lie in (0,1)");
    if (!(params.beta_star > 0.0))
        throw std::invalid_argument("star_chain_scales: beta_star must be positive");
    const double growth_full = spec.gamma + spec.gamma / spec.delta;
    if (!(growth_full > 1.0))
        throw std::invalid_argument(
            "star_chain_scales: needs the ultrasmall regime gamma + gamma/delta > 1");
    double theta = params.theta_chain;
    if (theta == 0.0) theta = 0.5 * (1.0 + growth_full);
    if (!(theta > 1.0 && theta < growth_full))
        throw std::invalid_argument(
            "star_chain_scales: theta_chain must lie in (1, gamma + gamma/delta)");
    StarChainScales s;
    s.r = static_cast<std::uint64_t>(std::max(
        1.0, std::ceil(params.beta_star * std::log(1.0 / params.lambda) /
                       (params.lambda * params.lambda))));
    s.t_sp = std::pow(static_cast<double>(s.r), -1.0 / spec.gamma);
    s.theta = theta;
    s.growth = growth_full / d;
    return s;
}

namespace {

// growth in StarChainScales stores (gamma+gamma/delta)/d for the radius; the
// mark levels use theta only.

bool half_space_contains(std::span<const double> x, std::span<const double> z) {
    // Plane through x with normal x; keep the side away from the origin.
    double dot = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        dot += (z[k] - x[k]) * x[k];
        norm += x[k] * x[k];
    }
    if (norm == 0.0) return z[0] >= x[0];  // degenerate root at the origin
    return dot >= 0.0;
}

}  // namespace

StarChainResult find_star_chain(const PointCloud& cloud, const KernelSpec& spec,
                                std::uint32_t x, const StarChainParams& params,
                                std::uint64_t seed) {
    if (x >= cloud.size()) throw std::invalid_argument("find_star_chain: bad root id");
    const int d = cloud.domain.dim;
    const StarChainScales sc = star_chain_scales(params, spec, d);
    const double root_mark = cloud.mark(x);
    if (!(root_mark < sc.t_sp))
        throw std::invalid_argument("find_star_chain: root mark must lie below t_sp");
    const int K = params.stars;
    StarChainResult result;
    if (K <= 0) return result;

    // Domain must contain the half-ball of radius R_{K+1} around x. In d = 1
    // the half-space side is exact; higher dimensions check the full ball.
    const auto xpos = cloud.position(x);
    const double reach = sc.radius(K + 1);
    const double half = 0.5 * cloud.domain.side;
    if (d == 1) {
        const double dir = xpos[0] >= 0.0 ? 1.0 : -1.0;
        if (std::abs(xpos[0] + dir * reach) > half)
            throw std::invalid_argument("find_star_chain: domain too small for R_{K+1}");
    } else {
        for (double c : xpos)
            if (std::abs(c) + reach > half)
                throw std::invalid_argument("find_star_chain: domain too small for R_{K+1}");
    }

    // One pass assigns every vertex of the half-space to its annulus and mark
    // class.
    struct Candidate {
        std::uint32_t id;
        double mark;
        double dist;
    };
    std::vector<std::vector<Candidate>> mids(K + 1), nbrs(K + 1), conns(K + 1);
    for (std::uint32_t i = 0; i < cloud.size(); ++i) {
        if (i == x) continue;
        const auto zpos = cloud.position(i);
        if (!half_space_contains(xpos, zpos)) continue;
        const double dist = distance(cloud.domain, xpos, zpos);
        if (dist >= sc.radius(K + 1)) continue;
        int k = K + 1;
        for (int kk = 1; kk <= K; ++kk)
            if (dist < sc.radius(kk)) { k = kk; break; }
        if (k > K) continue;
        const double m = cloud.mark(i);
        if (m >= 0.5 && m < 0.75) nbrs[k].push_back({i, m, dist});
        else if (m >= 0.75) conns[k].push_back({i, m, dist});
        else if (m >= sc.mark_level(k + 1) && m < sc.mark_level(k)) mids[k].push_back({i, m, dist});
    }

    auto connected = [&](std::uint32_t a, std::uint32_t b) {
        const double dist = distance(cloud.domain, cloud.position(a), cloud.position(b));
        const double p = connection_probability(spec, d, cloud.mark(a), cloud.mark(b), dist);
        return pair_uniform(seed, a, b) < p;
    };

    std::uint32_t prev_mid = x;
    for (int k = 1; k <= K; ++k) {
        StarRecord star;
        if (k == 1) {
            star.midpoint = x;  // the root is always the first midpoint
            star.mark = root_mark;
        } else {
            const Candidate* best = nullptr;
            for (const auto& c : mids[k])
                if (!best || c.mark < best->mark || (c.mark == best->mark && c.id < best->id))
                    best = &c;
            if (!best) break;  // S_k empty
            star.midpoint = best->id;
            star.mark = best->mark;
        }
        for (const auto& c : nbrs[k])
            if (c.id != star.midpoint && connected(star.midpoint, c.id))
                star.neighbor_ids.push_back(c.id);
        if (star.neighbor_ids.size() < sc.r) break;
        if (k >= 2) {
            std::optional<std::uint32_t> connector;
            for (const auto& c : conns[k - 1]) {
                if (connected(c.id, prev_mid) && connected(c.id, star.midpoint)) {
                    connector = c.id;
                    break;
                }
            }
            if (!connector) break;
            star.connector = connector;
        }
        prev_mid = star.midpoint;
        result.stars.push_back(std::move(star));
        result.found = k;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Box hierarchy.
// ---------------------------------------------------------------------------

BoxHierarchyParams resolve_box_params(const KernelSpec& spec, BoxHierarchyParams p) {
    spec.validate();
    const double growth = spec.gamma + spec.gamma / spec.delta;
    if (!(growth > 1.0))
        throw std::invalid_argument(
            "resolve_box_params: needs the ultrasmall regime gamma + gamma/delta > 1");
    const double log2 = std::log(2.0);
    if (p.a == 0.0) p.a = 0.5 / log2;
    if (p.eps1 == 0.0) p.eps1 = 0.5 * log2 * (growth - 1.0);
    const double theta_lo = (p.eps1 + log2) / growth;
    if (p.theta3 == 0.0) p.theta3 = 0.5 * (theta_lo + log2);
    if (p.eps3 == 0.0) p.eps3 = 0.5 * std::min(p.theta3 * spec.gamma, spec.delta * p.eps1);

    if (!(p.a > 0.0 && p.a < 1.0 / log2))
        throw std::invalid_argument("box params: need 0 < a < 1/log 2");
    if (!(p.eps1 > 0.0 && log2 > (p.eps1 + log2) / growth))
        throw std::invalid_argument(
            "box params: need eps1 > 0 with log 2 > (eps1 + log 2)/(gamma + gamma/delta)");
    if (!(p.theta3 > theta_lo && p.theta3 < log2))
        throw std::invalid_argument(
            "box params: need (eps1 + log 2)/(gamma + gamma/delta) < theta3 < log 2");
    if (!(p.eps3 > 0.0 && p.eps3 < std::min(p.theta3 * spec.gamma, spec.delta * p.eps1)))
        throw std::invalid_argument(
            "box params: need 0 < eps3 < theta3 gamma ^ delta eps1");
    if (p.star_size < 1) throw std::invalid_argument("box params: star size must be >= 1");
    return p;
}

std::int64_t BoxHierarchy::lattice_side(int k) const {
    return n_p * (std::int64_t{1} << (k_p - k));
}

std::int64_t BoxHierarchy::layer_boxes(int k) const {
    std::int64_t total = 1;
    for (int i = 0; i < d; ++i) total *= lattice_side(k);
    return total;
}

std::pair<double, double> BoxHierarchy::mark_interval(int k) const {
    const double td = params.theta3 * d;
    return {0.5 * std::exp(-(k + 1) * td), 0.5 * std::exp(-k * td)};
}

int BoxHierarchy::mark_layer(double mark) const {
    if (!(mark > 0.0) || mark >= 0.5) return -1;
    const double x = std::log(0.5 / mark) / (params.theta3 * d);
    const int k = static_cast<int>(x);
    return k <= k_p ? k : -1;
}

double BoxHierarchy::color_probability(int k) const {
    const double rate = (std::min(params.theta3 * spec.gamma, spec.delta * params.eps1) -
                         params.eps3) * d;
    return (1.0 - std::exp(-rate)) * std::exp(-k * rate);
}

BoxHierarchy build_box_hierarchy(double volume_n, int d, const KernelSpec& spec,
                                 BoxHierarchyParams params) {
    if (!(volume_n > 1.0)) throw std::invalid_argument("build_box_hierarchy: need n > 1");
    if (d < 1) throw std::invalid_argument("build_box_hierarchy: need d >= 1");
    BoxHierarchy h;
    h.volume_n = volume_n;
    h.d = d;
    h.params = resolve_box_params(spec, params);
    h.spec = spec;
    const double log2 = std::log(2.0);
    h.n_p = static_cast<std::int64_t>(
        std::floor(std::pow(volume_n, (1.0 - h.params.a * log2) / d)));
    h.k_p = static_cast<int>(std::floor(h.params.a * std::log(volume_n) / d));
    if (h.n_p < 1 || h.k_p < 0)
        throw std::invalid_argument("build_box_hierarchy: degenerate lattice (n too small)");
    return h;
}

namespace {

// Snake (boustrophedon) order over a d-dimensional lattice of side m:
// consecutive boxes are lattice-adjacent and the walk starts at the origin.
std::vector<std::int64_t> snake_order(int d, std::int64_t m) {
    std::int64_t total = 1;
    for (int i = 0; i < d; ++i) total *= m;
    std::vector<std::int64_t> order(total);
    std::vector<std::int64_t> coord(d, 0);
    for (std::int64_t i = 0; i < total; ++i) {
        std::int64_t lin = 0;
        for (int k = d - 1; k >= 0; --k) lin = lin * m + coord[k];
        order[i] = lin;
        // Advance axis 0 in the direction set by the parity of higher axes.
        int axis = 0;
        while (axis < d) {
            std::int64_t parity = 0;
            for (int k = axis + 1; k < d; ++k) parity += coord[k];
            const int dir = parity % 2 == 0 ? 1 : -1;
            const std::int64_t next = coord[axis] + dir;
            if (next >= 0 && next < m) {
                coord[axis] = next;
                break;
            }
            ++axis;  // row exhausted; carry to the next axis
        }
    }
    return order;
}

struct BoxPoints {
    double min_mark = 2.0;
    std::uint32_t min_id = 0;
    bool nonempty = false;
    std::vector<std::uint32_t> nbr_candidates;   // color-k, mark in [1/2, 3/4)
    std::vector<std::uint32_t> con_candidates;   // color-k, mark in [3/4, 1)
};

}  // namespace

BoxClassification classify_good_boxes(const BoxHierarchy& h, const PointCloud& cloud,
                                      std::uint64_t seed,
                                      const std::vector<int>* color_override) {
    const int d = h.d;
    const double half = 0.5 * cloud.domain.side;
    const double rate = (std::min(h.params.theta3 * h.spec.gamma,
                                  h.spec.delta * h.params.eps1) -
                         h.params.eps3) * d;
    const double rho = std::exp(-rate);

    // Region coordinates: shift the centered domain to [0, side]^d.
    auto region = [&](std::uint32_t i, int axis) { return cloud.position(i)[axis] + half; };

    auto color_of = [&](std::uint32_t i) -> int {
        if (color_override) return (*color_override)[i];
        const double u = u64_to_unit(derive_stream_seed(seed, kColorTag ^ i));
        const int c = static_cast<int>(std::log1p(-u) / std::log(rho));
        return c <= h.k_p ? c : -1;
    };

    // Per-layer posting of midpoints and colored candidates.
    std::vector<std::vector<BoxPoints>> layers(h.k_p + 1);
    for (int k = 0; k <= h.k_p; ++k)
        layers[k].resize(static_cast<std::size_t>(h.layer_boxes(k)));

    auto box_index = [&](int k, std::uint32_t i) -> std::int64_t {
        const double side = h.cube_side(k);
        const std::int64_t m = h.lattice_side(k);
        std::int64_t lin = 0;
        for (int axis = d - 1; axis >= 0; --axis) {
            const double r = region(i, axis);
            if (r < 0.0) return -1;
            const auto c = static_cast<std::int64_t>(r / side);
            if (c < 0 || c >= m) return -1;
            lin = lin * m + c;
        }
        return lin;
    };

    for (std::uint32_t i = 0; i < cloud.size(); ++i) {
        const double mark = cloud.mark(i);
        if (mark < 0.5) {
            const int k = h.mark_layer(mark);
            if (k < 0) continue;
            const std::int64_t b = box_index(k, i);
            if (b < 0) continue;
            auto& box = layers[k][b];
            if (!box.nonempty || mark < box.min_mark ||
                (mark == box.min_mark && i < box.min_id)) {
                box.min_mark = mark;
                box.min_id = i;
            }
            box.nonempty = true;
        } else {
            const int c = color_of(i);
            if (c < 0 || c > h.k_p) continue;
            const std::int64_t b = box_index(c, i);
            if (b < 0) continue;
            if (mark < 0.75) layers[c][b].nbr_candidates.push_back(i);
            else layers[c][b].con_candidates.push_back(i);
        }
    }

    auto dist_region = [&](std::uint32_t a, std::uint32_t b) {
        double sq = 0.0;
        for (int axis = 0; axis < d; ++axis) {
            const double diff = cloud.position(a)[axis] - cloud.position(b)[axis];
            sq += diff * diff;
        }
        return std::sqrt(sq);
    };
    auto connected = [&](std::uint32_t a, std::uint32_t b) {
        const double p = connection_probability(h.spec, d, cloud.mark(a), cloud.mark(b),
                                                dist_region(a, b));
        return pair_uniform(seed, a, b) < p;
    };
    auto star_ok = [&](const BoxPoints& box) {
        if (!box.nonempty) return false;
        int count = 0;
        for (std::uint32_t z : box.nbr_candidates)
            if (connected(box.min_id, z) && ++count >= h.params.star_size) return true;
        return false;
    };
    auto connector_ok = [&](const BoxPoints& box, std::uint32_t other_mid) {
        for (std::uint32_t z : box.con_candidates)
            if (connected(z, box.min_id) && connected(z, other_mid)) return true;
        return false;
    };

    BoxClassification out;
    out.boxes.resize(h.k_p + 1);
    out.good.resize(h.k_p + 1);
    out.flags.resize(h.k_p + 1);
    for (int k = 0; k <= h.k_p; ++k) {
        out.boxes[k] = h.layer_boxes(k);
        out.flags[k].assign(static_cast<std::size_t>(out.boxes[k]), 0);
    }

    // Top layer: goodness chains along the snake order.
    {
        const int k = h.k_p;
        const auto order = snake_order(d, h.lattice_side(k));
        bool prev_good = false;
        std::uint32_t prev_mid = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const std::int64_t b = order[i];
            const auto& box = layers[k][b];
            bool good = box.nonempty && star_ok(box);
            if (i > 0)
                good = good && prev_good && connector_ok(box, prev_mid);
            out.flags[k][b] = good ? 1 : 0;
            prev_good = good;
            if (good) prev_mid = box.min_id;
        }
    }

    // Lower layers: parent box is the containing cube one layer up.
    for (int k = h.k_p - 1; k >= 0; --k) {
        const std::int64_t m = h.lattice_side(k);
        const std::int64_t mp = h.lattice_side(k + 1);
        for (std::int64_t b = 0; b < h.layer_boxes(k); ++b) {
            const auto& box = layers[k][b];
            if (!box.nonempty) continue;
            // Parent linear index: halve each coordinate.
            std::int64_t rem = b, parent = 0, mul = 1;
            for (int axis = 0; axis < d; ++axis) {
                const std::int64_t c = rem % m;
                rem /= m;
                parent += (c / 2) * mul;
                mul *= mp;
            }
            if (!out.flags[k + 1][parent]) continue;
            const auto& pbox = layers[k + 1][parent];
            if (star_ok(box) && connector_ok(box, pbox.min_id)) out.flags[k][b] = 1;
        }
    }

    for (int k = 0; k <= h.k_p; ++k)
        out.good[k] = std::count(out.flags[k].begin(), out.flags[k].end(), std::uint8_t{1});
    return out;
}

double good_box_fraction(const BoxClassification& c, const BoxHierarchy& h) {
    if (c.good.empty()) return 0.0;
    return static_cast<double>(c.good[0]) / h.volume_n;
}

}  // namespace cpgg

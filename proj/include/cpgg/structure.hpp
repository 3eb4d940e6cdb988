#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpgg/graph.hpp"
#include "cpgg/kernels.hpp"
#include "cpgg/point_process.hpp"

namespace cpgg {

struct TailFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    int points = 0;
};

// Least-squares slope of log empirical CCDF against log k over a geometric
// grid of degree thresholds k >= k_min. Requires at least 100 vertices of
// degree >= k_min and at least 3 usable grid points, otherwise throws (the
// insufficient-tail error).
TailFit degree_tail_fit(std::span<const std::uint64_t> degrees, std::uint64_t k_min);
TailFit degree_tail_fit(const GraphSample& graph, std::uint64_t k_min);

// ---------------------------------------------------------------------------
// Half-line-of-stars search.
// ---------------------------------------------------------------------------

struct StarChainParams {
    double lambda = 0.3;
    double beta_star = 1.0;  // r = ceil(beta_star log(1/lambda) lambda^-2)
    double theta_chain = 0.0;  // 0 picks the midpoint of (1, gamma+gamma/delta)
    int stars = 3;             // requested chain length K
};

struct StarChainScales {
    std::uint64_t r = 1;   // required star size
    double t_sp = 0.0;     // mark threshold
    double theta = 0.0;
    double growth = 0.0;   // gamma + gamma/delta

    double mark_level(int k) const;   // T_k
    double radius(int k) const;       // R_k, R_0 = 0
};
StarChainScales star_chain_scales(const StarChainParams& params, const KernelSpec& spec,
                                  int d);

struct StarRecord {
    std::uint32_t midpoint = 0;
    double mark = 0.0;
    std::vector<std::uint32_t> neighbor_ids;       // adjacent candidates in S_k^(1)
    std::optional<std::uint32_t> connector;        // link to the previous star
};

struct StarChainResult {
    std::vector<StarRecord> stars;  // completed stars, in chain order
    int found = 0;
};

// Constructive search for a half-line of K stars rooted at vertex x (mark
// below t_sp): per annulus k the smallest-mark vertex of S_k is the midpoint,
// its S_k^(1) neighbours are counted against r, and consecutive midpoints
// must share a connector in S_{k-1}^(2). Only the half-space beyond the
// hyperplane through x with normal x is explored. Edges are drawn on demand
// with pair-keyed randomness under `seed`. Stops at the first failure.
StarChainResult find_star_chain(const PointCloud& cloud, const KernelSpec& spec,
                                std::uint32_t x, const StarChainParams& params,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Good-box hierarchy.
// ---------------------------------------------------------------------------

struct BoxHierarchyParams {
    double a = 0.0;        // 0 picks 1/(2 log 2)
    double theta3 = 0.0;   // 0 picks the midpoint of ((eps1+log2)/(g+g/d), log2)
    double eps1 = 0.0;     // 0 picks half of log2 (g+g/d-1)
    double eps3 = 0.0;     // 0 picks half of (theta3 g ^ delta eps1)
    int star_size = 3;     // S
};
BoxHierarchyParams resolve_box_params(const KernelSpec& spec, BoxHierarchyParams p);

struct BoxHierarchy {
    double volume_n = 0.0;
    int d = 1;
    std::int64_t n_p = 1;
    int k_p = 0;
    BoxHierarchyParams params;
    KernelSpec spec;

    std::int64_t lattice_side(int k) const;   // n_p 2^(k_p - k)
    std::int64_t layer_boxes(int k) const;    // lattice_side^d
    double cube_side(int k) const { return static_cast<double>(std::int64_t{1} << k); }
    // Mark interval (1/2 e^-(k+1) theta d, 1/2 e^-k theta d].
    std::pair<double, double> mark_interval(int k) const;
    // Layer of a mark below 1/2, or -1 when below the deepest interval.
    int mark_layer(double mark) const;
    // Color probability of layer k under the geometric coloring.
    double color_probability(int k) const;
};

// Materializes lattices, mark intervals and parent links; no point data.
// Parameter-window violations are rejected with the violated inequality
// named.
BoxHierarchy build_box_hierarchy(double volume_n, int d, const KernelSpec& spec,
                                 BoxHierarchyParams params);

struct BoxClassification {
    std::vector<std::int64_t> boxes;              // per layer
    std::vector<std::int64_t> good;               // per layer
    std::vector<std::vector<std::uint8_t>> flags; // per layer, box-linear index
};

// Good-box conditions per layer, from the snake-seeded top layer downward:
// parent good, box nonempty, the minimal-mark vertex has at least S
// designated neighbours, and a connector links it to the parent midpoint.
// The cloud is interpreted in region coordinates [0, side]^d (positions are
// shifted from the centered domain). Colors come from the geometric layer
// coloring keyed by (seed, vertex id), or from `color_override` (-1 = null).
BoxClassification classify_good_boxes(const BoxHierarchy& h, const PointCloud& cloud,
                                      std::uint64_t seed,
                                      const std::vector<int>* color_override = nullptr);

// Layer-0 good count divided by the full volume n.
double good_box_fraction(const BoxClassification& c, const BoxHierarchy& h);

}  // namespace cpgg

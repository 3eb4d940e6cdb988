#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpgg/rng.hpp"

namespace cpgg {

enum class Boundary { free, torus };

// Axis-aligned box [-L/2, L/2]^d, optionally with periodic boundary.
struct SpatialDomain {
    int dim = 1;
    double side = 1.0;
    Boundary boundary = Boundary::free;

    double volume() const;
    bool contains(std::span<const double> pos) const;
};

// Marked point cloud stored struct-of-arrays; vertex i has position
// positions[i*d .. i*d+d) and mark marks[i]. Ids are dense 0..N-1 in
// generation order; all downstream tie-breaking uses ids.
struct PointCloud {
    SpatialDomain domain;
    std::vector<double> positions;
    std::vector<double> marks;
    std::optional<std::uint32_t> palm_origin;

    std::size_t size() const { return marks.size(); }
    std::span<const double> position(std::size_t i) const {
        return {positions.data() + i * domain.dim, static_cast<std::size_t>(domain.dim)};
    }
    double mark(std::size_t i) const { return marks[i]; }
    // Appends a vertex and returns its id.
    std::uint32_t push_vertex(std::span<const double> pos, double mark);
};

// Unit-intensity Poisson cloud: N ~ Poisson(volume), then N iid uniform
// positions and open-(0,1) marks. Deterministic given (domain, seed).
PointCloud sample_point_cloud(const SpatialDomain& domain, std::uint64_t seed);

// Palm version: one extra vertex at the origin with an independent
// uniform(0,1) mark, or `fixed_mark` when conditioning on the origin mark.
// Rejects clouds that already have a palm origin.
PointCloud add_palm_origin(PointCloud cloud, std::uint64_t seed,
                           std::optional<double> fixed_mark = std::nullopt);

// Metric of the domain: euclidean, or per-coordinate wrap-around minimum for
// the torus.
double distance(const SpatialDomain& domain, std::span<const double> a,
                std::span<const double> b);

}  // namespace cpgg

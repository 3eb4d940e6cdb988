#include "cpgg/point_process.hpp"

#include <cmath>
#include <stdexcept>

namespace cpgg {

double SpatialDomain::volume() const {
    if (dim < 1) throw std::invalid_argument("SpatialDomain: dim must be >= 1");
    if (side < 0.0) throw std::invalid_argument("SpatialDomain: side must be >= 0");
    return std::pow(side, dim);
}

bool SpatialDomain::contains(std::span<const double> pos) const {
    if (pos.size() != static_cast<std::size_t>(dim)) return false;
    const double half = 0.5 * side;
    for (double x : pos)
        if (x < -half || x > half) return false;
    return true;
}

std::uint32_t PointCloud::push_vertex(std::span<const double> pos, double mark) {
    positions.insert(positions.end(), pos.begin(), pos.end());
    marks.push_back(mark);
    return static_cast<std::uint32_t>(marks.size() - 1);
}

PointCloud sample_point_cloud(const SpatialDomain& domain, std::uint64_t seed) {
    PointCloud cloud;
    cloud.domain = domain;
    const double vol = domain.volume();
    SplitMix64 rng(derive_stream_seed(seed, 0x706F696E74ull));
    const std::uint64_t n = rng.next_poisson(vol);
    cloud.positions.reserve(n * domain.dim);
    cloud.marks.reserve(n);
    const double half = 0.5 * domain.side;
    for (std::uint64_t i = 0; i < n; ++i) {
        for (int k = 0; k < domain.dim; ++k)
            cloud.positions.push_back(rng.next_uniform(-half, half));
        // Open interval: redraw the (probability-zero) endpoints so mark^-g
        // stays finite downstream.
        double m;
        do { m = rng.next_unit(); } while (m <= 0.0 || m >= 1.0);
        cloud.marks.push_back(m);
    }
    return cloud;
}

PointCloud add_palm_origin(PointCloud cloud, std::uint64_t seed,
                           std::optional<double> fixed_mark) {
    if (cloud.palm_origin)
        throw std::invalid_argument("add_palm_origin: cloud already has a palm origin");
    double mark;
    if (fixed_mark) {
        mark = *fixed_mark;
        if (mark <= 0.0 || mark >= 1.0)
            throw std::invalid_argument("add_palm_origin: fixed mark must lie in (0,1)");
    } else {
        SplitMix64 rng(derive_stream_seed(seed, 0x70616C6Dull));
        do { mark = rng.next_unit(); } while (mark <= 0.0 || mark >= 1.0);
    }
    const std::vector<double> zeros(cloud.domain.dim, 0.0);
    cloud.palm_origin = cloud.push_vertex(zeros, mark);
    return cloud;
}

double distance(const SpatialDomain& domain, std::span<const double> a,
                std::span<const double> b) {
    double sq = 0.0;
    for (int k = 0; k < domain.dim; ++k) {
        double diff = std::abs(a[k] - b[k]);
        if (domain.boundary == Boundary::torus)
            diff = std::min(diff, domain.side - diff);
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

}  // namespace cpgg

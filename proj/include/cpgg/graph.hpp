#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "cpgg/kernels.hpp"
#include "cpgg/point_process.hpp"

namespace cpgg {

// What the per-pair uniform draw is keyed by. Id keying is the default; the
// position keying makes the edge set invariant under id permutations of the
// same geometric points.
enum class PairKeying { by_id, by_position };

struct SamplerOptions {
    PairKeying keying = PairKeying::by_id;
    // The exact sampler refuses clouds above this size unless overridden, to
    // prevent accidental quadratic blowups.
    bool allow_large_exact = false;
};

// Immutable sampled graph; adjacency in CSR form with sorted neighbor lists.
struct GraphSample {
    std::shared_ptr<const PointCloud> cloud;
    std::vector<std::uint64_t> offsets;    // size N+1
    std::vector<std::uint32_t> adjacency;  // sorted within each row
    std::uint64_t edge_count = 0;

    std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::uint64_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
    std::span<const std::uint32_t> neighbors(std::size_t i) const {
        return {adjacency.data() + offsets[i], static_cast<std::size_t>(degree(i))};
    }
    bool has_edge(std::uint32_t u, std::uint32_t v) const;
};

// Reference sampler: every unordered pair (i,j), i < j ascending, is tested
// once against one pair-keyed uniform.
GraphSample sample_graph_exact(std::shared_ptr<const PointCloud> cloud,
                               const KernelSpec& spec, std::uint64_t seed,
                               const SamplerOptions& opts = {});

// Distribution-identical sampler: per vertex, candidate partners are scanned
// in cell-distance order under an upper-bound envelope with skip-ahead, and
// accepted at ratio p/p_max using the same pair-keyed uniforms.
GraphSample sample_graph_accelerated(std::shared_ptr<const PointCloud> cloud,
                                     const KernelSpec& spec, std::uint64_t seed,
                                     const SamplerOptions& opts = {});

std::vector<std::uint64_t> degree_sequence(const GraphSample& g);

// Plain-text exports: edge list "u v" per line, vertex table
// "id x_1..x_d mark" at 12 significant digits.
void write_edge_list(const GraphSample& g, std::ostream& out);
void write_vertex_table(const PointCloud& cloud, std::ostream& out);

// Builds a graph from an explicit edge list over `n` vertices (fixtures).
GraphSample graph_from_edges(std::size_t n,
                             const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                             std::shared_ptr<const PointCloud> cloud = nullptr);

}  // namespace cpgg

#include "cpgg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

namespace cpgg {

namespace {

constexpr std::uint64_t kScanStreamTag = 0xACCE55ull;

int ipow_supported(int d) {
    if (d < 1 || d > 16) throw std::invalid_argument("graph sampler: dimension out of range");
    return d;
}

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

// Mark band: t in [2^-(k+1), 2^-k) has band k.
int mark_band(double t) {
    int e;
    std::frexp(t, &e);
    return -e;
}

std::uint64_t hash_double_bits(std::uint64_t h, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    return mix64(h ^ (bits + GOLDEN_GAMMA));
}

std::vector<std::uint64_t> make_pair_keys(const PointCloud& cloud, PairKeying keying) {
    const std::size_t n = cloud.size();
    std::vector<std::uint64_t> keys(n);
    if (keying == PairKeying::by_id) {
        for (std::size_t i = 0; i < n; ++i) keys[i] = i;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t h = 0x5CA1AB1Eull;
            for (double x : cloud.position(i)) h = hash_double_bits(h, x);
            keys[i] = hash_double_bits(h, cloud.mark(i));
        }
    }
    return keys;
}

// Kernel evaluator with per-vertex mark transforms so the pair probability
// costs one divide and at most one pow-like call. Matches
// connection_probability up to floating-point association.
struct FastKernel {
    KernelVariant variant;
    int d = 1;
    double delta = 2.0;
    double cap = 1.0;
    double scale = 1.0;           // W multiplier (beta, kappa^(1/delta), ...)
    int pow_mode = 0;             // 1: delta==2, 2: delta==1.5, 3: delta==3
    std::vector<double> A;        // soft: radius t^-g/d; others: t^-g
    std::vector<double> B;        // t^-(1-g) where needed
    const double* marks = nullptr;

    static FastKernel build(const PointCloud& cloud, const KernelSpec& spec) {
        FastKernel k;
        k.variant = spec.variant;
        k.d = ipow_supported(cloud.domain.dim);
        k.marks = cloud.marks.data();
        if (spec.variant == KernelVariant::const_one) { k.cap = 1.0; return k; }
        if (spec.variant == KernelVariant::const_zero) { k.cap = 0.0; return k; }
        spec.validate();
        k.delta = spec.delta;
        if (k.delta == 2.0) k.pow_mode = 1;
        else if (k.delta == 1.5) k.pow_mode = 2;
        else if (k.delta == 3.0) k.pow_mode = 3;
        const std::size_t n = cloud.size();
        switch (spec.variant) {
            case KernelVariant::soft_boolean:
                k.A.resize(n);
                for (std::size_t i = 0; i < n; ++i)
                    k.A[i] = std::pow(cloud.mark(i), -spec.gamma / k.d);
                break;
            case KernelVariant::age_rcm:
                k.scale = spec.beta_scale;
                k.A.resize(n);
                k.B.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    k.A[i] = std::pow(cloud.mark(i), -spec.gamma);
                    k.B[i] = std::pow(cloud.mark(i), spec.gamma - 1.0);
                }
                break;
            case KernelVariant::pref_attach_upper:
                k.scale = std::pow(spec.kappa2, 1.0 / spec.delta);
                k.A.resize(n);
                k.B.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    k.A[i] = std::pow(cloud.mark(i), -spec.gamma);
                    k.B[i] = std::pow(cloud.mark(i), spec.gamma - 1.0);
                }
                break;
            case KernelVariant::min_lower:
                k.cap = spec.alpha;
                k.scale = std::pow(spec.kappa1, 1.0 / spec.delta);
                k.A.resize(n);
                for (std::size_t i = 0; i < n; ++i)
                    k.A[i] = std::pow(cloud.mark(i), -spec.gamma);
                break;
            default:
                break;
        }
        return k;
    }

    // x^-delta for x >= 1.
    double powneg(double x) const {
        switch (pow_mode) {
            case 1: return 1.0 / (x * x);
            case 2: return 1.0 / (x * std::sqrt(x));
            case 3: return 1.0 / (x * x * x);
            default: return std::pow(x, -delta);
        }
    }

    double effective_volume(std::uint32_t i, std::uint32_t j) const {
        switch (variant) {
            case KernelVariant::soft_boolean:
                return ipow(A[i] + A[j], d);
            case KernelVariant::age_rcm:
            case KernelVariant::pref_attach_upper:
                return marks[i] <= marks[j] ? scale * A[i] * B[j] : scale * A[j] * B[i];
            case KernelVariant::min_lower:
                return scale * std::max(A[i], A[j]);
            default:
                return 1.0;
        }
    }

    double prob(std::uint32_t i, std::uint32_t j, double dist) const {
        if (variant == KernelVariant::const_one) return 1.0;
        if (variant == KernelVariant::const_zero) return 0.0;
        const double w = ipow(dist, d);
        const double W = effective_volume(i, j);
        if (w <= W) return cap;
        return cap * powneg(w / W);
    }

};

// Builds CSR from a normalized edge list; duplicate entries (re-proposed
// pairs always share the edge decision) are removed row-wise.
GraphSample finish_graph(std::shared_ptr<const PointCloud> cloud,
                         std::vector<std::pair<std::uint32_t, std::uint32_t>>&& edges) {
    GraphSample g;
    const std::size_t n = cloud ? cloud->size() : 0;
    g.cloud = std::move(cloud);
    g.offsets.assign(n + 1, 0);
    for (const auto& [u, v] : edges) {
        ++g.offsets[u + 1];
        ++g.offsets[v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
    g.adjacency.resize(edges.size() * 2);
    std::vector<std::uint64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
    for (const auto& [u, v] : edges) {
        g.adjacency[cursor[u]++] = v;
        g.adjacency[cursor[v]++] = u;
    }
    edges.clear();
    edges.shrink_to_fit();
    std::uint64_t write = 0;
    std::uint64_t row_start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto begin = g.adjacency.begin() + row_start;
        const auto end = g.adjacency.begin() + g.offsets[i + 1];
        row_start = g.offsets[i + 1];
        std::sort(begin, end);
        const auto tail = std::unique(begin, end);
        g.offsets[i] = write;
        for (auto it = begin; it != tail; ++it) g.adjacency[write++] = *it;
        g.offsets[i + 1] = write;  // provisional; fixed by the next row
    }
    g.offsets[n] = write;
    g.adjacency.resize(write);
    g.edge_count = write / 2;
    return g;
}

double torus_dist_1d(double a, double b, double side) {
    double dx = std::abs(a - b);
    return std::min(dx, side - dx);
}

// ---------------------------------------------------------------------------
// Accelerated sampler, d == 1.
//
// Pairs are processed from the endpoint with the stronger (higher) mark band;
// within a band, from the smaller mark. For a source vertex the candidates of
// one target band are scanned in cell-distance order in dyadic distance
// blocks. Within the scan a unit-rate ladder over per-slot weights
// -log(1-p_max) proposes exactly Bernoulli(p_max) slots, and proposals are
// accepted at ratio p/p_max with the pair-keyed uniform.
// ---------------------------------------------------------------------------

struct BandIndex1D {
    std::vector<std::vector<std::uint32_t>> ids;   // per band, sorted by position
    std::vector<std::vector<double>> pos;
    std::vector<std::vector<std::uint32_t>> first; // per band, size C+1: first idx in cell >= c
    // tail[b][j] bounds sum over blocks j' >= j of (slot count) * (envelope /
    // (cap Wenv^delta)); with the scan's cap Wenv^delta factor this caps the
    // total proposal weight past block j. m_ub[b][j] bounds block j's slots.
    std::vector<std::vector<double>> tail;
    std::vector<std::vector<double>> m_ub;
    int nbands = 0;
    std::int64_t cells = 1;
    double cell_width = 1.0;
};

BandIndex1D build_band_index_1d(const PointCloud& cloud, double delta) {
    BandIndex1D ix;
    const double side = cloud.domain.side;
    ix.cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(side)));
    ix.cell_width = side / static_cast<double>(ix.cells);
    const std::size_t n = cloud.size();
    int maxband = 0;
    std::vector<int> band(n);
    for (std::size_t i = 0; i < n; ++i) {
        band[i] = mark_band(cloud.mark(i));
        maxband = std::max(maxband, band[i]);
    }
    ix.nbands = n == 0 ? 1 : maxband + 1;
    ix.ids.resize(ix.nbands);
    ix.pos.resize(ix.nbands);
    std::vector<std::size_t> counts(ix.nbands, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[band[i]];
    for (int b = 0; b < ix.nbands; ++b) {
        ix.ids[b].reserve(counts[b]);
        ix.pos[b].reserve(counts[b]);
    }
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b2) {
        return cloud.positions[a] < cloud.positions[b2];
    });
    for (std::uint32_t id : order) {
        ix.ids[band[id]].push_back(id);
        ix.pos[band[id]].push_back(cloud.positions[id]);
    }
    ix.first.resize(ix.nbands);
    ix.tail.resize(ix.nbands);
    ix.m_ub.resize(ix.nbands);
    const double half = 0.5 * side;
    int levels = 1;
    while ((std::int64_t{1} << levels) < ix.cells) ++levels;
    for (int b = 0; b < ix.nbands; ++b) {
        auto& first = ix.first[b];
        first.resize(ix.cells + 1);
        first[0] = 0;
        std::size_t j = 0;
        for (std::int64_t c = 0; c < ix.cells; ++c) {
            const double upper = -half + (c + 1) * ix.cell_width;
            while (j < ix.pos[b].size() && ix.pos[b][j] < upper) ++j;
            first[c + 1] = static_cast<std::uint32_t>(j);
        }
        first[ix.cells] = static_cast<std::uint32_t>(ix.pos[b].size());

        // Max count over aligned windows of 2^j cells; a block's two arcs
        // touch at most 8 such windows, and its envelope stays below
        // cap Wenv^delta (2^(j-1) cw)^-delta.
        auto& m_ub = ix.m_ub[b];
        m_ub.assign(levels + 1, 0.0);
        for (int lev = 0; lev <= levels; ++lev) {
            const std::int64_t w = std::int64_t{1} << lev;
            std::uint32_t best = 0;
            for (std::int64_t c = 0; c < ix.cells; c += w) {
                const std::int64_t hi = std::min(c + w, ix.cells);
                best = std::max(best, first[hi] - first[c]);
            }
            m_ub[lev] = 8.0 * best;
        }
        auto& tail = ix.tail[b];
        tail.assign(levels + 2, 0.0);
        for (int lev = levels; lev >= 1; --lev) {
            const double w_lo = std::ldexp(ix.cell_width, lev - 1);
            tail[lev] = tail[lev + 1] + m_ub[lev] * std::pow(w_lo, -delta);
        }
        tail[0] = tail[1];
    }
    return ix;
}

struct Segment {
    std::uint32_t start = 0;
    std::uint32_t count = 0;
};

// Cell ranges at cell distance in [d1, d2) from cell c; at most 4 contiguous
// index ranges after torus wrapping.
int block_segments(std::int64_t c, std::int64_t d1, std::int64_t d2, std::int64_t cells,
                   bool torus, const std::vector<std::uint32_t>& first, Segment out[4]) {
    int nseg = 0;
    auto push_cells = [&](std::int64_t lo, std::int64_t hi) {  // inclusive cell range
        if (lo > hi) return;
        const std::uint32_t a = first[lo], b = first[hi + 1];
        if (b > a) out[nseg++] = {a, b - a};
    };
    auto push_wrapped = [&](std::int64_t lo, std::int64_t hi) {
        if (lo > hi) return;
        if (!torus) {
            push_cells(std::max<std::int64_t>(lo, 0), std::min(hi, cells - 1));
            return;
        }
        if (hi - lo + 1 >= cells) { push_cells(0, cells - 1); return; }
        // Inputs stay within one wrap of the range.
        if (lo < 0) { lo += cells; } else if (lo >= cells) { lo -= cells; }
        if (hi < 0) { hi += cells; } else if (hi >= cells) { hi -= cells; }
        if (lo <= hi) push_cells(lo, hi);
        else { push_cells(lo, cells - 1); push_cells(0, hi); }
    };
    const std::int64_t hi_max = torus ? cells / 2 : cells - 1;
    const std::int64_t lo_max = torus ? (cells - 1) / 2 : cells - 1;
    const std::int64_t rhs = std::min(d2 - 1, hi_max);
    const std::int64_t lhs = std::min(d2 - 1, lo_max);
    push_wrapped(c + d1, c + rhs);
    const std::int64_t l1 = std::max<std::int64_t>(d1, 1);  // own cell only once
    push_wrapped(c - lhs, c - l1);
    return nseg;
}

GraphSample accelerated_1d(std::shared_ptr<const PointCloud> cloudp, const KernelSpec& spec,
                           std::uint64_t seed, const SamplerOptions& opts) {
    const PointCloud& cloud = *cloudp;
    const std::size_t n = cloud.size();
    const double side = cloud.domain.side;
    const bool torus = cloud.domain.boundary == Boundary::torus;
    const FastKernel kern = FastKernel::build(cloud, spec);
    const std::vector<std::uint64_t> keys = make_pair_keys(cloud, opts.keying);
    const BandIndex1D ix = build_band_index_1d(cloud, kern.delta);
    const double half = 0.5 * side;

    // Dyadic distance blocks: block 0 covers cell distances {0,1} (envelope 1
    // scale), block j >= 1 covers [2^j, 2^(j+1)).
    const std::int64_t dist_cap = torus ? ix.cells / 2 : ix.cells - 1;
    std::vector<std::int64_t> block_lo{0};
    std::vector<double> block_w_lo{0.0};
    for (std::int64_t d1 = 2; d1 <= dist_cap; d1 *= 2) {
        block_lo.push_back(d1);
        block_w_lo.push_back(ipow((d1 - 1) * ix.cell_width, kern.d));
    }

    // Per-band mark floors and their transforms for envelope volumes.
    std::vector<double> floor_radius(ix.nbands), floor_A(ix.nbands), floor_B(ix.nbands);
    for (int b = 0; b < ix.nbands; ++b) {
        const double fl = std::ldexp(1.0, -(b + 1));
        if (spec.variant == KernelVariant::soft_boolean)
            floor_radius[b] = std::pow(fl, -spec.gamma / kern.d);
        else if (spec.variant != KernelVariant::const_one &&
                 spec.variant != KernelVariant::const_zero) {
            floor_A[b] = std::pow(fl, -spec.gamma);
            floor_B[b] = std::pow(fl, spec.gamma - 1.0);
        }
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    if (kern.cap > 0.0) {
        for (std::uint32_t i = 0; i < n; ++i) {
            const double pos_i = cloud.positions[i];
            const double mark_i = cloud.mark(i);
            const int band_i = mark_band(mark_i);
            const std::int64_t cell_i = std::min<std::int64_t>(
                ix.cells - 1,
                std::max<std::int64_t>(0, static_cast<std::int64_t>((pos_i + half) / ix.cell_width)));
            const int btop = std::min(band_i, ix.nbands - 1);
            for (int b = 0; b <= btop; ++b) {
                if (ix.ids[b].empty()) continue;
                // Envelope effective volume over this (source, band) group.
                double Wenv = 1.0;
                switch (spec.variant) {
                    case KernelVariant::soft_boolean:
                        // Partner radius is at most the band-floor radius.
                        Wenv = ipow(kern.A[i] + floor_radius[b], kern.d);
                        break;
                    case KernelVariant::age_rcm:
                    case KernelVariant::pref_attach_upper:
                        Wenv = b == band_i ? kern.scale * floor_A[band_i] * kern.B[i]
                                           : kern.scale * kern.A[i] * floor_B[b];
                        break;
                    case KernelVariant::min_lower:
                        Wenv = b == band_i ? kern.scale * floor_A[band_i] : kern.scale * kern.A[i];
                        break;
                    default:
                        break;
                }
                SplitMix64 ladder(derive_stream_seed(
                    seed, kScanStreamTag + static_cast<std::uint64_t>(i) * ix.nbands + b));
                const auto& pos_arr = ix.pos[b];
                const auto& id_arr = ix.ids[b];
                auto propose = [&](std::uint32_t slot_idx, double pmax) {
                    const std::uint32_t j = id_arr[slot_idx];
                    if (j == i) return;
                    if (b == band_i) {
                        const double mj = cloud.mark(j);
                        if (mj < mark_i || (mj == mark_i && j < i)) return;  // partner's side
                    }
                    double dx = std::abs(pos_arr[slot_idx] - pos_i);
                    if (torus) dx = std::min(dx, side - dx);
                    const double p = kern.prob(i, j, dx);
                    if (p <= 0.0) return;
                    const double u = pair_uniform(seed, keys[i], keys[j]);
                    if (u * pmax < p)
                        edges.emplace_back(std::min<std::uint32_t>(i, j), std::max<std::uint32_t>(i, j));
                };
                const double band_total = static_cast<double>(id_arr.size());
                Segment segs[4];
                auto block_m = [&](std::size_t blk, std::uint64_t& m) {
                    const std::int64_t d1 = block_lo[blk];
                    const std::int64_t d2 =
                        blk + 1 < block_lo.size() ? block_lo[blk + 1] : dist_cap + 1;
                    const int nseg =
                        block_segments(cell_i, d1, d2, ix.cells, torus, ix.first[b], segs);
                    m = 0;
                    for (int s = 0; s < nseg; ++s) m += segs[s].count;
                };
                auto slot_vertex = [&](std::uint64_t k) {
                    for (int s = 0;; ++s) {
                        if (k < segs[s].count) return segs[s].start + static_cast<std::uint32_t>(k);
                        k -= segs[s].count;
                    }
                };

                // Dense phase: blocks whose envelope saturates at the cap are
                // tested slot by slot.
                std::size_t blk = 0;
                for (; blk < block_lo.size(); ++blk) {
                    double pmax = kern.cap;
                    if (spec.variant != KernelVariant::const_one && blk > 0) {
                        const double x = block_w_lo[blk] / Wenv;
                        if (x > 1.0) pmax = kern.cap * kern.powneg(x);
                    }
                    if (pmax < 1.0) break;
                    std::uint64_t m;
                    block_m(blk, m);
                    for (std::uint64_t k = 0; k < m; ++k) propose(slot_vertex(k), 1.0);
                }
                if (kern.cap <= 0.0 || blk >= block_lo.size()) continue;

                // Ladder phase with a pending-uniform residual: the next
                // Poisson point of the weight ladder sits at -log1p(-u) >= u,
                // so blocks and scan tails whose weight is below u resolve
                // without any transcendental call. Residuals past a hit-free
                // block are redrawn (memorylessness).
                const double env_scale = kern.cap / kern.powneg(Wenv);  // cap Wenv^delta
                double u_res = ladder.next_open();
                for (; blk < block_lo.size(); ++blk) {
                    double pmax = kern.cap;
                    {
                        const double x = block_w_lo[blk] / Wenv;
                        if (x > 1.0) pmax = kern.cap * kern.powneg(x);
                    }
                    if (pmax <= 0.0) continue;
                    if (pmax >= 1.0) pmax = 1.0 - 1e-12;  // cap==1 edge within ladder
                    // wslot = -log1p(-pmax) <= pmax/(1-pmax).
                    const double wslot_ub = pmax / (1.0 - pmax);
                    double remaining = wslot_ub * band_total;
                    if (blk >= 1)
                        remaining = std::min(
                            remaining, env_scale * ix.tail[b][blk] / (1.0 - pmax));
                    if (u_res >= remaining) break;  // no point lands in the remainder
                    if (blk >= 1 && u_res >= ix.m_ub[b][blk] * wslot_ub) {
                        u_res = ladder.next_open();  // hit-free block, fresh residual
                        continue;
                    }
                    std::uint64_t m;
                    block_m(blk, m);
                    if (m == 0) continue;
                    if (u_res >= static_cast<double>(m) * wslot_ub) {
                        u_res = ladder.next_open();  // hit-free block, fresh residual
                        continue;
                    }
                    const double wslot = -std::log1p(-pmax);
                    const double blockw = static_cast<double>(m) * wslot;
                    double target = -std::log1p(-u_res);
                    while (target < blockw) {
                        std::uint64_t k = static_cast<std::uint64_t>(target / wslot);
                        if (k >= m) k = m - 1;  // fp edge guard
                        propose(slot_vertex(k), pmax);
                        target += ladder.next_exp();
                    }
                    u_res = ladder.next_open();
                }
            }
        }
    }
    return finish_graph(std::move(cloudp), std::move(edges));
}

// ---------------------------------------------------------------------------
// Accelerated sampler, d >= 2: same scheme with square-annulus cell rings.
// ---------------------------------------------------------------------------

struct CellGridND {
    int d = 2;
    std::int64_t axis_cells = 1;
    double cell_width = 1.0;
    int nbands = 1;
    std::vector<std::vector<std::uint32_t>> cell_ids;   // per cell, sorted by band
    std::vector<std::vector<std::uint32_t>> band_off;   // per cell, size nbands+1
    std::vector<std::uint64_t> band_total;              // per band, across cells
};

CellGridND build_cell_grid_nd(const PointCloud& cloud) {
    CellGridND g;
    g.d = cloud.domain.dim;
    const double side = cloud.domain.side;
    g.axis_cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(side)));
    g.cell_width = side / static_cast<double>(g.axis_cells);
    const std::size_t n = cloud.size();
    std::vector<int> band(n);
    int maxband = 0;
    for (std::size_t i = 0; i < n; ++i) {
        band[i] = mark_band(cloud.mark(i));
        maxband = std::max(maxband, band[i]);
    }
    g.nbands = n == 0 ? 1 : maxband + 1;
    std::int64_t total = 1;
    for (int k = 0; k < g.d; ++k) total *= g.axis_cells;
    g.cell_ids.resize(total);
    g.band_off.resize(total);
    const double half = 0.5 * side;
    auto cell_of = [&](std::uint32_t i) {
        std::int64_t cell = 0;
        for (int k = 0; k < g.d; ++k) {
            auto c = static_cast<std::int64_t>((cloud.position(i)[k] + half) / g.cell_width);
            c = std::clamp<std::int64_t>(c, 0, g.axis_cells - 1);
            cell = cell * g.axis_cells + c;
        }
        return cell;
    };
    g.band_total.assign(g.nbands, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
        g.cell_ids[cell_of(i)].push_back(i);
        ++g.band_total[band[i]];
    }
    for (std::int64_t c = 0; c < total; ++c) {
        auto& ids = g.cell_ids[c];
        std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b2) {
            if (band[a] != band[b2]) return band[a] < band[b2];
            return a < b2;
        });
        auto& off = g.band_off[c];
        off.assign(g.nbands + 1, 0);
        for (std::uint32_t id : ids) ++off[band[id] + 1];
        for (int b = 0; b < g.nbands; ++b) off[b + 1] += off[b];
    }
    return g;
}

GraphSample accelerated_nd(std::shared_ptr<const PointCloud> cloudp, const KernelSpec& spec,
                           std::uint64_t seed, const SamplerOptions& opts) {
    const PointCloud& cloud = *cloudp;
    const std::size_t n = cloud.size();
    const double side = cloud.domain.side;
    const bool torus = cloud.domain.boundary == Boundary::torus;
    const int d = cloud.domain.dim;
    const FastKernel kern = FastKernel::build(cloud, spec);
    const std::vector<std::uint64_t> keys = make_pair_keys(cloud, opts.keying);
    const CellGridND grid = build_cell_grid_nd(cloud);
    const double half = 0.5 * side;

    const std::int64_t off_hi = torus ? grid.axis_cells / 2 : grid.axis_cells - 1;
    const std::int64_t off_lo = torus ? (grid.axis_cells - 1) / 2 : grid.axis_cells - 1;
    const std::int64_t ring_max = std::max(off_hi, off_lo);

    std::vector<double> floor_radius(grid.nbands), floor_A(grid.nbands), floor_B(grid.nbands);
    for (int b = 0; b < grid.nbands; ++b) {
        const double fl = std::ldexp(1.0, -(b + 1));
        if (spec.variant == KernelVariant::soft_boolean)
            floor_radius[b] = std::pow(fl, -spec.gamma / d);
        else if (spec.variant != KernelVariant::const_one &&
                 spec.variant != KernelVariant::const_zero) {
            floor_A[b] = std::pow(fl, -spec.gamma);
            floor_B[b] = std::pow(fl, spec.gamma - 1.0);
        }
    }

    // Offsets of the cells at Chebyshev ring distance rho, torus-deduplicated.
    std::vector<std::int64_t> coord(d), offs(d);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

    if (kern.cap > 0.0) {
        for (std::uint32_t i = 0; i < n; ++i) {
            const double mark_i = cloud.mark(i);
            const int band_i = mark_band(mark_i);
            const auto pos_i = cloud.position(i);
            for (int k = 0; k < d; ++k) {
                auto c = static_cast<std::int64_t>((pos_i[k] + half) / grid.cell_width);
                coord[k] = std::clamp<std::int64_t>(c, 0, grid.axis_cells - 1);
            }
            const int btop = std::min(band_i, grid.nbands - 1);
            for (int b = 0; b <= btop; ++b) {
                double Wenv = 1.0;
                switch (spec.variant) {
                    case KernelVariant::soft_boolean:
                        Wenv = ipow(kern.A[i] + floor_radius[b], d);
                        break;
                    case KernelVariant::age_rcm:
                    case KernelVariant::pref_attach_upper:
                        Wenv = b == band_i ? kern.scale * floor_A[band_i] * kern.B[i]
                                           : kern.scale * kern.A[i] * floor_B[b];
                        break;
                    case KernelVariant::min_lower:
                        Wenv = b == band_i ? kern.scale * floor_A[band_i] : kern.scale * kern.A[i];
                        break;
                    default:
                        break;
                }
                SplitMix64 ladder(derive_stream_seed(
                    seed, kScanStreamTag + static_cast<std::uint64_t>(i) * grid.nbands + b));
                double target = ladder.next_exp();
                double base = 0.0;
                auto propose = [&](std::uint32_t j, double pmax) {
                    if (j == i) return;
                    if (b == band_i) {
                        const double mj = cloud.mark(j);
                        if (mj < mark_i || (mj == mark_i && j < i)) return;
                    }
                    const double dist = distance(cloud.domain, pos_i, cloud.position(j));
                    const double p = kern.prob(i, j, dist);
                    if (p <= 0.0) return;
                    const double u = pair_uniform(seed, keys[i], keys[j]);
                    if (u * pmax < p)
                        edges.emplace_back(std::min(i, j), std::max(i, j));
                };
                auto scan_cell = [&](std::int64_t cell, double pmax) {
                    const auto& off = grid.band_off[cell];
                    const std::uint32_t lo = off[b], hi = off[b + 1];
                    if (lo == hi) return;
                    const auto& ids = grid.cell_ids[cell];
                    const std::uint64_t m = hi - lo;
                    if (pmax >= 1.0) {
                        for (std::uint64_t k = 0; k < m; ++k) propose(ids[lo + k], 1.0);
                        return;
                    }
                    const double wslot = -std::log1p(-pmax);
                    const double cellw = static_cast<double>(m) * wslot;
                    while (target < base + cellw) {
                        std::uint64_t k = static_cast<std::uint64_t>((target - base) / wslot);
                        if (k >= m) k = m - 1;
                        propose(ids[lo + k], pmax);
                        target += ladder.next_exp();
                    }
                    base += cellw;
                };
                const double band_total = static_cast<double>(grid.band_total[b]);
                for (std::int64_t rho = 0; rho <= ring_max; ++rho) {
                    double pmax = kern.cap;
                    if (spec.variant != KernelVariant::const_one && rho > 1) {
                        const double x = ipow((rho - 1) * grid.cell_width, d) / Wenv;
                        if (x > 1.0) pmax = kern.cap * kern.powneg(x);
                    }
                    if (pmax <= 0.0) continue;
                    if (pmax < 1.0 &&
                        target - base >= -std::log1p(-pmax) * band_total)
                        break;  // no proposal can land beyond this ring
                    // Cells with max-norm offset exactly rho within the axis windows.
                    auto visit = [&](auto&& self, int axis, bool saturated) -> void {
                        if (axis == d) {
                            if (!saturated) return;
                            std::int64_t cell = 0;
                            for (int k = 0; k < d; ++k) {
                                std::int64_t c = coord[k] + offs[k];
                                if (torus) c = ((c % grid.axis_cells) + grid.axis_cells) % grid.axis_cells;
                                else if (c < 0 || c >= grid.axis_cells) return;
                                cell = cell * grid.axis_cells + c;
                            }
                            scan_cell(cell, pmax);
                            return;
                        }
                        const std::int64_t lo = -std::min(rho, off_lo);
                        const std::int64_t hi = std::min(rho, off_hi);
                        for (std::int64_t o = lo; o <= hi; ++o) {
                            offs[axis] = o;
                            self(self, axis + 1, saturated || std::llabs(o) == rho);
                        }
                    };
                    visit(visit, 0, rho == 0);
                }
            }
        }
    }
    return finish_graph(std::move(cloudp), std::move(edges));
}

}  // namespace

bool GraphSample::has_edge(std::uint32_t u, std::uint32_t v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

GraphSample sample_graph_exact(std::shared_ptr<const PointCloud> cloudp,
                               const KernelSpec& spec, std::uint64_t seed,
                               const SamplerOptions& opts) {
    const PointCloud& cloud = *cloudp;
    const std::size_t n = cloud.size();
    if (n > 50000 && !opts.allow_large_exact)
        throw std::invalid_argument(
            "sample_graph_exact: cloud exceeds 5e4 vertices; use the accelerated sampler "
            "or set allow_large_exact");
    const FastKernel kern = FastKernel::build(cloud, spec);
    const std::vector<std::uint64_t> keys = make_pair_keys(cloud, opts.keying);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 0; i + 1 < n; ++i) {
        const auto pi = cloud.position(i);
        for (std::uint32_t j = i + 1; j < n; ++j) {
            const double p = kern.prob(i, j, distance(cloud.domain, pi, cloud.position(j)));
            if (p <= 0.0) continue;
            if (pair_uniform(seed, keys[i], keys[j]) < p) edges.emplace_back(i, j);
        }
    }
    return finish_graph(std::move(cloudp), std::move(edges));
}

GraphSample sample_graph_accelerated(std::shared_ptr<const PointCloud> cloudp,
                                     const KernelSpec& spec, std::uint64_t seed,
                                     const SamplerOptions& opts) {
    if (cloudp->domain.dim == 1) return accelerated_1d(std::move(cloudp), spec, seed, opts);
    return accelerated_nd(std::move(cloudp), spec, seed, opts);
}

std::vector<std::uint64_t> degree_sequence(const GraphSample& g) {
    std::vector<std::uint64_t> deg(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) deg[i] = g.degree(i);
    return deg;
}

void write_edge_list(const GraphSample& g, std::ostream& out) {
    for (std::size_t u = 0; u < g.size(); ++u)
        for (std::uint32_t v : g.neighbors(u))
            if (u < v) out << u << ' ' << v << '\n';
}

void write_vertex_table(const PointCloud& cloud, std::ostream& out) {
    char buf[64];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out << i;
        for (double x : cloud.position(i)) {
            std::snprintf(buf, sizeof buf, " %.12g", x);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " %.12g", cloud.mark(i));
        out << buf << '\n';
    }
}

GraphSample graph_from_edges(std::size_t n,
                             const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                             std::shared_ptr<const PointCloud> cloud) {
    if (!cloud) {
        auto c = std::make_shared<PointCloud>();
        c->domain = {1, 1.0, Boundary::free};
        c->positions.assign(n, 0.0);
        c->marks.assign(n, 0.5);
        cloud = std::move(c);
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> norm;
    norm.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u == v) throw std::invalid_argument("graph_from_edges: self-loop");
        norm.emplace_back(std::min(u, v), std::max(u, v));
    }
    return finish_graph(std::move(cloud), std::move(norm));
}

}  // namespace cpgg

#include "cpgg/contact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "cpgg/rng.hpp"

namespace cpgg {

namespace {

constexpr std::uint64_t kRecoveryTag = 0x5245ull << 32;       // disjoint stream id spaces
constexpr std::uint64_t kTransmissionTag = 0x5452ull << 40;
constexpr std::uint64_t kThinTag = 0x5448ull << 36;

std::vector<double> poisson_times(double rate, double horizon, SplitMix64 rng) {
    std::vector<double> times;
    if (rate <= 0.0 || horizon <= 0.0) return times;
    double t = rng.next_exp() / rate;
    while (t <= horizon) {
        times.push_back(t);
        t += rng.next_exp() / rate;
    }
    return times;
}

// Fenwick tree over per-vertex rates with prefix sampling.
class RateTree {
  public:
    explicit RateTree(std::size_t n) : tree_(n + 1, 0.0), n_(n) {}

    void add(std::size_t i, double delta) {
        total_ += delta;
        for (++i; i <= n_; i += i & (0ull - i)) tree_[i] += delta;
    }
    double total() const { return total_; }

    // Largest index with prefix sum < target; returns the vertex that spans
    // `target`. Ties at double precision resolve to the lowest index.
    std::size_t sample(double target) const {
        std::size_t pos = 0;
        std::size_t mask = 1;
        while ((mask << 1) <= n_) mask <<= 1;
        for (; mask > 0; mask >>= 1) {
            const std::size_t next = pos + mask;
            if (next <= n_ && tree_[next] < target) {
                pos = next;
                target -= tree_[next];
            }
        }
        return pos < n_ ? pos : n_ - 1;
    }

  private:
    std::vector<double> tree_;
    std::size_t n_;
    double total_ = 0.0;
};

}  // namespace

SimOutcome run_next_event(const GraphSample& graph, const SimParams& params,
                          std::span<const std::uint32_t> initial) {
    if (!(params.horizon > 0.0) && params.horizon != 0.0)
        throw std::invalid_argument("run_next_event: horizon must be nonnegative");
    const std::size_t n = graph.size();
    SplitMix64 rng(derive_stream_seed(params.seed, 0xC0874C7ull));
    RateTree rates(n);
    std::vector<std::uint8_t> infected(n, 0);
    std::vector<std::uint8_t> ever(n, 0);
    SimOutcome out;
    std::uint64_t cur = 0;

    auto infect = [&](std::uint32_t v) {
        infected[v] = 1;
        ++cur;
        if (!ever[v]) {
            ever[v] = 1;
            ++out.ever_infected;
        }
        rates.add(v, 1.0 + params.lambda * static_cast<double>(graph.degree(v)));
        out.peak_infected = std::max(out.peak_infected, cur);
    };

    for (std::uint32_t v : initial)
        if (!infected[v]) infect(v);

    double t = 0.0;
    for (;;) {
        if (cur == 0) {
            out.extinction_time = t;
            out.reason = StopReason::extinct;
            out.survived_proxy = false;
            return out;
        }
        if (params.ever_infected_cap && out.ever_infected >= *params.ever_infected_cap) {
            out.reason = StopReason::infected_cap;
            break;
        }
        if (params.events_budget && out.events_processed >= *params.events_budget) {
            out.reason = StopReason::events_budget;
            break;
        }
        const double total = rates.total();
        t += rng.next_exp() / total;
        if (t > params.horizon) {
            out.reason = StopReason::horizon;
            break;
        }
        const auto v = static_cast<std::uint32_t>(rates.sample(rng.next_unit() * total));
        const double deg = static_cast<double>(graph.degree(v));
        ++out.events_processed;
        if (rng.next_unit() * (1.0 + params.lambda * deg) < 1.0) {
            infected[v] = 0;
            --cur;
            rates.add(v, -(1.0 + params.lambda * deg));
        } else {
            const auto nb = graph.neighbors(v);
            const auto w = nb[rng.next_below(nb.size())];
            if (!infected[w]) infect(w);
        }
    }
    out.extinction_time = params.horizon;
    out.survived_proxy = true;
    return out;
}

EventStream::EventStream(double lambda, double horizon, std::uint64_t seed)
    : lambda_(lambda), horizon_(horizon), seed_(seed) {
    if (horizon < 0.0) throw std::invalid_argument("EventStream: horizon must be nonnegative");
}

EventStream EventStream::thinned(std::shared_ptr<const EventStream> parent,
                                 double lambda_prime, std::uint64_t thin_seed) {
    if (!parent) throw std::invalid_argument("EventStream::thinned: null parent");
    if (!(lambda_prime <= parent->lambda_))
        throw std::invalid_argument("EventStream::thinned: lambda_prime must not exceed parent rate");
    EventStream s(lambda_prime, parent->horizon_, thin_seed);
    s.parent_ = std::move(parent);
    return s;
}

const std::vector<double>& EventStream::recoveries(std::uint32_t v) const {
    if (parent_) return parent_->recoveries(v);
    auto it = recovery_cache_.find(v);
    if (it != recovery_cache_.end()) return it->second;
    auto times = poisson_times(1.0, horizon_,
                               SplitMix64(derive_stream_seed(seed_, kRecoveryTag + v)));
    return recovery_cache_.emplace(v, std::move(times)).first->second;
}

const std::vector<double>& EventStream::transmissions(std::uint32_t from,
                                                      std::uint32_t to) const {
    const std::uint64_t key = (static_cast<std::uint64_t>(from) << 32) | to;
    auto it = transmission_cache_.find(key);
    if (it != transmission_cache_.end()) return it->second;
    std::vector<double> times;
    if (parent_) {
        // Keep each parent arrow with probability lambda'/lambda, keyed by the
        // directed edge so the coupling is stable under lazy evaluation.
        const auto& base = parent_->transmissions(from, to);
        const double keep = parent_->lambda_ > 0.0 ? lambda_ / parent_->lambda_ : 0.0;
        SplitMix64 rng(derive_stream_seed(seed_, kThinTag ^ key));
        for (double t : base)
            if (rng.next_unit() < keep) times.push_back(t);
    } else {
        times = poisson_times(lambda_, horizon_,
                              SplitMix64(derive_stream_seed(seed_, kTransmissionTag ^ mix64(key))));
    }
    return transmission_cache_.emplace(key, std::move(times)).first->second;
}

EventStream build_event_stream(const GraphSample& graph, double lambda, double horizon,
                               std::uint64_t seed) {
    (void)graph;
    return EventStream(lambda, horizon, seed);
}

namespace {

enum class EvKind : std::uint8_t { recovery = 0, transmission = 1 };

struct Ev {
    double time;
    EvKind kind;
    std::uint32_t u;
    std::uint32_t v;      // transmission target
    std::uint32_t index;  // position in the edge stream
    std::uint32_t epoch;  // infection epoch of u when scheduled

    bool operator>(const Ev& o) const {
        if (time != o.time) return time > o.time;
        if (kind != o.kind) return kind > o.kind;
        if (u != o.u) return u > o.u;
        return v > o.v;
    }
};

}  // namespace

SimOutcome run_on_stream(const EventStream& stream, const GraphSample& graph,
                         std::span<const std::uint32_t> initial, const RunOptions& opts) {
    const std::size_t n = graph.size();
    std::vector<std::uint8_t> infected(n, 0);
    std::vector<std::uint8_t> ever(n, 0);
    std::vector<std::uint32_t> epoch(n, 0);
    std::priority_queue<Ev, std::vector<Ev>, std::greater<>> queue;
    SimOutcome out;
    std::uint64_t cur = 0;
    char logbuf[96];

    const auto cap = opts.ever_infected_cap;

    auto schedule_arrows = [&](std::uint32_t u, double after) {
        for (std::uint32_t w : graph.neighbors(u)) {
            const auto& times = stream.transmissions(u, w);
            const auto it = std::upper_bound(times.begin(), times.end(), after);
            if (it != times.end())
                queue.push(Ev{*it, EvKind::transmission, u, w,
                              static_cast<std::uint32_t>(it - times.begin()), epoch[u]});
        }
    };

    auto infect = [&](std::uint32_t v, double t) {
        infected[v] = 1;
        ++cur;
        ++epoch[v];
        if (!ever[v]) {
            ever[v] = 1;
            ++out.ever_infected;
        }
        out.peak_infected = std::max(out.peak_infected, cur);
        const auto& recs = stream.recoveries(v);
        const auto it = std::upper_bound(recs.begin(), recs.end(), t);
        if (it != recs.end())
            queue.push(Ev{*it, EvKind::recovery, v, 0,
                          static_cast<std::uint32_t>(it - recs.begin()), epoch[v]});
        schedule_arrows(v, t);
    };

    auto snapshot = [&](double t) {
        if (!opts.trajectory) return;
        std::vector<std::uint32_t> set;
        for (std::uint32_t v = 0; v < n; ++v)
            if (infected[v]) set.push_back(v);
        opts.trajectory->emplace_back(t, std::move(set));
    };

    for (std::uint32_t v : initial)
        if (!infected[v]) infect(v, 0.0);
    snapshot(0.0);

    double t = 0.0;
    bool stopped = false;
    while (!queue.empty()) {
        if (cur == 0) break;
        if (cap && out.ever_infected >= *cap) {
            out.reason = StopReason::infected_cap;
            stopped = true;
            break;
        }
        const Ev ev = queue.top();
        queue.pop();
        if (!infected[ev.u] || epoch[ev.u] != ev.epoch) continue;  // stale chain
        t = ev.time;
        ++out.events_processed;
        if (ev.kind == EvKind::recovery) {
            infected[ev.u] = 0;
            --cur;
            if (opts.event_log) {
                std::snprintf(logbuf, sizeof logbuf, "%.9g REC %u\n", ev.time, ev.u);
                *opts.event_log << logbuf;
            }
            snapshot(t);
        } else {
            // Continue this edge's chain while the source stays infected.
            const auto& times = stream.transmissions(ev.u, ev.v);
            if (ev.index + 1 < times.size())
                queue.push(Ev{times[ev.index + 1], EvKind::transmission, ev.u, ev.v,
                              ev.index + 1, ev.epoch});
            if (opts.event_log) {
                std::snprintf(logbuf, sizeof logbuf, "%.9g TRN %u %u\n", ev.time, ev.u, ev.v);
                *opts.event_log << logbuf;
            }
            if (!infected[ev.v]) {
                infect(ev.v, t);
                snapshot(t);
            }
        }
    }

    if (!stopped) {
        if (cur == 0) {
            out.reason = StopReason::extinct;
            out.extinction_time = t;
            out.survived_proxy = false;
            if (opts.final_set) opts.final_set->clear();
            return out;
        }
        out.reason = StopReason::horizon;
    }
    out.extinction_time = stream.horizon();
    out.survived_proxy = true;
    if (opts.final_set) {
        opts.final_set->clear();
        for (std::uint32_t v = 0; v < n; ++v)
            if (infected[v]) opts.final_set->push_back(v);
    }
    return out;
}

DualityEstimate duality_gap(const GraphSample& graph, double lambda, double t,
                            std::span<const std::uint32_t> A,
                            std::span<const std::uint32_t> B,
                            std::uint64_t replicates, std::uint64_t seed) {
    if (A.empty() || B.empty())
        throw std::invalid_argument("duality_gap: A and B must be nonempty");
    std::vector<std::uint8_t> inA(graph.size(), 0), inB(graph.size(), 0);
    for (auto v : A) inA[v] = 1;
    for (auto v : B) inB[v] = 1;
    std::uint64_t hits_ab = 0, hits_ba = 0;
    std::vector<std::uint32_t> final_set;
    RunOptions opts;
    opts.final_set = &final_set;
    for (std::uint64_t r = 0; r < replicates; ++r) {
        {
            EventStream s(lambda, t, derive_stream_seed(seed, 2 * r));
            run_on_stream(s, graph, A, opts);
            for (auto v : final_set)
                if (inB[v]) { ++hits_ab; break; }
        }
        {
            EventStream s(lambda, t, derive_stream_seed(seed, 2 * r + 1));
            run_on_stream(s, graph, B, opts);
            for (auto v : final_set)
                if (inA[v]) { ++hits_ba; break; }
        }
    }
    DualityEstimate est;
    est.p_ab = static_cast<double>(hits_ab) / static_cast<double>(replicates);
    est.p_ba = static_cast<double>(hits_ba) / static_cast<double>(replicates);
    est.z_score = two_proportion_z(hits_ab, replicates, hits_ba, replicates);
    return est;
}

TraceEstimate trace_realization_probability(const GraphSample& graph, double lambda,
                                            std::span<const std::uint32_t> trace,
                                            std::uint64_t replicates, std::uint64_t seed,
                                            double ci_z, double horizon) {
    if (trace.empty()) throw std::invalid_argument("trace_realization_probability: empty trace");
    for (std::size_t k = 0; k + 1 < trace.size(); ++k)
        if (!graph.has_edge(trace[k], trace[k + 1]))
            throw std::invalid_argument("trace_realization_probability: trace is not a graph path");

    TraceEstimate res;
    res.replicates = replicates;
    if (trace.size() == 1) {  // the empty path exists at time 0
        res.hits = replicates;
        res.estimate = 1.0;
        res.ci = {1.0, 1.0};
        return res;
    }

    using Windows = std::vector<std::pair<double, double>>;
    for (std::uint64_t r = 0; r < replicates; ++r) {
        EventStream stream(lambda, horizon, derive_stream_seed(seed, r));
        auto next_recovery = [&](std::uint32_t v, double after) {
            const auto& recs = stream.recoveries(v);
            const auto it = std::upper_bound(recs.begin(), recs.end(), after);
            return it == recs.end() ? horizon : *it;
        };
        Windows cur{{0.0, next_recovery(trace[0], 0.0)}};
        for (std::size_t k = 0; k + 1 < trace.size() && !cur.empty(); ++k) {
            const auto& arrows = stream.transmissions(trace[k], trace[k + 1]);
            Windows next;
            std::size_t wi = 0;
            for (double tau : arrows) {
                while (wi < cur.size() && cur[wi].second <= tau) ++wi;
                if (wi == cur.size()) break;
                if (tau < cur[wi].first) continue;
                const double end = next_recovery(trace[k + 1], tau);
                if (!next.empty() && tau <= next.back().second)
                    next.back().second = std::max(next.back().second, end);
                else
                    next.emplace_back(tau, end);
            }
            cur = std::move(next);
        }
        if (!cur.empty()) ++res.hits;
    }
    res.estimate = static_cast<double>(res.hits) / static_cast<double>(replicates);
    res.ci = wilson_ci(res.hits, replicates, ci_z);
    return res;
}

}  // namespace cpgg

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "cpgg/graph.hpp"
#include "cpgg/stats.hpp"

namespace cpgg {

struct SimParams {
    double lambda = 1.0;
    double horizon = 50.0;
    std::optional<std::uint64_t> ever_infected_cap;
    std::optional<std::uint64_t> events_budget;
    std::uint64_t seed = 0;
};

enum class StopReason { extinct, horizon, infected_cap, events_budget };

struct SimOutcome {
    double extinction_time = 0.0;  // equals horizon when the run did not die
    bool survived_proxy = false;   // alive at stop (horizon, cap or budget)
    std::uint64_t ever_infected = 0;
    std::uint64_t peak_infected = 0;
    std::uint64_t events_processed = 0;
    StopReason reason = StopReason::extinct;
};

// Exact continuous-time dynamics: an infected vertex carries rate
// 1 + lambda*deg, events are drawn by aggregate-rate sampling over a Fenwick
// tree, recovery vs transmission split per vertex. Transmissions to already
// infected neighbours are null events of the chain.
SimOutcome run_next_event(const GraphSample& graph, const SimParams& params,
                          std::span<const std::uint32_t> initial);

// Pre-drawn Poisson timelines of the graphical representation: rate-1
// recovery marks per vertex and rate-lambda transmission arrows per directed
// edge, both on [0, horizon]. Streams are materialized lazily per key and
// memoized; a stream object is owned by one run at a time.
class EventStream {
  public:
    EventStream(double lambda, double horizon, std::uint64_t seed);

    // Coupled thinning: keeps each arrow of `parent` independently with
    // probability lambda_prime/parent.lambda; recoveries are shared.
    static EventStream thinned(std::shared_ptr<const EventStream> parent,
                               double lambda_prime, std::uint64_t thin_seed);

    const std::vector<double>& recoveries(std::uint32_t v) const;
    const std::vector<double>& transmissions(std::uint32_t from, std::uint32_t to) const;
    double lambda() const { return lambda_; }
    double horizon() const { return horizon_; }

  private:
    double lambda_;
    double horizon_;
    std::uint64_t seed_;
    std::shared_ptr<const EventStream> parent_;
    mutable std::unordered_map<std::uint32_t, std::vector<double>> recovery_cache_;
    mutable std::unordered_map<std::uint64_t, std::vector<double>> transmission_cache_;
};

EventStream build_event_stream(const GraphSample& graph, double lambda, double horizon,
                               std::uint64_t seed);

struct RunOptions {
    // Records (time, sorted infected set) after every effective event.
    std::vector<std::pair<double, std::vector<std::uint32_t>>>* trajectory = nullptr;
    // "time kind vertex [target]" lines, 9 significant digits.
    std::ostream* event_log = nullptr;
    // Receives the infected set at the stop time.
    std::vector<std::uint32_t>* final_set = nullptr;
    std::optional<std::uint64_t> ever_infected_cap;
};

// Deterministic run driven by an event stream; distributionally identical to
// run_next_event at the same (graph, lambda, horizon).
SimOutcome run_on_stream(const EventStream& stream, const GraphSample& graph,
                         std::span<const std::uint32_t> initial,
                         const RunOptions& opts = {});

struct DualityEstimate {
    double p_ab = 0.0;
    double p_ba = 0.0;
    double z_score = 0.0;
};

// Monte Carlo check of P(xi_t^A hits B) = P(xi_t^B hits A): two independent
// estimates and their two-proportion z-score.
DualityEstimate duality_gap(const GraphSample& graph, double lambda, double t,
                            std::span<const std::uint32_t> A,
                            std::span<const std::uint32_t> B,
                            std::uint64_t replicates, std::uint64_t seed);

struct TraceEstimate {
    double estimate = 0.0;
    Interval ci;
    std::uint64_t hits = 0;
    std::uint64_t replicates = 0;
};

// P(some infection path starting at trace.front() at time 0 has exactly this
// ordered trace), estimated by replaying event streams. The trace must be a
// path in the graph. `ci_z` sets the confidence width (2.5758 = 99%).
TraceEstimate trace_realization_probability(const GraphSample& graph, double lambda,
                                            std::span<const std::uint32_t> trace,
                                            std::uint64_t replicates, std::uint64_t seed,
                                            double ci_z = 2.575829,
                                            double horizon = 50.0);

}  // namespace cpgg

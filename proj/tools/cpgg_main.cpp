#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cpgg/contact.hpp"
#include "cpgg/experiments.hpp"
#include "cpgg/graph.hpp"
#include "cpgg/rng.hpp"
#include "cpgg/structure.hpp"

namespace {

using namespace cpgg;

struct GlobalArgs {
    std::string config;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    bool seed_set = false;
    int workers = 0;
};

Config load_config(const GlobalArgs& g) {
    if (g.config.empty()) return Config::parse_string("", "<empty>");
    return Config::parse_file(g.config);
}

std::uint64_t effective_seed(const GlobalArgs& g, const Config& cfg) {
    return g.seed_set ? g.seed : cfg.get_u64("run.seed", 1);
}

int effective_workers(const GlobalArgs& g, const Config& cfg) {
    if (g.workers > 0) return g.workers;
    return cfg.get_int("run.workers", default_workers());
}

SpatialDomain domain_from_config(const Config& cfg) {
    SpatialDomain d;
    d.dim = cfg.get_int("domain.d", 1);
    const double volume = cfg.get_double("domain.volume", 1000.0);
    d.side = std::pow(volume, 1.0 / d.dim);
    const std::string boundary = cfg.get_string("domain.boundary", "torus");
    if (boundary == "torus") d.boundary = Boundary::torus;
    else if (boundary == "free") d.boundary = Boundary::free;
    else throw std::runtime_error("config: domain.boundary must be 'torus' or 'free'");
    return d;
}

GraphSample sampled_graph(const Config& cfg, std::uint64_t seed) {
    const KernelSpec spec = kernel_from_config(cfg);
    const SpatialDomain domain = domain_from_config(cfg);
    auto cloud = std::make_shared<PointCloud>(
        sample_point_cloud(domain, derive_stream_seed(seed, 1)));
    const std::string sampler = cfg.get_string("sampler.kind", "accelerated");
    if (sampler == "exact")
        return sample_graph_exact(std::move(cloud), spec, derive_stream_seed(seed, 3));
    if (sampler != "accelerated")
        throw std::runtime_error("config: sampler.kind must be 'exact' or 'accelerated'");
    return sample_graph_accelerated(std::move(cloud), spec, derive_stream_seed(seed, 3));
}

int cmd_sample_graph(const GlobalArgs& g) {
    const Config cfg = load_config(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    const GraphSample graph = sampled_graph(cfg, seed);
    std::filesystem::create_directories(g.out_dir);
    {
        std::ofstream out(std::filesystem::path(g.out_dir) / "graph.edges", std::ios::binary);
        write_edge_list(graph, out);
    }
    {
        std::ofstream out(std::filesystem::path(g.out_dir) / "graph.vertices", std::ios::binary);
        write_vertex_table(*graph.cloud, out);
    }
    std::cout << "vertices=" << graph.size() << " edges=" << graph.edge_count << "\n";
    return 0;
}

int cmd_degree_stats(const GlobalArgs& g) {
    const Config cfg = load_config(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    const GraphSample graph = sampled_graph(cfg, seed);
    std::filesystem::create_directories(g.out_dir);
    {
        std::ofstream out(std::filesystem::path(g.out_dir) / "degrees.csv", std::ios::binary);
        out << "vertex,mark,degree\n";
        for (std::size_t i = 0; i < graph.size(); ++i)
            out << i << ',' << format_double(graph.cloud->mark(i)) << ',' << graph.degree(i)
                << '\n';
    }
    const auto k_min = cfg.get_u64("stats.k_min", 10);
    try {
        const TailFit fit = degree_tail_fit(graph, k_min);
        std::cout << "ccdf_slope=" << fit.slope << " stderr=" << fit.stderr_slope
                  << " points=" << fit.points << "\n";
    } catch (const std::exception& e) {
        std::cout << "tail fit unavailable: " << e.what() << "\n";
    }
    return 0;
}

int cmd_simulate(const GlobalArgs& g, const std::string& event_log) {
    const Config cfg = load_config(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    const GraphSample graph = sampled_graph(cfg, seed);
    SimParams params;
    params.lambda = cfg.get_double("sim.lambda", 1.0);
    params.horizon = cfg.get_double("sim.horizon", 50.0);
    if (cfg.has("sim.cap")) params.ever_infected_cap = cfg.get_u64("sim.cap", 0);
    if (cfg.has("sim.events_budget"))
        params.events_budget = cfg.get_u64("sim.events_budget", 0);
    params.seed = derive_stream_seed(seed, 4);

    std::vector<std::uint32_t> initial;
    const std::string start = cfg.get_string("sim.initial", "full");
    if (start == "full") {
        initial.resize(graph.size());
        for (std::uint32_t i = 0; i < graph.size(); ++i) initial[i] = i;
    } else if (start == "vertex") {
        initial.push_back(static_cast<std::uint32_t>(cfg.get_u64("sim.initial_vertex", 0)));
    } else {
        throw std::runtime_error("config: sim.initial must be 'full' or 'vertex'");
    }

    SimOutcome out;
    if (!event_log.empty()) {
        // The stream engine supports the event log export.
        EventStream stream =
            build_event_stream(graph, params.lambda, params.horizon, params.seed);
        std::ofstream log(event_log, std::ios::binary);
        RunOptions opts;
        opts.event_log = &log;
        opts.ever_infected_cap = params.ever_infected_cap;
        out = run_on_stream(stream, graph, initial, opts);
    } else {
        out = run_next_event(graph, params, initial);
    }
    std::cout << "extinction_time=" << out.extinction_time
              << " survived_proxy=" << (out.survived_proxy ? 1 : 0)
              << " ever_infected=" << out.ever_infected << " peak=" << out.peak_infected
              << " events=" << out.events_processed << "\n";
    return 0;
}

int cmd_pipeline(const GlobalArgs& g, const std::string& pipeline) {
    const Config cfg = load_config(g);
    if (cfg.has("pipeline") && cfg.require_string("pipeline") != pipeline)
        throw std::runtime_error("config names pipeline '" + cfg.require_string("pipeline") +
                                 "' but the subcommand requests '" + pipeline + "'");
    const auto result = run_pipeline(cfg, pipeline, g.out_dir, effective_seed(g, cfg),
                                     effective_workers(g, cfg));
    for (const auto& p : result.outputs) std::cout << p.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contact process on scale-free geometric random graphs"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--out-dir", g.out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", g.seed, "master seed (overrides run.seed)");
    app.add_option("--workers", g.workers,
                   "worker threads (overrides run.workers and " +
                       std::string(cpgg::kWorkersEnvVar) + ")");

    std::string event_log;
    auto* sample = app.add_subcommand("sample-graph", "sample a graph and export it");
    auto* degree = app.add_subcommand("degree-stats", "degree table and tail fit");
    auto* simulate = app.add_subcommand("simulate", "one contact process run");
    simulate->add_option("--event-log", event_log, "write an event log (stream engine)");
    auto* gamma = app.add_subcommand("estimate-gamma", "non-extinction probability sweep");
    auto* ext = app.add_subcommand("extinction-scaling", "finite-box extinction times");
    auto* star = app.add_subcommand("star-chain", "half-line-of-stars search");
    auto* boxes = app.add_subcommand("box-hierarchy", "good-box tessellation");
    auto* bounds = app.add_subcommand("bounds-table", "recursion/bound table");

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;

    try {
        if (sample->parsed()) return cmd_sample_graph(g);
        if (degree->parsed()) return cmd_degree_stats(g);
        if (simulate->parsed()) return cmd_simulate(g, event_log);
        if (gamma->parsed()) return cmd_pipeline(g, "estimate_gamma");
        if (ext->parsed()) return cmd_pipeline(g, "extinction_scaling");
        if (star->parsed()) return cmd_pipeline(g, "star_chain");
        if (boxes->parsed()) return cmd_pipeline(g, "box_hierarchy");
        if (bounds->parsed()) return cmd_pipeline(g, "bounds_table");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "cpgg/experiments.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cpgg/contact.hpp"
#include "cpgg/rng.hpp"
#include "cpgg/stats.hpp"

namespace cpgg {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
        for (const auto& [k, v] : cfg.entries_)
            if (k == key)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": duplicate key '" + key + "'");
        cfg.entries_.emplace_back(key, value);
    }
    return cfg;
}

bool Config::has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return true;
    return false;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return fallback;
}

std::string Config::require_string(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    throw std::runtime_error("config " + origin_ + ": missing required key '" + key + "'");
}

double Config::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string v = require_string(key);
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' has non-numeric value '" + v + "'");
    }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = require_string(key);
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' has non-integer value '" + v + "'");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    return static_cast<int>(get_u64(key, static_cast<std::uint64_t>(fallback)));
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    const std::string v = require_string(key);
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' has non-numeric item '" + item +
                                     "'");
        }
    }
    return out;
}

void Config::validate_keys(std::span<const std::string> allowed) const {
    for (const auto& [k, v] : entries_) {
        bool ok = false;
        for (const auto& a : allowed)
            if (k == a) { ok = true; break; }
        if (!ok) throw std::runtime_error("config: unknown key '" + k + "'");
    }
}

KernelSpec kernel_from_config(const Config& cfg) {
    KernelSpec spec;
    const std::string name = cfg.get_string("kernel.variant", "soft_boolean");
    const auto variant = kernel_variant_from_string(name);
    if (!variant) throw std::runtime_error("config: unknown kernel.variant '" + name + "'");
    spec.variant = *variant;
    spec.gamma = cfg.get_double("kernel.gamma", spec.gamma);
    spec.delta = cfg.get_double("kernel.delta", spec.delta);
    spec.alpha = cfg.get_double("kernel.alpha", spec.alpha);
    spec.kappa1 = cfg.get_double("kernel.kappa1", spec.kappa1);
    spec.kappa2 = cfg.get_double("kernel.kappa2", spec.kappa2);
    spec.beta_scale = cfg.get_double("kernel.beta", spec.beta_scale);
    spec.validate();
    return spec;
}

int default_workers() {
    if (const char* env = std::getenv(kWorkersEnvVar)) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_replicas(std::uint64_t count, int workers,
                       const std::function<void(std::uint64_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n = static_cast<int>(std::min<std::uint64_t>(workers, count));
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Pipelines.
// ---------------------------------------------------------------------------

double GammaRules::volume_for(double lambda) const {
    if (!(lambda > 0.0)) return 1.0;
    return std::min(volume_max, std::ceil(std::pow(lambda, -4.0)));
}

std::vector<GammaEstimateRecord> estimate_gamma(const KernelSpec& spec,
                                                std::span<const double> lambdas,
                                                const GammaRules& rules,
                                                std::uint64_t replicas,
                                                std::uint64_t master_seed, int workers) {
    std::vector<GammaEstimateRecord> records;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const double lambda = lambdas[li];
        const double volume = rules.volume_for(lambda);
        SpatialDomain domain{rules.dim, std::pow(volume, 1.0 / rules.dim), Boundary::torus};
        const std::uint64_t lam_seed = derive_stream_seed(master_seed, 1000 + li);
        std::atomic<std::uint64_t> survivals{0};
        parallel_replicas(replicas, workers, [&](std::uint64_t r) {
            const std::uint64_t rep = derive_stream_seed(lam_seed, r);
            auto cloud = std::make_shared<PointCloud>(add_palm_origin(
                sample_point_cloud(domain, derive_stream_seed(rep, 1)),
                derive_stream_seed(rep, 2)));
            const std::uint32_t origin = *cloud->palm_origin;
            const GraphSample graph =
                sample_graph_accelerated(std::move(cloud), spec, derive_stream_seed(rep, 3));
            SimParams params;
            params.lambda = lambda;
            params.horizon = rules.horizon;
            params.ever_infected_cap = rules.infected_cap;
            params.seed = derive_stream_seed(rep, 4);
            const std::uint32_t initial[] = {origin};
            if (run_next_event(graph, params, initial).survived_proxy)
                survivals.fetch_add(1);
        });
        GammaEstimateRecord rec;
        rec.lambda = lambda;
        rec.volume = volume;
        rec.replicas = replicas;
        rec.survivals = survivals.load();
        rec.gamma_hat = replicas ? static_cast<double>(rec.survivals) / replicas : 0.0;
        const Interval ci = wilson_ci(rec.survivals, replicas);
        rec.ci_low = ci.low;
        rec.ci_high = ci.high;
        records.push_back(rec);
    }
    return records;
}

std::vector<ExtinctionRecord> extinction_scaling(const KernelSpec& spec, int dim,
                                                 double lambda,
                                                 std::span<const double> volumes,
                                                 std::uint64_t replicas, double horizon,
                                                 std::uint64_t events_budget,
                                                 std::uint64_t master_seed, int workers) {
    std::vector<ExtinctionRecord> records(volumes.size() * replicas);
    for (std::size_t vi = 0; vi < volumes.size(); ++vi) {
        const double volume = volumes[vi];
        SpatialDomain domain{dim, std::pow(volume, 1.0 / dim), Boundary::free};
        const std::uint64_t vol_seed = derive_stream_seed(master_seed, 2000 + vi);
        parallel_replicas(replicas, workers, [&](std::uint64_t r) {
            const std::uint64_t rep = derive_stream_seed(vol_seed, r);
            auto cloud = std::make_shared<PointCloud>(
                sample_point_cloud(domain, derive_stream_seed(rep, 1)));
            const std::uint64_t n_vertices = cloud->size();
            const GraphSample graph =
                sample_graph_accelerated(std::move(cloud), spec, derive_stream_seed(rep, 3));
            std::vector<std::uint32_t> all(n_vertices);
            for (std::uint32_t i = 0; i < n_vertices; ++i) all[i] = i;
            SimParams params;
            params.lambda = lambda;
            params.horizon = horizon;
            params.events_budget = events_budget;
            params.seed = derive_stream_seed(rep, 4);
            const SimOutcome out = run_next_event(graph, params, all);
            ExtinctionRecord& rec = records[vi * replicas + r];
            rec.n = volume;
            rec.lambda = lambda;
            rec.replica = r;
            rec.capped = out.survived_proxy;
            rec.tau = rec.capped ? horizon : out.extinction_time;
            rec.vertices = n_vertices;
        });
    }
    return records;
}

double median_extinction_time(std::span<const ExtinctionRecord> records, double n) {
    std::vector<double> taus;
    for (const auto& r : records)
        if (r.n == n) taus.push_back(r.tau);
    if (taus.empty()) throw std::invalid_argument("median_extinction_time: no records for n");
    return median(std::move(taus));
}

std::pair<double, double> fit_loglog_slope(
    std::span<const std::pair<double, double>> points) {
    if (points.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
    std::vector<double> xs, ys;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("fit_loglog_slope: coordinates must be positive");
        xs.push_back(std::log(x));
        ys.push_back(std::log(y));
    }
    return ols_slope(xs, ys);
}

// ---------------------------------------------------------------------------
// CSV + manifest + run_config.
// ---------------------------------------------------------------------------

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);  // byte-stable line endings
    if (!out) throw std::runtime_error("cannot open for writing: " + p.string());
    return out;
}

void write_manifest(const std::filesystem::path& dir, const std::string& pipeline,
                    std::uint64_t seed, const Config& cfg) {
    auto out = open_out(dir / "manifest.txt");
    out << "tool=cpgg " << kToolVersion << "\n";
    out << "pipeline=" << pipeline << "\n";
    out << "master_seed=" << seed << "\n";
    for (const auto& [k, v] : cfg.entries()) out << k << "=" << v << "\n";
}

const std::vector<std::string> kKernelKeys = {
    "kernel.variant", "kernel.gamma", "kernel.delta",  "kernel.alpha",
    "kernel.kappa1",  "kernel.kappa2", "kernel.beta",
};
const std::vector<std::string> kRunKeys = {"pipeline", "run.seed", "run.replicas",
                                           "run.workers"};

std::vector<std::string> keys_with(std::initializer_list<const char*> extra) {
    std::vector<std::string> keys = kRunKeys;
    keys.insert(keys.end(), kKernelKeys.begin(), kKernelKeys.end());
    for (const char* e : extra) keys.emplace_back(e);
    return keys;
}

}  // namespace

RunResult run_config(const std::filesystem::path& config_path,
                     const std::filesystem::path& out_dir,
                     std::optional<std::uint64_t> seed_override,
                     std::optional<int> workers_override) {
    const Config cfg = Config::parse_file(config_path);
    const std::string pipeline = cfg.require_string("pipeline");
    const std::uint64_t seed = seed_override.value_or(cfg.get_u64("run.seed", 1));
    const int workers = workers_override.value_or(cfg.get_int("run.workers", default_workers()));
    return run_pipeline(cfg, pipeline, out_dir, seed, workers);
}

RunResult run_pipeline(const Config& cfg, const std::string& pipeline,
                       const std::filesystem::path& out_dir, std::uint64_t seed,
                       int workers) {
    std::filesystem::create_directories(out_dir);
    RunResult result;
    auto note = [&](const std::filesystem::path& p) { result.outputs.push_back(p); };

    if (pipeline == "estimate_gamma") {
        static const auto allowed = keys_with({"gamma.lambdas", "gamma.horizon", "gamma.cap",
                                               "gamma.volume_max", "domain.d"});
        cfg.validate_keys(allowed);
        const KernelSpec spec = kernel_from_config(cfg);
        const std::vector<double> lambdas = cfg.get_double_list("gamma.lambdas");
        GammaRules rules;
        rules.horizon = cfg.get_double("gamma.horizon", rules.horizon);
        rules.infected_cap = cfg.get_u64("gamma.cap", rules.infected_cap);
        rules.volume_max = cfg.get_double("gamma.volume_max", rules.volume_max);
        rules.dim = cfg.get_int("domain.d", rules.dim);
        const std::uint64_t replicas = cfg.get_u64("run.replicas", 100);
        const auto records = estimate_gamma(spec, lambdas, rules, replicas, seed, workers);
        const auto path = out_dir / "gamma.csv";
        auto out = open_out(path);
        out << "lambda,volume,replicas,survivals,gamma_hat,ci_low,ci_high\n";
        for (const auto& r : records)
            out << format_double(r.lambda) << ',' << format_double(r.volume) << ','
                << r.replicas << ',' << r.survivals << ',' << format_double(r.gamma_hat) << ','
                << format_double(r.ci_low) << ',' << format_double(r.ci_high) << '\n';
        note(path);
    } else if (pipeline == "extinction_scaling") {
        static const auto allowed = keys_with(
            {"sim.lambda", "ext.volumes", "ext.horizon", "ext.events_budget", "domain.d"});
        cfg.validate_keys(allowed);
        const KernelSpec spec = kernel_from_config(cfg);
        const double lambda = cfg.get_double("sim.lambda", 1.0);
        const std::vector<double> volumes = cfg.get_double_list("ext.volumes");
        const double horizon = cfg.get_double("ext.horizon", 1e4);
        const std::uint64_t budget = cfg.get_u64("ext.events_budget", 100000000ull);
        const int dim = cfg.get_int("domain.d", 1);
        const std::uint64_t replicas = cfg.get_u64("run.replicas", 20);
        const auto records =
            extinction_scaling(spec, dim, lambda, volumes, replicas, horizon, budget, seed,
                               workers);
        const auto path = out_dir / "extinction.csv";
        auto out = open_out(path);
        out << "n,lambda,replica,tau,capped,vertices\n";
        for (const auto& r : records)
            out << format_double(r.n) << ',' << format_double(r.lambda) << ',' << r.replica
                << ',' << format_double(r.tau) << ',' << (r.capped ? 1 : 0) << ',' << r.vertices
                << '\n';
        note(path);
    } else if (pipeline == "star_chain") {
        static const auto allowed = keys_with(
            {"star.lambda", "star.beta_star", "star.theta", "star.stars", "domain.d"});
        cfg.validate_keys(allowed);
        const KernelSpec spec = kernel_from_config(cfg);
        StarChainParams params;
        params.lambda = cfg.get_double("star.lambda", params.lambda);
        params.beta_star = cfg.get_double("star.beta_star", params.beta_star);
        params.theta_chain = cfg.get_double("star.theta", params.theta_chain);
        params.stars = cfg.get_int("star.stars", params.stars);
        const int dim = cfg.get_int("domain.d", 1);
        const StarChainScales sc = star_chain_scales(params, spec, dim);

        // Rooted cloud: plant the root just off the domain edge with a mark
        // conditioned below T_1, the range where the first star carries
        // enough weight.
        const double margin = 2.0;
        const double reach = sc.radius(params.stars + 1);
        SpatialDomain domain{dim, 2.0 * (reach + 2.0 * margin), Boundary::free};
        PointCloud cloud = sample_point_cloud(domain, derive_stream_seed(seed, 11));
        SplitMix64 rng(derive_stream_seed(seed, 12));
        std::vector<double> root_pos(dim, 0.0);
        root_pos[0] = margin;
        const double root_mark =
            std::min(sc.t_sp, sc.mark_level(1)) * rng.next_open();
        const std::uint32_t root = cloud.push_vertex(root_pos, root_mark);
        const StarChainResult chain =
            find_star_chain(cloud, spec, root, params, derive_stream_seed(seed, 13));
        const auto path = out_dir / "chain.csv";
        auto out = open_out(path);
        out << "star_index,midpoint_mark,neighbors,connector_found\n";
        for (std::size_t i = 0; i < chain.stars.size(); ++i) {
            const auto& star = chain.stars[i];
            out << (i + 1) << ',' << format_double(star.mark) << ',' << star.neighbor_ids.size()
                << ',' << (i == 0 || star.connector ? 1 : 0) << '\n';
        }
        note(path);
    } else if (pipeline == "box_hierarchy") {
        static const auto allowed = keys_with({"box.n", "box.a", "box.theta3", "box.eps1",
                                               "box.eps3", "box.star_size", "domain.d"});
        cfg.validate_keys(allowed);
        const KernelSpec spec = kernel_from_config(cfg);
        const double n = cfg.get_double("box.n", 4096.0);
        const int dim = cfg.get_int("domain.d", 1);
        BoxHierarchyParams params;
        params.a = cfg.get_double("box.a", 0.0);
        params.theta3 = cfg.get_double("box.theta3", 0.0);
        params.eps1 = cfg.get_double("box.eps1", 0.0);
        params.eps3 = cfg.get_double("box.eps3", 0.0);
        params.star_size = cfg.get_int("box.star_size", 3);
        const BoxHierarchy h = build_box_hierarchy(n, dim, spec, params);
        SpatialDomain domain{dim, 0.5 * std::pow(n, 1.0 / dim), Boundary::free};
        const PointCloud cloud = sample_point_cloud(domain, derive_stream_seed(seed, 21));
        const BoxClassification cls =
            classify_good_boxes(h, cloud, derive_stream_seed(seed, 22));
        const auto path = out_dir / "boxes.csv";
        auto out = open_out(path);
        out << "layer,boxes,good\n";
        for (int k = 0; k <= h.k_p; ++k)
            out << k << ',' << cls.boxes[k] << ',' << cls.good[k] << '\n';
        note(path);
    } else if (pipeline == "bounds_table") {
        static const auto allowed = keys_with({"bounds.gamma", "bounds.kappa", "bounds.ell",
                                               "bounds.t0", "bounds.n_max", "bounds.nu_n_max",
                                               "bounds.grid_points"});
        cfg.validate_keys(allowed);
        BoundsParams p;
        p.gamma = cfg.get_double("bounds.gamma", p.gamma);
        p.kappa = cfg.get_double("bounds.kappa", p.kappa);
        p.ell = cfg.get_double("bounds.ell", p.ell);
        p.t0 = cfg.get_double("bounds.t0", p.t0);
        const int n_max = cfg.get_int("bounds.n_max", 10);
        const int nu_n_max = cfg.get_int("bounds.nu_n_max", 4);
        const int grid_points = cfg.get_int("bounds.grid_points", 16);
        std::vector<double> grid;
        for (int i = 0; i < grid_points; ++i)
            grid.push_back(std::exp(std::log(p.ell) * (grid_points - 1 - i) /
                                    std::max(1, grid_points - 1)) * 0.999);
        p.c_const = fit_constant_c(p, grid);
        const WindowCheck window = closed_bound_window(p);
        const auto path = out_dir / "bounds.csv";
        auto out = open_out(path);
        out << "n,alpha_n,beta_n,closed_bound,nu_check_max_ratio\n";
        for (int n = 1; n <= n_max; ++n) {
            const auto [alpha, beta] = alpha_beta(p, n);
            std::string closed = "";
            if (n >= 2 && window.ok) closed = format_double(alpha_closed_bound(p, n));
            std::string ratio = "";
            if (n >= 2 && n <= nu_n_max) {
                double worst = 0.0;
                for (double s : grid) {
                    const double bound = alpha * std::pow(s, -p.gamma) +
                                         (s >= p.ell ? beta * std::pow(s, p.gamma - 1.0) : 0.0);
                    worst = std::max(worst, nu_value(p, n, s) / bound);
                }
                ratio = format_double(worst);
            }
            out << n << ',' << format_double(alpha) << ',' << format_double(beta) << ','
                << closed << ',' << ratio << '\n';
        }
        note(path);
    } else {
        throw std::runtime_error("run_config: unknown pipeline '" + pipeline + "'");
    }
    write_manifest(out_dir, pipeline, seed, cfg);
    note(out_dir / "manifest.txt");
    return result;
}

}  // namespace cpgg

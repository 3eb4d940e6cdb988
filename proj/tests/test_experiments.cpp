#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cpgg/experiments.hpp"
#include "cpgg/rng.hpp"

using namespace cpgg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("cpgg_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const std::string& tag, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / ("cpgg_cfg_" + tag + ".cfg");
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

}  // namespace

TEST_CASE("config parsing") {
    const Config cfg = Config::parse_string(
        "# comment line\n"
        "kernel.gamma = 0.8  # trailing comment\n"
        "run.replicas=25\n"
        "gamma.lambdas = 0.1, 0.2 ,0.4\n"
        "\n"
        "name = value with spaces\n");
    CHECK(cfg.get_double("kernel.gamma", 0.0) == 0.8);
    CHECK(cfg.get_u64("run.replicas", 0) == 25);
    CHECK(cfg.get_double_list("gamma.lambdas") == std::vector<double>{0.1, 0.2, 0.4});
    CHECK(cfg.get_string("name", "") == "value with spaces");
    CHECK(cfg.get_string("absent", "fallback") == "fallback");

    CHECK_THROWS_WITH_AS(Config::parse_string("just a line\n", "f"),
                         doctest::Contains("f:1"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("a=1\na=2\n", "f"),
                         doctest::Contains("duplicate key 'a'"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("ok=1\n\n=2\n", "f"),
                         doctest::Contains("f:3"), std::runtime_error);
    CHECK_THROWS(cfg.get_double("name", 0.0));

    const std::string allowed[] = {"kernel.gamma", "run.replicas", "gamma.lambdas"};
    CHECK_THROWS_WITH_AS(cfg.validate_keys(allowed), doctest::Contains("unknown key 'name'"),
                         std::runtime_error);
}

TEST_CASE("kernel_from_config") {
    const Config cfg = Config::parse_string(
        "kernel.variant=age_rcm\nkernel.gamma=0.7\nkernel.delta=1.6\nkernel.beta=0.25\n");
    const KernelSpec spec = kernel_from_config(cfg);
    CHECK(spec.variant == KernelVariant::age_rcm);
    CHECK(spec.gamma == 0.7);
    CHECK(spec.beta_scale == 0.25);
    CHECK_THROWS(kernel_from_config(Config::parse_string("kernel.variant=nope\n")));
    CHECK_THROWS(kernel_from_config(Config::parse_string("kernel.gamma=1.5\n")));
}

TEST_CASE("fit_loglog_slope") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {1.0, 2.0, 5.0, 11.0, 31.0}) pts.emplace_back(x, 3.0 * std::pow(x, 2.5));
    const auto [slope, se] = fit_loglog_slope(pts);
    CHECK(slope == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(se <= 1e-12);

    std::vector<std::pair<double, double>> two{{1.0, 2.0}, {10.0, 200.0}};
    CHECK(fit_loglog_slope(two).first == doctest::Approx(2.0).epsilon(1e-12));

    std::vector<std::pair<double, double>> bad{{1.0, 1.0}, {2.0, -1.0}};
    CHECK_THROWS(fit_loglog_slope(bad));

    // noisy synthetic power law: slope within 3 standard errors
    SplitMix64 rng(8);
    std::vector<std::pair<double, double>> noisy;
    for (int i = 0; i < 100; ++i) {
        const double x = std::exp(0.05 * i);
        const double eps = 0.05 * std::sqrt(-2.0 * std::log(rng.next_open())) *
                           std::cos(2.0 * M_PI * rng.next_unit());
        noisy.emplace_back(x, std::pow(x, -1.7) * std::exp(eps));
    }
    const auto [s2, se2] = fit_loglog_slope(noisy);
    CHECK(std::abs(s2 - (-1.7)) <= 3.0 * se2);
}

TEST_CASE("estimate_gamma basics") {
    KernelSpec spec;
    spec.variant = KernelVariant::age_rcm;
    spec.gamma = 0.8;
    spec.delta = 2.0;
    spec.beta_scale = 0.1;
    GammaRules rules;

    CHECK(estimate_gamma(spec, {}, rules, 10, 1, 1).empty());

    // lambda = 0: no transmissions, so the origin must die well before the
    // horizon; survival estimate is exactly zero.
    const double lambdas[] = {0.0};
    const auto recs = estimate_gamma(spec, lambdas, rules, 200, 2, 1);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].survivals == 0);
    CHECK(recs[0].gamma_hat == 0.0);
    CHECK(recs[0].ci_low == 0.0);
    CHECK(recs[0].ci_high < 0.03);

    // volume rule
    CHECK(rules.volume_for(0.1) == 10000.0);
    CHECK(rules.volume_for(0.01) == 1e6);
}

TEST_CASE("extinction at lambda 0 reproduces the harmonic-number mean") {
    KernelSpec spec;
    spec.variant = KernelVariant::age_rcm;
    spec.gamma = 0.8;
    spec.delta = 2.0;
    spec.beta_scale = 0.1;
    const double volumes[] = {100.0};
    const auto recs = extinction_scaling(spec, 1, 0.0, volumes, 30000, 1e6, 1000000, 7, 1);
    double sum = 0.0;
    for (const auto& r : recs) {
        CHECK(!r.capped);
        sum += r.tau;
    }
    // H_100 = 5.18738; Poisson(100) vertex counts shift the mean only at the
    // third decimal.
    CHECK(std::abs(sum / recs.size() - 5.18738) < 0.05);
}

TEST_CASE("median_extinction_time censors at the horizon") {
    std::vector<ExtinctionRecord> recs;
    for (int i = 0; i < 5; ++i) {
        ExtinctionRecord r;
        r.n = 100.0;
        r.tau = 1.0 + i;
        r.capped = false;
        recs.push_back(r);
    }
    recs[4].tau = 50.0;
    recs[4].capped = true;  // censored at horizon
    CHECK(median_extinction_time(recs, 100.0) == 3.0);
    CHECK_THROWS(median_extinction_time(recs, 200.0));
}

TEST_CASE("run_config: minimal gamma pipeline") {
    const fs::path cfg = write_config(
        "gamma_min",
        "pipeline=estimate_gamma\n"
        "kernel.variant=age_rcm\nkernel.gamma=0.8\nkernel.delta=2\nkernel.beta=0.1\n"
        "gamma.lambdas=0.3\nrun.replicas=10\nrun.seed=5\n");
    const fs::path out = temp_dir("gamma_min");
    const RunResult res = run_config(cfg, out);
    REQUIRE(res.outputs.size() == 2);
    const std::string csv = slurp(out / "gamma.csv");
    CHECK(csv.rfind("lambda,volume,replicas,survivals,gamma_hat,ci_low,ci_high\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one row
    const std::string manifest = slurp(out / "manifest.txt");
    CHECK(manifest.find("pipeline=estimate_gamma") != std::string::npos);
    CHECK(manifest.find("master_seed=5") != std::string::npos);
    CHECK(manifest.find("kernel.beta=0.1") != std::string::npos);
}

TEST_CASE("run_config rejects unknown keys and unknown pipelines") {
    const fs::path bad_key = write_config(
        "badkey", "pipeline=estimate_gamma\ngamma.lambdas=0.3\nrun.replicas=2\nwhat.is=this\n");
    CHECK_THROWS_WITH_AS(run_config(bad_key, temp_dir("badkey")),
                         doctest::Contains("unknown key 'what.is'"), std::runtime_error);
    const fs::path bad_pipe = write_config("badpipe", "pipeline=nope\n");
    CHECK_THROWS_WITH_AS(run_config(bad_pipe, temp_dir("badpipe")),
                         doctest::Contains("unknown pipeline"), std::runtime_error);
}

TEST_CASE("reruns and worker counts produce byte-identical outputs") {
    const fs::path cfg = write_config(
        "determinism",
        "pipeline=extinction_scaling\n"
        "kernel.variant=soft_boolean\nkernel.gamma=0.85\nkernel.delta=1.5\n"
        "sim.lambda=0.6\next.volumes=40,80\next.horizon=30\nrun.replicas=16\nrun.seed=11\n");
    const fs::path out1 = temp_dir("det1"), out2 = temp_dir("det2"), out3 = temp_dir("det3");
    run_config(cfg, out1, std::nullopt, 1);
    run_config(cfg, out2, std::nullopt, 1);
    run_config(cfg, out3, std::nullopt, 3);
    CHECK(slurp(out1 / "extinction.csv") == slurp(out2 / "extinction.csv"));
    CHECK(slurp(out1 / "extinction.csv") == slurp(out3 / "extinction.csv"));
    CHECK(slurp(out1 / "manifest.txt") == slurp(out2 / "manifest.txt"));
    const std::string csv = slurp(out1 / "extinction.csv");
    CHECK(csv.rfind("n,lambda,replica,tau,capped,vertices\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 33);  // header + 2*16 rows
}

TEST_CASE("star chain and box pipelines write their CSV schemas") {
    const fs::path star_cfg = write_config(
        "starpipe",
        "pipeline=star_chain\n"
        "kernel.variant=soft_boolean\nkernel.gamma=0.85\nkernel.delta=1.5\n"
        "star.lambda=0.4\nstar.beta_star=1\nstar.stars=2\nrun.seed=3\n");
    const fs::path star_out = temp_dir("starpipe");
    run_config(star_cfg, star_out);
    CHECK(slurp(star_out / "chain.csv")
              .rfind("star_index,midpoint_mark,neighbors,connector_found\n", 0) == 0);

    const fs::path box_cfg = write_config(
        "boxpipe",
        "pipeline=box_hierarchy\n"
        "kernel.variant=soft_boolean\nkernel.gamma=0.85\nkernel.delta=1.5\n"
        "box.n=512\nbox.star_size=1\nrun.seed=3\n");
    const fs::path box_out = temp_dir("boxpipe");
    run_config(box_cfg, box_out);
    const std::string boxes = slurp(box_out / "boxes.csv");
    CHECK(boxes.rfind("layer,boxes,good\n", 0) == 0);
    CHECK(std::count(boxes.begin(), boxes.end(), '\n') >= 2);
}

TEST_CASE("bounds table pipeline") {
    const fs::path cfg = write_config(
        "boundspipe",
        "pipeline=bounds_table\n"
        "bounds.gamma=0.8\nbounds.ell=1e-6\nbounds.t0=0.5\n"
        "bounds.n_max=6\nbounds.nu_n_max=3\nbounds.grid_points=8\nrun.seed=2\n");
    const fs::path out = temp_dir("boundspipe");
    run_config(cfg, out);
    const std::string csv = slurp(out / "bounds.csv");
    CHECK(csv.rfind("n,alpha_n,beta_n,closed_bound,nu_check_max_ratio\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    // every nu ratio present must certify the bound
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto last_comma = line.rfind(',');
        const std::string ratio = line.substr(last_comma + 1);
        if (!ratio.empty()) CHECK(std::stod(ratio) <= 1.0 + 1e-9);
    }
}

TEST_CASE("format_double round trips") {
    for (double x : {0.1, 1.0 / 3.0, 12345.6789, 1e-300, 0.0}) {
        CHECK(std::stod(format_double(x)) == x);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cpgg/point_process.hpp"
#include "cpgg/rng.hpp"
#include "cpgg/stats.hpp"

using namespace cpgg;

TEST_CASE("zero volume yields an empty cloud") {
    const SpatialDomain domain{2, 0.0, Boundary::free};
    CHECK(sample_point_cloud(domain, 7).size() == 0);
}

TEST_CASE("cloud sampling is deterministic in (domain, seed)") {
    const SpatialDomain domain{2, 30.0, Boundary::torus};
    const PointCloud a = sample_point_cloud(domain, 99);
    const PointCloud b = sample_point_cloud(domain, 99);
    CHECK(a.positions == b.positions);
    CHECK(a.marks == b.marks);
    CHECK(sample_point_cloud(domain, 100).marks != a.marks);
}

TEST_CASE("counts follow Poisson(volume): CLT band over 500 seeds") {
    const SpatialDomain domain{1, 1000.0, Boundary::free};
    const int seeds = 500;
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s)
        sum += static_cast<double>(sample_point_cloud(domain, 1000 + s).size());
    const double mean = sum / seeds;
    CHECK(std::abs(mean - 1000.0) <= 3.0 * std::sqrt(1000.0 / seeds));
}

TEST_CASE("marks pass a KS test against uniform(0,1)") {
    const SpatialDomain domain{2, 100.0, Boundary::free};
    const PointCloud cloud = sample_point_cloud(domain, 4);
    CHECK(cloud.size() > 9000);
    CHECK(ks_uniform_pass(cloud.marks, 0.01));
    for (double m : cloud.marks) {
        CHECK(m > 0.0);
        CHECK(m < 1.0);
    }
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK(cloud.domain.contains(cloud.position(i)));
}

TEST_CASE("spatial homogeneity: chi-square over 2^d sub-boxes, 200 replicates") {
    const SpatialDomain domain{2, 20.0, Boundary::free};
    double counts[4] = {0, 0, 0, 0};
    double total = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const PointCloud cloud = sample_point_cloud(domain, 5000 + rep);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto p = cloud.position(i);
            const int q = (p[0] >= 0.0 ? 1 : 0) + (p[1] >= 0.0 ? 2 : 0);
            counts[q] += 1.0;
            total += 1.0;
        }
    }
    const double expected = total / 4.0;
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    CHECK(chi_square_pvalue(stat, 3) >= 0.01);
}

TEST_CASE("palm origin: size, position, rejection") {
    const SpatialDomain domain{3, 5.0, Boundary::free};
    const PointCloud cloud = sample_point_cloud(domain, 1);
    const std::size_t n = cloud.size();
    const PointCloud palm = add_palm_origin(cloud, 2);
    CHECK(palm.size() == n + 1);
    REQUIRE(palm.palm_origin.has_value());
    const auto pos = palm.position(*palm.palm_origin);
    for (double x : pos) CHECK(x == 0.0);
    CHECK_THROWS(add_palm_origin(palm, 3));

    PointCloud empty;
    empty.domain = domain;
    const PointCloud palm_only = add_palm_origin(empty, 4);
    CHECK(palm_only.size() == 1);
}

TEST_CASE("palm mark is uniform over seeds and respects the override") {
    const SpatialDomain domain{1, 0.0, Boundary::free};
    std::vector<double> marks;
    for (int s = 0; s < 10000; ++s) {
        PointCloud empty;
        empty.domain = domain;
        marks.push_back(add_palm_origin(empty, s).marks.back());
    }
    CHECK(ks_uniform_pass(marks, 0.01));

    PointCloud empty;
    empty.domain = domain;
    CHECK(add_palm_origin(empty, 0, 0.125).marks.back() == 0.125);
    PointCloud empty2;
    empty2.domain = domain;
    CHECK_THROWS(add_palm_origin (empty2, 0, 1.5));
}

TEST_CASE("distance: free vs torus") {
    const SpatialDomain free_d{1, 10.0, Boundary::free};
    const SpatialDomain torus_d{1, 10.0, Boundary::torus};
    const double a[] = {-4.5}, b[] = {4.5};
    CHECK(distance(free_d, a, b) == doctest::Approx(9.0));
    CHECK(distance(torus_d, a, b) == doctest::Approx(1.0));
    CHECK(distance(free_d, a, a) == 0.0);
    CHECK(distance(torus_d, a, a) == 0.0);
}

TEST_CASE("torus distance is a metric on random triples") {
    const SpatialDomain domain{3, 7.0, Boundary::torus};
    SplitMix64 rng(17);
    for (int i = 0; i < 10000; ++i) {
        double p[3][3];
        for (auto& row : p)
            for (double& x : row) x = rng.next_uniform(-3.5, 3.5);
        const double dab = distance(domain, p[0], p[1]);
        const double dba = distance(domain, p[1], p[0]);
        const double dac = distance(domain, p[0], p[2]);
        const double dcb = distance(domain, p[2], p[1]);
        CHECK(dab == dba);  // symmetry is exact
        CHECK(dab <= dac + dcb + 1e-12);
        // torus never exceeds euclidean
        const SpatialDomain free_d{3, 7.0, Boundary::free};
        CHECK(dab <= distance(free_d, p[0], p[1]) + 1e-12);
    }
}

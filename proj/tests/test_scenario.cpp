#include <catch_amalgamated.hpp>

#include "support/test_helpers.hpp"
#include "uavmec/scenario.hpp"

using namespace uavmec;

TEST_CASE("generated scenario matches the requested world") {
    GenParams p;  // 300 m x 300 m, 30 devices, 5 UAVs at 150 m
    const Scenario s = generate_scenario(p, 7);

    REQUIRE(s.num_devices() == 30);
    REQUIRE(s.num_uavs() == 5);
    REQUIRE(s.tbs_position == Position3{0.0, 0.0, 0.0});
    for (const auto& d : s.devices) {
        REQUIRE(d.position.z == 0.0);
        REQUIRE(d.position.x >= 0.0);
        REQUIRE(d.position.x <= 300.0);
        REQUIRE(d.task.input_bits >= 2e8);
        REQUIRE(d.task.input_bits <= 7e8);
        REQUIRE(d.local_cpu_hz >= p.md_cpu_hz.min);
        REQUIRE(d.local_cpu_hz <= p.md_cpu_hz.max);
    }
    for (const auto& u : s.uavs) REQUIRE(u.position.z == 150.0);
    REQUIRE(validate_scenario(s).empty());
}

TEST_CASE("degenerate counts and ranges are rejected") {
    GenParams p;
    p.num_devices = 0;
    REQUIRE_THROWS_AS(generate_scenario(p, 1), EmptyScenario);
    p.num_devices = 30;
    p.num_uavs = 0;
    REQUIRE_THROWS_AS(generate_scenario(p, 1), EmptyScenario);
    p.num_uavs = 5;
    p.input_bits = {7e8, 2e8};
    REQUIRE_THROWS_AS(generate_scenario(p, 1), InvalidRange);
}

TEST_CASE("equal seeds produce field-for-field identical scenarios") {
    GenParams p;
    REQUIRE(generate_scenario(p, 7) == generate_scenario(p, 7));
    REQUIRE_FALSE(generate_scenario(p, 7) == generate_scenario(p, 8));
}

TEST_CASE("k-means: separated points become singleton clusters") {
    const std::vector<Position3> pts{{0.0, 0.0, 0.0}, {300.0, 300.0, 0.0}};
    const KmeansResult r = kmeans_associate(pts, 2, 3);
    REQUIRE(r.clustering.members.size() == 2);
    REQUIRE(r.clustering.members[0].size() == 1);
    REQUIRE(r.clustering.members[1].size() == 1);
    for (std::size_t c = 0; c < 2; ++c) {
        const int id = r.clustering.members[c][0];
        REQUIRE(r.centroids[c].x == pts[static_cast<std::size_t>(id)].x);
        REQUIRE(r.centroids[c].y == pts[static_cast<std::size_t>(id)].y);
    }
}

TEST_CASE("k-means: one cluster collects everything at the coordinate mean") {
    std::vector<Position3> pts;
    Rng rng(5);
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < 12; ++i) {
        pts.push_back({rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0), 0.0});
        mx += pts.back().x;
        my += pts.back().y;
    }
    const KmeansResult r = kmeans_associate(pts, 1, 9);
    REQUIRE(r.clustering.members[0].size() == 12);
    REQUIRE_THAT(r.centroids[0].x, Catch::Matchers::WithinRel(mx / 12.0, 1e-12));
    REQUIRE_THAT(r.centroids[0].y, Catch::Matchers::WithinRel(my / 12.0, 1e-12));
}

TEST_CASE("k-means rejects more clusters than points") {
    const std::vector<Position3> pts{{0.0, 0.0, 0.0}, {1.0, 1.0, 0.0}};
    REQUIRE_THROWS_AS(kmeans_associate(pts, 3, 1), TooFewPoints);
}

TEST_CASE("k-means objective is nonincreasing and the partition is exact") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 11ull}) {
        std::vector<Position3> pts;
        Rng rng(seed);
        for (int i = 0; i < 30; ++i)
            pts.push_back({rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0), 0.0});
        const KmeansResult r = kmeans_associate(pts, 5, seed);

        REQUIRE(testutil::nonincreasing(r.objective_trace, 0.0));

        // independent re-evaluation of the squared-deviation objective
        double obj = 0.0;
        std::vector<int> seen(pts.size(), 0);
        for (std::size_t c = 0; c < 5; ++c)
            for (int id : r.clustering.members[c]) {
                seen[static_cast<std::size_t>(id)] += 1;
                const double dx = pts[static_cast<std::size_t>(id)].x - r.centroids[c].x;
                const double dy = pts[static_cast<std::size_t>(id)].y - r.centroids[c].y;
                obj += dx * dx + dy * dy;
            }
        for (int count : seen) REQUIRE(count == 1);  // disjoint and exhaustive
        REQUIRE_THAT(obj, Catch::Matchers::WithinRel(r.objective_trace.back(), 1e-9));
    }
}

TEST_CASE("UAVs hover over their final cluster centroids") {
    GenParams p;
    const Scenario s = generate_scenario(p, 13);
    std::vector<Position3> pts;
    for (const auto& d : s.devices) pts.push_back(d.position);
    for (std::size_t m = 0; m < s.num_uavs(); ++m) {
        const auto& ids = s.clustering.members[m];
        REQUIRE_FALSE(ids.empty());
        double cx = 0.0, cy = 0.0;
        for (int id : ids) {
            cx += pts[static_cast<std::size_t>(id)].x;
            cy += pts[static_cast<std::size_t>(id)].y;
        }
        cx /= static_cast<double>(ids.size());
        cy /= static_cast<double>(ids.size());
        REQUIRE(std::fabs(s.uavs[m].position.x - cx) < 1e-9);
        REQUIRE(std::fabs(s.uavs[m].position.y - cy) < 1e-9);
    }
}

TEST_CASE("validation reports each broken invariant") {
    GenParams p;
    Scenario s = generate_scenario(p, 7);
    REQUIRE(validate_scenario(s).empty());

    SECTION("clustering missing one device") {
        s.clustering.members[0].erase(s.clustering.members[0].begin());
        const auto v = validate_scenario(s);
        REQUIRE(v.size() == 1);
        REQUIRE(v[0].find("collectively exhaustive") != std::string::npos);
    }
    SECTION("power efficiency above one") {
        s.uavs[2].power_efficiency = 1.2;
        const auto v = validate_scenario(s);
        REQUIRE(v.size() == 1);
        REQUIRE(v[0].find("power_efficiency") != std::string::npos);
    }
    SECTION("duplicated device id across clusters") {
        s.clustering.members[1].push_back(s.clustering.members[0][0]);
        const auto v = validate_scenario(s);
        REQUIRE(v.size() == 1);
        REQUIRE(v[0].find("more than one cluster") != std::string::npos);
    }
}

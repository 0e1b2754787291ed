#include <catch_amalgamated.hpp>

#include <cmath>

#include "uavmec/common.hpp"
#include "uavmec/inner.hpp"

using namespace uavmec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("box projection clamps elementwise and is idempotent") {
    const std::vector<double> lo{0.0, 0.0, -1.0};
    const std::vector<double> hi{1.0, 1.0, 1.0};
    const auto p = project_box({1.3, -0.2, 0.5}, lo, hi);
    REQUIRE(p == std::vector<double>{1.0, 0.0, 0.5});
    REQUIRE(project_box(p, lo, hi) == p);
}

TEST_CASE("capped simplex projection") {
    SECTION("symmetric overflow splits the shift") {
        const auto p = project_capped_simplex({0.8, 0.8}, 1.0, {1.0, 1.0});
        REQUIRE_THAT(p[0], WithinAbs(0.5, 1e-9));
        REQUIRE_THAT(p[1], WithinAbs(0.5, 1e-9));
    }
    SECTION("interior points pass through") {
        const auto p = project_capped_simplex({0.2, 0.3}, 1.0, {1.0, 1.0});
        REQUIRE_THAT(p[0], WithinAbs(0.2, 1e-12));
        REQUIRE_THAT(p[1], WithinAbs(0.3, 1e-12));
    }
    SECTION("clamping alone can restore the cap") {
        const auto p = project_capped_simplex({2.0, 0.0}, 1.0, {1.0, 1.0});
        REQUIRE_THAT(p[0], WithinAbs(1.0, 1e-9));
        REQUIRE_THAT(p[1], WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("projection is the feasible least-squares point (grid oracle)") {
    Rng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        const std::vector<double> v{rng.uniform(-0.5, 2.0), rng.uniform(-0.5, 2.0)};
        const double cap = rng.uniform(0.4, 1.4);
        const auto p = project_capped_simplex(v, cap, {1.0, 1.0});
        REQUIRE(p[0] >= 0.0);
        REQUIRE(p[1] >= 0.0);
        REQUIRE(p[0] + p[1] <= cap + 1e-9);
        const double dist = (p[0] - v[0]) * (p[0] - v[0]) + (p[1] - v[1]) * (p[1] - v[1]);
        // exhaustive grid over the feasible square
        double best = kInf;
        const int steps = 1000;
        for (int i = 0; i <= steps; ++i)
            for (int j = 0; j <= steps; ++j) {
                const double x = i / static_cast<double>(steps);
                const double y = j / static_cast<double>(steps);
                if (x + y > cap) continue;
                const double d = (x - v[0]) * (x - v[0]) + (y - v[1]) * (y - v[1]);
                best = std::min(best, d);
            }
        REQUIRE(dist <= best + 1e-8);
    }
}

TEST_CASE("group equality projection hits the target sum") {
    FeasibleSet set;
    set.lo = {0.0, 0.0, 0.0};
    set.hi = {1.0, 1.0, 1.0};
    GroupConstraint g;
    g.indices = {0, 1, 2};
    g.cap = 1.0;
    g.equality = true;
    set.groups.push_back(g);
    const auto p = project_feasible({0.1, 0.1, 0.1}, set);
    REQUIRE_THAT(p[0] + p[1] + p[2], WithinAbs(1.0, 1e-9));
    REQUIRE_THAT(p[0], WithinAbs(1.0 / 3.0, 1e-9));  // deficit spread evenly
}

TEST_CASE("projected gradient descent on scalar quadratics") {
    auto quadratic = [](double center) {
        BlockProblem p;
        p.set.lo = {0.0};
        p.set.hi = {1.0};
        p.start = {0.0};
        p.value = [center](const std::vector<double>& x) {
            return (x[0] - center) * (x[0] - center);
        };
        p.gradient = [center](const std::vector<double>& x, std::vector<double>& g) {
            g[0] = 2.0 * (x[0] - center);
        };
        return p;
    };
    SECTION("boundary optimum") {
        const BlockResult r = solve_block(quadratic(2.0));
        REQUIRE_THAT(r.x[0], WithinAbs(1.0, 1e-9));
    }
    SECTION("interior optimum") {
        const BlockResult r = solve_block(quadratic(0.3));
        REQUIRE_THAT(r.x[0], WithinAbs(0.3, 1e-6));
    }
}

TEST_CASE("constrained 2-D quadratic matches the hand-solved KKT point") {
    // minimize (x-1)^2 + 2(y-1)^2 subject to x + y <= 1, x,y >= 0:
    // stationarity gives x = 1 - lambda/2, y = 1 - lambda/4, lambda = 4/3
    BlockProblem p;
    p.set.lo = {0.0, 0.0};
    p.set.hi = {1.0, 1.0};
    GroupConstraint g;
    g.indices = {0, 1};
    g.cap = 1.0;
    p.set.groups.push_back(g);
    p.start = {0.0, 0.0};
    p.value = [](const std::vector<double>& x) {
        return (x[0] - 1.0) * (x[0] - 1.0) + 2.0 * (x[1] - 1.0) * (x[1] - 1.0);
    };
    p.gradient = [](const std::vector<double>& x, std::vector<double>& grad) {
        grad[0] = 2.0 * (x[0] - 1.0);
        grad[1] = 4.0 * (x[1] - 1.0);
    };
    const BlockResult r = solve_block(p);
    REQUIRE_THAT(r.x[0], WithinAbs(1.0 / 3.0, 1e-5));
    REQUIRE_THAT(r.x[1], WithinAbs(2.0 / 3.0, 1e-5));
}

TEST_CASE("descent, feasibility and start checking") {
    BlockProblem p;
    p.set.lo = {0.0, 0.0};
    p.set.hi = {1.0, 1.0};
    GroupConstraint g;
    g.indices = {0, 1};
    g.cap = 1.0;
    p.set.groups.push_back(g);
    p.value = [](const std::vector<double>& x) {
        return (x[0] - 0.9) * (x[0] - 0.9) + (x[1] - 0.9) * (x[1] - 0.9) + 0.3 * x[0] * x[1];
    };
    p.gradient = [](const std::vector<double>& x, std::vector<double>& grad) {
        grad[0] = 2.0 * (x[0] - 0.9) + 0.3 * x[1];
        grad[1] = 2.0 * (x[1] - 0.9) + 0.3 * x[0];
    };

    SECTION("infeasible start is rejected") {
        p.start = {0.9, 0.9};
        REQUIRE_THROWS_AS(solve_block(p), InfeasibleStart);
    }
    SECTION("value never increases and the result is feasible") {
        p.start = {0.1, 0.2};
        const double f0 = p.value(p.start);
        const BlockResult r = solve_block(p);
        REQUIRE(r.value <= f0);
        REQUIRE(r.x[0] >= -1e-12);
        REQUIRE(r.x[1] >= -1e-12);
        REQUIRE(r.x[0] + r.x[1] <= 1.0 + 1e-9);
    }
}

TEST_CASE("a strictly convex proximal term makes the minimizer start-independent") {
    const double vartheta = 0.5;
    const std::vector<double> anchor{0.4, 0.6};
    BlockProblem p;
    p.set.lo = {0.0, 0.0};
    p.set.hi = {1.0, 1.0};
    p.value = [&](const std::vector<double>& x) {
        double v = -0.2 * x[0] - 0.05 * x[1];  // linear objective alone has many minimizers
        for (int i = 0; i < 2; ++i) {
            const double d = x[static_cast<std::size_t>(i)] - anchor[static_cast<std::size_t>(i)];
            v += 0.5 * vartheta * d * d;
        }
        return v;
    };
    p.gradient = [&](const std::vector<double>& x, std::vector<double>& g) {
        g[0] = -0.2 + vartheta * (x[0] - anchor[0]);
        g[1] = -0.05 + vartheta * (x[1] - anchor[1]);
    };
    p.start = {0.0, 0.0};
    const BlockResult a = solve_block(p);
    p.start = {1.0, 1.0};
    const BlockResult b = solve_block(p);
    REQUIRE_THAT(a.x[0], WithinAbs(b.x[0], 1e-5));
    REQUIRE_THAT(a.x[1], WithinAbs(b.x[1], 1e-5));
}

#include <catch_amalgamated.hpp>

#include <cmath>

#include "support/test_helpers.hpp"
#include "uavmec/costs.hpp"

using namespace uavmec;
using Catch::Matchers::WithinRel;

namespace {

MobileDevice sample_device(double input_bits = 2e8, double cpu_hz = 1e9) {
    MobileDevice d;
    d.id = 0;
    d.task = {input_bits, 1000.0, 200.0};
    d.local_cpu_hz = cpu_hz;
    d.uplink_tx_power_w = 1e-3;
    return d;
}

Uav table2_uav() {
    Uav u;
    u.id = 0;
    u.max_cpu_hz = 2e9;
    u.relay_tx_power_w = 1.0;
    u.power_efficiency = 0.7;
    u.thrust_n = 30.0;
    u.rotor_count = 4;
    u.rotor_diameter_m = 0.254;
    return u;
}

}  // namespace

TEST_CASE("local computing cost") {
    const MobileDevice d = sample_device();
    SECTION("full offload leaves nothing local") {
        const auto [t, e] = local_cost(d, 1.0, 1e-28);
        REQUIRE(t == 0.0);
        REQUIRE(e == 0.0);
    }
    SECTION("worked value at l = 0") {
        const auto [t, e] = local_cost(d, 0.0, 1e-28);
        REQUIRE_THAT(t, WithinRel(200.0, 1e-12));
        REQUIRE_THAT(e, WithinRel(20.0, 1e-12));
    }
    SECTION("linear in the local share") {
        const auto [t0, e0] = local_cost(d, 0.0, 1e-28);
        const auto [t5, e5] = local_cost(d, 0.5, 1e-28);
        REQUIRE_THAT(t5, WithinRel(0.5 * t0, 1e-12));
        REQUIRE_THAT(e5, WithinRel(0.5 * e0, 1e-12));
    }
}

TEST_CASE("uplink transmission cost") {
    MobileDevice d = sample_device(4.573e6);
    SECTION("zero load is free") {
        const auto [t, e] = uplink_cost(d, 0.0, 4.573e6);
        REQUIRE(t == 0.0);
        REQUIRE(e == 0.0);
    }
    SECTION("one second at rate == bits") {
        const auto [t, e] = uplink_cost(d, 1.0, 4.573e6);
        REQUIRE_THAT(t, WithinRel(1.0, 1e-12));
        REQUIRE_THAT(e, WithinRel(1e-3, 1e-12));
    }
    SECTION("zero rate with positive load") {
        REQUIRE_THROWS_AS(uplink_cost(d, 0.1, 0.0), ZeroRateWithLoad);
    }
}

TEST_CASE("edge computing cost") {
    const MobileDevice d = sample_device();
    SECTION("everything relayed leaves no edge work") {
        const auto [t, e] = uav_compute_cost(d, 1.0, 1.0, 2e9, 1e-28);
        REQUIRE(t == 0.0);
        REQUIRE(e == 0.0);
    }
    SECTION("worked value") {
        const auto [t, e] = uav_compute_cost(d, 1.0, 0.0, 2e9, 1e-28);
        REQUIRE_THAT(t, WithinRel(100.0, 1e-12));
        REQUIRE_THAT(e, WithinRel(80.0, 1e-12));
    }
    SECTION("zero CPU with positive load") {
        REQUIRE_THROWS_AS(uav_compute_cost(d, 0.5, 0.0, 0.0, 1e-28), ZeroCpuWithLoad);
    }
}

TEST_CASE("relay cost") {
    const MobileDevice d = sample_device(1.378e8);
    SECTION("no relay share") {
        const auto [t, e] = relay_cost(d, 1.0, 0.0, 1.378e8, 1.0);
        REQUIRE(t == 0.0);
        REQUIRE(e == 0.0);
    }
    SECTION("worked value") {
        const auto [t, e] = relay_cost(d, 1.0, 1.0, 1.378e8, 1.0);
        REQUIRE_THAT(t, WithinRel(1.0, 1e-12));
        REQUIRE_THAT(e, WithinRel(1.0, 1e-12));
    }
    SECTION("zero rate with positive load") {
        REQUIRE_THROWS_AS(relay_cost(d, 1.0, 0.5, 0.0, 1.0), ZeroRateWithLoad);
    }
}

TEST_CASE("hover power matches the rotor model") {
    const Uav u = table2_uav();
    const double p = hover_power(u, 1.225);
    const double expected =
        30.0 * std::sqrt(30.0) / (0.7 * std::sqrt(0.5 * M_PI * 4.0 * 0.254 * 0.254 * 1.225));
    REQUIRE_THAT(p, WithinRel(expected, 1e-12));
    REQUIRE_THAT(p, WithinRel(333.11, 5e-3));
}

TEST_CASE("hover time tracks the slowest member") {
    const Uav u = table2_uav();
    SECTION("idle UAV does not hover for anyone") {
        const auto [t, p, e] = hover_cost(u, 1.225, {});
        REQUIRE(t == 0.0);
        REQUIRE(e == 0.0);
        REQUIRE(p > 0.0);
    }
    SECTION("one member") {
        const auto [t, p, e] = hover_cost(u, 1.225, {{1.0, 100.0, 1.0}});
        REQUIRE_THAT(t, WithinRel(101.0, 1e-12));
        REQUIRE_THAT(e, WithinRel(p * 101.0, 1e-12));
        REQUIRE_THAT(e, WithinRel(33644.0, 1e-3));
    }
    SECTION("max over members") {
        const auto [t, p, e] = hover_cost(u, 1.225, {{1.0, 5.0, 2.0}, {3.0, 1.0, 4.0}});
        REQUIRE(t == 7.0);
        REQUIRE(e == p * 7.0);
    }
}

TEST_CASE("evaluate composes the worked micro example") {
    const Scenario s = testutil::micro_scenario();
    const DecisionVector x = testutil::micro_decision(s);
    const CostBreakdown b = evaluate(s, x);

    const double p_hov = hover_power(s.uavs[0], s.energy.air_density);
    REQUIRE_THAT(b.md[0].uplink_time, WithinRel(1.0, 1e-9));
    REQUIRE_THAT(b.md[0].e_off, WithinRel(1e-3, 1e-9));
    REQUIRE_THAT(b.md[0].t_edge, WithinRel(100.0, 1e-12));
    REQUIRE_THAT(b.md[0].e_edge, WithinRel(80.0, 1e-12));
    REQUIRE(b.md[0].e_local == 0.0);
    REQUIRE(b.md[0].t_relay == 0.0);
    REQUIRE_THAT(b.uav[0].t_hov, WithinRel(101.0, 1e-9));
    REQUIRE_THAT(b.objective, WithinRel(1e-3 + 80.0 + p_hov * 101.0, 1e-6));
}

TEST_CASE("evaluate with no offloading reduces to local energies") {
    GenParams p = testutil::tiny_params(6, 2, 6, 400.0);
    const Scenario s = generate_scenario(p, 3);
    const DecisionVector x = DecisionVector::zeros(s);  // l = 0 exactly
    const CostBreakdown b = evaluate(s, x);
    double local = 0.0;
    for (const auto& d : s.devices)
        local += d.task.cycles() * s.energy.md_chip_k * d.local_cpu_hz * d.local_cpu_hz;
    REQUIRE_THAT(b.objective, WithinRel(local, 1e-12));
    for (const auto& u : b.uav) {
        REQUIRE(u.t_hov == 0.0);
        REQUIRE(u.e_hov == 0.0);
    }
}

TEST_CASE("objective is linear in the task input sizes") {
    GenParams p = testutil::tiny_params(6, 2, 6, 400.0);
    Scenario s = generate_scenario(p, 5);
    Rng rng(17);
    const DecisionVector x = testutil::random_feasible_point(s, rng);
    const double base = evaluate(s, x).objective;
    for (auto& d : s.devices) d.task.input_bits *= 2.0;
    REQUIRE_THAT(evaluate(s, x).objective, WithinRel(2.0 * base, 1e-9));
}

TEST_CASE("dimension mismatches are rejected") {
    const Scenario s = testutil::micro_scenario();
    DecisionVector x = testutil::micro_decision(s);
    x.l.push_back(0.5);
    REQUIRE_THROWS_AS(evaluate(s, x), DimensionMismatch);
}

TEST_CASE("residual bookkeeping") {
    const Scenario s = testutil::micro_scenario();
    DecisionVector x = testutil::micro_decision(s);

    SECTION("feasible point has nonnegative residuals") {
        REQUIRE(residuals(s, x).feasible(1e-12));
    }
    SECTION("overloaded channel row") {
        x.delta = ChannelAssignment(1, 1);
        x.delta.at(0, 0) = 1.2;
        const auto r = residuals(s, x);
        REQUIRE_THAT(r.row_sum[0], WithinRel(-0.2, 1e-12));
        REQUIRE_FALSE(r.feasible(1e-9));
    }
    SECTION("CPU at capacity has exactly zero residual") {
        const auto r = residuals(s, x);  // micro decision uses the full 2 GHz
        REQUIRE(r.cpu_hz[0] == 0.0);
    }
}

TEST_CASE("every cost term is nonnegative on random in-domain points") {
    GenParams p = testutil::tiny_params(8, 2, 8, 300.0);
    const Scenario s = generate_scenario(p, 23);
    Rng rng(99);
    for (int rep = 0; rep < 25; ++rep) {
        const DecisionVector x = testutil::random_feasible_point(s, rng);
        const CostBreakdown b = evaluate(s, x);
        for (const auto& c : b.md) {
            REQUIRE(c.t_local >= 0.0);
            REQUIRE(c.e_local >= 0.0);
            REQUIRE(c.uplink_time >= 0.0);
            REQUIRE(c.e_off >= 0.0);
            REQUIRE(c.t_edge >= 0.0);
            REQUIRE(c.e_edge >= 0.0);
            REQUIRE(c.t_relay >= 0.0);
            REQUIRE(c.e_relay >= 0.0);
        }
        for (const auto& u : b.uav) {
            REQUIRE(u.t_hov >= 0.0);
            REQUIRE(u.e_hov >= 0.0);
        }
    }
}

TEST_CASE("objective decomposes into its own reported terms") {
    GenParams p = testutil::tiny_params(8, 2, 8, 300.0);
    const Scenario s = generate_scenario(p, 29);
    Rng rng(7);
    for (int rep = 0; rep < 25; ++rep) {
        const DecisionVector x = testutil::random_feasible_point(s, rng);
        const CostBreakdown b = evaluate(s, x);
        double total = 0.0;
        for (const auto& c : b.md) total += c.e_total;
        for (const auto& u : b.uav) total += u.e_total;
        REQUIRE_THAT(b.objective, WithinRel(total, 1e-9));
    }
}

TEST_CASE("deadline holds iff all three expanded inequalities hold") {
    GenParams p = testutil::tiny_params(8, 2, 8, 120.0);
    const Scenario s = generate_scenario(p, 31);
    Rng rng(12);
    int split_cases = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const DecisionVector x = testutil::random_feasible_point(s, rng);
        const CostBreakdown b = evaluate(s, x);
        for (std::size_t u = 0; u < s.num_devices(); ++u) {
            const double T = s.devices[u].task.deadline_s;
            const auto& c = b.md[u];
            const bool combined = c.t_total <= T;
            const bool split = c.t_local <= T && c.uplink_time + c.t_edge <= T &&
                               c.uplink_time + c.t_relay <= T;
            REQUIRE(combined == split);
            split_cases += combined ? 1 : 0;
        }
    }
    REQUIRE(split_cases > 0);  // the equivalence was exercised on both sides
}

TEST_CASE("boundary values zero the right terms") {
    const Scenario s = testutil::micro_scenario();
    DecisionVector x = testutil::micro_decision(s);

    x.l[0] = 0.0;
    CostBreakdown b = evaluate(s, x);
    REQUIRE(b.md[0].e_off == 0.0);
    REQUIRE(b.md[0].t_edge == 0.0);
    REQUIRE(b.md[0].t_relay == 0.0);

    x.l[0] = 1.0;
    x.phi[0] = 1.0;
    b = evaluate(s, x);
    REQUIRE(b.md[0].t_edge == 0.0);
    REQUIRE(b.md[0].e_edge == 0.0);
    REQUIRE(b.md[0].t_relay > 0.0);

    x.phi[0] = 0.0;
    b = evaluate(s, x);
    REQUIRE(b.md[0].t_relay == 0.0);
    REQUIRE(b.md[0].e_relay == 0.0);
    REQUIRE(b.md[0].t_edge > 0.0);
}

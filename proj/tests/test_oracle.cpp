#include <catch_amalgamated.hpp>

#include <cmath>

#include "support/test_helpers.hpp"
#include "uavmec/oracle.hpp"

using namespace uavmec;
using Catch::Matchers::WithinRel;

namespace {

// Independent single-device check: scan l over a fine grid; for each l the
// objective is piecewise linear in phi with breakpoints at {0, 1, the
// t_edge = t_relay balance, the two deadline bounds}, and the CPU share sits
// at the capacity vertex, so evaluating those candidates is exact.
double scan_single_device(const Scenario& s) {
    const MobileDevice& dev = s.devices[0];
    const Uav& uav = s.uavs[0];
    const double rate = uplink_rates(s, [] {
        ChannelAssignment d(1, 1);
        d.at(0, 0) = 1.0;
        return d;
    }())[0];
    const double relay_rate = rate_uav_tbs(s, 0);
    const double p_hov = hover_power(uav, s.energy.air_density);
    const double f = uav.max_cpu_hz;

    std::vector<double> l_candidates{1e-6, 1.0};
    for (double l = 0.0125; l < 1.0; l += 0.0125) l_candidates.push_back(l);
    const double forced = 1.0 - dev.task.deadline_s * dev.local_cpu_hz / dev.task.cycles();
    if (forced > 1e-6 && forced < 1.0) l_candidates.push_back(forced);

    double best = kInf;
    {
        // channel released: near-full local computing, no service time
        const auto [t_local, e_local] = local_cost(dev, 1e-6, s.energy.md_chip_k);
        if (t_local <= dev.task.deadline_s) best = e_local;
    }
    for (double l : l_candidates) {
        const auto [t_local, e_local] = local_cost(dev, l, s.energy.md_chip_k);
        if (t_local > dev.task.deadline_s) continue;
        const auto [t_off, e_off] = uplink_cost(dev, l, rate);
        const double kink = dev.task.cycles_per_bit * relay_rate /
                            (dev.task.cycles_per_bit * relay_rate + f);
        const double slack = dev.task.deadline_s - t_off;
        if (slack < 0.0) continue;
        const double edge_c = l * dev.task.cycles() / f;
        const double relay_c = l * dev.task.input_bits / relay_rate;
        for (double phi : {0.0, 1.0, kink, edge_c > 0.0 ? 1.0 - slack / edge_c : 0.0,
                           relay_c > 0.0 ? slack / relay_c : 1.0}) {
            if (phi < 0.0 || phi > 1.0) continue;
            const auto [t_edge, e_edge] = uav_compute_cost(dev, l, phi, f, s.energy.uav_chip_k);
            const auto [t_relay, e_relay] = relay_cost(dev, l, phi, relay_rate, uav.relay_tx_power_w);
            if (t_off + std::max(t_edge, t_relay) > dev.task.deadline_s) continue;
            const double hover = p_hov * (t_off + std::max(t_edge, t_relay));
            best = std::min(best, e_local + e_off + e_edge + e_relay + hover);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("single-device oracle matches an independent closed-form scan") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        GenParams p = testutil::tiny_params(1, 1, 1, 500.0);
        const Scenario s = generate_scenario(p, seed);
        const OracleSolution o = brute_force_solve(s);
        const double scan = scan_single_device(s);
        // both carry the vertex candidates (positivity floor, deadline bound,
        // service crossover); the scan's finer grids close any residual gap
        REQUIRE_THAT(o.objective, WithinRel(scan, 1e-6));
    }
}

TEST_CASE("refining the grid never increases the optimum") {
    GenParams p = testutil::tiny_params(2, 2, 2, 400.0);
    const Scenario s = generate_scenario(p, 5);
    OracleConfig coarse;
    coarse.grid_step = 0.05;
    OracleConfig fine;
    fine.grid_step = 0.025;
    REQUIRE(brute_force_solve(s, fine).objective <=
            brute_force_solve(s, coarse).objective + 1e-12);
}

TEST_CASE("hopeless deadlines yield no feasible point") {
    GenParams p = testutil::tiny_params(1, 1, 1, 0.5);
    const Scenario s = generate_scenario(p, 3);
    REQUIRE_THROWS_AS(brute_force_solve(s), NoFeasiblePoint);
}

TEST_CASE("instance limits are enforced") {
    GenParams p = testutil::tiny_params(4, 2, 2, 400.0);
    const Scenario s = generate_scenario(p, 3);
    REQUIRE_THROWS_AS(brute_force_solve(s), InstanceTooLarge);
}

TEST_CASE("oracle solutions are feasible and consistent with the evaluator") {
    for (std::uint64_t seed : {4ull, 9ull}) {
        GenParams p = testutil::tiny_params(2, 1, 2, 350.0);
        const Scenario s = generate_scenario(p, seed);
        const OracleSolution o = brute_force_solve(s);
        REQUIRE(residuals(s, o.decisions).feasible(1e-9));
        REQUIRE_THAT(evaluate(s, o.decisions).objective, WithinRel(o.objective, 1e-9));
    }
}

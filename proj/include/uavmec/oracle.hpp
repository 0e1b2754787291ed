#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "uavmec/common.hpp"
#include "uavmec/costs.hpp"
#include "uavmec/radio.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

// Exhaustive grid search over tiny instances; the ground truth the BSUM
// solver is checked against. Deliberately built from the per-term cost
// functions, not the solver's evaluator or subproblems.
struct OracleConfig {
    double grid_step{0.05};
    double l_min{1e-6};
    bool refine_kinks{true};  // add the t_edge = t_relay crossover to the phi grid
    int max_devices{3};
    int max_uavs{2};
    int max_channels{3};
    std::size_t max_cluster_product{200'000'000};
};

struct OracleSolution {
    DecisionVector decisions;
    double objective{0.0};
};

namespace oracle_detail {

struct MemberChoice {
    double l{0.0}, phi{0.0}, f_frac{0.0};
    double energy{0.0};   // E_local + E_off + E_edge + E_relay
    double service{0.0};  // t_off + max(t_edge, t_relay)
};

// keep only (energy, f, service)-Pareto-optimal candidates; the cluster cost
// is monotone in each of the three
inline std::vector<MemberChoice> pareto_prune(std::vector<MemberChoice> entries) {
    std::stable_sort(entries.begin(), entries.end(), [](const MemberChoice& a, const MemberChoice& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        if (a.f_frac != b.f_frac) return a.f_frac < b.f_frac;
        return a.service < b.service;
    });
    std::vector<MemberChoice> kept;
    // staircase over kept entries: service strictly decreasing in f_frac, so
    // the cheapest-service kept entry with f <= x sits at the largest key <= x
    std::map<double, double> stair;
    for (const auto& e : entries) {
        auto it = stair.upper_bound(e.f_frac);
        if (it != stair.begin() && std::prev(it)->second <= e.service) continue;  // dominated
        kept.push_back(e);
        auto pos = stair.insert_or_assign(e.f_frac, e.service).first;
        for (auto jt = std::next(pos); jt != stair.end();) {
            if (jt->second >= e.service)
                jt = stair.erase(jt);
            else
                ++jt;
        }
    }
    return kept;
}

}  // namespace oracle_detail

inline OracleSolution brute_force_solve(const Scenario& s, const OracleConfig& cfg = {}) {
    const std::size_t U = s.num_devices();
    const std::size_t M = s.num_uavs();
    const int N = s.radio.num_subchannels;
    if (U > static_cast<std::size_t>(cfg.max_devices) || M > static_cast<std::size_t>(cfg.max_uavs) ||
        N > cfg.max_channels)
        throw InstanceTooLarge("oracle limits: " + std::to_string(cfg.max_devices) + " devices, " +
                               std::to_string(cfg.max_uavs) + " UAVs, " +
                               std::to_string(cfg.max_channels) + " subchannels");
    if (!(cfg.grid_step > 0.0 && cfg.grid_step <= 0.5)) throw InvalidRange("oracle grid_step in (0, 0.5]");

    const std::vector<int> cluster_of = s.device_cluster_map();
    const auto rx = received_power_table(s);

    std::vector<double> l_grid{cfg.l_min};
    for (double v = cfg.grid_step; v < 1.0 - 1e-12; v += cfg.grid_step) l_grid.push_back(v);
    l_grid.push_back(1.0);
    std::vector<double> frac_grid{0.0};
    for (double v = cfg.grid_step; v < 1.0 - 1e-12; v += cfg.grid_step) frac_grid.push_back(v);
    frac_grid.push_back(1.0);

    OracleSolution best;
    best.objective = kInf;
    bool any = false;

    // binary rows with sum <= 1: each device either holds one subchannel or
    // none at all (channel index N below); a channel-less device cannot
    // deliver anything, so its only candidate keeps l at the positivity floor
    std::vector<int> channel(U, 0);
    const std::size_t combos = [&] {
        std::size_t c = 1;
        for (std::size_t u = 0; u < U; ++u) c *= static_cast<std::size_t>(N) + 1;
        return c;
    }();

    for (std::size_t combo = 0; combo < combos; ++combo) {
        {
            std::size_t rem = combo;
            for (std::size_t u = 0; u < U; ++u) {
                channel[u] = static_cast<int>(rem % (static_cast<std::size_t>(N) + 1));
                rem /= static_cast<std::size_t>(N) + 1;
            }
        }
        ChannelAssignment delta(static_cast<int>(U), N);
        for (std::size_t u = 0; u < U; ++u)
            if (channel[u] < N) delta.at(static_cast<int>(u), channel[u]) = 1.0;
        const auto rates = uplink_rates(s, delta, rx, cluster_of);

        double combo_objective = 0.0;
        bool combo_feasible = true;
        DecisionVector combo_x = DecisionVector::zeros(s);
        combo_x.delta = delta;

        for (std::size_t m = 0; m < M && combo_feasible; ++m) {
            const auto& ids = s.clustering.members[m];
            if (ids.empty()) continue;
            const Uav& uav = s.uavs[m];
            const double relay_rate = rate_uav_tbs(s, static_cast<int>(m));
            const double p_hov = hover_power(uav, s.energy.air_density);

            // per-member feasible candidates
            std::vector<std::vector<oracle_detail::MemberChoice>> tables;
            for (int id : ids) {
                const std::size_t u = static_cast<std::size_t>(id);
                const MobileDevice& dev = s.devices[u];
                if (channel[u] == N) {
                    // no subchannel: nothing arrives, the device computes
                    // (almost) everything itself and adds no service time
                    const auto [t_local, e_local] = local_cost(dev, cfg.l_min, s.energy.md_chip_k);
                    if (t_local > dev.task.deadline_s) {
                        combo_feasible = false;
                        break;
                    }
                    tables.push_back({oracle_detail::MemberChoice{cfg.l_min, 0.0, 0.0, e_local, 0.0}});
                    continue;
                }
                const double rate = rates[u * static_cast<std::size_t>(N) +
                                          static_cast<std::size_t>(channel[u])];
                std::vector<double> member_l = l_grid;
                // the local-side deadline bound is a vertex of the feasible
                // set; without it the grid systematically overshoots it
                const double forced =
                    1.0 - dev.task.deadline_s * dev.local_cpu_hz / dev.task.cycles();
                if (forced > cfg.l_min && forced < 1.0) member_l.push_back(forced);
                std::vector<oracle_detail::MemberChoice> entries;
                for (double l : member_l) {
                    const auto [t_local, e_local] = local_cost(dev, l, s.energy.md_chip_k);
                    if (t_local > dev.task.deadline_s) continue;
                    const auto [t_off, e_off] = uplink_cost(dev, l, rate);
                    for (double frac : frac_grid) {
                        const double f_hz = frac * uav.max_cpu_hz;
                        std::vector<double> phis;
                        phis.push_back(0.0);
                        for (double v = cfg.grid_step; v < 1.0 - 1e-12; v += cfg.grid_step)
                            phis.push_back(v);
                        phis.push_back(1.0);
                        if (cfg.refine_kinks && f_hz > 0.0) {
                            const double kink = dev.task.cycles_per_bit * relay_rate /
                                                (dev.task.cycles_per_bit * relay_rate + f_hz);
                            if (kink > 0.0 && kink < 1.0) phis.push_back(kink);
                        }
                        for (double phi : phis) {
                            const double edge_cycles = (1.0 - phi) * l * dev.task.cycles();
                            if (edge_cycles > 0.0 && f_hz <= 0.0) continue;
                            const auto [t_edge, e_edge] =
                                uav_compute_cost(dev, l, phi, f_hz, s.energy.uav_chip_k);
                            const auto [t_relay, e_relay] =
                                relay_cost(dev, l, phi, relay_rate, uav.relay_tx_power_w);
                            if (t_off + std::max(t_edge, t_relay) > dev.task.deadline_s) continue;
                            oracle_detail::MemberChoice c;
                            c.l = l;
                            c.phi = phi;
                            c.f_frac = frac;
                            c.energy = e_local + e_off + e_edge + e_relay;
                            c.service = t_off + std::max(t_edge, t_relay);
                            entries.push_back(c);
                        }
                    }
                }
                if (entries.empty()) {
                    combo_feasible = false;
                    break;
                }
                tables.push_back(oracle_detail::pareto_prune(std::move(entries)));
            }
            if (!combo_feasible) break;

            std::size_t product = 1;
            for (const auto& t : tables) {
                product *= t.size();
                if (product > cfg.max_cluster_product)
                    throw InstanceTooLarge("oracle cluster search space exceeds " +
                                           std::to_string(cfg.max_cluster_product) + " points");
            }

            // suffix minima of member energies for bounding
            std::vector<double> suffix_min(tables.size() + 1, 0.0);
            for (std::size_t i = tables.size(); i-- > 0;) {
                double mn = kInf;
                for (const auto& e : tables[i]) mn = std::min(mn, e.energy);
                suffix_min[i] = suffix_min[i + 1] + mn;
            }

            double cluster_best = kInf;
            std::vector<std::size_t> pick(tables.size(), 0), best_pick;
            auto dfs = [&](auto&& self, std::size_t i, double f_sum, double max_s,
                           double energy) -> void {
                if (energy + p_hov * max_s + suffix_min[i] >= cluster_best) return;
                if (i == tables.size()) {
                    cluster_best = energy + p_hov * max_s;
                    best_pick = pick;
                    return;
                }
                for (std::size_t j = 0; j < tables[i].size(); ++j) {
                    const auto& e = tables[i][j];
                    if (f_sum + e.f_frac > 1.0 + 1e-12) continue;
                    pick[i] = j;
                    self(self, i + 1, f_sum + e.f_frac, std::max(max_s, e.service),
                         energy + e.energy);
                }
            };
            dfs(dfs, 0, 0.0, 0.0, 0.0);
            if (!std::isfinite(cluster_best)) {
                combo_feasible = false;
                break;
            }
            combo_objective += cluster_best;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const std::size_t u = static_cast<std::size_t>(ids[i]);
                const auto& e = tables[i][best_pick[i]];
                combo_x.l[u] = e.l;
                combo_x.phi[u] = e.phi;
                combo_x.f_hz[u] = e.f_frac * uav.max_cpu_hz;
            }
        }

        if (!combo_feasible) continue;
        any = true;
        if (combo_objective < best.objective) {
            best.objective = combo_objective;
            best.decisions = combo_x;
        }
    }

    if (!any) throw NoFeasiblePoint("no grid point satisfies every constraint");
    return best;
}

}  // namespace uavmec

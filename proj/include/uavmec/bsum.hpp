#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "uavmec/common.hpp"
#include "uavmec/costs.hpp"
#include "uavmec/inner.hpp"
#include "uavmec/radio.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

enum class SelectionRule { cyclic, gauss_southwell, randomized };

enum class Block : int { channel = 0, offload = 1, cpu = 2, relay = 3 };

struct BlockMask {
    bool channel{true};
    bool offload{true};
    bool cpu{true};
    bool relay{true};

    bool active(Block b) const {
        switch (b) {
            case Block::channel: return channel;
            case Block::offload: return offload;
            case Block::cpu: return cpu;
            case Block::relay: return relay;
        }
        return false;
    }
};

struct SolverConfig {
    double vartheta{0.1};            // proximal penalty, same for every block
    double epsilon{1e-3};            // relative-change convergence threshold
    int max_outer_iters{500};
    double rounding_threshold{0.5};  // psi
    double violation_weight{-1.0};   // tau; negative means 10x the initial objective
    SelectionRule rule{SelectionRule::cyclic};
    std::uint64_t seed{0};

    double inner_tol{1e-6};
    int inner_max_iters{500};
    double l_min{1e-6};              // strict positivity floor for the offload fraction
};

enum class TerminationReason { converged, max_iterations };

struct SolverResult {
    DecisionVector decisions;        // delta is binary after rounding and repair
    std::vector<double> trace;       // true (unpenalized) objective, entry 0 = initial point
    double objective{0.0};           // evaluated at the returned decisions
    double relaxed_objective{0.0};   // last relaxed sweep value, the numerator of mu
    int iterations{0};               // outer sweeps performed
    double delta_violation{0.0};     // Delta measured on the rounded point before repair
    double mu{1.0};
    CostBreakdown breakdown;
    TerminationReason reason{TerminationReason::converged};
    bool feasible{false};
};

// ---- rounding, repair, integrality gap ----

inline ChannelAssignment round_delta(const ChannelAssignment& relaxed, double psi) {
    if (!(psi > 0.0 && psi < 1.0)) throw InvalidRange("rounding threshold must lie in (0, 1)");
    ChannelAssignment out = relaxed;
    for (double& d : out.delta) d = (d >= psi) ? 1.0 : 0.0;
    return out;
}

// Maximum row-sum violation of the rounded assignment, and a repaired copy
// where each violating device keeps only the subchannel with the largest
// relaxed value (ties to the lowest index).
inline std::pair<double, ChannelAssignment> violation_and_repair(const ChannelAssignment& binary,
                                                                 const ChannelAssignment& relaxed) {
    ChannelAssignment out = binary;
    double violation = 0.0;
    for (int u = 0; u < binary.num_devices; ++u) {
        const double row = binary.row_sum(u);
        violation = std::max(violation, std::max(0.0, row - 1.0));
        if (row <= 1.0) continue;
        int best = 0;
        double best_v = -1.0;
        for (int n = 0; n < binary.num_channels; ++n) {
            if (binary.at(u, n) == 0.0) continue;
            if (relaxed.at(u, n) > best_v) {
                best_v = relaxed.at(u, n);
                best = n;
            }
        }
        for (int n = 0; n < binary.num_channels; ++n) out.at(u, n) = (n == best) ? 1.0 : 0.0;
    }
    return {violation, out};
}

inline double integrality_gap(double relaxed_value, double tau, double violation) {
    const double denom = relaxed_value + tau * violation;
    if (!(denom > 0.0)) throw Error("integrality gap denominator must be positive");
    return relaxed_value / denom;
}

// ---- coordinate selection ----

inline std::vector<Block> select_blocks(SelectionRule rule, int sweep_index, std::uint64_t seed,
                                        const std::array<double, 4>& gradient_norms) {
    std::vector<Block> order{Block::channel, Block::offload, Block::cpu, Block::relay};
    switch (rule) {
        case SelectionRule::cyclic:
            return order;
        case SelectionRule::randomized: {
            Rng rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(sweep_index + 1));
            const auto perm = rng.permutation(4);
            std::vector<Block> shuffled(4);
            for (std::size_t i = 0; i < 4; ++i) shuffled[i] = order[perm[i]];
            return shuffled;
        }
        case SelectionRule::gauss_southwell:
            std::stable_sort(order.begin(), order.end(), [&](Block a, Block b) {
                return gradient_norms[static_cast<std::size_t>(a)] >
                       gradient_norms[static_cast<std::size_t>(b)];
            });
            return order;
    }
    return order;
}

namespace detail {

// Precomputed scenario tables shared by every block subproblem.
struct SolveContext {
    const Scenario* s{nullptr};
    std::size_t U{0}, M{0};
    int N{0};
    std::vector<int> cluster_of;
    std::vector<std::vector<double>> rx;   // received power [device][uav]
    std::vector<double> relay_rate;        // per UAV
    std::vector<double> hover_p;           // per UAV
    std::vector<double> input_bits, cycles, deadline, md_cpu, md_tx, gain_own;
    std::vector<double> rates;             // uplink rates under the current delta

    explicit SolveContext(const Scenario& sc) : s(&sc) {
        U = sc.num_devices();
        M = sc.num_uavs();
        N = sc.radio.num_subchannels;
        cluster_of = sc.device_cluster_map();
        rx = received_power_table(sc);
        relay_rate.resize(M);
        hover_p.resize(M);
        for (std::size_t m = 0; m < M; ++m) {
            relay_rate[m] = rate_uav_tbs(sc, static_cast<int>(m));
            hover_p[m] = hover_power(sc.uavs[m], sc.energy.air_density);
        }
        input_bits.resize(U);
        cycles.resize(U);
        deadline.resize(U);
        md_cpu.resize(U);
        md_tx.resize(U);
        gain_own.resize(U);
        for (std::size_t u = 0; u < U; ++u) {
            input_bits[u] = sc.devices[u].task.input_bits;
            cycles[u] = sc.devices[u].task.cycles();
            deadline[u] = sc.devices[u].task.deadline_s;
            md_cpu[u] = sc.devices[u].local_cpu_hz;
            md_tx[u] = sc.devices[u].uplink_tx_power_w;
            gain_own[u] = rx[u][static_cast<std::size_t>(cluster_of[u])] / md_tx[u];
        }
    }

    void refresh_rates(const ChannelAssignment& delta) {
        rates = uplink_rates(*s, delta, rx, cluster_of);
    }

    double rate(std::size_t u, int n) const {
        return rates[u * static_cast<std::size_t>(N) + static_cast<std::size_t>(n)];
    }

    // delta-weighted uplink seconds per unit of offload fraction
    double uplink_slope(const DecisionVector& x, std::size_t u) const {
        double t = 0.0;
        for (int n = 0; n < N; ++n) {
            const double w = x.delta.at(static_cast<int>(u), n);
            if (w > 0.0) t += w * input_bits[u] / rate(u, n);
        }
        return t;
    }
};

inline double prox_term(const std::vector<double>& x, const std::vector<double>& anchor,
                        double vartheta) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - anchor[i];
        d2 += d * d;
    }
    return 0.5 * vartheta * d2;
}

// -------- channel block: linear uplink energy + hover term + prox over
// per-row unit-sum boxes; rates are frozen at the anchor assignment. --------
struct DeltaBlock {
    BlockProblem problem;
    std::vector<double> anchor;
};

inline DeltaBlock build_delta_block(const SolveContext& ctx, const DecisionVector& x,
                                    double vartheta) {
    const std::size_t U = ctx.U;
    const int N = ctx.N;
    const std::size_t dim = U * static_cast<std::size_t>(N);

    std::vector<double> e_coef(dim, 0.0), t_coef(dim, 0.0);
    std::vector<double> side_const(U, 0.0);  // max(t_edge, t_relay), constant in delta
    for (std::size_t u = 0; u < U; ++u) {
        const double l = x.l[u];
        for (int n = 0; n < N; ++n) {
            const std::size_t i = u * static_cast<std::size_t>(N) + static_cast<std::size_t>(n);
            const double t = l * ctx.input_bits[u] / ctx.rate(u, n);
            t_coef[i] = t;
            e_coef[i] = ctx.md_tx[u] * t;
        }
        const double edge_cycles = (1.0 - x.phi[u]) * l * ctx.cycles[u];
        const double t_edge = edge_cycles > 0.0 ? edge_cycles / x.f_hz[u] : 0.0;
        const double t_relay =
            x.phi[u] * l * ctx.input_bits[u] / ctx.relay_rate[static_cast<std::size_t>(ctx.cluster_of[u])];
        side_const[u] = std::max(t_edge, t_relay);
    }

    DeltaBlock blk;
    blk.problem.start.assign(x.delta.delta.begin(), x.delta.delta.end());
    blk.anchor = blk.problem.start;
    blk.problem.set.lo.assign(dim, 0.0);
    blk.problem.set.hi.assign(dim, 1.0);
    for (std::size_t u = 0; u < U; ++u) {
        GroupConstraint g;
        g.cap = 1.0;
        g.equality = true;  // every device holds exactly one subchannel's worth of assignment
        for (int n = 0; n < N; ++n)
            g.indices.push_back(static_cast<int>(u * static_cast<std::size_t>(N)) + n);
        blk.problem.set.groups.push_back(std::move(g));
    }

    const auto members = ctx.s->clustering.members;
    const auto hover_p = ctx.hover_p;
    auto anchor = blk.anchor;

    auto row_time = [t_coef, N](const std::vector<double>& d, std::size_t u) {
        double t = 0.0;
        const std::size_t base = u * static_cast<std::size_t>(N);
        for (int n = 0; n < N; ++n)
            t += d[base + static_cast<std::size_t>(n)] * t_coef[base + static_cast<std::size_t>(n)];
        return t;
    };

    blk.problem.value = [=](const std::vector<double>& d) {
        double obj = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) obj += d[i] * e_coef[i];
        for (std::size_t m = 0; m < members.size(); ++m) {
            double t_hov = 0.0;
            for (int id : members[m]) {
                const std::size_t u = static_cast<std::size_t>(id);
                t_hov = std::max(t_hov, row_time(d, u) + side_const[u]);
            }
            obj += hover_p[m] * t_hov;
        }
        return obj + prox_term(d, anchor, vartheta);
    };
    blk.problem.gradient = [=](const std::vector<double>& d, std::vector<double>& g) {
        for (std::size_t i = 0; i < d.size(); ++i) g[i] = e_coef[i] + vartheta * (d[i] - anchor[i]);
        for (std::size_t m = 0; m < members.size(); ++m) {
            if (members[m].empty()) continue;
            int arg = members[m].front();
            double best = -1.0;
            for (int id : members[m]) {
                const double t = row_time(d, static_cast<std::size_t>(id)) +
                                 side_const[static_cast<std::size_t>(id)];
                if (t > best) {
                    best = t;
                    arg = id;
                }
            }
            const std::size_t base = static_cast<std::size_t>(arg) * static_cast<std::size_t>(N);
            for (int n = 0; n < N; ++n)
                g[base + static_cast<std::size_t>(n)] +=
                    hover_p[m] * t_coef[base + static_cast<std::size_t>(n)];
        }
    };
    return blk;
}

// -------- continuous blocks (l, f, phi): per-cluster hover epigraph.
//
// The hover max is handled by the auxiliary per-UAV hover-time variable: for
// a candidate hover time t, every member's service time must stay <= t, which
// tightens that member's box; the remaining subproblem is smooth and goes to
// the generic projected-gradient solver. The outer minimization over t is a
// one-dimensional convex search (objective P_hov * t plus the subproblem
// value), done by golden section. --------

// q_u(z) = lin*z + quad*z^2 plus the proximal pull toward the anchor
struct MemberObjective {
    double lin{0.0};
    double quad{0.0};
    double anchor{0.0};
};

struct FixedTimeSubproblem {
    std::vector<MemberObjective> q;
    std::vector<double> lo, hi;        // boxes at the current hover time
    std::vector<double> start;
    bool group_cap{false};             // sum of coordinates <= 1 (CPU fractions)
};

inline double solve_fixed_time(const FixedTimeSubproblem& sp, double vartheta, double inner_tol,
                               int inner_max_iters, std::vector<double>& out) {
    BlockProblem p;
    p.set.lo = sp.lo;
    p.set.hi = sp.hi;
    if (sp.group_cap) {
        GroupConstraint g;
        g.cap = 1.0;
        for (std::size_t i = 0; i < sp.lo.size(); ++i) g.indices.push_back(static_cast<int>(i));
        p.set.groups.push_back(std::move(g));
    }
    p.start = project_feasible(sp.start, p.set);
    const auto q = sp.q;
    p.value = [q, vartheta](const std::vector<double>& z) {
        double v = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double d = z[i] - q[i].anchor;
            v += q[i].lin * z[i] + q[i].quad * z[i] * z[i] + 0.5 * vartheta * d * d;
        }
        return v;
    };
    p.gradient = [q, vartheta](const std::vector<double>& z, std::vector<double>& g) {
        for (std::size_t i = 0; i < z.size(); ++i)
            g[i] = q[i].lin + 2.0 * q[i].quad * z[i] + vartheta * (z[i] - q[i].anchor);
    };
    BlockResult r = solve_block(p, inner_tol, inner_max_iters);
    out = std::move(r.x);
    return r.value;
}

// golden-section minimization of a convex scalar function on [a, b]
template <typename F>
inline double golden_minimize(F&& f, double a, double b, int iters = 80) {
    constexpr double inv_phi = 0.6180339887498949;
    if (!(b > a)) return a;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// Per-cluster solve shared by the three continuous blocks. `boxes_at(t)`
// fills lo/hi for a hover time t and reports whether it is feasible;
// infeasible brackets are pre-shrunk by bisection before the golden search.
template <typename BoxesAt>
inline void solve_cluster_epigraph(const std::vector<MemberObjective>& q, bool group_cap,
                                   const std::vector<double>& start, double hover_power_w,
                                   double t_lo, double t_hi, BoxesAt&& boxes_at,
                                   const SolverConfig& cfg, std::vector<double>& out) {
    FixedTimeSubproblem sp;
    sp.q = q;
    sp.group_cap = group_cap;
    sp.start = start;
    sp.lo.resize(q.size());
    sp.hi.resize(q.size());

    auto feasible_at = [&](double t) { return boxes_at(t, sp.lo, sp.hi); };

    if (!(t_hi > t_lo)) t_hi = t_lo;
    if (!feasible_at(t_lo)) {
        double bad = t_lo, good = t_hi;
        if (!feasible_at(good)) {  // nothing works; keep the start untouched
            out = start;
            return;
        }
        for (int i = 0; i < 100 && good - bad > 1e-12 * std::max(1.0, good); ++i) {
            const double mid = 0.5 * (bad + good);
            (feasible_at(mid) ? good : bad) = mid;
        }
        t_lo = good;
    }

    std::vector<double> scratch;
    auto g = [&](double t) {
        if (!feasible_at(t)) return kInf;
        sp.start = scratch.empty() ? start : scratch;
        const double v = solve_fixed_time(sp, cfg.vartheta, cfg.inner_tol, cfg.inner_max_iters, scratch);
        return hover_power_w * t + v;
    };
    const double t_star = golden_minimize(g, t_lo, t_hi);
    if (!feasible_at(t_star)) {
        out = start;
        return;
    }
    sp.start = start;
    solve_fixed_time(sp, cfg.vartheta, cfg.inner_tol, cfg.inner_max_iters, out);
}

// ---- offload-fraction block ----
inline std::vector<double> solve_offload_block(const SolveContext& ctx, const DecisionVector& x,
                                               const SolverConfig& cfg) {
    std::vector<double> result = x.l;

    for (std::size_t m = 0; m < ctx.M; ++m) {
        const auto& ids = ctx.s->clustering.members[m];
        if (ids.empty()) continue;
        const std::size_t K = ids.size();

        std::vector<MemberObjective> q(K);
        std::vector<double> lo(K), hi(K), slope(K), start(K);
        double t_lo = 0.0, t_hi = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t u = static_cast<std::size_t>(ids[i]);
            if (x.delta.row_sum(static_cast<int>(u)) == 0.0) {
                // no subchannel, nothing deliverable: hold the offload share
                q[i] = {0.0, 0.0, x.l[u]};
                lo[i] = hi[i] = std::clamp(x.l[u], 0.0, 1.0);
                slope[i] = 0.0;
                start[i] = lo[i];
                continue;
            }
            const double up_t = ctx.uplink_slope(x, u);
            const double phi = x.phi[u];
            const double fe = x.f_hz[u];
            const double edge_slope =
                (1.0 - phi) > 0.0 ? ((fe > 0.0) ? (1.0 - phi) * ctx.cycles[u] / fe : kInf) : 0.0;
            const double relay_slope =
                phi * ctx.input_bits[u] / ctx.relay_rate[m];

            const double e_local_slope =
                ctx.cycles[u] * ctx.s->energy.md_chip_k * ctx.md_cpu[u] * ctx.md_cpu[u];
            const double e_up_slope = ctx.md_tx[u] * up_t;
            const double e_edge_slope =
                (1.0 - phi) * ctx.cycles[u] * ctx.s->energy.uav_chip_k * fe * fe;
            const double e_relay_slope = phi * ctx.input_bits[u] *
                                         ctx.s->uavs[m].relay_tx_power_w / ctx.relay_rate[m];
            q[i].lin = -e_local_slope + e_up_slope + e_edge_slope + e_relay_slope;
            q[i].quad = 0.0;
            q[i].anchor = x.l[u];
            slope[i] = up_t + (std::isfinite(edge_slope) ? std::max(edge_slope, relay_slope) : kInf);

            lo[i] = std::clamp(1.0 - ctx.deadline[u] * ctx.md_cpu[u] / ctx.cycles[u], cfg.l_min, 1.0);
            double cap = 1.0;
            if (std::isfinite(edge_slope) && up_t + edge_slope > 0.0)
                cap = std::min(cap, ctx.deadline[u] / (up_t + edge_slope));
            else if (!std::isfinite(edge_slope))
                cap = 0.0;
            if (up_t + relay_slope > 0.0) cap = std::min(cap, ctx.deadline[u] / (up_t + relay_slope));
            hi[i] = cap;
            if (lo[i] > hi[i]) lo[i] = hi[i] = std::clamp(x.l[u], 0.0, 1.0);  // hold on collapse
            start[i] = std::clamp(x.l[u], lo[i], hi[i]);
            if (std::isfinite(slope[i])) {
                t_lo = std::max(t_lo, lo[i] * slope[i]);
                t_hi = std::max(t_hi, hi[i] * slope[i]);
            }
        }

        auto boxes_at = [&](double t, std::vector<double>& blo, std::vector<double>& bhi) {
            for (std::size_t i = 0; i < K; ++i) {
                blo[i] = lo[i];
                bhi[i] = std::isfinite(slope[i]) && slope[i] > 0.0 ? std::min(hi[i], t / slope[i])
                                                                   : hi[i];
                if (bhi[i] < blo[i] - 1e-15) return false;
                if (bhi[i] < blo[i]) bhi[i] = blo[i];
            }
            return true;
        };

        std::vector<double> sol;
        solve_cluster_epigraph(q, false, start, ctx.hover_p[m], t_lo, t_hi, boxes_at, cfg, sol);
        for (std::size_t i = 0; i < K; ++i) result[static_cast<std::size_t>(ids[i])] = sol[i];
    }
    return result;
}

// ---- CPU-share block (fractions of the owning UAV's capacity) ----
inline std::vector<double> solve_cpu_block(const SolveContext& ctx, const DecisionVector& x,
                                           const SolverConfig& cfg) {
    std::vector<double> result = x.f_hz;

    for (std::size_t m = 0; m < ctx.M; ++m) {
        const auto& ids = ctx.s->clustering.members[m];
        if (ids.empty()) continue;
        const std::size_t K = ids.size();
        const double cap_hz = ctx.s->uavs[m].max_cpu_hz;

        std::vector<MemberObjective> q(K);
        std::vector<double> load(K), up_time(K), t_relay(K), start(K), dl(K);
        double t_lo = 0.0, t_hi = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t u = static_cast<std::size_t>(ids[i]);
            load[i] = (1.0 - x.phi[u]) * x.l[u] * ctx.cycles[u];
            up_time[i] = x.l[u] * ctx.uplink_slope(x, u);
            t_relay[i] = x.phi[u] * x.l[u] * ctx.input_bits[u] / ctx.relay_rate[m];
            dl[i] = ctx.deadline[u];
            q[i].lin = 0.0;
            q[i].quad = load[i] * ctx.s->energy.uav_chip_k * cap_hz * cap_hz;
            q[i].anchor = x.f_hz[u] / cap_hz;
            start[i] = std::clamp(q[i].anchor, 0.0, 1.0);
            // smallest possible service: full capacity for the edge share
            double s_min = up_time[i] + t_relay[i];
            if (load[i] > 0.0) s_min = up_time[i] + std::max(t_relay[i], load[i] / cap_hz);
            t_lo = std::max(t_lo, s_min);
            t_hi = std::max(t_hi, dl[i]);
        }
        t_hi = std::max(t_hi, t_lo);

        auto boxes_at = [&](double t, std::vector<double>& blo, std::vector<double>& bhi) {
            double lo_sum = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                blo[i] = 0.0;
                bhi[i] = 1.0;
                if (load[i] > 0.0) {
                    const double slack = std::min(t, dl[i]) - up_time[i];
                    if (slack < t_relay[i] || slack <= 0.0) return false;
                    blo[i] = load[i] / (slack * cap_hz);
                    if (blo[i] > 1.0) return false;
                } else if (up_time[i] + t_relay[i] > t + 1e-12) {
                    return false;
                }
                lo_sum += blo[i];
            }
            return lo_sum <= 1.0 + 1e-12;
        };

        std::vector<double> sol;
        solve_cluster_epigraph(q, true, start, ctx.hover_p[m], t_lo, t_hi, boxes_at, cfg, sol);
        for (std::size_t i = 0; i < K; ++i)
            result[static_cast<std::size_t>(ids[i])] = sol[i] * cap_hz;
    }
    return result;
}

// ---- relay-fraction block ----
inline std::vector<double> solve_relay_block(const SolveContext& ctx, const DecisionVector& x,
                                             const SolverConfig& cfg) {
    std::vector<double> result = x.phi;

    for (std::size_t m = 0; m < ctx.M; ++m) {
        const auto& ids = ctx.s->clustering.members[m];
        if (ids.empty()) continue;
        const std::size_t K = ids.size();

        std::vector<MemberObjective> q(K);
        std::vector<double> lo(K), hi(K), edge_c(K), relay_c(K), up_time(K), start(K);
        double t_lo = 0.0, t_hi = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t u = static_cast<std::size_t>(ids[i]);
            const double lA = x.l[u] * ctx.cycles[u];
            const double lI = x.l[u] * ctx.input_bits[u];
            const double fe = x.f_hz[u];
            up_time[i] = x.l[u] * ctx.uplink_slope(x, u);
            edge_c[i] = lA > 0.0 ? (fe > 0.0 ? lA / fe : kInf) : 0.0;  // seconds at phi = 0
            relay_c[i] = lI / ctx.relay_rate[m];                       // seconds at phi = 1
            const double e_base = lA * ctx.s->energy.uav_chip_k * fe * fe;
            q[i].lin = -e_base + lI * ctx.s->uavs[m].relay_tx_power_w / ctx.relay_rate[m];
            q[i].quad = 0.0;
            q[i].anchor = x.phi[u];

            const double slack = ctx.deadline[u] - up_time[i];
            lo[i] = 0.0;
            hi[i] = 1.0;
            if (slack <= 0.0) {
                lo[i] = hi[i] = x.phi[u];
            } else {
                if (std::isinf(edge_c[i]))
                    lo[i] = 1.0;
                else if (edge_c[i] > 0.0)
                    lo[i] = std::max(0.0, 1.0 - slack / edge_c[i]);
                if (relay_c[i] > 0.0) hi[i] = std::min(1.0, slack / relay_c[i]);
                if (lo[i] > hi[i]) lo[i] = hi[i] = x.phi[u];
            }
            start[i] = std::clamp(x.phi[u], lo[i], hi[i]);

            // service over the box is V-shaped; min at the (clamped) crossover
            auto service = [&](double phi) {
                const double t_e = std::isinf(edge_c[i]) ? (phi < 1.0 ? kInf : 0.0)
                                                         : (1.0 - phi) * edge_c[i];
                return up_time[i] + std::max(t_e, phi * relay_c[i]);
            };
            double kink = 1.0;
            if (std::isfinite(edge_c[i]) && edge_c[i] + relay_c[i] > 0.0)
                kink = edge_c[i] / (edge_c[i] + relay_c[i]);
            const double phi_min_s = std::clamp(kink, lo[i], hi[i]);
            t_lo = std::max(t_lo, service(phi_min_s));
            t_hi = std::max(t_hi, std::max(service(lo[i]), service(hi[i])));
        }
        t_hi = std::max(t_hi, t_lo);

        auto boxes_at = [&](double t, std::vector<double>& blo, std::vector<double>& bhi) {
            for (std::size_t i = 0; i < K; ++i) {
                const double slack = t - up_time[i];
                double a = lo[i], b = hi[i];
                if (slack < -1e-15) return false;
                if (std::isinf(edge_c[i])) {
                    // edge side impossible: phi pinned at 1 by the static box
                } else if (edge_c[i] > 0.0) {
                    a = std::max(a, 1.0 - slack / edge_c[i]);
                }
                if (relay_c[i] > 0.0) b = std::min(b, slack / relay_c[i]);
                if (a > b + 1e-15) return false;
                blo[i] = a;
                bhi[i] = std::max(a, b);
            }
            return true;
        };

        std::vector<double> sol;
        solve_cluster_epigraph(q, false, start, ctx.hover_p[m], t_lo, t_hi, boxes_at, cfg, sol);
        for (std::size_t i = 0; i < K; ++i) result[static_cast<std::size_t>(ids[i])] = sol[i];
    }
    return result;
}

}  // namespace detail

// Eq.-(26)-style surrogate: the true objective with the candidate block
// installed plus the proximal distance to the anchor, measured on normalized
// block coordinates.
inline double surrogate_value(const Scenario& s, const DecisionVector& candidate,
                              const DecisionVector& anchor, Block block, double vartheta) {
    double d2 = 0.0;
    switch (block) {
        case Block::channel:
            for (std::size_t i = 0; i < candidate.delta.delta.size(); ++i) {
                const double d = candidate.delta.delta[i] - anchor.delta.delta[i];
                d2 += d * d;
            }
            break;
        case Block::offload:
            for (std::size_t u = 0; u < candidate.l.size(); ++u) {
                const double d = candidate.l[u] - anchor.l[u];
                d2 += d * d;
            }
            break;
        case Block::cpu: {
            const auto cluster_of = s.device_cluster_map();
            for (std::size_t u = 0; u < candidate.f_hz.size(); ++u) {
                const double cap = s.uavs[static_cast<std::size_t>(cluster_of[u])].max_cpu_hz;
                const double d = (candidate.f_hz[u] - anchor.f_hz[u]) / cap;
                d2 += d * d;
            }
            break;
        }
        case Block::relay:
            for (std::size_t u = 0; u < candidate.phi.size(); ++u) {
                const double d = candidate.phi[u] - anchor.phi[u];
                d2 += d * d;
            }
            break;
    }
    return evaluate(s, candidate).objective + 0.5 * vartheta * d2;
}

struct InitOptions {
    std::optional<double> locked_l;  // fix the offload fraction (offload-all, equal offloading)
    bool lock_phi_zero{false};       // relay disabled (UAV-only scheme)
    bool tolerate_local_deadline{false};
};

// Algorithm-1 step 1: deterministic feasible starting point. Channel rows are
// one-hot (strongest-gain devices pick the globally least-interfered channel
// still free in their cluster), l sits at its deadline-forced lower bound,
// f splits each UAV's capacity, and phi is the smallest grid value satisfying
// both offload-side deadline inequalities, then repaired.
inline DecisionVector initial_feasible_point(const Scenario& s, const SolverConfig& cfg,
                                             const InitOptions& opts = {}) {
    detail::SolveContext ctx(s);
    const std::size_t U = ctx.U;
    const int N = ctx.N;
    DecisionVector x = DecisionVector::zeros(s);

    // ---- channel assignment ----
    std::vector<std::size_t> order(U);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ctx.gain_own[a] > ctx.gain_own[b];
    });
    // interference accumulated at each UAV per subchannel as rows get assigned
    std::vector<std::vector<double>> interf(static_cast<std::size_t>(N),
                                            std::vector<double>(ctx.M, 0.0));
    std::vector<std::vector<bool>> used(ctx.M, std::vector<bool>(static_cast<std::size_t>(N), false));
    for (std::size_t u : order) {
        const std::size_t m = static_cast<std::size_t>(ctx.cluster_of[u]);
        int best = -1;
        double best_i = kInf;
        bool any_free = false;
        for (int n = 0; n < N; ++n)
            if (!used[m][static_cast<std::size_t>(n)]) any_free = true;
        for (int n = 0; n < N; ++n) {
            if (any_free && used[m][static_cast<std::size_t>(n)]) continue;
            const double i = interf[static_cast<std::size_t>(n)][m];
            if (i < best_i) {
                best_i = i;
                best = n;
            }
        }
        x.delta.at(static_cast<int>(u), best) = 1.0;
        used[m][static_cast<std::size_t>(best)] = true;
        for (std::size_t mo = 0; mo < ctx.M; ++mo)
            if (mo != m) interf[static_cast<std::size_t>(best)][mo] += ctx.rx[u][mo];
    }
    ctx.refresh_rates(x.delta);

    // ---- offload fraction ----
    for (std::size_t u = 0; u < U; ++u) {
        if (opts.locked_l) {
            x.l[u] = *opts.locked_l;
        } else {
            x.l[u] = std::clamp(1.0 - ctx.deadline[u] * ctx.md_cpu[u] / ctx.cycles[u], cfg.l_min, 1.0);
        }
    }

    // ---- CPU split: proportional to each member's starting offload load,
    // falling back to the equal split when nothing is forced. An equal split
    // against uneven forced loads inflates the loaded members' edge slopes,
    // which cages the first offload-block update into a visibly worse
    // coordinate-wise minimum. ----
    const auto& members = s.clustering.members;
    for (std::size_t m = 0; m < ctx.M; ++m) {
        if (members[m].empty()) continue;
        const double cap = s.uavs[m].max_cpu_hz;
        double total = 0.0;
        for (int id : members[m])
            total += x.l[static_cast<std::size_t>(id)] * ctx.cycles[static_cast<std::size_t>(id)];
        for (int id : members[m]) {
            const std::size_t u = static_cast<std::size_t>(id);
            x.f_hz[u] = total > 0.0 ? cap * (x.l[u] * ctx.cycles[u]) / total
                                    : cap / static_cast<double>(members[m].size());
        }
    }

    // ---- relay fraction: smallest 1e-3 grid value meeting both offload-side
    // inequalities, then a bounded repair loop. The grid is probed at the
    // device's full-offload level, not its (often tiny) starting l: probing at
    // l_min picks phi = 0, whose edge slope then chokes the offload block's
    // deadline box and wedges the whole solve at the starting corner. Any phi
    // feasible at the probe level is feasible at the smaller starting l since
    // the offload-side delays are linear in l. ----
    auto offload_sides_ok = [&](std::size_t u, double phi, double l) {
        const double up = l * ctx.uplink_slope(x, u);
        const double edge_cycles = (1.0 - phi) * l * ctx.cycles[u];
        const double t_edge =
            edge_cycles > 0.0 ? (x.f_hz[u] > 0.0 ? edge_cycles / x.f_hz[u] : kInf) : 0.0;
        const double t_relay = phi * l * ctx.input_bits[u] /
                               ctx.relay_rate[static_cast<std::size_t>(ctx.cluster_of[u])];
        return up + t_edge <= ctx.deadline[u] && up + t_relay <= ctx.deadline[u];
    };
    auto smallest_feasible_phi = [&](std::size_t u, double l, double& out) {
        for (int step = 0; step <= 1000; ++step) {
            const double phi = static_cast<double>(step) * 1e-3;
            if (offload_sides_ok(u, phi, l)) {
                out = phi;
                return true;
            }
        }
        return false;
    };
    for (std::size_t u = 0; u < U; ++u) {
        if (opts.lock_phi_zero) {
            x.phi[u] = 0.0;
            continue;
        }
        double probe = x.l[u];
        if (!opts.locked_l) {
            const double up1 = ctx.uplink_slope(x, u);
            const double relay1 =
                ctx.input_bits[u] / ctx.relay_rate[static_cast<std::size_t>(ctx.cluster_of[u])];
            if (up1 + relay1 > 0.0)
                probe = std::clamp(ctx.deadline[u] / (up1 + relay1), x.l[u], 1.0);
        }
        double smallest = 1.0;
        if (!smallest_feasible_phi(u, probe, smallest) &&
            !smallest_feasible_phi(u, x.l[u], smallest))
            smallest = 1.0;
        // prefer the service-balancing split (t_edge = t_relay) when it is
        // still deadline-feasible: the smallest feasible phi maximizes the
        // edge share and with it the member's service slope, which props up
        // the whole cluster's hover floor from the very first sweep
        double phi = smallest;
        if (x.f_hz[u] > 0.0) {
            const double scale = ctx.cycles[u] * ctx.relay_rate[static_cast<std::size_t>(ctx.cluster_of[u])] /
                                 ctx.input_bits[u];  // = O * R_m
            const double kink = scale / (scale + x.f_hz[u]);
            if (kink > smallest && offload_sides_ok(u, kink, probe)) phi = kink;
        }
        x.phi[u] = phi;
    }

    for (int pass = 0; pass < 64; ++pass) {
        bool changed = false;
        for (std::size_t u = 0; u < U; ++u) {
            const double up = x.l[u] * ctx.uplink_slope(x, u);
            const double slack = ctx.deadline[u] - up;
            if (slack < 0.0)
                throw Infeasible("device " + std::to_string(u) +
                                 ": uplink alone exceeds the deadline at the minimum offload fraction");
            if (offload_sides_ok(u, x.phi[u], x.l[u])) continue;
            changed = true;
            const double lA = x.l[u] * ctx.cycles[u];
            const double lI = x.l[u] * ctx.input_bits[u];
            const double rrate = ctx.relay_rate[static_cast<std::size_t>(ctx.cluster_of[u])];
            const double phi_hi = lI > 0.0 ? std::min(1.0, slack * rrate / lI) : 1.0;
            if (opts.lock_phi_zero) {
                const double need = lA / slack;  // CPU making the edge side tight
                const std::size_t m = static_cast<std::size_t>(ctx.cluster_of[u]);
                double others = 0.0;
                for (int id : members[m])
                    if (static_cast<std::size_t>(id) != u) others += x.f_hz[static_cast<std::size_t>(id)];
                if (others + need * (1.0 + 1e-9) > s.uavs[m].max_cpu_hz)
                    throw Infeasible("device " + std::to_string(u) +
                                     ": UAV CPU capacity cannot absorb the forced edge load");
                x.f_hz[u] = need * (1.0 + 1e-9);
                continue;
            }
            // smallest phi with a feasible edge side that still meets the relay side
            const double phi_lo =
                lA > 0.0 ? (x.f_hz[u] > 0.0 ? std::max(0.0, 1.0 - slack * x.f_hz[u] / lA) : 1.0) : 0.0;
            if (phi_lo <= phi_hi + 1e-12) {
                x.phi[u] = std::min(1.0, phi_lo * (1.0 + 1e-9) + 1e-15);
            } else if (phi_hi >= 1.0 - 1e-12 && offload_sides_ok(u, 1.0, x.l[u])) {
                x.phi[u] = 1.0;
            } else {
                throw Infeasible("device " + std::to_string(u) +
                                 ": no relay split satisfies the offload-side deadline");
            }
        }
        if (!changed) break;
    }

    const ConstraintResiduals res = residuals(s, x);
    if (!opts.tolerate_local_deadline && !res.feasible(1e-9))
        throw Infeasible("initial point violates a constraint by " + std::to_string(-res.min_residual()));
    if (opts.tolerate_local_deadline) {
        // only local-side deadline violations are tolerated; everything else must hold
        ConstraintResiduals strict = res;
        for (std::size_t u = 0; u < U; ++u) {
            const double up = x.l[u] * ctx.uplink_slope(x, u);
            if (!offload_sides_ok(u, x.phi[u], x.l[u]) || ctx.deadline[u] - up < 0.0)
                throw Infeasible("device " + std::to_string(u) + ": offload side infeasible");
            strict.deadline_s[u] = 0.0;
        }
        if (!strict.feasible(1e-9)) throw Infeasible("initial point violates a non-deadline constraint");
    }
    return x;
}

struct SolveOptions {
    BlockMask mask;
    std::optional<DecisionVector> warm_start;
};

namespace detail {

// candidate produced by one block minimization at the current iterate
inline DecisionVector block_candidate(Block b, const SolveContext& ctx, const DecisionVector& x,
                                      const SolverConfig& cfg) {
    DecisionVector candidate = x;
    switch (b) {
        case Block::channel: {
            DeltaBlock blk = build_delta_block(ctx, x, cfg.vartheta);
            BlockResult inner = solve_block(blk.problem, cfg.inner_tol, cfg.inner_max_iters);
            candidate.delta.delta.assign(inner.x.begin(), inner.x.end());
            break;
        }
        case Block::offload:
            candidate.l = solve_offload_block(ctx, x, cfg);
            break;
        case Block::cpu:
            candidate.f_hz = solve_cpu_block(ctx, x, cfg);
            break;
        case Block::relay:
            candidate.phi = solve_relay_block(ctx, x, cfg);
            break;
    }
    return candidate;
}

inline std::array<double, 4> block_gradient_norms(const SolveContext& ctx, const DecisionVector& x,
                                                  const SolverConfig& cfg, const BlockMask& mask);

}  // namespace detail

// Algorithm 1: repeated guarded block minimizations of the proximal surrogate
// until the relative objective change drops below epsilon, then threshold
// rounding, violation repair and a final feasibility polish of the continuous
// blocks on the binary assignment.
inline SolverResult bsum_solve(const Scenario& s, const SolverConfig& cfg,
                               const SolveOptions& options = {}) {
    {
        const auto violations = validate_scenario(s);
        if (!violations.empty()) throw Error("invalid scenario: " + violations.front());
    }
    detail::SolveContext ctx(s);

    DecisionVector x = options.warm_start ? *options.warm_start : initial_feasible_point(s, cfg);
    ctx.refresh_rates(x.delta);

    double current = evaluate(s, x).objective;
    SolverResult result;
    result.trace.push_back(current);
    const double tau = cfg.violation_weight < 0.0 ? 10.0 * current : cfg.violation_weight;

    auto run_block = [&](Block b, bool guarded) {
        DecisionVector candidate = detail::block_candidate(b, ctx, x, cfg);
        const double cand_obj = evaluate(s, candidate).objective;
        if (!std::isfinite(cand_obj)) return;
        if (guarded && cand_obj > current * (1.0 + 1e-12)) return;
        x = std::move(candidate);
        current = cand_obj;
        if (b == Block::channel) ctx.refresh_rates(x.delta);
    };

    // the epsilon rule alone can trip while a late-ordered block still has an
    // improving move queued behind it; accept termination only when no single
    // block can improve the surrogate by more than epsilon either
    auto block_stationary = [&] {
        for (int b = 0; b < 4; ++b) {
            if (!options.mask.active(static_cast<Block>(b))) continue;
            DecisionVector cand = detail::block_candidate(static_cast<Block>(b), ctx, x, cfg);
            const double val = surrogate_value(s, cand, x, static_cast<Block>(b), cfg.vartheta);
            if ((current - val) / std::max(1.0, std::fabs(current)) > cfg.epsilon) return false;
        }
        return true;
    };

    result.reason = TerminationReason::max_iterations;
    int sweeps = 0;
    while (sweeps < cfg.max_outer_iters) {
        ++sweeps;
        std::array<double, 4> norms{};
        if (cfg.rule == SelectionRule::gauss_southwell)
            norms = detail::block_gradient_norms(ctx, x, cfg, options.mask);
        const double before = current;
        for (Block b : select_blocks(cfg.rule, sweeps - 1, cfg.seed, norms)) {
            if (!options.mask.active(b)) continue;
            run_block(b, true);
        }
        result.trace.push_back(current);
        const double denom = std::fabs(before) > 0.0 ? std::fabs(before) : 1.0;
        if (std::fabs(before - current) / denom <= cfg.epsilon && block_stationary()) {
            result.reason = TerminationReason::converged;
            break;
        }
    }
    result.iterations = sweeps;
    result.relaxed_objective = current;

    // relax-and-round epilogue
    const ChannelAssignment relaxed = x.delta;
    ChannelAssignment binary = round_delta(relaxed, cfg.rounding_threshold);
    auto [violation, repaired] = violation_and_repair(binary, relaxed);
    result.delta_violation = violation;
    // a device whose row rounded to all zeros keeps its strongest relaxed channel
    for (int u = 0; u < repaired.num_devices; ++u) {
        if (repaired.row_sum(u) > 0.0) continue;
        int best = 0;
        double best_v = -1.0;
        for (int n = 0; n < repaired.num_channels; ++n)
            if (relaxed.at(u, n) > best_v) {
                best_v = relaxed.at(u, n);
                best = n;
            }
        repaired.at(u, best) = 1.0;
    }
    x.delta = repaired;
    ctx.refresh_rates(x.delta);
    current = evaluate(s, x).objective;

    // unguarded continuous polish restores deadline feasibility on the binary
    // assignment; candidates are still rejected if they evaluate non-finite
    for (Block b : {Block::offload, Block::cpu, Block::relay}) {
        if (!options.mask.active(b)) continue;
        run_block(b, false);
    }

    // greedy channel release: devices better served by computing everything
    // themselves hand their subchannels back, so no UAV hovers for the
    // strict-positivity leak (l > 0 is a formality at l_min). Micro-fills are
    // individually profitable against the shared hover floor, so unforced
    // members are first released cluster-wise, then one by one.
    if (options.mask.offload) {
        auto release_into = [&](DecisionVector& candidate, std::size_t u) {
            for (int n = 0; n < ctx.N; ++n) candidate.delta.at(static_cast<int>(u), n) = 0.0;
            candidate.l[u] = cfg.l_min;
            candidate.phi[u] = 0.0;
            candidate.f_hz[u] = 0.0;
        };
        auto can_go_local = [&](std::size_t u) {
            return (1.0 - cfg.l_min) * ctx.cycles[u] / ctx.md_cpu[u] <= ctx.deadline[u];
        };
        auto try_accept = [&](DecisionVector&& candidate) {
            const double cand_obj = evaluate(s, candidate).objective;
            if (std::isfinite(cand_obj) && cand_obj <= current * (1.0 + 1e-12)) {
                x = std::move(candidate);
                current = cand_obj;
                ctx.refresh_rates(x.delta);
            }
        };
        for (std::size_t m = 0; m < ctx.M; ++m) {
            DecisionVector candidate = x;
            bool changed = false;
            for (int id : s.clustering.members[m]) {
                const std::size_t u = static_cast<std::size_t>(id);
                if (x.delta.row_sum(id) == 0.0 || !can_go_local(u)) continue;
                release_into(candidate, u);
                changed = true;
            }
            if (changed) try_accept(std::move(candidate));
        }
        for (std::size_t u = 0; u < ctx.U; ++u) {
            if (x.delta.row_sum(static_cast<int>(u)) == 0.0 || !can_go_local(u)) continue;
            DecisionVector candidate = x;
            release_into(candidate, u);
            try_accept(std::move(candidate));
        }
    }

    result.mu = integrality_gap(result.relaxed_objective, tau, violation);
    result.decisions = x;
    result.breakdown = evaluate(s, x);
    result.objective = result.breakdown.objective;
    result.feasible = residuals(s, x).feasible(1e-9);
    return result;
}

namespace detail {

// Gauss-Southwell ranking: per-block projected-gradient norms of the smooth
// fixed-hover-time subproblems at the current iterate (hover times taken at
// their current values), plus the channel block's own metric.
inline std::array<double, 4> block_gradient_norms(const SolveContext& ctx, const DecisionVector& x,
                                                  const SolverConfig& cfg, const BlockMask& mask) {
    std::array<double, 4> norms{0.0, 0.0, 0.0, 0.0};
    if (mask.active(Block::channel)) {
        DeltaBlock blk = build_delta_block(ctx, x, cfg.vartheta);
        std::vector<double> g(blk.problem.start.size());
        blk.problem.gradient(blk.problem.start, g);
        norms[0] = projected_gradient_norm(blk.problem.start, g, blk.problem.set);
    }
    // For the continuous blocks an exact cheap proxy: distance moved by one
    // guarded block solve, measured in normalized coordinates.
    auto moved = [&](Block b) {
        DecisionVector cand = block_candidate(b, ctx, x, cfg);
        double d2 = 0.0;
        if (b == Block::offload)
            for (std::size_t u = 0; u < x.l.size(); ++u) {
                const double d = cand.l[u] - x.l[u];
                d2 += d * d;
            }
        else if (b == Block::relay)
            for (std::size_t u = 0; u < x.phi.size(); ++u) {
                const double d = cand.phi[u] - x.phi[u];
                d2 += d * d;
            }
        else
            for (std::size_t u = 0; u < x.f_hz.size(); ++u) {
                const double cap =
                    ctx.s->uavs[static_cast<std::size_t>(ctx.cluster_of[u])].max_cpu_hz;
                const double d = (cand.f_hz[u] - x.f_hz[u]) / cap;
                d2 += d * d;
            }
        return std::sqrt(d2);
    };
    if (mask.active(Block::offload)) norms[1] = moved(Block::offload);
    if (mask.active(Block::cpu)) norms[2] = moved(Block::cpu);
    if (mask.active(Block::relay)) norms[3] = moved(Block::relay);
    return norms;
}

}  // namespace detail

// Diagnostic used by the stationarity tests: the largest relative improvement
// (in surrogate value, prox included) any single active block still achieves
// when re-solved at x.
inline double best_block_improvement(const Scenario& s, const SolverConfig& cfg,
                                     const DecisionVector& x, const BlockMask& mask = {}) {
    detail::SolveContext ctx(s);
    ctx.refresh_rates(x.delta);
    const double at_x = evaluate(s, x).objective;
    double best = 0.0;
    for (int b = 0; b < 4; ++b) {
        if (!mask.active(static_cast<Block>(b))) continue;
        DecisionVector cand = detail::block_candidate(static_cast<Block>(b), ctx, x, cfg);
        const double val = surrogate_value(s, cand, x, static_cast<Block>(b), cfg.vartheta);
        best = std::max(best, (at_x - val) / std::max(1.0, std::fabs(at_x)));
    }
    return best;
}

}  // namespace uavmec

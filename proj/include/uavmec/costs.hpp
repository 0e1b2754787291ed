#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "uavmec/common.hpp"
#include "uavmec/radio.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

// The four optimization blocks: subchannel assignment, offload fraction,
// UAV CPU share (Hz) and relay fraction, all indexed by global device id.
struct DecisionVector {
    ChannelAssignment delta;
    std::vector<double> l;     // offload fraction, (0, 1]
    std::vector<double> f_hz;  // UAV CPU share
    std::vector<double> phi;   // relay fraction, [0, 1]

    static DecisionVector zeros(const Scenario& s) {
        DecisionVector x;
        x.delta = ChannelAssignment(static_cast<int>(s.num_devices()), s.radio.num_subchannels);
        x.l.assign(s.num_devices(), 0.0);
        x.f_hz.assign(s.num_devices(), 0.0);
        x.phi.assign(s.num_devices(), 0.0);
        return x;
    }

    friend bool operator==(const DecisionVector&, const DecisionVector&) = default;
};

struct MdCosts {
    double t_local{0.0}, e_local{0.0};
    std::vector<double> t_off_n;      // per-subchannel uplink delay
    double uplink_time{0.0};          // delta-weighted sum of t_off_n
    double e_off{0.0};                // delta-weighted uplink energy
    double t_edge{0.0}, e_edge{0.0};
    double t_relay{0.0}, e_relay{0.0};
    double t_total{0.0};
    double e_total{0.0};              // e_local + e_off
};

struct UavCosts {
    double t_hov{0.0};
    double p_hov{0.0};
    double e_hov{0.0};
    double e_total{0.0};  // hover + sum of member edge/relay energies
};

struct CostBreakdown {
    std::vector<MdCosts> md;
    std::vector<UavCosts> uav;
    double objective{0.0};
};

// Feasibility slack of every constraint family; a point is feasible iff all
// entries are nonnegative. The scale vectors carry each constraint's natural
// magnitude (seconds of deadline, Hz of capacity) so tolerance checks stay
// meaningful across units.
struct ConstraintResiduals {
    std::vector<double> deadline_s;  // per MD: T - t_total
    std::vector<double> cpu_hz;      // per UAV: f^e_m - sum of member shares
    std::vector<double> row_sum;     // per MD: 1 - sum_n delta
    double box_delta{0.0};           // min slack of 0 <= delta <= 1
    double box_l{0.0};
    double box_f{0.0};               // min of f >= 0
    double box_phi{0.0};
    std::vector<double> deadline_scale;
    std::vector<double> cpu_scale;

    double min_residual() const {
        double m = std::min({box_delta, box_l, box_f, box_phi});
        for (double r : deadline_s) m = std::min(m, r);
        for (double r : cpu_hz) m = std::min(m, r);
        for (double r : row_sum) m = std::min(m, r);
        return m;
    }

    // most-violated constraint relative to its own scale
    double min_normalized_residual() const {
        double m = std::min({box_delta, box_l, box_f, box_phi});
        for (std::size_t u = 0; u < deadline_s.size(); ++u)
            m = std::min(m, deadline_s[u] / std::max(1.0, deadline_scale.empty() ? 1.0 : deadline_scale[u]));
        for (std::size_t i = 0; i < cpu_hz.size(); ++i)
            m = std::min(m, cpu_hz[i] / std::max(1.0, cpu_scale.empty() ? 1.0 : cpu_scale[i]));
        for (double r : row_sum) m = std::min(m, r);
        return m;
    }
    bool feasible(double tol = 0.0) const { return min_normalized_residual() >= -tol; }
};

// ---- per-term costs (Eqs. of the computation model) ----

// Local computing share of the task: delay and chip energy.
inline std::pair<double, double> local_cost(const MobileDevice& dev, double l, double chip_k) {
    const double cycles = (1.0 - l) * dev.task.cycles();
    if (cycles == 0.0) return {0.0, 0.0};
    return {cycles / dev.local_cpu_hz, cycles * chip_k * dev.local_cpu_hz * dev.local_cpu_hz};
}

// Uplink transmission of the offloaded bits over one subchannel.
inline std::pair<double, double> uplink_cost(const MobileDevice& dev, double l, double rate_bps) {
    const double bits = l * dev.task.input_bits;
    if (bits == 0.0) return {0.0, 0.0};
    if (!(rate_bps > 0.0)) throw ZeroRateWithLoad("uplink of device " + std::to_string(dev.id));
    const double t = bits / rate_bps;
    return {t, dev.uplink_tx_power_w * t};
}

// Edge execution of the non-relayed offloaded share on the UAV's CPU slice.
inline std::pair<double, double> uav_compute_cost(const MobileDevice& dev, double l, double phi,
                                                  double f_share_hz, double uav_chip_k) {
    const double cycles = (1.0 - phi) * l * dev.task.cycles();
    if (cycles == 0.0) return {0.0, 0.0};
    if (!(f_share_hz > 0.0)) throw ZeroCpuWithLoad("edge compute of device " + std::to_string(dev.id));
    return {cycles / f_share_hz, cycles * uav_chip_k * f_share_hz * f_share_hz};
}

// Relaying the remaining share to the TBS.
inline std::pair<double, double> relay_cost(const MobileDevice& dev, double l, double phi,
                                            double relay_rate_bps, double relay_tx_power_w) {
    const double bits = phi * l * dev.task.input_bits;
    if (bits == 0.0) return {0.0, 0.0};
    if (!(relay_rate_bps > 0.0)) throw ZeroRateWithLoad("relay of device " + std::to_string(dev.id));
    const double t = bits / relay_rate_bps;
    return {t, relay_tx_power_w * t};
}

// Hover power from thrust, rotor geometry and air density.
inline double hover_power(const Uav& uav, double air_density) {
    const double zeta = uav.thrust_n;
    const double disk = 0.5 * M_PI * static_cast<double>(uav.rotor_count) *
                        uav.rotor_diameter_m * uav.rotor_diameter_m * air_density;
    return zeta * std::sqrt(zeta) / (uav.power_efficiency * std::sqrt(disk));
}

struct MemberServiceTime {
    double t_off_assigned{0.0};  // delta-weighted uplink time
    double t_edge{0.0};
    double t_relay{0.0};
};

// The UAV hovers until its slowest member is fully served.
inline std::tuple<double, double, double> hover_cost(const Uav& uav, double air_density,
                                                     const std::vector<MemberServiceTime>& members) {
    double t_hov = 0.0;
    for (const auto& m : members)
        t_hov = std::max(t_hov, m.t_off_assigned + std::max(m.t_edge, m.t_relay));
    const double p = hover_power(uav, air_density);
    return {t_hov, p, p * t_hov};
}

namespace detail {

// load/capacity with the zero-load convention; positive load over zero
// capacity is an unserviceable (infinite) delay rather than an exception so
// that evaluate/residuals stay total functions.
inline double safe_time(double load, double capacity) {
    if (load == 0.0) return 0.0;
    if (!(capacity > 0.0)) return kInf;
    return load / capacity;
}

}  // namespace detail

// Full accounting of one decision point: per-device delays/energies, per-UAV
// hover, and the system objective (total MD + UAV energy).
inline CostBreakdown evaluate(const Scenario& s, const DecisionVector& x) {
    const std::size_t U = s.num_devices();
    const std::size_t M = s.num_uavs();
    const int N = s.radio.num_subchannels;
    if (x.l.size() != U || x.phi.size() != U || x.f_hz.size() != U ||
        x.delta.num_devices != static_cast<int>(U) || x.delta.num_channels != N)
        throw DimensionMismatch("decision vector does not match scenario dimensions");

    const std::vector<int> cluster_of = s.device_cluster_map();
    const auto rx = received_power_table(s);
    const auto rates = uplink_rates(s, x.delta, rx, cluster_of);

    CostBreakdown out;
    out.md.resize(U);
    out.uav.resize(M);

    std::vector<std::vector<MemberServiceTime>> service(M);
    for (std::size_t u = 0; u < U; ++u) {
        const MobileDevice& dev = s.devices[u];
        const int m = cluster_of[u];
        MdCosts& c = out.md[u];

        const double local_cycles = (1.0 - x.l[u]) * dev.task.cycles();
        c.t_local = detail::safe_time(local_cycles, dev.local_cpu_hz);
        c.e_local = local_cycles * s.energy.md_chip_k * dev.local_cpu_hz * dev.local_cpu_hz;

        c.t_off_n.assign(static_cast<std::size_t>(N), 0.0);
        const double off_bits = x.l[u] * dev.task.input_bits;
        for (int n = 0; n < N; ++n) {
            const double r = rates[u * static_cast<std::size_t>(N) + static_cast<std::size_t>(n)];
            const double t = detail::safe_time(off_bits, r);
            c.t_off_n[static_cast<std::size_t>(n)] = t;
            const double w = x.delta.at(static_cast<int>(u), n);
            c.uplink_time += w * t;
            c.e_off += w * dev.uplink_tx_power_w * t;
        }

        const double edge_cycles = (1.0 - x.phi[u]) * x.l[u] * dev.task.cycles();
        c.t_edge = detail::safe_time(edge_cycles, x.f_hz[u]);
        c.e_edge = edge_cycles * s.energy.uav_chip_k * x.f_hz[u] * x.f_hz[u];

        const double relay_bits = x.phi[u] * x.l[u] * dev.task.input_bits;
        const double relay_rate = rate_uav_tbs(s, m);
        c.t_relay = detail::safe_time(relay_bits, relay_rate);
        c.e_relay = s.uavs[static_cast<std::size_t>(m)].relay_tx_power_w * c.t_relay;

        // a device holding no subchannel delivers nothing: the UAV neither
        // waits for it nor extends its completion beyond the local side
        const bool delivers = x.delta.row_sum(static_cast<int>(u)) > 0.0;
        c.t_total = delivers ? std::max(c.t_local, c.uplink_time + std::max(c.t_edge, c.t_relay))
                             : c.t_local;
        c.e_total = c.e_local + c.e_off;

        if (delivers) service[static_cast<std::size_t>(m)].push_back({c.uplink_time, c.t_edge, c.t_relay});
    }

    double objective = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        UavCosts& uc = out.uav[m];
        auto [t_hov, p_hov, e_hov] = hover_cost(s.uavs[m], s.energy.air_density, service[m]);
        uc.t_hov = t_hov;
        uc.p_hov = p_hov;
        uc.e_hov = e_hov;
        uc.e_total = e_hov;
        for (int id : s.clustering.members[m])
            uc.e_total += out.md[static_cast<std::size_t>(id)].e_edge +
                          out.md[static_cast<std::size_t>(id)].e_relay;
        objective += uc.e_total;
    }
    for (const auto& c : out.md) objective += c.e_total;
    out.objective = objective;
    return out;
}

inline ConstraintResiduals residuals(const Scenario& s, const DecisionVector& x) {
    const CostBreakdown costs = evaluate(s, x);
    const std::size_t U = s.num_devices();
    const std::size_t M = s.num_uavs();

    ConstraintResiduals r;
    r.deadline_s.resize(U);
    r.deadline_scale.resize(U);
    for (std::size_t u = 0; u < U; ++u) {
        r.deadline_s[u] = s.devices[u].task.deadline_s - costs.md[u].t_total;
        r.deadline_scale[u] = s.devices[u].task.deadline_s;
    }

    r.cpu_hz.resize(M);
    r.cpu_scale.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
        double used = 0.0;
        for (int id : s.clustering.members[m]) used += x.f_hz[static_cast<std::size_t>(id)];
        r.cpu_hz[m] = s.uavs[m].max_cpu_hz - used;
        r.cpu_scale[m] = s.uavs[m].max_cpu_hz;
    }

    r.row_sum.resize(U);
    for (std::size_t u = 0; u < U; ++u) r.row_sum[u] = 1.0 - x.delta.row_sum(static_cast<int>(u));

    r.box_delta = kInf;
    for (double d : x.delta.delta) r.box_delta = std::min({r.box_delta, d, 1.0 - d});
    r.box_l = kInf;
    for (double v : x.l) r.box_l = std::min({r.box_l, v, 1.0 - v});
    r.box_f = kInf;
    for (double v : x.f_hz) r.box_f = std::min(r.box_f, v);
    r.box_phi = kInf;
    for (double v : x.phi) r.box_phi = std::min({r.box_phi, v, 1.0 - v});
    return r;
}

// Offloaded and relayed bit totals; the quantities the experiment CSVs track.
inline double total_offloaded_bits(const Scenario& s, const DecisionVector& x) {
    double bits = 0.0;
    for (std::size_t u = 0; u < s.num_devices(); ++u) bits += x.l[u] * s.devices[u].task.input_bits;
    return bits;
}

inline double total_relayed_bits(const Scenario& s, const DecisionVector& x) {
    double bits = 0.0;
    for (std::size_t u = 0; u < s.num_devices(); ++u)
        bits += x.phi[u] * x.l[u] * s.devices[u].task.input_bits;
    return bits;
}

}  // namespace uavmec

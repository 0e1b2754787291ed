#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "uavmec/common.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

struct LinkGain {
    double gain{0.0};  // linear, dimensionless
};

// Subchannel assignment, row-major [device * N + channel]. Entries live in
// [0,1] while relaxed and in {0,1} once rounded; a row sum may exceed 1 only
// transiently (by at most the reported violation) before repair.
struct ChannelAssignment {
    int num_devices{0};
    int num_channels{0};
    std::vector<double> delta;

    ChannelAssignment() = default;
    ChannelAssignment(int devices, int channels)
        : num_devices(devices), num_channels(channels),
          delta(static_cast<std::size_t>(devices) * static_cast<std::size_t>(channels), 0.0) {}

    double at(int u, int n) const { return delta[idx(u, n)]; }
    double& at(int u, int n) { return delta[idx(u, n)]; }

    double row_sum(int u) const {
        double s = 0.0;
        for (int n = 0; n < num_channels; ++n) s += at(u, n);
        return s;
    }

    bool is_binary(double tol = 0.0) const {
        for (double d : delta)
            if (std::fabs(d) > tol && std::fabs(d - 1.0) > tol) return false;
        return true;
    }

    std::size_t idx(int u, int n) const {
        return static_cast<std::size_t>(u) * static_cast<std::size_t>(num_channels) +
               static_cast<std::size_t>(n);
    }

    friend bool operator==(const ChannelAssignment&, const ChannelAssignment&) = default;
};

// Free-space path loss: gain at 1 m over d^alpha.
inline LinkGain channel_gain(const RadioConfig& radio, double distance_m) {
    if (!(distance_m > 0.0))
        throw DegenerateGeometry("channel_gain needs a positive distance, got " +
                                 std::to_string(distance_m));
    return LinkGain{radio.ref_gain / std::pow(distance_m, radio.pathloss_exp)};
}

// Uplink SINR for device u served by UAV m on subchannel n. Only devices of
// other clusters interfere (OFDMA keeps a cluster internally orthogonal);
// relaxed delta values weight the interference fractionally.
inline double sinr_md_uav(const Scenario& s, const ChannelAssignment& delta, int u, int m, int n) {
    const MobileDevice& dev = s.devices[static_cast<std::size_t>(u)];
    const Uav& uav = s.uavs[static_cast<std::size_t>(m)];
    const double signal =
        dev.uplink_tx_power_w * channel_gain(s.radio, distance(dev.position, uav.position)).gain;

    double interference = 0.0;
    for (std::size_t mo = 0; mo < s.clustering.members.size(); ++mo) {
        if (static_cast<int>(mo) == m) continue;
        for (int other : s.clustering.members[mo]) {
            if (other == u) continue;
            const MobileDevice& od = s.devices[static_cast<std::size_t>(other)];
            const double w = delta.at(other, n);
            if (w == 0.0) continue;
            interference +=
                w * od.uplink_tx_power_w * channel_gain(s.radio, distance(od.position, uav.position)).gain;
        }
    }
    return signal / (interference + s.radio.noise_power_w);
}

inline double rate_md_uav(const RadioConfig& radio, double sinr) {
    return radio.subchannel_bw_hz * std::log2(1.0 + sinr);
}

// UAV -> TBS link; the relay band is split evenly across the M UAVs.
inline double rate_uav_tbs(const Scenario& s, int m) {
    const Uav& uav = s.uavs[static_cast<std::size_t>(m)];
    const double beta = s.radio.relay_total_bw_hz / static_cast<double>(s.num_uavs());
    const double gain = channel_gain(s.radio, distance(uav.position, s.tbs_position)).gain;
    const double snr = uav.relay_tx_power_w * gain / s.radio.noise_relay_w;
    return beta * std::log2(1.0 + snr);
}

// Received power from every device at every UAV: rx[u][m] = P_u * h(u -> UAV m).
// Shared by the cost evaluator and the solver's rate refresh.
inline std::vector<std::vector<double>> received_power_table(const Scenario& s) {
    std::vector<std::vector<double>> rx(s.num_devices(), std::vector<double>(s.num_uavs(), 0.0));
    for (std::size_t u = 0; u < s.num_devices(); ++u)
        for (std::size_t m = 0; m < s.num_uavs(); ++m)
            rx[u][m] = s.devices[u].uplink_tx_power_w *
                       channel_gain(s.radio, distance(s.devices[u].position, s.uavs[m].position)).gain;
    return rx;
}

// Achievable uplink rate of every (device, subchannel) pair under `delta`,
// row-major like the assignment itself.
inline std::vector<double> uplink_rates(const Scenario& s, const ChannelAssignment& delta,
                                        const std::vector<std::vector<double>>& rx,
                                        const std::vector<int>& cluster_of) {
    const int N = s.radio.num_subchannels;
    const std::size_t M = s.num_uavs();
    // interference + noise seen at UAV m on channel n
    std::vector<std::vector<double>> denom(M, std::vector<double>(static_cast<std::size_t>(N),
                                                                  s.radio.noise_power_w));
    for (std::size_t u = 0; u < s.num_devices(); ++u) {
        for (int n = 0; n < N; ++n) {
            const double w = delta.at(static_cast<int>(u), n);
            if (w == 0.0) continue;
            for (std::size_t m = 0; m < M; ++m)
                if (cluster_of[u] != static_cast<int>(m)) denom[m][static_cast<std::size_t>(n)] += w * rx[u][m];
        }
    }
    std::vector<double> rates(s.num_devices() * static_cast<std::size_t>(N), 0.0);
    for (std::size_t u = 0; u < s.num_devices(); ++u) {
        const int m = cluster_of[u];
        for (int n = 0; n < N; ++n) {
            const double sinr = rx[u][static_cast<std::size_t>(m)] / denom[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
            rates[u * static_cast<std::size_t>(N) + static_cast<std::size_t>(n)] = rate_md_uav(s.radio, sinr);
        }
    }
    return rates;
}

inline std::vector<double> uplink_rates(const Scenario& s, const ChannelAssignment& delta) {
    return uplink_rates(s, delta, received_power_table(s), s.device_cluster_map());
}

}  // namespace uavmec

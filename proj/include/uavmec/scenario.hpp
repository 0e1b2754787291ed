#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "uavmec/common.hpp"
#include "uavmec/geometry.hpp"

namespace uavmec {

// A divisible computing task: total input bits, CPU cycles needed per bit,
// and the completion deadline.
struct TaskSpec {
    double input_bits{0.0};
    double cycles_per_bit{0.0};
    double deadline_s{0.0};

    double cycles() const { return input_bits * cycles_per_bit; }
    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct MobileDevice {
    int id{0};
    Position3 position;  // z = 0
    TaskSpec task;
    double local_cpu_hz{0.0};
    double uplink_tx_power_w{0.0};  // same transmit power on any subchannel

    friend bool operator==(const MobileDevice&, const MobileDevice&) = default;
};

struct Uav {
    int id{0};
    Position3 position;  // z = hover altitude
    double max_cpu_hz{0.0};
    double relay_tx_power_w{0.0};
    double power_efficiency{0.0};  // (0, 1]
    double thrust_n{0.0};
    int rotor_count{0};
    double rotor_diameter_m{0.0};

    friend bool operator==(const Uav&, const Uav&) = default;
};

struct RadioConfig {
    double ref_gain{1e-5};          // linear gain at 1 m (-50 dB)
    double pathloss_exp{2.0};
    double noise_power_w{1e-20};    // per subchannel (-170 dBm)
    double noise_relay_w{1e-20};    // per UAV->TBS link; differs under the per-Hz reading
    double subchannel_bw_hz{180e3};
    int num_subchannels{30};        // default covers one device per subchannel
    double relay_total_bw_hz{20e6};

    friend bool operator==(const RadioConfig&, const RadioConfig&) = default;
};

struct EnergyConfig {
    double md_chip_k{1e-28};
    double uav_chip_k{1e-28};
    double air_density{1.225};  // kg/m^3

    friend bool operator==(const EnergyConfig&, const EnergyConfig&) = default;
};

// Device-to-UAV association. members[m] lists MD ids served by UAV m;
// lists are disjoint and jointly cover every device.
struct Clustering {
    std::vector<std::vector<int>> members;

    friend bool operator==(const Clustering&, const Clustering&) = default;
};

struct Scenario {
    std::vector<MobileDevice> devices;
    std::vector<Uav> uavs;
    Position3 tbs_position;
    RadioConfig radio;
    EnergyConfig energy;
    Clustering clustering;

    std::size_t num_devices() const { return devices.size(); }
    std::size_t num_uavs() const { return uavs.size(); }

    // cluster index per device id; -1 if unassigned (invalid scenario)
    std::vector<int> device_cluster_map() const {
        std::vector<int> map(devices.size(), -1);
        for (std::size_t m = 0; m < clustering.members.size(); ++m)
            for (int id : clustering.members[m])
                if (id >= 0 && static_cast<std::size_t>(id) < map.size()) map[id] = static_cast<int>(m);
        return map;
    }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Range {
    double min{0.0};
    double max{0.0};

    bool valid() const { return min <= max; }
    friend bool operator==(const Range&, const Range&) = default;
};

struct GenParams {
    double area_size_m{300.0};
    int num_devices{30};
    int num_uavs{5};
    double uav_altitude_m{150.0};

    Range input_bits{2e8, 7e8};
    double cycles_per_bit{1000.0};
    Range deadline_s{175.0, 275.0};
    Range md_cpu_hz{0.5e9, 3e9};  // "rescaled" preset; Table-II-verbatim preset uses MHz
    double md_tx_power_w{1e-3};

    Range uav_cpu_hz{1.2e9, 2e9};
    double uav_tx_power_w{1.0};
    double uav_power_efficiency{0.7};
    double uav_thrust_n{30.0};
    int uav_rotor_count{4};
    double uav_rotor_diameter_m{0.254};

    RadioConfig radio;
    EnergyConfig energy;
    Position3 tbs_position{0.0, 0.0, 0.0};

    int kmeans_max_iters{100};
};

struct KmeansResult {
    Clustering clustering;
    std::vector<Position3> centroids;      // z = 0
    std::vector<double> objective_trace;   // squared-deviation objective after each assignment
    int iterations{0};
};

namespace detail {

// nearest centroid in the ground plane, ties to the lowest centroid index
inline std::size_t nearest_centroid(const Position3& p, const std::vector<Position3>& centroids) {
    std::size_t best = 0;
    double best_d = squared_distance_2d(p, centroids[0]);
    for (std::size_t i = 1; i < centroids.size(); ++i) {
        const double d = squared_distance_2d(p, centroids[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

inline double kmeans_objective(const std::vector<Position3>& pts,
                               const std::vector<std::size_t>& assign,
                               const std::vector<Position3>& centroids) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        total += squared_distance_2d(pts[i], centroids[assign[i]]);
    return total;
}

}  // namespace detail

// Lloyd's algorithm on ground-plane coordinates. Initial centroids are M
// distinct device positions sampled without replacement; an emptied cluster
// is reseeded at the point farthest from its nearest centroid.
inline KmeansResult kmeans_associate(const std::vector<Position3>& md_positions,
                                     int num_clusters,
                                     std::uint64_t seed,
                                     int max_iters = 100) {
    const std::size_t n = md_positions.size();
    if (num_clusters <= 0 || static_cast<std::size_t>(num_clusters) > n)
        throw TooFewPoints("k-means needs at least " + std::to_string(num_clusters) +
                           " points, got " + std::to_string(n));
    if (max_iters < 1) throw InvalidRange("kmeans max_iters must be >= 1");

    const std::size_t m = static_cast<std::size_t>(num_clusters);
    Rng rng(seed);

    std::vector<Position3> centroids(m);
    {
        const auto pick = rng.sample_without_replacement(n, m);
        for (std::size_t i = 0; i < m; ++i) {
            centroids[i] = md_positions[pick[i]];
            centroids[i].z = 0.0;
        }
    }

    std::vector<std::size_t> assign(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = detail::nearest_centroid(md_positions[i], centroids);

    KmeansResult result;
    result.objective_trace.push_back(detail::kmeans_objective(md_positions, assign, centroids));

    int iters = 0;
    while (iters < max_iters) {
        ++iters;
        // means update
        std::vector<double> sx(m, 0.0), sy(m, 0.0);
        std::vector<std::size_t> count(m, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sx[assign[i]] += md_positions[i].x;
            sy[assign[i]] += md_positions[i].y;
            ++count[assign[i]];
        }
        for (std::size_t c = 0; c < m; ++c) {
            if (count[c] > 0) {
                centroids[c].x = sx[c] / static_cast<double>(count[c]);
                centroids[c].y = sy[c] / static_cast<double>(count[c]);
            }
        }
        // reseed empty clusters at the point farthest from its nearest centroid
        for (std::size_t c = 0; c < m; ++c) {
            if (count[c] > 0) continue;
            std::size_t far_idx = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = squared_distance_2d(
                    md_positions[i], centroids[detail::nearest_centroid(md_positions[i], centroids)]);
                if (d > far_d) {
                    far_d = d;
                    far_idx = i;
                }
            }
            centroids[c] = md_positions[far_idx];
            centroids[c].z = 0.0;
        }

        std::vector<std::size_t> next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = detail::nearest_centroid(md_positions[i], centroids);
        result.objective_trace.push_back(detail::kmeans_objective(md_positions, next, centroids));
        if (next == assign) break;
        assign = next;
    }

    result.iterations = iters;
    result.centroids = centroids;
    result.clustering.members.assign(m, {});
    for (std::size_t i = 0; i < n; ++i)
        result.clustering.members[assign[i]].push_back(static_cast<int>(i));
    return result;
}

// World construction. Devices are placed uniformly in the square area with
// per-device attributes sampled from the configured ranges (order per device:
// x, y, input bits, deadline, CPU); UAVs hover over the final k-means
// centroids. Identical seeds give field-for-field identical scenarios.
inline Scenario generate_scenario(const GenParams& params, std::uint64_t seed) {
    if (params.num_devices < 1 || params.num_uavs < 1)
        throw EmptyScenario("need at least one device and one UAV (U=" +
                            std::to_string(params.num_devices) + ", M=" +
                            std::to_string(params.num_uavs) + ")");
    auto check = [](const Range& r, const char* name) {
        if (!r.valid()) throw InvalidRange(std::string(name) + ": min > max");
    };
    check(params.input_bits, "input_bits");
    check(params.deadline_s, "deadline_s");
    check(params.md_cpu_hz, "md_cpu_hz");
    check(params.uav_cpu_hz, "uav_cpu_hz");
    if (params.area_size_m <= 0.0) throw InvalidRange("area_size_m must be positive");

    Rng rng(seed);
    Scenario s;
    s.radio = params.radio;
    s.energy = params.energy;
    s.tbs_position = params.tbs_position;

    s.devices.resize(static_cast<std::size_t>(params.num_devices));
    for (int i = 0; i < params.num_devices; ++i) {
        MobileDevice& d = s.devices[static_cast<std::size_t>(i)];
        d.id = i;
        d.position = {rng.uniform(0.0, params.area_size_m), rng.uniform(0.0, params.area_size_m), 0.0};
        d.task.input_bits = rng.uniform(params.input_bits.min, params.input_bits.max);
        d.task.cycles_per_bit = params.cycles_per_bit;
        d.task.deadline_s = rng.uniform(params.deadline_s.min, params.deadline_s.max);
        d.local_cpu_hz = rng.uniform(params.md_cpu_hz.min, params.md_cpu_hz.max);
        d.uplink_tx_power_w = params.md_tx_power_w;
    }

    std::vector<Position3> positions;
    positions.reserve(s.devices.size());
    for (const auto& d : s.devices) positions.push_back(d.position);
    const KmeansResult km = kmeans_associate(positions, params.num_uavs, seed, params.kmeans_max_iters);
    s.clustering = km.clustering;

    s.uavs.resize(static_cast<std::size_t>(params.num_uavs));
    for (int m = 0; m < params.num_uavs; ++m) {
        Uav& u = s.uavs[static_cast<std::size_t>(m)];
        u.id = m;
        u.position = {km.centroids[static_cast<std::size_t>(m)].x,
                      km.centroids[static_cast<std::size_t>(m)].y, params.uav_altitude_m};
        u.max_cpu_hz = rng.uniform(params.uav_cpu_hz.min, params.uav_cpu_hz.max);
        u.relay_tx_power_w = params.uav_tx_power_w;
        u.power_efficiency = params.uav_power_efficiency;
        u.thrust_n = params.uav_thrust_n;
        u.rotor_count = params.uav_rotor_count;
        u.rotor_diameter_m = params.uav_rotor_diameter_m;
    }
    return s;
}

// Returns one human-readable string per broken invariant; empty means valid.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> v;
    auto bad = [&v](const std::string& msg) { v.push_back(msg); };

    if (s.devices.empty()) bad("scenario: no devices");
    if (s.uavs.empty()) bad("scenario: no UAVs");

    for (const auto& d : s.devices) {
        const std::string who = "device " + std::to_string(d.id);
        if (d.position.z < 0.0) bad(who + ": position z < 0");
        if (!(d.task.input_bits > 0.0)) bad(who + ": task input_bits must be > 0");
        if (!(d.task.cycles_per_bit > 0.0)) bad(who + ": task cycles_per_bit must be > 0");
        if (!(d.task.deadline_s > 0.0)) bad(who + ": task deadline_s must be > 0");
        if (!(d.local_cpu_hz > 0.0)) bad(who + ": local_cpu_hz must be > 0");
        if (!(d.uplink_tx_power_w > 0.0)) bad(who + ": uplink_tx_power_w must be > 0");
    }
    for (const auto& u : s.uavs) {
        const std::string who = "uav " + std::to_string(u.id);
        if (u.position.z < 0.0) bad(who + ": position z < 0");
        if (!(u.max_cpu_hz > 0.0)) bad(who + ": max_cpu_hz must be > 0");
        if (!(u.power_efficiency > 0.0 && u.power_efficiency <= 1.0))
            bad(who + ": power_efficiency outside (0, 1]");
        if (u.rotor_count < 1) bad(who + ": rotor_count must be >= 1");
        if (!(u.rotor_diameter_m > 0.0)) bad(who + ": rotor_diameter_m must be > 0");
        if (!(u.thrust_n > 0.0)) bad(who + ": thrust_n must be > 0");
    }
    if (s.tbs_position.z < 0.0) bad("tbs: position z < 0");

    const RadioConfig& r = s.radio;
    if (!(r.ref_gain > 0.0)) bad("radio: ref_gain must be > 0");
    if (!(r.pathloss_exp > 0.0)) bad("radio: pathloss_exp must be > 0");
    if (!(r.noise_power_w > 0.0)) bad("radio: noise_power_w must be > 0");
    if (!(r.noise_relay_w > 0.0)) bad("radio: noise_relay_w must be > 0");
    if (!(r.subchannel_bw_hz > 0.0)) bad("radio: subchannel_bw_hz must be > 0");
    if (r.num_subchannels < 1) bad("radio: num_subchannels must be >= 1");
    if (!(r.relay_total_bw_hz > 0.0)) bad("radio: relay_total_bw_hz must be > 0");

    if (!(s.energy.md_chip_k > 0.0)) bad("energy: md_chip_k must be > 0");
    if (!(s.energy.uav_chip_k > 0.0)) bad("energy: uav_chip_k must be > 0");
    if (!(s.energy.air_density > 0.0)) bad("energy: air_density must be > 0");

    if (s.clustering.members.size() != s.uavs.size())
        bad("clustering: expected one member list per UAV");
    std::vector<int> seen(s.devices.size(), 0);
    for (std::size_t m = 0; m < s.clustering.members.size(); ++m) {
        for (int id : s.clustering.members[m]) {
            if (id < 0 || static_cast<std::size_t>(id) >= s.devices.size()) {
                bad("clustering: uav " + std::to_string(m) + " references unknown device id " +
                    std::to_string(id));
                continue;
            }
            if (++seen[static_cast<std::size_t>(id)] > 1)
                bad("clustering: device " + std::to_string(id) + " appears in more than one cluster");
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i] == 0)
            bad("clustering: device " + std::to_string(i) + " missing (not collectively exhaustive)");

    return v;
}

}  // namespace uavmec

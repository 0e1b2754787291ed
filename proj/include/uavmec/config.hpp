#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "uavmec/bsum.hpp"
#include "uavmec/common.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

// Flat key=value configuration (UTF-8, one key per line, '#' comments).
// Unknown keys are hard errors so typos never silently fall back to defaults.
struct AppConfig {
    GenParams gen;
    SolverConfig solver;
    std::string preset{"rescaled"};           // "rescaled" | "table2"
    std::string n0_mode{"per_subchannel"};    // "per_subchannel" | "per_hz"
    double n0_value{1e-20};                   // watts, or W/Hz under per_hz
    std::set<std::string> keys_seen;

    bool has(const std::string& key) const { return keys_seen.count(key) > 0; }
};

namespace config_detail {

inline std::string trim(const std::string& in) {
    std::size_t a = 0, b = in.size();
    while (a < b && std::isspace(static_cast<unsigned char>(in[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(in[b - 1]))) --b;
    return in.substr(a, b - a);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse number '" + value + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw ConfigError("key '" + key + "': expected an integer");
    return i;
}

}  // namespace config_detail

inline SelectionRule rule_from_name(const std::string& name) {
    if (name == "cyclic") return SelectionRule::cyclic;
    if (name == "gs" || name == "gauss_southwell") return SelectionRule::gauss_southwell;
    if (name == "randomized") return SelectionRule::randomized;
    throw ConfigError("unknown selection rule '" + name + "'");
}

inline std::string rule_name(SelectionRule rule) {
    switch (rule) {
        case SelectionRule::cyclic: return "cyclic";
        case SelectionRule::gauss_southwell: return "gs";
        case SelectionRule::randomized: return "randomized";
    }
    return "cyclic";
}

// Derived values that depend on several keys: preset CPU ranges and the
// noise reading. Called once after all keys are read.
inline void finalize_config(AppConfig& cfg) {
    if (cfg.preset == "table2") {
        if (!cfg.has("md.cpu_hz_min")) cfg.gen.md_cpu_hz.min = 0.5e6;
        if (!cfg.has("md.cpu_hz_max")) cfg.gen.md_cpu_hz.max = 3e6;
    } else if (cfg.preset != "rescaled") {
        throw ConfigError("preset must be 'table2' or 'rescaled', got '" + cfg.preset + "'");
    }
    if (cfg.n0_mode == "per_subchannel") {
        cfg.gen.radio.noise_power_w = cfg.n0_value;
        cfg.gen.radio.noise_relay_w = cfg.n0_value;
    } else if (cfg.n0_mode == "per_hz") {
        cfg.gen.radio.noise_power_w = cfg.n0_value * cfg.gen.radio.subchannel_bw_hz;
        cfg.gen.radio.noise_relay_w =
            cfg.n0_value * cfg.gen.radio.relay_total_bw_hz / static_cast<double>(cfg.gen.num_uavs);
    } else {
        throw ConfigError("radio.n0_mode must be 'per_subchannel' or 'per_hz'");
    }
}

inline void apply_config_key(AppConfig& cfg, const std::string& key, const std::string& value) {
    using config_detail::parse_double;
    using config_detail::parse_int;
    GenParams& g = cfg.gen;
    SolverConfig& sol = cfg.solver;

    if (key == "area.size_m") g.area_size_m = parse_double(key, value);
    else if (key == "md.count") g.num_devices = parse_int(key, value);
    else if (key == "md.tx_power_w") g.md_tx_power_w = parse_double(key, value);
    else if (key == "md.cpu_hz_min") g.md_cpu_hz.min = parse_double(key, value);
    else if (key == "md.cpu_hz_max") g.md_cpu_hz.max = parse_double(key, value);
    else if (key == "uav.count") g.num_uavs = parse_int(key, value);
    else if (key == "uav.altitude_m") g.uav_altitude_m = parse_double(key, value);
    else if (key == "uav.cpu_hz_min") g.uav_cpu_hz.min = parse_double(key, value);
    else if (key == "uav.cpu_hz_max") g.uav_cpu_hz.max = parse_double(key, value);
    else if (key == "uav.relay_tx_power_w") g.uav_tx_power_w = parse_double(key, value);
    else if (key == "uav.power_efficiency") g.uav_power_efficiency = parse_double(key, value);
    else if (key == "uav.thrust_n") g.uav_thrust_n = parse_double(key, value);
    else if (key == "uav.rotor_count") g.uav_rotor_count = parse_int(key, value);
    else if (key == "uav.rotor_diameter_m") g.uav_rotor_diameter_m = parse_double(key, value);
    else if (key == "task.input_bits_min") g.input_bits.min = parse_double(key, value);
    else if (key == "task.input_bits_max") g.input_bits.max = parse_double(key, value);
    else if (key == "task.cycles_per_bit") g.cycles_per_bit = parse_double(key, value);
    else if (key == "task.deadline_s_min") g.deadline_s.min = parse_double(key, value);
    else if (key == "task.deadline_s_max") g.deadline_s.max = parse_double(key, value);
    else if (key == "radio.ref_gain") g.radio.ref_gain = parse_double(key, value);
    else if (key == "radio.pathloss_exp") g.radio.pathloss_exp = parse_double(key, value);
    else if (key == "radio.n0_w") cfg.n0_value = parse_double(key, value);
    else if (key == "radio.n0_mode") cfg.n0_mode = value;
    else if (key == "radio.subchannel_bw_hz") g.radio.subchannel_bw_hz = parse_double(key, value);
    else if (key == "radio.num_subchannels") g.radio.num_subchannels = parse_int(key, value);
    else if (key == "radio.relay_bw_hz") g.radio.relay_total_bw_hz = parse_double(key, value);
    else if (key == "energy.md_chip_k") g.energy.md_chip_k = parse_double(key, value);
    else if (key == "energy.uav_chip_k") g.energy.uav_chip_k = parse_double(key, value);
    else if (key == "energy.air_density") g.energy.air_density = parse_double(key, value);
    else if (key == "tbs.x_m") g.tbs_position.x = parse_double(key, value);
    else if (key == "tbs.y_m") g.tbs_position.y = parse_double(key, value);
    else if (key == "tbs.z_m") g.tbs_position.z = parse_double(key, value);
    else if (key == "kmeans.max_iters") g.kmeans_max_iters = parse_int(key, value);
    else if (key == "preset") cfg.preset = value;
    else if (key == "solver.vartheta") sol.vartheta = parse_double(key, value);
    else if (key == "solver.epsilon") sol.epsilon = parse_double(key, value);
    else if (key == "solver.max_outer_iters") sol.max_outer_iters = parse_int(key, value);
    else if (key == "solver.psi") sol.rounding_threshold = parse_double(key, value);
    else if (key == "solver.tau") sol.violation_weight = parse_double(key, value);
    else if (key == "solver.rule") sol.rule = rule_from_name(value);
    else if (key == "solver.seed") sol.seed = static_cast<std::uint64_t>(parse_double(key, value));
    else if (key == "solver.l_min") sol.l_min = parse_double(key, value);
    else if (key == "solver.inner_tol") sol.inner_tol = parse_double(key, value);
    else if (key == "solver.inner_max_iters") sol.inner_max_iters = parse_int(key, value);
    else throw ConfigError("unknown key '" + key + "'");

    if (!cfg.keys_seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
}

inline AppConfig parse_config_text(const std::string& text) {
    AppConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = config_detail::trim(line.substr(0, eq));
        const std::string value = config_detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        apply_config_key(cfg, key, value);
    }
    finalize_config(cfg);
    return cfg;
}

inline AppConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace uavmec

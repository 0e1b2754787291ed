#pragma once

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "uavmec/baselines.hpp"
#include "uavmec/bsum.hpp"
#include "uavmec/config.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

enum class ExperimentKind {
    convergence,
    offload_vs_deadline,
    relay_vs_datasize,
    relay_vs_deadline,
    uav_energy_vs_cpu,
    md_energy_vs_datasize,
    energy_vs_subchannels,
    energy_vs_users,
};

inline ExperimentKind experiment_from_name(const std::string& name) {
    if (name == "convergence") return ExperimentKind::convergence;
    if (name == "offload_vs_deadline") return ExperimentKind::offload_vs_deadline;
    if (name == "relay_vs_datasize") return ExperimentKind::relay_vs_datasize;
    if (name == "relay_vs_deadline") return ExperimentKind::relay_vs_deadline;
    if (name == "uav_energy_vs_cpu") return ExperimentKind::uav_energy_vs_cpu;
    if (name == "md_energy_vs_datasize") return ExperimentKind::md_energy_vs_datasize;
    if (name == "energy_vs_subchannels") return ExperimentKind::energy_vs_subchannels;
    if (name == "energy_vs_users") return ExperimentKind::energy_vs_users;
    throw ConfigError("unknown experiment '" + name + "'");
}

inline std::string experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::convergence: return "convergence";
        case ExperimentKind::offload_vs_deadline: return "offload_vs_deadline";
        case ExperimentKind::relay_vs_datasize: return "relay_vs_datasize";
        case ExperimentKind::relay_vs_deadline: return "relay_vs_deadline";
        case ExperimentKind::uav_energy_vs_cpu: return "uav_energy_vs_cpu";
        case ExperimentKind::md_energy_vs_datasize: return "md_energy_vs_datasize";
        case ExperimentKind::energy_vs_subchannels: return "energy_vs_subchannels";
        case ExperimentKind::energy_vs_users: return "energy_vs_users";
    }
    return "unknown";
}

struct ExperimentSpec {
    ExperimentKind kind{ExperimentKind::convergence};
    std::vector<double> sweep_values;     // empty -> per-experiment defaults
    int num_seeds{5};
    std::uint64_t seed_base{1};
    AppConfig config;
    std::vector<std::string> schemes;     // empty -> per-experiment defaults
    std::string out_dir{"out"};
    int workers{0};                       // 0 -> hardware concurrency
};

struct RunRow {
    std::string experiment;
    std::string sweep_param;
    double sweep_value{0.0};
    std::uint64_t seed{0};
    std::string scheme;
    double objective_j{0.0};
    double md_energy_j{0.0};
    double uav_energy_j{0.0};
    double hover_energy_j{0.0};
    double relay_bits{0.0};
    double offload_bits{0.0};
    int iters{0};
    double mu{1.0};
    double delta_violation{0.0};
    int feasible{0};
};

inline constexpr const char* kRunCsvHeader =
    "experiment,sweep_param,sweep_value,seed,scheme,objective_j,md_energy_j,uav_energy_j,"
    "hover_energy_j,relay_bits,offload_bits,iters,mu,delta_violation,feasible";

namespace csv_detail {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string row_to_csv(const RunRow& r) {
    std::string out;
    out += r.experiment;
    out += ',';
    out += r.sweep_param;
    out += ',';
    out += fmt(r.sweep_value);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += r.scheme;
    out += ',';
    out += fmt(r.objective_j);
    out += ',';
    out += fmt(r.md_energy_j);
    out += ',';
    out += fmt(r.uav_energy_j);
    out += ',';
    out += fmt(r.hover_energy_j);
    out += ',';
    out += fmt(r.relay_bits);
    out += ',';
    out += fmt(r.offload_bits);
    out += ',';
    out += std::to_string(r.iters);
    out += ',';
    out += fmt(r.mu);
    out += ',';
    out += fmt(r.delta_violation);
    out += ',';
    out += std::to_string(r.feasible);
    return out;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace csv_detail

namespace experiment_detail {

inline std::vector<double> default_sweep(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::convergence: return {0.1, 10.0};  // vartheta values
        case ExperimentKind::offload_vs_deadline:
        case ExperimentKind::relay_vs_deadline: return {200, 240, 280, 320, 360};
        case ExperimentKind::relay_vs_datasize: return {3e8, 4e8, 5e8, 6e8, 7e8};
        case ExperimentKind::md_energy_vs_datasize: return {4.5e8, 5e8, 5.5e8, 6e8, 6.5e8, 7e8};
        case ExperimentKind::uav_energy_vs_cpu: return {1.2e9, 1.4e9, 1.6e9, 1.8e9, 2.0e9};
        case ExperimentKind::energy_vs_subchannels: return {10, 15, 20, 25, 30};
        case ExperimentKind::energy_vs_users: return {10, 15, 20, 25, 30};
    }
    return {};
}

inline std::string sweep_param_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::convergence: return "vartheta";
        case ExperimentKind::offload_vs_deadline:
        case ExperimentKind::relay_vs_deadline: return "deadline_s";
        case ExperimentKind::relay_vs_datasize:
        case ExperimentKind::md_energy_vs_datasize: return "input_bits";
        case ExperimentKind::uav_energy_vs_cpu: return "uav_cpu_hz";
        case ExperimentKind::energy_vs_subchannels: return "num_subchannels";
        case ExperimentKind::energy_vs_users: return "num_devices";
    }
    return "value";
}

inline std::vector<std::string> default_schemes(ExperimentKind kind) {
    if (kind == ExperimentKind::convergence) return {"bsum"};
    std::vector<std::string> schemes{"bsum", "local_only", "equal_offloading", "offload_all"};
    if (kind == ExperimentKind::energy_vs_users) schemes.push_back("uav_only");
    return schemes;
}

inline GenParams sweep_applied(const ExperimentSpec& spec, double value) {
    GenParams g = spec.config.gen;
    switch (spec.kind) {
        case ExperimentKind::convergence:
            break;
        case ExperimentKind::offload_vs_deadline:
        case ExperimentKind::relay_vs_deadline:
            g.deadline_s = {value, value};
            break;
        case ExperimentKind::relay_vs_datasize:
        case ExperimentKind::md_energy_vs_datasize:
            g.input_bits = {value, value};
            break;
        case ExperimentKind::uav_energy_vs_cpu:
            g.uav_cpu_hz = {value, value};
            break;
        case ExperimentKind::energy_vs_subchannels:
            g.radio.num_subchannels = static_cast<int>(value);
            // with few subchannels co-channel SINR is interference-limited and
            // uplinks take up to ~3000 s; keep every scheme (offloading-all
            // included) feasible unless deadlines are pinned explicitly
            if (!spec.config.has("task.deadline_s_min") && !spec.config.has("task.deadline_s_max"))
                g.deadline_s = {3500.0, 4000.0};
            break;
        case ExperimentKind::energy_vs_users:
            g.num_devices = static_cast<int>(value);
            // the relay-free comparison scheme needs headroom; keep the
            // looser default unless the user pinned deadlines explicitly
            if (!spec.config.has("task.deadline_s_min") && !spec.config.has("task.deadline_s_max"))
                g.deadline_s = {600.0, 900.0};
            break;
    }
    return g;
}

inline RunRow nan_row() {
    RunRow r;
    r.objective_j = r.md_energy_j = r.uav_energy_j = r.hover_energy_j = r.relay_bits =
        r.offload_bits = r.mu = r.delta_violation = std::nan("");
    r.feasible = 0;
    return r;
}

inline void fill_metrics(RunRow& row, const Scenario& s, const DecisionVector& x,
                         const CostBreakdown& b) {
    row.md_energy_j = 0.0;
    for (const auto& c : b.md) row.md_energy_j += c.e_total;
    row.uav_energy_j = 0.0;
    row.hover_energy_j = 0.0;
    for (const auto& c : b.uav) {
        row.uav_energy_j += c.e_total;
        row.hover_energy_j += c.e_hov;
    }
    row.objective_j = b.objective;
    row.relay_bits = total_relayed_bits(s, x);
    row.offload_bits = total_offloaded_bits(s, x);
}

inline RunRow run_scheme(const std::string& scheme, const Scenario& s, const SolverConfig& cfg) {
    RunRow row;
    row.scheme = scheme;
    try {
        if (scheme == "bsum") {
            const SolverResult r = bsum_solve(s, cfg);
            fill_metrics(row, s, r.decisions, r.breakdown);
            row.iters = r.iterations;
            row.mu = r.mu;
            row.delta_violation = r.delta_violation;
            row.feasible = r.feasible ? 1 : 0;
        } else if (scheme == "local_only") {
            const BaselineResult r = local_only(s, cfg.l_min);
            fill_metrics(row, s, r.decisions, r.breakdown);
            row.feasible = r.feasible ? 1 : 0;
        } else if (scheme == "equal_offloading") {
            const BaselineResult r = equal_offloading(s, cfg);
            fill_metrics(row, s, r.decisions, r.breakdown);
            row.feasible = r.feasible ? 1 : 0;
        } else if (scheme == "offload_all") {
            const SolverResult r = offload_all(s, cfg);
            fill_metrics(row, s, r.decisions, r.breakdown);
            row.iters = r.iterations;
            row.mu = r.mu;
            row.delta_violation = r.delta_violation;
            row.feasible = r.feasible ? 1 : 0;
        } else if (scheme == "uav_only") {
            const SolverResult r = uav_only(s, cfg);
            fill_metrics(row, s, r.decisions, r.breakdown);
            row.iters = r.iterations;
            row.mu = r.mu;
            row.delta_violation = r.delta_violation;
            row.feasible = r.feasible ? 1 : 0;
        } else {
            throw ConfigError("unknown scheme '" + scheme + "'");
        }
    } catch (const Infeasible&) {
        const std::string name = row.scheme;
        row = nan_row();
        row.scheme = name;
    }
    return row;
}

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
}

}  // namespace experiment_detail

// Builds the scenario for every (sweep value, seed) pair, runs the requested
// schemes, and writes <out_dir>/<experiment>.csv (plus per-run objective
// traces for the convergence experiment). Sweep points run on a small worker
// pool; rows land in a fixed order so reruns are byte-identical.
inline std::vector<RunRow> run_experiment(const ExperimentSpec& spec) {
    namespace fs = std::filesystem;
    using namespace experiment_detail;

    if (spec.num_seeds < 1) throw ConfigError("experiment needs at least one seed");
    std::vector<double> sweep = spec.sweep_values.empty() ? default_sweep(spec.kind) : spec.sweep_values;
    if (sweep.empty()) throw ConfigError("experiment needs at least one sweep value");
    const std::vector<std::string> schemes =
        spec.schemes.empty() ? default_schemes(spec.kind) : spec.schemes;
    const std::string exp_name = experiment_name(spec.kind);
    const std::string param = sweep_param_name(spec.kind);

    fs::create_directories(spec.out_dir);

    struct Task {
        double value;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double v : sweep)
        for (int k = 0; k < spec.num_seeds; ++k)
            tasks.push_back({v, spec.seed_base + static_cast<std::uint64_t>(k)});

    std::vector<std::vector<RunRow>> slots(tasks.size());
    std::vector<std::vector<std::pair<std::string, std::vector<std::string>>>> trace_slots(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run_task = [&](std::size_t i) {
        const Task& t = tasks[i];
        GenParams g = sweep_applied(spec, t.value);
        const Scenario s = generate_scenario(g, t.seed);

        std::vector<RunRow> rows;
        if (spec.kind == ExperimentKind::convergence) {
            for (SelectionRule rule : {SelectionRule::cyclic, SelectionRule::gauss_southwell,
                                       SelectionRule::randomized}) {
                SolverConfig cfg = spec.config.solver;
                cfg.vartheta = t.value;
                cfg.rule = rule;
                cfg.seed = t.seed;
                RunRow row;
                row.scheme = "bsum_" + rule_name(rule);
                const SolverResult r = bsum_solve(s, cfg);
                fill_metrics(row, s, r.decisions, r.breakdown);
                row.iters = r.iterations;
                row.mu = r.mu;
                row.delta_violation = r.delta_violation;
                row.feasible = r.feasible ? 1 : 0;
                rows.push_back(row);

                std::vector<std::string> lines{"iter,objective_j"};
                for (std::size_t it = 0; it < r.trace.size(); ++it)
                    lines.push_back(std::to_string(it) + "," + csv_detail::fmt(r.trace[it]));
                trace_slots[i].push_back({"trace_" + rule_name(rule) + "_vartheta" +
                                              csv_detail::fmt(t.value) + "_seed" +
                                              std::to_string(t.seed) + ".csv",
                                          std::move(lines)});
            }
        } else {
            SolverConfig cfg = spec.config.solver;
            cfg.seed = t.seed;
            for (const auto& scheme : schemes) rows.push_back(run_scheme(scheme, s, cfg));
        }
        for (auto& row : rows) {
            row.experiment = exp_name;
            row.sweep_param = param;
            row.sweep_value = t.value;
            row.seed = t.seed;
        }
        slots[i] = std::move(rows);
    };

    // a worker must never unwind through std::thread; the first failure is
    // kept and rethrown after the pool drains
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            try {
                run_task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    unsigned n_workers = spec.workers > 0 ? static_cast<unsigned>(spec.workers)
                                          : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(tasks.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    std::vector<RunRow> all;
    std::vector<std::string> lines{kRunCsvHeader};
    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (const auto& row : slots[i]) {
            lines.push_back(csv_detail::row_to_csv(row));
            all.push_back(row);
        }
        for (const auto& [name, content] : trace_slots[i])
            write_lines(fs::path(spec.out_dir) / name, content);
    }
    write_lines(fs::path(spec.out_dir) / (exp_name + ".csv"), lines);
    return all;
}

// Aggregates every run CSV in a directory into summary.csv: per
// (experiment, sweep_param, sweep_value, scheme), mean and sample stdev over
// seeds for each metric. Idempotent; never reads its own output.
inline std::filesystem::path emit_summary(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw MissingInput("not a directory: " + dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "summary.csv" || name.rfind("trace_", 0) == 0) continue;
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    struct Key {
        std::string experiment, param, scheme;
        double value;
        bool operator<(const Key& o) const {
            if (experiment != o.experiment) return experiment < o.experiment;
            if (param != o.param) return param < o.param;
            if (value != o.value) return value < o.value;
            return scheme < o.scheme;
        }
    };
    constexpr int kMetrics = 10;  // objective..feasible, as in the run schema
    std::map<Key, std::vector<std::array<double, kMetrics>>> groups;

    int parsed_rows = 0;
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        std::string line;
        if (!std::getline(in, line)) continue;
        if (line != kRunCsvHeader) continue;  // a CSV with a different schema
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cols = csv_detail::split(line, ',');
            if (cols.size() != 15) throw Error("malformed run row in " + path.string());
            Key key{cols[0], cols[1], cols[4], std::strtod(cols[2].c_str(), nullptr)};
            std::array<double, kMetrics> metrics{};
            for (int j = 0; j < kMetrics; ++j)
                metrics[static_cast<std::size_t>(j)] = std::strtod(cols[static_cast<std::size_t>(5 + j)].c_str(), nullptr);
            groups[key].push_back(metrics);
            ++parsed_rows;
        }
    }
    if (parsed_rows == 0) throw MissingInput("no run CSV rows under " + dir);

    static constexpr const char* kNames[kMetrics] = {
        "objective_j", "md_energy_j", "uav_energy_j", "hover_energy_j", "relay_bits",
        "offload_bits", "iters",      "mu",           "delta_violation", "feasible"};
    std::string header = "experiment,sweep_param,sweep_value,scheme,n";
    for (const auto* n : kNames) header += std::string(",") + n + "_mean," + n + "_stdev";

    std::vector<std::string> lines{header};
    for (const auto& [key, rows] : groups) {
        std::string line = key.experiment + "," + key.param + "," + csv_detail::fmt(key.value) +
                           "," + key.scheme + "," + std::to_string(rows.size());
        for (int j = 0; j < kMetrics; ++j) {
            double mean = 0.0;
            for (const auto& r : rows) mean += r[static_cast<std::size_t>(j)];
            mean /= static_cast<double>(rows.size());
            double var = 0.0;
            for (const auto& r : rows) {
                const double d = r[static_cast<std::size_t>(j)] - mean;
                var += d * d;
            }
            const double stdev =
                rows.size() > 1 ? std::sqrt(var / static_cast<double>(rows.size() - 1)) : 0.0;
            line += "," + csv_detail::fmt(mean) + "," + csv_detail::fmt(stdev);
        }
        lines.push_back(line);
    }
    const fs::path out = fs::path(dir) / "summary.csv";
    experiment_detail::write_lines(out, lines);
    return out;
}

}  // namespace uavmec

#pragma once

#include <cstddef>

#include "uavmec/bsum.hpp"
#include "uavmec/costs.hpp"
#include "uavmec/scenario.hpp"

namespace uavmec {

// Comparison schemes. local_only and equal_offloading are fixed points that
// get evaluated as-is (deadline violations are data, not errors); the other
// two are restricted solver runs.
struct BaselineResult {
    DecisionVector decisions;
    CostBreakdown breakdown;
    ConstraintResiduals constraint_residuals;
    bool feasible{false};
};

// Everything computed on the device: l at the strict-positivity floor, no
// subchannel held, no CPU share, no relay.
inline BaselineResult local_only(const Scenario& s, double l_min = 1e-6) {
    DecisionVector x = DecisionVector::zeros(s);
    for (std::size_t u = 0; u < s.num_devices(); ++u) x.l[u] = l_min;
    BaselineResult r;
    r.decisions = x;
    r.breakdown = evaluate(s, x);
    r.constraint_residuals = residuals(s, x);
    r.feasible = r.constraint_residuals.feasible(1e-9);
    return r;
}

// Fixed half split between local and offloaded execution; channel assignment
// and CPU split from the standard initial point, phi minimal on the grid.
inline BaselineResult equal_offloading(const Scenario& s, const SolverConfig& cfg = {}) {
    InitOptions opts;
    opts.locked_l = 0.5;
    opts.tolerate_local_deadline = true;
    BaselineResult r;
    r.decisions = initial_feasible_point(s, cfg, opts);
    r.breakdown = evaluate(s, r.decisions);
    r.constraint_residuals = residuals(s, r.decisions);
    r.feasible = r.constraint_residuals.feasible(1e-9);
    return r;
}

// Everything offloaded; the solver tunes only the CPU split and relay ratio.
inline SolverResult offload_all(const Scenario& s, const SolverConfig& cfg = {}) {
    InitOptions init;
    init.locked_l = 1.0;
    SolveOptions opts;
    opts.warm_start = initial_feasible_point(s, cfg, init);
    opts.mask.channel = false;
    opts.mask.offload = false;
    return bsum_solve(s, cfg, opts);
}

// No TBS assistance: phi frozen at zero, full solve over the other blocks.
inline SolverResult uav_only(const Scenario& s, const SolverConfig& cfg = {}) {
    InitOptions init;
    init.lock_phi_zero = true;
    SolveOptions opts;
    opts.warm_start = initial_feasible_point(s, cfg, init);
    opts.mask.relay = false;
    return bsum_solve(s, cfg, opts);
}

}  // namespace uavmec

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "uavmec/common.hpp"

namespace uavmec {

// One linear coupling constraint over a coordinate subset:
// sum of x[indices] <= cap, or == cap when equality is set. Groups used by a
// FeasibleSet must be pairwise disjoint so projection stays exact.
struct GroupConstraint {
    std::vector<int> indices;
    double cap{0.0};
    bool equality{false};
};

struct FeasibleSet {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<GroupConstraint> groups;
};

inline std::vector<double> project_box(std::vector<double> x, const std::vector<double>& lo,
                                       const std::vector<double>& hi) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
}

namespace detail {

// Euclidean projection of v onto {x : lo <= x <= hi, sum(x) <= cap} (or
// == cap): x(lambda) = clamp(v - lambda), with the dual lambda found by
// bisection; sum(x(lambda)) is nonincreasing in lambda.
inline void project_group_inplace(std::vector<double>& x, const std::vector<int>& idx,
                                  const std::vector<double>& lo, const std::vector<double>& hi,
                                  double cap, bool equality, double tol = 1e-10) {
    auto sum_at = [&](double lambda) {
        double s = 0.0;
        for (int i : idx) s += std::clamp(x[static_cast<std::size_t>(i)] - lambda,
                                          lo[static_cast<std::size_t>(i)], hi[static_cast<std::size_t>(i)]);
        return s;
    };

    double s0 = sum_at(0.0);
    if (!equality && s0 <= cap) {
        for (int i : idx)
            x[static_cast<std::size_t>(i)] = std::clamp(x[static_cast<std::size_t>(i)],
                                                        lo[static_cast<std::size_t>(i)],
                                                        hi[static_cast<std::size_t>(i)]);
        return;
    }

    double min_sum = 0.0, max_sum = 0.0;
    for (int i : idx) {
        min_sum += lo[static_cast<std::size_t>(i)];
        max_sum += hi[static_cast<std::size_t>(i)];
    }
    if (equality && (cap < min_sum - 1e-9 || cap > max_sum + 1e-9))
        throw Error("group equality cap outside feasible range");
    const double target = equality ? std::clamp(cap, min_sum, max_sum) : cap;

    double left = 0.0, right = 0.0;
    for (int i : idx) {
        left = std::min(left, x[static_cast<std::size_t>(i)] - hi[static_cast<std::size_t>(i)]);
        right = std::max(right, x[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]);
    }
    left -= 1.0;
    right += 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (left + right);
        const double s = sum_at(mid);
        if (std::fabs(s - target) <= tol) {
            left = right = mid;
            break;
        }
        if (s > target)
            left = mid;
        else
            right = mid;
    }
    const double lambda = 0.5 * (left + right);
    for (int i : idx)
        x[static_cast<std::size_t>(i)] = std::clamp(x[static_cast<std::size_t>(i)] - lambda,
                                                    lo[static_cast<std::size_t>(i)],
                                                    hi[static_cast<std::size_t>(i)]);
}

}  // namespace detail

// Euclidean projection onto {x : 0 <= x <= upper, sum(x) <= cap}.
inline std::vector<double> project_capped_simplex(std::vector<double> v, double cap,
                                                  const std::vector<double>& upper) {
    if (!(cap > 0.0)) throw InvalidRange("capped simplex needs cap > 0");
    std::vector<double> lo(v.size(), 0.0);
    std::vector<int> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = static_cast<int>(i);
    detail::project_group_inplace(v, idx, lo, upper, cap, false);
    return v;
}

// Exact projection when groups are pairwise disjoint: grouped coordinates are
// clamped inside the dual bisection itself (clamping them to the box first
// and then projecting the clamped point is not the projection onto the
// intersection).
inline std::vector<double> project_feasible(std::vector<double> x, const FeasibleSet& set) {
    std::vector<char> grouped(x.size(), 0);
    for (const auto& g : set.groups)
        for (int i : g.indices) grouped[static_cast<std::size_t>(i)] = 1;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!grouped[i]) x[i] = std::clamp(x[i], set.lo[i], set.hi[i]);
    for (const auto& g : set.groups)
        detail::project_group_inplace(x, g.indices, set.lo, set.hi, g.cap, g.equality);
    return x;
}

// Smooth (or piecewise-smooth convex) block subproblem. gradient writes into
// a caller-provided buffer; the feasible start is required.
struct BlockProblem {
    std::function<double(const std::vector<double>&)> value;
    std::function<void(const std::vector<double>&, std::vector<double>&)> gradient;
    FeasibleSet set;
    std::vector<double> start;
};

struct BlockResult {
    std::vector<double> x;
    double value{0.0};
    int iterations{0};
};

// Projected gradient descent with Armijo backtracking (shrink 0.5, slope
// factor 1e-4, unit initial step). Stops when the unit-step projected
// gradient norm falls below tol, when no step achieves descent, or at
// max_iters. The returned value never exceeds the starting value.
inline BlockResult solve_block(const BlockProblem& p, double tol = 1e-6, int max_iters = 500) {
    std::vector<double> x = project_feasible(p.start, p.set);
    {
        double drift = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) drift = std::max(drift, std::fabs(x[i] - p.start[i]));
        if (drift > 1e-8) throw InfeasibleStart("block start violates the feasible set");
    }

    double fx = p.value(x);
    std::vector<double> grad(x.size());
    std::vector<double> trial(x.size());
    int iters = 0;

    while (iters < max_iters) {
        p.gradient(x, grad);

        for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - grad[i];
        trial = project_feasible(std::move(trial), p.set);
        double pg2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - trial[i];
            pg2 += d * d;
        }
        if (std::sqrt(pg2) <= tol) break;

        double step = 1.0;
        bool accepted = false;
        while (step >= 1e-14) {
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - step * grad[i];
            trial = project_feasible(std::move(trial), p.set);
            double dir_deriv = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dir_deriv += grad[i] * (trial[i] - x[i]);
            const double ft = p.value(trial);
            if (ft <= fx + 1e-4 * dir_deriv) {
                x = trial;
                fx = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++iters;
        if (!accepted) break;  // stalled at a kink or numerical floor
    }
    return {std::move(x), fx, iters};
}

// Unit-step projected gradient norm at x; the Gauss-Southwell ranking metric.
inline double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& grad,
                                      const FeasibleSet& set) {
    std::vector<double> trial(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - grad[i];
    trial = project_feasible(std::move(trial), set);
    double n2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - trial[i];
        n2 += d * d;
    }
    return std::sqrt(n2);
}

}  // namespace uavmec

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavmec {

// All library errors derive from Error so the CLI can catch one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyScenario : Error { explicit EmptyScenario(const std::string& m) : Error("EmptyScenario: " + m) {} };
struct InvalidRange : Error { explicit InvalidRange(const std::string& m) : Error("InvalidRange: " + m) {} };
struct TooFewPoints : Error { explicit TooFewPoints(const std::string& m) : Error("TooFewPoints: " + m) {} };
struct DegenerateGeometry : Error { explicit DegenerateGeometry(const std::string& m) : Error("DegenerateGeometry: " + m) {} };
struct ZeroRateWithLoad : Error { explicit ZeroRateWithLoad(const std::string& m) : Error("ZeroRateWithLoad: " + m) {} };
struct ZeroCpuWithLoad : Error { explicit ZeroCpuWithLoad(const std::string& m) : Error("ZeroCpuWithLoad: " + m) {} };
struct DimensionMismatch : Error { explicit DimensionMismatch(const std::string& m) : Error("DimensionMismatch: " + m) {} };
struct InfeasibleStart : Error { explicit InfeasibleStart(const std::string& m) : Error("InfeasibleStart: " + m) {} };
struct Infeasible : Error { explicit Infeasible(const std::string& m) : Error("Infeasible: " + m) {} };
struct InstanceTooLarge : Error { explicit InstanceTooLarge(const std::string& m) : Error("InstanceTooLarge: " + m) {} };
struct NoFeasiblePoint : Error { explicit NoFeasiblePoint(const std::string& m) : Error("NoFeasiblePoint: " + m) {} };
struct MissingInput : Error { explicit MissingInput(const std::string& m) : Error("MissingInput: " + m) {} };
struct ConfigError : Error { explicit ConfigError(const std::string& m) : Error("ConfigError: " + m) {} };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic uniform generator. mt19937_64's bit stream is pinned by the
// standard; doubles are derived here rather than through the standard
// distributions, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), unbiased
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t accept = max - max % n;  // multiple of n
        std::uint64_t x = eng_();
        while (x >= accept) x = eng_();
        return x % n;
    }

    // k distinct indices from [0, n), partial Fisher-Yates
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

    // seeded permutation of [0, n)
    std::vector<std::size_t> permutation(std::size_t n) {
        return sample_without_replacement(n, n);
    }

private:
    std::mt19937_64 eng_;
};

inline bool close_rel(double a, double b, double rel, double abs_tol = 0.0) {
    const double diff = std::fabs(a - b);
    return diff <= abs_tol + rel * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace uavmec

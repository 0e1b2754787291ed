#pragma once

#include <cmath>

namespace uavmec {

// Cartesian coordinates in meters. Ground entities sit at z = 0.
struct Position3 {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    friend bool operator==(const Position3&, const Position3&) = default;
};

inline double distance(const Position3& a, const Position3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Horizontal distance; clustering works on ground-plane coordinates.
inline double distance_2d(const Position3& a, const Position3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

inline double squared_distance_2d(const Position3& a, const Position3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

}  // namespace uavmec

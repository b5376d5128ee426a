#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace vpm {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a)
{
    const double r = norm(a);
    return {a[0] / r, a[1] / r, a[2] / r};
}

/// cos of the geodesic distance between two unit vectors, clamped to [-1, 1].
inline double cos_arc(const Vec3& a, const Vec3& b) { return std::clamp(dot(a, b), -1.0, 1.0); }

inline constexpr Vec3 north_pole{0.0, 0.0, 1.0};

} // namespace vpm

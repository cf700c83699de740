#ifndef PERFUSIM_GEOMETRY_HPP
#define PERFUSIM_GEOMETRY_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace perfusim {

/// All positions are stored as 3-vectors; planar data keeps z = 0.
using Vec3 = Eigen::Vector3d;

struct Aabb {
    Vec3 lo{Vec3::Zero()};
    Vec3 hi{Vec3::Zero()};
};

/// Oriented cutting plane. The kept half-space is (x - point) . normal <= 0.
struct CutPlane {
    Vec3 point{Vec3::Zero()};
    Vec3 normal{Vec3::UnitX()};

    double signed_distance(const Vec3& x) const { return (x - point).dot(normal); }
    bool keeps(const Vec3& x) const { return signed_distance(x) <= 0.0; }
};

/// Minimum distance between two segments [a0,a1] and [b0,b1].
/// Closed-form clamped solution of the two-parameter quadratic.
double segment_segment_distance(const Vec3& a0, const Vec3& a1,
                                const Vec3& b0, const Vec3& b1);

/// Distance from a point to segment [a0,a1].
double point_segment_distance(const Vec3& p, const Vec3& a0, const Vec3& a1);

/// Smoothed norm sqrt(|v|^2 + eps^2); gradient stays finite at v = 0.
inline double smooth_norm(const Vec3& v, double eps) {
    return std::sqrt(v.squaredNorm() + eps * eps);
}

}  // namespace perfusim

#endif

#include "perfusim/geometry.hpp"

#include <algorithm>

namespace perfusim {

double point_segment_distance(const Vec3& p, const Vec3& a0, const Vec3& a1) {
    const Vec3 d = a1 - a0;
    const double dd = d.squaredNorm();
    if (dd == 0.0) return (p - a0).norm();
    const double t = std::clamp((p - a0).dot(d) / dd, 0.0, 1.0);
    return (p - (a0 + t * d)).norm();
}

double segment_segment_distance(const Vec3& a0, const Vec3& a1,
                                const Vec3& b0, const Vec3& b1) {
    // Ericson, Real-Time Collision Detection, 5.1.9.
    const Vec3 d1 = a1 - a0;
    const Vec3 d2 = b1 - b0;
    const Vec3 r = a0 - b0;
    const double la = d1.squaredNorm();
    const double lb = d2.squaredNorm();
    const double f = d2.dot(r);

    double s = 0.0, t = 0.0;
    if (la == 0.0 && lb == 0.0) {
        return r.norm();
    }
    if (la == 0.0) {
        t = std::clamp(f / lb, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (lb == 0.0) {
            s = std::clamp(-c / la, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = la * lb - b * b;
            if (denom > 0.0) {
                s = std::clamp((b * f - c * lb) / denom, 0.0, 1.0);
            }
            t = (b * s + f) / lb;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / la, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / la, 0.0, 1.0);
            }
        }
    }
    return ((a0 + s * d1) - (b0 + t * d2)).norm();
}

}  // namespace perfusim

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace viewgraph {

using Vec3 = Eigen::Vector3d;

inline double angle_between(const Vec3& a, const Vec3& b) {
    // atan2 form stays accurate for nearly parallel vectors
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace viewgraph

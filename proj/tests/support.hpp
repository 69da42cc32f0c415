#pragma once

// Scene construction for tests. Independent of the library generator: poses
// come from random unit quaternions and points are placed directly in 3D.

#include "priorpose/types.hpp"

#include <Eigen/Geometry>

#include <random>

namespace testsupport {

using priorpose::Correspondence;
using priorpose::CorrespondenceSet;
using priorpose::Pose;

inline Eigen::Matrix3d random_rotation(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

// Rotation within max_deg of identity, about a random axis.
inline Eigen::Matrix3d random_small_rotation(std::mt19937_64 &rng, double max_deg) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
    return Eigen::AngleAxisd(u(rng) * max_deg * M_PI / 180.0, axis).toRotationMatrix();
}

inline Eigen::Vector3d random_direction(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
}

// A forward-looking pose pair: moderate rotation, baseline ~1.
inline Pose random_pose(std::mt19937_64 &rng, double max_rot_deg = 30.0) {
    Pose p;
    p.rotation = random_small_rotation(rng, max_rot_deg);
    p.translation = random_direction(rng);
    return p;
}

// Points in front of both cameras, projected exactly.
inline CorrespondenceSet project_scene(const Pose &pose, size_t n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> xy(-1.5, 1.5);
    std::uniform_real_distribution<double> z(3.0, 8.0);
    CorrespondenceSet out;
    while (out.size() < n) {
        const Eigen::Vector3d x1(xy(rng), xy(rng), z(rng));
        const Eigen::Vector3d x2 = pose.rotation * x1 + pose.translation;
        if (x2.z() < 0.5)
            continue;
        out.push_back({x1.hnormalized(), x2.hnormalized()});
    }
    return out;
}

// Essential matrix [t]x R with unit-norm t, built from the cross product.
inline Eigen::Matrix3d essential_oracle(const Pose &pose) {
    Eigen::Matrix3d e;
    const Eigen::Vector3d t = pose.translation.normalized();
    for (int c = 0; c < 3; ++c)
        e.col(c) = t.cross(pose.rotation.col(c));
    return e;
}

inline double essential_distance(const Eigen::Matrix3d &a, const Eigen::Matrix3d &b) {
    const Eigen::Matrix3d an = a.normalized();
    const Eigen::Matrix3d bn = b.normalized();
    return std::min((an - bn).norm(), (an + bn).norm());
}

// Angle between rotations via quaternions.
inline double quaternion_angle_deg(const Eigen::Matrix3d &a, const Eigen::Matrix3d &b) {
    return Eigen::Quaterniond(a).angularDistance(Eigen::Quaterniond(b)) * 180.0 / M_PI;
}

}  // namespace testsupport

#pragma once

#include "priorpose/types.hpp"

#include <array>
#include <limits>
#include <span>

namespace priorpose {

/// Orthonormalizes a 6D rotation into SO(3): columns are
/// normalize(a1), normalize(a2 - (a2.b1) b1), b1 x b2.
/// Throws DegenerateInput when a1 vanishes or a1 and a2 are parallel.
RotationMatrix gram_schmidt_to_rotation(const Rotation6D &r6);

Rotation6D rotation_to_6d(const RotationMatrix &r);

bool is_rotation(const Eigen::Matrix3d &m, double tolerance = tol::kOrthonormality);

Eigen::Matrix3d skew(const Eigen::Vector3d &v);

/// E = [t]x R with t scaled to unit length. Throws DegenerateInput for ||t|| ~ 0.
EssentialMatrix essential_from_pose(const Pose &pose);

/// Checks the rank-2 and equal-singular-value structure of an essential matrix.
bool is_essential(const EssentialMatrix &e, double tolerance = tol::kEssentialRank);

/// Squared first-order (Sampson) epipolar error in normalized coordinates.
double sampson_error(const Correspondence &c, const EssentialMatrix &e);

// Same quantity without the degenerate-denominator check; returns +inf instead
// of throwing. Used in the hot inlier-counting loops.
inline double sampson_error_unchecked(const Eigen::Vector3d &ph, const Eigen::Vector3d &qh,
                                      const EssentialMatrix &e) {
    const Eigen::Vector3d ep = e * ph;
    const Eigen::Vector3d etq = e.transpose() * qh;
    const double num = qh.dot(ep);
    const double den = ep(0) * ep(0) + ep(1) * ep(1) + etq(0) * etq(0) + etq(1) * etq(1);
    if (den < tol::kSampsonDenominator)
        return std::numeric_limits<double>::infinity();
    return num * num / den;
}

struct Triangulation {
    Eigen::Vector3d point;  // camera-1 frame
    double depth1 = 0.0;
    double depth2 = 0.0;
};

/// Linear (DLT) two-view triangulation with cameras [I|0] and [R|t].
Triangulation triangulate(const Correspondence &c, const Pose &pose);

/// The four (R, +-t) factorizations of E, translation scaled to `scale`.
/// Order: (R1,+t), (R1,-t), (R2,+t), (R2,-t).
std::array<Pose, 4> candidate_transforms(const EssentialMatrix &e, double scale);

/// Number of correspondences triangulating in front of both cameras.
int count_in_front(std::span<const Correspondence> m, const Pose &pose);

/// Chirality-resolved decomposition; the returned translation has unit norm.
/// Throws ChiralityAmbiguous when the best front-count is not unique.
Pose decompose_essential(const EssentialMatrix &e, std::span<const Correspondence> m);

/// Geodesic angle between two rotations, degrees in [0, 180].
double geodesic_rotation_error(const RotationMatrix &ra, const RotationMatrix &rb);

struct TranslationError {
    double euclidean_m = 0.0;
    double angular_deg = 0.0;
};

TranslationError translation_errors(const Eigen::Vector3d &t_pred, const Eigen::Vector3d &t_gt);

Eigen::Vector2d normalize_pixel(const Eigen::Vector2d &px, const CameraIntrinsics &k);
Eigen::Vector2d denormalize_point(const Eigen::Vector2d &xn, const CameraIntrinsics &k);
CorrespondenceSet normalize_pixels(std::span<const PixelCorrespondence> px, const CameraIntrinsics &k);

RotationMatrix axis_angle(const Eigen::Vector3d &axis, double angle_rad);

inline double deg2rad(double d) { return d * 0.017453292519943295; }
inline double rad2deg(double r) { return r * 57.29577951308232; }

}  // namespace priorpose

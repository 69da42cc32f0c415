#include "priorpose/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace priorpose {

const char *to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::DegenerateInput:
        return "DegenerateInput";
    case ErrorCode::ChiralityAmbiguous:
        return "ChiralityAmbiguous";
    case ErrorCode::TooFewCorrespondences:
        return "TooFewCorrespondences";
    case ErrorCode::NoValidHypothesis:
        return "NoValidHypothesis";
    case ErrorCode::GenerationFailed:
        return "GenerationFailed";
    case ErrorCode::InvalidArgument:
        return "InvalidArgument";
    }
    return "Unknown";
}

RotationMatrix gram_schmidt_to_rotation(const Rotation6D &r6) {
    const double n1 = r6.a1.norm();
    const double n2 = r6.a2.norm();
    if (!(n1 > tol::kDegenerateNorm) || !(n2 > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "gram_schmidt_to_rotation: zero column");
    if (r6.a1.cross(r6.a2).norm() / (n1 * n2) <= tol::kDegenerateNorm)
        throw Error(ErrorCode::DegenerateInput, "gram_schmidt_to_rotation: parallel columns");

    const Eigen::Vector3d b1 = r6.a1 / n1;
    const Eigen::Vector3d b2 = (r6.a2 - r6.a2.dot(b1) * b1).normalized();
    RotationMatrix r;
    r.col(0) = b1;
    r.col(1) = b2;
    r.col(2) = b1.cross(b2);
    return r;
}

Rotation6D rotation_to_6d(const RotationMatrix &r) { return {r.col(0), r.col(1)}; }

bool is_rotation(const Eigen::Matrix3d &m, double tolerance) {
    if (!m.allFinite())
        return false;
    const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tolerance && std::abs(m.determinant() - 1.0) <= tolerance;
}

Eigen::Matrix3d skew(const Eigen::Vector3d &v) {
    Eigen::Matrix3d s;
    s << 0.0, -v(2), v(1), v(2), 0.0, -v(0), -v(1), v(0), 0.0;
    return s;
}

EssentialMatrix essential_from_pose(const Pose &pose) {
    const double n = pose.translation.norm();
    if (!(n > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "essential_from_pose: zero translation");
    return skew(pose.translation / n) * pose.rotation;
}

bool is_essential(const EssentialMatrix &e, double tolerance) {
    if (!e.allFinite())
        return false;
    const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::Matrix3d>(e).singularValues();
    if (!(s(0) > 0.0))
        return false;
    return s(2) / s(0) < tolerance && (s(0) - s(1)) / s(0) < tolerance;
}

double sampson_error(const Correspondence &c, const EssentialMatrix &e) {
    const Eigen::Vector3d ph = c.p.homogeneous();
    const Eigen::Vector3d qh = c.q.homogeneous();
    const double err = sampson_error_unchecked(ph, qh, e);
    if (std::isinf(err))
        throw Error(ErrorCode::DegenerateInput, "sampson_error: vanishing denominator");
    return err;
}

namespace {

// Returns false instead of throwing for rays that are (nearly) parallel.
bool triangulate_impl(const Correspondence &c, const Pose &pose, Triangulation *out) {
    const Eigen::Vector3d d1 = c.p.homogeneous();
    const Eigen::Vector3d d2 = pose.rotation.transpose() * c.q.homogeneous();
    if (d1.cross(d2).norm() / (d1.norm() * d2.norm()) <= tol::kDegenerateNorm)
        return false;

    Eigen::Matrix<double, 3, 4> p2;
    p2.leftCols<3>() = pose.rotation;
    p2.col(3) = pose.translation;

    Eigen::Matrix4d a;
    a.row(0) << -1.0, 0.0, c.p(0), 0.0;
    a.row(1) << 0.0, -1.0, c.p(1), 0.0;
    a.row(2) = c.q(0) * p2.row(2) - p2.row(0);
    a.row(3) = c.q(1) * p2.row(2) - p2.row(1);

    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
    const Eigen::Vector4d x = svd.matrixV().col(3);
    if (std::abs(x(3)) <= tol::kDegenerateNorm * x.head<3>().norm())
        return false;
    out->point = x.head<3>() / x(3);
    out->depth1 = out->point(2);
    out->depth2 = pose.apply(out->point)(2);
    return true;
}

}  // namespace

Triangulation triangulate(const Correspondence &c, const Pose &pose) {
    if (!(pose.translation.norm() > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "triangulate: zero baseline");
    Triangulation t;
    if (!triangulate_impl(c, pose, &t))
        throw Error(ErrorCode::DegenerateInput, "triangulate: parallel rays");
    return t;
}

std::array<Pose, 4> candidate_transforms(const EssentialMatrix &e, double scale) {
    if (!(scale > 0.0))
        throw Error(ErrorCode::DegenerateInput, "candidate_transforms: non-positive scale");
    if (!is_essential(e))
        throw Error(ErrorCode::DegenerateInput, "candidate_transforms: not an essential matrix");

    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    if (u.determinant() < 0.0)
        u.col(2) *= -1.0;
    if (v.determinant() < 0.0)
        v.col(2) *= -1.0;

    Eigen::Matrix3d w;
    w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    const RotationMatrix r1 = u * w * v.transpose();
    const RotationMatrix r2 = u * w.transpose() * v.transpose();
    const Eigen::Vector3d t = u.col(2).normalized() * scale;

    return {Pose{r1, t}, Pose{r1, -t}, Pose{r2, t}, Pose{r2, -t}};
}

int count_in_front(std::span<const Correspondence> m, const Pose &pose) {
    int count = 0;
    Triangulation tri;
    for (const auto &c : m) {
        if (triangulate_impl(c, pose, &tri) && tri.depth1 > 0.0 && tri.depth2 > 0.0)
            ++count;
    }
    return count;
}

Pose decompose_essential(const EssentialMatrix &e, std::span<const Correspondence> m) {
    if (m.empty())
        throw Error(ErrorCode::TooFewCorrespondences, "decompose_essential: no correspondences");
    const auto candidates = candidate_transforms(e, 1.0);

    std::array<int, 4> front{};
    for (size_t k = 0; k < candidates.size(); ++k)
        front[k] = count_in_front(m, candidates[k]);

    const auto best = std::max_element(front.begin(), front.end());
    if (std::count(front.begin(), front.end(), *best) != 1)
        throw Error(ErrorCode::ChiralityAmbiguous, "decompose_essential: tied chirality counts");
    return candidates[static_cast<size_t>(best - front.begin())];
}

double geodesic_rotation_error(const RotationMatrix &ra, const RotationMatrix &rb) {
    // atan2(sin, cos) keeps full precision near 0 and 180 degrees.
    const Eigen::Matrix3d d = ra.transpose() * rb;
    const Eigen::Vector3d s(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
    return rad2deg(std::atan2(0.5 * s.norm(), 0.5 * (d.trace() - 1.0)));
}

TranslationError translation_errors(const Eigen::Vector3d &t_pred, const Eigen::Vector3d &t_gt) {
    TranslationError err;
    err.euclidean_m = (t_pred - t_gt).norm();
    const double np = t_pred.norm();
    const double ng = t_gt.norm();
    if (np < tol::kDegenerateNorm || ng < tol::kDegenerateNorm)
        return err;
    err.angular_deg = rad2deg(std::atan2(t_pred.cross(t_gt).norm(), t_pred.dot(t_gt)));
    return err;
}

Eigen::Vector2d normalize_pixel(const Eigen::Vector2d &px, const CameraIntrinsics &k) {
    return {(px(0) - k.cx) / k.fx, (px(1) - k.cy) / k.fy};
}

Eigen::Vector2d denormalize_point(const Eigen::Vector2d &xn, const CameraIntrinsics &k) {
    return {xn(0) * k.fx + k.cx, xn(1) * k.fy + k.cy};
}

CorrespondenceSet normalize_pixels(std::span<const PixelCorrespondence> px, const CameraIntrinsics &k) {
    if (!k.valid())
        throw Error(ErrorCode::InvalidArgument, "normalize_pixels: focal lengths must be positive");
    CorrespondenceSet out;
    out.reserve(px.size());
    for (const auto &c : px)
        out.push_back({normalize_pixel(c.x1, k), normalize_pixel(c.x2, k)});
    return out;
}

RotationMatrix axis_angle(const Eigen::Vector3d &axis, double angle_rad) {
    return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

}  // namespace priorpose

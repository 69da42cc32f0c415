#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace priorpose {

// Numerical tolerances shared by every module.
namespace tol {
inline constexpr double kOrthonormality = 1e-9;   // R^T R = I, det R = +1
inline constexpr double kRoundtrip = 1e-12;       // 6D <-> SO(3)
inline constexpr double kDegenerateNorm = 1e-12;  // zero vectors, parallel rays
inline constexpr double kEssentialRank = 1e-6;    // sigma_3 / sigma_1, sigma_1 ~ sigma_2
inline constexpr double kSampsonDenominator = 1e-30;
inline constexpr double kMinimalResidual = 1e-8;  // |q^T E p| on a minimal sample
inline constexpr double kRealRoot = 1e-8;         // |imag| < kRealRoot * (1 + |real|)
}  // namespace tol

enum class ErrorCode {
    DegenerateInput,
    ChiralityAmbiguous,
    TooFewCorrespondences,
    NoValidHypothesis,
    GenerationFailed,
    InvalidArgument,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

using RotationMatrix = Eigen::Matrix3d;
using EssentialMatrix = Eigen::Matrix3d;

// First two columns of a rotation matrix.
struct Rotation6D {
    Eigen::Vector3d a1;
    Eigen::Vector3d a2;
};

// Rigid transform taking camera-1 coordinates to camera-2 coordinates:
// x2 = rotation * x1 + translation.
struct Pose {
    RotationMatrix rotation = RotationMatrix::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d &x) const { return rotation * x + translation; }
    bool operator==(const Pose &o) const {
        return rotation == o.rotation && translation == o.translation;
    }
};

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    bool valid() const { return fx > 0.0 && fy > 0.0; }
    bool operator==(const CameraIntrinsics &) const = default;
};

// A match between normalized image coordinates p (view 1) and q (view 2).
struct Correspondence {
    Eigen::Vector2d p;
    Eigen::Vector2d q;
};

using CorrespondenceSet = std::vector<Correspondence>;

// Pixel-space counterpart, used by the synthetic harness and file I/O.
struct PixelCorrespondence {
    Eigen::Vector2d x1;
    Eigen::Vector2d x2;
};

using PixelCorrespondenceSet = std::vector<PixelCorrespondence>;

}  // namespace priorpose

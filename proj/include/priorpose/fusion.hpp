#pragma once

#include "priorpose/random.hpp"
#include "priorpose/robust.hpp"
#include "priorpose/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>

namespace priorpose {

struct FusionWeights {
    double w_r = 0.5;
    double w_t = 0.5;

    void validate() const;
    bool operator==(const FusionWeights &) const = default;
};

/// Blends a metric prior pose with a unit-translation solver pose. Rotation
/// is blended in 6D space and re-orthonormalized; the solver translation is
/// scaled by the prior's magnitude before the linear blend:
///   R = GS(w_r 6d(R_prior) + (1 - w_r) 6d(R_solver))
///   t = w_t t_prior + (1 - w_t) |t_prior| t_solver
/// Throws DegenerateInput when the blended 6D vector has no orthonormalization
/// (e.g. antipodal rotations at w_r = 0.5).
Pose fuse_poses(const Pose &prior_pose, const Pose &solver_unit, const FusionWeights &w);

struct LogisticParams {
    double midpoint_count = 30.0;
    double steepness = 0.2;
};

/// w = 1 / (1 + exp(steepness * (count - midpoint))), used for both w_r and w_t.
FusionWeights inlier_logistic_weight(int inlier_count, const LogisticParams &params);

// Prior providers stand in for a learned pose regressor.
struct SyntheticOracle {
    double rot_noise_deg = 10.0;
    double trans_dir_noise_deg = 10.0;
    double scale_noise_rel = 0.1;
    uint64_t seed = 0;
};
struct FixedPose {
    Pose pose;
};
struct PoseFromFile {
    std::string path;
};
using PriorProvider = std::variant<SyntheticOracle, FixedPose, PoseFromFile>;

// Weight providers stand in for a learned gating network.
struct FixedWeights {
    FusionWeights weights;
};
struct InlierLogistic {
    LogisticParams params;
};
struct WeightsFromFile {
    std::string path;
};
using WeightProvider = std::variant<FixedWeights, InlierLogistic, WeightsFromFile>;

struct PriorContext {
    std::optional<Pose> ground_truth;  // required by SyntheticOracle
    uint64_t stream = 0;               // per-pair RNG coordinate
};

/// Rotation error about a random axis with angle |N(0, rot)|, translation
/// direction tilted by |N(0, dir)|, magnitude scaled by exp(N(0, scale)).
Pose perturb_pose(const Pose &truth, const SyntheticOracle &noise, Rng &rng);

Pose provide_prior(const PriorProvider &provider, const PriorContext &ctx);
FusionWeights provide_weights(const WeightProvider &provider, int solver_inlier_count);

struct PipelineOutput {
    Pose t_s;      // round-1 solver, unit translation
    Pose t_t;      // prior provider
    Pose t_1;      // fuse(t_t, t_s)
    Pose t_u;      // round-2 prior-guided solver, unit translation
    Pose t_final;  // fuse(t_t, t_u)
    FusionWeights weights;
    std::optional<ScoredHypothesis> round1;
    std::optional<ScoredHypothesis> round2;
    bool round1_failed = false;
    bool round2_failed = false;
};

/// Two-round pipeline:
///   t_s = ransac(m); t_t = prior; w = weights(inliers(t_s));
///   t_1 = fuse(t_t, t_s, w); t_u = prior_guided_ransac(m, t_1);
///   t_final = fuse(t_t, t_u, w).
/// A failed solver round falls back to the prior (t_1 = t_t, or t_u = unit(t_1))
/// and sets the matching *_failed flag.
PipelineOutput run_pipeline(std::span<const Correspondence> m, const PriorProvider &prior,
                            const WeightProvider &weights, const RobustConfig &cfg, const PriorContext &ctx = {});

/// Overload taking an already resolved prior pose.
PipelineOutput run_pipeline(std::span<const Correspondence> m, const Pose &prior_pose, const WeightProvider &weights,
                            const RobustConfig &cfg);

Pose with_unit_translation(const Pose &p);

}  // namespace priorpose

#include "priorpose/fusion.hpp"
#include "priorpose/geometry.hpp"
#include "priorpose/io.hpp"

#include <cmath>

namespace priorpose {

void FusionWeights::validate() const {
    if (!(w_r >= 0.0 && w_r <= 1.0) || !(w_t >= 0.0 && w_t <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "FusionWeights: w_r and w_t must lie in [0, 1]");
}

Pose with_unit_translation(const Pose &p) {
    const double n = p.translation.norm();
    if (!(n > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "with_unit_translation: zero translation");
    return {p.rotation, p.translation / n};
}

Pose fuse_poses(const Pose &prior_pose, const Pose &solver_unit, const FusionWeights &w) {
    w.validate();
    const double scale = prior_pose.translation.norm();
    if (!(scale > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "fuse_poses: prior translation is zero");
    if (std::abs(solver_unit.translation.norm() - 1.0) > tol::kOrthonormality)
        throw Error(ErrorCode::InvalidArgument, "fuse_poses: solver translation must have unit norm");

    const Rotation6D a = rotation_to_6d(prior_pose.rotation);
    const Rotation6D b = rotation_to_6d(solver_unit.rotation);
    Pose out;
    out.rotation =
        gram_schmidt_to_rotation({w.w_r * a.a1 + (1.0 - w.w_r) * b.a1, w.w_r * a.a2 + (1.0 - w.w_r) * b.a2});
    out.translation = w.w_t * prior_pose.translation + (1.0 - w.w_t) * scale * solver_unit.translation;
    return out;
}

FusionWeights inlier_logistic_weight(int inlier_count, const LogisticParams &params) {
    if (inlier_count < 0)
        throw Error(ErrorCode::InvalidArgument, "inlier_logistic_weight: negative inlier count");
    const double x = params.steepness * (static_cast<double>(inlier_count) - params.midpoint_count);
    const double w = 1.0 / (1.0 + std::exp(x));
    return {w, w};
}

Pose perturb_pose(const Pose &truth, const SyntheticOracle &noise, Rng &rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_unit = [&]() {
        Eigen::Vector3d v;
        do {
            v = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
        } while (v.norm() < 1e-9);
        return Eigen::Vector3d(v.normalized());
    };

    Pose out = truth;
    const Eigen::Vector3d rot_axis = random_unit();
    const double rot_angle = std::abs(gauss(rng)) * noise.rot_noise_deg;
    out.rotation = axis_angle(rot_axis, deg2rad(rot_angle)) * truth.rotation;

    const double norm = truth.translation.norm();
    if (norm > tol::kDegenerateNorm) {
        const Eigen::Vector3d dir = truth.translation / norm;
        Eigen::Vector3d tilt_axis = dir.cross(random_unit());
        if (tilt_axis.norm() < 1e-9)
            tilt_axis = dir.unitOrthogonal();
        const double tilt = std::abs(gauss(rng)) * noise.trans_dir_noise_deg;
        const double scale = std::exp(gauss(rng) * noise.scale_noise_rel);
        out.translation = axis_angle(tilt_axis, deg2rad(tilt)) * dir * (norm * scale);
    }
    return out;
}

Pose provide_prior(const PriorProvider &provider, const PriorContext &ctx) {
    Pose pose;
    if (const auto *oracle = std::get_if<SyntheticOracle>(&provider)) {
        if (!ctx.ground_truth)
            throw Error(ErrorCode::InvalidArgument, "SyntheticOracle prior requires a ground-truth pose");
        Rng rng = derive_rng(oracle->seed, {ctx.stream});
        pose = perturb_pose(*ctx.ground_truth, *oracle, rng);
    } else if (const auto *fixed = std::get_if<FixedPose>(&provider)) {
        pose = fixed->pose;
    } else {
        pose = read_pose_json(std::get<PoseFromFile>(provider).path);
    }
    if (!is_rotation(pose.rotation, 1e-6) || !pose.translation.allFinite() ||
        !(pose.translation.norm() > tol::kDegenerateNorm))
        throw Error(ErrorCode::InvalidArgument, "prior provider produced an invalid pose");
    return pose;
}

FusionWeights provide_weights(const WeightProvider &provider, int solver_inlier_count) {
    FusionWeights w;
    if (const auto *fixed = std::get_if<FixedWeights>(&provider))
        w = fixed->weights;
    else if (const auto *logistic = std::get_if<InlierLogistic>(&provider))
        w = inlier_logistic_weight(solver_inlier_count, logistic->params);
    else
        w = read_weights_json(std::get<WeightsFromFile>(provider).path);
    w.validate();
    return w;
}

PipelineOutput run_pipeline(std::span<const Correspondence> m, const Pose &prior_pose, const WeightProvider &weights,
                            const RobustConfig &cfg) {
    if (m.size() < 5)
        throw Error(ErrorCode::TooFewCorrespondences,
                    "pipeline needs at least 5 correspondences, got " + std::to_string(m.size()));
    PipelineOutput out;
    out.t_t = prior_pose;

    try {
        RobustResult r1 = ransac(m, cfg);
        out.t_s = r1.pose;
        out.round1 = std::move(r1.hypothesis);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::NoValidHypothesis && e.code() != ErrorCode::ChiralityAmbiguous)
            throw;
        out.round1_failed = true;
    }

    out.weights = provide_weights(weights, out.round1 ? out.round1->inlier_count : 0);
    if (out.round1_failed) {
        out.t_s = with_unit_translation(out.t_t);
        out.t_1 = out.t_t;
    } else {
        out.t_1 = fuse_poses(out.t_t, out.t_s, out.weights);
    }

    RobustConfig cfg2 = cfg;
    cfg2.seed = splitmix64(cfg.seed ^ 0x5bd1e995ULL);
    try {
        RobustResult r2 = prior_guided_ransac(m, out.t_1, cfg2);
        out.t_u = r2.pose;
        out.round2 = std::move(r2.hypothesis);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::NoValidHypothesis && e.code() != ErrorCode::ChiralityAmbiguous)
            throw;
        out.round2_failed = true;
        out.t_u = with_unit_translation(out.t_1);
    }

    out.t_final = fuse_poses(out.t_t, out.t_u, out.weights);
    return out;
}

PipelineOutput run_pipeline(std::span<const Correspondence> m, const PriorProvider &prior,
                            const WeightProvider &weights, const RobustConfig &cfg, const PriorContext &ctx) {
    return run_pipeline(m, provide_prior(prior, ctx), weights, cfg);
}

}  // namespace priorpose

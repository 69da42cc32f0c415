#pragma once

#include "priorpose/fusion.hpp"
#include "priorpose/random.hpp"
#include "priorpose/robust.hpp"
#include "priorpose/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace priorpose {

struct SceneConfig {
    int num_points = 200;
    double depth_min_m = 1.0;
    double depth_max_m = 10.0;
    int image_width_px = 640;
    int image_height_px = 480;
    CameraIntrinsics intrinsics{585.0, 585.0, 320.0, 240.0};
    double rotation_mean_deg = 53.0;   // angles drawn uniformly on [mean/2, 3 mean/2]
    double translation_mean_m = 2.3;   // magnitudes drawn uniformly on [mean/2, 3 mean/2]
    uint64_t seed = 0;

    void validate() const;
};

struct GeneratedPair {
    Pose ground_truth;
    PixelCorrespondenceSet pixels;
    CorrespondenceSet normalized;
    CameraIntrinsics intrinsics;
};

/// Random relative pose with both cameras viewing a shared scene center,
/// then points sampled uniformly over image 1 pixels and depth, kept when they
/// project in front of and inside camera 2. Throws GenerationFailed when 100
/// pose draws in a row cannot produce num_points visible points.
GeneratedPair generate_pair(const SceneConfig &scene, Rng &rng);

struct PerturbationConfig {
    double noise_std_px = 0.0;
    double outlier_prob = 0.0;
    uint64_t seed = 0;

    void validate() const;
};

struct PerturbedSet {
    PixelCorrespondenceSet pixels;
    CorrespondenceSet normalized;
    std::vector<uint8_t> is_outlier;
};

/// Per correspondence: with probability outlier_prob both endpoints become
/// uniform draws over the image; otherwise Gaussian pixel noise is added.
PerturbedSet perturb(const PixelCorrespondenceSet &m, const PerturbationConfig &cfg, const SceneConfig &scene, Rng &rng);

struct MetricsReport {
    double median_rot_deg = 0.0;
    double mean_rot_deg = 0.0;
    double pct_rot_le_30 = 0.0;
    double median_trans_m = 0.0;
    double mean_trans_m = 0.0;
    double pct_trans_le_1m = 0.0;
    int n_pairs = 0;
};

struct PosePair {
    Pose predicted;
    Pose ground_truth;
};

MetricsReport compute_metrics(std::span<const PosePair> pairs);
MetricsReport compute_metrics_from_errors(std::span<const double> rot_deg, std::span<const double> trans_m);

// Lower-middle order statistic for even sizes.
double lower_median(std::vector<double> values);

enum class Method { Solver, Prior, Updated, Full };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct SweepConfig {
    SceneConfig scene;
    std::vector<double> noise_levels{0.0, 8.0, 16.0, 32.0};
    std::vector<double> outlier_levels{0.0, 0.25, 0.5, 0.75, 0.875};
    // Pixel noise applied on the outlier axis.
    double outlier_axis_noise_px = 0.0;
    std::vector<Method> methods{Method::Solver, Method::Prior, Method::Updated, Method::Full};
    int trials = 50;
    RobustConfig robust;
    SyntheticOracle oracle;
    WeightProvider weights = InlierLogistic{};
    uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

struct SweepSetting {
    double noise_std_px = 0.0;
    double outlier_prob = 0.0;
};

/// Noise axis (outliers 0) followed by the outlier axis (noise 0).
std::vector<SweepSetting> sweep_settings(const SweepConfig &cfg);

struct SweepRow {
    SweepSetting setting;
    Method method = Method::Solver;
    int n_trials = 0;
    int n_failures = 0;
    MetricsReport metrics;
};

/// Rows ordered by setting, then by the declared method order. Output is a
/// function of the config alone, for any thread count.
std::vector<SweepRow> run_sweep(const SweepConfig &cfg);

inline constexpr std::string_view kSweepCsvHeader =
    "noise_std_px,outlier_prob,method,n_trials,n_failures,median_rot_deg,mean_rot_deg,pct_rot_le_30,"
    "median_trans_m,mean_trans_m,pct_trans_le_1m";

std::string sweep_to_csv(std::span<const SweepRow> rows);

// Nine correspondences, five of them exact inliers: inlier counting alone
// cannot tell the true model from any other fitted sample.
struct TiebreakOptions {
    int seeds = 100;
    uint64_t seed = 0;
    int inliers = 5;
    int outliers = 4;
    RobustConfig robust;  // robust.alpha is used by the prior-guided column only
    SceneConfig scene;
};

struct TiebreakTrial {
    Pose ground_truth;
    ScoredHypothesis classic;
    ScoredHypothesis guided;
    double classic_beta = 0.0;  // beta of the classic pick under the same prior
    bool classic_consistent = false;
    bool guided_consistent = false;
    int tied_hypotheses = 0;     // distinct minimal-sample models sharing the top inlier count
    int tied_consistent = 0;
};

struct TiebreakReport {
    std::vector<TiebreakTrial> trials;
    int classic_hits = 0;
    int guided_hits = 0;
    double expected_chance_hits = 0.0;  // sum over seeds of tied_consistent / tied_hypotheses
    double chance_variance = 0.0;
};

/// Whether e matches the ground-truth essential matrix up to sign and scale.
bool essential_consistent(const EssentialMatrix &e, const Pose &ground_truth);

TiebreakReport run_tiebreak_demo(const TiebreakOptions &opts);
std::string format_tiebreak_report(const TiebreakReport &report, const TiebreakOptions &opts);

}  // namespace priorpose

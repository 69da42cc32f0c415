#include "priorpose/synthbench.hpp"
#include "priorpose/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace priorpose {

namespace {

// Stream tags for derive_rng.
constexpr uint64_t kSceneStream = 1;
constexpr uint64_t kPerturbStream = 2;
constexpr uint64_t kRobustStream = 3;
constexpr uint64_t kOracleStream = 4;
constexpr uint64_t kOutlierStream = 5;

Eigen::Vector3d random_unit_vector(Rng &rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    } while (v.norm() < 1e-9);
    return v.normalized();
}

std::string format_double(const char *fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

}  // namespace

void SceneConfig::validate() const {
    auto fail = [](const std::string &what) { throw Error(ErrorCode::InvalidArgument, "SceneConfig: " + what); };
    if (num_points < 5)
        fail("num_points must be >= 5");
    if (!(depth_min_m > 0.0) || !(depth_max_m > depth_min_m))
        fail("depth range must be positive and non-empty");
    if (image_width_px <= 0 || image_height_px <= 0)
        fail("image size must be positive");
    if (!intrinsics.valid())
        fail("focal lengths must be positive");
    if (!(rotation_mean_deg >= 0.0) || rotation_mean_deg > 120.0)
        fail("rotation mean must lie in [0, 120] degrees");
    if (!std::isfinite(translation_mean_m) || translation_mean_m < 0.0)
        fail("translation mean must be finite and >= 0");
}

GeneratedPair generate_pair(const SceneConfig &scene, Rng &rng) {
    scene.validate();
    if (!(scene.translation_mean_m > 0.0))
        throw Error(ErrorCode::GenerationFailed, "generate_pair: zero translation leaves E undefined");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto &k = scene.intrinsics;
    const double w = scene.image_width_px;
    const double h = scene.image_height_px;
    const double span = scene.depth_max_m - scene.depth_min_m;

    for (int attempt = 0; attempt < 100; ++attempt) {
        const double angle = scene.rotation_mean_deg * (0.5 + unit(rng));
        const Eigen::Vector3d axis = random_unit_vector(rng);
        const RotationMatrix r = axis_angle(axis, deg2rad(angle));
        const double t_mag = scene.translation_mean_m * (0.5 + unit(rng));
        const Eigen::Vector3d rz = r.col(2);
        // Camera 2 looks at the scene center C = (0, 0, d): R C + t = (0, 0, d2)
        // with |t| = t_mag needs d * sin(angle(R z, z)) <= t_mag.
        const double sin_tilt = std::sqrt(std::max(0.0, 1.0 - rz(2) * rz(2)));
        double center_depth = scene.depth_min_m + (0.25 + 0.25 * unit(rng)) * span;
        if (sin_tilt * center_depth > t_mag)
            center_depth = t_mag / sin_tilt;
        const Eigen::Vector3d rc = r * Eigen::Vector3d(0.0, 0.0, center_depth);
        const double disc = std::max(0.0, rc(2) * rc(2) - center_depth * center_depth + t_mag * t_mag);
        const double d2 = rc(2) + std::sqrt(disc);
        if (!(d2 > 0.0))
            continue;
        const Eigen::Vector3d t = Eigen::Vector3d(0.0, 0.0, d2) - rc;
        if (t.norm() < 1e-6)
            continue;

        GeneratedPair pair;
        pair.ground_truth = {r, t};
        pair.intrinsics = k;
        const size_t want = static_cast<size_t>(scene.num_points);
        pair.pixels.reserve(want);
        for (size_t tries = 0; pair.pixels.size() < want && tries < 200 * want; ++tries) {
            const Eigen::Vector2d x1(unit(rng) * w, unit(rng) * h);
            const double depth = scene.depth_min_m + unit(rng) * span;
            const Eigen::Vector3d p1 = Eigen::Vector3d(normalize_pixel(x1, k).homogeneous()) * depth;
            const Eigen::Vector3d p2 = pair.ground_truth.apply(p1);
            if (!(p2(2) > 1e-6))
                continue;
            const Eigen::Vector2d x2 = denormalize_point(p2.hnormalized(), k);
            if (x2(0) < 0.0 || x2(0) >= w || x2(1) < 0.0 || x2(1) >= h)
                continue;
            pair.pixels.push_back({x1, x2});
        }
        if (pair.pixels.size() < want)
            continue;
        pair.normalized = normalize_pixels(pair.pixels, k);
        return pair;
    }
    throw Error(ErrorCode::GenerationFailed, "generate_pair: no overlapping view pair after 100 draws");
}

void PerturbationConfig::validate() const {
    if (!(noise_std_px >= 0.0) || !std::isfinite(noise_std_px))
        throw Error(ErrorCode::InvalidArgument, "PerturbationConfig: noise_std_px must be >= 0");
    if (!(outlier_prob >= 0.0 && outlier_prob <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "PerturbationConfig: outlier_prob must lie in [0, 1]");
}

PerturbedSet perturb(const PixelCorrespondenceSet &m, const PerturbationConfig &cfg, const SceneConfig &scene,
                     Rng &rng) {
    cfg.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double w = scene.image_width_px;
    const double h = scene.image_height_px;

    PerturbedSet out;
    out.pixels.reserve(m.size());
    out.is_outlier.assign(m.size(), 0);
    for (size_t i = 0; i < m.size(); ++i) {
        PixelCorrespondence c = m[i];
        if (cfg.outlier_prob > 0.0 && unit(rng) < cfg.outlier_prob) {
            c.x1 = {unit(rng) * w, unit(rng) * h};
            c.x2 = {unit(rng) * w, unit(rng) * h};
            out.is_outlier[i] = 1;
        } else if (cfg.noise_std_px > 0.0) {
            c.x1 += cfg.noise_std_px * Eigen::Vector2d(gauss(rng), gauss(rng));
            c.x2 += cfg.noise_std_px * Eigen::Vector2d(gauss(rng), gauss(rng));
        }
        out.pixels.push_back(c);
    }
    out.normalized = normalize_pixels(out.pixels, scene.intrinsics);
    return out;
}

double lower_median(std::vector<double> values) {
    if (values.empty())
        throw Error(ErrorCode::InvalidArgument, "lower_median: empty input");
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

MetricsReport compute_metrics_from_errors(std::span<const double> rot_deg, std::span<const double> trans_m) {
    if (rot_deg.empty() || rot_deg.size() != trans_m.size())
        throw Error(ErrorCode::InvalidArgument, "compute_metrics: need matching, non-empty error lists");
    const double n = static_cast<double>(rot_deg.size());
    MetricsReport r;
    r.n_pairs = static_cast<int>(rot_deg.size());
    r.median_rot_deg = lower_median({rot_deg.begin(), rot_deg.end()});
    r.median_trans_m = lower_median({trans_m.begin(), trans_m.end()});
    r.mean_rot_deg = std::accumulate(rot_deg.begin(), rot_deg.end(), 0.0) / n;
    r.mean_trans_m = std::accumulate(trans_m.begin(), trans_m.end(), 0.0) / n;
    r.pct_rot_le_30 = 100.0 * static_cast<double>(std::count_if(rot_deg.begin(), rot_deg.end(),
                                                                [](double e) { return e <= 30.0; })) / n;
    r.pct_trans_le_1m = 100.0 * static_cast<double>(std::count_if(trans_m.begin(), trans_m.end(),
                                                                  [](double e) { return e <= 1.0; })) / n;
    return r;
}

MetricsReport compute_metrics(std::span<const PosePair> pairs) {
    std::vector<double> rot, trans;
    rot.reserve(pairs.size());
    trans.reserve(pairs.size());
    for (const auto &p : pairs) {
        rot.push_back(geodesic_rotation_error(p.predicted.rotation, p.ground_truth.rotation));
        trans.push_back(translation_errors(p.predicted.translation, p.ground_truth.translation).euclidean_m);
    }
    return compute_metrics_from_errors(rot, trans);
}

std::string_view method_name(Method m) {
    switch (m) {
    case Method::Solver:
        return "solver";
    case Method::Prior:
        return "prior";
    case Method::Updated:
        return "updated";
    case Method::Full:
        return "full";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : {Method::Solver, Method::Prior, Method::Updated, Method::Full})
        if (method_name(m) == name)
            return m;
    return std::nullopt;
}

void SweepConfig::validate() const {
    scene.validate();
    robust.validate();
    auto fail = [](const std::string &what) { throw Error(ErrorCode::InvalidArgument, "SweepConfig: " + what); };
    if (trials < 1)
        fail("trials must be >= 1");
    if (threads < 1)
        fail("threads must be >= 1");
    if (methods.empty())
        fail("at least one method is required");
    if (noise_levels.empty() && outlier_levels.empty())
        fail("no sweep settings");
    for (double n : noise_levels)
        PerturbationConfig{n, 0.0, 0}.validate();
    for (double o : outlier_levels)
        PerturbationConfig{outlier_axis_noise_px, o, 0}.validate();
    if (oracle.rot_noise_deg < 0.0 || oracle.trans_dir_noise_deg < 0.0 || oracle.scale_noise_rel < 0.0)
        fail("oracle noise must be >= 0");
}

std::vector<SweepSetting> sweep_settings(const SweepConfig &cfg) {
    std::vector<SweepSetting> out;
    for (double n : cfg.noise_levels)
        out.push_back({n, 0.0});
    for (double o : cfg.outlier_levels)
        out.push_back({cfg.outlier_axis_noise_px, o});
    return out;
}

namespace {

struct TrialErrors {
    std::array<double, 4> rot{};
    std::array<double, 4> trans{};
    std::array<bool, 4> failed{};
};

size_t slot(Method m) { return static_cast<size_t>(m); }

TrialErrors run_trial(const SweepConfig &cfg, const SweepSetting &setting, uint64_t cell, uint64_t trial) {
    // Scenes and prior noise are shared across settings; only the perturbation
    // and the solver streams change from cell to cell.
    Rng scene_rng = derive_rng(cfg.seed, {kSceneStream, trial});
    const GeneratedPair pair = generate_pair(cfg.scene, scene_rng);
    Rng perturb_rng = derive_rng(cfg.seed, {kPerturbStream, cell, trial});
    const PerturbedSet data = perturb(pair.pixels, {setting.noise_std_px, setting.outlier_prob, 0}, cfg.scene, perturb_rng);

    SyntheticOracle oracle = cfg.oracle;
    oracle.seed = splitmix64(cfg.seed ^ kOracleStream) ^ cfg.oracle.seed;
    const Pose prior = provide_prior(oracle, {pair.ground_truth, trial});
    const double scale = prior.translation.norm();

    RobustConfig robust = cfg.robust;
    robust.seed = derive_rng(cfg.seed, {kRobustStream, cell, trial})();

    const auto wants = [&](Method m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };
    const bool need_pipeline = wants(Method::Updated) || wants(Method::Full);

    TrialErrors out;
    const Pose &gt = pair.ground_truth;
    auto record = [&](Method m, const Pose &pred) {
        out.rot[slot(m)] = geodesic_rotation_error(pred.rotation, gt.rotation);
        out.trans[slot(m)] = translation_errors(pred.translation, gt.translation).euclidean_m;
    };
    auto record_failure = [&](Method m) {
        out.failed[slot(m)] = true;
        out.rot[slot(m)] = 180.0;
        out.trans[slot(m)] = gt.translation.norm() + scale;
    };
    auto scaled = [&](const Pose &unit_pose) { return Pose{unit_pose.rotation, unit_pose.translation * scale}; };

    record(Method::Prior, prior);

    if (need_pipeline) {
        try {
            const PipelineOutput po = run_pipeline(data.normalized, prior, cfg.weights, robust);
            if (po.round1_failed)
                record_failure(Method::Solver);
            else
                record(Method::Solver, scaled(po.t_s));
            if (po.round2_failed)
                record_failure(Method::Updated);
            else
                record(Method::Updated, scaled(po.t_u));
            record(Method::Full, po.t_final);
        } catch (const Error &) {
            record_failure(Method::Solver);
            record_failure(Method::Updated);
            record_failure(Method::Full);
        }
    } else if (wants(Method::Solver)) {
        try {
            record(Method::Solver, scaled(ransac(data.normalized, robust).pose));
        } catch (const Error &) {
            record_failure(Method::Solver);
        }
    }
    return out;
}

// Runs fn(job) for job in [0, n) on `threads` workers; results must be stored
// by job index.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn &&fn) {
    if (threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const size_t workers = std::min(n, static_cast<size_t>(threads));
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig &cfg) {
    cfg.validate();
    const std::vector<SweepSetting> settings = sweep_settings(cfg);
    const size_t trials = static_cast<size_t>(cfg.trials);
    std::vector<TrialErrors> results(settings.size() * trials);

    parallel_for(results.size(), cfg.threads, [&](size_t job) {
        const size_t cell = job / trials;
        const size_t trial = job % trials;
        results[job] = run_trial(cfg, settings[cell], cell, trial);
    });

    std::vector<SweepRow> rows;
    for (size_t cell = 0; cell < settings.size(); ++cell) {
        for (Method m : cfg.methods) {
            std::vector<double> rot, trans;
            int failures = 0;
            for (size_t t = 0; t < trials; ++t) {
                const TrialErrors &r = results[cell * trials + t];
                rot.push_back(r.rot[slot(m)]);
                trans.push_back(r.trans[slot(m)]);
                failures += r.failed[slot(m)] ? 1 : 0;
            }
            SweepRow row;
            row.setting = settings[cell];
            row.method = m;
            row.n_trials = cfg.trials;
            row.n_failures = failures;
            row.metrics = compute_metrics_from_errors(rot, trans);
            rows.push_back(row);
        }
    }
    return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::string out(kSweepCsvHeader);
    out += '\n';
    for (const auto &r : rows) {
        out += format_double("%g", r.setting.noise_std_px) + ',' + format_double("%g", r.setting.outlier_prob) + ',' +
               std::string(method_name(r.method)) + ',' + std::to_string(r.n_trials) + ',' +
               std::to_string(r.n_failures) + ',' + format_double("%.6f", r.metrics.median_rot_deg) + ',' +
               format_double("%.6f", r.metrics.mean_rot_deg) + ',' + format_double("%.2f", r.metrics.pct_rot_le_30) +
               ',' + format_double("%.6f", r.metrics.median_trans_m) + ',' +
               format_double("%.6f", r.metrics.mean_trans_m) + ',' + format_double("%.2f", r.metrics.pct_trans_le_1m) +
               '\n';
    }
    return out;
}

bool essential_consistent(const EssentialMatrix &e, const Pose &ground_truth) {
    const EssentialMatrix gt = essential_from_pose(ground_truth).normalized();
    const EssentialMatrix en = e.normalized();
    return std::min((en - gt).norm(), (en + gt).norm()) < 1e-6;
}

namespace {

// All distinct models fitted to every 5-subset of m, with their inlier counts.
std::vector<std::pair<EssentialMatrix, int>> enumerate_models(const CorrespondenceSet &m, double sigma) {
    std::vector<std::pair<EssentialMatrix, int>> models;
    const size_t n = m.size();
    std::vector<uint8_t> pick(n, 0);
    std::fill(pick.end() - 5, pick.end(), 1);
    do {
        std::array<Correspondence, 5> sample;
        size_t k = 0;
        for (size_t i = 0; i < n; ++i)
            if (pick[i])
                sample[k++] = m[i];
        for (const EssentialMatrix &e : five_point(sample)) {
            const bool seen = std::any_of(models.begin(), models.end(), [&](const auto &mo) {
                return std::min((mo.first - e).norm(), (mo.first + e).norm()) < 1e-8;
            });
            if (!seen)
                models.emplace_back(e, count_inliers(e, m, sigma).count);
        }
    } while (std::next_permutation(pick.begin(), pick.end()));
    return models;
}

}  // namespace

TiebreakReport run_tiebreak_demo(const TiebreakOptions &opts) {
    if (opts.seeds < 1 || opts.inliers < 5 || opts.outliers < 0)
        throw Error(ErrorCode::InvalidArgument, "tiebreak: need seeds >= 1, inliers >= 5, outliers >= 0");
    opts.robust.validate();

    SceneConfig scene = opts.scene;
    scene.num_points = opts.inliers;

    RobustConfig classic_cfg = opts.robust;
    classic_cfg.alpha = 0.0;

    TiebreakReport report;
    for (int s = 0; s < opts.seeds; ++s) {
        const uint64_t idx = static_cast<uint64_t>(s);
        Rng scene_rng = derive_rng(opts.seed, {kSceneStream, idx});
        const GeneratedPair pair = generate_pair(scene, scene_rng);

        // Outliers are redrawn until the scenario is a genuine tie: every
        // outlier fails the ground-truth test and no fitted model gathers more
        // support than the true inliers.
        Rng outlier_rng = derive_rng(opts.seed, {kOutlierStream, idx});
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const EssentialMatrix e_gt = essential_from_pose(pair.ground_truth);
        CorrespondenceSet m;
        std::vector<std::pair<EssentialMatrix, int>> models;
        bool tied = false;
        for (int attempt = 0; attempt < 100 && !tied; ++attempt) {
            PixelCorrespondenceSet pixels = pair.pixels;
            while (static_cast<int>(pixels.size()) < opts.inliers + opts.outliers) {
                const PixelCorrespondence c{
                    {unit(outlier_rng) * scene.image_width_px, unit(outlier_rng) * scene.image_height_px},
                    {unit(outlier_rng) * scene.image_width_px, unit(outlier_rng) * scene.image_height_px}};
                const Correspondence cn{normalize_pixel(c.x1, scene.intrinsics), normalize_pixel(c.x2, scene.intrinsics)};
                if (sampson_error(cn, e_gt) >= opts.robust.sigma)
                    pixels.push_back(c);
            }
            std::shuffle(pixels.begin(), pixels.end(), outlier_rng);
            m = normalize_pixels(pixels, scene.intrinsics);
            models = enumerate_models(m, opts.robust.sigma);
            tied = std::all_of(models.begin(), models.end(),
                               [&](const auto &mo) { return mo.second <= opts.inliers; });
        }
        if (!tied)
            throw Error(ErrorCode::GenerationFailed, "tiebreak: no tied outlier configuration after 100 draws");

        RobustConfig guided_cfg = opts.robust;
        guided_cfg.seed = derive_rng(opts.seed, {kRobustStream, idx})();
        classic_cfg.seed = guided_cfg.seed;

        TiebreakTrial trial;
        trial.ground_truth = pair.ground_truth;
        trial.classic = ransac_hypothesis(m, classic_cfg);
        trial.guided = prior_guided_hypothesis(m, pair.ground_truth, guided_cfg);
        trial.classic_beta = beta_prior(trial.classic.essential, pair.ground_truth, PriorGrid::from_config(guided_cfg));
        trial.classic_consistent = essential_consistent(trial.classic.essential, pair.ground_truth);
        trial.guided_consistent = essential_consistent(trial.guided.essential, pair.ground_truth);

        int top = 0;
        for (const auto &mo : models)
            top = std::max(top, mo.second);
        for (const auto &mo : models) {
            if (mo.second != top)
                continue;
            ++trial.tied_hypotheses;
            trial.tied_consistent += essential_consistent(mo.first, pair.ground_truth) ? 1 : 0;
        }

        report.classic_hits += trial.classic_consistent ? 1 : 0;
        report.guided_hits += trial.guided_consistent ? 1 : 0;
        if (trial.tied_hypotheses > 0) {
            const double p = static_cast<double>(trial.tied_consistent) / trial.tied_hypotheses;
            report.expected_chance_hits += p;
            report.chance_variance += p * (1.0 - p);
        }
        report.trials.push_back(std::move(trial));
    }
    return report;
}

std::string format_tiebreak_report(const TiebreakReport &report, const TiebreakOptions &opts) {
    std::ostringstream os;
    os << "Tie-break scenario: " << opts.inliers + opts.outliers << " correspondences, " << opts.inliers
       << " exact inliers, " << opts.outliers << " outliers; " << report.trials.size() << " seeds\n";
    os << "score = alpha * beta + inliers, alpha = " << opts.robust.alpha << " (classic column uses alpha = 0)\n\n";
    os << "seed | tied  | classic: inliers  alpha*beta      total  gt | guided: inliers  alpha*beta      total  gt\n";
    for (size_t s = 0; s < report.trials.size(); ++s) {
        const auto &t = report.trials[s];
        char line[256];
        std::snprintf(line, sizeof(line),
                      "%4zu | %2d/%-2d |          %3d  %10.4f %10.4f  %s |         %3d  %10.4f %10.4f  %s\n", s,
                      t.tied_consistent, t.tied_hypotheses, t.classic.inlier_count, t.classic.prior_term,
                      t.classic.total_score, t.classic_consistent ? "Y" : "n", t.guided.inlier_count,
                      t.guided.prior_term, t.guided.total_score, t.guided_consistent ? "Y" : "n");
        os << line;
    }
    char summary[256];
    std::snprintf(summary, sizeof(summary),
                  "\nclassic selects the ground-truth model in %d/%zu seeds (chance among tied: %.2f)\n"
                  "prior-guided selects the ground-truth model in %d/%zu seeds\n",
                  report.classic_hits, report.trials.size(), report.expected_chance_hits, report.guided_hits,
                  report.trials.size());
    os << summary;
    return os.str();
}

}  // namespace priorpose

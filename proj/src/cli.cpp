#include "priorpose/cli.hpp"
#include "priorpose/geometry.hpp"
#include "priorpose/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace priorpose {

namespace {

std::vector<double> parse_number_list(const std::string &body, size_t expected, const std::string &spec) {
    std::vector<double> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !std::isfinite(v))
            throw ParseError("invalid number '" + item + "' in '" + spec + "'");
        out.push_back(v);
    }
    if (out.size() != expected)
        throw ParseError("'" + spec + "' needs " + std::to_string(expected) + " comma-separated values");
    return out;
}

bool starts_with(const std::string &s, const std::string &prefix) { return s.rfind(prefix, 0) == 0; }

std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

PriorProvider parse_prior_spec(const std::string &spec) {
    if (starts_with(spec, "oracle:")) {
        const auto v = parse_number_list(spec.substr(7), 3, spec);
        if (v[0] < 0.0 || v[1] < 0.0 || v[2] < 0.0)
            throw ParseError("oracle noise levels must be >= 0");
        return SyntheticOracle{v[0], v[1], v[2], 0};
    }
    if (spec.empty())
        throw ParseError("empty prior specification");
    return PoseFromFile{spec};
}

WeightProvider parse_weights_spec(const std::string &spec) {
    if (starts_with(spec, "fixed:")) {
        const auto v = parse_number_list(spec.substr(6), 2, spec);
        FusionWeights w{v[0], v[1]};
        try {
            w.validate();
        } catch (const Error &e) {
            throw ParseError(e.what());
        }
        return FixedWeights{w};
    }
    if (starts_with(spec, "logistic:")) {
        const auto v = parse_number_list(spec.substr(9), 2, spec);
        if (!(v[1] > 0.0))
            throw ParseError("logistic steepness must be positive");
        return InlierLogistic{{v[0], v[1]}};
    }
    if (spec.empty())
        throw ParseError("empty weights specification");
    return WeightsFromFile{spec};
}

std::string weights_spec(const WeightProvider &w) {
    if (const auto *f = std::get_if<FixedWeights>(&w))
        return "fixed:" + format_number(f->weights.w_r) + "," + format_number(f->weights.w_t);
    if (const auto *l = std::get_if<InlierLogistic>(&w))
        return "logistic:" + format_number(l->params.midpoint_count) + "," + format_number(l->params.steepness);
    return std::get<WeightsFromFile>(w).path;
}

std::string oracle_spec(const SyntheticOracle &o) {
    return "oracle:" + format_number(o.rot_noise_deg) + "," + format_number(o.trans_dir_noise_deg) + "," +
           format_number(o.scale_noise_rel);
}

SweepConfig sweep_config_from_json(const nlohmann::json &input) {
    const nlohmann::json &j = input.contains("config") ? input.at("config") : input;
    if (!j.is_object())
        throw ParseError("bench config must be a JSON object");
    static const std::set<std::string> known{"seed",      "trials",         "threads",     "noise_levels",
                                             "outlier_levels", "methods",   "iterations",  "sigma",
                                             "alpha",     "tau",            "biased_fraction", "grid_extent",
                                             "grid_per_axis", "refit",      "prior",       "weights",
                                             "scene",     "outlier_axis_noise_px"};
    static const std::set<std::string> scene_keys{"num_points", "depth_min_m", "depth_max_m", "image_width_px",
                                                  "image_height_px", "fx", "fy", "cx", "cy",
                                                  "rotation_mean_deg", "translation_mean_m"};
    for (const auto &[key, _] : j.items())
        if (!known.count(key))
            throw ParseError("unknown config key '" + key + "'");

    SweepConfig cfg;
    try {
        if (j.contains("seed"))
            cfg.seed = j.at("seed").get<uint64_t>();
        if (j.contains("trials"))
            cfg.trials = j.at("trials").get<int>();
        if (j.contains("threads"))
            cfg.threads = j.at("threads").get<int>();
        if (j.contains("noise_levels"))
            cfg.noise_levels = j.at("noise_levels").get<std::vector<double>>();
        if (j.contains("outlier_levels"))
            cfg.outlier_levels = j.at("outlier_levels").get<std::vector<double>>();
        if (j.contains("outlier_axis_noise_px"))
            cfg.outlier_axis_noise_px = j.at("outlier_axis_noise_px").get<double>();
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto &name : j.at("methods").get<std::vector<std::string>>()) {
                const auto m = parse_method(name);
                if (!m)
                    throw ParseError("unknown method '" + name + "' (expected solver, prior, updated or full)");
                cfg.methods.push_back(*m);
            }
        }
        auto &r = cfg.robust;
        if (j.contains("iterations"))
            r.iterations = j.at("iterations").get<int>();
        if (j.contains("sigma"))
            r.sigma = j.at("sigma").get<double>();
        if (j.contains("alpha"))
            r.alpha = j.at("alpha").get<double>();
        if (j.contains("tau"))
            r.tau = j.at("tau").get<double>();
        if (j.contains("biased_fraction"))
            r.biased_fraction = j.at("biased_fraction").get<double>();
        if (j.contains("grid_extent"))
            r.grid_extent = j.at("grid_extent").get<double>();
        if (j.contains("grid_per_axis"))
            r.grid_per_axis = j.at("grid_per_axis").get<int>();
        if (j.contains("refit"))
            r.refit = j.at("refit").get<bool>();
        if (j.contains("prior")) {
            const PriorProvider p = parse_prior_spec(j.at("prior").get<std::string>());
            if (!std::holds_alternative<SyntheticOracle>(p))
                throw ParseError("bench prior must be 'oracle:rot_deg,dir_deg,scale_rel'");
            cfg.oracle = std::get<SyntheticOracle>(p);
        }
        if (j.contains("weights"))
            cfg.weights = parse_weights_spec(j.at("weights").get<std::string>());
        if (j.contains("scene")) {
            const auto &s = j.at("scene");
            if (!s.is_object())
                throw ParseError("'scene' must be an object");
            for (const auto &[key, _] : s.items())
                if (!scene_keys.count(key))
                    throw ParseError("unknown scene key '" + key + "'");
            auto &sc = cfg.scene;
            if (s.contains("num_points"))
                sc.num_points = s.at("num_points").get<int>();
            if (s.contains("depth_min_m"))
                sc.depth_min_m = s.at("depth_min_m").get<double>();
            if (s.contains("depth_max_m"))
                sc.depth_max_m = s.at("depth_max_m").get<double>();
            if (s.contains("image_width_px"))
                sc.image_width_px = s.at("image_width_px").get<int>();
            if (s.contains("image_height_px"))
                sc.image_height_px = s.at("image_height_px").get<int>();
            if (s.contains("fx"))
                sc.intrinsics.fx = s.at("fx").get<double>();
            if (s.contains("fy"))
                sc.intrinsics.fy = s.at("fy").get<double>();
            if (s.contains("cx"))
                sc.intrinsics.cx = s.at("cx").get<double>();
            if (s.contains("cy"))
                sc.intrinsics.cy = s.at("cy").get<double>();
            if (s.contains("rotation_mean_deg"))
                sc.rotation_mean_deg = s.at("rotation_mean_deg").get<double>();
            if (s.contains("translation_mean_m"))
                sc.translation_mean_m = s.at("translation_mean_m").get<double>();
        }
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const Error &e) {
        throw ParseError(e.what());
    }
    return cfg;
}

nlohmann::json sweep_config_to_json(const SweepConfig &cfg) {
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : cfg.methods)
        methods.push_back(std::string(method_name(m)));
    const auto &r = cfg.robust;
    const auto &s = cfg.scene;
    return {{"seed", cfg.seed},
            {"trials", cfg.trials},
            {"threads", cfg.threads},
            {"noise_levels", cfg.noise_levels},
            {"outlier_levels", cfg.outlier_levels},
            {"outlier_axis_noise_px", cfg.outlier_axis_noise_px},
            {"methods", methods},
            {"iterations", r.iterations},
            {"sigma", r.sigma},
            {"alpha", r.alpha},
            {"tau", r.tau},
            {"biased_fraction", r.biased_fraction},
            {"grid_extent", r.grid_extent},
            {"grid_per_axis", r.grid_per_axis},
            {"refit", r.refit},
            {"prior", oracle_spec(cfg.oracle)},
            {"weights", weights_spec(cfg.weights)},
            {"scene",
             {{"num_points", s.num_points},
              {"depth_min_m", s.depth_min_m},
              {"depth_max_m", s.depth_max_m},
              {"image_width_px", s.image_width_px},
              {"image_height_px", s.image_height_px},
              {"fx", s.intrinsics.fx},
              {"fy", s.intrinsics.fy},
              {"cx", s.intrinsics.cx},
              {"cy", s.intrinsics.cy},
              {"rotation_mean_deg", s.rotation_mean_deg},
              {"translation_mean_m", s.translation_mean_m}}}};
}

namespace {

struct RobustFlags {
    RobustConfig cfg;
    void attach(CLI::App *app) {
        app->add_option("--iterations", cfg.iterations, "RANSAC iterations")->capture_default_str();
        app->add_option("--sigma", cfg.sigma, "Squared Sampson inlier threshold (normalized)")->capture_default_str();
        app->add_option("--alpha", cfg.alpha, "Prior weight")->capture_default_str();
        app->add_option("--tau", cfg.tau, "Sampling temperature")->capture_default_str();
        app->add_option("--biased-fraction", cfg.biased_fraction, "Share of prior-weighted samples")
            ->capture_default_str();
        app->add_option("--grid-extent", cfg.grid_extent, "Prior lattice half-width (m)")->capture_default_str();
        app->add_option("--grid-per-axis", cfg.grid_per_axis, "Prior lattice points per axis")->capture_default_str();
        app->add_flag("--refit", cfg.refit, "Eight-point polish on the winning inliers");
    }
};

struct EstimateArgs {
    std::string corr_file;
    std::string intrinsics_file;
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    std::string prior;
    std::string weights = "logistic:30,0.2";
    std::string gt_file;
    uint64_t seed = 0;
    RobustFlags robust;
};

struct BenchArgs {
    std::string config_file;
    std::string out_csv = "sweep.csv";
    std::string manifest;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
};

struct TiebreakArgs {
    TiebreakOptions opts;
    RobustFlags robust;
};

int cmd_estimate(EstimateArgs &a, bool have_intrinsic_flags, std::ostream &out, std::ostream &err) {
    CameraIntrinsics k;
    if (!a.intrinsics_file.empty()) {
        k = read_intrinsics_json(a.intrinsics_file);
    } else if (have_intrinsic_flags) {
        k = {a.fx, a.fy, a.cx, a.cy};
        if (!k.valid())
            throw ParseError("--fx and --fy must be positive");
    } else {
        throw ParseError("intrinsics required: --intrinsics FILE or --fx --fy --cx --cy");
    }

    const PixelCorrespondenceSet pixels = read_correspondences_csv(a.corr_file);
    if (pixels.size() < 5)
        throw ParseError("need at least 5 correspondences, got " + std::to_string(pixels.size()));
    const CorrespondenceSet m = normalize_pixels(pixels, k);

    RobustConfig cfg = a.robust.cfg;
    cfg.seed = a.seed;
    try {
        cfg.validate();
    } catch (const Error &e) {
        throw ParseError(e.what());
    }

    nlohmann::json result;
    if (a.prior.empty()) {
        const RobustResult r = ransac(m, cfg);
        result = {{"t_s", pose_to_json(r.pose)}, {"t_t", nullptr},  {"t_1", nullptr},
                  {"t_u", nullptr},              {"t_final", nullptr}, {"weights", nullptr}};
        result["inliers"] = {{"round1", r.hypothesis.inlier_count}, {"round2", nullptr}};
        result["scores"] = {{"round1",
                             {{"inlier_count", r.hypothesis.inlier_count},
                              {"prior_term", r.hypothesis.prior_term},
                              {"total_score", r.hypothesis.total_score}}},
                            {"round2", nullptr}};
        result["round1_failed"] = false;
        result["round2_failed"] = false;
    } else {
        PriorProvider prior = parse_prior_spec(a.prior);
        PriorContext ctx;
        if (auto *oracle = std::get_if<SyntheticOracle>(&prior)) {
            if (a.gt_file.empty())
                throw ParseError("an oracle prior needs the ground-truth pose: --gt FILE");
            oracle->seed = splitmix64(a.seed ^ 0x0dd1ce5ULL);
            ctx.ground_truth = read_pose_json(a.gt_file);
        }
        const WeightProvider weights = parse_weights_spec(a.weights);
        const PipelineOutput po = run_pipeline(m, prior, weights, cfg, ctx);
        if (po.round1_failed && po.round2_failed)
            throw Error(ErrorCode::NoValidHypothesis, "no hypothesis found in either solver round");
        result = pipeline_output_to_json(po);
    }
    out << result.dump(2) << '\n';
    (void)err;
    return kExitOk;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int cmd_bench(const BenchArgs &a, std::ostream &out) {
    SweepConfig cfg = sweep_config_from_json(read_json_file(a.config_file));
    if (a.seed)
        cfg.seed = *a.seed;
    if (a.threads) {
        if (*a.threads < 1)
            throw ParseError("--threads must be >= 1");
        cfg.threads = *a.threads;
    }
    const std::vector<SweepRow> rows = run_sweep(cfg);
    const std::string csv = sweep_to_csv(rows);
    {
        std::ofstream f(a.out_csv, std::ios::binary);
        if (!f)
            throw ParseError("cannot write '" + a.out_csv + "'");
        f << csv;
    }
    const std::string manifest_path = a.manifest.empty() ? a.out_csv + ".manifest.json" : a.manifest;
    const nlohmann::json manifest = {{"tool", "priorpose"},
                                     {"version", kToolVersion},
                                     {"seed", cfg.seed},
                                     {"timestamp", utc_timestamp()},
                                     {"output", a.out_csv},
                                     {"config", sweep_config_to_json(cfg)}};
    std::ofstream mf(manifest_path);
    if (!mf)
        throw ParseError("cannot write '" + manifest_path + "'");
    mf << manifest.dump(2) << '\n';
    out << "wrote " << rows.size() << " rows to " << a.out_csv << " (manifest " << manifest_path << ")\n";
    return kExitOk;
}

int cmd_tiebreak(TiebreakArgs &a, std::ostream &out) {
    a.opts.robust = a.robust.cfg;
    try {
        a.opts.robust.validate();
    } catch (const Error &e) {
        throw ParseError(e.what());
    }
    const TiebreakReport report = run_tiebreak_demo(a.opts);
    out << format_tiebreak_report(report, a.opts);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Relative pose estimation with prior-guided robust scoring and pose fusion", "priorpose"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    EstimateArgs est;
    auto *estimate = app.add_subcommand("estimate", "Estimate the relative pose of one image pair");
    estimate->add_option("correspondences", est.corr_file, "CSV with header x1_px,y1_px,x2_px,y2_px")->required();
    estimate->add_option("--intrinsics", est.intrinsics_file, "JSON {fx, fy, cx, cy}");
    auto *fx = estimate->add_option("--fx", est.fx);
    auto *fy = estimate->add_option("--fy", est.fy);
    auto *cx = estimate->add_option("--cx", est.cx);
    auto *cy = estimate->add_option("--cy", est.cy);
    fx->needs(fy, cx, cy);
    estimate->add_option("--prior", est.prior, "Pose JSON file or oracle:rot_deg,dir_deg,scale_rel");
    estimate->add_option("--weights", est.weights, "fixed:wr,wt | logistic:mid,steep | weights JSON file")
        ->capture_default_str();
    estimate->add_option("--gt", est.gt_file, "Ground-truth pose JSON (oracle prior only)");
    estimate->add_option("--seed", est.seed)->capture_default_str();
    est.robust.attach(estimate);

    BenchArgs bench;
    auto *bench_cmd = app.add_subcommand("bench", "Run a synthetic noise/outlier sweep");
    bench_cmd->add_option("config", bench.config_file, "Bench config JSON or a previous run manifest")->required();
    bench_cmd->add_option("--out", bench.out_csv, "Output CSV")->capture_default_str();
    bench_cmd->add_option("--manifest", bench.manifest, "Manifest path (default: <out>.manifest.json)");
    bench_cmd->add_option("--seed", bench.seed, "Override the config seed");
    bench_cmd->add_option("--threads", bench.threads, "Worker threads");

    TiebreakArgs tb;
    auto *demo = app.add_subcommand("demo-tiebreak", "Nine correspondences, five inliers: classic vs prior-guided");
    demo->add_option("--seeds", tb.opts.seeds, "Number of scenarios")->capture_default_str();
    demo->add_option("--seed", tb.opts.seed)->capture_default_str();
    tb.robust.attach(demo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (estimate->parsed())
            return cmd_estimate(est, fx->count() > 0, out, err);
        if (bench_cmd->parsed())
            return cmd_bench(bench, out);
        return cmd_tiebreak(tb, out);
    } catch (const ParseError &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        if (e.code() == ErrorCode::NoValidHypothesis)
            return kExitNoHypothesis;
        if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::TooFewCorrespondences)
            return kExitUsage;
        return 1;
    }
}

}  // namespace priorpose

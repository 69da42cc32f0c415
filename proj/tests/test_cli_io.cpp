#include "priorpose/cli.hpp"
#include "priorpose/geometry.hpp"
#include "priorpose/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

using namespace priorpose;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "priorpose");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, const std::string &text) { std::ofstream(path, std::ios::binary) << text; }

std::string golden(const std::string &name) { return slurp(std::string(PRIORPOSE_GOLDEN_DIR) + "/" + name); }

void collect_keys(const nlohmann::json &j, const std::string &prefix, std::set<std::string> &out) {
    if (!j.is_object())
        return;
    for (const auto &[k, v] : j.items()) {
        const std::string key = prefix.empty() ? k : prefix + "." + k;
        out.insert(key);
        if (key.find("rotation") == std::string::npos && key.find("translation") == std::string::npos)
            collect_keys(v, key, out);
    }
}

GeneratedPair fixture_pair(uint64_t seed) {
    SceneConfig scene;
    scene.num_points = 80;
    Rng rng = derive_rng(seed, {0});
    return generate_pair(scene, rng);
}

void write_pair_csv(const std::string &path, const PixelCorrespondenceSet &px) {
    std::ofstream f(path);
    write_correspondences_csv(f, px);
}

}  // namespace

TEST_CASE("correspondence CSV parsing") {
    std::istringstream ok("x1_px,y1_px,x2_px,y2_px\n1,2,3,4\n\n5.5, 6e1 ,7,+8\n");
    const auto m = parse_correspondences_csv(ok);
    REQUIRE(m.size() == 2);
    CHECK(m[1].x1 == Eigen::Vector2d(5.5, 60));
    CHECK(m[1].x2 == Eigen::Vector2d(7, 8));

    auto line_of = [](const std::string &text) {
        std::istringstream in(text);
        try {
            parse_correspondences_csv(in);
        } catch (const ParseError &e) {
            return e.line();
        }
        return size_t{9999};
    };
    CHECK(line_of("x,y\n1,2,3,4\n") == 1);
    CHECK(line_of("x1_px,y1_px,x2_px,y2_px\n1,2,3,4\n1,2,abc,4\n") == 3);
    CHECK(line_of("x1_px,y1_px,x2_px,y2_px\n1,2,3\n") == 2);
    CHECK(line_of("x1_px,y1_px,x2_px,y2_px\n1,2,3,4,\n") == 2);
    CHECK(line_of("x1_px,y1_px,x2_px,y2_px\n1,2,nan,4\n") == 2);
    CHECK(line_of("") == 0);

    PixelCorrespondenceSet px{{{0.1, 1.0 / 3.0}, {639.999, 1e-7}}};
    std::stringstream rt;
    write_correspondences_csv(rt, px);
    const auto back = parse_correspondences_csv(rt);
    CHECK(back[0].x1 == px[0].x1);
    CHECK(back[0].x2 == px[0].x2);
}

TEST_CASE("JSON records") {
    Pose p;
    p.rotation << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    p.translation = {0.5, -0.25, 2.0};
    const std::string expected = golden("pose.json");
    CHECK(pose_to_json(p).dump() + "\n" == expected);
    CHECK(pose_from_json(nlohmann::json::parse(expected)) == p);

    CHECK_THROWS_AS(pose_from_json(nlohmann::json::parse(R"({"rotation":[1,0,0],"translation":[0,0,0]})")),
                    ParseError);
    CHECK_THROWS_AS(intrinsics_from_json(nlohmann::json::parse(R"({"fx":-1,"fy":1,"cx":0,"cy":0})")), ParseError);
    CHECK_THROWS_AS(intrinsics_from_json(nlohmann::json::parse(R"({"fx":1,"fy":1,"cx":0})")), ParseError);
    CHECK_THROWS_AS(weights_from_json(nlohmann::json::parse(R"({"w_r":2,"w_t":0})")), ParseError);
    const CameraIntrinsics k = intrinsics_from_json(nlohmann::json::parse(R"({"fx":585,"fy":585,"cx":320,"cy":240})"));
    CHECK(k == CameraIntrinsics{585, 585, 320, 240});
}

TEST_CASE("provider specifications") {
    const PriorProvider o = parse_prior_spec("oracle:5,10,0.2");
    REQUIRE(std::holds_alternative<SyntheticOracle>(o));
    CHECK(std::get<SyntheticOracle>(o).trans_dir_noise_deg == 10.0);
    CHECK(std::holds_alternative<PoseFromFile>(parse_prior_spec("prior.json")));
    CHECK_THROWS_AS(parse_prior_spec("oracle:1,2"), ParseError);
    CHECK_THROWS_AS(parse_prior_spec("oracle:-1,2,3"), ParseError);

    const WeightProvider f = parse_weights_spec("fixed:1,0.5");
    REQUIRE(std::holds_alternative<FixedWeights>(f));
    CHECK(std::get<FixedWeights>(f).weights == FusionWeights{1.0, 0.5});
    const WeightProvider l = parse_weights_spec("logistic:150,0.05");
    REQUIRE(std::holds_alternative<InlierLogistic>(l));
    CHECK(std::get<InlierLogistic>(l).params.midpoint_count == 150.0);
    CHECK_THROWS_AS(parse_weights_spec("fixed:1.5,0"), ParseError);
    CHECK_THROWS_AS(parse_weights_spec("logistic:1,x"), ParseError);
    CHECK(weights_spec(l) == "logistic:150,0.050000000000000003");
}

TEST_CASE("bench config parsing") {
    const SweepConfig def = sweep_config_from_json(nlohmann::json::object());
    CHECK(sweep_settings(def).size() * def.methods.size() == 4 * 1 * 4 + 1 * 5 * 4);

    const nlohmann::json j = nlohmann::json::parse(R"({
        "seed": 9, "trials": 7, "methods": ["solver", "full"], "noise_levels": [0, 4],
        "outlier_levels": [], "alpha": 1.5, "tau": 0.001, "prior": "oracle:1,2,0.05",
        "weights": "fixed:0.3,0.4", "scene": {"num_points": 50, "fx": 500}})");
    const SweepConfig c = sweep_config_from_json(j);
    CHECK(c.seed == 9);
    CHECK(c.trials == 7);
    CHECK(c.methods == std::vector<Method>{Method::Solver, Method::Full});
    CHECK(c.robust.alpha == 1.5);
    CHECK(c.oracle.scale_noise_rel == 0.05);
    CHECK(c.scene.num_points == 50);
    CHECK(c.scene.intrinsics.fx == 500);

    // Round trip through the manifest form.
    const SweepConfig again = sweep_config_from_json({{"config", sweep_config_to_json(c)}});
    CHECK(sweep_config_to_json(again) == sweep_config_to_json(c));

    CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"methods": ["magic"]})")), ParseError);
    CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"noise_levels": [-1]})")), ParseError);
    CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"trials": "many"})")), ParseError);
    CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"noise": [1]})")), ParseError);
    CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"prior": "p.json"})")), ParseError);
}

TEST_CASE("cli estimate") {
    const GeneratedPair pair = fixture_pair(5);
    write_pair_csv("cli_exact.csv", pair.pixels);
    write_file("cli_intrinsics.json", R"({"fx":585,"fy":585,"cx":320,"cy":240})");
    write_file("cli_gt.json", pose_to_json(pair.ground_truth).dump());

    SUBCASE("no prior") {
        const CliResult r = cli({"estimate", "cli_exact.csv", "--fx", "585", "--fy", "585", "--cx", "320", "--cy",
                                 "240", "--iterations", "200"});
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        const Pose ts = pose_from_json(j.at("t_s"));
        CHECK(geodesic_rotation_error(ts.rotation, pair.ground_truth.rotation) < 0.1);
        CHECK(j.at("t_final").is_null());
        CHECK(j.at("inliers").at("round1") == 80);
    }
    SUBCASE("prior file with fixed (1,1) weights returns the prior") {
        Pose prior = pair.ground_truth;
        prior.rotation = axis_angle(Eigen::Vector3d::UnitX(), 0.05) * prior.rotation;
        prior.translation *= 1.2;
        write_file("cli_prior.json", pose_to_json(prior).dump());
        const CliResult r = cli({"estimate", "cli_exact.csv", "--intrinsics", "cli_intrinsics.json", "--prior",
                                 "cli_prior.json", "--weights", "fixed:1,1", "--iterations", "100"});
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        std::set<std::string> keys;
        collect_keys(j, "", keys);
        std::set<std::string> expected;
        std::istringstream in(golden("estimate_keys.txt"));
        for (std::string line; std::getline(in, line);)
            if (!line.empty())
                expected.insert(line);
        CHECK(keys == expected);
        const Pose tf = pose_from_json(j.at("t_final"));
        CHECK((tf.rotation - prior.rotation).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((tf.translation - prior.translation).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("oracle prior with ground truth") {
        const CliResult r = cli({"estimate", "cli_exact.csv", "--intrinsics", "cli_intrinsics.json", "--prior",
                                 "oracle:10,10,0.1", "--gt", "cli_gt.json", "--iterations", "100", "--seed", "3"});
        REQUIRE(r.code == 0);
        const CliResult again = cli({"estimate", "cli_exact.csv", "--intrinsics", "cli_intrinsics.json", "--prior",
                                     "oracle:10,10,0.1", "--gt", "cli_gt.json", "--iterations", "100", "--seed", "3"});
        CHECK(again.out == r.out);
        const CliResult missing = cli({"estimate", "cli_exact.csv", "--intrinsics", "cli_intrinsics.json", "--prior",
                                       "oracle:10,10,0.1"});
        CHECK(missing.code == 2);
        CHECK(missing.err.find("--gt") != std::string::npos);
    }
    SUBCASE("errors") {
        PixelCorrespondenceSet four(pair.pixels.begin(), pair.pixels.begin() + 4);
        write_pair_csv("cli_four.csv", four);
        const CliResult r4 = cli({"estimate", "cli_four.csv", "--intrinsics", "cli_intrinsics.json"});
        CHECK(r4.code == 2);
        CHECK(r4.err.find("at least 5") != std::string::npos);

        write_file("cli_bad.csv", "x1_px,y1_px,x2_px,y2_px\n1,2,3,4\n1,2,x,4\n");
        const CliResult rb = cli({"estimate", "cli_bad.csv", "--intrinsics", "cli_intrinsics.json"});
        CHECK(rb.code == 2);
        CHECK(rb.err.find("line 3") != std::string::npos);

        write_file("cli_same.csv", "x1_px,y1_px,x2_px,y2_px\n1,2,3,4\n1,2,3,4\n1,2,3,4\n1,2,3,4\n1,2,3,4\n1,2,3,4\n");
        const CliResult rs =
            cli({"estimate", "cli_same.csv", "--intrinsics", "cli_intrinsics.json", "--iterations", "20"});
        CHECK(rs.code == 3);

        CHECK(cli({"estimate", "cli_exact.csv"}).code == 2);
        CHECK(cli({"estimate", "missing.csv", "--intrinsics", "cli_intrinsics.json"}).code == 2);
        CHECK(cli({"estimate", "cli_exact.csv", "--intrinsics", "cli_intrinsics.json", "--sigma", "-1"}).code == 2);
        CHECK(cli({"frobnicate"}).code == 2);
        CHECK(cli({}).code == 2);
        CHECK(cli({"--help"}).code == 0);
    }
}

TEST_CASE("cli bench writes deterministic CSV and a manifest") {
    write_file("cli_bench.json", R"({"seed": 3, "trials": 2, "noise_levels": [0, 16], "outlier_levels": [0.5],
        "iterations": 40, "scene": {"num_points": 40}})");
    const CliResult a = cli({"bench", "cli_bench.json", "--out", "cli_a.csv"});
    REQUIRE(a.code == 0);
    const CliResult b = cli({"bench", "cli_bench.json", "--out", "cli_b.csv", "--threads", "2"});
    REQUIRE(b.code == 0);
    const std::string csv = slurp("cli_a.csv");
    CHECK(csv == slurp("cli_b.csv"));
    CHECK(csv.substr(0, csv.find('\n') + 1) == golden("sweep_header.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 4);

    const auto manifest = nlohmann::json::parse(slurp("cli_a.csv.manifest.json"));
    CHECK(manifest.at("seed") == 3);
    CHECK(manifest.at("version") == kToolVersion);
    CHECK(manifest.contains("timestamp"));
    CHECK(manifest.at("config").at("trials") == 2);

    const CliResult c = cli({"bench", "cli_a.csv.manifest.json", "--out", "cli_c.csv"});
    REQUIRE(c.code == 0);
    CHECK(slurp("cli_c.csv") == csv);

    write_file("cli_badmethod.json", R"({"methods": ["solver", "oracle"]})");
    CHECK(cli({"bench", "cli_badmethod.json"}).code == 2);
    write_file("cli_badnoise.json", R"({"noise_levels": [-4]})");
    CHECK(cli({"bench", "cli_badnoise.json"}).code == 2);
    write_file("cli_broken.json", R"({"seed": )");
    CHECK(cli({"bench", "cli_broken.json"}).code == 2);
}

TEST_CASE("cli demo-tiebreak") {
    const CliResult r = cli({"demo-tiebreak", "--seeds", "3", "--iterations", "200"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("alpha*beta") != std::string::npos);
    CHECK(r.out.find("prior-guided selects") != std::string::npos);
    CHECK(cli({"demo-tiebreak", "--seeds", "0"}).code == 2);
}

#include "priorpose/io.hpp"
#include "priorpose/fusion.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace priorpose {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(trim(item));
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string &s, size_t line) {
    double v = 0.0;
    const char *first = s.data();
    const char *last = s.data() + s.size();
    if (!s.empty() && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line) + ": invalid number '" + s + "'", line);
    return v;
}

std::ifstream open_input(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open '" + path + "'");
    return in;
}

double number_field(const nlohmann::json &j, const char *key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ParseError(std::string("missing numeric field '") + key + "'");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v))
        throw ParseError(std::string("non-finite field '") + key + "'");
    return v;
}

}  // namespace

PixelCorrespondenceSet parse_correspondences_csv(std::istream &in) {
    std::string line;
    size_t lineno = 0;
    bool header_seen = false;
    PixelCorrespondenceSet out;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        if (!header_seen) {
            if (t != "x1_px,y1_px,x2_px,y2_px")
                throw ParseError("line " + std::to_string(lineno) + ": expected header 'x1_px,y1_px,x2_px,y2_px'",
                                 lineno);
            header_seen = true;
            continue;
        }
        const auto fields = split(t, ',');
        if (fields.size() != 4)
            throw ParseError("line " + std::to_string(lineno) + ": expected 4 fields, got " +
                                 std::to_string(fields.size()),
                             lineno);
        out.push_back({{parse_double(fields[0], lineno), parse_double(fields[1], lineno)},
                       {parse_double(fields[2], lineno), parse_double(fields[3], lineno)}});
    }
    if (!header_seen)
        throw ParseError("empty correspondence file", lineno);
    return out;
}

PixelCorrespondenceSet read_correspondences_csv(const std::string &path) {
    auto in = open_input(path);
    return parse_correspondences_csv(in);
}

void write_correspondences_csv(std::ostream &out, const PixelCorrespondenceSet &m) {
    out << "x1_px,y1_px,x2_px,y2_px\n";
    out << std::setprecision(17);
    for (const auto &c : m)
        out << c.x1(0) << ',' << c.x1(1) << ',' << c.x2(0) << ',' << c.x2(1) << '\n';
}

nlohmann::json read_json_file(const std::string &path) {
    auto in = open_input(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError("'" + path + "': " + e.what(), 0);
    }
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json &j) {
    CameraIntrinsics k{number_field(j, "fx"), number_field(j, "fy"), number_field(j, "cx"), number_field(j, "cy")};
    if (!k.valid())
        throw ParseError("intrinsics: fx and fy must be positive");
    return k;
}

CameraIntrinsics read_intrinsics_json(const std::string &path) { return intrinsics_from_json(read_json_file(path)); }

nlohmann::json pose_to_json(const Pose &pose) {
    nlohmann::json rot = nlohmann::json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            rot.push_back(pose.rotation(i, j));
    return {{"rotation", rot},
            {"translation", {pose.translation(0), pose.translation(1), pose.translation(2)}}};
}

Pose pose_from_json(const nlohmann::json &j) {
    if (!j.is_object() || !j.contains("rotation") || !j.contains("translation"))
        throw ParseError("pose: expected {rotation: [9], translation: [3]}");
    const auto &r = j.at("rotation");
    const auto &t = j.at("translation");
    if (!r.is_array() || r.size() != 9 || !t.is_array() || t.size() != 3)
        throw ParseError("pose: rotation needs 9 entries and translation 3");
    Pose p;
    for (int i = 0; i < 9; ++i) {
        if (!r[static_cast<size_t>(i)].is_number())
            throw ParseError("pose: non-numeric rotation entry");
        p.rotation(i / 3, i % 3) = r[static_cast<size_t>(i)].get<double>();
    }
    for (int i = 0; i < 3; ++i) {
        if (!t[static_cast<size_t>(i)].is_number())
            throw ParseError("pose: non-numeric translation entry");
        p.translation(i) = t[static_cast<size_t>(i)].get<double>();
    }
    return p;
}

Pose read_pose_json(const std::string &path) { return pose_from_json(read_json_file(path)); }

FusionWeights weights_from_json(const nlohmann::json &j) {
    FusionWeights w{number_field(j, "w_r"), number_field(j, "w_t")};
    try {
        w.validate();
    } catch (const Error &e) {
        throw ParseError(e.what());
    }
    return w;
}

FusionWeights read_weights_json(const std::string &path) { return weights_from_json(read_json_file(path)); }

nlohmann::json pipeline_output_to_json(const PipelineOutput &out) {
    nlohmann::json j;
    j["t_s"] = pose_to_json(out.t_s);
    j["t_t"] = pose_to_json(out.t_t);
    j["t_1"] = pose_to_json(out.t_1);
    j["t_u"] = pose_to_json(out.t_u);
    j["t_final"] = pose_to_json(out.t_final);
    j["weights"] = {{"w_r", out.weights.w_r}, {"w_t", out.weights.w_t}};
    auto round = [](const std::optional<ScoredHypothesis> &h) -> nlohmann::json {
        if (!h)
            return nullptr;
        return {{"inlier_count", h->inlier_count}, {"prior_term", h->prior_term}, {"total_score", h->total_score}};
    };
    j["inliers"] = {{"round1", out.round1 ? nlohmann::json(out.round1->inlier_count) : nlohmann::json(nullptr)},
                    {"round2", out.round2 ? nlohmann::json(out.round2->inlier_count) : nlohmann::json(nullptr)}};
    j["scores"] = {{"round1", round(out.round1)}, {"round2", round(out.round2)}};
    j["round1_failed"] = out.round1_failed;
    j["round2_failed"] = out.round2_failed;
    return j;
}

}  // namespace priorpose

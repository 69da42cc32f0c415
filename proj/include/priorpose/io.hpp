#pragma once

#include "priorpose/types.hpp"

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace priorpose {

struct FusionWeights;
struct PipelineOutput;

/// Malformed input file. `line` is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string &what, size_t line = 0) : std::runtime_error(what), line_(line) {}
    size_t line() const { return line_; }

  private:
    size_t line_;
};

// Correspondence files: CSV with header `x1_px,y1_px,x2_px,y2_px`, one match per row.
PixelCorrespondenceSet parse_correspondences_csv(std::istream &in);
PixelCorrespondenceSet read_correspondences_csv(const std::string &path);
void write_correspondences_csv(std::ostream &out, const PixelCorrespondenceSet &m);

// {"fx": .., "fy": .., "cx": .., "cy": ..}
CameraIntrinsics intrinsics_from_json(const nlohmann::json &j);
CameraIntrinsics read_intrinsics_json(const std::string &path);

// {"rotation": [9 reals, row-major], "translation": [x, y, z]}
nlohmann::json pose_to_json(const Pose &pose);
Pose pose_from_json(const nlohmann::json &j);
Pose read_pose_json(const std::string &path);

// {"w_r": .., "w_t": ..}
FusionWeights weights_from_json(const nlohmann::json &j);
FusionWeights read_weights_json(const std::string &path);

nlohmann::json pipeline_output_to_json(const PipelineOutput &out);

nlohmann::json read_json_file(const std::string &path);

}  // namespace priorpose

#pragma once

#include "shapekit/body_model.hpp"
#include "shapekit/decompose.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace shapekit {

// Shortest round-tripping decimal form.
std::string format_double(double v);

// {"n": n, "bone_lengths": [...], "slice_widths": [[part 0 slices], ...]}
void write_descriptor_json(const ShapeDescriptor& desc, const std::filesystem::path& path);
ShapeDescriptor read_descriptor_json(const std::filesystem::path& path);
std::string descriptor_to_json(const ShapeDescriptor& desc);

// One coefficient vector per line, comma separated.
std::vector<Eigen::VectorXd> read_beta_csv(const std::filesystem::path& path);
void write_beta_csv(const std::vector<Eigen::VectorXd>& rows, const std::filesystem::path& path);

// J rows of axis-angle (rx, ry, rz), optionally followed by one translation row.
Pose read_pose_csv(const std::filesystem::path& path, int num_joints);

void write_obj(const Points3& vertices, const Faces& faces, const std::filesystem::path& path);

struct ObjMesh {
  Points3 vertices;
  Faces faces;
};
ObjMesh read_obj(const std::filesystem::path& path);

}  // namespace shapekit

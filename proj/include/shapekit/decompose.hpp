#pragma once

#include "shapekit/body_model.hpp"

#include <vector>

namespace shapekit {

/// Part segmentation and slicing of a body model.
///
/// Part j is the set of vertices whose largest blend weight belongs to joint j
/// (ties go to the lowest joint index). Each part is measured against a
/// central bone; slices split the part into n equal-length bins along that
/// bone, spanning the axial extent of the part's template vertices.
struct PartDecomposition {
  int n = 1;
  std::vector<int> part_of_vertex;
  std::vector<Bone> bone_of_part;
  // Skeleton bone index (see BodyModel::bones) whose length normalizes part j.
  std::vector<int> bone_index_of_part;
  std::vector<int> slice_of_vertex;
  // Axial extent [lo, hi] of each part's template vertices, in units of the
  // central bone length measured from its first joint.
  std::vector<double> extent_lo;
  std::vector<double> extent_hi;
  std::vector<int> cell_count;        // vertices per (part, slice) cell, index part*n + slice
  Eigen::VectorXd template_widths;    // nJ, meters

  int num_parts() const { return static_cast<int>(bone_of_part.size()); }
  int cell(int part, int slice) const { return part * n + slice; }
  // Slice of a point whose normalized projection on part j's bone is u.
  int slice_for(int part, double u) const;
};

// Bone lengths (one per skeleton bone) and mean slice widths (n per part).
struct ShapeDescriptor {
  int n = 1;
  Eigen::VectorXd bone_lengths;
  Eigen::VectorXd slice_widths;  // index part*n + slice
};

class EmptySlice : public Error {
 public:
  EmptySlice(int part, int slice)
      : Error("empty slice " + std::to_string(slice) + " of part " + std::to_string(part) +
              "; slicing number too large for this model"),
        part_(part),
        slice_(slice) {}
  int part() const { return part_; }
  int slice() const { return slice_; }

 private:
  int part_;
  int slice_;
};

inline constexpr double kDegenerateBone = 1e-9;
inline constexpr double kSliceEpsilon = 1e-9;

// Central bone of every part: from the part's joint to its continuing child;
// leaves use (parent, joint). The model's part_bones override wins when set.
std::vector<Bone> default_part_bones(const BodyModel& model, const Points3& template_joints);

PartDecomposition build_decomposition(const BodyModel& model, int n);

// Distance from p to the infinite line through a and b (to a when |b - a| < 1e-9).
double point_line_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                           const Eigen::Vector3d& b);
double point_line_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                           const Eigen::Vector2d& b);

// Normalized projection parameter of p on the segment a -> b (0 at a, 1 at b).
double bone_parameter(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b);

double vertex_width(const Points3& mesh, const Points3& joints, const PartDecomposition& decomp,
                    int k);

Eigen::VectorXd bone_lengths(const BodyModel& model, const Points3& joints);

ShapeDescriptor extract_descriptor(const BodyModel& model, const PartDecomposition& decomp,
                                   const Points3& mesh);

}  // namespace shapekit

#pragma once

#include "shapekit/common.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace shapekit {

inline constexpr int kNoParent = -1;

// A joint pair (a, b); the bone points from a to b.
struct Bone {
  int a = 0;
  int b = 0;
  friend bool operator==(const Bone&, const Bone&) = default;
};

/// Linear-PCA, linear-blend-skinned body model (SMPL layout).
///
/// The shape basis is stored flattened: row 3k + c holds coordinate c of
/// vertex k, one column per shape coefficient. Immutable once validated.
struct BodyModel {
  std::string name;
  Points3 template_vertices;        // K x 3, meters
  Eigen::MatrixXd shape_basis;      // 3K x s, meters per unit coefficient
  Eigen::MatrixXd blend_weights;    // K x J
  Eigen::MatrixXd joint_regressor;  // J x K
  std::vector<int> parents;         // length J, root carries kNoParent
  Faces faces;                      // F x 3
  // Optional per-part central bone override, one entry per joint.
  std::vector<Bone> part_bones;

  int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
  int num_joints() const { return static_cast<int>(parents.size()); }
  int num_shape() const { return static_cast<int>(shape_basis.cols()); }
  int root() const;

  // Children of joint j in ascending index order.
  std::vector<int> children(int j) const;
  // Joints ordered so every parent precedes its children.
  std::vector<int> topological_order() const;

  // Skeleton bones (parent(j), j) for every non-root joint, in joint order.
  // Index b of this list is the bone index used by ShapeDescriptor.
  std::vector<Bone> bones() const;
  // Bone index whose child endpoint is j; -1 for the root.
  int bone_index_of_joint(int j) const;

  // Throws ShapeMismatch or InvariantViolation naming the offending field.
  void validate() const;
};

struct ShapeCoeffs {
  Eigen::VectorXd beta;

  static ShapeCoeffs zeros(int s) { return {Eigen::VectorXd::Zero(s)}; }
};

struct Pose {
  Points3 axis_angle;  // J x 3, radians, relative to the parent frame
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity(int num_joints);
  // Wraps every rotation magnitude into [0, 2*pi) without changing the rotation.
  Pose normalized() const;
};

BodyModel load_model(const std::filesystem::path& dir);
void save_model(const BodyModel& model, const std::filesystem::path& dir);

// T = template + reshape(S * beta)
Points3 shape_to_mesh(const BodyModel& model, const ShapeCoeffs& beta);

// J = joint_regressor * mesh
Points3 regress_joints(const BodyModel& model, const Points3& mesh);

// World transform of every joint for a pose applied to a rest skeleton.
std::vector<Eigen::Isometry3d> joint_world_transforms(const BodyModel& model,
                                                      const Points3& rest_joints,
                                                      const Pose& pose);

// Posed joint positions from the transform chain.
Points3 pose_joints(const BodyModel& model, const Points3& rest_joints, const Pose& pose);

// Linear blend skinning of a rest mesh; joints are regressed from rest_mesh.
Points3 pose_mesh(const BodyModel& model, const Points3& rest_mesh, const Pose& pose);

}  // namespace shapekit

#pragma once

#include "shapekit/decompose.hpp"
#include "shapekit/rng.hpp"

#include <Eigen/Core>

namespace shapekit {

// Image-plane transform T = S R with S = diag(a, b) and R a rotation by phi,
// applied about `center` (pixels).
struct AffineAugment {
  double a = 1.0;
  double b = 1.0;
  double phi = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();

  Eigen::Matrix2d matrix() const;
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  void validate() const;
};

// Aspect ratio a/b ~ U(0.4, 1.0) with probability 1/3, else U(1.0, 2.5);
// a * b = 1; phi ~ U(-pi/6, pi/6).
AffineAugment sample_augment(Rng& rng, const Eigen::Vector2d& center = Eigen::Vector2d::Zero());

// Orthographic camera: pixel = scale * (x, y) + offset, depth (z) dropped.
struct OrthoCamera {
  double scale = 1.0;  // pixels per meter
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();

  Eigen::Vector2d project(const Eigen::Vector3d& p) const;
  void validate() const;
};

// Projected geometry with the part bookkeeping needed to recompute widths.
struct Projected2D {
  Points2 joints_2d;
  Points2 vertex_2d;
  Eigen::VectorXd widths_2d;        // per vertex, distance to its part's 2D bone line
  Eigen::VectorXd bone_lengths_2d;  // per part, length of its projected central bone
  Eigen::VectorXd slice_widths_2d;  // per (part, slice) cell, mean of widths_2d
  int n = 1;
  std::vector<int> part_of_vertex;
  std::vector<int> slice_of_vertex;
  std::vector<int> cell_count;
  std::vector<Bone> bone_of_part;
};

class DegenerateBone2D : public Error {
 public:
  explicit DegenerateBone2D(int part)
      : Error("projected central bone of part " + std::to_string(part) + " is degenerate"),
        part_(part) {}
  int part() const { return part_; }

 private:
  int part_;
};

class Unsolvable : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDegenerateBone2D = 1e-9;  // pixels

Projected2D project(const BodyModel& model, const PartDecomposition& decomp,
                    const Points3& posed_mesh, const Points3& posed_joints, const OrthoCamera& cam);

// Maps every 2D point through the transform and recomputes all lengths and
// widths from the mapped points.
Projected2D transform_2d(const Projected2D& p, const AffineAugment& aug);

// Post-transform bone length of every part, from the mapped joints.
Eigen::VectorXd transformed_bone_lengths_2d(const Projected2D& p, const AffineAugment& aug);

// Closed form: w' = (a b l / l') w for every vertex, l and l' the 2D lengths
// of its part's bone before and after the transform.
Eigen::VectorXd derive_widths_2d(const Projected2D& p, const AffineAugment& aug);

// Per (part, slice) means of derive_widths_2d.
Eigen::VectorXd derive_slice_widths_2d(const Projected2D& p, const AffineAugment& aug);

// Per-part factor (a b l / l') applied to 3D slice widths, rescaled for a
// change of camera scale: w' = (scale_before / scale_after) (a b l / l') w.
// Both scales are in pixels per meter; scale_after is caller-supplied.
Eigen::VectorXd derive_widths_3d(const ShapeDescriptor& desc, const Projected2D& p,
                                 const AffineAugment& aug, double scale_before,
                                 double scale_after);

struct StretchedSkeleton {
  Eigen::VectorXd bone_lengths;  // one per skeleton bone
  Points3 posed_joints;          // camera-frame joints reproducing the target projection
};

// Per bone, keeps the depth offset between its joints and replaces the
// in-plane offset with the one the transformed 2D joints demand.
StretchedSkeleton stretch_bones_to_projection(const BodyModel& model, const Points3& rest_joints,
                                              const Points3& posed_joints,
                                              const Projected2D& p_before,
                                              const Projected2D& p_after,
                                              const OrthoCamera& cam_before,
                                              const OrthoCamera& cam_after);

}  // namespace shapekit

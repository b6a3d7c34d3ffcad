#include "shapekit/augment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shapekit {

namespace {

void recompute_widths(Projected2D& p) {
  const auto J = static_cast<int>(p.bone_of_part.size());
  p.bone_lengths_2d.resize(J);
  for (int j = 0; j < J; ++j) {
    const Bone bone = p.bone_of_part[j];
    p.bone_lengths_2d[j] = (p.joints_2d.row(bone.b) - p.joints_2d.row(bone.a)).norm();
  }
  const auto K = p.vertex_2d.rows();
  p.widths_2d.resize(K);
  p.slice_widths_2d = Eigen::VectorXd::Zero(J * p.n);
  for (Eigen::Index k = 0; k < K; ++k) {
    const int j = p.part_of_vertex[k];
    const Bone bone = p.bone_of_part[j];
    p.widths_2d[k] = point_line_distance(Eigen::Vector2d(p.vertex_2d.row(k).transpose()),
                                         Eigen::Vector2d(p.joints_2d.row(bone.a).transpose()),
                                         Eigen::Vector2d(p.joints_2d.row(bone.b).transpose()));
    p.slice_widths_2d[j * p.n + p.slice_of_vertex[k]] += p.widths_2d[k];
  }
  for (Eigen::Index c = 0; c < p.slice_widths_2d.size(); ++c)
    if (p.cell_count[c] > 0) p.slice_widths_2d[c] /= p.cell_count[c];
}

Eigen::VectorXd part_factors(const Projected2D& p, const AffineAugment& aug) {
  const Eigen::VectorXd after = transformed_bone_lengths_2d(p, aug);
  const auto J = after.size();
  std::vector<bool> used(J, false);
  for (int j : p.part_of_vertex) used[j] = true;
  Eigen::VectorXd factor(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    if (after[j] < kDegenerateBone2D) {
      if (used[j]) throw DegenerateBone2D(static_cast<int>(j));
      factor[j] = 0.0;
      continue;
    }
    factor[j] = aug.a * aug.b * p.bone_lengths_2d[j] / after[j];
  }
  return factor;
}

}  // namespace

Eigen::Matrix2d AffineAugment::matrix() const {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  return Eigen::Vector2d(a, b).asDiagonal() * rot;
}

Eigen::Vector2d AffineAugment::apply(const Eigen::Vector2d& p) const {
  return center + matrix() * (p - center);
}

void AffineAugment::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("augment scales a, b must be > 0");
  if (!std::isfinite(phi)) throw std::invalid_argument("augment angle must be finite");
}

AffineAugment sample_augment(Rng& rng, const Eigen::Vector2d& center) {
  const double ratio = rng.uniform() < 1.0 / 3.0 ? rng.uniform(0.4, 1.0) : rng.uniform(1.0, 2.5);
  AffineAugment aug;
  aug.a = std::sqrt(ratio);
  aug.b = 1.0 / aug.a;
  aug.phi = rng.uniform(-std::numbers::pi / 6.0, std::numbers::pi / 6.0);
  aug.center = center;
  return aug;
}

Eigen::Vector2d OrthoCamera::project(const Eigen::Vector3d& p) const {
  return scale * p.head<2>() + offset;
}

void OrthoCamera::validate() const {
  if (!(scale > 0.0)) throw std::invalid_argument("camera scale must be > 0");
}

Projected2D project(const BodyModel& model, const PartDecomposition& decomp,
                    const Points3& posed_mesh, const Points3& posed_joints,
                    const OrthoCamera& cam) {
  cam.validate();
  if (posed_mesh.rows() != model.num_vertices() || posed_joints.rows() != model.num_joints())
    throw DimensionMismatch("posed geometry does not match the model");
  Projected2D p;
  p.n = decomp.n;
  p.part_of_vertex = decomp.part_of_vertex;
  p.slice_of_vertex = decomp.slice_of_vertex;
  p.cell_count = decomp.cell_count;
  p.bone_of_part = decomp.bone_of_part;
  p.joints_2d.resize(posed_joints.rows(), 2);
  for (Eigen::Index j = 0; j < posed_joints.rows(); ++j)
    p.joints_2d.row(j) = cam.project(posed_joints.row(j).transpose()).transpose();
  p.vertex_2d.resize(posed_mesh.rows(), 2);
  for (Eigen::Index k = 0; k < posed_mesh.rows(); ++k)
    p.vertex_2d.row(k) = cam.project(posed_mesh.row(k).transpose()).transpose();
  recompute_widths(p);
  return p;
}

Projected2D transform_2d(const Projected2D& p, const AffineAugment& aug) {
  aug.validate();
  Projected2D out = p;
  for (Eigen::Index j = 0; j < out.joints_2d.rows(); ++j)
    out.joints_2d.row(j) = aug.apply(p.joints_2d.row(j).transpose()).transpose();
  for (Eigen::Index k = 0; k < out.vertex_2d.rows(); ++k)
    out.vertex_2d.row(k) = aug.apply(p.vertex_2d.row(k).transpose()).transpose();
  recompute_widths(out);
  return out;
}

Eigen::VectorXd transformed_bone_lengths_2d(const Projected2D& p, const AffineAugment& aug) {
  aug.validate();
  const Eigen::Matrix2d T = aug.matrix();
  Eigen::VectorXd out(static_cast<Eigen::Index>(p.bone_of_part.size()));
  for (std::size_t j = 0; j < p.bone_of_part.size(); ++j) {
    const Bone bone = p.bone_of_part[j];
    out[j] = (T * (p.joints_2d.row(bone.b) - p.joints_2d.row(bone.a)).transpose()).norm();
  }
  return out;
}

Eigen::VectorXd derive_widths_2d(const Projected2D& p, const AffineAugment& aug) {
  const Eigen::VectorXd factor = part_factors(p, aug);
  Eigen::VectorXd out(p.widths_2d.size());
  for (Eigen::Index k = 0; k < out.size(); ++k)
    out[k] = factor[p.part_of_vertex[k]] * p.widths_2d[k];
  return out;
}

Eigen::VectorXd derive_slice_widths_2d(const Projected2D& p, const AffineAugment& aug) {
  const Eigen::VectorXd factor = part_factors(p, aug);
  Eigen::VectorXd out = p.slice_widths_2d;
  for (Eigen::Index c = 0; c < out.size(); ++c) out[c] *= factor[c / p.n];
  return out;
}

Eigen::VectorXd derive_widths_3d(const ShapeDescriptor& desc, const Projected2D& p,
                                 const AffineAugment& aug, double scale_before,
                                 double scale_after) {
  if (!(scale_before > 0.0) || !(scale_after > 0.0))
    throw std::invalid_argument("camera scales must be > 0");
  if (desc.n != p.n || desc.slice_widths.size() != p.slice_widths_2d.size())
    throw DimensionMismatch("descriptor and projection use different slicing");
  const Eigen::VectorXd factor = part_factors(p, aug);
  Eigen::VectorXd out = desc.slice_widths;
  for (Eigen::Index c = 0; c < out.size(); ++c)
    out[c] *= (scale_before / scale_after) * factor[c / p.n];
  return out;
}

StretchedSkeleton stretch_bones_to_projection(const BodyModel& model, const Points3& rest_joints,
                                              const Points3& posed_joints,
                                              const Projected2D& p_before,
                                              const Projected2D& p_after,
                                              const OrthoCamera& cam_before,
                                              const OrthoCamera& cam_after) {
  cam_before.validate();
  cam_after.validate();
  const int J = model.num_joints();
  if (rest_joints.rows() != J || posed_joints.rows() != J || p_before.joints_2d.rows() != J ||
      p_after.joints_2d.rows() != J)
    throw DimensionMismatch("skeletons must have one row per joint");

  const auto bones = model.bones();
  for (const Bone& bone : bones) {
    const double rest = (rest_joints.row(bone.b) - rest_joints.row(bone.a)).norm();
    const double posed = (posed_joints.row(bone.b) - posed_joints.row(bone.a)).norm();
    if (std::abs(rest - posed) > 1e-6 * std::max(rest, 1.0))
      throw std::invalid_argument("posed skeleton changes the length of bone ending at joint " +
                                  std::to_string(bone.b));
  }
  for (int j = 0; j < J; ++j) {
    const Eigen::Vector2d expect = cam_before.project(posed_joints.row(j).transpose());
    if ((expect - p_before.joints_2d.row(j).transpose()).norm() > 1e-6 * std::max(1.0, expect.norm()))
      throw std::invalid_argument("projection does not match the posed skeleton at joint " +
                                  std::to_string(j));
  }

  StretchedSkeleton out;
  out.bone_lengths.resize(J - 1);
  out.posed_joints.resize(J, 3);
  for (int j : model.topological_order()) {
    const int parent = model.parents[j];
    if (parent == kNoParent) {
      const Eigen::Vector2d xy =
          (p_after.joints_2d.row(j).transpose() - cam_after.offset) / cam_after.scale;
      out.posed_joints.row(j) << xy.x(), xy.y(), posed_joints(j, 2);
      continue;
    }
    const Eigen::Vector3d d = (posed_joints.row(j) - posed_joints.row(parent)).transpose();
    const Eigen::Vector2d target =
        (p_after.joints_2d.row(j) - p_after.joints_2d.row(parent)).transpose();
    if (cam_before.scale * d.head<2>().norm() < kDegenerateBone2D && target.norm() > 1e-6)
      throw Unsolvable("bone ending at joint " + std::to_string(j) +
                       " is perpendicular to the image plane but its target projection is not a point");
    const Eigen::Vector3d stretched(target.x() / cam_after.scale, target.y() / cam_after.scale,
                                    d.z());
    out.posed_joints.row(j) = out.posed_joints.row(parent) + stretched.transpose();
    out.bone_lengths[model.bone_index_of_joint(j)] = stretched.norm();
  }
  return out;
}

}  // namespace shapekit

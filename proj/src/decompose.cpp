#include "shapekit/decompose.hpp"

#include <algorithm>
#include <cmath>

namespace shapekit {

namespace {

int subtree_size(const BodyModel& model, int j) {
  int size = 1;
  for (int c : model.children(j)) size += subtree_size(model, c);
  return size;
}

}  // namespace

std::vector<Bone> default_part_bones(const BodyModel& model, const Points3& template_joints) {
  if (!model.part_bones.empty()) return model.part_bones;
  const int J = model.num_joints();
  std::vector<Bone> bones(J);
  for (int j = 0; j < J; ++j) {
    const auto kids = model.children(j);
    const int parent = model.parents[j];
    if (kids.empty()) {
      bones[j] = {parent, j};
      continue;
    }
    int best = kids.front();
    if (parent == kNoParent) {
      // Root: the child carrying the largest subtree (pelvis -> spine on SMPL).
      int best_size = subtree_size(model, best);
      for (int c : kids) {
        const int size = subtree_size(model, c);
        if (size > best_size) best = c, best_size = size;
      }
    } else {
      // Elsewhere: the child that best continues the incoming bone direction.
      const Eigen::Vector3d incoming =
          (template_joints.row(j) - template_joints.row(parent)).transpose();
      double best_cos = -2.0;
      for (int c : kids) {
        const Eigen::Vector3d out = (template_joints.row(c) - template_joints.row(j)).transpose();
        const double denom = incoming.norm() * out.norm();
        const double cosine = denom > 0.0 ? incoming.dot(out) / denom : -1.0;
        if (cosine > best_cos) best = c, best_cos = cosine;
      }
    }
    bones[j] = {j, best};
  }
  return bones;
}

int PartDecomposition::slice_for(int part, double u) const {
  const double lo = extent_lo[part];
  const double hi = extent_hi[part];
  const double t = hi - lo > 0.0 ? (u - lo) / (hi - lo) : 0.0;
  return static_cast<int>(std::floor(n * std::clamp(t, 0.0, 1.0 - kSliceEpsilon)));
}

double point_line_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                           const Eigen::Vector3d& b) {
  const Eigen::Vector3d d = b - a;
  const Eigen::Vector3d e = p - a;
  const double len2 = d.squaredNorm();
  if (len2 < kDegenerateBone * kDegenerateBone) return e.norm();
  return (e - (e.dot(d) / len2) * d).norm();
}

double point_line_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                           const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  const Eigen::Vector2d e = p - a;
  const double len = d.norm();
  if (len < kDegenerateBone) return e.norm();
  return std::abs(d.x() * e.y() - d.y() * e.x()) / len;
}

double bone_parameter(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                      const Eigen::Vector3d& b) {
  const Eigen::Vector3d d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 < kDegenerateBone * kDegenerateBone) return 0.0;
  return (p - a).dot(d) / len2;
}

PartDecomposition build_decomposition(const BodyModel& model, int n) {
  if (n < 1) throw std::invalid_argument("slicing number must be >= 1");
  const int K = model.num_vertices();
  const int J = model.num_joints();
  const Points3 joints = regress_joints(model, model.template_vertices);

  PartDecomposition d;
  d.n = n;
  d.part_of_vertex.resize(K);
  for (int k = 0; k < K; ++k) {
    int best = 0;
    for (int j = 1; j < J; ++j)
      if (model.blend_weights(k, j) > model.blend_weights(k, best)) best = j;
    d.part_of_vertex[k] = best;
  }

  d.bone_of_part = default_part_bones(model, joints);
  d.bone_index_of_part.resize(J);
  for (int j = 0; j < J; ++j) {
    const Bone bone = d.bone_of_part[j];
    if (model.parents[bone.b] == bone.a) {
      d.bone_index_of_part[j] = model.bone_index_of_joint(bone.b);
    } else if (model.parents[bone.a] == bone.b) {
      d.bone_index_of_part[j] = model.bone_index_of_joint(bone.a);
    } else {
      throw InvariantViolation("part_bones", "bone of part " + std::to_string(j) +
                                                 " is not a skeleton edge");
    }
    const double len = (joints.row(bone.b) - joints.row(bone.a)).norm();
    if (len < kDegenerateBone)
      throw InvariantViolation("part_bones",
                               "zero-length central bone for part " + std::to_string(j));
  }

  std::vector<double> u(K);
  d.extent_lo.assign(J, 0.0);
  d.extent_hi.assign(J, 0.0);
  std::vector<bool> seen(J, false);
  for (int k = 0; k < K; ++k) {
    const int j = d.part_of_vertex[k];
    const Bone bone = d.bone_of_part[j];
    u[k] = bone_parameter(model.template_vertices.row(k).transpose(),
                          joints.row(bone.a).transpose(), joints.row(bone.b).transpose());
    if (!seen[j]) {
      d.extent_lo[j] = d.extent_hi[j] = u[k];
      seen[j] = true;
    } else {
      d.extent_lo[j] = std::min(d.extent_lo[j], u[k]);
      d.extent_hi[j] = std::max(d.extent_hi[j], u[k]);
    }
  }

  d.slice_of_vertex.resize(K);
  d.cell_count.assign(static_cast<std::size_t>(J * n), 0);
  for (int k = 0; k < K; ++k) {
    const int j = d.part_of_vertex[k];
    d.slice_of_vertex[k] = d.slice_for(j, u[k]);
    ++d.cell_count[d.cell(j, d.slice_of_vertex[k])];
  }
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < n; ++i)
      if (d.cell_count[d.cell(j, i)] == 0) throw EmptySlice(j, i);

  d.template_widths = extract_descriptor(model, d, model.template_vertices).slice_widths;
  if ((d.template_widths.array() <= 0.0).any())
    throw InvariantViolation("template_widths", "a template slice has zero mean width");
  return d;
}

double vertex_width(const Points3& mesh, const Points3& joints, const PartDecomposition& decomp,
                    int k) {
  const Bone bone = decomp.bone_of_part[decomp.part_of_vertex[k]];
  return point_line_distance(Eigen::Vector3d(mesh.row(k).transpose()),
                             Eigen::Vector3d(joints.row(bone.a).transpose()),
                             Eigen::Vector3d(joints.row(bone.b).transpose()));
}

Eigen::VectorXd bone_lengths(const BodyModel& model, const Points3& joints) {
  const auto bones = model.bones();
  Eigen::VectorXd out(static_cast<Eigen::Index>(bones.size()));
  for (std::size_t b = 0; b < bones.size(); ++b)
    out[b] = (joints.row(bones[b].b) - joints.row(bones[b].a)).norm();
  return out;
}

ShapeDescriptor extract_descriptor(const BodyModel& model, const PartDecomposition& decomp,
                                   const Points3& mesh) {
  const Points3 joints = regress_joints(model, mesh);
  ShapeDescriptor out;
  out.n = decomp.n;
  out.bone_lengths = bone_lengths(model, joints);
  out.slice_widths = Eigen::VectorXd::Zero(decomp.num_parts() * decomp.n);
  for (Eigen::Index k = 0; k < mesh.rows(); ++k) {
    const int cell = decomp.cell(decomp.part_of_vertex[k], decomp.slice_of_vertex[k]);
    out.slice_widths[cell] += vertex_width(mesh, joints, decomp, static_cast<int>(k));
  }
  for (Eigen::Index c = 0; c < out.slice_widths.size(); ++c)
    out.slice_widths[c] /= decomp.cell_count[c];
  return out;
}

}  // namespace shapekit

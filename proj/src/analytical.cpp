#include "shapekit/analytical.hpp"

#include <cmath>

namespace shapekit {

AnalyticalSolver::AnalyticalSolver(const BodyModel& model, const PartDecomposition& decomp,
                                   double ridge)
    : model_(model),
      decomp_(decomp),
      ridge_(ridge),
      template_joints_(regress_joints(model, model.template_vertices)),
      order_(model.topological_order()) {
  const int s = model.num_shape();
  Eigen::MatrixXd gram = model.shape_basis.transpose() * model.shape_basis;
  gram.diagonal().array() += ridge_;
  normal_.compute(gram);
  if (normal_.info() != Eigen::Success)
    throw Error("shape-basis normal matrix is not positive definite (s=" + std::to_string(s) + ")");
  for (const Bone& bone : model.bones()) {
    if ((template_joints_.row(bone.b) - template_joints_.row(bone.a)).norm() < kDegenerateBone)
      throw InvariantViolation("template", "zero-length template bone ending at joint " +
                                               std::to_string(bone.b));
  }
}

Points3 AnalyticalSolver::stretch_skeleton(const Eigen::VectorXd& lengths) const {
  const int J = model_.num_joints();
  if (lengths.size() != J - 1)
    throw DimensionMismatch("expected " + std::to_string(J - 1) + " bone lengths");
  Points3 x(J, 3);
  for (int j : order_) {
    const int p = model_.parents[j];
    if (p == kNoParent) {
      x.row(j) = template_joints_.row(j);
      continue;
    }
    const Eigen::RowVector3d dir = template_joints_.row(j) - template_joints_.row(p);
    x.row(j) = x.row(p) + lengths[model_.bone_index_of_joint(j)] * dir / dir.norm();
  }
  return x;
}

Points3 AnalyticalSolver::deform_template(const ShapeDescriptor& target) const {
  if (target.slice_widths.size() != decomp_.template_widths.size())
    throw DimensionMismatch("target has " + std::to_string(target.slice_widths.size()) +
                            " slice widths, decomposition expects " +
                            std::to_string(decomp_.template_widths.size()));
  const Points3 x = stretch_skeleton(target.bone_lengths);
  const Points3& T = model_.template_vertices;
  const int K = model_.num_vertices();
  const int J = model_.num_joints();

  Points3 out = Points3::Zero(K, 3);
  for (int k = 0; k < K; ++k) {
    const Eigen::Vector3d p = T.row(k).transpose();
    for (int j = 0; j < J; ++j) {
      const double w = model_.blend_weights(k, j);
      if (w == 0.0) continue;
      const Bone bone = decomp_.bone_of_part[j];
      const Eigen::Vector3d ta = template_joints_.row(bone.a).transpose();
      const Eigen::Vector3d tb = template_joints_.row(bone.b).transpose();
      const double u = bone_parameter(p, ta, tb);
      const Eigen::Vector3d q = ta + u * (tb - ta);
      const int cell = decomp_.cell(j, decomp_.slice_for(j, u));
      const double ratio = target.slice_widths[cell] / decomp_.template_widths[cell];
      const Eigen::Vector3d xa = x.row(bone.a).transpose();
      const Eigen::Vector3d xb = x.row(bone.b).transpose();
      out.row(k) += w * (xa + u * (xb - xa) + ratio * (p - q)).transpose();
    }
  }
  return out;
}

Eigen::VectorXd AnalyticalSolver::project(const Points3& offsets) const {
  const Eigen::Map<const Eigen::VectorXd> flat(offsets.data(), offsets.size());
  return normal_.solve(model_.shape_basis.transpose() * flat);
}

AnalyticalResult AnalyticalSolver::solve(const ShapeDescriptor& target) const {
  if ((target.bone_lengths.array() <= 0.0).any() || (target.slice_widths.array() <= 0.0).any())
    throw std::invalid_argument("analytical reconstruction needs strictly positive targets");
  AnalyticalResult r;
  r.deformed_template = deform_template(target);
  r.beta0.beta = project(r.deformed_template - model_.template_vertices);
  r.achieved = extract_descriptor(model_, decomp_, shape_to_mesh(model_, r.beta0));
  r.delta_l = target.bone_lengths - r.achieved.bone_lengths;
  r.delta_w = target.slice_widths - r.achieved.slice_widths;
  return r;
}

AnalyticalResult analytical_reconstruct(const BodyModel& model, const PartDecomposition& decomp,
                                        const ShapeDescriptor& target) {
  return AnalyticalSolver(model, decomp).solve(target);
}

}  // namespace shapekit

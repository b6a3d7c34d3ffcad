#include "shapekit/losses.hpp"

#include "shapekit/analytical.hpp"

#include <cmath>

namespace shapekit {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

void LossWeights::validate() const {
  if (mu0 < 0.0 || mu1 < 0.0 || mu2 < 0.0 || mu3 < 0.0)
    throw std::invalid_argument("loss weights must be non-negative");
}

DecomposeLoss::DecomposeLoss(const BodyModel& model, const PartDecomposition& decomp,
                             double length_unit)
    : model_(model),
      decomp_(decomp),
      unit_(length_unit),
      template_joints_(regress_joints(model, model.template_vertices)),
      bones_(model.bones()) {
  if (!(length_unit > 0.0)) throw std::invalid_argument("length unit must be positive");
  const int J = model.num_joints();
  const int K = model.num_vertices();
  const int s = model.num_shape();
  joint_basis_ = Eigen::MatrixXd::Zero(3 * J, s);
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < K; ++k) {
      const double w = model.joint_regressor(j, k);
      if (w == 0.0) continue;
      for (int c = 0; c < 3; ++c) joint_basis_.row(3 * j + c) += w * model.shape_basis.row(3 * k + c);
    }
}

DecomposeLossValue DecomposeLoss::evaluate(const Eigen::VectorXd& beta,
                                           const DecomposeTarget& target,
                                           const LossWeights& weights, bool with_grad) const {
  const int J = model_.num_joints();
  const int K = model_.num_vertices();
  const int n = decomp_.n;
  if (beta.size() != model_.num_shape()) throw DimensionMismatch("beta length mismatch");
  if (target.joints.rows() != J || target.descriptor.bone_lengths.size() != J - 1 ||
      target.descriptor.slice_widths.size() != decomp_.template_widths.size())
    throw DimensionMismatch("decompose target does not match the model/decomposition");

  const double inv_u = 1.0 / unit_;
  const Points3 mesh = shape_to_mesh(model_, {beta});
  const Points3 X = regress_joints(model_, mesh);
  const ShapeDescriptor& tgt = target.descriptor;

  DecomposeLossValue out;
  Points3 gX = Points3::Zero(J, 3);
  Eigen::VectorXd g_len = Eigen::VectorXd::Zero(J - 1);

  // Keypoint coordinates.
  for (int j = 0; j < J; ++j)
    for (int c = 0; c < 3; ++c) {
      const double r = X(j, c) - target.joints(j, c);
      out.bone += std::abs(r) * inv_u;
      gX(j, c) += sign(r) * inv_u;
    }
  // Bone lengths.
  Eigen::VectorXd len(J - 1);
  for (int b = 0; b < J - 1; ++b) {
    len[b] = (X.row(bones_[b].b) - X.row(bones_[b].a)).norm();
    const double r = len[b] - tgt.bone_lengths[b];
    out.bone += std::abs(r) * inv_u;
    g_len[b] += sign(r) * inv_u;
  }

  // Slice widths of the refined mesh.
  Eigen::VectorXd width = Eigen::VectorXd::Zero(J * n);
  for (int k = 0; k < K; ++k)
    width[decomp_.cell(decomp_.part_of_vertex[k], decomp_.slice_of_vertex[k])] +=
        vertex_width(mesh, X, decomp_, k);
  for (int c = 0; c < J * n; ++c) width[c] /= decomp_.cell_count[c];

  Eigen::VectorXd g_width(J * n);
  for (int j = 0; j < J; ++j) {
    const int b = decomp_.bone_index_of_part[j];
    for (int i = 0; i < n; ++i) {
      const int c = decomp_.cell(j, i);
      const double r1 = (width[c] - tgt.slice_widths[c]) * inv_u;
      const double r2 = width[c] / len[b] - tgt.slice_widths[c] / tgt.bone_lengths[b];
      out.width += r1 * r1 + r2 * r2;
      g_width[c] = 2.0 * r1 * inv_u + 2.0 * r2 / len[b];
      g_len[b] += -2.0 * r2 * width[c] / (len[b] * len[b]);
    }
  }

  out.reg = beta.squaredNorm();
  out.total = out.bone + out.width + weights.mu1 * out.reg;
  if (!with_grad) return out;

  for (int b = 0; b < J - 1; ++b) {
    const Eigen::RowVector3d dir = (X.row(bones_[b].b) - X.row(bones_[b].a)) / len[b];
    gX.row(bones_[b].b) += g_len[b] * dir;
    gX.row(bones_[b].a) -= g_len[b] * dir;
  }

  Points3 g_mesh = Points3::Zero(K, 3);
  for (int k = 0; k < K; ++k) {
    const int j = decomp_.part_of_vertex[k];
    const int c = decomp_.cell(j, decomp_.slice_of_vertex[k]);
    const double g = g_width[c] / decomp_.cell_count[c];
    const Bone bone = decomp_.bone_of_part[j];
    const Eigen::RowVector3d a = X.row(bone.a);
    const Eigen::RowVector3d d = X.row(bone.b) - a;
    const Eigen::RowVector3d e = mesh.row(k) - a;
    const double len2 = d.squaredNorm();
    if (len2 < kDegenerateBone * kDegenerateBone) {
      const double dist = e.norm();
      if (dist == 0.0) continue;
      g_mesh.row(k) += g * e / dist;
      gX.row(bone.a) -= g * e / dist;
      continue;
    }
    const double t = e.dot(d) / len2;
    const Eigen::RowVector3d r = e - t * d;
    const double dist = r.norm();
    if (dist == 0.0) continue;
    const Eigen::RowVector3d rhat = r / dist;
    g_mesh.row(k) += g * rhat;
    gX.row(bone.a) -= g * (1.0 - t) * rhat;
    gX.row(bone.b) -= g * t * rhat;
  }

  const Eigen::Map<const Eigen::VectorXd> g_mesh_flat(g_mesh.data(), g_mesh.size());
  const Eigen::Map<const Eigen::VectorXd> gX_flat(gX.data(), gX.size());
  out.grad = model_.shape_basis.transpose() * g_mesh_flat + joint_basis_.transpose() * gX_flat +
             2.0 * weights.mu1 * beta;
  return out;
}

DecomposeTarget make_decompose_target(const BodyModel& model, const PartDecomposition& decomp,
                                      const ShapeDescriptor& target) {
  return {AnalyticalSolver(model, decomp).stretch_skeleton(target.bone_lengths), target};
}

DecomposeLossValue decompose_loss(const BodyModel& model, const PartDecomposition& decomp,
                                  const ShapeCoeffs& refined, const ShapeDescriptor& target,
                                  const LossWeights& weights) {
  return DecomposeLoss(model, decomp)
      .evaluate(refined.beta, make_decompose_target(model, decomp, target), weights);
}

double shape_loss(const Eigen::VectorXd& pred_widths_2d, const Eigen::VectorXd& target_widths_2d,
                  const Eigen::VectorXd& pred_vertex_widths_2d,
                  const Eigen::VectorXd& target_vertex_widths_2d, const LossWeights& weights) {
  if (pred_widths_2d.size() != target_widths_2d.size() ||
      pred_vertex_widths_2d.size() != target_vertex_widths_2d.size())
    throw DimensionMismatch("shape loss inputs differ in length");
  return (pred_widths_2d - target_widths_2d).squaredNorm() +
         weights.mu0 * (pred_vertex_widths_2d - target_vertex_widths_2d).squaredNorm();
}

double overall_shape_objective(double decompose, double shape, const LossWeights& weights) {
  return weights.mu2 * decompose + weights.mu3 * shape;
}

}  // namespace shapekit

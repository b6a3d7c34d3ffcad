#pragma once

#include "shapekit/decompose.hpp"

namespace shapekit {

// mu0 weights the per-vertex term of the shape loss, mu1 the coefficient
// regularizer of the decompose loss, mu2 and mu3 the decompose and shape
// losses in the overall objective.
struct LossWeights {
  double mu0 = 0.01;
  double mu1 = 0.01;
  double mu2 = 0.1;
  double mu3 = 1.0;

  void validate() const;
};

// Supervision for the decompose loss: target keypoints plus the target
// descriptor they were stretched from.
struct DecomposeTarget {
  Points3 joints;
  ShapeDescriptor descriptor;
};

struct DecomposeLossValue {
  double total = 0.0;
  double bone = 0.0;
  double width = 0.0;
  double reg = 0.0;
  Eigen::VectorXd grad;  // d total / d beta
};

/// L_decomp = L_bone + L_width + mu1 * |beta|^2 evaluated on the rest-pose mesh
/// of the given coefficients, with its analytic gradient.
///
/// Lengths enter the loss divided by `length_unit` (1 = meters). Holds
/// references to the model and decomposition.
class DecomposeLoss {
 public:
  DecomposeLoss(const BodyModel& model, const PartDecomposition& decomp, double length_unit = 1.0);

  DecomposeLossValue evaluate(const Eigen::VectorXd& beta, const DecomposeTarget& target,
                              const LossWeights& weights, bool with_grad = true) const;

  double length_unit() const { return unit_; }

 private:
  const BodyModel& model_;
  const PartDecomposition& decomp_;
  double unit_;
  Eigen::MatrixXd joint_basis_;  // 3J x s, joint_regressor applied to the shape basis
  Points3 template_joints_;
  std::vector<Bone> bones_;
};

// Target keypoints come from the template skeleton stretched to the target
// bone lengths.
DecomposeTarget make_decompose_target(const BodyModel& model, const PartDecomposition& decomp,
                                      const ShapeDescriptor& target);

DecomposeLossValue decompose_loss(const BodyModel& model, const PartDecomposition& decomp,
                                  const ShapeCoeffs& refined, const ShapeDescriptor& target,
                                  const LossWeights& weights);

// sum_j |pred_j - target_j|^2 + mu0 * sum_k |pred_k - target_k|^2 over
// per-part-slice and per-vertex 2D widths.
double shape_loss(const Eigen::VectorXd& pred_widths_2d, const Eigen::VectorXd& target_widths_2d,
                  const Eigen::VectorXd& pred_vertex_widths_2d,
                  const Eigen::VectorXd& target_vertex_widths_2d, const LossWeights& weights);

// mu2 * L_decomp + mu3 * L_shape; the pose term is not part of this library.
double overall_shape_objective(double decompose, double shape, const LossWeights& weights);

}  // namespace shapekit

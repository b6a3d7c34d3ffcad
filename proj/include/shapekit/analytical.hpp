#pragma once

#include "shapekit/decompose.hpp"

#include <Eigen/Cholesky>

namespace shapekit {

struct AnalyticalResult {
  Points3 deformed_template;
  ShapeCoeffs beta0;
  ShapeDescriptor achieved;
  Eigen::VectorXd delta_l;  // target - achieved bone lengths, meters
  Eigen::VectorXd delta_w;  // target - achieved slice widths, meters
};

inline constexpr double kProjectionRidge = 1e-6;

/// Template stretch-and-broaden reconstruction followed by a ridge-regularized
/// projection onto the shape basis.
///
/// Holds references to the model and decomposition; both must outlive it.
class AnalyticalSolver {
 public:
  AnalyticalSolver(const BodyModel& model, const PartDecomposition& decomp,
                   double ridge = kProjectionRidge);

  // Template skeleton with every bone rescaled to the target length, bone
  // directions unchanged, root fixed at the template root.
  Points3 stretch_skeleton(const Eigen::VectorXd& bone_lengths) const;

  // Stretched and broadened template, blended across parts by skinning weights.
  Points3 deform_template(const ShapeDescriptor& target) const;

  // argmin_b |S b - offsets|^2 + ridge |b|^2 for flattened vertex offsets.
  Eigen::VectorXd project(const Points3& offsets) const;

  AnalyticalResult solve(const ShapeDescriptor& target) const;

  const BodyModel& model() const { return model_; }
  const PartDecomposition& decomposition() const { return decomp_; }
  const Points3& template_joints() const { return template_joints_; }

 private:
  const BodyModel& model_;
  const PartDecomposition& decomp_;
  double ridge_;
  Points3 template_joints_;
  std::vector<int> order_;
  Eigen::LLT<Eigen::MatrixXd> normal_;
};

AnalyticalResult analytical_reconstruct(const BodyModel& model, const PartDecomposition& decomp,
                                        const ShapeDescriptor& target);

}  // namespace shapekit

#pragma once

#include "shapekit/body_model.hpp"

#include <Eigen/Sparse>

#include <filesystem>

namespace shapekit {

// Sparse p x K matrix mapping mesh vertices to surface sample points.
struct PointRegressor {
  Eigen::SparseMatrix<double, Eigen::RowMajor> H;

  int samples() const { return static_cast<int>(H.rows()); }
  // Every row needs a nonzero and all entries must be finite; K is the
  // vertex count of the mesh the regressor will be applied to.
  void validate(int num_vertices) const;
  Points3 apply(const Points3& mesh) const;
};

// Text triplets, one "row col value" per line; '#' starts a comment.
// The matrix has max(row)+1 rows and num_cols columns (max(col)+1 when < 0).
PointRegressor load_triplets(const std::filesystem::path& path, int num_cols = -1);
void save_triplets(const PointRegressor& reg, const std::filesystem::path& path);

class RankDeficient : public Error {
 public:
  explicit RankDeficient(double condition)
      : Error("sample set is degenerate: Gram condition " + std::to_string(condition)),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

inline constexpr double kConversionRidge = 1e-10;
inline constexpr double kMaxGramCondition = 1e12;
inline constexpr int kConversionRefineSteps = 30;

// A = [H_dst S_dst, E], b = H_src T_src - H_dst T0_dst with E = -I stacked
// per sample point; rows ordered point-major (3i + c), unknowns (beta, t).
struct ConversionSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

ConversionSystem build_conversion_system(const Points3& src_mesh, const PointRegressor& h_src,
                                         const BodyModel& dst_model, const PointRegressor& h_dst);

struct ConversionResult {
  ShapeCoeffs beta_dst;
  // Offset of the source samples from the fitted destination samples.
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double residual_rms = 0.0;    // meters, over all 3p residual entries
  double gram_condition = 0.0;  // of A^T A
  Eigen::VectorXd solution;     // least-squares unknowns (beta, -t) of the system above
};

ConversionResult cross_model_fit(const Points3& src_mesh, const PointRegressor& h_src,
                                 const BodyModel& dst_model, const PointRegressor& h_dst);

}  // namespace shapekit

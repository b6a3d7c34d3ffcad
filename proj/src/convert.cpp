#include "shapekit/convert.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace shapekit {

void PointRegressor::validate(int num_vertices) const {
  if (H.rows() == 0) throw InvariantViolation("regressor", "no sample points");
  if (H.cols() != num_vertices)
    throw ShapeMismatch("regressor", "has " + std::to_string(H.cols()) + " columns, mesh has " +
                                         std::to_string(num_vertices) + " vertices");
  for (Eigen::Index r = 0; r < H.rows(); ++r) {
    bool any = false;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(H, r); it; ++it) {
      if (!std::isfinite(it.value())) throw InvariantViolation("regressor", "non-finite entry");
      any = any || it.value() != 0.0;
    }
    if (!any) throw InvariantViolation("regressor", "row " + std::to_string(r) + " is empty");
  }
}

Points3 PointRegressor::apply(const Points3& mesh) const {
  if (mesh.rows() != H.cols()) throw DimensionMismatch("regressor/mesh vertex count mismatch");
  return H * mesh;
}

PointRegressor load_triplets(const std::filesystem::path& path, int num_cols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Eigen::Triplet<double>> entries;
  std::string line;
  int line_no = 0;
  long max_row = -1, max_col = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    long row, col;
    double value;
    if (!(ss >> row)) continue;
    if (!(ss >> col >> value) || row < 0 || col < 0)
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed triplet");
    std::string rest;
    if (ss >> rest) throw IoError(path.string() + ":" + std::to_string(line_no) + ": trailing data");
    entries.emplace_back(static_cast<int>(row), static_cast<int>(col), value);
    max_row = std::max(max_row, row);
    max_col = std::max(max_col, col);
  }
  if (entries.empty()) throw IoError(path.string() + ": no triplets");
  const long cols = num_cols >= 0 ? num_cols : max_col + 1;
  if (max_col >= cols) throw ShapeMismatch("regressor", "column index exceeds vertex count");
  PointRegressor reg;
  reg.H.resize(max_row + 1, cols);
  reg.H.setFromTriplets(entries.begin(), entries.end());
  return reg;
}

void save_triplets(const PointRegressor& reg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (Eigen::Index r = 0; r < reg.H.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(reg.H, r); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << r << ' ' << it.col() << ' ' << buf << '\n';
    }
}

ConversionSystem build_conversion_system(const Points3& src_mesh, const PointRegressor& h_src,
                                         const BodyModel& dst_model,
                                         const PointRegressor& h_dst) {
  h_src.validate(static_cast<int>(src_mesh.rows()));
  h_dst.validate(dst_model.num_vertices());
  const int p = h_src.samples();
  const int s = dst_model.num_shape();
  if (h_dst.samples() != p)
    throw DimensionMismatch("source and destination regressors sample different point counts");
  if (3 * p < s + 3)
    throw DimensionMismatch("need 3p >= s + 3 equations, have " + std::to_string(3 * p));

  ConversionSystem sys;
  sys.A = Eigen::MatrixXd::Zero(3 * p, s + 3);
  const int K = dst_model.num_vertices();
  for (int c = 0; c < s; ++c) {
    const Eigen::VectorXd col = dst_model.shape_basis.col(c);
    const Points3 sampled = h_dst.H * Eigen::Map<const Points3>(col.data(), K, 3);
    sys.A.col(c) = Eigen::Map<const Eigen::VectorXd>(sampled.data(), 3 * p);
  }
  for (int i = 0; i < p; ++i)
    for (int c = 0; c < 3; ++c) sys.A(3 * i + c, s + c) = -1.0;
  const Points3 rhs = h_src.H * src_mesh - h_dst.H * dst_model.template_vertices;
  sys.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), 3 * p);
  return sys;
}

ConversionResult cross_model_fit(const Points3& src_mesh, const PointRegressor& h_src,
                                 const BodyModel& dst_model, const PointRegressor& h_dst) {
  const ConversionSystem sys = build_conversion_system(src_mesh, h_src, dst_model, h_dst);
  const int s = dst_model.num_shape();
  Eigen::MatrixXd gram = sys.A.transpose() * sys.A;

  ConversionResult r;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  r.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(r.gram_condition <= kMaxGramCondition)) throw RankDeficient(r.gram_condition);

  // The ridge only conditions the factorization; refinement against the
  // unregularized normal equations removes its bias.
  Eigen::MatrixXd ridged = gram;
  ridged.diagonal().array() += kConversionRidge;
  const Eigen::LLT<Eigen::MatrixXd> llt(ridged);
  const Eigen::VectorXd atb = sys.A.transpose() * sys.b;
  r.solution = llt.solve(atb);
  for (int step = 0; step < kConversionRefineSteps; ++step) {
    const Eigen::VectorXd delta = llt.solve(atb - gram * r.solution);
    r.solution += delta;
    if (delta.norm() <= 1e-16 * r.solution.norm()) break;
  }
  r.beta_dst.beta = r.solution.head(s);
  r.t = -r.solution.tail<3>();
  r.residual_rms = std::sqrt((sys.A * r.solution - sys.b).squaredNorm() / sys.b.size());
  return r;
}

}  // namespace shapekit

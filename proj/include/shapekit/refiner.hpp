#pragma once

#include "shapekit/analytical.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace shapekit {

// Hybrid refines the analytical coefficients (input: beta0, l, w, dl, dw;
// output added to beta0). Direct regresses coefficients from (l, w) alone.
enum class RefinerVariant { Hybrid, Direct };

std::string to_string(RefinerVariant v);
RefinerVariant parse_variant(const std::string& s);

/// Four dense layers, 512 hidden units, LeakyReLU(0.01) between layers.
///
/// Inputs are standardized by a fixed per-feature affine map stored with the
/// weights. The final layer starts at zero so an untrained Hybrid net is the
/// analytical solution.
class RefinerNet {
 public:
  static constexpr int kLayers = 4;
  static constexpr int kHidden = 512;
  static constexpr double kNegativeSlope = 0.01;

  struct Cache {
    Eigen::MatrixXd input;                     // standardized, B x in
    std::array<Eigen::MatrixXd, kLayers> pre;  // pre-activations
    std::array<Eigen::MatrixXd, kLayers - 1> act;
  };

  struct Gradients {
    std::array<Eigen::MatrixXd, kLayers> w;
    std::array<Eigen::VectorXd, kLayers> b;
  };

  RefinerNet() = default;
  RefinerNet(RefinerVariant variant, int num_joints, int n, int shape_dim, std::uint64_t seed,
             int hidden = kHidden);

  RefinerVariant variant() const { return variant_; }
  int input_dim() const { return static_cast<int>(w_[0].cols()); }
  int output_dim() const { return static_cast<int>(w_[kLayers - 1].rows()); }
  int num_joints() const { return num_joints_; }
  int slicing_number() const { return n_; }
  std::uint64_t seed() const { return seed_; }

  // Input vector for this variant.
  Eigen::VectorXd assemble_input(const AnalyticalResult& analytical,
                                 const ShapeDescriptor& target) const;

  // Raw network output for a batch of unstandardized inputs (rows).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, Cache* cache = nullptr) const;
  Gradients backward(const Cache& cache, const Eigen::MatrixXd& grad_output) const;

  // Coefficients produced from an input row and (Hybrid) the analytical beta0.
  Eigen::VectorXd predict(const Eigen::VectorXd& input, const Eigen::VectorXd& beta0) const;

  void set_standardization(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale);

  std::array<Eigen::MatrixXd, kLayers>& weights() { return w_; }
  std::array<Eigen::VectorXd, kLayers>& biases() { return b_; }
  const std::array<Eigen::MatrixXd, kLayers>& weights() const { return w_; }
  const std::array<Eigen::VectorXd, kLayers>& biases() const { return b_; }

  std::string model_name;
  double final_loss = 0.0;

  void save(const std::filesystem::path& path) const;
  static RefinerNet load(const std::filesystem::path& path);

 private:
  RefinerVariant variant_ = RefinerVariant::Hybrid;
  int num_joints_ = 0;
  int n_ = 1;
  int shape_dim_ = 0;
  std::uint64_t seed_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  std::array<Eigen::MatrixXd, kLayers> w_;  // out x in
  std::array<Eigen::VectorXd, kLayers> b_;
};

// Forward pass of the refiner on top of an analytical result.
ShapeCoeffs refine(const BodyModel& model, const PartDecomposition& decomp, const RefinerNet& net,
                   const AnalyticalResult& analytical, const ShapeDescriptor& target);

}  // namespace shapekit

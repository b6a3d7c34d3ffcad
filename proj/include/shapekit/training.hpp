#pragma once

#include "shapekit/losses.hpp"
#include "shapekit/noise.hpp"
#include "shapekit/refiner.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace shapekit {

class Divergence : public Error {
 public:
  using Error::Error;
};

enum class Optimizer { Adam, Momentum };
std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& s);

struct TrainConfig {
  RefinerVariant variant = RefinerVariant::Hybrid;
  Optimizer optimizer = Optimizer::Adam;
  int num_samples = 20000;
  // Each training descriptor gets multiplicative noise with a ratio drawn
  // uniformly from [0, noise_ratio].
  double noise_ratio = 0.0;
  NoiseKind noise_kind = NoiseKind::Gaussian;
  int epochs = 10;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double momentum = 0.9;  // also Adam's first-moment decay
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double decay_fraction = 0.75;  // lr *= decay_factor after this share of iterations
  double decay_factor = 0.1;
  LossWeights weights;
  double length_unit = 0.01;  // loss lengths in centimeters
  int hidden = RefinerNet::kHidden;
  std::uint64_t seed = 0;
  // Called after every epoch with the epoch's mean training loss.
  std::function<void(int, double)> on_epoch;
};

// One synthetic example: ground-truth coefficients, the (possibly noisy)
// descriptor extracted from them and its analytical reconstruction.
struct TrainingSample {
  Eigen::VectorXd beta_true;
  ShapeDescriptor target;
  AnalyticalResult analytical;
  DecomposeTarget loss_target;
};

std::vector<TrainingSample> make_training_set(const BodyModel& model,
                                              const PartDecomposition& decomp,
                                              const AnalyticalSolver& solver, int count,
                                              double noise_ratio, NoiseKind kind,
                                              std::uint64_t seed);

struct TrainResult {
  RefinerNet net;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;
};

// Minibatch Adam (or momentum) gradient descent on the decompose loss, backpropagated
// through the refiner. Single-threaded and deterministic for a fixed seed.
TrainResult train_refiner(const BodyModel& model, const PartDecomposition& decomp,
                          const TrainConfig& config);

}  // namespace shapekit

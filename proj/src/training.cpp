#include "shapekit/training.hpp"

#include <cmath>
#include <numeric>

namespace shapekit {

std::string to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "momentum"; }

Optimizer parse_optimizer(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "momentum") return Optimizer::Momentum;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

std::vector<TrainingSample> make_training_set(const BodyModel& model,
                                              const PartDecomposition& decomp,
                                              const AnalyticalSolver& solver, int count,
                                              double noise_ratio, NoiseKind kind,
                                              std::uint64_t seed) {
  Rng rng(seed);
  const int s = model.num_shape();
  std::vector<TrainingSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    TrainingSample sample;
    sample.beta_true.resize(s);
    for (int c = 0; c < s; ++c) sample.beta_true[c] = rng.normal();
    const ShapeDescriptor clean =
        extract_descriptor(model, decomp, shape_to_mesh(model, {sample.beta_true}));
    const double ratio = noise_ratio * rng.uniform();
    const Eigen::VectorXd g = draw_unit_noise(clean, kind, rng);
    sample.target = apply_noise(clean, g, ratio, NoiseTarget::Both);
    sample.analytical = solver.solve(sample.target);
    sample.loss_target = {solver.stretch_skeleton(sample.target.bone_lengths), sample.target};
    out.push_back(std::move(sample));
  }
  return out;
}

TrainResult train_refiner(const BodyModel& model, const PartDecomposition& decomp,
                          const TrainConfig& config) {
  if (config.num_samples < 1 || config.batch_size < 1 || config.epochs < 1)
    throw std::invalid_argument("training needs samples, a batch size and epochs");
  config.weights.validate();

  const AnalyticalSolver solver(model, decomp);
  const DecomposeLoss loss(model, decomp, config.length_unit);
  const auto data = make_training_set(model, decomp, solver, config.num_samples,
                                      config.noise_ratio, config.noise_kind, config.seed);

  TrainResult result;
  RefinerNet& net = result.net;
  net = RefinerNet(config.variant, model.num_joints(), decomp.n, model.num_shape(),
                   config.seed ^ 0x9e3779b97f4a7c15ull, config.hidden);
  net.model_name = model.name;

  const int N = config.num_samples;
  Eigen::MatrixXd inputs(N, net.input_dim());
  for (int i = 0; i < N; ++i)
    inputs.row(i) = net.assemble_input(data[i].analytical, data[i].target).transpose();
  const Eigen::VectorXd mean = inputs.colwise().mean().transpose();
  Eigen::VectorXd scale =
      ((inputs.rowwise() - mean.transpose()).array().square().colwise().mean().sqrt()).transpose();
  for (Eigen::Index i = 0; i < scale.size(); ++i)
    if (!(scale[i] > 1e-12)) scale[i] = 1.0;
  net.set_standardization(mean, scale);

  RefinerNet::Gradients velocity, second;
  for (int l = 0; l < RefinerNet::kLayers; ++l) {
    velocity.w[l] = Eigen::MatrixXd::Zero(net.weights()[l].rows(), net.weights()[l].cols());
    velocity.b[l] = Eigen::VectorXd::Zero(net.biases()[l].size());
    second.w[l] = velocity.w[l];
    second.b[l] = velocity.b[l];
  }

  Rng order_rng(config.seed + 1);
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  const int batches_per_epoch = (N + config.batch_size - 1) / config.batch_size;
  const long total_iters = static_cast<long>(batches_per_epoch) * config.epochs;
  const long decay_iter = static_cast<long>(std::floor(config.decay_fraction * total_iters));
  long iter = 0;
  const int s = model.num_shape();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_sum = 0.0;
    for (int start = 0; start < N; start += config.batch_size, ++iter) {
      const int B = std::min(config.batch_size, N - start);
      Eigen::MatrixXd x(B, net.input_dim());
      for (int r = 0; r < B; ++r) x.row(r) = inputs.row(order[start + r]);

      RefinerNet::Cache cache;
      const Eigen::MatrixXd out = net.forward(x, &cache);
      Eigen::MatrixXd grad_out(B, s);
      double batch_sum = 0.0;
      for (int r = 0; r < B; ++r) {
        const TrainingSample& sample = data[order[start + r]];
        Eigen::VectorXd beta = out.row(r).transpose();
        if (config.variant == RefinerVariant::Hybrid) beta += sample.analytical.beta0.beta;
        const auto value = loss.evaluate(beta, sample.loss_target, config.weights);
        batch_sum += value.total;
        grad_out.row(r) = value.grad.transpose() / B;
      }
      if (!std::isfinite(batch_sum))
        throw Divergence("training loss became non-finite at epoch " + std::to_string(epoch) +
                         ", iteration " + std::to_string(iter));
      epoch_sum += batch_sum;

      const auto grads = net.backward(cache, grad_out);
      const double lr =
          iter >= decay_iter ? config.learning_rate * config.decay_factor : config.learning_rate;
      if (config.optimizer == Optimizer::Momentum) {
        for (int l = 0; l < RefinerNet::kLayers; ++l) {
          velocity.w[l] = config.momentum * velocity.w[l] - lr * grads.w[l];
          velocity.b[l] = config.momentum * velocity.b[l] - lr * grads.b[l];
          net.weights()[l] += velocity.w[l];
          net.biases()[l] += velocity.b[l];
        }
      } else {
        const double b1 = config.momentum, b2 = config.adam_beta2, eps = config.adam_epsilon;
        const double step = lr * std::sqrt(1.0 - std::pow(b2, iter + 1)) / (1.0 - std::pow(b1, iter + 1));
        for (int l = 0; l < RefinerNet::kLayers; ++l) {
          velocity.w[l] = b1 * velocity.w[l] + (1.0 - b1) * grads.w[l];
          velocity.b[l] = b1 * velocity.b[l] + (1.0 - b1) * grads.b[l];
          second.w[l] = b2 * second.w[l] + (1.0 - b2) * grads.w[l].cwiseAbs2();
          second.b[l] = b2 * second.b[l] + (1.0 - b2) * grads.b[l].cwiseAbs2();
          net.weights()[l].array() -= step * velocity.w[l].array() / (second.w[l].array().sqrt() + eps);
          net.biases()[l].array() -= step * velocity.b[l].array() / (second.b[l].array().sqrt() + eps);
        }
      }
    }
    const double epoch_loss = epoch_sum / N;
    result.epoch_loss.push_back(epoch_loss);
    if (config.on_epoch) config.on_epoch(epoch, epoch_loss);
  }
  result.final_loss = result.epoch_loss.back();
  net.final_loss = result.final_loss;
  return result;
}

}  // namespace shapekit

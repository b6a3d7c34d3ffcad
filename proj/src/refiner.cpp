#include "shapekit/refiner.hpp"

#include "shapekit/rng.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace shapekit {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'S', 'H', 'K', 'N', 'E', 'T', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(bytes, 4);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char bytes[4];
  if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw IoError("refiner file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw IoError("refiner file truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

int input_dim_for(RefinerVariant v, int J, int n, int s) {
  const int lw = (J - 1) + n * J;
  return v == RefinerVariant::Hybrid ? s + 2 * lw : lw;
}

}  // namespace

std::string to_string(RefinerVariant v) { return v == RefinerVariant::Hybrid ? "hybrid" : "nn"; }

RefinerVariant parse_variant(const std::string& s) {
  if (s == "hybrid") return RefinerVariant::Hybrid;
  if (s == "nn" || s == "direct") return RefinerVariant::Direct;
  throw std::invalid_argument("unknown refiner variant '" + s + "'");
}

RefinerNet::RefinerNet(RefinerVariant variant, int num_joints, int n, int shape_dim,
                       std::uint64_t seed, int hidden)
    : variant_(variant), num_joints_(num_joints), n_(n), shape_dim_(shape_dim), seed_(seed) {
  const int in = input_dim_for(variant, num_joints, n, shape_dim);
  const std::array<int, kLayers + 1> dims = {in, hidden, hidden, hidden, shape_dim};
  Rng rng(seed);
  for (int l = 0; l < kLayers; ++l) {
    // Kaiming-uniform for LeakyReLU fan-in.
    const double bound = std::sqrt(6.0 / ((1.0 + kNegativeSlope * kNegativeSlope) * dims[l]));
    w_[l].resize(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < w_[l].size(); ++i) w_[l].data()[i] = rng.uniform(-bound, bound);
    b_[l] = Eigen::VectorXd::Zero(dims[l + 1]);
  }
  w_[kLayers - 1].setZero();
  mean_ = Eigen::VectorXd::Zero(in);
  scale_ = Eigen::VectorXd::Ones(in);
}

Eigen::VectorXd RefinerNet::assemble_input(const AnalyticalResult& analytical,
                                           const ShapeDescriptor& target) const {
  const auto L = target.bone_lengths.size();
  const auto W = target.slice_widths.size();
  if (L != num_joints_ - 1 || W != num_joints_ * n_)
    throw DimensionMismatch("refiner was trained for J=" + std::to_string(num_joints_) +
                            ", n=" + std::to_string(n_) + "; descriptor does not match");
  Eigen::VectorXd x(input_dim());
  if (variant_ == RefinerVariant::Direct) {
    x << target.bone_lengths, target.slice_widths;
  } else {
    x << analytical.beta0.beta, target.bone_lengths, target.slice_widths, analytical.delta_l,
        analytical.delta_w;
  }
  return x;
}

Eigen::MatrixXd RefinerNet::forward(const Eigen::MatrixXd& inputs, Cache* cache) const {
  if (inputs.cols() != input_dim())
    throw DimensionMismatch("refiner expects " + std::to_string(input_dim()) + " inputs, got " +
                            std::to_string(inputs.cols()));
  Eigen::MatrixXd h = (inputs.rowwise() - mean_.transpose()).array().rowwise() /
                      scale_.transpose().array();
  if (cache) cache->input = h;
  for (int l = 0; l < kLayers; ++l) {
    Eigen::MatrixXd z = h * w_[l].transpose();
    z.rowwise() += b_[l].transpose();
    if (l == kLayers - 1) {
      if (cache) cache->pre[l] = z;
      return z;
    }
    h = z.unaryExpr([](double v) { return v > 0.0 ? v : kNegativeSlope * v; });
    if (cache) {
      cache->pre[l] = std::move(z);
      cache->act[l] = h;
    }
  }
  return h;
}

RefinerNet::Gradients RefinerNet::backward(const Cache& cache,
                                           const Eigen::MatrixXd& grad_output) const {
  Gradients g;
  Eigen::MatrixXd delta = grad_output;  // d loss / d pre-activation of layer l
  for (int l = kLayers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.act[l - 1];
    g.w[l] = delta.transpose() * below;
    g.b[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd up = delta * w_[l];
    const Eigen::MatrixXd& z = cache.pre[l - 1];
    delta = up.array() * z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kNegativeSlope; }).array();
  }
  return g;
}

Eigen::VectorXd RefinerNet::predict(const Eigen::VectorXd& input,
                                    const Eigen::VectorXd& beta0) const {
  const Eigen::VectorXd out = forward(input.transpose()).row(0).transpose();
  return variant_ == RefinerVariant::Hybrid ? Eigen::VectorXd(beta0 + out) : out;
}

void RefinerNet::set_standardization(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale) {
  if (mean.size() != input_dim() || scale.size() != input_dim())
    throw DimensionMismatch("standardization size mismatch");
  if ((scale.array() <= 0.0).any()) throw std::invalid_argument("standardization scale must be > 0");
  mean_ = mean;
  scale_ = scale;
}

void RefinerNet::save(const std::filesystem::path& path) const {
  std::size_t count = 2 * static_cast<std::size_t>(input_dim());
  for (int l = 0; l < kLayers; ++l) count += w_[l].size() + b_[l].size();
  const json header = {{"format", "shapekit-refiner"},
                       {"version", 1},
                       {"variant", to_string(variant_)},
                       {"layers", kLayers},
                       {"hidden", w_[0].rows()},
                       {"activation", "leaky_relu"},
                       {"negative_slope", kNegativeSlope},
                       {"input_dim", input_dim()},
                       {"output_dim", output_dim()},
                       {"num_joints", num_joints_},
                       {"n", n_},
                       {"shape_dim", shape_dim_},
                       {"seed", seed_},
                       {"model", model_name},
                       {"final_loss", final_loss},
                       {"dtype", "f64"},
                       {"endianness", "little"},
                       {"blob_values", count}};
  const std::string text = header.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index i = 0; i < mean_.size(); ++i) put_f64(os, mean_[i]);
  for (Eigen::Index i = 0; i < scale_.size(); ++i) put_f64(os, scale_[i]);
  for (int l = 0; l < kLayers; ++l) {
    for (Eigen::Index r = 0; r < w_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < w_[l].cols(); ++c) put_f64(os, w_[l](r, c));
    for (Eigen::Index i = 0; i < b_[l].size(); ++i) put_f64(os, b_[l][i]);
  }
  if (!os) throw IoError("failed writing " + path.string());
}

RefinerNet RefinerNet::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError(path.string() + " is not a refiner file");
  const std::uint32_t len = get_u32(is);
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) throw IoError("refiner header truncated");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("refiner header: ") + e.what());
  }
  if (header.value("layers", 0) != kLayers || header.value("activation", "") != "leaky_relu")
    throw IoError("unsupported refiner architecture");

  RefinerNet net;
  net.variant_ = parse_variant(header.at("variant").get<std::string>());
  net.num_joints_ = header.at("num_joints").get<int>();
  net.n_ = header.at("n").get<int>();
  net.shape_dim_ = header.at("shape_dim").get<int>();
  net.seed_ = header.at("seed").get<std::uint64_t>();
  net.model_name = header.value("model", "");
  net.final_loss = header.value("final_loss", 0.0);
  const int in = header.at("input_dim").get<int>();
  const int hidden = header.at("hidden").get<int>();
  if (in != input_dim_for(net.variant_, net.num_joints_, net.n_, net.shape_dim_) ||
      header.at("output_dim").get<int>() != net.shape_dim_)
    throw IoError("refiner header dimensions are inconsistent");
  const std::array<int, kLayers + 1> dims = {in, hidden, hidden, hidden, net.shape_dim_};

  net.mean_.resize(in);
  net.scale_.resize(in);
  for (int i = 0; i < in; ++i) net.mean_[i] = get_f64(is);
  for (int i = 0; i < in; ++i) net.scale_[i] = get_f64(is);
  for (int l = 0; l < kLayers; ++l) {
    net.w_[l].resize(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < net.w_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.w_[l].cols(); ++c) net.w_[l](r, c) = get_f64(is);
    net.b_[l].resize(dims[l + 1]);
    for (Eigen::Index i = 0; i < net.b_[l].size(); ++i) net.b_[l][i] = get_f64(is);
    if (!net.w_[l].allFinite() || !net.b_[l].allFinite())
      throw IoError("refiner weights are not finite");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("refiner file has trailing bytes");
  return net;
}

ShapeCoeffs refine(const BodyModel& model, const PartDecomposition& decomp, const RefinerNet& net,
                   const AnalyticalResult& analytical, const ShapeDescriptor& target) {
  if (net.num_joints() != model.num_joints() || net.slicing_number() != decomp.n ||
      net.output_dim() != model.num_shape())
    throw DimensionMismatch("refiner was trained for a different model or slicing number");
  return {net.predict(net.assemble_input(analytical, target), analytical.beta0.beta)};
}

}  // namespace shapekit

#include "shapekit/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shapekit {

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "uniform") return NoiseKind::Uniform;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}

NoiseTarget parse_noise_target(const std::string& s) {
  if (s == "both") return NoiseTarget::Both;
  if (s == "lengths") return NoiseTarget::Lengths;
  if (s == "widths") return NoiseTarget::Widths;
  throw std::invalid_argument("unknown noise target '" + s + "'");
}

Eigen::VectorXd draw_unit_noise(const ShapeDescriptor& desc, NoiseKind kind, Rng& rng) {
  Eigen::VectorXd g(desc.bone_lengths.size() + desc.slice_widths.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    g[i] = kind == NoiseKind::Gaussian ? rng.normal() : rng.uniform(-std::sqrt(3.0), std::sqrt(3.0));
  return g;
}

ShapeDescriptor apply_noise(const ShapeDescriptor& desc, const Eigen::VectorXd& unit_noise,
                            double ratio, NoiseTarget target) {
  if (ratio < 0.0) throw std::invalid_argument("noise ratio must be >= 0");
  const auto L = desc.bone_lengths.size();
  if (unit_noise.size() != L + desc.slice_widths.size())
    throw DimensionMismatch("noise draw does not match descriptor size");
  ShapeDescriptor out = desc;
  auto perturb = [&](double v, double g) { return v * std::max(1.0 + ratio * g, 1e-6); };
  if (target != NoiseTarget::Widths)
    for (Eigen::Index i = 0; i < L; ++i) out.bone_lengths[i] = perturb(desc.bone_lengths[i], unit_noise[i]);
  if (target != NoiseTarget::Lengths)
    for (Eigen::Index i = 0; i < desc.slice_widths.size(); ++i)
      out.slice_widths[i] = perturb(desc.slice_widths[i], unit_noise[L + i]);
  return out;
}

ShapeDescriptor apply_noise(const ShapeDescriptor& desc, const NoiseSpec& spec, Rng& rng) {
  return apply_noise(desc, draw_unit_noise(desc, spec.kind, rng), spec.ratio, spec.target);
}

}  // namespace shapekit

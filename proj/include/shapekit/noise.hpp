#pragma once

#include "shapekit/decompose.hpp"
#include "shapekit/rng.hpp"

#include <cstdint>
#include <string>

namespace shapekit {

enum class NoiseKind { Gaussian, Uniform };
enum class NoiseTarget { Both, Lengths, Widths };

// "x% noise": every selected descriptor entry is multiplied by (1 + ratio * g)
// with g a unit-variance draw (standard normal, or uniform on [-sqrt 3, sqrt 3]).
struct NoiseSpec {
  double ratio = 0.0;
  NoiseKind kind = NoiseKind::Gaussian;
  NoiseTarget target = NoiseTarget::Both;
  std::uint64_t seed = 0;
};

NoiseKind parse_noise_kind(const std::string& s);
NoiseTarget parse_noise_target(const std::string& s);

// One unit-variance draw per descriptor entry (lengths first, then widths).
Eigen::VectorXd draw_unit_noise(const ShapeDescriptor& desc, NoiseKind kind, Rng& rng);

// Applies pre-drawn unit noise scaled by ratio. Entries stay positive.
ShapeDescriptor apply_noise(const ShapeDescriptor& desc, const Eigen::VectorXd& unit_noise,
                            double ratio, NoiseTarget target);

ShapeDescriptor apply_noise(const ShapeDescriptor& desc, const NoiseSpec& spec, Rng& rng);

}  // namespace shapekit

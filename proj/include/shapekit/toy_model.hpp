#pragma once

#include "shapekit/body_model.hpp"

#include <cstdint>
#include <vector>

namespace shapekit {

// Capsule-chain test body.
//
// Parts are stacked along +y; joint j sits at the bottom of part j (the root
// sits inside part 0). Each part is a stack of 8-vertex rings around the y axis.
// Coefficient 0 moves every vertex radially by kToyWidthGain times its offset
// from the axis, so beta_0 = +1 scales every width by (1 + kToyWidthGain).
// Coefficient 1 scales every y coordinate (and so every bone length) by
// (1 + kToyLengthGain). The remaining eight coefficients are local deformations
// (anisotropic, bulging, tapering, front-only, per-segment stretch) chosen so
// that part widths and bone lengths determine them only partially.
inline constexpr double kToyWidthGain = 0.25;
inline constexpr double kToyLengthGain = 0.1;
inline constexpr int kToyRingSize = 8;
inline constexpr int kToyShapeDim = 10;

struct ToyFixture {
  BodyModel model;
  std::vector<int> part_labels;   // construction part of every vertex
  std::vector<double> radius;     // distance of every template vertex from the axis
  Points3 joints;                 // exact template joint positions
};

ToyFixture make_toy_fixture(int num_parts, int verts_per_part, std::uint64_t seed);

// Throws std::invalid_argument unless num_parts >= 2 and verts_per_part >= 8.
BodyModel make_toy_model(int num_parts, int verts_per_part, std::uint64_t seed);

}  // namespace shapekit

#include "shapekit/toy_model.hpp"

#include "shapekit/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shapekit {

namespace {

struct Ring {
  int part;
  double u;       // axial position within the part's span, in [0, 1]
  double y;
  double radius;
  int first;      // index of the ring's first vertex
  int count;
};

// Piecewise-linear axial displacement that stretches the selected skeleton
// segments [y_i, y_{i+1}] by `gain` and rigidly carries everything above.
double segment_stretch(double y, const std::vector<double>& joint_y,
                       const std::vector<bool>& selected, double gain) {
  double shift = 0.0;
  for (std::size_t i = 0; i + 1 < joint_y.size(); ++i) {
    if (!selected[i]) continue;
    const double lo = joint_y[i];
    const double hi = joint_y[i + 1];
    shift += gain * std::clamp(y - lo, 0.0, hi - lo);
  }
  return shift;
}

}  // namespace

ToyFixture make_toy_fixture(int num_parts, int verts_per_part, std::uint64_t seed) {
  if (num_parts < 2) throw std::invalid_argument("toy model needs at least 2 parts");
  if (verts_per_part < kToyRingSize)
    throw std::invalid_argument("toy model needs at least 8 vertices per part");

  Rng rng(seed);
  const int J = num_parts;

  // Skeleton: a straight chain up the y axis.
  std::vector<double> segment(J - 1);
  for (double& len : segment) len = rng.uniform(0.25, 0.40);
  const double below_root = rng.uniform(0.08, 0.14);
  const double top_cap = rng.uniform(0.15, 0.25);
  std::vector<double> radius_of_part(J);
  for (double& r : radius_of_part) r = rng.uniform(0.06, 0.12);

  std::vector<double> joint_y(J, 0.0);
  for (int j = 1; j < J; ++j) joint_y[j] = joint_y[j - 1] + segment[j - 1];

  auto span = [&](int j) -> std::pair<double, double> {
    if (j == 0) return {-below_root, joint_y[1]};
    if (j == J - 1) return {joint_y[J - 1], joint_y[J - 1] + top_cap};
    return {joint_y[j], joint_y[j + 1]};
  };

  // Rings of 8; a leftover (< 8) group forms one extra ring at mid-span.
  const int full_rings = verts_per_part / kToyRingSize;
  const int leftover = verts_per_part % kToyRingSize;
  std::vector<Ring> rings;
  int next_vertex = 0;
  for (int j = 0; j < J; ++j) {
    const auto [lo, hi] = span(j);
    for (int r = 0; r < full_rings; ++r) {
      const double u = (r + 0.5) / full_rings;
      const double rad = radius_of_part[j] * (1.0 + 0.1 * std::sin(std::numbers::pi * u));
      rings.push_back({j, u, lo + u * (hi - lo), rad, next_vertex, kToyRingSize});
      next_vertex += kToyRingSize;
    }
    if (leftover > 0) {
      const double u = 0.5 + 0.25 / full_rings;
      const double rad = leftover == 1 ? 0.0 : radius_of_part[j];
      rings.push_back({j, u, lo + u * (hi - lo), rad, next_vertex, leftover});
      next_vertex += leftover;
    }
  }
  const int K = next_vertex;

  ToyFixture fx;
  BodyModel& m = fx.model;
  m.name = "toy-capsule-chain-p" + std::to_string(num_parts) + "-v" +
           std::to_string(verts_per_part) + "-s" + std::to_string(seed);
  m.parents.resize(J);
  for (int j = 0; j < J; ++j) m.parents[j] = j - 1;
  m.template_vertices.resize(K, 3);
  m.blend_weights = Eigen::MatrixXd::Zero(K, J);
  fx.part_labels.resize(K);
  fx.radius.resize(K);
  std::vector<double> vertex_u(K);

  for (const Ring& ring : rings) {
    for (int i = 0; i < ring.count; ++i) {
      const int k = ring.first + i;
      const double angle = std::numbers::pi / 8.0 + 2.0 * std::numbers::pi * i / ring.count;
      m.template_vertices.row(k) << ring.radius * std::cos(angle), ring.y,
          ring.radius * std::sin(angle);
      fx.part_labels[k] = ring.part;
      fx.radius[k] = ring.radius;
      vertex_u[k] = ring.u;

      // Soft weights near the part ends; the own part always dominates.
      const int j = ring.part;
      double lower = 0.0, upper = 0.0;
      if (j > 0 && ring.u < 0.25) lower = 0.45 * (1.0 - ring.u / 0.25);
      if (j < J - 1 && ring.u > 0.75) upper = 0.45 * (ring.u - 0.75) / 0.25;
      if (lower > 0.0) m.blend_weights(k, j - 1) = lower;
      if (upper > 0.0) m.blend_weights(k, j + 1) = upper;
      m.blend_weights(k, j) = 1.0 - lower - upper;
    }
  }

  // Joint j interpolates (or extrapolates) linearly between the two full rings
  // nearest to it along the axis; ring means lie on the axis.
  std::vector<const Ring*> full;
  for (const Ring& ring : rings)
    if (ring.count == kToyRingSize) full.push_back(&ring);
  std::sort(full.begin(), full.end(), [](const Ring* a, const Ring* b) { return a->y < b->y; });
  m.joint_regressor = Eigen::MatrixXd::Zero(J, K);
  fx.joints = Points3::Zero(J, 3);
  for (int j = 0; j < J; ++j) {
    const double y = joint_y[j];
    std::size_t hi = 1;
    while (hi + 1 < full.size() && full[hi]->y < y) ++hi;
    const Ring* r0 = full[hi - 1];
    const Ring* r1 = full[hi];
    const double t = (y - r0->y) / (r1->y - r0->y);
    for (int i = 0; i < kToyRingSize; ++i) {
      m.joint_regressor(j, r0->first + i) += (1.0 - t) / kToyRingSize;
      m.joint_regressor(j, r1->first + i) += t / kToyRingSize;
    }
    fx.joints(j, 1) = y;
  }

  // Quad strips between consecutive full rings.
  std::vector<Eigen::Vector3i> tris;
  for (std::size_t r = 0; r + 1 < full.size(); ++r) {
    const int a = full[r]->first;
    const int b = full[r + 1]->first;
    for (int i = 0; i < kToyRingSize; ++i) {
      const int i1 = (i + 1) % kToyRingSize;
      tris.emplace_back(a + i, b + i, a + i1);
      tris.emplace_back(a + i1, b + i, b + i1);
    }
  }
  m.faces.resize(static_cast<Eigen::Index>(tris.size()), 3);
  for (std::size_t f = 0; f < tris.size(); ++f) m.faces.row(f) = tris[f].transpose();

  // Shape basis.
  std::vector<bool> even_segments(J - 1), lower_segments(J - 1);
  for (int i = 0; i < J - 1; ++i) {
    even_segments[i] = i % 2 == 0;
    lower_segments[i] = 2 * i < J - 1;
  }
  const double y_min = -below_root;
  const double y_max = joint_y[J - 1] + top_cap;
  // Front bulge offset per ring, so the bulge leaves ring centroids (and
  // hence the regressed joints) in place.
  std::vector<double> front_mean(K, 0.0);
  for (const Ring& ring : rings) {
    double sum = 0.0;
    for (int i = 0; i < ring.count; ++i) sum += std::max(m.template_vertices(ring.first + i, 2), 0.0);
    for (int i = 0; i < ring.count; ++i) front_mean[ring.first + i] = sum / ring.count;
  }
  m.shape_basis = Eigen::MatrixXd::Zero(3 * K, kToyShapeDim);
  for (int k = 0; k < K; ++k) {
    const Eigen::Vector3d p = m.template_vertices.row(k).transpose();
    const Eigen::Vector3d radial(p.x(), 0.0, p.z());
    const int j = fx.part_labels[k];
    const double u = vertex_u[k];
    const double height = 2.0 * (p.y() - y_min) / (y_max - y_min) - 1.0;
    std::array<Eigen::Vector3d, kToyShapeDim> col;
    col[0] = kToyWidthGain * radial;
    col[1] = Eigen::Vector3d(0.0, kToyLengthGain * p.y(), 0.0);
    col[2] = j % 3 == 0 ? Eigen::Vector3d(0.15 * p.x(), 0.0, 0.0) : Eigen::Vector3d::Zero();
    col[3] = j % 4 == 1 ? Eigen::Vector3d(0.2 * std::sin(std::numbers::pi * u) * radial)
                        : Eigen::Vector3d::Zero();
    col[4] = (j % 2 == 0 ? 0.12 : -0.12) * radial;
    col[5] = Eigen::Vector3d(0.0, segment_stretch(p.y(), joint_y, even_segments, 0.08), 0.0);
    col[6] = 0.04 * (u - 0.5) * radial;
    col[7] = 0.12 * height * radial;
    col[8] = j % 4 == 2 ? Eigen::Vector3d(0.0, 0.0, 0.3 * (std::max(p.z(), 0.0) - front_mean[k]))
                        : Eigen::Vector3d::Zero();
    col[9] = Eigen::Vector3d(0.0, segment_stretch(p.y(), joint_y, lower_segments, 0.06) -
                                      segment_stretch(p.y(), joint_y,
                                                      std::vector<bool>(J - 1, true), 0.03),
                             0.0);
    for (int c = 0; c < kToyShapeDim; ++c) m.shape_basis.block<3, 1>(3 * k, c) = col[c];
  }

  m.validate();
  return fx;
}

BodyModel make_toy_model(int num_parts, int verts_per_part, std::uint64_t seed) {
  return make_toy_fixture(num_parts, verts_per_part, seed).model;
}

}  // namespace shapekit

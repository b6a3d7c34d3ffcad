#pragma once

#include "shapekit/body_model.hpp"
#include "shapekit/rng.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace testing {

inline Eigen::VectorXd random_beta(shapekit::Rng& rng, int s, double scale = 1.0) {
  Eigen::VectorXd b(s);
  for (int i = 0; i < s; ++i) b[i] = scale * rng.normal();
  return b;
}

inline Eigen::Vector3d random_unit(shapekit::Rng& rng) {
  Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

inline Eigen::Matrix3d random_rotation(shapekit::Rng& rng) {
  return Eigen::AngleAxisd(rng.uniform(-3.1, 3.1), random_unit(rng)).toRotationMatrix();
}

// Rodrigues' formula written out by hand.
inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
  const double t = w.norm();
  if (t == 0.0) return Eigen::Matrix3d::Identity();
  const Eigen::Vector3d k = w / t;
  Eigen::Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(t) * K + (1 - std::cos(t)) * K * K;
}

inline double rel_err(double got, double want, double floor = 1e-300) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("shapekit-" + tag + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing

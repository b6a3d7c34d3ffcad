#pragma once

#include "shapekit/noise.hpp"
#include "shapekit/refiner.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace shapekit {

// Mean per-vertex Euclidean distance in millimeters.
double v2v(const Points3& a, const Points3& b);

enum class Algorithm { Hybrid, Analytical, NN };
std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct EvalCell {
  Algorithm algorithm = Algorithm::Analytical;
  int n = 1;
  double ratio = 0.0;
  double mean_mm = 0.0;
  double std_mm = 0.0;
  double median_mm = 0.0;
  int count = 0;
  std::vector<double> errors_mm;  // per shape, in input order; not serialized
};

struct EvalReport {
  std::string asset;
  std::uint64_t seed = 0;
  NoiseKind noise_kind = NoiseKind::Gaussian;
  NoiseTarget noise_target = NoiseTarget::Both;
  std::vector<EvalCell> cells;

  const EvalCell& cell(Algorithm a, int n, double ratio) const;
};

struct GridConfig {
  std::vector<Algorithm> algorithms = {Algorithm::Hybrid, Algorithm::Analytical, Algorithm::NN};
  std::vector<int> ns = {1};
  std::vector<double> ratios = {0.0, 0.01, 0.02, 0.05};
  std::uint64_t seed = 0;
  NoiseKind noise_kind = NoiseKind::Gaussian;
  NoiseTarget noise_target = NoiseTarget::Both;
};

// Trained networks keyed by slicing number.
struct RefinerSet {
  std::map<int, RefinerNet> hybrid;
  std::map<int, RefinerNet> nn;
};

class MissingRefiner : public Error {
 public:
  using Error::Error;
};

// beta ~ N(0, I) held-out shapes.
std::vector<Eigen::VectorXd> sample_shapes(int shape_dim, int count, std::uint64_t seed);

// Every shape gets one unit noise draw per slicing number, shared by all
// ratios and algorithms, so cells differ only in the quantity varied.
EvalReport run_grid(const BodyModel& model, const std::vector<Eigen::VectorXd>& shapes,
                    const RefinerSet& refiners, const GridConfig& config);

std::string report_csv(const EvalReport& report);
std::string report_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& stem);

}  // namespace shapekit

#include "shapekit/eval.hpp"

#include "shapekit/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace shapekit {

double v2v(const Points3& a, const Points3& b) {
  if (a.rows() != b.rows() || a.rows() == 0)
    throw DimensionMismatch("v2v needs two non-empty meshes with the same vertex count");
  return 1000.0 * (a - b).rowwise().norm().mean();
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Hybrid: return "hybrid";
    case Algorithm::Analytical: return "analytical";
    case Algorithm::NN: return "nn";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "hybrid") return Algorithm::Hybrid;
  if (s == "analytical") return Algorithm::Analytical;
  if (s == "nn") return Algorithm::NN;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

const EvalCell& EvalReport::cell(Algorithm a, int n, double ratio) const {
  for (const EvalCell& c : cells)
    if (c.algorithm == a && c.n == n && c.ratio == ratio) return c;
  throw std::out_of_range("no report cell for " + to_string(a) + " n=" + std::to_string(n) +
                          " ratio=" + format_double(ratio));
}

std::vector<Eigen::VectorXd> sample_shapes(int shape_dim, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> out(count, Eigen::VectorXd(shape_dim));
  for (auto& beta : out)
    for (int i = 0; i < shape_dim; ++i) beta[i] = rng.normal();
  return out;
}

EvalReport run_grid(const BodyModel& model, const std::vector<Eigen::VectorXd>& shapes,
                    const RefinerSet& refiners, const GridConfig& config) {
  if (shapes.empty()) throw std::invalid_argument("evaluation needs at least one shape");
  for (double r : config.ratios)
    if (!(r >= 0.0)) throw std::invalid_argument("noise ratios must be >= 0");
  for (const auto& beta : shapes)
    if (beta.size() != model.num_shape())
      throw DimensionMismatch("shape has " + std::to_string(beta.size()) + " coefficients, model has " +
                              std::to_string(model.num_shape()));

  auto net_for = [&](Algorithm a, int n) -> const RefinerNet& {
    const auto& table = a == Algorithm::Hybrid ? refiners.hybrid : refiners.nn;
    const auto it = table.find(n);
    if (it == table.end())
      throw MissingRefiner("no " + to_string(a) + " refiner for n=" + std::to_string(n));
    return it->second;
  };
  for (int n : config.ns)
    for (Algorithm a : config.algorithms)
      if (a != Algorithm::Analytical) net_for(a, n);

  EvalReport report;
  report.asset = model.name;
  report.seed = config.seed;
  report.noise_kind = config.noise_kind;
  report.noise_target = config.noise_target;

  std::vector<Points3> truth;
  truth.reserve(shapes.size());
  for (const auto& beta : shapes) truth.push_back(shape_to_mesh(model, {beta}));

  for (int n : config.ns) {
    const PartDecomposition decomp = build_decomposition(model, n);
    const AnalyticalSolver solver(model, decomp);
    const std::size_t first = report.cells.size();
    for (double ratio : config.ratios)
      for (Algorithm a : config.algorithms) {
        EvalCell c;
        c.algorithm = a;
        c.n = n;
        c.ratio = ratio;
        report.cells.push_back(c);
      }

    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const ShapeDescriptor clean = extract_descriptor(model, decomp, truth[i]);
      Rng rng(config.seed ^ (0x9e3779b97f4a7c15ull * (i + 1)) ^ (static_cast<std::uint64_t>(n) << 48));
      const Eigen::VectorXd g = draw_unit_noise(clean, config.noise_kind, rng);
      std::size_t idx = first;
      for (double ratio : config.ratios) {
        const ShapeDescriptor target = apply_noise(clean, g, ratio, config.noise_target);
        const AnalyticalResult analytical = solver.solve(target);
        for (Algorithm a : config.algorithms) {
          ShapeCoeffs beta = a == Algorithm::Analytical
                                 ? analytical.beta0
                                 : refine(model, decomp, net_for(a, n), analytical, target);
          report.cells[idx++].errors_mm.push_back(v2v(shape_to_mesh(model, beta), truth[i]));
        }
      }
    }

    for (std::size_t idx = first; idx < report.cells.size(); ++idx) {
      EvalCell& c = report.cells[idx];
      const Eigen::Map<const Eigen::VectorXd> e(c.errors_mm.data(), c.errors_mm.size());
      c.count = static_cast<int>(e.size());
      c.mean_mm = e.mean();
      c.std_mm = std::sqrt((e.array() - c.mean_mm).square().sum() / c.count);
      std::vector<double> sorted = c.errors_mm;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t mid = sorted.size() / 2;
      c.median_mm = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    }
  }
  return report;
}

namespace {

std::string kind_name(NoiseKind k) { return k == NoiseKind::Gaussian ? "gaussian" : "uniform"; }

std::string target_name(NoiseTarget t) {
  switch (t) {
    case NoiseTarget::Both: return "both";
    case NoiseTarget::Lengths: return "lengths";
    case NoiseTarget::Widths: return "widths";
  }
  return "?";
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "asset,seed,noise_kind,noise_on,algorithm,n,ratio,mean_mm,std_mm,median_mm,count\n";
  for (const EvalCell& c : report.cells)
    out << report.asset << ',' << report.seed << ',' << kind_name(report.noise_kind) << ','
        << target_name(report.noise_target) << ',' << to_string(c.algorithm) << ',' << c.n << ','
        << format_double(c.ratio) << ',' << format_double(c.mean_mm) << ','
        << format_double(c.std_mm) << ',' << format_double(c.median_mm) << ',' << c.count << '\n';
  return out.str();
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["asset"] = report.asset;
  j["seed"] = report.seed;
  j["noise_kind"] = kind_name(report.noise_kind);
  j["noise_on"] = target_name(report.noise_target);
  j["units"] = "mm";
  auto cells = nlohmann::ordered_json::array();
  for (const EvalCell& c : report.cells) {
    nlohmann::ordered_json cell;
    cell["algorithm"] = to_string(c.algorithm);
    cell["n"] = c.n;
    cell["ratio"] = c.ratio;
    cell["mean_mm"] = c.mean_mm;
    cell["std_mm"] = c.std_mm;
    cell["median_mm"] = c.median_mm;
    cell["count"] = c.count;
    cells.push_back(cell);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

void write_report(const EvalReport& report, const std::filesystem::path& stem) {
  std::filesystem::path csv = stem, js = stem;
  csv += ".csv";
  js += ".json";
  std::ofstream(csv) << report_csv(report);
  std::ofstream(js) << report_json(report);
  if (!std::filesystem::exists(csv) || !std::filesystem::exists(js))
    throw IoError("cannot write report " + stem.string());
}

}  // namespace shapekit

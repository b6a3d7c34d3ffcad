#include "doctest.h"
#include "support.hpp"

#include "shapekit/eval.hpp"
#include "shapekit/toy_model.hpp"

#include "json.hpp"

#include <algorithm>

using namespace shapekit;

TEST_CASE("v2v is the mean vertex distance in millimeters") {
  Rng rng(1);
  Points3 a(50, 3), b(50, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal(), b.data()[i] = rng.normal();
  double oracle = 0.0;
  for (int k = 0; k < 50; ++k) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += (a(k, c) - b(k, c)) * (a(k, c) - b(k, c));
    oracle += std::sqrt(s);
  }
  CHECK(testing::rel_err(v2v(a, b), 1000.0 * oracle / 50) < 1e-12);
  CHECK(v2v(a, a) == 0.0);
  const Points3 shifted = a.rowwise() + Eigen::RowVector3d(0.003, 0.0, 0.004);
  CHECK(v2v(a, shifted) == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(v2v(a, b) == v2v(b, a));
  CHECK_THROWS_AS(v2v(a, Points3::Zero(49, 3)), DimensionMismatch);
}

TEST_CASE("algorithm names round trip") {
  for (Algorithm a : {Algorithm::Hybrid, Algorithm::Analytical, Algorithm::NN})
    CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_THROWS_AS(parse_algorithm("fancy"), std::invalid_argument);
}

TEST_CASE("noise scales every selected entry and keeps entries positive") {
  const BodyModel m = make_toy_model(5, 32, 2);
  const PartDecomposition d = build_decomposition(m, 2);
  const ShapeDescriptor desc = extract_descriptor(m, d, m.template_vertices);
  Rng rng(3);
  const Eigen::VectorXd g = draw_unit_noise(desc, NoiseKind::Gaussian, rng);
  REQUIRE(g.size() == desc.bone_lengths.size() + desc.slice_widths.size());
  const auto L = desc.bone_lengths.size();

  const ShapeDescriptor zero = apply_noise(desc, g, 0.0, NoiseTarget::Both);
  CHECK(zero.bone_lengths == desc.bone_lengths);
  CHECK(zero.slice_widths == desc.slice_widths);

  const ShapeDescriptor both = apply_noise(desc, g, 0.05, NoiseTarget::Both);
  for (Eigen::Index i = 0; i < L; ++i)
    CHECK(both.bone_lengths[i] == doctest::Approx(desc.bone_lengths[i] * (1 + 0.05 * g[i])));
  for (Eigen::Index i = 0; i < desc.slice_widths.size(); ++i)
    CHECK(both.slice_widths[i] == doctest::Approx(desc.slice_widths[i] * (1 + 0.05 * g[L + i])));

  const ShapeDescriptor lengths = apply_noise(desc, g, 0.05, NoiseTarget::Lengths);
  CHECK(lengths.slice_widths == desc.slice_widths);
  CHECK(lengths.bone_lengths == both.bone_lengths);
  const ShapeDescriptor widths = apply_noise(desc, g, 0.05, NoiseTarget::Widths);
  CHECK(widths.bone_lengths == desc.bone_lengths);
  CHECK(widths.slice_widths == both.slice_widths);

  const ShapeDescriptor huge = apply_noise(desc, g, 50.0, NoiseTarget::Both);
  CHECK((huge.bone_lengths.array() > 0).all());
  CHECK((huge.slice_widths.array() > 0).all());
}

TEST_CASE("unit noise draws have unit variance") {
  const BodyModel m = make_toy_model(6, 32, 2);
  const PartDecomposition d = build_decomposition(m, 1);
  const ShapeDescriptor desc = extract_descriptor(m, d, m.template_vertices);
  for (NoiseKind kind : {NoiseKind::Gaussian, NoiseKind::Uniform}) {
    Rng rng(4);
    double sum = 0.0, sq = 0.0, peak = 0.0;
    int count = 0;
    for (int i = 0; i < 4000; ++i) {
      const Eigen::VectorXd g = draw_unit_noise(desc, kind, rng);
      sum += g.sum();
      sq += g.squaredNorm();
      peak = std::max(peak, g.cwiseAbs().maxCoeff());
      count += static_cast<int>(g.size());
    }
    CHECK(std::abs(sum / count) < 0.02);
    CHECK(std::abs(sq / count - 1.0) < 0.03);
    if (kind == NoiseKind::Uniform) CHECK(peak <= std::sqrt(3.0));
  }
  CHECK(parse_noise_kind("uniform") == NoiseKind::Uniform);
  CHECK(parse_noise_target("widths") == NoiseTarget::Widths);
  CHECK_THROWS_AS(parse_noise_kind("pink"), std::invalid_argument);
}

TEST_CASE("grid evaluation is complete, deterministic and consistent") {
  const BodyModel m = make_toy_model(5, 32, 7);
  const auto shapes = sample_shapes(m.num_shape(), 12, 3);
  CHECK(shapes == sample_shapes(m.num_shape(), 12, 3));
  RefinerSet nets;
  for (int n : {1, 2}) {
    nets.hybrid.emplace(n, RefinerNet(RefinerVariant::Hybrid, m.num_joints(), n, m.num_shape(), 1, 16));
    nets.nn.emplace(n, RefinerNet(RefinerVariant::Direct, m.num_joints(), n, m.num_shape(), 1, 16));
  }
  GridConfig cfg;
  cfg.ns = {1, 2};
  cfg.seed = 9;
  const EvalReport a = run_grid(m, shapes, nets, cfg);
  const EvalReport b = run_grid(m, shapes, nets, cfg);
  CHECK(a.cells.size() == 3 * 2 * 4);
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_json(a) == report_json(b));

  for (int n : {1, 2})
    for (double r : cfg.ratios) {
      const EvalCell& h = a.cell(Algorithm::Hybrid, n, r);
      const EvalCell& an = a.cell(Algorithm::Analytical, n, r);
      CHECK(h.count == 12);
      // An untrained hybrid net is the analytical solution.
      CHECK(h.errors_mm == an.errors_mm);
      std::vector<double> e = an.errors_mm;
      double mean = 0.0;
      for (double x : e) mean += x;
      mean /= static_cast<double>(e.size());
      CHECK(testing::rel_err(an.mean_mm, mean) < 1e-12);
      std::sort(e.begin(), e.end());
      CHECK(an.median_mm == doctest::Approx(0.5 * (e[5] + e[6])));
    }

  // Clean cells reproduce a direct analytical reconstruction.
  const PartDecomposition d = build_decomposition(m, 2);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const Points3 truth = shape_to_mesh(m, {shapes[i]});
    const AnalyticalResult r = analytical_reconstruct(m, d, extract_descriptor(m, d, truth));
    CHECK(testing::rel_err(a.cell(Algorithm::Analytical, 2, 0.0).errors_mm[i],
                           v2v(shape_to_mesh(m, r.beta0), truth)) < 1e-12);
  }

  cfg.seed = 10;
  CHECK(run_grid(m, shapes, nets, cfg).cell(Algorithm::Analytical, 1, 0.05).mean_mm !=
        a.cell(Algorithm::Analytical, 1, 0.05).mean_mm);
  CHECK(run_grid(m, shapes, nets, cfg).cell(Algorithm::Analytical, 1, 0.0).mean_mm ==
        a.cell(Algorithm::Analytical, 1, 0.0).mean_mm);
}

TEST_CASE("reports carry the run metadata") {
  const BodyModel m = make_toy_model(4, 32, 7);
  const auto shapes = sample_shapes(m.num_shape(), 4, 1);
  GridConfig cfg;
  cfg.algorithms = {Algorithm::Analytical};
  cfg.ratios = {0.0, 0.02};
  cfg.seed = 77;
  const EvalReport rep = run_grid(m, shapes, {}, cfg);
  const std::string csv = report_csv(rep);
  CHECK(csv.rfind("asset,seed,noise_kind,noise_on,algorithm,n,ratio,mean_mm,std_mm,median_mm,count\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const auto j = nlohmann::json::parse(report_json(rep));
  CHECK(j["seed"] == 77);
  CHECK(j["cells"].size() == 2);
  testing::TempDir dir("report");
  write_report(rep, dir.path / "r");
  CHECK(testing::slurp(dir.path / "r.csv") == csv);
  CHECK(testing::slurp(dir.path / "r.json") == report_json(rep));
}

TEST_CASE("missing networks are reported") {
  const BodyModel m = make_toy_model(4, 32, 7);
  const auto shapes = sample_shapes(m.num_shape(), 2, 1);
  GridConfig cfg;
  cfg.algorithms = {Algorithm::NN};
  CHECK_THROWS_AS(run_grid(m, shapes, {}, cfg), MissingRefiner);
  RefinerSet wrong;
  wrong.nn.emplace(1, RefinerNet(RefinerVariant::Direct, m.num_joints() + 1, 1, m.num_shape(), 1, 8));
  CHECK_THROWS(run_grid(m, shapes, wrong, cfg));
}

// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
#include "augment_cases.hpp"
#include "cli_runs.hpp"
#include "convert_cases.hpp"

#include "shapekit/eval.hpp"
#include "shapekit/losses.hpp"
#include "shapekit/training.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>

using namespace shapekit;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void width_laws() {
  Rng rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  double product = 0.0, closed = 0.0, absolute = 0.0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    const testing::AugmentCase c = testing::random_augment_case(rng);
    product = std::max(product, testing::product_law_violation(c));
    const Eigen::VectorXd derived = derive_widths_2d(c.proj, c.aug);
    const Eigen::VectorXd oracle = transform_2d(c.proj, c.aug).widths_2d;
    for (Eigen::Index k = 0; k < derived.size(); ++k) {
      closed = std::max(closed, std::abs(derived[k] - oracle[k]) / std::max(oracle[k], testing::kWidthFloorPx));
      absolute = std::max(absolute, std::abs(derived[k] - oracle[k]));
    }
  }
  const double secs = seconds_since(t0);
  report(product < 1e-9 && secs < 30.0, "width product law",
         fmt("%.0f cases, max relative violation %.3g (< 1e-9; widths floored at %.0e px), %.2f s (< 30 s)",
             cases, product, testing::kWidthFloorPx, secs));
  report(closed < 1e-9, "closed-form widths vs transformed points",
         fmt("%.0f cases, max relative error %.3g (< 1e-9; widths floored at %.0e px), max absolute %.3g px",
             cases, closed, testing::kWidthFloorPx, absolute));
}

void fixed_point() {
  const BodyModel toy = make_toy_model(6, 64, 7);
  const PartDecomposition d = build_decomposition(toy, 1);
  const double norm =
      analytical_reconstruct(toy, d, extract_descriptor(toy, d, toy.template_vertices)).beta0.beta.norm();
  report(norm < 1e-6, "analytical fixed point (toy)", fmt("|beta0| = %.3g (< 1e-6)", norm));
  if (const char* dir = std::getenv("SHAPEKIT_SMPL_DIR")) {
    const BodyModel smpl = load_model(dir);
    const PartDecomposition ds = build_decomposition(smpl, 1);
    const double ns = analytical_reconstruct(smpl, ds, extract_descriptor(smpl, ds, smpl.template_vertices))
                          .beta0.beta.norm();
    report(ns < 1e-6, "analytical fixed point (SHAPEKIT_SMPL_DIR)", fmt("|beta0| = %.3g (< 1e-6)", ns));
  } else {
    std::printf("SKIP analytical fixed point (real asset): SHAPEKIT_SMPL_DIR not set\n");
  }
}

void gradients() {
  const BodyModel m = make_toy_model(6, 64, 7);
  Rng rng(31);
  double worst = 0.0;
  int coords = 0;
  for (int n : {1, 2, 3}) {
    const PartDecomposition d = build_decomposition(m, n);
    const DecomposeLoss loss(m, d, 0.01);
    for (int trial = 0; trial < 4; ++trial) {
      const ShapeDescriptor desc = extract_descriptor(
          m, d, shape_to_mesh(m, {testing::random_beta(rng, m.num_shape())}));
      const DecomposeTarget tgt = make_decompose_target(m, d, desc);
      const Eigen::VectorXd beta = testing::random_beta(rng, m.num_shape());
      LossWeights w;
      const Eigen::VectorXd g = loss.evaluate(beta, tgt, w).grad;
      for (int i = 0; i < m.num_shape(); ++i) {
        Eigen::VectorXd bp = beta, bm = beta;
        bp[i] += 1e-5;
        bm[i] -= 1e-5;
        const double fd =
            (loss.evaluate(bp, tgt, w, false).total - loss.evaluate(bm, tgt, w, false).total) / 2e-5;
        worst = std::max(worst, std::abs(g[i] - fd) / std::max(1.0, std::abs(fd)));
        ++coords;
      }
    }
  }

  RefinerNet net(RefinerVariant::Hybrid, m.num_joints(), 1, m.num_shape(), 5, 32);
  for (auto& w : net.weights())
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.3 * rng.normal();
  Eigen::MatrixXd x(5, net.input_dim()), go(5, net.output_dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < go.size(); ++i) go.data()[i] = rng.normal();
  RefinerNet::Cache cache;
  net.forward(x, &cache);
  const RefinerNet::Gradients grads = net.backward(cache, go);
  auto f = [&] { return (net.forward(x).array() * go.array()).sum(); };
  for (int l = 0; l < RefinerNet::kLayers; ++l)
    for (int trial = 0; trial < 30; ++trial) {
      const auto idx = static_cast<Eigen::Index>(rng.below(net.weights()[l].size()));
      double& p = net.weights()[l].data()[idx];
      const double saved = p;
      p = saved + 1e-5;
      const double fp = f();
      p = saved - 1e-5;
      const double fm = f();
      p = saved;
      const double fd = (fp - fm) / 2e-5;
      worst = std::max(worst, std::abs(grads.w[l].data()[idx] - fd) / std::max(1.0, std::abs(fd)));
      ++coords;
    }
  report(worst < 1e-4 && coords >= 100, "gradients vs central differences",
         fmt("%.0f coordinates, max relative error %.3g (< 1e-4)", coords, worst));
}

void conversion() {
  Rng rng(41);
  double recover = 0.0, optimal = 0.0;
  const int cases = 20;
  for (int i = 0; i < cases; ++i) {
    const BodyModel dst =
        make_toy_model(3 + static_cast<int>(rng.below(4)), i % 2 ? 512 : 32, rng.next());
    const int p = 10 + static_cast<int>(rng.below(300));
    const PointRegressor h_dst = testing::random_regressor(rng, p, dst.num_vertices());
    const Eigen::VectorXd beta = testing::random_beta(rng, dst.num_shape());
    const Eigen::Vector3d t0(rng.normal(), rng.normal(), rng.normal());
    const Points3 samples = h_dst.apply(shape_to_mesh(dst, {beta})).rowwise() + t0.transpose();
    const PointRegressor h_src = testing::identity_regressor(p);
    const ConversionResult r = cross_model_fit(samples, h_src, dst, h_dst);
    recover = std::max({recover, (r.beta_dst.beta - beta).lpNorm<Eigen::Infinity>(),
                        (r.t - t0).lpNorm<Eigen::Infinity>()});

    const BodyModel src_model = make_toy_model(5, 40, rng.next());
    const int q = 20 + static_cast<int>(rng.below(200));
    const PointRegressor hs = testing::random_regressor(rng, q, src_model.num_vertices());
    const PointRegressor hd = testing::random_regressor(rng, q, dst.num_vertices());
    const Points3 src = shape_to_mesh(src_model, {testing::random_beta(rng, src_model.num_shape())});
    const ConversionResult fit = cross_model_fit(src, hs, dst, hd);
    const ConversionSystem sys = build_conversion_system(src, hs, dst, hd);
    const double atb = (sys.A.transpose() * sys.b).lpNorm<Eigen::Infinity>();
    optimal = std::max(optimal, (sys.A.transpose() * (sys.A * fit.solution - sys.b)).lpNorm<Eigen::Infinity>() /
                                    (1.0 + atb));
  }
  report(recover < 1e-6, "conversion construct-and-recover",
         fmt("%.0f cases, max coefficient/offset error %.3g (< 1e-6)", cases, recover));
  report(optimal <= 1e-8, "conversion optimality",
         fmt("%.0f cases, max |A^T(A xi - b)| / (1 + |A^T b|) = %.3g (<= 1e-8)", cases, optimal));
}

void table4() {
  const char* dir = std::getenv("SHAPEKIT_SMPL_DIR");
  const BodyModel model = dir ? load_model(dir) : make_toy_model(6, 64, 7);
  const std::string label = dir ? "real asset" : "toy 6x64";
  const auto t0 = std::chrono::steady_clock::now();
  const PartDecomposition d = build_decomposition(model, 1);
  RefinerSet nets;
  for (RefinerVariant v : {RefinerVariant::Hybrid, RefinerVariant::Direct}) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.num_samples = 20000;
    cfg.epochs = 10;
    cfg.seed = 1;
    TrainResult r = train_refiner(model, d, cfg);
    (v == RefinerVariant::Hybrid ? nets.hybrid : nets.nn).emplace(1, std::move(r.net));
  }
  GridConfig grid;
  grid.seed = 99;
  const EvalReport rep = run_grid(model, sample_shapes(model.num_shape(), 500, 12345), nets, grid);
  const double secs = seconds_since(t0);

  auto mean = [&](Algorithm a, double r) { return rep.cell(a, 1, r).mean_mm; };
  const double an = mean(Algorithm::Analytical, 0.0), hy = mean(Algorithm::Hybrid, 0.0),
               nn = mean(Algorithm::NN, 0.0);
  report(std::abs(an - 6.14) <= 3.0, "table 4 analytical at 0% (" + label + ")",
         fmt("mean V2V %.3f mm (6.14 +- 3)", an));
  report(hy <= 3.0, "table 4 hybrid at 0% (" + label + ")",
         fmt("mean V2V %.3f mm (<= 3) after 20000 samples x 10 epochs", hy));
  report(hy <= nn && nn <= an, "table 4 ordering (" + label + ")",
         fmt("hybrid %.3f <= nn %.3f <= analytical %.3f mm", hy, nn, an));
  bool monotone = true;
  std::ostringstream detail;
  for (Algorithm a : grid.algorithms) {
    detail << to_string(a);
    double prev = -1.0;
    for (double r : grid.ratios) {
      const double v = mean(a, r);
      detail << " " << fmt("%.2f", v);
      monotone = monotone && v >= prev;
      prev = v;
    }
    detail << "; ";
  }
  report(monotone, "table 4 noise monotonicity (" + label + ")",
         detail.str() + "ratios 0/1/2/5%");
  report(secs < 1800.0, "table 4 runtime", fmt("training + eval %.0f s (< 1800 s)", secs));
}

void determinism() {
  testing::TempDir dir("acceptance-cli");
  bool all = true;
  std::string bad;
  int count = 0;
  for (const auto& r : testing::cli_determinism(SHAPEKIT_CLI, dir.path)) {
    ++count;
    if (!(r.ok && r.identical)) all = false, bad += " " + r.command;
  }
  report(all, "CLI determinism",
         all ? fmt("%.0f subcommands byte-identical across two runs", count) : "differs:" + bad);
}

}  // namespace

int main() {
  width_laws();
  fixed_point();
  gradients();
  conversion();
  determinism();
  table4();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#include "shapekit/augment.hpp"
#include "shapekit/convert.hpp"
#include "shapekit/eval.hpp"
#include "shapekit/io.hpp"
#include "shapekit/toy_model.hpp"
#include "shapekit/training.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>

using namespace shapekit;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<double> split_numbers(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  if (expected && out.size() != expected)
    throw std::invalid_argument(std::string(what) + " needs " + std::to_string(expected) +
                                " comma-separated numbers");
  return out;
}

Eigen::VectorXd pick_row(const std::vector<Eigen::VectorXd>& rows, int row, int shape_dim) {
  if (row < 0 || row >= static_cast<int>(rows.size()))
    throw std::invalid_argument("beta row " + std::to_string(row) + " out of range");
  if (rows[row].size() != shape_dim)
    throw ShapeMismatch("beta", "has " + std::to_string(rows[row].size()) +
                                    " coefficients, model has " + std::to_string(shape_dim));
  return rows[row];
}

ojson to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ojson rows_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Eigen::VectorXd row = m.row(r).transpose();
    rows.push_back(to_json(row));
  }
  return rows;
}

ojson widths_json(const Eigen::VectorXd& w, int n) {
  ojson rows = ojson::array();
  for (Eigen::Index p = 0; p < w.size() / n; ++p) rows.push_back(to_json(Eigen::VectorXd(w.segment(p * n, n))));
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapekit: part-based body shape parameterization toolkit"};
  app.require_subcommand(1);

  // make-toy
  int toy_parts = 6, toy_verts = 64;
  std::uint64_t toy_seed = 7;
  std::string toy_out;
  auto* make_toy = app.add_subcommand("make-toy", "Write a synthetic capsule-chain body model");
  make_toy->add_option("--parts", toy_parts, "Number of parts (joints)");
  make_toy->add_option("--verts", toy_verts, "Vertices per part");
  make_toy->add_option("--seed", toy_seed, "Generator seed");
  make_toy->add_option("--out", toy_out, "Output model directory")->required();

  // extract
  std::string model_dir, beta_csv, out_path;
  int n = 1, beta_row = 0;
  auto* extract = app.add_subcommand("extract", "Bone lengths and slice widths of a shape");
  extract->add_option("--model", model_dir)->required();
  extract->add_option("--beta", beta_csv, "Coefficient CSV (one row per shape)")->required();
  extract->add_option("--row", beta_row, "Row of the CSV to use");
  extract->add_option("--n", n, "Slicing number");
  extract->add_option("--out", out_path)->required();

  // reconstruct
  std::string descriptor_path, refiner_path;
  bool analytical_only = false;
  auto* reconstruct = app.add_subcommand("reconstruct", "Shape coefficients from a descriptor");
  reconstruct->add_option("--model", model_dir)->required();
  reconstruct->add_option("--descriptor", descriptor_path)->required();
  reconstruct->add_option("--refiner", refiner_path, "Trained hybrid or nn refiner");
  reconstruct->add_flag("--analytical-only", analytical_only);
  reconstruct->add_option("--out", out_path)->required();

  // train-refiner
  TrainConfig tc;
  std::string variant = "hybrid", noise_kind = "gaussian", optimizer = "adam";
  auto* train = app.add_subcommand("train-refiner", "Train the refinement network");
  train->add_option("--model", model_dir)->required();
  train->add_option("--n", n);
  train->add_option("--variant", variant, "hybrid or nn");
  train->add_option("--samples", tc.num_samples);
  train->add_option("--noise", tc.noise_ratio, "Maximum relative descriptor noise");
  train->add_option("--noise-kind", noise_kind, "gaussian or uniform");
  train->add_option("--epochs", tc.epochs);
  train->add_option("--lr", tc.learning_rate);
  train->add_option("--optimizer", optimizer, "adam or momentum");
  train->add_option("--length-unit", tc.length_unit, "Loss length unit in meters");
  train->add_option("--hidden", tc.hidden);
  train->add_option("--seed", tc.seed);
  train->add_option("--out", out_path)->required();

  // augment
  std::string pose_csv, cam_text, aug_text;
  double sbar = 0.0;
  std::uint64_t aug_seed = 0;
  auto* augment = app.add_subcommand("augment", "Derive annotations for an affine image augmentation");
  augment->add_option("--model", model_dir)->required();
  augment->add_option("--beta", beta_csv)->required();
  augment->add_option("--row", beta_row);
  augment->add_option("--pose", pose_csv, "Axis-angle CSV, one row per joint");
  augment->add_option("--cam", cam_text, "s,ox,oy")->required();
  auto* aug_opt = augment->add_option("--aug", aug_text, "a,b,phi");
  auto* sample_opt = augment->add_option("--sample-aug", aug_seed, "Draw the transform from this seed");
  aug_opt->excludes(sample_opt);
  augment->add_option("--sbar", sbar, "Camera scale after augmentation (pixels per meter)");
  augment->add_option("--n", n);
  augment->add_option("--out", out_path)->required();

  // convert
  std::string src_model, src_mesh, src_reg, dst_model, dst_reg;
  auto* convert = app.add_subcommand("convert", "Fit a destination model to a source mesh");
  auto* src_model_opt = convert->add_option("--src-model", src_model);
  convert->add_option("--src-beta", beta_csv);
  convert->add_option("--row", beta_row);
  auto* src_mesh_opt = convert->add_option("--src-mesh", src_mesh, "Source mesh as OBJ");
  src_model_opt->excludes(src_mesh_opt);
  convert->add_option("--h-src", src_reg, "Source sample regressor triplets")->required();
  convert->add_option("--dst-model", dst_model)->required();
  convert->add_option("--h-dst", dst_reg, "Destination sample regressor triplets")->required();
  convert->add_option("--out", out_path, "result.json with beta, t, residual_rms, gram_condition")->required();

  // eval-noise
  std::string refiner_dir, ns_text = "1", ratios_text = "0,0.01,0.02,0.05", algos_text = "hybrid,analytical,nn",
                           noise_on = "both";
  int eval_count = 500;
  GridConfig grid;
  auto* eval = app.add_subcommand("eval-noise", "V2V error versus descriptor noise");
  eval->add_option("--model", model_dir)->required();
  eval->add_option("--refiner-dir", refiner_dir, "Holds hybrid_n{N}.bin and nn_n{N}.bin");
  eval->add_option("--ns", ns_text);
  eval->add_option("--ratios", ratios_text);
  eval->add_option("--algorithms", algos_text);
  eval->add_option("--shapes", beta_csv, "Held-out coefficients; default draws N(0, I)");
  eval->add_option("--count", eval_count, "Number of drawn shapes when --shapes is absent");
  eval->add_option("--noise-kind", noise_kind);
  eval->add_option("--noise-on", noise_on, "both, lengths or widths");
  eval->add_option("--seed", grid.seed);
  eval->add_option("--out", out_path, "Report stem; writes .csv and .json")->required();

  // export-obj
  auto* export_obj = app.add_subcommand("export-obj", "Write a shaped (and posed) mesh as OBJ");
  export_obj->add_option("--model", model_dir)->required();
  export_obj->add_option("--beta", beta_csv, "Coefficient CSV; template when absent");
  export_obj->add_option("--row", beta_row);
  export_obj->add_option("--pose", pose_csv);
  export_obj->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*make_toy) {
      save_model(make_toy_model(toy_parts, toy_verts, toy_seed), toy_out);
    } else if (*extract) {
      const BodyModel model = load_model(model_dir);
      const Eigen::VectorXd beta = pick_row(read_beta_csv(beta_csv), beta_row, model.num_shape());
      const PartDecomposition decomp = build_decomposition(model, n);
      write_descriptor_json(extract_descriptor(model, decomp, shape_to_mesh(model, {beta})), out_path);
    } else if (*reconstruct) {
      const BodyModel model = load_model(model_dir);
      const ShapeDescriptor target = read_descriptor_json(descriptor_path);
      const PartDecomposition decomp = build_decomposition(model, target.n);
      const AnalyticalResult analytical = analytical_reconstruct(model, decomp, target);
      ShapeCoeffs beta = analytical.beta0;
      if (!analytical_only) {
        if (refiner_path.empty()) throw std::invalid_argument("--refiner is required unless --analytical-only");
        beta = refine(model, decomp, RefinerNet::load(refiner_path), analytical, target);
      }
      write_beta_csv({beta.beta}, out_path);
    } else if (*train) {
      const BodyModel model = load_model(model_dir);
      const PartDecomposition decomp = build_decomposition(model, n);
      tc.variant = parse_variant(variant);
      tc.noise_kind = parse_noise_kind(noise_kind);
      tc.optimizer = parse_optimizer(optimizer);
      tc.on_epoch = [](int epoch, double loss) {
        std::cerr << "epoch " << epoch + 1 << " loss " << format_double(loss) << '\n';
      };
      const TrainResult result = train_refiner(model, decomp, tc);
      result.net.save(out_path);
      std::cout << "final_loss " << format_double(result.final_loss) << '\n';
    } else if (*augment) {
      const BodyModel model = load_model(model_dir);
      const Eigen::VectorXd beta = pick_row(read_beta_csv(beta_csv), beta_row, model.num_shape());
      const Pose pose = pose_csv.empty() ? Pose::identity(model.num_joints())
                                         : read_pose_csv(pose_csv, model.num_joints());
      const auto cam_v = split_numbers(cam_text, 3, "--cam");
      OrthoCamera cam{cam_v[0], {cam_v[1], cam_v[2]}};
      const Eigen::Vector2d center(cam_v[1], cam_v[2]);
      AffineAugment aug;
      if (!aug_text.empty()) {
        const auto a = split_numbers(aug_text, 3, "--aug");
        aug = {a[0], a[1], a[2], center};
      } else if (*sample_opt) {
        Rng rng(aug_seed);
        aug = sample_augment(rng, center);
      }
      OrthoCamera cam_after = cam;
      if (sbar > 0.0) cam_after.scale = sbar;

      const Points3 rest = shape_to_mesh(model, {beta});
      const Points3 rest_joints = regress_joints(model, rest);
      const Points3 posed = pose_mesh(model, rest, pose);
      const Points3 posed_joints = pose_joints(model, rest_joints, pose);
      const PartDecomposition decomp = build_decomposition(model, n);
      const ShapeDescriptor desc = extract_descriptor(model, decomp, rest);
      const Projected2D before = project(model, decomp, posed, posed_joints, cam);
      const Projected2D after = transform_2d(before, aug);
      const StretchedSkeleton stretched =
          stretch_bones_to_projection(model, rest_joints, posed_joints, before, after, cam, cam_after);

      ojson j;
      j["augment"] = {{"a", aug.a}, {"b", aug.b}, {"phi", aug.phi}, {"center", to_json(Eigen::VectorXd(aug.center))}};
      j["camera_before"] = {{"scale", cam.scale}, {"offset", to_json(Eigen::VectorXd(cam.offset))}};
      j["camera_after"] = {{"scale", cam_after.scale}, {"offset", to_json(Eigen::VectorXd(cam_after.offset))}};
      j["n"] = n;
      j["bone_lengths"] = to_json(stretched.bone_lengths);
      j["slice_widths"] = widths_json(derive_widths_3d(desc, before, aug, cam.scale, cam_after.scale), n);
      j["slice_widths_2d"] = widths_json(derive_slice_widths_2d(before, aug), n);
      j["joints_2d"] = rows_json(after.joints_2d);
      j["posed_joints"] = rows_json(stretched.posed_joints);
      write_text(out_path, j.dump(2) + "\n");
    } else if (*convert) {
      const BodyModel dst = load_model(dst_model);
      Points3 source;
      if (!src_model.empty()) {
        const BodyModel src = load_model(src_model);
        source = beta_csv.empty() ? src.template_vertices
                                  : shape_to_mesh(src, {pick_row(read_beta_csv(beta_csv), beta_row, src.num_shape())});
      } else if (!src_mesh.empty()) {
        source = read_obj(src_mesh).vertices;
      } else {
        throw std::invalid_argument("convert needs --src-model or --src-mesh");
      }
      const PointRegressor h_src = load_triplets(src_reg, static_cast<int>(source.rows()));
      const PointRegressor h_dst = load_triplets(dst_reg, dst.num_vertices());
      const ConversionResult r = cross_model_fit(source, h_src, dst, h_dst);
      ojson j;
      j["beta"] = to_json(r.beta_dst.beta);
      j["t"] = to_json(Eigen::VectorXd(r.t));
      j["residual_rms"] = r.residual_rms;
      j["gram_condition"] = r.gram_condition;
      j["samples"] = h_src.samples();
      write_text(out_path, j.dump(2) + "\n");
    } else if (*eval) {
      const BodyModel model = load_model(model_dir);
      grid.ns.clear();
      for (double v : split_numbers(ns_text, 0, "--ns")) grid.ns.push_back(static_cast<int>(v));
      grid.ratios = split_numbers(ratios_text, 0, "--ratios");
      grid.algorithms.clear();
      std::stringstream ss(algos_text);
      for (std::string a; std::getline(ss, a, ',');) grid.algorithms.push_back(parse_algorithm(a));
      grid.noise_kind = parse_noise_kind(noise_kind);
      grid.noise_target = parse_noise_target(noise_on);
      RefinerSet refiners;
      for (int slices : grid.ns)
        for (Algorithm a : grid.algorithms) {
          if (a == Algorithm::Analytical) continue;
          if (refiner_dir.empty()) throw MissingRefiner("--refiner-dir is required for " + to_string(a));
          const fs::path p = fs::path(refiner_dir) / (to_string(a) + "_n" + std::to_string(slices) + ".bin");
          if (!fs::exists(p)) throw MissingRefiner("missing refiner " + p.string());
          (a == Algorithm::Hybrid ? refiners.hybrid : refiners.nn).emplace(slices, RefinerNet::load(p));
        }
      const auto shapes = beta_csv.empty() ? sample_shapes(model.num_shape(), eval_count, grid.seed)
                                           : read_beta_csv(beta_csv);
      write_report(run_grid(model, shapes, refiners, grid), out_path);
    } else if (*export_obj) {
      const BodyModel model = load_model(model_dir);
      Points3 mesh = model.template_vertices;
      if (!beta_csv.empty())
        mesh = shape_to_mesh(model, {pick_row(read_beta_csv(beta_csv), beta_row, model.num_shape())});
      if (!pose_csv.empty()) mesh = pose_mesh(model, mesh, read_pose_csv(pose_csv, model.num_joints()));
      write_obj(mesh, model.faces, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "shapekit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

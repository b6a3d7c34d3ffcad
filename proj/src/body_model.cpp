#include "shapekit/body_model.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace shapekit {

namespace {

using json = nlohmann::json;

constexpr double kBlendRowTol = 1e-6;
constexpr double kRegressorRowTol = 1e-5;

template <typename T>
void append_le(std::vector<char>& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

template <typename T>
T read_le(const char* p) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i)
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

struct ArraySpec {
  std::string name;
  std::string dtype;
  std::int64_t rows;
  std::int64_t cols;
};

}  // namespace

int BodyModel::root() const {
  for (int j = 0; j < num_joints(); ++j)
    if (parents[j] == kNoParent) return j;
  throw InvariantViolation("parents", "no root joint");
}

std::vector<int> BodyModel::children(int j) const {
  std::vector<int> out;
  for (int c = 0; c < num_joints(); ++c)
    if (parents[c] == j) out.push_back(c);
  return out;
}

std::vector<int> BodyModel::topological_order() const {
  std::vector<int> order{root()};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int c : children(order[i])) order.push_back(c);
  }
  return order;
}

std::vector<Bone> BodyModel::bones() const {
  std::vector<Bone> out;
  for (int j = 0; j < num_joints(); ++j)
    if (parents[j] != kNoParent) out.push_back({parents[j], j});
  return out;
}

int BodyModel::bone_index_of_joint(int j) const {
  int index = 0;
  for (int i = 0; i < j; ++i)
    if (parents[i] != kNoParent) ++index;
  return parents[j] == kNoParent ? -1 : index;
}

void BodyModel::validate() const {
  const auto K = template_vertices.rows();
  const auto J = static_cast<Eigen::Index>(parents.size());
  if (K == 0) throw ShapeMismatch("template", "no vertices");
  if (J == 0) throw ShapeMismatch("parents", "no joints");
  if (shape_basis.rows() != 3 * K)
    throw ShapeMismatch("shape_basis", "expected " + std::to_string(3 * K) + " rows, got " +
                                           std::to_string(shape_basis.rows()));
  if (blend_weights.rows() != K || blend_weights.cols() != J)
    throw ShapeMismatch("blend_weights", "expected K x J");
  if (joint_regressor.rows() != J || joint_regressor.cols() != K)
    throw ShapeMismatch("joint_regressor", "expected J x K");
  if (!template_vertices.allFinite()) throw InvariantViolation("template", "non-finite entry");
  if (!shape_basis.allFinite()) throw InvariantViolation("shape_basis", "non-finite entry");

  for (Eigen::Index k = 0; k < K; ++k) {
    if ((blend_weights.row(k).array() < 0.0).any() || !blend_weights.row(k).allFinite())
      throw InvariantViolation("blend_weights", "negative entry in row " + std::to_string(k));
    if (std::abs(blend_weights.row(k).sum() - 1.0) > kBlendRowTol)
      throw InvariantViolation("blend_weights", "row " + std::to_string(k) + " does not sum to 1");
  }
  for (Eigen::Index j = 0; j < J; ++j) {
    if (!joint_regressor.row(j).allFinite())
      throw InvariantViolation("joint_regressor", "non-finite entry");
    if (std::abs(joint_regressor.row(j).sum() - 1.0) > kRegressorRowTol)
      throw InvariantViolation("joint_regressor",
                               "row " + std::to_string(j) + " does not sum to 1");
  }

  int roots = 0;
  for (Eigen::Index j = 0; j < J; ++j) {
    const int p = parents[j];
    if (p == kNoParent) {
      ++roots;
    } else if (p < 0 || p >= J || p == j) {
      throw InvariantViolation("parents", "invalid parent of joint " + std::to_string(j));
    }
  }
  if (roots != 1) throw InvariantViolation("parents", "expected exactly one root");
  // Walking up from any joint must reach the root within J steps.
  for (Eigen::Index j = 0; j < J; ++j) {
    int cur = static_cast<int>(j);
    for (Eigen::Index steps = 0; cur != kNoParent; ++steps) {
      if (steps > J) throw InvariantViolation("parents", "cycle through joint " + std::to_string(j));
      cur = parents[cur];
    }
  }

  if ((faces.array() < 0).any() || (faces.array() >= K).any())
    throw InvariantViolation("faces", "vertex index out of range");

  if (!part_bones.empty()) {
    if (static_cast<Eigen::Index>(part_bones.size()) != J)
      throw ShapeMismatch("part_bones", "expected one bone per joint");
    for (const Bone& bone : part_bones) {
      if (bone.a < 0 || bone.a >= J || bone.b < 0 || bone.b >= J || bone.a == bone.b)
        throw InvariantViolation("part_bones", "invalid joint pair");
    }
  }
}

Pose Pose::identity(int num_joints) {
  Pose pose;
  pose.axis_angle = Points3::Zero(num_joints, 3);
  return pose;
}

Pose Pose::normalized() const {
  Pose out = *this;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index j = 0; j < out.axis_angle.rows(); ++j) {
    const double angle = out.axis_angle.row(j).norm();
    if (angle < two_pi) continue;
    const double wrapped = std::fmod(angle, two_pi);
    out.axis_angle.row(j) *= wrapped / angle;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Neutral asset format

BodyModel load_model(const std::filesystem::path& dir) {
  std::ifstream manifest_file(dir / "manifest.json");
  if (!manifest_file) throw IoError("cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    manifest = json::parse(manifest_file);
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest.json: ") + e.what());
  }

  auto field = [&](const char* key) -> const json& {
    if (!manifest.contains(key)) throw ShapeMismatch(key, "missing from manifest");
    return manifest.at(key);
  };
  const auto K = field("k").get<std::int64_t>();
  const auto J = field("j").get<std::int64_t>();
  const auto S = field("s").get<std::int64_t>();
  const auto F = field("f").get<std::int64_t>();
  if (manifest.value("dtype", "f32") != "f32")
    throw ShapeMismatch("dtype", "only f32 payloads are supported");
  if (manifest.value("endianness", "little") != "little")
    throw ShapeMismatch("endianness", "only little-endian payloads are supported");

  const std::vector<ArraySpec> expected = {
      {"template", "f32", K, 3},        {"shape_basis", "f32", 3 * K, S},
      {"blend_weights", "f32", K, J},   {"joint_regressor", "f32", J, K},
      {"parents", "i32", J, 1},         {"faces", "i32", F, 3},
  };

  std::ifstream payload_file(dir / "payload.bin", std::ios::binary);
  if (!payload_file) throw IoError("cannot open " + (dir / "payload.bin").string());
  const std::vector<char> payload((std::istreambuf_iterator<char>(payload_file)),
                                  std::istreambuf_iterator<char>());

  const json& arrays = field("arrays");
  if (!arrays.is_array() || arrays.size() != expected.size())
    throw ShapeMismatch("arrays", "expected " + std::to_string(expected.size()) + " arrays");

  std::vector<const char*> data(expected.size());
  std::int64_t cursor = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const ArraySpec& want = expected[i];
    const json& entry = arrays[i];
    const auto name = entry.value("name", std::string{});
    if (name != want.name)
      throw ShapeMismatch(want.name, "array " + std::to_string(i) + " is named '" + name + "'");
    if (entry.value("dtype", std::string{}) != want.dtype)
      throw ShapeMismatch(want.name, "dtype must be " + want.dtype);
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const std::int64_t rows = shape.empty() ? 0 : shape[0];
    const std::int64_t cols = shape.size() > 1 ? shape[1] : 1;
    if (rows != want.rows || cols != want.cols)
      throw ShapeMismatch(want.name, "manifest header implies " + std::to_string(want.rows) +
                                         "x" + std::to_string(want.cols) + ", array entry says " +
                                         std::to_string(rows) + "x" + std::to_string(cols));
    const auto offset = entry.at("offset").get<std::int64_t>();
    if (offset != cursor) throw ShapeMismatch(want.name, "arrays must be contiguous in order");
    const std::int64_t nbytes = rows * cols * 4;
    if (offset + nbytes > static_cast<std::int64_t>(payload.size()))
      throw ShapeMismatch(want.name, "payload.bin is too short for this array");
    data[i] = payload.data() + offset;
    cursor += nbytes;
  }
  if (cursor != static_cast<std::int64_t>(payload.size()))
    throw ShapeMismatch("payload", "payload.bin has trailing bytes");

  BodyModel model;
  model.name = manifest.value("name", dir.filename().string());
  model.template_vertices.resize(K, 3);
  for (std::int64_t i = 0; i < K * 3; ++i)
    model.template_vertices.data()[i] = read_le<float>(data[0] + 4 * i);
  model.shape_basis.resize(3 * K, S);
  for (std::int64_t r = 0; r < 3 * K; ++r)
    for (std::int64_t c = 0; c < S; ++c)
      model.shape_basis(r, c) = read_le<float>(data[1] + 4 * (r * S + c));
  model.blend_weights.resize(K, J);
  for (std::int64_t r = 0; r < K; ++r)
    for (std::int64_t c = 0; c < J; ++c)
      model.blend_weights(r, c) = read_le<float>(data[2] + 4 * (r * J + c));
  model.joint_regressor.resize(J, K);
  for (std::int64_t r = 0; r < J; ++r)
    for (std::int64_t c = 0; c < K; ++c)
      model.joint_regressor(r, c) = read_le<float>(data[3] + 4 * (r * K + c));
  model.parents.resize(J);
  for (std::int64_t j = 0; j < J; ++j) model.parents[j] = read_le<std::int32_t>(data[4] + 4 * j);
  model.faces.resize(F, 3);
  for (std::int64_t i = 0; i < F * 3; ++i)
    model.faces.data()[i] = read_le<std::int32_t>(data[5] + 4 * i);

  if (manifest.contains("part_bones")) {
    for (const auto& pair : manifest.at("part_bones")) {
      model.part_bones.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
    }
  }

  model.validate();
  // Storage precision leaves row sums ~1e-7 off; skinning wants them exact.
  for (Eigen::Index k = 0; k < model.blend_weights.rows(); ++k)
    model.blend_weights.row(k) /= model.blend_weights.row(k).sum();
  return model;
}

void save_model(const BodyModel& model, const std::filesystem::path& dir) {
  model.validate();
  std::filesystem::create_directories(dir);
  const auto K = model.template_vertices.rows();
  const auto J = static_cast<Eigen::Index>(model.parents.size());
  const auto S = model.shape_basis.cols();
  const auto F = model.faces.rows();

  std::vector<char> payload;
  json arrays = json::array();
  auto add = [&](const std::string& name, const std::string& dtype, Eigen::Index rows,
                 Eigen::Index cols) {
    arrays.push_back({{"name", name},
                      {"dtype", dtype},
                      {"shape", {rows, cols}},
                      {"offset", payload.size()},
                      {"nbytes", rows * cols * 4}});
  };

  add("template", "f32", K, 3);
  for (Eigen::Index r = 0; r < K; ++r)
    for (int c = 0; c < 3; ++c)
      append_le(payload, static_cast<float>(model.template_vertices(r, c)));
  add("shape_basis", "f32", 3 * K, S);
  for (Eigen::Index r = 0; r < 3 * K; ++r)
    for (Eigen::Index c = 0; c < S; ++c)
      append_le(payload, static_cast<float>(model.shape_basis(r, c)));
  add("blend_weights", "f32", K, J);
  for (Eigen::Index r = 0; r < K; ++r)
    for (Eigen::Index c = 0; c < J; ++c)
      append_le(payload, static_cast<float>(model.blend_weights(r, c)));
  add("joint_regressor", "f32", J, K);
  for (Eigen::Index r = 0; r < J; ++r)
    for (Eigen::Index c = 0; c < K; ++c)
      append_le(payload, static_cast<float>(model.joint_regressor(r, c)));
  add("parents", "i32", J, 1);
  for (int p : model.parents) append_le(payload, static_cast<std::int32_t>(p));
  add("faces", "i32", F, 3);
  for (Eigen::Index r = 0; r < F; ++r)
    for (int c = 0; c < 3; ++c) append_le(payload, static_cast<std::int32_t>(model.faces(r, c)));

  json manifest = {{"format", "shapekit-body-model"},
                   {"version", 1},
                   {"name", model.name},
                   {"k", K},
                   {"j", J},
                   {"s", S},
                   {"f", F},
                   {"dtype", "f32"},
                   {"endianness", "little"},
                   {"arrays", arrays}};
  if (!model.part_bones.empty()) {
    json bones = json::array();
    for (const Bone& bone : model.part_bones) bones.push_back({bone.a, bone.b});
    manifest["part_bones"] = bones;
  }

  std::ofstream manifest_file(dir / "manifest.json", std::ios::binary);
  manifest_file << manifest.dump(2) << '\n';
  std::ofstream payload_file(dir / "payload.bin", std::ios::binary);
  payload_file.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!manifest_file || !payload_file) throw IoError("failed writing model to " + dir.string());
}

// ---------------------------------------------------------------------------
// Evaluation

Points3 shape_to_mesh(const BodyModel& model, const ShapeCoeffs& beta) {
  if (beta.beta.size() != model.num_shape())
    throw DimensionMismatch("beta has " + std::to_string(beta.beta.size()) +
                            " coefficients, model expects " + std::to_string(model.num_shape()));
  Points3 mesh = model.template_vertices;
  const Eigen::VectorXd offsets = model.shape_basis * beta.beta;
  mesh += Eigen::Map<const Points3>(offsets.data(), mesh.rows(), 3);
  return mesh;
}

Points3 regress_joints(const BodyModel& model, const Points3& mesh) {
  if (mesh.rows() != model.num_vertices())
    throw DimensionMismatch("mesh has " + std::to_string(mesh.rows()) + " vertices, model has " +
                            std::to_string(model.num_vertices()));
  return model.joint_regressor * mesh;
}

std::vector<Eigen::Isometry3d> joint_world_transforms(const BodyModel& model,
                                                      const Points3& rest_joints,
                                                      const Pose& pose) {
  const int J = model.num_joints();
  if (pose.axis_angle.rows() != J || rest_joints.rows() != J)
    throw DimensionMismatch("pose and skeleton must have one row per joint");
  std::vector<Eigen::Isometry3d> world(J);
  for (int j : model.topological_order()) {
    const Eigen::Vector3d aa = pose.axis_angle.row(j).transpose();
    const double angle = aa.norm();
    Eigen::Isometry3d local = Eigen::Isometry3d::Identity();
    if (angle > 0.0) local.linear() = Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
    const int p = model.parents[j];
    if (p == kNoParent) {
      local.translation() = rest_joints.row(j).transpose() + pose.translation;
      world[j] = local;
    } else {
      local.translation() = (rest_joints.row(j) - rest_joints.row(p)).transpose();
      world[j] = world[p] * local;
    }
  }
  return world;
}

Points3 pose_joints(const BodyModel& model, const Points3& rest_joints, const Pose& pose) {
  const auto world = joint_world_transforms(model, rest_joints, pose);
  Points3 out(model.num_joints(), 3);
  for (int j = 0; j < model.num_joints(); ++j) out.row(j) = world[j].translation().transpose();
  return out;
}

Points3 pose_mesh(const BodyModel& model, const Points3& rest_mesh, const Pose& pose) {
  const Points3 rest_joints = regress_joints(model, rest_mesh);
  const auto world = joint_world_transforms(model, rest_joints, pose);
  const int J = model.num_joints();

  // Skinning matrices map rest-pose coordinates to posed coordinates.
  std::vector<Eigen::Matrix<double, 3, 4>> skin(J);
  for (int j = 0; j < J; ++j) {
    const Eigen::Matrix3d R = world[j].linear();
    skin[j].leftCols<3>() = R;
    skin[j].col(3) = world[j].translation() - R * rest_joints.row(j).transpose();
  }

  Points3 out(rest_mesh.rows(), 3);
  for (Eigen::Index k = 0; k < rest_mesh.rows(); ++k) {
    Eigen::Matrix<double, 3, 4> blended = Eigen::Matrix<double, 3, 4>::Zero();
    for (int j = 0; j < J; ++j) {
      const double w = model.blend_weights(k, j);
      if (w != 0.0) blended += w * skin[j];
    }
    const Eigen::Vector3d v = rest_mesh.row(k).transpose();
    out.row(k) = (blended.leftCols<3>() * v + blended.col(3)).transpose();
  }
  return out;
}

}  // namespace shapekit

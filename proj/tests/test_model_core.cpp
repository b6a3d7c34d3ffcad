#include "doctest.h"
#include "support.hpp"

#include "shapekit/decompose.hpp"
#include "shapekit/toy_model.hpp"

#include "json.hpp"

#include <fstream>

using namespace shapekit;
using testing::TempDir;

TEST_CASE("toy model generation is deterministic") {
  const BodyModel a = make_toy_model(4, 32, 7);
  const BodyModel b = make_toy_model(4, 32, 7);
  CHECK(a.template_vertices == b.template_vertices);
  CHECK(a.shape_basis == b.shape_basis);
  CHECK(a.blend_weights == b.blend_weights);
  CHECK(a.joint_regressor == b.joint_regressor);
  CHECK(a.parents == b.parents);
  CHECK(a.faces == b.faces);
  CHECK(make_toy_model(4, 32, 8).template_vertices != a.template_vertices);
}

TEST_CASE("toy model rejects undersized requests") {
  CHECK_THROWS_AS(make_toy_model(1, 32, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_toy_model(4, 7, 0), std::invalid_argument);
}

TEST_CASE("zero coefficients give the template") {
  const BodyModel m = make_toy_model(5, 40, 3);
  CHECK(shape_to_mesh(m, ShapeCoeffs::zeros(m.num_shape())) == m.template_vertices);
}

TEST_CASE("shape blending is affine in beta") {
  const BodyModel m = make_toy_model(5, 24, 11);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd u = testing::random_beta(rng, m.num_shape());
    const Eigen::VectorXd v = testing::random_beta(rng, m.num_shape());
    const double alpha = rng.uniform(-2, 2), gamma = rng.uniform(-2, 2);
    const Points3 lhs = shape_to_mesh(m, {alpha * u + gamma * v});
    const Points3 rhs = alpha * shape_to_mesh(m, {u}) + gamma * shape_to_mesh(m, {v}) -
                        (alpha + gamma - 1.0) * m.template_vertices;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + lhs.cwiseAbs().maxCoeff()));
  }
  for (int i = 0; i < m.num_shape(); ++i) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(m.num_shape(), i);
    const Points3 plus = shape_to_mesh(m, {e});
    const Points3 minus = shape_to_mesh(m, {-e});
    CHECK(((plus + minus) / 2 - m.template_vertices).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK_THROWS_AS(shape_to_mesh(m, ShapeCoeffs::zeros(3)), DimensionMismatch);
}

TEST_CASE("coefficient 0 scales widths and coefficient 1 scales bone lengths") {
  const ToyFixture fx = make_toy_fixture(5, 32, 4);
  const BodyModel& m = fx.model;
  const PartDecomposition d = build_decomposition(m, 1);
  const ShapeDescriptor base = extract_descriptor(m, d, m.template_vertices);

  const ShapeDescriptor wide =
      extract_descriptor(m, d, shape_to_mesh(m, {Eigen::VectorXd::Unit(m.num_shape(), 0)}));
  CHECK((wide.slice_widths - (1.0 + kToyWidthGain) * base.slice_widths).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((wide.bone_lengths - base.bone_lengths).cwiseAbs().maxCoeff() < 1e-12);

  const ShapeDescriptor tall =
      extract_descriptor(m, d, shape_to_mesh(m, {Eigen::VectorXd::Unit(m.num_shape(), 1)}));
  CHECK((tall.bone_lengths - (1.0 + kToyLengthGain) * base.bone_lengths).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("joint regression") {
  const ToyFixture fx = make_toy_fixture(6, 32, 9);
  const BodyModel& m = fx.model;
  const Points3 joints = regress_joints(m, m.template_vertices);
  CHECK((joints - fx.joints).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::RowVector3d t(0.3, -1.2, 2.0);
  const Points3 moved = regress_joints(m, m.template_vertices.rowwise() + t);
  CHECK(((moved.rowwise() - t) - joints).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((regress_joints(m, 2.0 * m.template_vertices) - 2.0 * joints).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(regress_joints(m, Points3::Zero(3, 3)), DimensionMismatch);
}

TEST_CASE("identity pose returns the rest mesh") {
  const BodyModel m = make_toy_model(5, 24, 2);
  Rng rng(5);
  const Points3 rest = shape_to_mesh(m, {testing::random_beta(rng, m.num_shape())});
  const Points3 posed = pose_mesh(m, rest, Pose::identity(m.num_joints()));
  CHECK((posed - rest).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("global rigid pose moves the mesh rigidly") {
  const BodyModel m = make_toy_model(5, 24, 2);
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Points3 rest = shape_to_mesh(m, {testing::random_beta(rng, m.num_shape())});
    Pose pose = Pose::identity(m.num_joints());
    const Eigen::Vector3d w = rng.uniform(0.1, 3.0) * testing::random_unit(rng);
    pose.axis_angle.row(m.root()) = w.transpose();
    pose.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    const Eigen::Matrix3d R = testing::rodrigues(w);
    const Eigen::RowVector3d root = regress_joints(m, rest).row(m.root());

    const Points3 posed = pose_mesh(m, rest, pose);
    // Rotation about the root joint, then translation.
    Points3 expect = ((rest.rowwise() - root) * R.transpose()).rowwise() + root;
    expect.rowwise() += pose.translation.transpose();
    CHECK((posed - expect).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("bending one joint rotates its rigid part about that joint") {
  const ToyFixture fx = make_toy_fixture(4, 32, 12);
  const BodyModel& m = fx.model;
  const int elbow = 2;
  Pose pose = Pose::identity(m.num_joints());
  const Eigen::Vector3d w(0.0, 0.0, 0.9);
  pose.axis_angle.row(elbow) = w.transpose();
  const Points3 posed = pose_mesh(m, m.template_vertices, pose);
  const Eigen::Matrix3d R = testing::rodrigues(w);
  const Eigen::Vector3d pivot = fx.joints.row(elbow).transpose();
  int checked = 0;
  for (int k = 0; k < m.num_vertices(); ++k) {
    const double own = m.blend_weights(k, elbow) + (elbow + 1 < m.num_joints() ? m.blend_weights(k, elbow + 1) : 0.0);
    if (fx.part_labels[k] < elbow) continue;
    if (std::abs(own - 1.0) > 1e-12) continue;
    const Eigen::Vector3d p = m.template_vertices.row(k).transpose();
    CHECK((posed.row(k).transpose() - (pivot + R * (p - pivot))).norm() < 1e-9);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("posing preserves skeleton bone lengths") {
  const BodyModel m = make_toy_model(6, 24, 13);
  Rng rng(7);
  const Points3 rest = shape_to_mesh(m, {testing::random_beta(rng, m.num_shape())});
  const Points3 rj = regress_joints(m, rest);
  Pose pose = Pose::identity(m.num_joints());
  for (int j = 0; j < m.num_joints(); ++j) pose.axis_angle.row(j) = rng.uniform(0, 2) * testing::random_unit(rng).transpose();
  const Points3 pj = pose_joints(m, rj, pose);
  for (const Bone& b : m.bones()) {
    const double before = (rj.row(b.b) - rj.row(b.a)).norm();
    const double after = (pj.row(b.b) - pj.row(b.a)).norm();
    CHECK(testing::rel_err(after, before) < 1e-9);
  }
}

TEST_CASE("pose normalization keeps rotations") {
  Pose pose = Pose::identity(3);
  pose.axis_angle.row(1) << 0.0, 0.0, 2 * std::numbers::pi + 0.5;
  pose.axis_angle.row(2) << 7.0, -3.0, 1.0;
  const Pose n = pose.normalized();
  for (int j = 0; j < 3; ++j) {
    CHECK(n.axis_angle.row(j).norm() < 2 * std::numbers::pi);
    const Eigen::Matrix3d a = testing::rodrigues(pose.axis_angle.row(j).transpose());
    const Eigen::Matrix3d b = testing::rodrigues(n.axis_angle.row(j).transpose());
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("validation names the offending field") {
  const BodyModel good = make_toy_model(4, 16, 1);
  auto field_of = [](const BodyModel& m) -> std::string {
    try {
      m.validate();
    } catch (const ShapeMismatch& e) {
      return e.field();
    } catch (const InvariantViolation& e) {
      return e.field();
    }
    return "";
  };
  CHECK(field_of(good).empty());

  BodyModel m = good;
  m.blend_weights(3, 0) += 0.01;
  CHECK(field_of(m) == "blend_weights");
  m = good;
  m.blend_weights(3, 0) = -0.5;
  m.blend_weights(3, 1) += 0.5 + m.blend_weights(3, 0) + 0.5;
  CHECK(field_of(m) == "blend_weights");
  m = good;
  m.joint_regressor(1, 0) += 1e-3;
  CHECK(field_of(m) == "joint_regressor");
  m = good;
  m.parents[2] = kNoParent;
  CHECK(field_of(m) == "parents");
  m = good;
  m.parents[0] = 2;  // 0 -> 2 -> 1 -> 0
  CHECK(field_of(m) == "parents");
  m = good;
  m.faces(0, 1) = m.num_vertices();
  CHECK(field_of(m) == "faces");
  m = good;
  m.shape_basis.conservativeResize(m.shape_basis.rows() - 3, Eigen::NoChange);
  CHECK(field_of(m) == "shape_basis");
}

TEST_CASE("save and load round trip is byte identical") {
  TempDir dir("model");
  const BodyModel m = make_toy_model(4, 32, 7);
  save_model(m, dir.path / "a");
  const BodyModel loaded = load_model(dir.path / "a");
  save_model(loaded, dir.path / "b");
  CHECK(testing::slurp(dir.path / "a" / "manifest.json") == testing::slurp(dir.path / "b" / "manifest.json"));
  CHECK(testing::slurp(dir.path / "a" / "payload.bin") == testing::slurp(dir.path / "b" / "payload.bin"));
  CHECK(loaded.num_vertices() == m.num_vertices());
  CHECK(loaded.parents == m.parents);
  CHECK(loaded.faces == m.faces);
  CHECK((loaded.template_vertices - m.template_vertices).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(loaded.name == m.name);
}

TEST_CASE("manifest and payload disagreement is reported with the field name") {
  TempDir dir("badmodel");
  const BodyModel m = make_toy_model(2, 8, 7);  // K = 16
  save_model(m, dir.path);
  const auto manifest_path = dir.path / "manifest.json";
  nlohmann::json manifest = nlohmann::json::parse(testing::slurp(manifest_path));

  SUBCASE("header K disagrees with the template array") {
    manifest["k"] = 15;
    std::ofstream(manifest_path) << manifest.dump();
    try {
      load_model(dir.path);
      FAIL("expected ShapeMismatch");
    } catch (const ShapeMismatch& e) {
      CHECK(e.field() == "template");
    }
  }
  SUBCASE("payload truncated") {
    const std::string payload = testing::slurp(dir.path / "payload.bin");
    std::ofstream(dir.path / "payload.bin", std::ios::binary) << payload.substr(0, payload.size() - 8);
    CHECK_THROWS_AS(load_model(dir.path), ShapeMismatch);
  }
  SUBCASE("missing directory") { CHECK_THROWS_AS(load_model(dir.path / "nope"), IoError); }
}

#include "shapekit/io.hpp"

#include "json.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace shapekit {

namespace {

using json = nlohmann::json;

std::vector<double> parse_csv_line(const std::string& line, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    if (b == std::string::npos) throw IoError(where + ": empty field");
    double v;
    const char* first = cell.data() + b;
    const char* last = cell.data() + e + 1;
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
      throw IoError(where + ": cannot parse '" + cell.substr(b, e - b + 1) + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    rows.push_back(parse_csv_line(line, path.string() + ":" + std::to_string(line_no)));
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string descriptor_to_json(const ShapeDescriptor& desc) {
  const auto J = desc.bone_lengths.size() + 1;
  if (desc.n <= 0 || desc.slice_widths.size() != J * desc.n)
    throw DimensionMismatch("descriptor widths do not match J * n");
  nlohmann::ordered_json j;
  j["n"] = desc.n;
  j["bone_lengths"] = std::vector<double>(desc.bone_lengths.data(),
                                          desc.bone_lengths.data() + desc.bone_lengths.size());
  auto widths = nlohmann::ordered_json::array();
  for (Eigen::Index p = 0; p < J; ++p) {
    const double* row = desc.slice_widths.data() + p * desc.n;
    widths.push_back(std::vector<double>(row, row + desc.n));
  }
  j["slice_widths"] = widths;
  return j.dump(2) + "\n";
}

void write_descriptor_json(const ShapeDescriptor& desc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << descriptor_to_json(desc);
}

ShapeDescriptor read_descriptor_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ShapeDescriptor desc;
  try {
    const json j = json::parse(in);
    desc.n = j.at("n").get<int>();
    const auto lengths = j.at("bone_lengths").get<std::vector<double>>();
    const auto widths = j.at("slice_widths").get<std::vector<std::vector<double>>>();
    if (desc.n <= 0) throw IoError(path.string() + ": n must be positive");
    if (widths.size() != lengths.size() + 1)
      throw ShapeMismatch("slice_widths", "expected one row per part (" +
                                              std::to_string(lengths.size() + 1) + ")");
    desc.bone_lengths = Eigen::Map<const Eigen::VectorXd>(lengths.data(), lengths.size());
    desc.slice_widths.resize(static_cast<Eigen::Index>(widths.size()) * desc.n);
    for (std::size_t p = 0; p < widths.size(); ++p) {
      if (widths[p].size() != static_cast<std::size_t>(desc.n))
        throw ShapeMismatch("slice_widths", "part " + std::to_string(p) + " does not have n entries");
      for (int i = 0; i < desc.n; ++i) desc.slice_widths[p * desc.n + i] = widths[p][i];
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return desc;
}

std::vector<Eigen::VectorXd> read_beta_csv(const std::filesystem::path& path) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& row : read_csv(path))
    out.emplace_back(Eigen::Map<const Eigen::VectorXd>(row.data(), row.size()));
  if (out.empty()) throw IoError(path.string() + ": no coefficient rows");
  for (const auto& v : out)
    if (v.size() != out.front().size()) throw IoError(path.string() + ": ragged coefficient rows");
  return out;
}

void write_beta_csv(const std::vector<Eigen::VectorXd>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) {
    for (Eigen::Index i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

Pose read_pose_csv(const std::filesystem::path& path, int num_joints) {
  const auto rows = read_csv(path);
  if (rows.size() != static_cast<std::size_t>(num_joints) &&
      rows.size() != static_cast<std::size_t>(num_joints) + 1)
    throw ShapeMismatch("pose", "expected " + std::to_string(num_joints) + " rows (+1 translation), got " +
                                    std::to_string(rows.size()));
  Pose pose = Pose::identity(num_joints);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw ShapeMismatch("pose", "row " + std::to_string(r) + " needs 3 values");
    const Eigen::Vector3d v(rows[r][0], rows[r][1], rows[r][2]);
    if (static_cast<int>(r) < num_joints)
      pose.axis_angle.row(r) = v.transpose();
    else
      pose.translation = v;
  }
  return pose;
}

void write_obj(const Points3& vertices, const Faces& faces, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (Eigen::Index k = 0; k < vertices.rows(); ++k)
    out << "v " << format_double(vertices(k, 0)) << ' ' << format_double(vertices(k, 1)) << ' '
        << format_double(vertices(k, 2)) << '\n';
  for (Eigen::Index f = 0; f < faces.rows(); ++f)
    out << "f " << faces(f, 0) + 1 << ' ' << faces(f, 1) + 1 << ' ' << faces(f, 2) + 1 << '\n';
}

ObjMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ss >> v.x() >> v.y() >> v.z())) throw IoError(path.string() + ": bad vertex line");
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) faces.emplace_back(idx[0], idx[i], idx[i + 1]);
    }
  }
  ObjMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t k = 0; k < verts.size(); ++k) mesh.vertices.row(k) = verts[k].transpose();
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f) mesh.faces.row(f) = faces[f].transpose();
  return mesh;
}

}  // namespace shapekit

#include "torusrecon/pointcloud_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "hp_json.hpp"
#include "json.hpp"
#include "torusrecon/errors.hpp"

namespace torusrecon {

namespace {

struct Line {
  std::string text;
  std::size_t offset = 0;  // byte offset of the first character
  std::size_t number = 0;  // 1-based
};

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
  }

  bool next(Line& line) {
    line.offset = offset_;
    line.number = ++number_;
    if (!std::getline(in_, line.text)) return false;
    offset_ += line.text.size() + 1;
    if (!line.text.empty() && line.text.back() == '\r') line.text.pop_back();
    return true;
  }

 private:
  std::ifstream in_;
  std::size_t offset_ = 0;
  std::size_t number_ = 0;
};

std::vector<std::string> split(const std::string& text) {
  std::istringstream ss(text);
  std::vector<std::string> out;
  std::string token;
  while (ss >> token) out.push_back(token);
  return out;
}

bool parse_double(const std::string& token, double& value) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  value = std::strtod(begin, &end);
  return end == begin + token.size() && errno != ERANGE && std::isfinite(value);
}

bool skippable(const std::string& text) {
  const auto first = text.find_first_not_of(" \t");
  return first == std::string::npos || text[first] == '#';
}

void unit_normal(double* n, std::size_t line) {
  const double norm = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (!(norm > 0.0)) throw DataError("zero-length normal", line);
  // Already-unit normals are kept bit-exact so that reloads are value-identical.
  if (std::abs(norm - 1.0) <= 1e-14) return;
  for (int a = 0; a < 3; ++a) n[a] /= norm;
}

struct Record {
  double values[6];
};

OrientedPointCloud to_cloud(const std::vector<Record>& records) {
  OrientedPointCloud cloud;
  const auto n = static_cast<Eigen::Index>(records.size());
  cloud.points.resize(n, 3);
  cloud.normals.resize(n, 3);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int a = 0; a < 3; ++a) {
      cloud.points(r, a) = records[static_cast<std::size_t>(r)].values[a];
      cloud.normals(r, a) = records[static_cast<std::size_t>(r)].values[3 + a];
    }
  }
  return cloud;
}

OrientedPointCloud load_xyz(const std::filesystem::path& path) {
  LineReader reader(path);
  Line line;
  std::vector<Record> records;
  while (reader.next(line)) {
    if (skippable(line.text)) continue;
    const auto tokens = split(line.text);
    if (tokens.size() != 6) throw DataError("expected 6 values (x y z nx ny nz)", line.number);
    Record rec{};
    for (int a = 0; a < 6; ++a) {
      if (!parse_double(tokens[static_cast<std::size_t>(a)], rec.values[a])) {
        throw DataError("invalid number '" + tokens[static_cast<std::size_t>(a)] + "'", line.number);
      }
    }
    unit_normal(rec.values + 3, line.number);
    records.push_back(rec);
  }
  if (records.empty()) throw InputError("no points in " + path.string());
  return to_cloud(records);
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
  bool has_list = false;
};

OrientedPointCloud load_ply(const std::filesystem::path& path) {
  LineReader reader(path);
  Line line;
  if (!reader.next(line) || line.text != "ply") throw ParseError("missing 'ply' magic", 0);
  std::vector<PlyElement> elements;
  bool ended = false;
  while (reader.next(line)) {
    const auto tokens = split(line.text);
    if (tokens.empty()) continue;
    const auto& key = tokens[0];
    if (key == "end_header") {
      ended = true;
      break;
    }
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (tokens.size() != 3) throw ParseError("malformed format line", line.offset);
      if (tokens[1] != "ascii") throw FormatError("only ASCII PLY is supported, found " + tokens[1]);
    } else if (key == "element") {
      if (tokens.size() != 3) throw ParseError("malformed element line", line.offset);
      char* end = nullptr;
      const unsigned long long count = std::strtoull(tokens[2].c_str(), &end, 10);
      if (*end != '\0' || tokens[2][0] == '-') throw ParseError("invalid element count", line.offset);
      elements.push_back({tokens[1], static_cast<std::size_t>(count), {}, false});
    } else if (key == "property") {
      if (elements.empty()) throw ParseError("property before any element", line.offset);
      if (tokens.size() == 5 && tokens[1] == "list") {
        elements.back().has_list = true;
        elements.back().properties.push_back(tokens[4]);
      } else if (tokens.size() == 3) {
        elements.back().properties.push_back(tokens[2]);
      } else {
        throw ParseError("malformed property line", line.offset);
      }
    } else {
      throw ParseError("unknown header keyword '" + key + "'", line.offset);
    }
  }
  if (!ended) throw ParseError("header has no end_header", line.offset);

  std::vector<Record> records;
  bool seen_vertex = false;
  for (const auto& element : elements) {
    if (element.name != "vertex") {
      for (std::size_t r = 0; r < element.count; ++r) {
        if (!reader.next(line)) throw ParseError("file ends inside element " + element.name, line.offset);
      }
      continue;
    }
    seen_vertex = true;
    const char* required[6] = {"x", "y", "z", "nx", "ny", "nz"};
    int column[6];
    for (int c = 0; c < 6; ++c) {
      const auto it = std::find(element.properties.begin(), element.properties.end(), required[c]);
      if (it == element.properties.end()) {
        throw FormatError(std::string("PLY vertex element lacks property ") + required[c]);
      }
      column[c] = static_cast<int>(it - element.properties.begin());
    }
    if (element.has_list) throw FormatError("list properties on vertices are not supported");
    for (std::size_t r = 0; r < element.count; ++r) {
      if (!reader.next(line)) throw ParseError("file ends after " + std::to_string(r) + " vertices", line.offset);
      const auto tokens = split(line.text);
      if (tokens.size() != element.properties.size()) {
        throw DataError("expected " + std::to_string(element.properties.size()) + " values", line.number);
      }
      Record rec{};
      for (int c = 0; c < 6; ++c) {
        const auto& tok = tokens[static_cast<std::size_t>(column[c])];
        if (!parse_double(tok, rec.values[c])) throw DataError("invalid number '" + tok + "'", line.number);
      }
      unit_normal(rec.values + 3, line.number);
      records.push_back(rec);
    }
  }
  if (!seen_vertex) throw FormatError("PLY file has no vertex element");
  if (records.empty()) throw InputError("no points in " + path.string());
  return to_cloud(records);
}

std::array<double, 3> json_triple(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw FormatError(std::string("field grid header: '") + key + "' needs 3 entries");
  return {v[0], v[1], v[2]};
}

}  // namespace

PointMatrix TorusTransform::to_torus(const PointMatrix& raw) const {
  PointMatrix out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    for (Eigen::Index a = 0; a < raw.cols(); ++a) {
      out(r, a) = scale * raw(r, a) + translation[static_cast<std::size_t>(a)];
    }
  }
  return out;
}

PointMatrix TorusTransform::to_raw(const PointMatrix& torus) const {
  PointMatrix out(torus.rows(), torus.cols());
  for (Eigen::Index r = 0; r < torus.rows(); ++r) {
    for (Eigen::Index a = 0; a < torus.cols(); ++a) {
      out(r, a) = (torus(r, a) - translation[static_cast<std::size_t>(a)]) / scale;
    }
  }
  return out;
}

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "ply" || name == "ply-ascii") return CloudFormat::kPlyAscii;
  if (name == "xyz") return CloudFormat::kXyz;
  throw ConfigError("unknown point cloud format '" + std::string(name) + "' (use ply or xyz)");
}

CloudFormat cloud_format_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ply" ? CloudFormat::kPlyAscii : CloudFormat::kXyz;
}

OrientedPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  return format == CloudFormat::kPlyAscii ? load_ply(path) : load_xyz(path);
}

void write_cloud(const OrientedPointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  if (format == CloudFormat::kPlyAscii) {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n';
    for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) out << "property double " << p << '\n';
    out << "end_header\n";
  }
  for (Eigen::Index r = 0; r < cloud.points.rows(); ++r) {
    out << cloud.points(r, 0) << ' ' << cloud.points(r, 1) << ' ' << cloud.points(r, 2) << ' '
        << cloud.normals(r, 0) << ' ' << cloud.normals(r, 1) << ' ' << cloud.normals(r, 2) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

OrientedPointCloud normalize_to_torus(const OrientedPointCloud& cloud, double margin) {
  if (!(margin > 0.0 && margin < 0.5)) throw InputError("margin must lie in (0, 1/2)");
  if (cloud.points.rows() == 0) throw InputError("cannot normalize an empty cloud");
  const Eigen::Index d = cloud.points.cols();
  const Eigen::RowVectorXd lo = cloud.points.colwise().minCoeff();
  const Eigen::RowVectorXd hi = cloud.points.colwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw InputError("all points coincide; the bounding box is degenerate");
  const double span = 1.0 - 2.0 * margin;
  OrientedPointCloud out;
  out.transform.scale = span / extent;
  out.transform.translation.resize(static_cast<std::size_t>(d));
  for (Eigen::Index a = 0; a < d; ++a) {
    const double used = out.transform.scale * (hi[a] - lo[a]);
    out.transform.translation[static_cast<std::size_t>(a)] =
        margin + 0.5 * (span - used) - out.transform.scale * lo[a];
  }
  // Compose with any earlier transform so to_raw still reaches the file coordinates.
  const auto& prev = cloud.transform;
  out.points = out.transform.to_torus(cloud.points);
  out.normals = cloud.normals;
  for (Eigen::Index a = 0; a < d; ++a) {
    auto& t = out.transform.translation[static_cast<std::size_t>(a)];
    t += out.transform.scale * prev.translation[static_cast<std::size_t>(a)];
  }
  out.transform.scale *= prev.scale;
  // Clamp rounding spill so the margin-box invariant holds exactly.
  for (Eigen::Index r = 0; r < out.points.rows(); ++r) {
    for (Eigen::Index a = 0; a < d; ++a) {
      out.points(r, a) = std::clamp(out.points(r, a), margin, 1.0 - margin);
    }
  }
  return out;
}

void write_field_grid(const ScalarFieldGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto& s = grid.spec();
  nlohmann::json header = {{"format", "torusrecon.field"},
                           {"origin", s.origin},
                           {"spacing", s.spacing},
                           {"dims", s.dims},
                           {"endianness", "little"},
                           {"dtype", "float32"}};
  out << header.dump() << '\n';
  for (double v : grid.values()) detail::write_f32_le(out, v);
  if (!out) throw IoError("failed writing " + path.string());
}

ScalarFieldGrid read_field_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing field grid header", 0);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid field grid header: ") + e.what(), e.byte);
  }
  if (header.value("endianness", "") != "little" || header.value("dtype", "") != "float32") {
    throw FormatError("field grid must be little-endian float32");
  }
  GridSpec spec;
  spec.origin = json_triple(header, "origin");
  spec.spacing = json_triple(header, "spacing");
  const auto dims = header.at("dims").get<std::vector<int>>();
  if (dims.size() != 3) throw FormatError("field grid header: 'dims' needs 3 entries");
  spec.dims = {dims[0], dims[1], dims[2]};
  spec.validate();
  std::vector<double> values(spec.node_count());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!detail::read_f32_le(in, values[k])) {
      throw ParseError("truncated field grid payload", line.size() + 1 + 4 * k);
    }
  }
  return ScalarFieldGrid(spec, std::move(values));
}

PointMatrix load_points(const std::filesystem::path& path) {
  LineReader reader(path);
  Line line;
  std::vector<std::array<double, 3>> pts;
  while (reader.next(line)) {
    if (skippable(line.text)) continue;
    const auto tokens = split(line.text);
    if (tokens.size() != 3) throw DataError("expected 3 coordinates", line.number);
    std::array<double, 3> p{};
    for (int a = 0; a < 3; ++a) {
      if (!parse_double(tokens[static_cast<std::size_t>(a)], p[static_cast<std::size_t>(a)])) {
        throw DataError("invalid number '" + tokens[static_cast<std::size_t>(a)] + "'", line.number);
      }
    }
    pts.push_back(p);
  }
  PointMatrix out(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t r = 0; r < pts.size(); ++r) {
    for (int a = 0; a < 3; ++a) out(static_cast<Eigen::Index>(r), a) = pts[r][static_cast<std::size_t>(a)];
  }
  return out;
}

}  // namespace torusrecon

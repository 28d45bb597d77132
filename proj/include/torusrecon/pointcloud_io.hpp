#pragma once

#include <filesystem>
#include <string_view>

#include "torusrecon/contouring.hpp"
#include "torusrecon/kernel_solver.hpp"

namespace torusrecon {

/// Uniform scale plus translation: torus = scale * raw + translation.
struct TorusTransform {
  double scale = 1.0;
  std::vector<double> translation{0.0, 0.0, 0.0};

  [[nodiscard]] PointMatrix to_torus(const PointMatrix& raw) const;
  [[nodiscard]] PointMatrix to_raw(const PointMatrix& torus) const;
};

/// Positions with unit normals (outward). `transform` maps the file's raw
/// coordinates onto `points`; it is the identity until normalize_to_torus.
struct OrientedPointCloud {
  PointMatrix points;
  PointMatrix normals;
  TorusTransform transform;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(points.rows()); }
};

enum class CloudFormat { kPlyAscii, kXyz };

/// "ply" / "xyz"; throws ConfigError otherwise.
CloudFormat parse_cloud_format(std::string_view name);
/// Guess from the file extension, defaulting to XYZ.
CloudFormat cloud_format_for(const std::filesystem::path& path);

/// Reads positions and normals and renormalises normals to unit length.
/// Throws IoError, ParseError (with byte offset), FormatError (no normals) or
/// DataError (bad record, with line number).
OrientedPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
/// Writes raw coordinates with 17 significant digits, so a reload is value-identical.
void write_cloud(const OrientedPointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format);

/// Maps the bounding box into [margin, 1 − margin]^3, longest axis spanning it,
/// other axes centred. Throws InputError for coincident points or a bad margin.
OrientedPointCloud normalize_to_torus(const OrientedPointCloud& cloud, double margin = 0.15);

/// One JSON header line {origin, spacing, dims} then little-endian float32 values, x fastest.
void write_field_grid(const ScalarFieldGrid& grid, const std::filesystem::path& path);
ScalarFieldGrid read_field_grid(const std::filesystem::path& path);

/// Whitespace-separated 3-d points, one per line ('#' comments allowed).
PointMatrix load_points(const std::filesystem::path& path);

}  // namespace torusrecon

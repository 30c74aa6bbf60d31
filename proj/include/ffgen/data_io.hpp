#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ffgen/point_set.hpp"
#include "ffgen/rng.hpp"

namespace ffgen::data_io {

struct Dataset {
  std::string name;
  PointSet points;
  std::optional<PointSet> held_out;

  std::size_t dim() const { return points.dim(); }
};

// Builtin toy datasets. Formulas (all deterministic given the stream):
//   ring8         centre (cos 2pi k/8, sin 2pi k/8), k uniform in 0..7, plus N(0, 0.1^2 I)
//   two_moons     class c ~ Bernoulli(1/2), angle a ~ U[0, pi];
//                 c=0: (cos a, sin a), c=1: (1 - cos a, 0.5 - sin a); plus N(0, 0.05^2 I)
//   checkerboard  x ~ U[-2, 2], y ~ U[-2, 2] restricted to cells with floor(x)+floor(y) even
//   spiral        s ~ U[0, 1], angle 3 pi s, radius 0.2 + 1.8 s, plus N(0, 0.03^2 I)
//   single_point  every point equals `coordinate` (default: origin of dimension dim)
//   two_points    (+1, 0, ..., 0) or (-1, 0, ..., 0), each with probability 1/2
// dim applies to single_point and two_points (default 2 and 1); the 2-D sets ignore it.
struct BuiltinOptions {
  std::optional<std::size_t> dim;
  std::optional<Vec> coordinate;
};

std::vector<std::string> builtin_names();
Dataset builtin(std::string_view name, std::size_t n, Stream& rng, const BuiltinOptions& options = {});

// Header x0,...,x{d-1}; one point per line; 17 significant digits.
void write_csv(const std::filesystem::path& path, const PointSet& points);
std::string to_csv(const PointSet& points);
PointSet parse_csv(std::string_view text);
Dataset read_csv(const std::filesystem::path& path);

struct SvgStyle {
  double width = 480.0;
  double height = 480.0;
  double marker_radius = 1.5;
  std::string marker_color = "#1f4e79";
  std::string line_color = "#b03a2e";
  double line_width = 0.8;
  std::string title;
};

// Scatter plot of points and/or polylines. Inputs of dimension > 2 are
// projected onto their first two coordinates; 1-D inputs use y = 0.
std::string svg_scatter(const PointSet& points, const std::vector<PointSet>& polylines = {},
                        const SvgStyle& style = {});
void emit_svg_scatter(const std::filesystem::path& path, const PointSet& points,
                      const std::vector<PointSet>& polylines = {}, const SvgStyle& style = {});

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

// Writes `text` to path; throws IoError on failure.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ffgen::data_io

#include "ffgen/data_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ffgen/errors.hpp"
#include "ffgen/format.hpp"

namespace ffgen::data_io {

std::vector<std::string> builtin_names() {
  return {"ring8", "two_moons", "checkerboard", "spiral", "single_point", "two_points"};
}

Dataset builtin(std::string_view name, std::size_t n, Stream& rng, const BuiltinOptions& options) {
  if (n < 1) throw InvalidInput("builtin dataset: n must be >= 1");
  constexpr double pi = std::numbers::pi;
  Dataset ds;
  ds.name = std::string(name);
  const auto planar = [&](auto&& draw) {
    ds.points = PointSet(2);
    ds.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [x, y] = draw();
      const double p[2] = {x, y};
      ds.points.push_back(p);
    }
  };
  if (name == "ring8") {
    planar([&] {
      const double a = 2.0 * pi * static_cast<double>(rng.index_below(8)) / 8.0;
      return std::pair{std::cos(a) + 0.1 * rng.normal(), std::sin(a) + 0.1 * rng.normal()};
    });
  } else if (name == "two_moons") {
    planar([&] {
      const bool upper = rng.uniform() < 0.5;
      const double a = pi * rng.uniform();
      const double x = upper ? std::cos(a) : 1.0 - std::cos(a);
      const double y = upper ? std::sin(a) : 0.5 - std::sin(a);
      return std::pair{x + 0.05 * rng.normal(), y + 0.05 * rng.normal()};
    });
  } else if (name == "checkerboard") {
    planar([&] {
      for (;;) {
        const double x = rng.uniform(-2.0, 2.0);
        const double y = rng.uniform(-2.0, 2.0);
        const auto cell = static_cast<long>(std::floor(x)) + static_cast<long>(std::floor(y));
        if (cell % 2 == 0) return std::pair{x, y};
      }
    });
  } else if (name == "spiral") {
    planar([&] {
      const double s = rng.uniform();
      const double a = 3.0 * pi * s;
      const double r = 0.2 + 1.8 * s;
      return std::pair{r * std::cos(a) + 0.03 * rng.normal(), r * std::sin(a) + 0.03 * rng.normal()};
    });
  } else if (name == "single_point") {
    Vec c = options.coordinate.value_or(Vec(options.dim.value_or(2), 0.0));
    if (c.empty()) throw InvalidInput("single_point: coordinate must be non-empty");
    if (options.dim && *options.dim != c.size()) throw InvalidInput("single_point: coordinate length differs from dim");
    ds.points = PointSet(c.size());
    ds.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ds.points.push_back(c);
  } else if (name == "two_points") {
    const std::size_t d = options.dim.value_or(1);
    if (d == 0) throw InvalidInput("two_points: dim must be >= 1");
    ds.points = PointSet(d);
    ds.points.reserve(n);
    Vec p(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      p[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      ds.points.push_back(p);
    }
  } else {
    std::string valid;
    for (const auto& v : builtin_names()) valid += (valid.empty() ? "" : ", ") + v;
    throw InvalidInput("unknown dataset '" + std::string(name) + "' (valid: " + valid + ")");
  }
  return ds;
}

std::string to_csv(const PointSet& points) {
  std::string out;
  for (std::size_t k = 0; k < points.dim(); ++k) out += (k ? ",x" : "x") + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) out += ',';
      out += format_double(p[k]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const PointSet& points) { write_text(path, to_csv(points)); }

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

PointSet parse_csv(std::string_view text) {
  std::size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };
  std::string_view line;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  if (!next_line(line) || trim(line).empty()) throw ParseError("no header", 1);
  const auto header = split_commas(line);
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] != "x" + std::to_string(k)) {
      throw ParseError("header must be x0,...,x{d-1}; column " + std::to_string(k) + " is '" +
                           std::string(header[k]) + "'",
                       line_no);
    }
  }
  const std::size_t d = header.size();
  PointSet out(d);
  Vec row(d);
  while (next_line(line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != d) {
      throw ParseError("expected " + std::to_string(d) + " columns, found " + std::to_string(cells.size()), line_no);
    }
    for (std::size_t k = 0; k < d; ++k) {
      const auto v = parse_double(cells[k]);
      if (!v) throw ParseError("non-numeric cell '" + std::string(cells[k]) + "' in column x" + std::to_string(k), line_no);
      row[k] = *v;
    }
    out.push_back(row);
  }
  return out;
}

Dataset read_csv(const std::filesystem::path& path) {
  Dataset ds;
  ds.name = path.filename().string();
  ds.points = parse_csv(read_text(path));
  if (ds.points.empty()) throw InvalidInput("dataset " + path.string() + " has no rows");
  return ds;
}

namespace {

struct Bounds {
  double lo = 0.0, hi = 0.0;
  bool set = false;
  void add(double v) {
    if (!set) {
      lo = hi = v;
      set = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
};

std::string num(double v) { return format_double(std::abs(v) < 5e-9 ? 0.0 : v, 8); }

}  // namespace

std::string svg_scatter(const PointSet& points, const std::vector<PointSet>& polylines, const SvgStyle& style) {
  const auto coord = [](std::span<const double> p, std::size_t k) { return k < p.size() ? p[k] : 0.0; };
  std::size_t dim = points.dim();
  for (const auto& pl : polylines) dim = std::max(dim, pl.dim());

  Bounds bx, by;
  const auto include = [&](const PointSet& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      bx.add(coord(s[i], 0));
      by.add(coord(s[i], 1));
    }
  };
  include(points);
  for (const auto& pl : polylines) include(pl);
  if (!bx.set) {
    bx = {-1.0, 1.0, true};
    by = {-1.0, 1.0, true};
  }

  const double w = style.width, h = style.height;
  const double mx = 0.05 * w, my = 0.05 * h;
  // A degenerate axis places everything on the centre line.
  const auto sx = [&](double x) {
    return bx.hi > bx.lo ? mx + (x - bx.lo) / (bx.hi - bx.lo) * (w - 2 * mx) : w / 2;
  };
  const auto sy = [&](double y) {
    return by.hi > by.lo ? h - my - (y - by.lo) / (by.hi - by.lo) * (h - 2 * my) : h / 2;
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n";
  if (dim > 2) out << "<!-- projected onto coordinates x0, x1 of " << dim << " -->\n";
  if (!style.title.empty()) out << "<title>" << style.title << "</title>\n";
  out << "<!-- x range [" << num(bx.lo) << ", " << num(bx.hi) << "], y range [" << num(by.lo) << ", " << num(by.hi)
      << "] -->\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"white\"/>\n";
  out << "<g id=\"axes\" stroke=\"#888888\" stroke-width=\"0.5\" fill=\"none\">\n";
  out << "<rect x=\"" << num(mx) << "\" y=\"" << num(my) << "\" width=\"" << num(w - 2 * mx) << "\" height=\""
      << num(h - 2 * my) << "\"/>\n";
  const double ax = (bx.lo <= 0 && bx.hi >= 0) ? sx(0.0) : mx;
  const double ay = (by.lo <= 0 && by.hi >= 0) ? sy(0.0) : h - my;
  out << "<line x1=\"" << num(mx) << "\" y1=\"" << num(ay) << "\" x2=\"" << num(w - mx) << "\" y2=\"" << num(ay)
      << "\"/>\n";
  out << "<line x1=\"" << num(ax) << "\" y1=\"" << num(my) << "\" x2=\"" << num(ax) << "\" y2=\"" << num(h - my)
      << "\"/>\n";
  out << "</g>\n";

  if (!polylines.empty()) {
    out << "<g id=\"trajectories\" stroke=\"" << style.line_color << "\" stroke-width=\"" << num(style.line_width)
        << "\" fill=\"none\">\n";
    for (const auto& pl : polylines) {
      out << "<polyline points=\"";
      for (std::size_t i = 0; i < pl.size(); ++i) {
        if (i) out << ' ';
        out << num(sx(coord(pl[i], 0))) << ',' << num(sy(coord(pl[i], 1)));
      }
      out << "\"/>\n";
    }
    out << "</g>\n";
  }
  if (!points.empty()) {
    out << "<g id=\"points\" fill=\"" << style.marker_color << "\" stroke=\"none\">\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      out << "<circle cx=\"" << num(sx(coord(points[i], 0))) << "\" cy=\"" << num(sy(coord(points[i], 1)))
          << "\" r=\"" << num(style.marker_radius) << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void emit_svg_scatter(const std::filesystem::path& path, const PointSet& points, const std::vector<PointSet>& polylines,
                      const SvgStyle& style) {
  write_text(path, svg_scatter(points, polylines, style));
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace ffgen::data_io

// io.hpp
//
// Point cloud file formats.
//
//   XYZ   ASCII, "x y z" per line, '#' comment lines, LF or CRLF.
//   XYZL  as XYZ with a fourth field, the source label (0 or 1).
//   PLY   binary_little_endian, float32 x/y/z, optional uchar `label`.
//
// Text output uses 9 significant digits; PLY stores float32, so a PLY round
// trip is exact for values already representable in float32.

#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pcc/core.hpp"

namespace pcc {

enum class CloudFormat { Xyz, Xyzl, Ply };

inline std::string_view format_name(CloudFormat f) {
  switch (f) {
  case CloudFormat::Xyz: return "xyz";
  case CloudFormat::Xyzl: return "xyzl";
  case CloudFormat::Ply: return "ply";
  }
  return "?";
}

inline std::optional<CloudFormat> parse_format(std::string_view name) {
  if (name == "xyz") return CloudFormat::Xyz;
  if (name == "xyzl") return CloudFormat::Xyzl;
  if (name == "ply") return CloudFormat::Ply;
  return std::nullopt;
}

/// Format implied by a file extension; XYZ when unrecognized.
inline CloudFormat format_from_path(std::string_view path) {
  auto dot = path.rfind('.');
  if (dot != std::string_view::npos) {
    if (auto f = parse_format(path.substr(dot + 1))) return *f;
  }
  return CloudFormat::Xyz;
}

using AnyCloud = std::variant<PointCloud, LabeledPointCloud>;

/// Shortest round-trip decimal, always carrying a '.' or exponent.
inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eninf") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline std::string format_coord(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_real(std::string_view field, std::size_t line) {
  double v = 0.0;
  const char *first = field.data();
  if (!field.empty() && field[0] == '+') ++first;
  auto res = std::from_chars(first, field.data() + field.size(), v);
  if (res.ec == std::errc::result_out_of_range) {
    throw ValidationError("coordinate out of range: '" + std::string(field) + "'", line);
  }
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("not a number: '" + std::string(field) + "'", line);
  }
  if (!std::isfinite(v)) {
    throw ValidationError("non-finite coordinate '" + std::string(field) + "'", line);
  }
  return v;
}

inline AnyCloud parse_text(std::istream &in, bool labeled) {
  std::vector<Point3> pts;
  std::vector<std::uint8_t> labels;
  const std::size_t expected = labeled ? 4 : 3;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fields = split_fields(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    if (fields.size() != expected) {
      throw ParseError("expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    }
    Point3 p{parse_real(fields[0], lineno), parse_real(fields[1], lineno),
             parse_real(fields[2], lineno)};
    pts.push_back(p);
    if (labeled) {
      long label = 0;
      auto f = fields[3];
      auto res = std::from_chars(f.data(), f.data() + f.size(), label);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError("label is not an integer: '" + std::string(f) + "'", lineno);
      }
      if (label != 0 && label != 1) {
        throw ValidationError("label must be 0 or 1, got " + std::string(f), lineno);
      }
      labels.push_back(static_cast<std::uint8_t>(label));
    }
  }
  if (in.bad()) throw IoError("read failure");
  if (labeled) return LabeledPointCloud(PointCloud(std::move(pts)), std::move(labels));
  return PointCloud(std::move(pts));
}

inline AnyCloud parse_ply(std::istream &in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError("truncated PLY header", lineno);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  if (line != "ply") throw ParseError("missing 'ply' magic", lineno);

  std::optional<std::size_t> count;
  std::vector<std::string> props;
  bool has_label = false;
  for (;;) {
    next_line();
    auto f = split_fields(line);
    if (f.empty()) continue;
    if (f[0] == "end_header") break;
    if (f[0] == "comment" || f[0] == "obj_info") continue;
    if (f[0] == "format") {
      if (f.size() != 3 || f[1] != "binary_little_endian") {
        throw ParseError("only binary_little_endian PLY is supported", lineno);
      }
    } else if (f[0] == "element") {
      if (f.size() != 3 || f[1] != "vertex" || count) {
        throw ParseError("only a single 'vertex' element is supported", lineno);
      }
      std::size_t n = 0;
      auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), n);
      if (res.ec != std::errc() || res.ptr != f[2].data() + f[2].size()) {
        throw ParseError("bad vertex count", lineno);
      }
      count = n;
    } else if (f[0] == "property") {
      if (f.size() != 3) throw ParseError("unsupported property declaration", lineno);
      const std::string name(f[2]);
      const std::size_t slot = props.size();
      if (slot < 3) {
        static constexpr const char *kAxes[3] = {"x", "y", "z"};
        if (f[1] != "float" && f[1] != "float32") {
          throw ParseError("coordinate properties must be float", lineno);
        }
        if (name != kAxes[slot]) throw ParseError("expected property " + std::string(kAxes[slot]), lineno);
      } else if (slot == 3 && name == "label") {
        if (f[1] != "uchar" && f[1] != "uint8") throw ParseError("label must be uchar", lineno);
        has_label = true;
      } else {
        throw ParseError("unsupported property '" + name + "'", lineno);
      }
      props.push_back(name);
    } else {
      throw ParseError("unexpected header line", lineno);
    }
  }
  if (!count) throw ParseError("missing 'element vertex'", lineno);
  if (props.size() < 3) throw ParseError("missing coordinate properties", lineno);

  static_assert(std::endian::native == std::endian::little,
                "PLY reader assumes a little-endian host");
  const std::size_t stride = 12 + (has_label ? 1 : 0);
  std::vector<char> data(*count * stride);
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (static_cast<std::size_t>(in.gcount()) != data.size()) {
    throw ParseError("PLY body shorter than declared vertex count");
  }
  std::vector<Point3> pts(*count);
  std::vector<std::uint8_t> labels;
  if (has_label) labels.resize(*count);
  for (std::size_t i = 0; i < *count; ++i) {
    float xyz[3];
    std::memcpy(xyz, data.data() + i * stride, 12);
    pts[i] = {xyz[0], xyz[1], xyz[2]};
    if (!pts[i].finite()) {
      throw ValidationError("non-finite coordinate at vertex " + std::to_string(i));
    }
    if (has_label) {
      labels[i] = static_cast<std::uint8_t>(data[i * stride + 12]);
      if (labels[i] > 1) {
        throw ValidationError("label must be 0 or 1 at vertex " + std::to_string(i));
      }
    }
  }
  if (has_label) return LabeledPointCloud(PointCloud(std::move(pts)), std::move(labels));
  return PointCloud(std::move(pts));
}

inline void write_ply(std::ostream &out, const PointCloud &cloud,
                      const std::vector<std::uint8_t> *labels) {
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (labels) out << "property uchar label\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud[i].x), static_cast<float>(cloud[i].y),
                          static_cast<float>(cloud[i].z)};
    out.write(reinterpret_cast<const char *>(xyz), sizeof(xyz));
    if (labels) out.put(static_cast<char>((*labels)[i]));
  }
}

inline void write_any(const std::string &path, CloudFormat format,
                      const PointCloud &cloud,
                      const std::vector<std::uint8_t> *labels) {
  if (cloud.empty()) throw InvalidArgument("refusing to write an empty cloud");
  if (format == CloudFormat::Xyz && labels) {
    throw InvalidArgument("XYZ cannot store labels; write labeled clouds as xyzl or ply");
  }
  if (format == CloudFormat::Xyzl && !labels) {
    throw InvalidArgument("XYZL requires labels; cloud is unlabeled");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (format == CloudFormat::Ply) {
    write_ply(out, cloud, labels);
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      out << format_coord(cloud[i].x) << ' ' << format_coord(cloud[i].y) << ' '
          << format_coord(cloud[i].z);
      if (labels) out << ' ' << static_cast<int>((*labels)[i]);
      out << '\n';
    }
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

} // namespace detail

/// Reads a cloud in the declared format. XYZL always yields a labeled cloud;
/// PLY yields one when the file carries a `label` property.
inline AnyCloud read_cloud(const std::string &path, CloudFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  switch (format) {
  case CloudFormat::Xyz: return detail::parse_text(in, false);
  case CloudFormat::Xyzl: return detail::parse_text(in, true);
  case CloudFormat::Ply: return detail::parse_ply(in);
  }
  throw InvalidArgument("unknown format");
}

/// Points of any cloud file, labels dropped.
inline PointCloud read_points(const std::string &path, CloudFormat format) {
  auto any = read_cloud(path, format);
  if (auto *c = std::get_if<PointCloud>(&any)) return std::move(*c);
  return std::get<LabeledPointCloud>(any).cloud();
}

inline LabeledPointCloud read_labeled(const std::string &path, CloudFormat format) {
  auto any = read_cloud(path, format);
  if (auto *c = std::get_if<LabeledPointCloud>(&any)) return std::move(*c);
  throw InvalidArgument("'" + path + "' carries no labels");
}

inline void write_cloud(const PointCloud &cloud, const std::string &path,
                        CloudFormat format) {
  detail::write_any(path, format, cloud, nullptr);
}

inline void write_cloud(const LabeledPointCloud &cloud, const std::string &path,
                        CloudFormat format) {
  std::vector<std::uint8_t> labels(cloud.labels().begin(), cloud.labels().end());
  detail::write_any(path, format, cloud.cloud(), &labels);
}

inline void write_cloud(const AnyCloud &cloud, const std::string &path,
                        CloudFormat format) {
  std::visit([&](const auto &c) { write_cloud(c, path, format); }, cloud);
}

} // namespace pcc

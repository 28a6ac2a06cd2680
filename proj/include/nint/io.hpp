// SPDX-License-Identifier: Apache-2.0
//
// File formats: PFM float maps, binary PGM masks, key-value configs and
// metric reports.
//
// PFM: "PF" (3 channels) or "Pf" (1 channel), "<width> <height>", then a scale
// whose sign gives the byte order (negative = little endian), each header line
// ending in a single '\n'. Rows of float32 follow bottom-to-top. Files are
// always written little endian with scale -1.
//
// PGM masks: "P5", width, height, maxval 255, one byte per pixel, rows
// top-to-bottom. A pixel is valid when its value is >= 128 (more generally,
// >= half of maxval rounded up).

#ifndef NINT_IO_HPP
#define NINT_IO_HPP

#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nint/camera.hpp"
#include "nint/common.hpp"
#include "nint/metrics.hpp"
#include "nint/synth.hpp"

namespace nint {

namespace io_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read error on '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write error on '" + path + "'");
}

/// Cursor over a netpbm-style header: whitespace-separated tokens.
struct HeaderReader {
  const std::string& data;
  std::size_t pos = 0;
  std::string path;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::MalformedHeader, "'" + path + "': " + what);
  }

  void skip_space(bool comments) {
    while (pos < data.size()) {
      const char c = data[pos];
      if (comments && c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::string token(bool comments = false) {
    skip_space(comments);
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) fail("truncated header");
    return data.substr(start, pos - start);
  }

  long long integer(bool comments = false) {
    const std::string t = token(comments);
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || v <= 0) fail("bad integer '" + t + "'");
    return v;
  }

  /// Consumes the single whitespace byte that ends the header.
  void end_header() {
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
      fail("header not terminated by whitespace");
    }
    ++pos;
  }
};

inline std::uint32_t byteswap32(std::uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xff00U) | ((x << 8) & 0xff0000U) | (x << 24);
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace io_detail

struct FloatMap {
  int width = 0;
  int height = 0;
  int channels = 1;
  /// Row-major, top row first.
  std::vector<float> data;
};

inline FloatMap read_pfm(const std::string& path) {
  const std::string bytes = io_detail::read_file(path);
  io_detail::HeaderReader h{bytes, 0, path};
  const std::string magic = h.token();
  FloatMap m;
  if (magic == "PF") {
    m.channels = 3;
  } else if (magic == "Pf") {
    m.channels = 1;
  } else {
    h.fail("unknown PFM magic '" + magic + "'");
  }
  const long long w = h.integer();
  const long long hh = h.integer();
  if (w > (1 << 20) || hh > (1 << 20)) h.fail("unreasonable dimensions");
  const std::string scale_tok = h.token();
  char* end = nullptr;
  const double scale = std::strtod(scale_tok.c_str(), &end);
  if (end != scale_tok.c_str() + scale_tok.size() || scale == 0.0 || !std::isfinite(scale)) {
    h.fail("bad scale '" + scale_tok + "'");
  }
  h.end_header();
  m.width = static_cast<int>(w);
  m.height = static_cast<int>(hh);
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(hh) * m.channels;
  if (bytes.size() - h.pos != count * 4) {
    h.fail("expected " + std::to_string(count * 4) + " data bytes, found " +
           std::to_string(bytes.size() - h.pos));
  }
  const bool file_le = scale < 0.0;
  const bool host_le = std::endian::native == std::endian::little;
  m.data.resize(count);
  const std::size_t row = static_cast<std::size_t>(w) * m.channels;
  for (long long r = 0; r < hh; ++r) {
    // File row r is image row height-1-r.
    const std::size_t dst = static_cast<std::size_t>(hh - 1 - r) * row;
    for (std::size_t k = 0; k < row; ++k) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + h.pos + (static_cast<std::size_t>(r) * row + k) * 4, 4);
      if (file_le != host_le) bits = io_detail::byteswap32(bits);
      m.data[dst + k] = std::bit_cast<float>(bits);
    }
  }
  return m;
}

inline void write_pfm(const std::string& path, const FloatMap& m) {
  if (m.channels != 1 && m.channels != 3) {
    throw Error(ErrorCode::InvalidArgument, "PFM supports 1 or 3 channels");
  }
  std::string out = std::string(m.channels == 3 ? "PF" : "Pf") + "\n" + std::to_string(m.width) +
                    " " + std::to_string(m.height) + "\n-1.0\n";
  const std::size_t header = out.size();
  const std::size_t row = static_cast<std::size_t>(m.width) * m.channels;
  out.resize(header + m.data.size() * 4);
  for (int r = 0; r < m.height; ++r) {
    const std::size_t src = static_cast<std::size_t>(m.height - 1 - r) * row;
    for (std::size_t k = 0; k < row; ++k) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(m.data[src + k]);
      if constexpr (std::endian::native == std::endian::big) bits = io_detail::byteswap32(bits);
      std::memcpy(out.data() + header + (static_cast<std::size_t>(r) * row + k) * 4, &bits, 4);
    }
  }
  io_detail::write_file(path, out);
}

/// Writes a depth map; unmasked pixels become 0.
inline void write_depth_map(const std::string& path, const DepthMap& depth,
                            const PixelMask* mask = nullptr) {
  if (mask) require_same_shape(depth, *mask, "depth vs mask");
  FloatMap m{depth.width(), depth.height(), 1, std::vector<float>(depth.size(), 0.0f)};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!mask || (*mask)[i]) m.data[i] = static_cast<float>(depth[i]);
  }
  write_pfm(path, m);
}

inline DepthMap read_depth_map(const std::string& path) {
  const FloatMap m = read_pfm(path);
  if (m.channels != 1) {
    throw Error(ErrorCode::MalformedHeader, "'" + path + "': depth maps need a 1-channel PFM");
  }
  DepthMap d(m.width, m.height);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = m.data[i];
  return d;
}

/// Writes a 3-channel map; unmasked pixels become (0, 0, 0).
inline void write_vector_map(const std::string& path, const Image<Vec3>& v,
                             const PixelMask* mask = nullptr) {
  if (mask) require_same_shape(v, *mask, "map vs mask");
  FloatMap m{v.width(), v.height(), 3, std::vector<float>(v.size() * 3, 0.0f)};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    for (int c = 0; c < 3; ++c) m.data[i * 3 + c] = static_cast<float>(v[i][c]);
  }
  write_pfm(path, m);
}

inline Image<Vec3> read_vector_map(const std::string& path) {
  const FloatMap m = read_pfm(path);
  if (m.channels != 3) {
    throw Error(ErrorCode::MalformedHeader, "'" + path + "': expected a 3-channel PFM");
  }
  Image<Vec3> v(m.width, m.height);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = Vec3(m.data[i * 3], m.data[i * 3 + 1], m.data[i * 3 + 2]);
  }
  return v;
}

inline void write_normal_map(const std::string& path, const NormalMap& n,
                             const PixelMask* mask = nullptr) {
  write_vector_map(path, n, mask);
}

struct NormalMapFile {
  NormalMap normals;
  /// Pixels holding a nonzero vector.
  PixelMask nonzero;
  std::size_t renormalized = 0;
};

/// Off-unit tolerance of stored normals: about three float roundings, so unit
/// vectors written as float32 read back untouched.
inline constexpr double kNormalRenormTolerance = 2e-7;

/// Reads (n_x, n_y, n_z) in camera coordinates. Vectors off unit length by more
/// than kNormalRenormTolerance are renormalized and counted; more than 1e-2 is
/// an error.
inline NormalMapFile read_normal_map(const std::string& path) {
  NormalMapFile f;
  f.normals = read_vector_map(path);
  f.nonzero = PixelMask(f.normals.width(), f.normals.height(), 0);
  for (std::size_t i = 0; i < f.normals.size(); ++i) {
    Vec3& n = f.normals[i];
    if (!n.allFinite()) {
      const Pixel p = f.normals.pixel(i);
      throw Error(ErrorCode::NonUnitNormals, "'" + path + "': non-finite normal at (" +
                                                 std::to_string(p.u) + ", " +
                                                 std::to_string(p.v) + ")");
    }
    if (n.isZero(0.0)) continue;
    f.nonzero[i] = 1;
    const double len = n.norm();
    const double dev = std::abs(len - 1.0);
    if (dev > 1e-2) {
      const Pixel p = f.normals.pixel(i);
      throw Error(ErrorCode::NonUnitNormals,
                  "'" + path + "': normal at (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                      ") has length " + std::to_string(len) + "; wrong convention?");
    }
    if (dev > kNormalRenormTolerance) {
      n /= len;
      ++f.renormalized;
    }
  }
  return f;
}

inline void write_mask(const std::string& path, const PixelMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) +
                    "\n255\n";
  for (std::size_t i = 0; i < mask.size(); ++i) out.push_back(mask[i] ? '\xff' : '\0');
  io_detail::write_file(path, out);
}

inline PixelMask read_mask(const std::string& path) {
  const std::string bytes = io_detail::read_file(path);
  io_detail::HeaderReader h{bytes, 0, path};
  if (h.token() != "P5") h.fail("expected binary PGM (P5)");
  const long long w = h.integer(true);
  const long long hh = h.integer(true);
  const long long maxval = h.integer(true);
  if (maxval > 255) h.fail("only 8-bit PGM masks are supported");
  if (w > (1 << 20) || hh > (1 << 20)) h.fail("unreasonable dimensions");
  h.end_header();
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(hh);
  if (bytes.size() - h.pos != count) {
    h.fail("expected " + std::to_string(count) + " data bytes, found " +
           std::to_string(bytes.size() - h.pos));
  }
  const int threshold = static_cast<int>((maxval + 2) / 2);  // 128 for maxval 255
  PixelMask m(static_cast<int>(w), static_cast<int>(hh), 0);
  for (std::size_t i = 0; i < count; ++i) {
    m[i] = static_cast<unsigned char>(bytes[h.pos + i]) >= threshold ? 1 : 0;
  }
  return m;
}

// ---------------------------------------------------------------------------
// key = value configs

struct KeyValueFile {
  std::string path;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) {
      throw Error(ErrorCode::InvalidArgument, "'" + path + "': missing key '" + key + "'");
    }
    return it->second;
  }

  double number(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument,
                  "'" + path + "': key '" + key + "' is not a finite number: '" + s + "'");
    }
    return v;
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  Vec3 vec3(const std::string& key) const {
    std::string s = get(key);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    Vec3 v;
    std::string extra;
    if (!(in >> v.x() >> v.y() >> v.z()) || (in >> extra) || !v.allFinite()) {
      throw Error(ErrorCode::InvalidArgument,
                  "'" + path + "': key '" + key + "' needs three numbers, got '" + get(key) + "'");
    }
    return v;
  }

  Vec3 vec3(const std::string& key, const Vec3& fallback) const {
    return has(key) ? vec3(key) : fallback;
  }

  void require_only(std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : values) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) throw Error(ErrorCode::InvalidArgument, "'" + path + "': unknown key '" + k + "'");
    }
  }
};

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// Parses `key = value` lines; blank lines and lines starting with '#' are skipped.
inline KeyValueFile parse_key_values(const std::string& text, const std::string& origin = "<text>") {
  KeyValueFile f;
  f.path = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "'" + origin + "' line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "'" + origin + "' line " + std::to_string(lineno) + ": empty key");
    }
    if (!f.values.emplace(key, value).second) {
      throw Error(ErrorCode::InvalidArgument, "'" + origin + "': duplicate key '" + key + "'");
    }
  }
  return f;
}

inline KeyValueFile read_key_values(const std::string& path) {
  return parse_key_values(io_detail::read_file(path), path);
}

struct LoadedCamera {
  CameraModel camera;
  std::vector<std::string> warnings;
};

/// Tabulated rays from a 3-channel PFM; rays with tau_z != 1 are rescaled.
inline LoadedCamera read_ray_table(const std::string& path) {
  LoadedCamera out;
  Image<Vec3> rays = read_vector_map(path);
  std::size_t rescaled = 0;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    Vec3& r = rays[i];
    if (r.z() == 1.0) continue;
    if (!(std::abs(r.z()) > 0.0) || !r.allFinite()) {
      const Pixel p = rays.pixel(i);
      throw Error(ErrorCode::InvalidArgument, "'" + path + "': ray at (" + std::to_string(p.u) +
                                                  ", " + std::to_string(p.v) +
                                                  ") has no usable z component");
    }
    r /= r.z();
    r.z() = 1.0;
    ++rescaled;
  }
  if (rescaled > 0) {
    out.warnings.push_back("'" + path + "': rescaled " + std::to_string(rescaled) +
                           " ray(s) to tau_z = 1");
  }
  out.camera = TabulatedRays{std::move(rays)};
  validate(out.camera);
  return out;
}

inline LoadedCamera camera_from_config(const KeyValueFile& kv) {
  const std::string model = kv.get("model");
  LoadedCamera out;
  if (model == "pinhole") {
    kv.require_only({"model", "fx", "fy", "cx", "cy"});
    out.camera = IdealPinhole{kv.number("fx"), kv.number("fy"), kv.number("cx"), kv.number("cy")};
  } else if (model == "brown_conrady") {
    kv.require_only({"model", "fx", "fy", "cx", "cy", "k1", "k2", "k3", "p1", "p2"});
    out.camera = BrownConradyPinhole{kv.number("fx"),        kv.number("fy"),
                                     kv.number("cx"),        kv.number("cy"),
                                     kv.number("k1", 0.0),   kv.number("k2", 0.0),
                                     kv.number("k3", 0.0),   kv.number("p1", 0.0),
                                     kv.number("p2", 0.0)};
  } else if (model == "tabulated") {
    kv.require_only({"model", "ray_file"});
    std::filesystem::path p = kv.get("ray_file");
    if (p.is_relative()) p = std::filesystem::path(kv.path).parent_path() / p;
    out = read_ray_table(p.string());
  } else if (model == "orthographic") {
    throw Error(ErrorCode::InvalidArgument,
                "orthographic cameras are not supported: the formulation needs a central camera");
  } else {
    throw Error(ErrorCode::InvalidArgument, "'" + kv.path + "': unknown camera model '" + model + "'");
  }
  validate(out.camera);
  return out;
}

inline LoadedCamera read_camera(const std::string& path) {
  return camera_from_config(read_key_values(path));
}

/// Serializes pinhole models; tabulated cameras need a ray file name.
inline std::string camera_to_config(const CameraModel& cam, const std::string& ray_file = "") {
  using io_detail::format_double;
  std::string s;
  if (const auto* p = std::get_if<IdealPinhole>(&cam)) {
    s = "model = pinhole\nfx = " + format_double(p->fx) + "\nfy = " + format_double(p->fy) +
        "\ncx = " + format_double(p->cx) + "\ncy = " + format_double(p->cy) + "\n";
  } else if (const auto* b = std::get_if<BrownConradyPinhole>(&cam)) {
    s = "model = brown_conrady\nfx = " + format_double(b->fx) + "\nfy = " + format_double(b->fy) +
        "\ncx = " + format_double(b->cx) + "\ncy = " + format_double(b->cy) +
        "\nk1 = " + format_double(b->k1) + "\nk2 = " + format_double(b->k2) +
        "\nk3 = " + format_double(b->k3) + "\np1 = " + format_double(b->p1) +
        "\np2 = " + format_double(b->p2) + "\n";
  } else {
    if (ray_file.empty()) throw Error(ErrorCode::InvalidArgument, "tabulated camera needs a ray file");
    s = "model = tabulated\nray_file = " + ray_file + "\n";
  }
  return s;
}

inline Scene scene_from_config(const KeyValueFile& kv) {
  const std::string kind = kv.get("scene");
  if (kind == "plane") {
    kv.require_only({"scene", "point", "normal"});
    return scene::Plane{kv.vec3("point"), kv.vec3("normal").normalized()};
  }
  if (kind == "sphere") {
    kv.require_only({"scene", "center", "radius"});
    return scene::SphereCap{kv.vec3("center"), kv.number("radius")};
  }
  if (kind == "step") {
    kv.require_only({"scene", "z_near", "z_far", "a", "b", "c", "normal_near", "normal_far"});
    scene::StepPlanes s;
    s.z_near = kv.number("z_near");
    s.z_far = kv.number("z_far");
    s.a = kv.number("a");
    s.b = kv.number("b");
    s.c = kv.number("c");
    s.normal_near = kv.vec3("normal_near", s.normal_near).normalized();
    s.normal_far = kv.vec3("normal_far", s.normal_far).normalized();
    return s;
  }
  if (kind == "wave") {
    kv.require_only({"scene", "z0", "amplitude", "fu", "fv"});
    return scene::Wave{kv.number("z0"), kv.number("amplitude"), kv.number("fu"), kv.number("fv")};
  }
  throw Error(ErrorCode::InvalidArgument, "'" + kv.path + "': unknown scene '" + kind + "'");
}

inline Scene read_scene(const std::string& path) { return scene_from_config(read_key_values(path)); }

// ---------------------------------------------------------------------------
// reports

inline std::vector<std::pair<std::string, double>> report_rows(const MetricsReport& r) {
  std::vector<std::pair<std::string, double>> rows = {
      {"made", r.made}, {"re_percent", r.re_percent}, {"era_percent", r.era_percent}};
  for (const auto& [name, s] : r.residuals) {
    rows.emplace_back("residual_" + name + "_mean", s.mean);
    rows.emplace_back("residual_" + name + "_std", s.std);
  }
  return rows;
}

/// CSV: header `metric,value,alignment,pixels`, one row per metric, values %.17g.
inline std::string report_to_csv(const MetricsReport& r) {
  std::string s = "metric,value,alignment,pixels\n";
  for (const auto& [name, value] : report_rows(r)) {
    s += name + "," + io_detail::format_double(value) + "," + r.alignment + "," +
         std::to_string(r.pixel_count) + "\n";
  }
  return s;
}

inline std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["alignment"] = r.alignment;
  j["pixels"] = r.pixel_count;
  for (const auto& [name, value] : report_rows(r)) j["metrics"][name] = value;
  return j.dump(2) + "\n";
}

inline void write_report(const std::string& path, const MetricsReport& r) {
  const bool json = std::filesystem::path(path).extension() == ".json";
  io_detail::write_file(path, json ? report_to_json(r) : report_to_csv(r));
}

inline MetricsReport parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "metric,value,alignment,pixels") {
    throw Error(ErrorCode::MalformedHeader, "report CSV header mismatch");
  }
  MetricsReport r;
  std::map<std::string, ResidualStats> res;
  std::vector<std::string> res_order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 4) throw Error(ErrorCode::MalformedHeader, "report row needs 4 fields: " + line);
    const double v = std::strtod(f[1].c_str(), nullptr);
    r.alignment = f[2];
    r.pixel_count = static_cast<std::size_t>(std::strtoull(f[3].c_str(), nullptr, 10));
    const std::string& m = f[0];
    if (m == "made") {
      r.made = v;
    } else if (m == "re_percent") {
      r.re_percent = v;
    } else if (m == "era_percent") {
      r.era_percent = v;
    } else if (m.rfind("residual_", 0) == 0 && m.size() > 14) {
      const bool mean = m.ends_with("_mean");
      const std::string name = m.substr(9, m.size() - 9 - (mean ? 5 : 4));
      if (!res.count(name)) res_order.push_back(name);
      (mean ? res[name].mean : res[name].std) = v;
    } else {
      throw Error(ErrorCode::MalformedHeader, "unknown metric '" + m + "'");
    }
  }
  for (const auto& name : res_order) r.residuals.emplace_back(name, res[name]);
  return r;
}

inline MetricsReport read_report(const std::string& path) {
  return parse_report_csv(io_detail::read_file(path));
}

}  // namespace nint

#endif  // NINT_IO_HPP

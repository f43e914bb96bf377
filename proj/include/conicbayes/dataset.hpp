#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"

namespace conic {

class MalformedFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundTruth {
  ConicFD conic;
  std::vector<double> angles;
  double sigma{};
};

struct NoisyDataset {
  std::vector<Point> points;
  std::optional<GroundTruth> truth;
  std::uint64_t seed{};

  std::size_t size() const { return points.size(); }
};

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial file at `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path() && !path.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- JSON ------------------------------------------------------------------

inline nlohmann::json to_json(const ConicFD& c) {
  return {{"h", c.h}, {"k", c.k}, {"phi", c.phi}, {"l", c.l}, {"e", c.e}};
}

inline nlohmann::json to_json(const NoisyDataset& d) {
  nlohmann::json pts = nlohmann::json::array();
  for (const Point& p : d.points) pts.push_back({p.x, p.y});
  nlohmann::json truth = nullptr;
  if (d.truth) {
    truth = to_json(d.truth->conic);
    truth["sigma"] = d.truth->sigma;
    truth["angles"] = d.truth->angles;
  }
  return {{"points", std::move(pts)}, {"truth", std::move(truth)}, {"seed", d.seed}};
}

namespace detail {

inline double finite_number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw MalformedFileError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw MalformedFileError(where + ": non-finite value");
  return v;
}

inline double field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw MalformedFileError(where + ": missing field '" + key + "'");
  return finite_number(obj.at(key), where + "." + key);
}

}  // namespace detail

inline ConicFD conic_from_json(const nlohmann::json& j, const std::string& where = "conic") {
  if (!j.is_object()) throw MalformedFileError(where + ": expected an object");
  ConicFD c;
  c.h = detail::field(j, "h", where);
  c.k = detail::field(j, "k", where);
  c.phi = detail::field(j, "phi", where);
  c.l = detail::field(j, "l", where);
  c.e = detail::field(j, "e", where);
  if (!(c.l > 0.0) || c.e < 0.0) throw MalformedFileError(where + ": requires l > 0 and e >= 0");
  return c;
}

inline NoisyDataset dataset_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw MalformedFileError("dataset: expected a JSON object");
  if (!j.contains("points") || !j.at("points").is_array())
    throw MalformedFileError("dataset: missing array field 'points'");
  NoisyDataset d;
  const auto& pts = j.at("points");
  d.points.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string where = "points[" + std::to_string(i) + "]";
    const auto& p = pts[i];
    if (!p.is_array() || p.size() != 2) throw MalformedFileError(where + ": expected [x, y]");
    d.points.push_back({detail::finite_number(p[0], where + "[0]"),
                        detail::finite_number(p[1], where + "[1]")});
  }
  if (j.contains("truth") && !j.at("truth").is_null()) {
    const auto& t = j.at("truth");
    GroundTruth g;
    g.conic = conic_from_json(t, "truth");
    g.sigma = detail::field(t, "sigma", "truth");
    if (!t.contains("angles") || !t.at("angles").is_array())
      throw MalformedFileError("truth: missing array field 'angles'");
    const auto& a = t.at("angles");
    for (std::size_t i = 0; i < a.size(); ++i)
      g.angles.push_back(detail::finite_number(a[i], "truth.angles[" + std::to_string(i) + "]"));
    if (g.angles.size() != d.points.size())
      throw MalformedFileError("truth.angles: length " + std::to_string(g.angles.size()) +
                               " does not match " + std::to_string(d.points.size()) + " points");
    d.truth = std::move(g);
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw MalformedFileError("seed: expected an integer");
    d.seed = j.at("seed").get<std::uint64_t>();
  }
  return d;
}

// --- CSV (x,y only) ----------------------------------------------------------

inline std::string dataset_to_csv(const NoisyDataset& d) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y\n";
  for (const Point& p : d.points) out << p.x << ',' << p.y << '\n';
  return out.str();
}

inline NoisyDataset dataset_from_csv(const std::string& text) {
  NoisyDataset d;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw MalformedFileError("line " + std::to_string(lineno) + ": expected 'x,y'");
    const std::string xs = line.substr(0, comma), ys = line.substr(comma + 1);
    if (lineno == 1 && (xs == "x" || xs == "\"x\"")) continue;  // header
    auto parse = [&](const std::string& s, const char* name) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw MalformedFileError("line " + std::to_string(lineno) + ", field " + name +
                                 ": not a number: '" + s + "'");
      }
      if (s.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(v))
        throw MalformedFileError("line " + std::to_string(lineno) + ", field " + name +
                                 ": invalid value '" + s + "'");
      return v;
    };
    d.points.push_back({parse(xs, "x"), parse(ys, "y")});
  }
  return d;
}

// --- Files -------------------------------------------------------------------

inline void write_dataset(const std::filesystem::path& path, const NoisyDataset& d) {
  if (path.extension() == ".csv") {
    write_file_atomic(path, dataset_to_csv(d));
  } else {
    write_file_atomic(path, to_json(d).dump(2) + "\n");
  }
}

inline NoisyDataset read_dataset(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".csv") return dataset_from_csv(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedFileError(path.string() + ": " + e.what());
  }
  try {
    return dataset_from_json(j);
  } catch (const MalformedFileError& e) {
    throw MalformedFileError(path.string() + ": " + e.what());
  }
}

}  // namespace conic

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "pipeline.hpp"
#include "reproduce.hpp"
#include "simulate.hpp"
#include "version.hpp"

namespace conic {

namespace fs = std::filesystem;

enum class Command { Simulate, Fit, Detect, Baseline, ReproduceSim1, ReproduceSim2, PlotData };
enum class ReportFormat { Json, Csv, Table };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Fit: return "fit";
    case Command::Detect: return "detect";
    case Command::Baseline: return "baseline";
    case Command::ReproduceSim1: return "reproduce-sim1";
    case Command::ReproduceSim2: return "reproduce-sim2";
    case Command::PlotData: return "plotdata";
  }
  return "unknown";
}

inline const char* to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Table: return "table";
  }
  return "json";
}

inline ConicType require_conic_type(const std::string& s) {
  if (auto t = parse_conic_type(s)) return *t;
  throw std::invalid_argument("unknown conic type '" + s + "'");
}

inline EllipseAngles parse_ellipse_angles(const std::string& s) {
  if (s == "centre") return EllipseAngles::Centre;
  if (s == "focal") return EllipseAngles::Focal;
  throw std::invalid_argument("ellipse angles must be 'centre' or 'focal', got '" + s + "'");
}

inline ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "table") return ReportFormat::Table;
  throw std::invalid_argument("format must be json, csv or table, got '" + s + "'");
}

/// Everything a command needs. Unset optionals take per-command defaults.
struct RunConfig {
  Command command{Command::Fit};
  std::vector<std::string> inputs;
  std::string out;
  std::string trace;  // fit: optional NDJSON trace path
  std::string data;   // plotdata: dataset file (defaults to the one named in the fit output)

  std::uint64_t seed{1};
  int iterations{10000};
  int burn_in{2000};
  int thin{1};
  std::optional<int> m;
  std::optional<double> f0_mean;
  std::optional<std::string> fix_type;
  double ci_level{0.95};
  int region_samples{50};
  int jobs{1};

  std::string protocol{"sim2"};  // simulate only
  std::optional<int> n_datasets;
  std::optional<int> n_points;
  double sigma{2.0};
  std::optional<std::string> sim_type;
  std::string ellipse_angles{"centre"};

  std::string format{"json"};
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Type-checks overrides before any compute.
inline void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(c.iterations >= 1, "--iterations must be >= 1");
  need(c.burn_in >= 0 && c.burn_in < c.iterations, "--burn-in must be in [0, iterations)");
  need(c.thin >= 1, "--thin must be >= 1");
  need(!c.m || *c.m >= 4, "--m must be >= 4");
  need(!c.f0_mean || *c.f0_mean > 1.0 / std::log(2.0), "--f0-mean must exceed 1/ln 2");
  need(c.ci_level > 0.0 && c.ci_level < 1.0, "--ci-level must be in (0, 1)");
  need(c.region_samples >= 0, "--region-samples must be >= 0");
  need(c.jobs >= 1, "--jobs must be >= 1");
  need(c.sigma > 0.0 && std::isfinite(c.sigma), "--sigma must be positive");
  need(c.protocol == "sim1" || c.protocol == "sim2", "--protocol must be sim1 or sim2");
  try {
    if (c.fix_type) require_conic_type(*c.fix_type);
    if (c.sim_type) {
      const ConicType t = require_conic_type(*c.sim_type);
      need(t != ConicType::Circle, "--type must be ellipse, parabola or hyperbola");
    }
    parse_ellipse_angles(c.ellipse_angles);
    parse_format(c.format);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  switch (c.command) {
    case Command::Fit:
    case Command::Detect:
    case Command::PlotData:
      need(c.inputs.size() == 1, std::string(to_string(c.command)) + " needs exactly one --input");
      break;
    case Command::Baseline: need(!c.inputs.empty(), "baseline needs at least one --input"); break;
    default: break;
  }
  if (c.command == Command::Simulate || c.command == Command::ReproduceSim1 ||
      c.command == Command::ReproduceSim2 || c.command == Command::PlotData)
    need(!c.out.empty(), std::string(to_string(c.command)) + " needs --out");
}

/// Settings that determine results. Output paths and --jobs are excluded, so
/// the hash only changes when the numbers can.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = {{"command", to_string(c.command)},
                      {"inputs", c.inputs},
                      {"seed", c.seed},
                      {"iterations", c.iterations},
                      {"burn_in", c.burn_in},
                      {"thin", c.thin},
                      {"m", c.m ? nlohmann::json(*c.m) : nlohmann::json(nullptr)},
                      {"f0_mean", c.f0_mean ? nlohmann::json(*c.f0_mean) : nlohmann::json(nullptr)},
                      {"fix_type", c.fix_type ? nlohmann::json(*c.fix_type) : nlohmann::json(nullptr)},
                      {"ci_level", c.ci_level},
                      {"region_samples", c.region_samples},
                      {"format", c.format}};
  if (c.command == Command::Simulate || c.command == Command::ReproduceSim1 ||
      c.command == Command::ReproduceSim2) {
    j["protocol"] = c.protocol;
    j["n_datasets"] = c.n_datasets ? nlohmann::json(*c.n_datasets) : nlohmann::json(nullptr);
    j["n_points"] = c.n_points ? nlohmann::json(*c.n_points) : nlohmann::json(nullptr);
    j["sigma"] = c.sigma;
    j["type"] = c.sim_type ? nlohmann::json(*c.sim_type) : nlohmann::json(nullptr);
    j["ellipse_angles"] = c.ellipse_angles;
  }
  return j;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

inline FitOptions fit_options(const RunConfig& c) {
  FitOptions o;
  o.chain.n_iterations = c.iterations;
  o.chain.burn_in = c.burn_in;
  o.chain.thin = c.thin;
  o.chain.seed = c.seed;
  if (c.fix_type) o.chain.fixed_type = require_conic_type(*c.fix_type);
  o.m = c.m;
  o.f0_mean = c.f0_mean;
  o.ci_level = c.ci_level;
  o.region_samples = c.region_samples;
  return o;
}

/// Simulation spec for simulate / reproduce-*; desk-scale defaults.
inline SimSpec sim_spec(const RunConfig& c) {
  SimSpec s;
  const bool sim1 = c.command == Command::ReproduceSim1 ||
                    (c.command == Command::Simulate && c.protocol == "sim1");
  s.protocol = sim1 ? Protocol::Sim1 : Protocol::Sim2;
  s.n_datasets = c.n_datasets.value_or(sim1 ? 20 : 30);
  s.n_points = c.n_points.value_or(sim1 ? 200 : 100);
  s.sigma = c.sigma;
  s.seed = c.seed;
  if (c.sim_type) s.conic_type = require_conic_type(*c.sim_type);
  s.ellipse_angles = parse_ellipse_angles(c.ellipse_angles);
  validate(s);
  return s;
}

inline nlohmann::json to_json(const SimSpec& s) {
  return {{"protocol", s.protocol == Protocol::Sim1 ? "sim1" : "sim2"},
          {"n_datasets", s.n_datasets},
          {"n_points", s.n_points},
          {"sigma", s.sigma},
          {"seed", s.seed},
          {"type", s.conic_type ? nlohmann::json(to_string(*s.conic_type)) : nlohmann::json("balanced")},
          {"ellipse_angles", s.ellipse_angles == EllipseAngles::Centre ? "centre" : "focal"}};
}

inline nlohmann::json provenance(const RunConfig& c) {
  return {{"version", std::string(kVersion)}, {"config_hash", config_hash(c)}, {"config", to_json(c)}};
}

// ---------------------------------------------------------------------------
// Commands. Each returns the process exit code; results go to files or `out`.
// ---------------------------------------------------------------------------

inline std::string dataset_filename(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "dataset_%04d.json", i);
  return buf;
}

/// Writes one JSON file per dataset plus manifest.json listing seed, spec
/// and the truth of each dataset. The manifest hash covers every dataset
/// file's bytes in order.
inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const SimSpec spec = sim_spec(c);
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json index = nlohmann::json::array();
  std::string all_bytes;
  for (int i = 0; i < spec.n_datasets; ++i) {
    const NoisyDataset d = simulate_one(spec, i);
    const std::string name = dataset_filename(i);
    const std::string bytes = to_json(d).dump(2) + "\n";
    write_file_atomic(dir / name, bytes);
    all_bytes += bytes;
    index.push_back({{"file", name},
                     {"seed", d.seed},
                     {"type", to_string(type_of(d.truth->conic.e))},
                     {"truth", to_json(d.truth->conic)}});
  }
  nlohmann::json manifest = provenance(c);
  manifest["spec"] = to_json(spec);
  manifest["datasets"] = index;
  manifest["content_hash"] = hex64(fnv1a(all_bytes));
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << spec.n_datasets << " datasets to " << dir.string() << " (hash "
      << manifest["content_hash"].get<std::string>() << ")\n";
  return 0;
}

inline nlohmann::json to_json(const PriorSpec& p) {
  return {{"f0_mean", p.f0_mean},
          {"location_mean", {p.location_mean.x, p.location_mean.y}},
          {"location_sd", p.location_sd},
          {"latus_mean", p.latus_mean},
          {"latus_sd", p.latus_sd},
          {"sigma2_shape", p.sigma2_shape},
          {"sigma2_scale", p.sigma2_scale},
          {"alpha", p.alpha},
          {"m", p.m}};
}

inline nlohmann::json fit_report(const RunConfig& c, const NoisyDataset& d, const FitResult& r) {
  nlohmann::json j = provenance(c);
  j["input"] = c.inputs.front();
  j["n_points"] = d.points.size();
  j["init"] = {{"conic", to_json(r.init.conic)},
               {"type", to_string(r.init.type)},
               {"sigma2", r.init.sigma2}};
  j["prior"] = to_json(r.prior);
  j["summary"] = to_json(r.summary);
  j["credible_region"] = to_json(r.region);
  j["acceptance"] = to_json(r.chain.acceptance);
  return j;
}

/// Posterior summary JSON to --out (or `out`), optional NDJSON trace.
inline int cmd_fit(const RunConfig& c, std::ostream& out) {
  const NoisyDataset d = read_dataset(c.inputs.front());
  if (d.points.size() < 6) throw std::invalid_argument("fit needs at least 6 points");
  const FitResult r = fit_dataset(d, fit_options(c));
  const std::string text = fit_report(c, d, r).dump(2) + "\n";
  if (!c.trace.empty()) write_file_atomic(c.trace, trace_to_ndjson(r.chain.trace));
  if (c.out.empty())
    out << text;
  else
    write_file_atomic(c.out, text);
  return 0;
}

/// Conic type only: probabilities and Bayes factors.
inline int cmd_detect(const RunConfig& c, std::ostream& out) {
  const NoisyDataset d = read_dataset(c.inputs.front());
  if (d.points.size() < 6) throw std::invalid_argument("detect needs at least 6 points");
  const FitResult r = fit_dataset(d, fit_options(c));
  const nlohmann::json s = to_json(r.summary);
  nlohmann::json j = provenance(c);
  j["input"] = c.inputs.front();
  j["detected_type"] = s["detected_type"];
  j["type_probs"] = s["type_probs"];
  j["bayes_factors"] = s["bayes_factors"];
  std::string text;
  if (parse_format(c.format) == ReportFormat::Json) {
    text = j.dump(2) + "\n";
  } else {
    text = "type,probability,mc_sd\n";
    char buf[96];
    for (ConicType t : kAllTypes) {
      const auto& p = r.summary.type_probs[type_index(t)];
      std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", to_string(t), p.estimate, p.mc_sd);
      text += buf;
    }
  }
  if (c.out.empty())
    out << text;
  else
    write_file_atomic(c.out, text);
  return 0;
}

/// Dataset files named by `inputs`; directories contribute their *.json
/// files (except manifest.json) in name order.
inline std::vector<NoisyDataset> load_datasets(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        const fs::path& f = entry.path();
        if (entry.is_regular_file() && f.extension() == ".json" && f.filename() != "manifest.json")
          found.push_back(f);
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  std::vector<NoisyDataset> out;
  out.reserve(files.size());
  for (const fs::path& f : files) out.push_back(read_dataset(f));
  if (out.empty()) throw IoError("no dataset files found");
  return out;
}

inline std::string method_summary_text(const std::vector<MethodRow>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %4s %20s %20s %20s %20s\n", "method", "n", "long axis",
                "short axis", "center x", "center y");
  out += buf;
  for (const MethodRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %4d", r.method.c_str(), r.n_ok);
    out += buf;
    for (const BiasSe* b : {&r.long_axis, &r.short_axis, &r.center_x, &r.center_y}) {
      char cell[64];
      if (b->se)
        std::snprintf(cell, sizeof cell, "%.3f (%.3f)", b->bias, *b->se);
      else
        std::snprintf(cell, sizeof cell, "%.3f (NA)", b->bias);
      std::snprintf(buf, sizeof buf, " %20s", cell);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

/// Bias/SE of the classical fits, one row per method.
inline int cmd_baseline(const RunConfig& c, std::ostream& out) {
  const std::vector<NoisyDataset> data = load_datasets(c.inputs);
  for (const NoisyDataset& d : data)
    if (!d.truth) throw std::invalid_argument("baseline needs datasets with a truth block");
  std::vector<int> failed;
  const std::vector<MethodRow> rows = run_baselines(data, c.jobs, &failed);
  std::string text;
  switch (parse_format(c.format)) {
    case ReportFormat::Json: {
      nlohmann::json j = provenance(c);
      nlohmann::json rj = nlohmann::json::array();
      for (const MethodRow& r : rows) rj.push_back(to_json(r));
      j["rows"] = rj;
      j["failed"] = failed;
      text = j.dump(2) + "\n";
      break;
    }
    case ReportFormat::Csv: text = method_summary_csv(rows); break;
    case ReportFormat::Table: text = method_summary_text(rows); break;
  }
  if (c.out.empty())
    out << text;
  else
    write_file_atomic(c.out, text);
  return 0;
}

/// Simulates, fits every dataset conditional on an ellipse, and writes
/// report.json and method_summary.csv under --out.
inline int cmd_reproduce_sim1(const RunConfig& c, std::ostream& out) {
  const SimSpec spec = sim_spec(c);
  const std::vector<NoisyDataset> data = simulate_sim1(spec);
  const Sim1Report rep = reproduce_sim1(data, fit_options(c), c.jobs);
  nlohmann::json j = provenance(c);
  j["spec"] = to_json(spec);
  nlohmann::json rows = nlohmann::json::array();
  for (const MethodRow& r : rep.rows) rows.push_back(to_json(r));
  j["methods"] = rows;
  j["failed"] = rep.failed;
  double la = 0.0, sa = 0.0;
  for (const auto& ax : rep.bayes_axes) {
    la += ax[0];
    sa += ax[1];
  }
  if (!rep.bayes_axes.empty()) {
    j["bayes_mean_long_axis"] = la / rep.bayes_axes.size();
    j["bayes_mean_short_axis"] = sa / rep.bayes_axes.size();
  }
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_file_atomic(dir / "report.json", j.dump(2) + "\n");
  write_file_atomic(dir / "method_summary.csv", method_summary_csv(rep.rows));
  out << method_summary_text(rep.rows);
  if (!rep.failed.empty()) out << "failed datasets: " << nlohmann::json(rep.failed).dump() << "\n";
  return rep.failed.empty() ? 0 : 3;
}

/// Simulates the balanced three-type study and writes report.json and
/// type_probs.csv under --out.
inline int cmd_reproduce_sim2(const RunConfig& c, std::ostream& out) {
  const SimSpec spec = sim_spec(c);
  const std::vector<NoisyDataset> data = simulate_sim2(spec);
  const Sim2Report rep = reproduce_sim2(data, fit_options(c), c.jobs);
  nlohmann::json j = provenance(c);
  j["spec"] = to_json(spec);
  j.update(to_json(rep));
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_file_atomic(dir / "report.json", j.dump(2) + "\n");
  write_file_atomic(dir / "type_probs.csv", type_probs_csv(rep));
  out << type_probs_csv(rep);
  char buf[96];
  std::snprintf(buf, sizeof buf, "accuracy %.3f  rmse(e) %.4f\n", rep.accuracy, rep.rmse_e);
  out << buf;
  if (!rep.failed.empty()) out << "failed datasets: " << nlohmann::json(rep.failed).dump() << "\n";
  return rep.failed.empty() ? 0 : 3;
}

// ---------------------------------------------------------------------------
// Plot data.
// ---------------------------------------------------------------------------

struct Box {
  double x0, y0, x1, y1;
  bool contains(const Point& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

inline Box padded_box(std::span<const Point> pts, double pad_fraction) {
  Box b{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
  for (const Point& p : pts) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  const double pad = pad_fraction * std::max(std::hypot(b.x1 - b.x0, b.y1 - b.y0), 1e-9);
  return {b.x0 - pad, b.y0 - pad, b.x1 + pad, b.y1 + pad};
}

/// Ellipses: closed loop, last point equal to the first. Parabolas and
/// hyperbolas: the branch over the open angle support, clipped to `clip`.
inline std::vector<Point> conic_polyline(const ConicFD& c, const Box& clip, int n = 400) {
  std::vector<Point> out;
  if (c.e < 1.0) {
    for (int i = 0; i < n; ++i) out.push_back(fd_to_point(-kPi + kTwoPi * i / n, c));
    out.push_back(out.front());
    return out;
  }
  const double R = angle_support(c.e);
  const double lim = R * (1.0 - 1e-6);
  for (int i = 0; i <= n; ++i) {
    const Point p = fd_to_point(-lim + 2.0 * lim * i / n, c);
    if (clip.contains(p)) out.push_back(p);
  }
  return out;
}

inline std::string svg_document(const std::vector<std::pair<std::string, std::vector<Point>>>& lines,
                                std::span<const Point> data, const Box& view) {
  const double w = view.x1 - view.x0, h = view.y1 - view.y0;
  const double stroke = 0.002 * std::max(w, h);
  std::ostringstream s;
  s.precision(10);
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << view.x0 << " " << -view.y1 << " " << w
    << " " << h << "\">\n"
    << "<g transform=\"scale(1,-1)\">\n";
  for (const auto& [name, pts] : lines) {
    if (pts.size() < 2) continue;
    const bool mean = name == "posterior_mean";
    s << "<polyline fill=\"none\" stroke=\"" << (mean ? "black" : "gray") << "\" stroke-width=\""
      << (mean ? 2 * stroke : stroke) << "\" points=\"";
    for (const Point& p : pts) s << p.x << "," << p.y << " ";
    s << "\"/>\n";
  }
  for (const Point& p : data)
    s << "<circle cx=\"" << p.x << "\" cy=\"" << p.y << "\" r=\"" << 2 * stroke << "\" fill=\"blue\"/>\n";
  s << "</g>\n</svg>\n";
  return s.str();
}

/// Polylines of the data, the posterior-mean conic and the credible-region
/// conic samples, as plot.csv and plot.svg under --out.
inline int cmd_plotdata(const RunConfig& c, std::ostream& out) {
  nlohmann::json fit;
  try {
    fit = nlohmann::json::parse(read_file(c.inputs.front()));
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedFileError(c.inputs.front() + ": " + e.what());
  }
  if (!fit.contains("summary") || !fit.contains("credible_region"))
    throw MalformedFileError(c.inputs.front() + ": not a fit output");
  const std::string data_path = !c.data.empty() ? c.data : fit.value("input", std::string());
  if (data_path.empty()) throw IoError("no dataset: pass --data");
  const NoisyDataset d = read_dataset(data_path);
  const Box clip = padded_box(d.points, 0.25);

  std::vector<std::pair<std::string, std::vector<Point>>> lines;
  lines.emplace_back("posterior_mean",
                     conic_polyline(conic_from_json(fit["summary"]["theta_mean"], "theta_mean"), clip));
  int j = 0;
  for (const auto& cj : fit["credible_region"]["conic_samples"])
    lines.emplace_back("region_" + std::to_string(j++), conic_polyline(conic_from_json(cj, "conic_samples"), clip));

  std::ostringstream csv;
  csv.precision(12);
  csv << "series,index,x,y\n";
  for (std::size_t i = 0; i < d.points.size(); ++i)
    csv << "data," << i << "," << d.points[i].x << "," << d.points[i].y << "\n";
  for (const auto& [name, pts] : lines)
    for (std::size_t i = 0; i < pts.size(); ++i) csv << name << "," << i << "," << pts[i].x << "," << pts[i].y << "\n";

  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_file_atomic(dir / "plot.csv", csv.str());
  write_file_atomic(dir / "plot.svg", svg_document(lines, d.points, clip));
  out << "wrote " << (dir / "plot.csv").string() << " and " << (dir / "plot.svg").string() << "\n";
  return 0;
}

inline nlohmann::json error_json(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

/// Runs a command; failures become one line of error JSON on `err` and a
/// nonzero exit code.
inline int run_command(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    validate(c);
    switch (c.command) {
      case Command::Simulate: return cmd_simulate(c, out);
      case Command::Fit: return cmd_fit(c, out);
      case Command::Detect: return cmd_detect(c, out);
      case Command::Baseline: return cmd_baseline(c, out);
      case Command::ReproduceSim1: return cmd_reproduce_sim1(c, out);
      case Command::ReproduceSim2: return cmd_reproduce_sim2(c, out);
      case Command::PlotData: return cmd_plotdata(c, out);
    }
  } catch (const ConfigError& e) {
    err << error_json("config", e.what()).dump() << "\n";
    return 2;
  } catch (const InvalidSpecError& e) {
    err << error_json("invalid_spec", e.what()).dump() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << error_json("io", e.what()).dump() << "\n";
    return 4;
  } catch (const MalformedFileError& e) {
    err << error_json("malformed_file", e.what()).dump() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << error_json("pipeline", e.what()).dump() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace conic

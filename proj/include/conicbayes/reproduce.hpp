#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "classical_fit.hpp"
#include "pipeline.hpp"
#include "simulate.hpp"

namespace conic {

/// Runs job(i) for i in [0, n) on `jobs` threads. Results must be written by
/// index so the outcome does not depend on scheduling. Exceptions are
/// collected per index rather than propagated.
inline std::vector<std::optional<std::string>> parallel_for(int n, int jobs,
                                                            const std::function<void(int)>& job) {
  std::vector<std::optional<std::string>> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int k = std::max(1, std::min(jobs, n));
  if (k == 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return errors;
}

// ---------------------------------------------------------------------------
// Axis / centre statistics.
// ---------------------------------------------------------------------------

struct EllipseAxes {
  double long_axis{};
  double short_axis{};
  Point center;
};

inline EllipseAxes ellipse_axes(const ConicFD& c) {
  if (!(c.e < 1.0)) throw std::invalid_argument("axes are defined for ellipses only");
  const StandardForm s = to_standard_form(c);
  return {2.0 * s.a, 2.0 * s.b.value_or(s.a), s.center};
}

struct BiasSe {
  double bias{};
  std::optional<double> se;  // absent with fewer than two datasets
  double rmse{};
};

inline BiasSe bias_se(std::span<const double> estimates, double truth) {
  BiasSe out;
  const double n = static_cast<double>(estimates.size());
  if (estimates.empty()) return out;
  double mean = 0.0, sq = 0.0;
  for (double v : estimates) {
    mean += v;
    sq += (v - truth) * (v - truth);
  }
  mean /= n;
  out.bias = mean - truth;
  out.rmse = std::sqrt(sq / n);
  if (estimates.size() > 1) {
    double var = 0.0;
    for (double v : estimates) var += (v - mean) * (v - mean);
    out.se = std::sqrt(var / (n - 1.0) / n);
  }
  return out;
}

struct MethodRow {
  std::string method;
  BiasSe long_axis, short_axis, center_x, center_y;
  int n_ok{};
};

/// Pseudo-inverse ellipse (from the algebraic fit's quadratic form).
inline ConicFD baseline_pseudo_inverse(std::span<const Point> pts) {
  const ConicFD c = quad_to_fd(fit_pseudo_inverse(pts));
  if (!(c.e < 1.0)) throw InadmissibleError("pseudo-inverse fit is not an ellipse");
  return c;
}

/// Orthogonal-distance ellipse, started from the pseudo-inverse fit when it
/// is an ellipse, else from the ellipse-restricted initialization.
inline ConicFD baseline_orthogonal(std::span<const Point> pts) {
  ConicFD start;
  try {
    start = baseline_pseudo_inverse(pts);
    if (start.e == 0.0) start.e = 1e-3;
  } catch (const std::exception&) {
    start = initialize(pts, ConicType::NonCircularEllipse).conic;
  }
  return fit_orthogonal_distance(pts, ConicType::NonCircularEllipse, start).conic;
}

inline MethodRow summarize_method(const std::string& name, const std::vector<std::optional<ConicFD>>& fits,
                                  const std::vector<ConicFD>& truths) {
  MethodRow row;
  row.method = name;
  std::vector<double> la, sa, cx, cy;
  std::vector<double> tla, tsa, tcx, tcy;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (!fits[i] || !(fits[i]->e < 1.0)) continue;
    const EllipseAxes est = ellipse_axes(*fits[i]), tru = ellipse_axes(truths[i]);
    // Errors against each dataset's own truth.
    la.push_back(est.long_axis - tru.long_axis);
    sa.push_back(est.short_axis - tru.short_axis);
    cx.push_back(est.center.x - tru.center.x);
    cy.push_back(est.center.y - tru.center.y);
  }
  row.n_ok = static_cast<int>(la.size());
  row.long_axis = bias_se(la, 0.0);
  row.short_axis = bias_se(sa, 0.0);
  row.center_x = bias_se(cx, 0.0);
  row.center_y = bias_se(cy, 0.0);
  return row;
}

inline std::string format_se(const std::optional<double>& se) {
  if (!se) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *se);
  return buf;
}

/// CSV: one row per method; bias and SE per column.
inline std::string method_summary_csv(const std::vector<MethodRow>& rows) {
  std::string out =
      "method,n,long_axis_bias,long_axis_se,short_axis_bias,short_axis_se,"
      "center_x_bias,center_x_se,center_y_bias,center_y_se\n";
  char buf[96];
  for (const MethodRow& r : rows) {
    out += r.method + "," + std::to_string(r.n_ok);
    for (const BiasSe* b : {&r.long_axis, &r.short_axis, &r.center_x, &r.center_y}) {
      std::snprintf(buf, sizeof buf, ",%.6f,", b->bias);
      out += buf;
      out += format_se(b->se);
    }
    out += "\n";
  }
  return out;
}

inline nlohmann::json to_json(const MethodRow& r) {
  auto cell = [](const BiasSe& b) {
    return nlohmann::json{{"bias", b.bias},
                          {"se", b.se ? nlohmann::json(*b.se) : nlohmann::json("NA")},
                          {"rmse", b.rmse}};
  };
  return {{"method", r.method},       {"n", r.n_ok},
          {"long_axis", cell(r.long_axis)}, {"short_axis", cell(r.short_axis)},
          {"center_x", cell(r.center_x)},   {"center_y", cell(r.center_y)}};
}

// ---------------------------------------------------------------------------
// Simulation 1.
// ---------------------------------------------------------------------------

struct Sim1Report {
  std::vector<MethodRow> rows;  // pseudo-inverse, orthogonal, Bayes
  std::vector<int> failed;
  /// Per-dataset Bayes axis estimates (long, short) for diagnostics.
  std::vector<std::array<double, 2>> bayes_axes;
};

/// Classical baselines on datasets with known truth.
inline std::vector<MethodRow> run_baselines(const std::vector<NoisyDataset>& data, int jobs,
                                            std::vector<int>* failed = nullptr) {
  std::vector<ConicFD> truths;
  for (const NoisyDataset& d : data) {
    if (!d.truth) throw std::invalid_argument("baseline needs datasets with a truth block");
    truths.push_back(d.truth->conic);
  }
  const int n = static_cast<int>(data.size());
  std::vector<std::optional<ConicFD>> pi(n), od(n);
  const auto errs = parallel_for(n, jobs, [&](int i) {
    try {
      pi[i] = baseline_pseudo_inverse(data[i].points);
    } catch (const std::exception&) {
    }
    od[i] = baseline_orthogonal(data[i].points);
  });
  if (failed)
    for (int i = 0; i < n; ++i)
      if (errs[i]) failed->push_back(i);
  return {summarize_method("pseudo_inverse", pi, truths), summarize_method("orthogonal", od, truths)};
}

inline Sim1Report reproduce_sim1(const std::vector<NoisyDataset>& data, const FitOptions& base,
                                 int jobs) {
  Sim1Report rep;
  rep.rows = run_baselines(data, jobs, &rep.failed);
  const int n = static_cast<int>(data.size());
  std::vector<std::optional<ConicFD>> bayes(n);
  std::vector<ConicFD> truths;
  for (const NoisyDataset& d : data) truths.push_back(d.truth->conic);
  const auto errs = parallel_for(n, jobs, [&](int i) {
    FitOptions opt = base;
    opt.chain.fixed_type = ConicType::NonCircularEllipse;
    opt.chain.seed = stream_seed(base.chain.seed, static_cast<std::uint64_t>(i));
    bayes[i] = fit_dataset(data[i], opt).summary.theta_mean;
  });
  for (int i = 0; i < n; ++i)
    if (errs[i] && std::find(rep.failed.begin(), rep.failed.end(), i) == rep.failed.end())
      rep.failed.push_back(i);
  std::sort(rep.failed.begin(), rep.failed.end());
  rep.rows.push_back(summarize_method("bayes", bayes, truths));
  for (const auto& b : bayes) {
    if (!b) continue;
    const EllipseAxes ax = ellipse_axes(*b);
    rep.bayes_axes.push_back({ax.long_axis, ax.short_axis});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Simulation 2.
// ---------------------------------------------------------------------------

/// Classes of the 3x3 table: circles count as ellipses.
inline int sim2_class(ConicType t) {
  switch (t) {
    case ConicType::Circle:
    case ConicType::NonCircularEllipse: return 0;
    case ConicType::Parabola: return 1;
    case ConicType::Hyperbola: return 2;
  }
  return 0;
}

inline constexpr std::array<const char*, 3> kSim2Classes = {"ellipse", "parabola", "hyperbola"};

struct Sim2Entry {
  int index{};
  ConicType truth_type{};
  double truth_e{};
  std::array<double, 3> probs{};  // posterior class probabilities
  int detected{};                 // class index
  double e_mean{};                // unconditional posterior mean
};

struct Sim2Report {
  std::vector<Sim2Entry> entries;
  std::array<std::array<int, 3>, 3> confusion{};             // [true][detected]
  std::array<std::array<double, 3>, 3> mean_prob{};          // [true][class]
  std::array<std::array<double, 3>, 3> sd_prob{};            // [true][class]
  double accuracy{};
  double rmse_e{};
  std::vector<int> failed;
};

inline Sim2Report summarize_sim2(std::vector<Sim2Entry> entries, std::vector<int> failed) {
  Sim2Report rep;
  rep.entries = std::move(entries);
  rep.failed = std::move(failed);
  std::array<int, 3> count{};
  double sq = 0.0;
  int correct = 0;
  for (const Sim2Entry& e : rep.entries) {
    const int t = sim2_class(e.truth_type);
    ++rep.confusion[t][e.detected];
    ++count[t];
    for (int c = 0; c < 3; ++c) rep.mean_prob[t][c] += e.probs[c];
    correct += e.detected == t;
    sq += (e.e_mean - e.truth_e) * (e.e_mean - e.truth_e);
  }
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < 3; ++c)
      if (count[t]) rep.mean_prob[t][c] /= count[t];
  for (const Sim2Entry& e : rep.entries) {
    const int t = sim2_class(e.truth_type);
    for (int c = 0; c < 3; ++c)
      rep.sd_prob[t][c] += (e.probs[c] - rep.mean_prob[t][c]) * (e.probs[c] - rep.mean_prob[t][c]);
  }
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < 3; ++c)
      rep.sd_prob[t][c] = count[t] > 1 ? std::sqrt(rep.sd_prob[t][c] / (count[t] - 1)) : 0.0;
  if (!rep.entries.empty()) {
    rep.accuracy = static_cast<double>(correct) / rep.entries.size();
    rep.rmse_e = std::sqrt(sq / rep.entries.size());
  }
  return rep;
}

inline Sim2Entry sim2_entry(int index, const NoisyDataset& d, const FitResult& fit) {
  Sim2Entry e;
  e.index = index;
  e.truth_type = type_of(d.truth->conic.e);
  e.truth_e = d.truth->conic.e;
  const auto& p = fit.summary.type_probs;
  e.probs = {p[0].estimate + p[1].estimate, p[2].estimate, p[3].estimate};
  // Circle + ellipse may jointly outweigh the modal single category.
  e.detected = static_cast<int>(std::max_element(e.probs.begin(), e.probs.end()) - e.probs.begin());
  e.e_mean = fit.summary.e_mean_unconditional;
  return e;
}

inline Sim2Report reproduce_sim2(const std::vector<NoisyDataset>& data, const FitOptions& base,
                                 int jobs) {
  const int n = static_cast<int>(data.size());
  std::vector<std::optional<Sim2Entry>> slots(n);
  const auto errs = parallel_for(n, jobs, [&](int i) {
    if (!data[i].truth) throw std::invalid_argument("dataset has no truth block");
    FitOptions opt = base;
    opt.chain.seed = stream_seed(base.chain.seed, static_cast<std::uint64_t>(i));
    const FitResult fit = fit_dataset(data[i], opt);
    slots[i] = sim2_entry(i, data[i], fit);
  });
  std::vector<Sim2Entry> entries;
  std::vector<int> failed;
  for (int i = 0; i < n; ++i) {
    if (slots[i]) entries.push_back(*slots[i]);
    if (errs[i]) failed.push_back(i);
  }
  return summarize_sim2(std::move(entries), std::move(failed));
}

inline nlohmann::json to_json(const Sim2Report& r) {
  nlohmann::json confusion = nlohmann::json::object(), probs = nlohmann::json::object();
  for (int t = 0; t < 3; ++t) {
    nlohmann::json row = nlohmann::json::object(), prow = nlohmann::json::object();
    for (int c = 0; c < 3; ++c) {
      row[kSim2Classes[c]] = r.confusion[t][c];
      prow[kSim2Classes[c]] = {{"mean", r.mean_prob[t][c]}, {"sd", r.sd_prob[t][c]}};
    }
    confusion[kSim2Classes[t]] = row;
    probs[kSim2Classes[t]] = prow;
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const Sim2Entry& e : r.entries)
    entries.push_back({{"index", e.index},
                       {"truth_type", to_string(e.truth_type)},
                       {"truth_e", e.truth_e},
                       {"probs", {{"ellipse", e.probs[0]}, {"parabola", e.probs[1]}, {"hyperbola", e.probs[2]}}},
                       {"detected", kSim2Classes[e.detected]},
                       {"e_mean", e.e_mean}});
  return {{"classification_matrix", confusion},
          {"mean_posterior_probs", probs},
          {"accuracy", r.accuracy},
          {"rmse_e", r.rmse_e},
          {"failed", r.failed},
          {"datasets", entries}};
}

/// Rows true type, columns mean (sd) posterior probability.
inline std::string type_probs_csv(const Sim2Report& r) {
  std::string out = "true_type,n,p_ellipse,sd_ellipse,p_parabola,sd_parabola,p_hyperbola,sd_hyperbola,"
                    "detected_ellipse,detected_parabola,detected_hyperbola\n";
  char buf[128];
  for (int t = 0; t < 3; ++t) {
    const int n = r.confusion[t][0] + r.confusion[t][1] + r.confusion[t][2];
    out += std::string(kSim2Classes[t]) + "," + std::to_string(n);
    for (int c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.4f", r.mean_prob[t][c], r.sd_prob[t][c]);
      out += buf;
    }
    for (int c = 0; c < 3; ++c) out += "," + std::to_string(r.confusion[t][c]);
    out += "\n";
  }
  return out;
}

}  // namespace conic

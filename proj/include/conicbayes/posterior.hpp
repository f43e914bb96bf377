#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dataset.hpp"
#include "geometry.hpp"
#include "mcmc.hpp"
#include "random.hpp"

namespace conic {

class EmptyTraceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::array<ConicType, 4> kAllTypes = {
    ConicType::Circle, ConicType::NonCircularEllipse, ConicType::Parabola, ConicType::Hyperbola};

inline std::size_t type_index(ConicType t) { return static_cast<std::size_t>(t); }

struct Estimate {
  double estimate{};
  double mc_sd{};
};

using TypeProbs = std::array<Estimate, 4>;  // indexed by type_index

struct Interval {
  double lo{};
  double hi{};
  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
};

/// Batch-means Monte Carlo standard error of the mean of `x`, using
/// ceil(sqrt(N)) batches of equal size (the tail remainder is dropped).
inline double batch_means_se(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return 0.0;
  const auto batches = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t size = n / batches;
  if (size < 1) return 0.0;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < size; ++i) means[b] += x[b * size + i];
    means[b] /= static_cast<double>(size);
  }
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - mu) * (m - mu);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

/// Empirical type frequencies (with batch-means SEs) and the modal type.
/// Ties go to the earlier type in circle, ellipse, parabola, hyperbola order.
inline std::pair<ConicType, TypeProbs> detect_type(std::span<const TraceRecord> trace) {
  if (trace.empty()) throw EmptyTraceError("type detection needs a non-empty trace");
  TypeProbs probs{};
  std::array<std::size_t, 4> counts{};
  for (const TraceRecord& r : trace) ++counts[type_index(r.type)];
  std::vector<double> ind(trace.size());
  for (ConicType t : kAllTypes) {
    for (std::size_t i = 0; i < trace.size(); ++i) ind[i] = trace[i].type == t ? 1.0 : 0.0;
    probs[type_index(t)] = {static_cast<double>(counts[type_index(t)]) / trace.size(),
                            counts[type_index(t)] == 0 || counts[type_index(t)] == trace.size()
                                ? 0.0
                                : batch_means_se(ind)};
  }
  ConicType best = ConicType::Circle;
  for (ConicType t : kAllTypes)
    if (counts[type_index(t)] > counts[type_index(best)]) best = t;
  return {best, probs};
}

/// Posterior odds over prior odds. +infinity when p = 1, 0 when p = 0.
inline double bayes_factor(double p, double prior_p) {
  if (!(prior_p > 0.0 && prior_p < 1.0)) throw std::invalid_argument("prior probability must be in (0,1)");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("posterior probability must be in [0,1]");
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return (p / (1.0 - p)) / (prior_p / (1.0 - prior_p));
}

/// Prior probability of each category under the eccentricity prior.
inline std::array<double, 4> prior_type_probs(const PriorSpec& prior) {
  const EccentricityWeights w = prior.eccentricity_weights();
  const double F1 = prior.f0_cdf(1.0);
  return {w.circle, w.continuous * F1, w.parabola, w.continuous * (1.0 - F1)};
}

inline double circular_mean(std::span<const double> angles) {
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  if (s == 0.0 && c == 0.0) return angles.empty() ? 0.0 : wrap_angle(angles.front());
  return std::atan2(s, c);
}

inline Eigen::Matrix<double, 5, 1> theta_vector(const ConicFD& c) {
  Eigen::Matrix<double, 5, 1> v;
  v << c.h, c.k, c.phi, c.l, c.e;
  return v;
}

inline ConicFD theta_from_vector(const Eigen::Matrix<double, 5, 1>& v) {
  return {v(0), v(1), wrap_angle(v(2)), v(3), v(4)};
}

/// Component-wise posterior mean with a circular mean for phi.
inline ConicFD point_estimate(std::span<const TraceRecord> trace) {
  if (trace.empty()) throw EmptyTraceError("point estimate needs a non-empty trace");
  ConicFD m{0.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<double> phis;
  phis.reserve(trace.size());
  for (const TraceRecord& r : trace) {
    m.h += r.theta.h;
    m.k += r.theta.k;
    m.l += r.theta.l;
    m.e += r.theta.e;
    phis.push_back(r.theta.phi);
  }
  const double n = static_cast<double>(trace.size());
  m.h /= n;
  m.k /= n;
  m.l /= n;
  m.e /= n;
  m.phi = circular_mean(phis);
  return m;
}

/// Samples as 5-vectors with phi unwrapped around `phi_center`.
inline std::vector<Eigen::Matrix<double, 5, 1>> unwrapped_samples(std::span<const TraceRecord> trace,
                                                                  double phi_center) {
  std::vector<Eigen::Matrix<double, 5, 1>> out;
  out.reserve(trace.size());
  for (const TraceRecord& r : trace) {
    auto v = theta_vector(r.theta);
    v(2) = phi_center + wrap_angle(r.theta.phi - phi_center);
    out.push_back(v);
  }
  return out;
}

/// Quantile by linear interpolation between order statistics.
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw EmptyTraceError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(x.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= x.size()) return x.back();
  const double f = pos - static_cast<double>(i);
  return x[i] + f * (x[i + 1] - x[i]);
}

/// Equal-tailed intervals for (h, k, phi, l, e) at the given per-component
/// level; phi intervals are centred on the circular mean and may extend
/// beyond (-pi, pi].
inline std::array<Interval, 5> marginal_intervals(std::span<const TraceRecord> trace, double level) {
  if (trace.empty()) throw EmptyTraceError("intervals need a non-empty trace");
  const ConicFD centre = point_estimate(trace);
  const auto xs = unwrapped_samples(trace, centre.phi);
  std::array<Interval, 5> out{};
  const double tail = 0.5 * (1.0 - level);
  std::vector<double> col(xs.size());
  for (int j = 0; j < 5; ++j) {
    for (std::size_t i = 0; i < xs.size(); ++i) col[i] = xs[i](j);
    out[j] = {quantile(col, tail), quantile(col, 1.0 - tail)};
  }
  return out;
}

enum class RegionKind { BonferroniProduct, ApproxHPD };

inline std::string to_string(RegionKind k) {
  return k == RegionKind::BonferroniProduct ? "bonferroni" : "hpd";
}

struct CredibleRegion {
  RegionKind kind{};
  double level{};
  std::array<Interval, 5> box{};  // Bonferroni only
  std::vector<ConicFD> conic_samples;
  double retained_fraction{1.0};  // HPD only
};

inline bool valid_conic(const ConicFD& c) {
  return std::isfinite(c.h) && std::isfinite(c.k) && std::isfinite(c.phi) && c.l > 0.0 &&
         std::isfinite(c.l) && c.e >= 0.0 && std::isfinite(c.e);
}

/// Product of (1 - gamma/5) marginal intervals, gamma = 1 - level, with
/// conics drawn uniformly from the box for plotting.
inline CredibleRegion bonferroni_region(std::span<const TraceRecord> trace, double level,
                                        int n_samples, Rng& rng) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0,1)");
  const double gamma = 1.0 - level;
  CredibleRegion r;
  r.kind = RegionKind::BonferroniProduct;
  r.level = level;
  r.box = marginal_intervals(trace, 1.0 - gamma / 5.0);
  for (int i = 0; i < n_samples; ++i) {
    Eigen::Matrix<double, 5, 1> v;
    for (int j = 0; j < 5; ++j) v(j) = uniform(rng, r.box[j].lo, r.box[j].hi);
    const ConicFD c = theta_from_vector(v);
    if (valid_conic(c)) r.conic_samples.push_back(c);
  }
  return r;
}

/// Gaussian approximation to the posterior of theta; keeps the draws whose
/// density exceeds the (1 - level) quantile of the sampled densities.
inline CredibleRegion approx_hpd_region(std::span<const TraceRecord> trace, double level,
                                        int n_draws, Rng& rng) {
  if (trace.size() <= 50) throw std::invalid_argument("HPD region needs more than 50 samples");
  if (!(level > 0.0 && level <= 1.0)) throw std::invalid_argument("level must be in (0,1]");
  const ConicFD centre = point_estimate(trace);
  const auto xs = unwrapped_samples(trace, centre.phi);
  Eigen::Matrix<double, 5, 1> mean = Eigen::Matrix<double, 5, 1>::Zero();
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Eigen::Matrix<double, 5, 5> cov = Eigen::Matrix<double, 5, 5>::Zero();
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= static_cast<double>(xs.size() - 1);

  const double tr = cov.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> eig(cov);
  if (!(eig.eigenvalues()(0) > 1e-12 * std::max(tr, 1e-300))) {
    const double ridge = tr > 0.0 ? 1e-10 * tr / 5.0 : 1e-300;
    cov.diagonal().array() += ridge;
  }
  Eigen::LLT<Eigen::Matrix<double, 5, 5>> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive definite");
  const Eigen::Matrix<double, 5, 5> L = llt.matrixL();

  std::vector<Eigen::Matrix<double, 5, 1>> draws(n_draws);
  std::vector<double> d2(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    Eigen::Matrix<double, 5, 1> z;
    for (int j = 0; j < 5; ++j) z(j) = normal(rng);
    draws[i] = mean + L * z;
    d2[i] = z.squaredNorm();  // Mahalanobis distance: density is monotone in it
  }
  const double cut = level >= 1.0 ? std::numeric_limits<double>::infinity() : quantile(d2, level);
  CredibleRegion r;
  r.kind = RegionKind::ApproxHPD;
  r.level = level;
  int kept = 0;
  for (int i = 0; i < n_draws; ++i) {
    if (d2[i] > cut) continue;
    ++kept;
    const ConicFD c = theta_from_vector(draws[i]);
    if (valid_conic(c)) r.conic_samples.push_back(c);
  }
  r.retained_fraction = n_draws > 0 ? static_cast<double>(kept) / n_draws : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Summary.
// ---------------------------------------------------------------------------

struct PosteriorSummary {
  TypeProbs type_probs{};
  ConicType detected_type{};
  ConicFD theta_mean;  // conditional on the detected type
  Eigen::Matrix<double, 5, 5> theta_cov = Eigen::Matrix<double, 5, 5>::Zero();
  std::array<Interval, 5> marginal_cis{};
  double ci_level{0.95};
  std::array<double, 4> bayes_factors{};
  double closed_bayes_factor{};  // hypothesis e < 1
  double e_mean_unconditional{};
  std::size_t n_samples{};
  std::size_t n_conditional{};
};

inline std::vector<TraceRecord> filter_type(std::span<const TraceRecord> trace, ConicType t) {
  std::vector<TraceRecord> out;
  for (const TraceRecord& r : trace)
    if (r.type == t) out.push_back(r);
  return out;
}

inline PosteriorSummary summarize(std::span<const TraceRecord> trace, const PriorSpec& prior,
                                  double ci_level = 0.95) {
  PosteriorSummary s;
  auto [type, probs] = detect_type(trace);
  s.detected_type = type;
  s.type_probs = probs;
  s.n_samples = trace.size();
  s.ci_level = ci_level;
  double esum = 0.0;
  for (const TraceRecord& r : trace) esum += r.theta.e;
  s.e_mean_unconditional = esum / static_cast<double>(trace.size());

  const std::vector<TraceRecord> cond = filter_type(trace, type);
  s.n_conditional = cond.size();
  s.theta_mean = point_estimate(cond);
  const auto xs = unwrapped_samples(cond, s.theta_mean.phi);
  if (xs.size() > 1) {
    Eigen::Matrix<double, 5, 1> mean = Eigen::Matrix<double, 5, 1>::Zero();
    for (const auto& x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    for (const auto& x : xs) s.theta_cov += (x - mean) * (x - mean).transpose();
    s.theta_cov /= static_cast<double>(xs.size() - 1);
  }
  s.marginal_cis = marginal_intervals(cond, ci_level);

  const auto priors = prior_type_probs(prior);
  for (ConicType t : kAllTypes)
    s.bayes_factors[type_index(t)] = bayes_factor(probs[type_index(t)].estimate, priors[type_index(t)]);
  const double p_closed = probs[type_index(ConicType::Circle)].estimate +
                          probs[type_index(ConicType::NonCircularEllipse)].estimate;
  s.closed_bayes_factor = bayes_factor(std::min(p_closed, 1.0), priors[0] + priors[1]);
  return s;
}

// --- JSON ---------------------------------------------------------------------

/// Non-finite numbers are written as the strings "inf" / "-inf" / "nan".
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline nlohmann::json to_json(const PosteriorSummary& s) {
  nlohmann::json probs = nlohmann::json::object(), bfs = nlohmann::json::object();
  for (ConicType t : kAllTypes) {
    probs[to_string(t)] = {{"estimate", s.type_probs[type_index(t)].estimate},
                           {"mc_sd", s.type_probs[type_index(t)].mc_sd}};
    bfs[to_string(t)] = json_number(s.bayes_factors[type_index(t)]);
  }
  bfs["closed"] = json_number(s.closed_bayes_factor);
  static constexpr const char* kNames[5] = {"h", "k", "phi", "l", "e"};
  nlohmann::json cis = nlohmann::json::object();
  for (int j = 0; j < 5; ++j) cis[kNames[j]] = {s.marginal_cis[j].lo, s.marginal_cis[j].hi};
  nlohmann::json cov = nlohmann::json::array();
  for (int i = 0; i < 5; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < 5; ++j) row.push_back(s.theta_cov(i, j));
    cov.push_back(row);
  }
  return {{"type_probs", probs},
          {"detected_type", to_string(s.detected_type)},
          {"bayes_factors", bfs},
          {"theta_mean", to_json(s.theta_mean)},
          {"theta_cov", cov},
          {"marginal_CIs", cis},
          {"ci_level", s.ci_level},
          {"e_mean_unconditional", s.e_mean_unconditional},
          {"n_samples", s.n_samples},
          {"n_conditional", s.n_conditional}};
}

inline nlohmann::json to_json(const CredibleRegion& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const ConicFD& c : r.conic_samples) samples.push_back(to_json(c));
  nlohmann::json j = {{"kind", to_string(r.kind)}, {"level", r.level}, {"conic_samples", samples}};
  if (r.kind == RegionKind::BonferroniProduct) {
    nlohmann::json box = nlohmann::json::array();
    for (const Interval& iv : r.box) box.push_back({iv.lo, iv.hi});
    j["box"] = box;
  } else {
    j["retained_fraction"] = r.retained_fraction;
  }
  return j;
}

inline std::string trace_to_ndjson(std::span<const TraceRecord> trace) {
  std::string out;
  for (const TraceRecord& r : trace) {
    const nlohmann::json j = {{"iteration", r.iteration}, {"h", r.theta.h},       {"k", r.theta.k},
                              {"phi", r.theta.phi},      {"l", r.theta.l},        {"e", r.theta.e},
                              {"sigma2", r.sigma2},      {"conic_type", to_string(r.type)},
                              {"loglik", r.loglik}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline nlohmann::json to_json(const AcceptanceSummary& a) {
  return {{"phi", a.phi},
          {"angles", a.angles},
          {"eccentricity", a.eccentricity},
          {"joint", a.joint},
          {"type_jump", a.type_jump},
          {"phi_proposals", a.phi_proposals},
          {"angle_proposals", a.angle_proposals},
          {"eccentricity_proposals", a.eccentricity_proposals},
          {"joint_proposals", a.joint_proposals},
          {"type_jump_proposals", a.type_jump_proposals}};
}

}  // namespace conic

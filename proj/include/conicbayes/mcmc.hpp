#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bernstein.hpp"
#include "classical_fit.hpp"
#include "geometry.hpp"
#include "random.hpp"

namespace conic {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Priors.
// ---------------------------------------------------------------------------

/// Exponential mean giving F0(1) = 9/19 exactly, i.e. point masses 1/30 at
/// e = 0 and 1/3 at e = 1 (1.558 to four figures).
inline const double kDefaultF0Mean = 1.0 / std::log(19.0 / 10.0);

struct EccentricityWeights {
  double circle{};
  double parabola{};
  double continuous{};
};

struct PriorSpec {
  double f0_mean{kDefaultF0Mean};
  Point location_mean;
  double location_sd{1.0};
  double latus_mean{1.0};
  double latus_sd{1.0};
  double sigma2_shape{2.01};
  double sigma2_scale{1.0};
  double alpha{1.0};
  int m{4};

  double f0_cdf(double e) const { return e <= 0.0 ? 0.0 : -std::expm1(-e / f0_mean); }
  double f0_log_pdf(double e) const { return -std::log(f0_mean) - e / f0_mean; }

  /// Branch probabilities making ellipses, parabolas and hyperbolas equally
  /// likely a priori.
  EccentricityWeights eccentricity_weights() const {
    const double F1 = f0_cdf(1.0);
    return {(1.0 - 2.0 * F1) / (3.0 * (1.0 - F1)), 1.0 / 3.0, 1.0 / (3.0 * (1.0 - F1))};
  }
};

inline void validate(const PriorSpec& p) {
  if (!(p.f0_mean > 0.0) || !(p.f0_cdf(1.0) < 0.5))
    throw std::invalid_argument("F0 must be exponential with median above 1 (mean > 1/ln 2)");
  if (!(p.location_sd > 0.0) || !(p.latus_sd > 0.0))
    throw std::invalid_argument("prior standard deviations must be positive");
  if (!(p.sigma2_shape > 0.0) || !(p.sigma2_scale > 0.0))
    throw std::invalid_argument("inverse-gamma shape and scale must be positive");
  if (!(p.alpha > 0.0)) throw std::invalid_argument("Dirichlet concentration must be positive");
  if (p.m < 4) throw std::invalid_argument("Bernstein degree m must be >= 4");
}

/// Weakly informative defaults centered on the initialization.
inline PriorSpec default_prior(std::span<const Point> pts, const InitEstimate& init,
                               std::optional<int> m = std::nullopt) {
  PriorSpec p;
  for (const Point& q : pts) {
    p.location_mean.x += q.x;
    p.location_mean.y += q.y;
  }
  p.location_mean.x /= static_cast<double>(pts.size());
  p.location_mean.y /= static_cast<double>(pts.size());
  p.location_sd = 10.0 * detail::data_scale(pts);
  p.latus_mean = init.conic.l;
  p.latus_sd = 10.0 * init.conic.l;
  p.sigma2_shape = 2.01;
  p.sigma2_scale = 1.01 * init.sigma2;
  p.m = m.value_or(default_bernstein_degree(pts.size()));
  return p;
}

/// Log of the eccentricity prior with respect to counting measure at {0, 1}
/// plus Lebesgue measure elsewhere.
inline double log_prior_e(double e, const PriorSpec& prior) {
  if (!(e >= 0.0) || !std::isfinite(e)) return kNegInf;
  const EccentricityWeights w = prior.eccentricity_weights();
  if (e == 0.0) return std::log(w.circle);
  if (e == 1.0) return std::log(w.parabola);
  return std::log(w.continuous) + prior.f0_log_pdf(e);
}

/// Angle standardized to the unit interval.
inline double standardize_angle(double t, double e) {
  const double R = angle_support(e);
  return (t + R) / (2.0 * R);
}

inline double log_prior_angles(std::span<const double> angles, std::span<const double> weights,
                               double e, const BetaMixture& mixture) {
  const double R = angle_support(e);
  double total = -static_cast<double>(angles.size()) * std::log(2.0 * R);
  for (double t : angles) {
    if (!(t > -R && t < R)) return kNegInf;
    total += mixture.log_density((t + R) / (2.0 * R), weights);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Chain state.
// ---------------------------------------------------------------------------

struct ProposalScales {
  double phi{2.4};
  double angles{2.4};
  /// Joint (h, k, phi, l, e) random walk: step = joint * joint_chol * z.
  double joint{1.0};
  Eigen::Matrix<double, 5, 5> joint_chol = Eigen::Matrix<double, 5, 5>::Identity();
  /// Spread of continuous e proposed when leaving the e = 0 or e = 1 atom.
  double jump_e{0.02};
};

struct ChainState {
  ConicFD theta;
  double sigma2{1.0};
  std::vector<double> angles;
  std::vector<double> weights;
  ProposalScales scales;
  long iteration{0};
};

struct ChainConfig {
  int n_iterations{10000};
  int burn_in{2000};
  int thin{1};
  std::uint64_t seed{1};
  int adapt_window{50};
  /// Restricts the eccentricity to one type; the type-changing move is skipped.
  std::optional<ConicType> fixed_type;
};

inline void validate(const ChainConfig& c) {
  if (c.n_iterations < 1) throw std::invalid_argument("n_iterations must be positive");
  if (c.burn_in < 0 || c.burn_in >= c.n_iterations)
    throw std::invalid_argument("burn_in must be in [0, n_iterations)");
  if (c.thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (c.adapt_window < 1) throw std::invalid_argument("adapt_window must be >= 1");
}

/// Upper bound on e implied by the current angles.
inline double eccentricity_bound(std::span<const double> angles) {
  double tmax = 0.0;
  for (double t : angles) tmax = std::max(tmax, std::abs(t));
  if (tmax > kPi / 2) return -1.0 / std::cos(tmax);
  return std::numeric_limits<double>::infinity();
}

inline bool satisfies_invariants(const ChainState& s) {
  if (!(s.theta.l > 0.0) || !(s.theta.e >= 0.0) || !(s.sigma2 > 0.0)) return false;
  if (!(s.theta.phi > -kPi && s.theta.phi <= kPi)) return false;
  double total = 0.0;
  for (double w : s.weights) {
    if (!(w >= 0.0)) return false;
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) return false;
  for (double t : s.angles)
    if (!in_support(t, s.theta.e)) return false;
  return s.theta.e < eccentricity_bound(s.angles);
}

inline double log_likelihood(const ChainState& s, std::span<const Point> pts) {
  double rss = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point w = fd_to_point(s.angles[i], s.theta);
    rss += dot(pts[i] - w, pts[i] - w);
  }
  return gaussian_loglik(rss, pts.size(), s.sigma2);
}

/// Chain state started at the initialization, with uniform mixture weights.
inline ChainState initial_state(const InitEstimate& init, const PriorSpec& prior) {
  ChainState s;
  s.theta = init.conic;
  s.theta.phi = wrap_angle(s.theta.phi);
  s.sigma2 = init.sigma2;
  s.angles = init.angles;
  s.weights.assign(prior.m + 1, 1.0 / (prior.m + 1));
  // Rough posterior scales for the joint walk; adapted during burn-in.
  const double rn = std::sqrt(static_cast<double>(std::max<std::size_t>(init.angles.size(), 1)));
  const double sd = std::sqrt(init.sigma2) / rn;
  const double sd_rel = sd / std::max(init.conic.l, 1e-12);
  s.scales.joint_chol.diagonal() << sd, sd, sd_rel, sd, sd_rel;
  s.scales.jump_e = std::clamp(4.0 * sd_rel, 1e-3, 0.1);
  return s;
}

// ---------------------------------------------------------------------------
// Sampler.
// ---------------------------------------------------------------------------

struct AcceptanceSummary {
  double phi{};
  double angles{};
  double eccentricity{};
  double joint{};
  double type_jump{};
  long phi_proposals{};
  long angle_proposals{};
  long eccentricity_proposals{};
  long joint_proposals{};
  long type_jump_proposals{};
};

/// One-block-at-a-time updates of the hierarchical model. Holds references
/// to the data and prior; all randomness comes from the caller's Rng.
class ConicSampler {
 public:
  ConicSampler(std::span<const Point> pts, const PriorSpec& prior,
               std::optional<ConicType> fixed_type = std::nullopt)
      : pts_(pts), prior_(prior), mixture_(prior.m), fixed_type_(fixed_type) {
    validate(prior_);
  }

  const BetaMixture& mixture() const { return mixture_; }
  const PriorSpec& prior() const { return prior_; }

  double log_posterior(const ChainState& s) const {
    double lp = log_likelihood(s, pts_) + log_prior_e(s.theta.e, prior_) +
                log_prior_angles(s.angles, s.weights, s.theta.e, mixture_);
    lp += normal_log_pdf(s.theta.h, prior_.location_mean.x, prior_.location_sd);
    lp += normal_log_pdf(s.theta.k, prior_.location_mean.y, prior_.location_sd);
    lp += s.theta.l > 0.0 ? normal_log_pdf(s.theta.l, prior_.latus_mean, prior_.latus_sd) : kNegInf;
    lp += -(prior_.sigma2_shape + 1.0) * std::log(s.sigma2) - prior_.sigma2_scale / s.sigma2;
    return lp;
  }

  /// Exact draw of (h, k, l) | rest: u_i = h + l c_i, v_i = k + l s_i is a
  /// Gaussian linear model; l is drawn from its marginal truncated to l > 0,
  /// then (h, k) | l.
  void update_location_latus(ChainState& s, Rng& rng) const {
    Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    double sc = 0.0, ss = 0.0, sq = 0.0, sx = 0.0, sy = 0.0, sxy = 0.0;
    const double e = s.theta.e, phi = s.theta.phi;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double t = s.angles[i];
      const double denom = 1.0 + e * std::cos(t);
      const double c = std::cos(t + phi) / denom, sn = std::sin(t + phi) / denom;
      sc += c;
      ss += sn;
      sq += c * c + sn * sn;
      sx += pts_[i].x;
      sy += pts_[i].y;
      sxy += c * pts_[i].x + sn * pts_[i].y;
    }
    const double n = static_cast<double>(pts_.size());
    const double inv_s2 = 1.0 / s.sigma2;
    P << n, 0.0, sc, 0.0, n, ss, sc, ss, sq;
    P *= inv_s2;
    b << sx, sy, sxy;
    b *= inv_s2;
    const double pl = 1.0 / (prior_.location_sd * prior_.location_sd);
    const double pll = 1.0 / (prior_.latus_sd * prior_.latus_sd);
    P(0, 0) += pl;
    P(1, 1) += pl;
    P(2, 2) += pll;
    b(0) += pl * prior_.location_mean.x;
    b(1) += pl * prior_.location_mean.y;
    b(2) += pll * prior_.latus_mean;

    Eigen::LDLT<Eigen::Matrix3d> ldlt(P);
    const Eigen::Vector3d mean = ldlt.solve(b);
    const Eigen::Matrix3d V = ldlt.solve(Eigen::Matrix3d::Identity());

    const double sd_l = std::sqrt(V(2, 2));
    const double l = truncated_normal(rng, mean(2), sd_l, 0.0,
                                      std::numeric_limits<double>::infinity());
    const Eigen::Vector2d cross = V.block<2, 1>(0, 2) / V(2, 2);
    const Eigen::Vector2d cmean = mean.head<2>() + cross * (l - mean(2));
    Eigen::Matrix2d ccov = V.topLeftCorner<2, 2>() - cross * V.block<1, 2>(2, 0);
    ccov = 0.5 * (ccov + ccov.transpose());
    Eigen::LLT<Eigen::Matrix2d> llt(ccov);
    const Eigen::Vector2d z(normal(rng), normal(rng));
    const Eigen::Vector2d hk = cmean + llt.matrixL() * z;
    s.theta.h = hk(0);
    s.theta.k = hk(1);
    s.theta.l = l;
  }

  double residual_ss(const ChainState& s) const {
    double rss = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const Point w = fd_to_point(s.angles[i], s.theta);
      rss += dot(pts_[i] - w, pts_[i] - w);
    }
    return rss;
  }

  void update_sigma2(ChainState& s, Rng& rng) const {
    const double rss = residual_ss(s);
    s.sigma2 = inverse_gamma(rng, prior_.sigma2_shape + static_cast<double>(pts_.size()),
                             prior_.sigma2_scale + 0.5 * rss);
  }

  /// Random-walk Metropolis on phi with sd = scale * sigma / sqrt(sum r_i^2)
  /// (scale times the inverse Fisher information), wrapped into (-pi, pi].
  bool update_phi(ChainState& s, Rng& rng) const {
    double sum_r2 = 0.0;
    for (double t : s.angles) {
      const double r = radius(t, s.theta);
      sum_r2 += r * r;
    }
    const double sd = s.scales.phi * std::sqrt(s.sigma2 / std::max(sum_r2, 1e-300));
    return update_phi_with_step(s, std::min(sd, kPi) * normal(rng), rng);
  }

  /// MH step on phi for a given increment (exposed for tests).
  bool update_phi_with_step(ChainState& s, double step, Rng& rng) const {
    const double before = residual_ss(s);
    const double old_phi = s.theta.phi;
    s.theta.phi = wrap_angle(old_phi + step);
    const double after = residual_ss(s);
    const double log_alpha = -(after - before) / (2.0 * s.sigma2);
    if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) return true;
    s.theta.phi = old_phi;
    return false;
  }

  /// Per-angle random-walk Metropolis-Hastings. The proposal sd is
  /// scale * sigma / |dw/dt| evaluated at the current angle, so the
  /// Hastings ratio carries the asymmetric proposal densities.
  int update_angles(ChainState& s, Rng& rng) const {
    const double R = angle_support(s.theta.e);
    const double sigma = std::sqrt(s.sigma2);
    const double max_sd = 2.0 * R;
    auto proposal_sd = [&](double t) {
      const double speed = norm(fd_tangent(t, s.theta));
      double sd = s.scales.angles * sigma / std::max(speed, 1e-300);
      return std::clamp(sd, 1e-12, max_sd);
    };
    auto log_target = [&](std::size_t i, double t) {
      const Point w = fd_to_point(t, s.theta);
      const double d2 = dot(pts_[i] - w, pts_[i] - w);
      return -d2 / (2.0 * s.sigma2) + mixture_.log_density((t + R) / (2.0 * R), s.weights);
    };
    int accepted = 0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double t = s.angles[i];
      const double sd_fwd = proposal_sd(t);
      const double tp = t + sd_fwd * normal(rng);
      if (!(tp > -R && tp < R)) continue;
      const double sd_rev = proposal_sd(tp);
      const double log_alpha = log_target(i, tp) - log_target(i, t) +
                               normal_log_pdf(t, tp, sd_rev) - normal_log_pdf(tp, t, sd_fwd);
      if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) {
        s.angles[i] = tp;
        ++accepted;
      }
    }
    return accepted;
  }

  // --- eccentricity -----------------------------------------------------

  /// Log of the full conditional of e (up to a constant), with the branch
  /// point masses as probabilities and the continuous part as a density.
  class EccentricityTarget {
   public:
    EccentricityTarget(const ConicSampler& sampler, const ChainState& s)
        : sampler_(sampler), s_(s), n_(sampler.pts_.size()) {
      cos_t_.resize(n_);
      proj_.resize(n_);
      off2_ = 0.0;
      const double phi = s.theta.phi;
      for (std::size_t i = 0; i < n_; ++i) {
        const double t = s.angles[i];
        cos_t_[i] = std::cos(t);
        const Point off = sampler.pts_[i] - Point{s.theta.h, s.theta.k};
        proj_[i] = off.x * std::cos(t + phi) + off.y * std::sin(t + phi);
        off2_ += dot(off, off);
      }
      e_max_ = eccentricity_bound(s.angles);
      angle_le1_ = log_prior_angles(s.angles, s.weights, 0.5, sampler.mixture_);
      log_norm_ = -static_cast<double>(n_) * std::log(2.0 * kPi * s.sigma2);
    }

    double e_max() const { return e_max_; }

    double loglik(double e) const {
      double rss = off2_;
      for (std::size_t i = 0; i < n_; ++i) {
        const double denom = 1.0 + e * cos_t_[i];
        if (!(denom > 0.0)) return kNegInf;
        const double r = s_.theta.l / denom;
        rss += r * r - 2.0 * r * proj_[i];
      }
      return log_norm_ - std::max(rss, 0.0) / (2.0 * s_.sigma2);
    }

    double log_angles(double e) const {
      if (e <= 1.0) return angle_le1_;
      if (!(e < e_max_)) return kNegInf;
      return log_prior_angles(s_.angles, s_.weights, e, sampler_.mixture_);
    }

    /// log prior + log likelihood + log angle prior.
    double operator()(double e) const {
      if (!(e >= 0.0) || !(e < e_max_)) return kNegInf;
      const double lp = log_prior_e(e, sampler_.prior_);
      if (!std::isfinite(lp)) return kNegInf;
      const double la = log_angles(e);
      if (!std::isfinite(la)) return kNegInf;
      return lp + loglik(e) + la;
    }

   private:
    const ConicSampler& sampler_;
    const ChainState& s_;
    std::size_t n_;
    std::vector<double> cos_t_;
    std::vector<double> proj_;
    double off2_{};
    double e_max_{};
    double angle_le1_{};
    double log_norm_{};
  };

  /// Gaussian (Laplace) approximation of the continuous branch on (lo, hi).
  struct LaplaceFit {
    double mode{};
    double precision{};
    double log_peak{};
    double lo{};
    double hi{};
    double log_mass() const {
      const double sd = 1.0 / std::sqrt(precision);
      return log_peak + 0.5 * std::log(2.0 * kPi) + std::log(sd) +
             log_normal_interval((lo - mode) / sd, (hi - mode) / sd);
    }
  };

  static LaplaceFit laplace_fit(const EccentricityTarget& g, double lo, double hi) {
    constexpr int kGrid = 96;
    const double hi_search = std::isfinite(hi) ? hi : std::max(lo + 1.0, 10.0);
    const double width = hi_search - lo;
    double best_e = lo + 0.5 * width, best_g = kNegInf;
    int best_k = -1;
    for (int k = 0; k < kGrid; ++k) {
      const double e = lo + width * (k + 0.5) / kGrid;
      const double v = g(e);
      if (v > best_g) {
        best_g = v;
        best_e = e;
        best_k = k;
      }
    }
    LaplaceFit fit;
    fit.lo = lo;
    fit.hi = hi;
    if (best_k < 0) {
      fit.mode = best_e;
      fit.precision = 1.0 / (width * width);
      fit.log_peak = kNegInf;
      return fit;
    }
    // Golden section inside the neighbouring grid cells.
    double a = std::max(lo, lo + width * (best_k - 0.5) / kGrid);
    double b = std::min(hi_search, lo + width * (best_k + 1.5) / kGrid);
    constexpr double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, best_e); ++it) {
      if (f1 >= f2) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - gr * (b - a); f1 = g(x1);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + gr * (b - a); f2 = g(x2);
      }
    }
    double mode = 0.5 * (a + b);
    double peak = g(mode);
    if (!(peak >= best_g)) {
      mode = best_e;
      peak = best_g;
    }
    // Bounded Newton polish on the numerical derivative.
    auto deriv = [&](double e, double h) { return (g(e + h) - g(e - h)) / (2.0 * h); };
    auto curv = [&](double e, double h) { return (g(e + h) - 2.0 * g(e) + g(e - h)) / (h * h); };
    const double h0 = 1e-5 * std::max(1.0, mode);
    for (int it = 0; it < 8; ++it) {
      const double h = std::min({h0, 0.5 * (mode - lo), 0.5 * (hi_search - mode)});
      if (!(h > 0.0)) break;
      const double d1 = deriv(mode, h), d2 = curv(mode, h);
      if (!(d2 < 0.0) || !std::isfinite(d1)) break;
      const double cand = std::clamp(mode - d1 / d2, lo + 0.5 * h, hi_search - 0.5 * h);
      const double gc = g(cand);
      if (!(gc >= peak)) break;
      const bool done = std::abs(cand - mode) < 1e-13 * std::max(1.0, mode);
      mode = cand;
      peak = gc;
      if (done) break;
    }
    double precision = 0.0;
    {
      const double h = std::min({std::max(1e-7, 1e-4 * std::max(mode - lo, 1e-3)), 1e-4,
                                 0.5 * (mode - lo), 0.5 * (hi_search - mode)});
      if (h > 0.0) precision = -curv(mode, h);
    }
    if (!std::isfinite(precision) || precision <= 1e-8) {
      // Flat or boundary mode: width from where the log density drops by 1/2.
      double half = width;
      for (int k = 1; k <= kGrid; ++k) {
        const double d = width * k / (4.0 * kGrid);
        const double up = mode + d < hi_search ? g(mode + d) : kNegInf;
        const double dn = mode - d > lo ? g(mode - d) : kNegInf;
        if (up < peak - 0.5 || dn < peak - 0.5) {
          half = d;
          break;
        }
      }
      precision = std::max(1.0 / (half * half), 1e-8);
    }
    fit.mode = mode;
    fit.precision = precision;
    fit.log_peak = peak;
    return fit;
  }

  /// Independence Metropolis-Hastings move for e over the three prior
  /// branches {0}, {1} and the continuous part, proposing from the Laplace
  /// approximation of the conditional. Returns true on acceptance.
  bool update_eccentricity(ChainState& s, Rng& rng) const {
    if (fixed_type_ == ConicType::Circle || fixed_type_ == ConicType::Parabola) return false;
    const EccentricityTarget g(*this, s);
    const double e_max = g.e_max();
    double lo = 0.0, hi = e_max;
    if (fixed_type_ == ConicType::NonCircularEllipse) hi = std::min(1.0, e_max);
    if (fixed_type_ == ConicType::Hyperbola) lo = 1.0;
    if (!(hi > lo)) return false;

    const LaplaceFit fit = laplace_fit(g, lo, hi);
    const double sd = 1.0 / std::sqrt(fit.precision);

    // Log branch masses (circle, parabola, continuous) of the proposal.
    double m0 = kNegInf, m1 = kNegInf;
    if (!fixed_type_) {
      m0 = g(0.0);
      m1 = g(1.0);
    }
    const double mc = fit.log_mass();
    const double mmax = std::max({m0, m1, mc});
    if (!std::isfinite(mmax)) return false;
    const double q0 = std::exp(m0 - mmax), q1 = std::exp(m1 - mmax), qc = std::exp(mc - mmax);
    const double qt = q0 + q1 + qc;
    const double lq0 = std::log(q0 / qt), lq1 = std::log(q1 / qt), lqc = std::log(qc / qt);

    auto log_q = [&](double e) {
      if (e == 0.0 && !fixed_type_) return lq0;
      if (e == 1.0 && !fixed_type_) return lq1;
      return lqc + truncated_normal_log_pdf(e, fit.mode, sd, lo, hi);
    };

    double proposal;
    const double u = uniform01(rng) * qt;
    if (u < q0) {
      proposal = 0.0;
    } else if (u < q0 + q1) {
      proposal = 1.0;
    } else {
      proposal = truncated_normal(rng, fit.mode, sd, lo, hi);
      if (proposal == 0.0 || proposal == 1.0) return false;
    }
    const double current = s.theta.e;
    const double log_alpha = g(proposal) - g(current) + log_q(current) - log_q(proposal);
    if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) {
      s.theta.e = proposal;
      return true;
    }
    return false;
  }

  // --- joint conic + angle moves -----------------------------------------
  //
  // Given the conic the angles are pinned to within sigma / |dw/dt|, and
  // given the angles the conic is pinned just as tightly, so one-block
  // updates alone crawl. These moves propose a new conic and redraw every
  // angle from a grid envelope of its conditional on the proposed conic;
  // the reverse angle densities enter the Hastings ratio.

  /// Log density of (theta, angles) given sigma^2 and the mixture weights.
  double log_joint(const ConicFD& theta, std::span<const double> angles, const ChainState& s) const {
    if (!(theta.l > 0.0)) return kNegInf;
    const double le = log_prior_e(theta.e, prior_);
    if (!std::isfinite(le)) return kNegInf;
    const double la = log_prior_angles(angles, s.weights, theta.e, mixture_);
    if (!std::isfinite(la)) return kNegInf;
    double rss = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const Point w = fd_to_point(angles[i], theta);
      rss += dot(pts_[i] - w, pts_[i] - w);
    }
    return le + la + gaussian_loglik(rss, pts_.size(), s.sigma2) +
           normal_log_pdf(theta.h, prior_.location_mean.x, prior_.location_sd) +
           normal_log_pdf(theta.k, prior_.location_mean.y, prior_.location_sd) +
           normal_log_pdf(theta.l, prior_.latus_mean, prior_.latus_sd);
  }

  struct AngleProposal {
    double center{};
    double sd{};
  };

  /// Gaussian approximation to the angle of `datum` on `theta`: Newton on
  /// the squared-distance slope from `start`, sd from the curvature there.
  static AngleProposal angle_proposal(Point datum, const ConicFD& theta, double start,
                                      double sigma2) {
    const double R = angle_support(theta.e);
    const double edge = R * (1.0 - 1e-9);
    double t = std::clamp(start, -edge, edge);
    double slope = 0.0, curv = 0.0, speed2 = 0.0;
    auto eval = [&](double tt) {
      const double ct = std::cos(tt), st = std::sin(tt);
      const double D = 1.0 + theta.e * ct;
      const double r = theta.l / D;
      const double r1 = theta.l * theta.e * st / (D * D);
      const double r2 = theta.l * theta.e * ct / (D * D) +
                        2.0 * theta.l * theta.e * theta.e * st * st / (D * D * D);
      const double ca = std::cos(tt + theta.phi), sa = std::sin(tt + theta.phi);
      const Point w{theta.h + r * ca, theta.k + r * sa};
      const Point w1{r1 * ca - r * sa, r1 * sa + r * ca};
      const Point w2{(r2 - r) * ca - 2.0 * r1 * sa, (r2 - r) * sa + 2.0 * r1 * ca};
      const Point res = w - datum;
      slope = dot(res, w1);
      speed2 = dot(w1, w1);
      curv = speed2 + dot(res, w2);
    };
    for (int it = 0; it < 12; ++it) {
      eval(t);
      double step = curv > 0.0 ? -slope / curv : (slope > 0.0 ? -0.05 : 0.05);
      step = std::clamp(step, -0.5, 0.5);
      double tn = t + step;
      if (!(std::abs(tn) < edge)) tn = 0.5 * (t + std::copysign(edge, tn));
      const bool done = std::abs(tn - t) < 1e-12;
      t = tn;
      if (done) break;
    }
    eval(t);
    const double prec = std::max(curv, 0.25 * speed2) / sigma2;
    AngleProposal ap;
    ap.center = t;
    ap.sd = std::min(1.0 / std::sqrt(std::max(prec, 1e-300)), R);
    return ap;
  }

  /// Piecewise log-linear envelope of one angle's full conditional on a
  /// grid stepped out from the Gaussian approximation until the log density
  /// has fallen by kAngleGridDrop. Exact to sample and to evaluate, and it
  /// follows the strong skew that conditionals near a vertex show.
  struct AngleGrid {
    std::vector<double> x, g;  // nodes and log density at the nodes
    std::vector<double> cum;   // cumulative segment masses
  };

  static constexpr double kAngleGridDrop = 12.0;
  static constexpr int kAngleGridMaxSide = 64;

  AngleGrid angle_grid(std::size_t i, const ConicFD& theta, double start, const ChainState& s) const {
    const double R = angle_support(theta.e);
    const double edge = R * (1.0 - 1e-9);
    const AngleProposal ap = angle_proposal(pts_[i], theta, start, s.sigma2);
    const double step = std::clamp(0.5 * ap.sd, 1e-9, R / 8.0);
    auto logf = [&](double t) {
      const Point w = fd_to_point(t, theta);
      return -dot(pts_[i] - w, pts_[i] - w) / (2.0 * s.sigma2) +
             mixture_.log_density((t + R) / (2.0 * R), s.weights);
    };
    const double c = std::clamp(ap.center, -edge, edge);
    const double gc = logf(c);
    std::vector<double> left, gl, right, gr;
    double peak = gc;
    for (int dir : {-1, 1}) {
      auto& xs = dir < 0 ? left : right;
      auto& gs = dir < 0 ? gl : gr;
      double t = c;
      for (int k = 0; k < kAngleGridMaxSide; ++k) {
        const double next = t + dir * step;
        const bool last = std::abs(next) >= edge;
        t = last ? dir * edge : next;
        const double v = logf(t);
        xs.push_back(t);
        gs.push_back(v);
        peak = std::max(peak, v);
        if (last || v < peak - kAngleGridDrop) break;
      }
    }
    AngleGrid grid;
    for (std::size_t k = left.size(); k-- > 0;) {
      grid.x.push_back(left[k]);
      grid.g.push_back(gl[k]);
    }
    grid.x.push_back(c);
    grid.g.push_back(gc);
    grid.x.insert(grid.x.end(), right.begin(), right.end());
    grid.g.insert(grid.g.end(), gr.begin(), gr.end());
    for (double& v : grid.g) v -= peak;
    grid.cum.resize(grid.x.size() - 1);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < grid.x.size(); ++k) {
      total += segment_mass(grid, k);
      grid.cum[k] = total;
    }
    return grid;
  }

  static double segment_mass(const AngleGrid& grid, std::size_t k) {
    const double w = grid.x[k + 1] - grid.x[k];
    const double a = grid.g[k], b = grid.g[k + 1];
    if (std::abs(a - b) < 1e-10) return w * std::exp(0.5 * (a + b));
    return w * (std::exp(a) - std::exp(b)) / (a - b);
  }

  static double sample_grid(const AngleGrid& grid, Rng& rng) {
    const double u = uniform01(rng) * grid.cum.back();
    const std::size_t k = static_cast<std::size_t>(
        std::lower_bound(grid.cum.begin(), grid.cum.end(), u) - grid.cum.begin());
    const std::size_t j = std::min(k, grid.cum.size() - 1);
    const double w = grid.x[j + 1] - grid.x[j];
    const double slope = (grid.g[j + 1] - grid.g[j]) / w;
    const double v = uniform01(rng);
    double t;
    if (std::abs(slope * w) < 1e-10)
      t = grid.x[j] + v * w;
    else
      t = grid.x[j] + std::log1p(v * std::expm1(slope * w)) / slope;
    return std::clamp(t, grid.x[j], grid.x[j + 1]);
  }

  static double grid_log_pdf(const AngleGrid& grid, double t) {
    if (!(t >= grid.x.front() && t <= grid.x.back())) return kNegInf;
    const std::size_t k = static_cast<std::size_t>(
        std::upper_bound(grid.x.begin(), grid.x.end(), t) - grid.x.begin());
    const std::size_t j = std::min(k == 0 ? 0 : k - 1, grid.x.size() - 2);
    const double w = grid.x[j + 1] - grid.x[j];
    const double slope = (grid.g[j + 1] - grid.g[j]) / w;
    return grid.g[j] + slope * (t - grid.x[j]) - std::log(grid.cum.back());
  }

  /// MH step for (theta, angles) -> (proposal, redrawn angles). `log_k_ratio`
  /// is log K(proposal -> theta) - log K(theta -> proposal) for the conic part.
  bool joint_move(ChainState& s, const ConicFD& proposal, double log_k_ratio, Rng& rng) const {
    if (!(proposal.l > 0.0) || !(proposal.e >= 0.0) || !std::isfinite(proposal.e)) return false;
    if (fixed_type_ && type_of(proposal.e) != *fixed_type_) return false;
    const double Rn = angle_support(proposal.e);
    std::vector<double> next(pts_.size());
    double log_q = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const AngleGrid fwd = angle_grid(i, proposal, s.angles[i], s);
      next[i] = sample_grid(fwd, rng);
      if (!(next[i] > -Rn && next[i] < Rn)) return false;
      const AngleGrid rev = angle_grid(i, s.theta, next[i], s);
      log_q += grid_log_pdf(rev, s.angles[i]) - grid_log_pdf(fwd, next[i]);
      if (!std::isfinite(log_q)) return false;
    }
    if (!(proposal.e < eccentricity_bound(next))) return false;
    const double log_alpha =
        log_joint(proposal, next, s) - log_joint(s.theta, s.angles, s) + log_q + log_k_ratio;
    if (std::isnan(log_alpha)) return false;
    if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) {
      s.theta = proposal;
      s.angles = std::move(next);
      return true;
    }
    return false;
  }

  /// Adaptive random walk on (h, k, phi, l, e); e moves only when it is off
  /// the atoms at 0 and 1.
  bool update_joint(ChainState& s, Rng& rng) const {
    Eigen::Matrix<double, 5, 1> z;
    for (int j = 0; j < 5; ++j) z(j) = normal(rng);
    const Eigen::Matrix<double, 5, 1> step = s.scales.joint * (s.scales.joint_chol * z);
    ConicFD p = s.theta;
    p.h += step(0);
    p.k += step(1);
    p.phi = wrap_angle(p.phi + step(2));
    p.l += step(3);
    if (p.e != 0.0 && p.e != 1.0) {
      p.e += step(4);
      if (!(p.e > 0.0) || p.e == 1.0) return false;
    }
    return joint_move(s, p, 0.0, rng);
  }

  /// Type-changing move among e = 0, e = 1 and the continuous part, with
  /// the other conic parameters held. From an atom: half the time a
  /// continuous e ~ N(atom, jump_e^2), otherwise the other atom; from a
  /// continuous e: either atom with probability 1/2.
  bool update_type_jump(ChainState& s, Rng& rng) const {
    if (fixed_type_) return false;
    const double sd = s.scales.jump_e;
    auto log_k = [&](double from, double to) {
      const bool from_atom = from == 0.0 || from == 1.0;
      const bool to_atom = to == 0.0 || to == 1.0;
      if (from_atom && to_atom) return from == to ? kNegInf : std::log(0.5);
      if (from_atom) return std::log(0.5) + normal_log_pdf(to, from, sd);
      return to_atom ? std::log(0.5) : kNegInf;
    };
    const double e = s.theta.e;
    double next;
    if (e == 0.0 || e == 1.0) {
      if (uniform01(rng) < 0.5) {
        next = e + sd * normal(rng);
        if (!(next > 0.0) || next == 1.0) return false;
      } else {
        next = e == 0.0 ? 1.0 : 0.0;
      }
    } else {
      next = uniform01(rng) < 0.5 ? 0.0 : 1.0;
    }
    ConicFD p = s.theta;
    p.e = next;
    return joint_move(s, p, log_k(next, e) - log_k(e, next), rng);
  }

  /// Gibbs update of the mixture weights through latent component labels.
  void update_weights(ChainState& s, Rng& rng) const {
    const int K = mixture_.components();
    std::vector<double> counts(K, 0.0);
    std::vector<double> logw(K), prob(K);
    for (int j = 0; j < K; ++j) logw[j] = std::log(s.weights[j]);
    for (double t : s.angles) {
      const double x = standardize_angle(t, s.theta.e);
      double best = kNegInf;
      for (int j = 0; j < K; ++j) {
        prob[j] = logw[j] + mixture_.component_log_pdf(j + 1, x);
        best = std::max(best, prob[j]);
      }
      double total = 0.0;
      for (int j = 0; j < K; ++j) {
        prob[j] = std::exp(prob[j] - best);
        total += prob[j];
      }
      double u = uniform01(rng) * total;
      int pick = K - 1;
      for (int j = 0; j < K; ++j) {
        u -= prob[j];
        if (u <= 0.0) {
          pick = j;
          break;
        }
      }
      counts[pick] += 1.0;
    }
    for (double& c : counts) c += prior_.alpha;
    s.weights = dirichlet(rng, counts);
  }

 private:
  std::span<const Point> pts_;
  PriorSpec prior_;
  BetaMixture mixture_;
  std::optional<ConicType> fixed_type_;
};

// ---------------------------------------------------------------------------
// Chain driver.
// ---------------------------------------------------------------------------

struct TraceRecord {
  long iteration{};
  ConicFD theta;
  double sigma2{};
  ConicType type{};
  double loglik{};
};

struct ChainResult {
  std::vector<TraceRecord> trace;
  ChainState final_state;
  AcceptanceSummary acceptance;
  ProposalScales adapted_scales;
};

/// Target acceptance rate for the random-walk blocks during burn-in.
inline constexpr double kTargetAcceptance = 0.30;

using StateObserver = std::function<void(const ChainState&)>;

namespace detail {

/// Robbins-Monro gain for the b-th adaptation batch.
inline double adapt_gain(int batch) { return std::min(2.0, 3.0 / std::sqrt(static_cast<double>(batch))); }

/// Refits the joint-walk Cholesky factor to the burn-in history, scaled by
/// 2.38^2 / 5. Leaves the factor alone if the history is too short or the
/// covariance is not positive definite.
inline void refit_joint_scale(ProposalScales& sc, const std::vector<Eigen::Matrix<double, 5, 1>>& hist) {
  if (hist.size() < 100) return;
  const std::size_t from = hist.size() / 2;  // forget the earliest, least-settled half
  const double n = static_cast<double>(hist.size() - from);
  Eigen::Matrix<double, 5, 1> mean = Eigen::Matrix<double, 5, 1>::Zero();
  for (std::size_t i = from; i < hist.size(); ++i) mean += hist[i];
  mean /= n;
  Eigen::Matrix<double, 5, 5> cov = Eigen::Matrix<double, 5, 5>::Zero();
  for (std::size_t i = from; i < hist.size(); ++i) cov += (hist[i] - mean) * (hist[i] - mean).transpose();
  cov /= n - 1.0;
  // e sitting on an atom has no spread: keep the previous scale for it.
  const double old_e = sc.joint_chol.row(4).norm();
  if (!(cov(4, 4) > 0.0)) {
    cov.row(4).setZero();
    cov.col(4).setZero();
    cov(4, 4) = old_e * old_e;
  } else {
    sc.jump_e = std::clamp(std::sqrt(cov(4, 4)), 1e-4, 0.25);
  }
  for (int j = 0; j < 5; ++j) cov(j, j) += 1e-12 * (1.0 + cov(j, j));
  Eigen::LLT<Eigen::Matrix<double, 5, 5>> llt(cov * (2.38 * 2.38 / 5.0));
  if (llt.info() != Eigen::Success) return;
  sc.joint_chol = llt.matrixL();
  sc.joint = 1.0;
}

}  // namespace detail

inline ChainResult run_chain(std::span<const Point> pts, const PriorSpec& prior,
                             const ChainConfig& config, ChainState state,
                             const StateObserver& observer = {}) {
  validate(config);
  const ConicSampler sampler(pts, prior, config.fixed_type);
  Rng rng = make_rng(config.seed);
  ChainResult out;
  out.trace.reserve(static_cast<std::size_t>((config.n_iterations - config.burn_in) / config.thin) + 1);

  struct Counter {
    long accepted{0}, proposed{0};
    double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
  };
  Counter phi, ang, ecc, joint, jump;        // post burn-in
  Counter b_phi, b_ang, b_joint;             // current adaptation batch
  int batch_iters = 0, batch_index = 0, refits = 0;
  std::vector<Eigen::Matrix<double, 5, 1>> history;
  const bool move_e = !(config.fixed_type == ConicType::Circle ||
                        config.fixed_type == ConicType::Parabola);
  const long n = static_cast<long>(pts.size());

  for (int it = 1; it <= config.n_iterations; ++it) {
    const bool burn = it <= config.burn_in;
    sampler.update_location_latus(state, rng);
    sampler.update_sigma2(state, rng);
    const bool phi_ok = sampler.update_phi(state, rng);
    const int ang_ok = sampler.update_angles(state, rng);
    bool ecc_ok = false;
    if (move_e) ecc_ok = sampler.update_eccentricity(state, rng);
    const bool joint_ok = sampler.update_joint(state, rng);
    const bool jump_ok = sampler.update_type_jump(state, rng);
    sampler.update_weights(state, rng);
    state.iteration = it;

    if (burn) {
      b_phi.accepted += phi_ok;
      ++b_phi.proposed;
      b_ang.accepted += ang_ok;
      b_ang.proposed += n;
      b_joint.accepted += joint_ok;
      ++b_joint.proposed;
      Eigen::Matrix<double, 5, 1> v;
      v << state.theta.h, state.theta.k, state.theta.phi, state.theta.l, state.theta.e;
      if (!history.empty()) v(2) = history.back()(2) + wrap_angle(v(2) - history.back()(2));
      history.push_back(v);
      if (++batch_iters == config.adapt_window) {
        const double g = detail::adapt_gain(++batch_index);
        state.scales.phi *= std::exp(g * (b_phi.rate() - kTargetAcceptance));
        state.scales.angles *= std::exp(g * (b_ang.rate() - kTargetAcceptance));
        state.scales.joint *= std::exp(g * (b_joint.rate() - kTargetAcceptance));
        // Re-estimate the walk's shape at doubling history lengths.
        if (history.size() >= (100u << refits) && 2 * config.adapt_window <= static_cast<int>(history.size())) {
          detail::refit_joint_scale(state.scales, history);
          ++refits;
        }
        b_phi = b_ang = b_joint = Counter{};
        batch_iters = 0;
      }
      continue;
    }
    phi.accepted += phi_ok;
    ++phi.proposed;
    ang.accepted += ang_ok;
    ang.proposed += n;
    if (move_e) {
      ecc.accepted += ecc_ok;
      ++ecc.proposed;
    }
    joint.accepted += joint_ok;
    ++joint.proposed;
    if (!config.fixed_type) {
      jump.accepted += jump_ok;
      ++jump.proposed;
    }
    if ((it - config.burn_in) % config.thin == 0) {
      TraceRecord rec;
      rec.iteration = it;
      rec.theta = state.theta;
      rec.sigma2 = state.sigma2;
      rec.type = type_of(state.theta.e);
      rec.loglik = log_likelihood(state, pts);
      out.trace.push_back(rec);
      if (observer) observer(state);
    }
  }
  out.acceptance = {phi.rate(),      ang.rate(),      ecc.rate(),     joint.rate(),
                    jump.rate(),     phi.proposed,    ang.proposed,   ecc.proposed,
                    joint.proposed,  jump.proposed};
  out.adapted_scales = state.scales;
  out.final_state = std::move(state);
  return out;
}

}  // namespace conic

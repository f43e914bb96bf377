#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "conicbayes/mcmc.hpp"
#include "conicbayes/simulate.hpp"

using namespace conic;

namespace {

struct Fixture {
  NoisyDataset data;
  InitEstimate init;
  PriorSpec prior;
};

Fixture make_fixture(ConicType type, int n, std::uint64_t seed) {
  Fixture f;
  f.data = simulate_sim2_dataset(type, n, 2.0, seed);
  f.init = initialize(f.data);
  f.prior = default_prior(f.data.points, f.init);
  return f;
}

bool same_trace(const std::vector<TraceRecord>& a, const std::vector<TraceRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.iteration != y.iteration || x.theta.h != y.theta.h || x.theta.k != y.theta.k ||
        x.theta.phi != y.theta.phi || x.theta.l != y.theta.l || x.theta.e != y.theta.e ||
        x.sigma2 != y.sigma2 || x.loglik != y.loglik)
      return false;
  }
  return true;
}

}  // namespace

TEST(Prior, BranchMassesAreEqualThirds) {
  PriorSpec p;
  EXPECT_NEAR(p.f0_cdf(1.0), 9.0 / 19.0, 1e-14);
  const EccentricityWeights w = p.eccentricity_weights();
  EXPECT_NEAR(w.circle, 1.0 / 30.0, 1e-14);
  EXPECT_NEAR(w.parabola, 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(w.continuous, 19.0 / 30.0, 1e-14);
  // Ellipse and hyperbola branches: continuous mass split at e = 1.
  EXPECT_NEAR(w.continuous * p.f0_cdf(1.0), 0.3, 1e-14);
  EXPECT_NEAR(w.circle + w.continuous * p.f0_cdf(1.0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(w.continuous * (1.0 - p.f0_cdf(1.0)), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(kDefaultF0Mean, 1.558, 5e-4);
}

TEST(Prior, LogPriorOfEccentricity) {
  PriorSpec p;
  EXPECT_NEAR(log_prior_e(0.0, p), std::log(1.0 / 30.0), 1e-12);
  EXPECT_NEAR(log_prior_e(1.0, p), std::log(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(log_prior_e(0.5, p), std::log(19.0 / 30.0) - std::log(p.f0_mean) - 0.5 / p.f0_mean, 1e-12);
  EXPECT_EQ(log_prior_e(-0.1, p), kNegInf);
  EXPECT_EQ(log_prior_e(std::numeric_limits<double>::infinity(), p), kNegInf);
}

TEST(Prior, Validation) {
  PriorSpec p;
  EXPECT_NO_THROW(validate(p));
  p.f0_mean = 1.0 / std::log(2.0) * 0.99;  // median below 1
  EXPECT_THROW(validate(p), std::invalid_argument);
  p = PriorSpec{};
  p.m = 3;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p = PriorSpec{};
  p.alpha = 0.0;
  EXPECT_THROW(validate(p), std::invalid_argument);
}

TEST(Prior, DefaultDegreeFollowsSampleSize) {
  const Fixture f = make_fixture(ConicType::NonCircularEllipse, 100, 3);
  EXPECT_EQ(f.prior.m, 22);
  EXPECT_EQ(default_prior(f.data.points, f.init, 10).m, 10);
}

TEST(ChainConfig, Validation) {
  ChainConfig c;
  EXPECT_NO_THROW(validate(c));
  c.burn_in = c.n_iterations;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = ChainConfig{};
  c.n_iterations = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = ChainConfig{};
  c.thin = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(AnglePrior, UniformWeightsGiveUniformDensity) {
  const BetaMixture mix(6);
  const std::vector<double> w(7, 1.0 / 7.0);
  const std::vector<double> angles = {-3.0, -1.0, 0.0, 2.5};
  EXPECT_NEAR(log_prior_angles(angles, w, 0.5, mix), -4.0 * std::log(2.0 * kPi), 1e-10);
  const std::vector<double> outside = {2.9};
  EXPECT_EQ(log_prior_angles(outside, w, 2.0, mix), kNegInf);  // R = arccos(-1/2) < 2.9
}

TEST(GibbsLocationLatus, MatchesDirectGaussianOracle) {
  // Oracle: the 2n x 3 weighted least-squares design with (h, k, l) priors,
  // solved independently by a dense normal-equation build.
  const Fixture f = make_fixture(ConicType::NonCircularEllipse, 30, 11);
  ChainState s = initial_state(f.init, f.prior);
  const ConicSampler sampler(f.data.points, f.prior);
  const std::size_t n = f.data.points.size();

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2 * n + 3, 3);
  Eigen::VectorXd y(2 * n + 3);
  const double w = 1.0 / std::sqrt(s.sigma2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = s.angles[i];
    const double d = 1.0 + s.theta.e * std::cos(t);
    X.row(2 * i) << w, 0.0, w * std::cos(t + s.theta.phi) / d;
    X.row(2 * i + 1) << 0.0, w, w * std::sin(t + s.theta.phi) / d;
    y(2 * i) = w * f.data.points[i].x;
    y(2 * i + 1) = w * f.data.points[i].y;
  }
  X.row(2 * n) << 1.0 / f.prior.location_sd, 0.0, 0.0;
  X.row(2 * n + 1) << 0.0, 1.0 / f.prior.location_sd, 0.0;
  X.row(2 * n + 2) << 0.0, 0.0, 1.0 / f.prior.latus_sd;
  y(2 * n) = f.prior.location_mean.x / f.prior.location_sd;
  y(2 * n + 1) = f.prior.location_mean.y / f.prior.location_sd;
  y(2 * n + 2) = f.prior.latus_mean / f.prior.latus_sd;
  const Eigen::Vector3d mean = X.colPivHouseholderQr().solve(y);
  const Eigen::Matrix3d cov = (X.transpose() * X).inverse();
  ASSERT_GT(mean(2) / std::sqrt(cov(2, 2)), 8.0);  // truncation at l > 0 is negligible

  Rng rng = make_rng(2024);
  const int draws = 40000;
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  std::vector<Eigen::Vector3d> xs;
  xs.reserve(draws);
  for (int d = 0; d < draws; ++d) {
    ChainState c = s;
    sampler.update_location_latus(c, rng);
    xs.emplace_back(c.theta.h, c.theta.k, c.theta.l);
    m += xs.back();
  }
  m /= draws;
  for (const auto& v : xs) S += (v - m) * (v - m).transpose();
  S /= draws - 1;
  for (int j = 0; j < 3; ++j) {
    const double se_mean = std::sqrt(cov(j, j) / draws);
    EXPECT_NEAR(m(j), mean(j), 3.0 * se_mean) << "component " << j;
    const double se_var = cov(j, j) * std::sqrt(2.0 / draws);
    EXPECT_NEAR(S(j, j), cov(j, j), 3.0 * se_var) << "component " << j;
  }
  // Correlation between h and l (the design couples them through cos).
  const double se_cov = std::sqrt((cov(0, 0) * cov(2, 2) + cov(0, 2) * cov(0, 2)) / draws);
  EXPECT_NEAR(S(0, 2), cov(0, 2), 3.0 * se_cov);
}

TEST(PhiMarginal, TotalVariationAgainstQuadrature) {
  // Three points; everything but phi and the angles is held fixed, and
  // uniform mixture weights make the angle prior exactly uniform.
  const ConicFD truth{0.0, 0.0, 0.3, 1.0, 0.5};
  const double sigma = 0.3;
  Rng gen = make_rng(77);
  std::vector<Point> pts;
  for (double t : {-2.0, 0.4, 1.9}) {
    const Point w = fd_to_point(t, truth);
    pts.push_back({w.x + normal(gen, 0.0, sigma), w.y + normal(gen, 0.0, sigma)});
  }
  PriorSpec prior;
  prior.m = 4;
  const ConicSampler sampler(pts, prior, ConicType::NonCircularEllipse);
  ChainState s;
  s.theta = truth;
  s.sigma2 = sigma * sigma;
  s.angles = {-2.0, 0.4, 1.9};
  s.weights.assign(5, 0.2);
  // Joint move restricted to a wide phi walk so the chain can cross modes.
  s.scales.joint_chol.setZero();
  s.scales.joint_chol(2, 2) = 1.5;

  const int bins = 36;
  const double width = kTwoPi / bins;
  auto bin_of = [&](double phi) { return std::min(bins - 1, static_cast<int>((phi + kPi) / width)); };

  // Oracle: p(phi) proportional to prod_i int exp(-|x_i - w(t, phi)|^2 / 2 sigma^2) dt.
  std::vector<double> oracle(bins, 0.0);
  const int sub = 20, tq = 2000;
  for (int b = 0; b < bins; ++b) {
    for (int j = 0; j < sub; ++j) {
      ConicFD c = truth;
      c.phi = -kPi + (b + (j + 0.5) / sub) * width;
      double prod = 1.0;
      for (const Point& p : pts) {
        double integral = 0.0;
        for (int q = 0; q < tq; ++q) {
          const Point w = fd_to_point(-kPi + (q + 0.5) * kTwoPi / tq, c);
          integral += std::exp(-dot(p - w, p - w) / (2.0 * s.sigma2));
        }
        prod *= integral;
      }
      oracle[b] += prod;
    }
  }
  double total = 0.0;
  for (double v : oracle) total += v;
  for (double& v : oracle) v /= total;

  Rng rng = make_rng(5);
  std::vector<double> hist(bins, 0.0);
  const int iters = 200000, burn = 2000;
  for (int it = 0; it < iters + burn; ++it) {
    sampler.update_phi(s, rng);
    sampler.update_joint(s, rng);  // phi-only joint move, angles redrawn
    sampler.update_angles(s, rng);
    if (it >= burn) hist[bin_of(s.theta.phi)] += 1.0 / iters;
  }
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(hist[b] - oracle[b]);
  EXPECT_LE(tv, 0.05);
}

TEST(TypeMoves, TypeProbabilitiesMatchQuadrature) {
  // Three points near a parabola; only e and the angles move. Oracle: the
  // mass of each branch is its prior weight times
  // prod_i int N(x_i | w(t; e), sigma^2) / 2R(e) dt, integrated over e
  // against F0 on the continuous part.
  const ConicFD truth{0.0, 0.0, 0.3, 1.0, 1.0};
  const double sigma = 0.3;
  Rng gen = make_rng(21);
  std::vector<Point> pts;
  for (double t : {-1.2, 0.1, 1.3}) {
    const Point w = fd_to_point(t, truth);
    pts.push_back({w.x + normal(gen, 0.0, sigma), w.y + normal(gen, 0.0, sigma)});
  }
  PriorSpec prior;
  prior.m = 4;
  const ConicSampler sampler(pts, prior);

  auto evidence = [&](double e) {
    ConicFD c = truth;
    c.e = e;
    const double R = angle_support(e);
    const int tq = 4000;
    const double dt = 2.0 * R / tq;
    double prod = 1.0;
    for (const Point& p : pts) {
      double integral = 0.0;
      for (int q = 0; q < tq; ++q) {
        const Point w = fd_to_point(-R + (q + 0.5) * dt, c);
        integral += std::exp(-dot(p - w, p - w) / (2.0 * sigma * sigma));
      }
      prod *= integral * dt / (2.0 * R);
    }
    return prod;
  };
  const EccentricityWeights w = prior.eccentricity_weights();
  std::array<double, 4> oracle{};  // circle, ellipse, parabola, hyperbola
  oracle[0] = w.circle * evidence(0.0);
  oracle[2] = w.parabola * evidence(1.0);
  auto continuous = [&](double lo, double hi, int nodes) {
    const double de = (hi - lo) / nodes;
    double total = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const double e = lo + (j + 0.5) * de;
      total += std::exp(prior.f0_log_pdf(e)) * evidence(e);
    }
    return w.continuous * total * de;
  };
  oracle[1] = continuous(0.0, 1.0, 800);
  oracle[3] = continuous(1.0, 4.0, 1600) + continuous(4.0, 12.0, 200);
  double sum = 0.0;
  for (double v : oracle) sum += v;
  for (double& v : oracle) v /= sum;

  ChainState s;
  s.theta = truth;
  s.sigma2 = sigma * sigma;
  s.angles = {-1.2, 0.1, 1.3};
  s.weights.assign(5, 0.2);
  Rng rng = make_rng(8);
  std::array<double, 4> freq{};
  const int iters = 100000, burn = 1000;
  for (int it = 0; it < iters + burn; ++it) {
    sampler.update_eccentricity(s, rng);
    sampler.update_angles(s, rng);
    sampler.update_type_jump(s, rng);
    if (it >= burn) freq[static_cast<int>(type_of(s.theta.e))] += 1.0 / iters;
  }
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(freq[j], oracle[j], 0.02) << "type " << j;
}

TEST(AngleGrid, ProposalDensityNormalizes) {
  const Fixture f = make_fixture(ConicType::Hyperbola, 100, 5);
  const ConicSampler sampler(f.data.points, f.prior);
  const ChainState s = initial_state(f.init, f.prior);
  Rng rng = make_rng(9);
  for (std::size_t i : {0u, 17u, 50u, 99u}) {
    const auto grid = sampler.angle_grid(i, s.theta, s.angles[i], s);
    const double lo = grid.x.front(), hi = grid.x.back();
    const int q = 200000;
    double mass = 0.0;
    for (int j = 0; j < q; ++j) mass += std::exp(ConicSampler::grid_log_pdf(grid, lo + (j + 0.5) * (hi - lo) / q));
    EXPECT_NEAR(mass * (hi - lo) / q, 1.0, 1e-4);
    for (int j = 0; j < 200; ++j) {
      const double t = ConicSampler::sample_grid(grid, rng);
      EXPECT_TRUE(std::isfinite(ConicSampler::grid_log_pdf(grid, t)));
    }
  }
}

TEST(Weights, DirichletUpdateKeepsSimplex) {
  const Fixture f = make_fixture(ConicType::NonCircularEllipse, 100, 2);
  const ConicSampler sampler(f.data.points, f.prior);
  ChainState s = initial_state(f.init, f.prior);
  Rng rng = make_rng(3);
  for (int i = 0; i < 50; ++i) {
    sampler.update_weights(s, rng);
    ASSERT_EQ(s.weights.size(), static_cast<std::size_t>(f.prior.m + 1));
    EXPECT_TRUE(satisfies_invariants(s));
  }
}

TEST(RunChain, InvariantsHoldAtEveryRecordedState) {
  const Fixture f = make_fixture(ConicType::Hyperbola, 60, 4);
  ChainConfig cfg;
  cfg.n_iterations = 800;
  cfg.burn_in = 200;
  cfg.seed = 3;
  int checked = 0, bad = 0;
  run_chain(f.data.points, f.prior, cfg, initial_state(f.init, f.prior), [&](const ChainState& s) {
    ++checked;
    if (!satisfies_invariants(s)) ++bad;
  });
  EXPECT_EQ(checked, 600);
  EXPECT_EQ(bad, 0);
}

TEST(RunChain, SameSeedIsBitIdentical) {
  const Fixture f = make_fixture(ConicType::Parabola, 50, 6);
  ChainConfig cfg;
  cfg.n_iterations = 400;
  cfg.burn_in = 100;
  cfg.seed = 42;
  const auto a = run_chain(f.data.points, f.prior, cfg, initial_state(f.init, f.prior));
  const auto b = run_chain(f.data.points, f.prior, cfg, initial_state(f.init, f.prior));
  EXPECT_TRUE(same_trace(a.trace, b.trace));
  cfg.seed = 43;
  const auto c = run_chain(f.data.points, f.prior, cfg, initial_state(f.init, f.prior));
  EXPECT_FALSE(same_trace(a.trace, c.trace));
}

TEST(RunChain, ThinningAndFixedType) {
  const Fixture f = make_fixture(ConicType::NonCircularEllipse, 60, 8);
  ChainConfig cfg;
  cfg.n_iterations = 500;
  cfg.burn_in = 100;
  cfg.thin = 4;
  cfg.fixed_type = ConicType::NonCircularEllipse;
  const auto init = initialize(f.data, cfg.fixed_type);
  const auto r = run_chain(f.data.points, f.prior, cfg, initial_state(init, f.prior));
  EXPECT_EQ(r.trace.size(), 100u);
  for (const auto& rec : r.trace) EXPECT_EQ(rec.type, ConicType::NonCircularEllipse);
  EXPECT_EQ(r.acceptance.type_jump_proposals, 0);
}

TEST(RunChain, AdaptedAcceptanceRatesInBand) {
  for (ConicType type : {ConicType::NonCircularEllipse, ConicType::Parabola, ConicType::Hyperbola}) {
    const Fixture f = make_fixture(type, 100, 12);
    ChainConfig cfg;
    cfg.n_iterations = 3000;
    cfg.burn_in = 1500;
    cfg.seed = 1;
    const auto r = run_chain(f.data.points, f.prior, cfg, initial_state(f.init, f.prior));
    for (double rate : {r.acceptance.phi, r.acceptance.angles, r.acceptance.joint}) {
      EXPECT_GE(rate, 0.2) << to_string(type);
      EXPECT_LE(rate, 0.45) << to_string(type);
    }
  }
}

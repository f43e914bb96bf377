#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "conicbayes/posterior.hpp"

using namespace conic;

namespace {

TraceRecord record(double e, double phi = 0.0, double h = 0.0) {
  TraceRecord r;
  r.theta = {h, 0.0, phi, 1.0, e};
  r.type = type_of(e);
  r.sigma2 = 1.0;
  return r;
}

/// Gaussian trace around `centre` with independent coordinates.
std::vector<TraceRecord> gaussian_trace(const ConicFD& centre, const std::array<double, 5>& sd, int n,
                                        std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<TraceRecord> out;
  for (int i = 0; i < n; ++i) {
    TraceRecord r;
    r.iteration = i + 1;
    r.theta = {centre.h + sd[0] * normal(rng), centre.k + sd[1] * normal(rng),
               wrap_angle(centre.phi + sd[2] * normal(rng)), centre.l + sd[3] * normal(rng),
               centre.e + sd[4] * normal(rng)};
    r.type = type_of(r.theta.e);
    r.sigma2 = 4.0;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(BayesFactor, WorkedExample) {
  EXPECT_NEAR(bayes_factor(0.995, 1.0 / 3.0), 398.0, 1e-9);
  EXPECT_EQ(bayes_factor(1.0, 1.0 / 3.0), std::numeric_limits<double>::infinity());
  EXPECT_EQ(bayes_factor(0.0, 1.0 / 3.0), 0.0);
  EXPECT_NEAR(bayes_factor(0.5, 0.5), 1.0, 1e-15);
  EXPECT_THROW(bayes_factor(0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(bayes_factor(1.5, 0.3), std::invalid_argument);
}

TEST(PriorTypeProbs, EqualThirdsForClosedParabolaOpen) {
  const auto p = prior_type_probs(PriorSpec{});
  EXPECT_NEAR(p[0] + p[1], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(p[2], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(p[3], 1.0 / 3.0, 1e-14);
}

TEST(DetectType, FrequenciesAndModalType) {
  std::vector<TraceRecord> trace;
  for (int i = 0; i < 70; ++i) trace.push_back(record(1.0));
  for (int i = 0; i < 20; ++i) trace.push_back(record(1.3));
  for (int i = 0; i < 10; ++i) trace.push_back(record(0.4));
  const auto [type, probs] = detect_type(trace);
  EXPECT_EQ(type, ConicType::Parabola);
  EXPECT_DOUBLE_EQ(probs[type_index(ConicType::Parabola)].estimate, 0.7);
  EXPECT_DOUBLE_EQ(probs[type_index(ConicType::Hyperbola)].estimate, 0.2);
  EXPECT_DOUBLE_EQ(probs[type_index(ConicType::NonCircularEllipse)].estimate, 0.1);
  EXPECT_DOUBLE_EQ(probs[type_index(ConicType::Circle)].estimate, 0.0);
  EXPECT_EQ(probs[type_index(ConicType::Circle)].mc_sd, 0.0);
  EXPECT_GT(probs[type_index(ConicType::Parabola)].mc_sd, 0.0);
  EXPECT_THROW(detect_type(std::vector<TraceRecord>{}), EmptyTraceError);
}

TEST(DetectType, TiesGoToEarlierType) {
  std::vector<TraceRecord> trace = {record(0.5), record(1.5)};
  EXPECT_EQ(detect_type(trace).first, ConicType::NonCircularEllipse);
}

TEST(BatchMeans, IidSeMatchesTheory) {
  Rng rng = make_rng(4);
  std::vector<double> x(40000);
  for (double& v : x) v = normal(rng);
  EXPECT_NEAR(batch_means_se(x), 1.0 / std::sqrt(40000.0), 0.25 / std::sqrt(40000.0));
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> x = {4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(x, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0 / 3.0), 2.0);
  EXPECT_THROW(quantile({}, 0.5), EmptyTraceError);
}

TEST(CircularMean, WrapsAcrossPi) {
  const std::vector<double> a = {kPi - 0.1, -kPi + 0.1};
  EXPECT_NEAR(std::abs(circular_mean(a)), kPi, 1e-12);
  const std::vector<double> b = {0.2, 0.4};
  EXPECT_NEAR(circular_mean(b), 0.3, 1e-12);
}

TEST(PointEstimate, CircularPhiAndMeans) {
  std::vector<TraceRecord> t = {record(0.4, kPi - 0.05, 1.0), record(0.6, -kPi + 0.05, 3.0)};
  const ConicFD m = point_estimate(t);
  EXPECT_NEAR(m.h, 2.0, 1e-15);
  EXPECT_NEAR(m.e, 0.5, 1e-15);
  EXPECT_NEAR(std::abs(m.phi), kPi, 1e-12);
}

TEST(MarginalIntervals, GaussianCoverage) {
  const ConicFD c{250.0, 240.0, 0.5, 12.0, 0.8};
  const std::array<double, 5> sd = {0.5, 0.4, 0.01, 0.3, 0.02};
  const auto trace = gaussian_trace(c, sd, 40000, 8);
  const auto cis = marginal_intervals(trace, 0.95);
  const double z = 1.959963985;
  const double v[5] = {c.h, c.k, c.phi, c.l, c.e};
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(cis[j].lo, v[j] - z * sd[j], 0.03 * sd[j] * z) << j;
    EXPECT_NEAR(cis[j].hi, v[j] + z * sd[j], 0.03 * sd[j] * z) << j;
  }
}

TEST(MarginalIntervals, PhiNearBoundaryStaysContiguous) {
  const ConicFD c{0.0, 0.0, kPi - 0.01, 5.0, 0.5};
  const auto trace = gaussian_trace(c, {0.1, 0.1, 0.05, 0.1, 0.01}, 5000, 9);
  const auto cis = marginal_intervals(trace, 0.9);
  EXPECT_LT(cis[2].width(), 0.3);
  EXPECT_TRUE(cis[2].contains(kPi - 0.01));
}

TEST(BonferroniRegion, BoxContainsSamplesAndIsWider) {
  const ConicFD c{250.0, 240.0, 0.5, 12.0, 0.8};
  const auto trace = gaussian_trace(c, {0.5, 0.4, 0.01, 0.3, 0.02}, 20000, 10);
  Rng rng = make_rng(1);
  const CredibleRegion r = bonferroni_region(trace, 0.95, 100, rng);
  const auto cis = marginal_intervals(trace, 0.95);
  EXPECT_EQ(r.conic_samples.size(), 100u);
  for (int j = 0; j < 5; ++j) EXPECT_GT(r.box[j].width(), cis[j].width());
  for (const ConicFD& s : r.conic_samples) {
    EXPECT_TRUE(r.box[0].contains(s.h));
    EXPECT_TRUE(r.box[4].contains(s.e));
  }
  EXPECT_THROW(bonferroni_region(trace, 1.0, 10, rng), std::invalid_argument);
}

TEST(HpdRegion, RetainsRequestedFraction) {
  const ConicFD c{250.0, 240.0, 0.5, 12.0, 0.8};
  const auto trace = gaussian_trace(c, {0.5, 0.4, 0.01, 0.3, 0.02}, 5000, 11);
  Rng rng = make_rng(2);
  const CredibleRegion r = approx_hpd_region(trace, 0.9, 2000, rng);
  EXPECT_NEAR(r.retained_fraction, 0.9, 1e-3);
  EXPECT_GT(r.conic_samples.size(), 1700u);
  // Every kept draw lies within the chi-square(5) 0.999 ellipsoid of the sample.
  for (const ConicFD& s : r.conic_samples) EXPECT_LT(std::abs(s.h - c.h), 0.5 * 5.0);
  const std::vector<TraceRecord> short_trace(trace.begin(), trace.begin() + 50);
  EXPECT_THROW(approx_hpd_region(short_trace, 0.9, 10, rng), std::invalid_argument);
}

TEST(HpdRegion, DegenerateCovarianceIsRidged) {
  // e pinned at the parabola atom: zero variance in one coordinate.
  auto trace = gaussian_trace({0.0, 0.0, 0.1, 3.0, 1.0}, {0.1, 0.1, 0.01, 0.1, 0.0}, 500, 12);
  Rng rng = make_rng(3);
  EXPECT_NO_THROW(approx_hpd_region(trace, 0.95, 200, rng));
}

TEST(Summarize, ConditionalOnDetectedType) {
  auto trace = gaussian_trace({250.0, 250.0, 0.2, 10.0, 1.2}, {0.5, 0.5, 0.01, 0.2, 0.01}, 900, 13);
  for (int i = 0; i < 100; ++i) trace.push_back(record(1.0, 0.2, 0.0));
  const PosteriorSummary s = summarize(trace, PriorSpec{}, 0.9);
  EXPECT_EQ(s.detected_type, ConicType::Hyperbola);
  EXPECT_EQ(s.n_samples, 1000u);
  EXPECT_EQ(s.n_conditional, 900u);
  EXPECT_NEAR(s.type_probs[type_index(ConicType::Hyperbola)].estimate, 0.9, 1e-15);
  EXPECT_NEAR(s.theta_mean.h, 250.0, 0.1);  // parabola draws at h = 0 excluded
  EXPECT_NEAR(s.bayes_factors[type_index(ConicType::Hyperbola)], 9.0 / 0.5, 1e-9);
  EXPECT_EQ(s.bayes_factors[type_index(ConicType::Circle)], 0.0);
  EXPECT_EQ(s.closed_bayes_factor, 0.0);
  EXPECT_NEAR(s.theta_cov(0, 0), 0.25, 0.05);
}

TEST(Json, InfiniteBayesFactorIsAString) {
  std::vector<TraceRecord> trace;
  for (int i = 0; i < 10; ++i) trace.push_back(record(0.5 + 0.01 * i));
  const auto j = to_json(summarize(trace, PriorSpec{}));
  EXPECT_EQ(j["bayes_factors"]["ellipse"], "inf");
  EXPECT_EQ(j["detected_type"], "ellipse");
  EXPECT_TRUE(j["bayes_factors"]["parabola"].is_number());
  EXPECT_TRUE(j.contains("marginal_CIs"));
  EXPECT_EQ(json_number(std::nan("")), "nan");
  EXPECT_EQ(json_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Json, TraceNdjsonHasOneObjectPerLine) {
  std::vector<TraceRecord> trace = {record(0.5), record(1.0)};
  const std::string s = trace_to_ndjson(trace);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
  const auto first = nlohmann::json::parse(s.substr(0, s.find('\n')));
  EXPECT_EQ(first["conic_type"], "ellipse");
  EXPECT_EQ(first["e"], 0.5);
}

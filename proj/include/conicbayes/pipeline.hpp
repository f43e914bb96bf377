#pragma once

#include <optional>
#include <span>
#include <vector>

#include "classical_fit.hpp"
#include "mcmc.hpp"
#include "posterior.hpp"

namespace conic {

struct FitOptions {
  ChainConfig chain;
  std::optional<int> m;
  std::optional<double> f0_mean;
  double ci_level{0.95};
  double region_level{0.95};
  int region_samples{50};
};

struct FitResult {
  InitEstimate init;
  PriorSpec prior;
  ChainResult chain;
  PosteriorSummary summary;
  CredibleRegion region;  // Bonferroni box
};

/// initialize -> default prior -> run_chain -> summarize.
inline FitResult fit_points(std::span<const Point> pts, const FitOptions& opt) {
  FitResult r;
  r.init = initialize(pts, opt.chain.fixed_type);
  r.prior = default_prior(pts, r.init, opt.m);
  if (opt.f0_mean) r.prior.f0_mean = *opt.f0_mean;
  validate(r.prior);
  r.chain = run_chain(pts, r.prior, opt.chain, initial_state(r.init, r.prior));
  r.summary = summarize(r.chain.trace, r.prior, opt.ci_level);
  // Region draws get their own stream so they never perturb the chain.
  Rng rng = make_rng(stream_seed(opt.chain.seed, 0x5EED));
  const std::vector<TraceRecord> cond = filter_type(r.chain.trace, r.summary.detected_type);
  r.region = bonferroni_region(cond, opt.region_level, opt.region_samples, rng);
  return r;
}

inline FitResult fit_dataset(const NoisyDataset& d, const FitOptions& opt) {
  return fit_points(d.points, opt);
}

}  // namespace conic

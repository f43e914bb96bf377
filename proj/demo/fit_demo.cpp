// Simulate one noisy hyperbola, fit it, and print what the posterior says.
#include <cstdio>

#include "conicbayes/conicbayes.hpp"

int main() {
  const conic::NoisyDataset d =
      conic::simulate_sim2_dataset(conic::ConicType::Hyperbola, 100, 2.0, /*seed=*/7);

  conic::FitOptions opt;
  opt.chain.n_iterations = 4000;
  opt.chain.burn_in = 1000;
  opt.chain.seed = 7;
  const conic::FitResult fit = conic::fit_dataset(d, opt);
  const conic::PosteriorSummary& s = fit.summary;

  std::printf("true e = %.3f, initial e = %.3f (%s)\n", d.truth->conic.e, fit.init.conic.e,
              conic::to_string(fit.init.type));
  for (conic::ConicType t : conic::kAllTypes)
    std::printf("  P(%-9s) = %.3f\n", conic::to_string(t), s.type_probs[conic::type_index(t)].estimate);
  std::printf("detected: %s\n", conic::to_string(s.detected_type));
  const conic::ConicFD& m = s.theta_mean;
  std::printf("posterior mean: h=%.2f k=%.2f phi=%.3f l=%.2f e=%.3f\n", m.h, m.k, m.phi, m.l, m.e);
  std::printf("95%% interval for e: [%.3f, %.3f]\n", s.marginal_cis[4].lo, s.marginal_cis[4].hi);
  return 0;
}

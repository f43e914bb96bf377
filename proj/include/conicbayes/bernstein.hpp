#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace conic {

/// Mixture of Beta(s, m + 2 - s), s = 1..m+1, on the unit interval. The
/// components are the degree-m Bernstein basis polynomials scaled by m + 1.
class BetaMixture {
 public:
  explicit BetaMixture(int degree) : m_(degree) {
    if (degree < 1) throw std::invalid_argument("Bernstein degree must be >= 1");
    log_norm_.resize(m_ + 1);
    binom_.resize(m_ + 1);
    for (int j = 0; j <= m_; ++j) {
      // beta(x; j+1, m+1-j) = (m+1) C(m, j) x^j (1-x)^(m-j)
      const double lb = std::lgamma(m_ + 2.0) - std::lgamma(j + 1.0) - std::lgamma(m_ + 1.0 - j);
      log_norm_[j] = lb;
      binom_[j] = std::exp(lb);
    }
  }

  int degree() const { return m_; }
  int components() const { return m_ + 1; }

  /// Log density of component s (1-based) at x in (0, 1).
  double component_log_pdf(int s, double x) const {
    const int j = s - 1;
    return log_norm_[j] + j * std::log(x) + (m_ - j) * std::log1p(-x);
  }

  double component_pdf(int s, double x) const { return std::exp(component_log_pdf(s, x)); }

  /// sum_s w_s beta(x; s, m+2-s), evaluated in O(m) by Horner's rule on
  /// x/(1-x) (or its reciprocal past 1/2, to avoid overflow).
  double density(double x, std::span<const double> weights) const {
    if (!(x > 0.0 && x < 1.0)) {
      if (x == 0.0) return weights[0] * binom_[0];
      if (x == 1.0) return weights[m_] * binom_[m_];
      return 0.0;
    }
    double acc = 0.0;
    if (x <= 0.5) {
      const double q = x / (1.0 - x);
      for (int j = m_; j >= 0; --j) acc = acc * q + weights[j] * binom_[j];
      return acc * std::pow(1.0 - x, m_);
    }
    const double q = (1.0 - x) / x;
    for (int j = 0; j <= m_; ++j) acc = acc * q + weights[j] * binom_[j];
    return acc * std::pow(x, m_);
  }

  double log_density(double x, std::span<const double> weights) const {
    return std::log(density(x, weights));
  }

 private:
  int m_;
  std::vector<double> log_norm_;
  std::vector<double> binom_;
};

/// Degree ceil(n / log n) used for the latent-angle prior (38 at n = 200).
inline int default_bernstein_degree(std::size_t n) {
  if (n < 3) return 4;
  const double nn = static_cast<double>(n);
  return std::max(4, static_cast<int>(std::ceil(nn / std::log(nn))));
}

}  // namespace conic

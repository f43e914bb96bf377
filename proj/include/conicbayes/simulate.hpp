#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "geometry.hpp"
#include "random.hpp"

namespace conic {

class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Protocol { Sim1, Sim2 };

/// How ellipse angle draws are read. Centre: as the centre-parametric angle
/// from the focus-side vertex, converted to focal angles for the truth block.
/// Focal: directly as focal polar angles. Focal draws crowd the focus-side
/// vertex; Sim1's Beta(3,3) then almost never reaches the far quarter of the
/// ellipse, and Sim2's (-pi/2, pi/2) only covers the cap beyond the latus
/// rectum.
enum class EllipseAngles { Centre, Focal };

struct SimSpec {
  Protocol protocol{Protocol::Sim1};
  int n_points{200};
  int n_datasets{100};
  double sigma{2.0};
  std::uint64_t seed{1};
  /// Sim2 only; empty means balanced over ellipse/parabola/hyperbola.
  std::optional<ConicType> conic_type;
  /// Sim1 only: axis angle of the true ellipse.
  double sim1_phi{kPi};
  EllipseAngles ellipse_angles{EllipseAngles::Centre};
};

inline void validate(const SimSpec& s) {
  if (s.n_points < 5) throw InvalidSpecError("n_points must be >= 5");
  if (s.n_datasets < 1) throw InvalidSpecError("n_datasets must be >= 1");
  if (!(s.sigma > 0.0) || !std::isfinite(s.sigma)) throw InvalidSpecError("sigma must be > 0");
  if (s.conic_type == ConicType::Circle)
    throw InvalidSpecError("conic_type must be ellipse, parabola or hyperbola");
}

/// Noisy points for the given conic and latent angles.
inline NoisyDataset make_dataset(const ConicFD& conic, std::vector<double> angles, double sigma,
                                 std::uint64_t seed, Rng& rng) {
  NoisyDataset d;
  d.seed = seed;
  d.points.reserve(angles.size());
  for (double t : angles) {
    const Point w = fd_to_point(t, conic);
    const double ex = sigma > 0.0 ? normal(rng, 0.0, sigma) : 0.0;
    const double ey = sigma > 0.0 ? normal(rng, 0.0, sigma) : 0.0;
    d.points.push_back({w.x + ex, w.y + ey});
  }
  d.truth = GroundTruth{conic, std::move(angles), sigma};
  return d;
}

inline constexpr Point kSimCenter{250.0, 250.0};

/// Focal angle of the point at centre-parametric angle u (u = 0 at the
/// focus-side vertex).
inline double focal_from_centre_angle(double u, const StandardForm& s, const ConicFD& conic) {
  const Point q = from_standard_point({s.a * std::cos(u), *s.b * std::sin(u)}, s.center, s.phi);
  return wrap_angle(std::atan2(q.y - conic.k, q.x - conic.h) - conic.phi);
}

/// Full ellipse (2a = 100, 2b = 50) with Beta(3,3) standardized angles.
inline NoisyDataset simulate_sim1_dataset(int n_points, double sigma, double phi,
                                          std::uint64_t seed,
                                          EllipseAngles read = EllipseAngles::Centre) {
  Rng rng = make_rng(seed);
  StandardForm s;
  s.type = ConicType::NonCircularEllipse;
  s.a = 50.0;
  s.b = 25.0;
  s.center = kSimCenter;
  s.phi = phi;
  const ConicFD conic = from_standard_form(s);
  std::vector<double> angles(n_points);
  for (double& t : angles) {
    do {
      t = kTwoPi * beta(rng, 3.0, 3.0) - kPi;
    } while (!(t > -kPi && t < kPi));
    if (read == EllipseAngles::Centre) t = focal_from_centre_angle(t, s, conic);
  }
  return make_dataset(conic, std::move(angles), sigma, seed, rng);
}

/// Random partial conic of the given type (a ~ N(50, 2^2), b ~ N(25, 2^2),
/// phi ~ U(-pi, pi), center (250, 250)).
inline NoisyDataset simulate_sim2_dataset(ConicType type, int n_points, double sigma,
                                          std::uint64_t seed,
                                          EllipseAngles read = EllipseAngles::Centre) {
  if (type == ConicType::Circle) throw InvalidSpecError("Sim2 does not generate circles");
  Rng rng = make_rng(seed);
  auto positive_normal = [&](double mean) {
    double v;
    do {
      v = normal(rng, mean, 2.0);
    } while (!(v > 0.0));
    return v;
  };
  StandardForm s;
  s.type = type;
  s.center = kSimCenter;
  s.a = positive_normal(50.0);
  if (type != ConicType::Parabola) {
    do {
      s.b = positive_normal(25.0);
    } while (type == ConicType::NonCircularEllipse && *s.b >= s.a);
  }
  s.phi = uniform(rng, -kPi, kPi);
  const ConicFD conic = from_standard_form(s);

  std::vector<double> angles(n_points);
  for (double& t : angles) {
    switch (type) {
      case ConicType::NonCircularEllipse: {
        const double u = uniform(rng, -kPi / 2, kPi / 2);
        t = read == EllipseAngles::Focal ? u : focal_from_centre_angle(u, s, conic);
        break;
      }
      case ConicType::Parabola:
        t = uniform(rng, -2.0, 2.0);
        break;
      default: {
        const double R = angle_support(conic.e);
        do {
          t = uniform(rng, -R, R);
        } while (!(1.0 + conic.e * std::cos(t) > 0.0));
        break;
      }
    }
  }
  return make_dataset(conic, std::move(angles), sigma, seed, rng);
}

/// Type of the i-th dataset in a Sim2 run.
inline ConicType sim2_type(const SimSpec& spec, int index) {
  if (spec.conic_type) return *spec.conic_type;
  static constexpr ConicType kCycle[3] = {ConicType::NonCircularEllipse, ConicType::Parabola,
                                          ConicType::Hyperbola};
  return kCycle[index % 3];
}

inline NoisyDataset simulate_one(const SimSpec& spec, int index) {
  const std::uint64_t seed = stream_seed(spec.seed, static_cast<std::uint64_t>(index));
  if (spec.protocol == Protocol::Sim1)
    return simulate_sim1_dataset(spec.n_points, spec.sigma, spec.sim1_phi, seed, spec.ellipse_angles);
  return simulate_sim2_dataset(sim2_type(spec, index), spec.n_points, spec.sigma, seed,
                               spec.ellipse_angles);
}

inline std::vector<NoisyDataset> simulate_sim1(const SimSpec& spec) {
  validate(spec);
  if (spec.protocol != Protocol::Sim1) throw InvalidSpecError("simulate_sim1 needs protocol Sim1");
  std::vector<NoisyDataset> out;
  out.reserve(spec.n_datasets);
  for (int i = 0; i < spec.n_datasets; ++i) out.push_back(simulate_one(spec, i));
  return out;
}

inline std::vector<NoisyDataset> simulate_sim2(const SimSpec& spec) {
  validate(spec);
  if (spec.protocol != Protocol::Sim2) throw InvalidSpecError("simulate_sim2 needs protocol Sim2");
  std::vector<NoisyDataset> out;
  out.reserve(spec.n_datasets);
  for (int i = 0; i < spec.n_datasets; ++i) out.push_back(simulate_one(spec, i));
  return out;
}

}  // namespace conic

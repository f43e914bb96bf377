#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dataset.hpp"
#include "geometry.hpp"

namespace conic {

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Regression coefficients imply no real conic of the requested type.
class InadmissibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Normalization {
  Point center;
  double scale{1.0};
};

inline Normalization normalization_for(std::span<const Point> pts) {
  Normalization nz;
  for (const Point& p : pts) {
    nz.center.x += p.x;
    nz.center.y += p.y;
  }
  nz.center.x /= static_cast<double>(pts.size());
  nz.center.y /= static_cast<double>(pts.size());
  double ss = 0.0;
  for (const Point& p : pts) ss += dot(p - nz.center, p - nz.center);
  nz.scale = std::sqrt(ss / static_cast<double>(pts.size()));
  if (!(nz.scale > 0.0)) nz.scale = 1.0;
  return nz;
}

inline double data_scale(std::span<const Point> pts) {
  double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
  for (const Point& p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double diag = std::hypot(xmax - xmin, ymax - ymin);
  return diag > 0.0 ? diag : 1.0;
}

}  // namespace detail

/// Algebraic least squares: minimizes the summed squared conic polynomial
/// subject to A^2 + B^2 + C^2 = 1. The data are centered and scaled first;
/// the constraint is invariant under both maps, so the minimizer is the same.
inline ConicQuad fit_pseudo_inverse(std::span<const Point> pts) {
  if (pts.size() < 6) throw RankDeficientError("algebraic fit needs at least 6 points");
  const detail::Normalization nz = detail::normalization_for(pts);
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd Z(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = (pts[i].x - nz.center.x) / nz.scale;
    const double y = (pts[i].y - nz.center.y) / nz.scale;
    Z.row(i) << x * x, 2 * x * y, y * y, 2 * x, 2 * y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z);
  const auto& sv = svd.singularValues();
  // One zero singular value is an exact conic; two means the fit is not unique.
  if (!(sv(4) > 1e-10 * sv(0)))
    throw RankDeficientError("design matrix is rank deficient (collinear or repeated points)");

  // Eliminate the linear terms by projecting the quadratic columns onto the
  // orthogonal complement of the linear ones (QR, not normal equations, so
  // long hyperbola arms do not square the conditioning).
  const Eigen::MatrixXd Z1 = Z.leftCols<3>();
  const Eigen::MatrixXd Z2 = Z.rightCols<3>();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z2);
  if (qr.rank() < 3) throw RankDeficientError("linear-term design matrix is singular");
  const Eigen::MatrixXd Q2 = qr.householderQ() * Eigen::MatrixXd::Identity(n, 3);
  const Eigen::MatrixXd M = Z1 - Q2 * (Q2.transpose() * Z1);
  Eigen::JacobiSVD<Eigen::MatrixXd> msvd(M, Eigen::ComputeThinV);
  const Eigen::Vector3d quad = msvd.matrixV().col(2);
  const Eigen::Vector3d lin = -qr.solve(Z1 * quad);

  // Undo the normalization: x = s x' + c.
  const double s = nz.scale, cx = nz.center.x, cy = nz.center.y;
  const double A = quad(0) / (s * s), B = quad(1) / (s * s), C = quad(2) / (s * s);
  const double Dp = lin(0) / s, Ep = lin(1) / s, Fp = lin(2);
  ConicQuad q;
  q.A = A;
  q.B = B;
  q.C = C;
  q.D = Dp - A * cx - B * cy;
  q.E = Ep - B * cx - C * cy;
  q.F = A * cx * cx + 2 * B * cx * cy + C * cy * cy - 2 * Dp * cx - 2 * Ep * cy + Fp;
  return normalized(q);
}

inline ConicQuad fit_pseudo_inverse(const NoisyDataset& d) { return fit_pseudo_inverse(d.points); }

// ---------------------------------------------------------------------------
// Restricted regressions on rotated data.
//
// Ellipse/hyperbola (delta = +1 / -1):
//   v*^2 = b0 + b1 u* + b2 u*^2 + b3 v*
//   b3 = 2 c2*, b2 = -delta b^2/a^2, b1 = 2 delta c1* b^2/a^2,
//   b0 = -c2*^2 - delta c1*^2 b^2/a^2 + delta b^2
// Parabola:
//   v*^2 = b0 + b1 u* + b2 v*,  b1 = -4a, b2 = 2 c2*, b0 = -c2*^2 + 4 a c1*
// ---------------------------------------------------------------------------

struct TypeRegression {
  std::vector<double> beta;
  double residual_ss{};
};

inline std::vector<Point> rotate_clockwise(std::span<const Point> pts, double phi) {
  std::vector<Point> out;
  out.reserve(pts.size());
  for (const Point& p : pts) out.push_back(to_standard_point(p, {0.0, 0.0}, phi));
  return out;
}

inline TypeRegression fit_type_regression(std::span<const Point> rotated, ConicType type) {
  const bool parabola = type == ConicType::Parabola;
  const Eigen::Index p = parabola ? 3 : 4;
  const std::size_t need = parabola ? 4 : 5;
  if (rotated.size() < need) throw RankDeficientError("too few points for the regression");
  const Eigen::Index n = static_cast<Eigen::Index>(rotated.size());

  // Center and scale the regressors for conditioning; coefficients are mapped back.
  const detail::Normalization nz = detail::normalization_for(rotated);
  const double s = nz.scale, cu = nz.center.x, cv = nz.center.y;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (rotated[i].x - cu) / s, v = (rotated[i].y - cv) / s;
    if (parabola)
      X.row(i) << 1.0, u, v;
    else
      X.row(i) << 1.0, u, u * u, v;
    y(i) = v * v;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-12);
  if (qr.rank() < p) throw RankDeficientError("singular normal equations in restricted regression");
  const Eigen::VectorXd g = qr.solve(y);

  // In scaled coordinates v'^2 = g0 + g1 u' + ... with u = s u' + cu, v = s v' + cv.
  // Expand back to raw coordinates.
  TypeRegression out;
  if (parabola) {
    // v^2 - 2 cv v + cv^2 = s^2 g0 + s g1 (u - cu) + s g2 (v - cv)
    const double b1 = s * g(1);
    const double b2 = s * g(2) + 2.0 * cv;
    const double b0 = s * s * g(0) - s * g(1) * cu - s * g(2) * cv - cv * cv;
    out.beta = {b0, b1, b2};
  } else {
    // v^2 - 2 cv v + cv^2 = s^2 g0 + s g1 (u - cu) + g2 (u - cu)^2 + s g3 (v - cv)
    const double b2 = g(2);
    const double b1 = s * g(1) - 2.0 * g(2) * cu;
    const double b3 = s * g(3) + 2.0 * cv;
    const double b0 = s * s * g(0) - s * g(1) * cu + g(2) * cu * cu - s * g(3) * cv - cv * cv;
    out.beta = {b0, b1, b2, b3};
  }
  double rss = 0.0;
  for (const Point& q : rotated) {
    const double u = q.x, v = q.y;
    double pred;
    if (parabola)
      pred = out.beta[0] + out.beta[1] * u + out.beta[2] * v;
    else
      pred = out.beta[0] + out.beta[1] * u + out.beta[2] * u * u + out.beta[3] * v;
    const double r = v * v - pred;
    rss += r * r;
  }
  out.residual_ss = rss;
  return out;
}

/// Threshold on |b2| below which the ellipse/hyperbola reading is refused
/// (the conic is numerically a parabola in this frame).
inline constexpr double kMinAxisRatio = 1e-10;

/// Inverts the coefficient map for the rotation `phi` used to produce the
/// regression data. Ellipses must have their major axis along u*, hyperbolas
/// their transverse axis along u*; the focus is placed per the left-branch
/// convention in the rotated frame.
inline ConicFD regression_to_conic(const TypeRegression& reg, ConicType type, double phi) {
  const auto& b = reg.beta;
  for (double v : b)
    if (!std::isfinite(v)) throw InadmissibleError("non-finite regression coefficients");
  StandardForm s;
  s.phi = phi;
  Point center_rot;
  if (type == ConicType::Parabola) {
    if (b.size() != 3) throw InadmissibleError("parabola needs three coefficients");
    const double a = -b[1] / 4.0;
    if (!(a > 0.0)) throw InadmissibleError("parabola opens towards +u* in this frame");
    center_rot.y = b[2] / 2.0;
    center_rot.x = (b[0] + center_rot.y * center_rot.y) / (4.0 * a);
    s.type = ConicType::Parabola;
    s.a = a;
  } else {
    if (b.size() != 4) throw InadmissibleError("ellipse/hyperbola needs four coefficients");
    const bool hyperbola = type == ConicType::Hyperbola;
    const double delta = hyperbola ? -1.0 : 1.0;
    const double ratio = -delta * b[2];  // b^2 / a^2
    if (!(ratio > kMinAxisRatio))
      throw InadmissibleError(hyperbola ? "u*^2 coefficient must be positive for a hyperbola"
                                        : "u*^2 coefficient must be negative for an ellipse");
    center_rot.y = b[3] / 2.0;
    center_rot.x = b[1] / (2.0 * delta * ratio);
    const double b2 = delta * (b[0] + center_rot.y * center_rot.y + delta * center_rot.x *
                                                                         center_rot.x * ratio);
    if (!(b2 > 0.0)) throw InadmissibleError("implied squared semi-axis is not positive");
    const double a2 = b2 / ratio;
    if (!hyperbola && a2 < b2) throw InadmissibleError("major axis is not along u* in this frame");
    s.type = hyperbola ? ConicType::Hyperbola : ConicType::NonCircularEllipse;
    s.a = std::sqrt(a2);
    s.b = std::sqrt(b2);
    if (!hyperbola && a2 == b2) s.type = ConicType::Circle;
  }
  s.center = from_standard_point(center_rot, {0.0, 0.0}, phi);
  return from_standard_form(s);
}

// ---------------------------------------------------------------------------
// Latent angles and profile likelihood.
// ---------------------------------------------------------------------------

struct AngleEstimate {
  std::vector<double> angles;
  double sigma2{};
  double loglik{};
  /// loglik with each angle integrated out under a uniform prior on its
  /// support (Laplace): + n/2 log(2 pi sigma2) - sum log|dw/dt| - n log(2R).
  double integrated{};
};

inline double sigma2_floor(std::span<const Point> pts) {
  const double s = detail::data_scale(pts);
  return 1e-12 * s * s;
}

/// Gaussian log-likelihood with 2n coordinates at residual sum `rss`.
inline double gaussian_loglik(double rss, std::size_t n, double sigma2) {
  const double nn = static_cast<double>(n);
  return -nn * std::log(2.0 * kPi * sigma2) - rss / (2.0 * sigma2);
}

inline AngleEstimate estimate_angles(std::span<const Point> pts, const ConicFD& conic) {
  AngleEstimate est;
  est.angles.reserve(pts.size());
  double rss = 0.0;
  for (const Point& p : pts) {
    const double t = nearest_point_angle(p, conic);
    est.angles.push_back(t);
    const Point w = fd_to_point(t, conic);
    rss += dot(p - w, p - w);
  }
  est.sigma2 = std::max(rss / (2.0 * static_cast<double>(pts.size())), sigma2_floor(pts));
  est.loglik = gaussian_loglik(rss, pts.size(), est.sigma2);
  const double nn = static_cast<double>(pts.size());
  double log_speed = 0.0;
  for (double t : est.angles) log_speed += std::log(std::max(norm(fd_tangent(t, conic)), 1e-300));
  est.integrated = est.loglik + 0.5 * nn * std::log(2.0 * kPi * est.sigma2) - log_speed -
                   nn * std::log(2.0 * angle_support(conic.e));
  return est;
}

// ---------------------------------------------------------------------------
// Initialization.
// ---------------------------------------------------------------------------

struct InitBranch {
  double phi{};
  ConicType type{};
  bool admissible{false};
  double loglik{-std::numeric_limits<double>::infinity()};
  double score{-std::numeric_limits<double>::infinity()};
};

struct InitEstimate {
  ConicFD conic;
  ConicType type{};
  std::vector<double> angles;
  double sigma2{};
  double loglik{};
  double score{};                    // angle-integrated log-likelihood used for selection
  std::vector<InitBranch> branches;  // every candidate angle x type evaluated
};

/// Candidate axis angles: tan(2 phi) = 2B/(A-C) fixes phi modulo pi/2.
inline std::array<double, 4> candidate_angles(const ConicQuad& q) {
  double phi1 = 0.0;
  if (std::abs(q.A - q.C) > 1e-12 || std::abs(q.B) > 1e-12)
    phi1 = 0.5 * std::atan(2.0 * q.B / (q.A - q.C));
  std::array<double, 4> out{};
  for (int j = 0; j < 4; ++j) out[j] = wrap_angle(phi1 + j * kPi / 2.0);
  return out;
}

namespace detail {
inline InitEstimate initialize_projected(std::span<const Point> pts, ConicType type);
}  // namespace detail

/// Best admissible (angle, type) branch. Branches are ranked by the
/// log-likelihood with the latent angles integrated out, which unlike the
/// profile likelihood does not reward near-degenerate conics whose data sit
/// where the curve moves very fast in t. Ellipses are scored from both foci.
/// With `only` set, just that type's regression is tried; a circle is taken
/// from the ellipse branch with its semi-axes averaged.
inline InitEstimate initialize(std::span<const Point> pts,
                               std::optional<ConicType> only = std::nullopt) {
  if (pts.size() < 6) throw InitializationError("initialization needs at least 6 points");
  const ConicQuad q = fit_pseudo_inverse(pts);
  const auto candidates = candidate_angles(q);
  // Parabola first: on exact ties the four-parameter conic is kept.
  std::vector<ConicType> types = {ConicType::Parabola, ConicType::NonCircularEllipse,
                                  ConicType::Hyperbola};
  if (only) types = {*only == ConicType::Circle ? ConicType::NonCircularEllipse : *only};
  InitEstimate best;
  best.score = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double phi : candidates) {
    const std::vector<Point> rotated = rotate_clockwise(pts, phi);
    for (ConicType type : types) {
      InitBranch br{phi, type, false, -std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
      try {
        const TypeRegression reg = fit_type_regression(rotated, type);
        ConicFD conic = regression_to_conic(reg, type, phi);
        if (only == ConicType::Circle) {
          const StandardForm sf = to_standard_form(conic);
          StandardForm c;
          c.type = ConicType::Circle;
          c.center = sf.center;
          c.a = 0.5 * (sf.a + sf.b.value_or(sf.a));
          c.b = c.a;
          conic = from_standard_form(c);
        } else if (only && type_of(conic.e) != *only) {
          throw InadmissibleError("branch does not have the requested type");
        }
        std::vector<ConicFD> forms = {conic};
        if (conic.e > 0.0 && conic.e < 1.0) forms.push_back(other_focus(conic));
        for (const ConicFD& form : forms) {
          AngleEstimate ang = estimate_angles(pts, form);
          if (!std::isfinite(ang.integrated)) continue;
          br.admissible = true;
          br.loglik = std::max(br.loglik, ang.loglik);
          br.score = std::max(br.score, ang.integrated);
          if (!found || ang.integrated > best.score) {
            found = true;
            best.conic = form;
            best.type = type_of(form.e);
            best.angles = std::move(ang.angles);
            best.sigma2 = ang.sigma2;
            best.loglik = ang.loglik;
            best.score = ang.integrated;
          }
        }
      } catch (const InadmissibleError&) {
      } catch (const RankDeficientError&) {
      } catch (const DomainError&) {
      }
      best.branches.push_back(br);
    }
  }
  // An algebraic fit that is a circle to working precision: the regression
  // branches can only return e ~ 1e-8 ellipses, so offer the circle itself
  // and keep it unless something is clearly better.
  if (!only) {
    try {
      if (classify_quad(q) == ConicType::Circle) {
        const ConicFD circle = quad_to_fd(q);
        AngleEstimate ang = estimate_angles(pts, circle);
        const double slack = 1e-6 * std::max(1.0, std::abs(best.score));
        if (std::isfinite(ang.integrated) && (!found || ang.integrated >= best.score - slack)) {
          found = true;
          best.conic = circle;
          best.type = ConicType::Circle;
          best.angles = std::move(ang.angles);
          best.sigma2 = ang.sigma2;
          best.loglik = ang.loglik;
          best.score = ang.integrated;
        }
        best.branches.push_back({0.0, ConicType::Circle, std::isfinite(ang.integrated), ang.loglik,
                                 ang.integrated});
      }
    } catch (const DegenerateConicError&) {
    }
  }
  if (!found && only) return detail::initialize_projected(pts, *only);
  if (!found) throw InitializationError("no admissible conic among the candidate rotations");
  return best;
}

inline InitEstimate initialize(const NoisyDataset& d,
                               std::optional<ConicType> only = std::nullopt) {
  return initialize(d.points, only);
}

// ---------------------------------------------------------------------------
// Orthogonal distance fitting.
// ---------------------------------------------------------------------------

struct OrthogonalFit {
  ConicFD conic;
  bool converged{false};
  int iterations{0};
  std::vector<double> objective;  // value after each accepted iteration, starting with init
};

inline double orthogonal_objective(std::span<const Point> pts, const ConicFD& c) {
  double total = 0.0;
  for (const Point& p : pts) {
    const double t = nearest_point_angle(p, c);
    const Point w = fd_to_point(t, c);
    total += dot(p - w, p - w);
  }
  return total;
}

namespace detail {

inline bool valid_for_type(const ConicFD& c, ConicType type) {
  if (!(c.l > 0.0) || !std::isfinite(c.h) || !std::isfinite(c.k) || !std::isfinite(c.phi))
    return false;
  switch (type) {
    case ConicType::Circle: return c.e == 0.0;
    case ConicType::NonCircularEllipse: return c.e > 0.0 && c.e < 1.0;
    case ConicType::Parabola: return c.e == 1.0;
    case ConicType::Hyperbola: return c.e > 1.0 && std::isfinite(c.e);
  }
  return false;
}

}  // namespace detail

/// Geometric fit with the conic type held fixed: nearest-point angles
/// alternate with damped Gauss-Newton steps on the signed orthogonal
/// distances. A step is kept only if the full objective decreases.
inline OrthogonalFit fit_orthogonal_distance(std::span<const Point> pts, ConicType type,
                                             const ConicFD& init, int max_iterations = 200,
                                             double rel_tol = 1e-10) {
  OrthogonalFit out;
  ConicFD cur = init;
  if (type == ConicType::Circle) {
    cur.e = 0.0;
    cur.phi = 0.0;
  }
  if (type == ConicType::Parabola) cur.e = 1.0;
  if (!detail::valid_for_type(cur, type))
    throw std::invalid_argument("initial conic does not match the requested type");

  // Free parameters: h, k, phi, l, e (subset depending on type).
  std::vector<int> free;
  switch (type) {
    case ConicType::Circle: free = {0, 1, 3}; break;
    case ConicType::Parabola: free = {0, 1, 2, 3}; break;
    default: free = {0, 1, 2, 3, 4}; break;
  }
  const Eigen::Index p = static_cast<Eigen::Index>(free.size());
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());

  auto get = [](const ConicFD& c, int i) {
    switch (i) {
      case 0: return c.h;
      case 1: return c.k;
      case 2: return c.phi;
      case 3: return c.l;
      default: return c.e;
    }
  };
  auto set = [](ConicFD& c, int i, double v) {
    switch (i) {
      case 0: c.h = v; break;
      case 1: c.k = v; break;
      case 2: c.phi = v; break;
      case 3: c.l = v; break;
      default: c.e = v; break;
    }
  };

  double obj = orthogonal_objective(pts, cur);
  out.objective.push_back(obj);
  double lambda = 1e-3;
  for (int iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter;
    if (obj == 0.0) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd Jm(n, p);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Point datum = pts[i];
      const double t = nearest_point_angle(datum, cur);
      const Point w = fd_to_point(t, cur);
      const Point tan = fd_tangent(t, cur);
      const double tn = norm(tan);
      const Point nrm = tn > 0.0 ? Point{-tan.y / tn, tan.x / tn} : Point{1.0, 0.0};
      r(i) = dot(nrm, datum - w);
      const double denom = 1.0 + cur.e * std::cos(t);
      const double rad = cur.l / denom;
      const double ca = std::cos(t + cur.phi), sa = std::sin(t + cur.phi);
      for (Eigen::Index j = 0; j < p; ++j) {
        Point dw;
        switch (free[j]) {
          case 0: dw = {1.0, 0.0}; break;
          case 1: dw = {0.0, 1.0}; break;
          case 2: dw = {-rad * sa, rad * ca}; break;
          case 3: dw = {ca / denom, sa / denom}; break;
          default: {
            const double f = -rad * std::cos(t) / denom;
            dw = {f * ca, f * sa};
            break;
          }
        }
        Jm(i, j) = -dot(nrm, dw);
      }
    }
    const Eigen::MatrixXd JtJ = Jm.transpose() * Jm;
    const Eigen::VectorXd Jtr = Jm.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd H = JtJ;
      for (Eigen::Index j = 0; j < p; ++j) H(j, j) += lambda * std::max(JtJ(j, j), 1e-12);
      const Eigen::VectorXd step = H.ldlt().solve(-Jtr);
      ConicFD trial = cur;
      for (Eigen::Index j = 0; j < p; ++j) set(trial, free[j], get(cur, free[j]) + step(j));
      trial.phi = wrap_angle(trial.phi);
      if (detail::valid_for_type(trial, type)) {
        const double tobj = orthogonal_objective(pts, trial);
        if (tobj < obj) {
          const double rel = (obj - tobj) / obj;
          cur = trial;
          obj = tobj;
          out.objective.push_back(obj);
          lambda = std::max(lambda / 3.0, 1e-12);
          improved = true;
          if (rel < rel_tol) out.converged = true;
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!improved) {
      // No descent direction left at this damping: a stationary point.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.conic = cur;
  return out;
}

namespace detail {

/// Fallback when no regression branch has the requested type: the
/// unrestricted estimate with e moved into the type's range, polished by an
/// orthogonal-distance fit of that type.
inline InitEstimate initialize_projected(std::span<const Point> pts, ConicType type) {
  InitEstimate free = initialize(pts);
  ConicFD c = free.conic;
  switch (type) {
    case ConicType::Circle: c.e = 0.0; c.phi = 0.0; break;
    case ConicType::Parabola: c.e = 1.0; break;
    case ConicType::NonCircularEllipse: c.e = std::clamp(c.e, 0.05, 0.95); break;
    case ConicType::Hyperbola: c.e = std::max(c.e, 1.05); break;
  }
  if (type == ConicType::Hyperbola) {
    // Keep every current angle inside the narrower support.
    double tmax = 0.0;
    for (double t : free.angles) tmax = std::max(tmax, std::abs(t));
    if (tmax > kPi / 2) c.e = std::min(c.e, 0.5 * (1.0 + (-1.0 / std::cos(tmax))));
    if (!(c.e > 1.0)) c.e = 1.0 + 1e-3;
  }
  const OrthogonalFit fit = fit_orthogonal_distance(pts, type, c, 100, 1e-8);
  AngleEstimate ang = estimate_angles(pts, fit.conic);
  InitEstimate out;
  out.conic = fit.conic;
  out.type = type_of(fit.conic.e);
  out.angles = std::move(ang.angles);
  out.sigma2 = ang.sigma2;
  out.loglik = ang.loglik;
  out.score = ang.integrated;
  out.branches = std::move(free.branches);
  return out;
}

}  // namespace detail

inline OrthogonalFit fit_orthogonal_distance(const NoisyDataset& d, ConicType type,
                                             const ConicFD& init) {
  return fit_orthogonal_distance(d.points, type, init);
}

}  // namespace conic

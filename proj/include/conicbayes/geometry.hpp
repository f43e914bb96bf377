#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace conic {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegenerateConicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x{};
  double y{};
};

inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }

/// Focus-directrix description: focus (h, k), axis angle phi, semi-latus
/// rectum l and eccentricity e. A point at polar angle t (measured from the
/// axis, counterclockwise) lies at distance l / (1 + e cos t) from the focus.
struct ConicFD {
  double h{};
  double k{};
  double phi{};
  double l{1.0};
  double e{};
};

/// Coefficients of A x^2 + 2B xy + C y^2 + 2D x + 2E y + F = 0,
/// normalized to A^2 + B^2 + C^2 = 1.
struct ConicQuad {
  double A{}, B{}, C{}, D{}, E{}, F{};
};

enum class ConicType { Circle, NonCircularEllipse, Parabola, Hyperbola };

inline const char* to_string(ConicType t) {
  switch (t) {
    case ConicType::Circle: return "circle";
    case ConicType::NonCircularEllipse: return "ellipse";
    case ConicType::Parabola: return "parabola";
    case ConicType::Hyperbola: return "hyperbola";
  }
  return "unknown";
}

inline std::optional<ConicType> parse_conic_type(const std::string& s) {
  if (s == "circle") return ConicType::Circle;
  if (s == "ellipse") return ConicType::NonCircularEllipse;
  if (s == "parabola") return ConicType::Parabola;
  if (s == "hyperbola") return ConicType::Hyperbola;
  return std::nullopt;
}

/// Type implied by the eccentricity. The point masses at 0 and 1 are exact.
inline ConicType type_of(double e) {
  if (e == 0.0) return ConicType::Circle;
  if (e < 1.0) return ConicType::NonCircularEllipse;
  if (e == 1.0) return ConicType::Parabola;
  return ConicType::Hyperbola;
}

/// Center, semi-axes and axis angle. Ellipses have a >= b along the axis,
/// parabolas open towards -axis (b unused), hyperbolas are the branch that
/// opens towards -axis.
struct StandardForm {
  ConicType type{ConicType::NonCircularEllipse};
  double a{1.0};
  std::optional<double> b;
  Point center;
  double phi{};
};

inline double wrap_angle(double x) {
  double r = std::remainder(x, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  if (r > kPi) r -= kTwoPi;
  return r;
}

/// Half-width R(e) of the admissible polar-angle interval (-R, R).
inline double angle_support(double e) {
  if (e <= 1.0) return kPi;
  return std::acos(-1.0 / e);
}

inline bool in_support(double t, double e) {
  const double r = angle_support(e);
  return t > -r && t < r;
}

inline double radius(double t, const ConicFD& c) {
  const double denom = 1.0 + c.e * std::cos(t);
  if (!(denom > 0.0)) throw DomainError("polar angle outside the conic's angular support");
  return c.l / denom;
}

inline Point fd_to_point(double t, const ConicFD& c) {
  const double r = radius(t, c);
  return {c.h + r * std::cos(t + c.phi), c.k + r * std::sin(t + c.phi)};
}

/// Derivative of fd_to_point with respect to t.
inline Point fd_tangent(double t, const ConicFD& c) {
  const double denom = 1.0 + c.e * std::cos(t);
  const double r = c.l / denom;
  const double dr = c.l * c.e * std::sin(t) / (denom * denom);
  const double ca = std::cos(t + c.phi), sa = std::sin(t + c.phi);
  return {dr * ca - r * sa, dr * sa + r * ca};
}

inline Point to_standard_point(Point p, Point center, double phi) {
  const double dx = p.x - center.x, dy = p.y - center.y;
  const double c = std::cos(phi), s = std::sin(phi);
  return {c * dx + s * dy, -s * dx + c * dy};
}

inline Point from_standard_point(Point p, Point center, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  return {center.x + c * p.x - s * p.y, center.y + s * p.x + c * p.y};
}

// ---------------------------------------------------------------------------
// Standard form <-> focus-directrix.
//
// With d = (cos phi, sin phi) the point at t = 0 lies on the axis in direction
// d from the focus, so
//   ellipse   : focus = center + a e d,  l = b^2/a, e = sqrt(1 - b^2/a^2)
//   hyperbola : focus = center - a e d,  l = b^2/a, e = sqrt(1 + b^2/a^2)
//   parabola  : focus = center - a d,    l = 2a,    e = 1
// ---------------------------------------------------------------------------

inline ConicFD from_standard_form(const StandardForm& s) {
  const Point d{std::cos(s.phi), std::sin(s.phi)};
  ConicFD c;
  c.phi = wrap_angle(s.phi);
  switch (s.type) {
    case ConicType::Circle:
      c.h = s.center.x;
      c.k = s.center.y;
      c.phi = 0.0;
      c.l = s.a;
      c.e = 0.0;
      return c;
    case ConicType::NonCircularEllipse: {
      const double b = s.b.value_or(s.a);
      const double e = std::sqrt(std::max(0.0, 1.0 - (b * b) / (s.a * s.a)));
      const Point f = s.center + (s.a * e) * d;
      c.h = f.x;
      c.k = f.y;
      c.l = b * b / s.a;
      c.e = e;
      return c;
    }
    case ConicType::Hyperbola: {
      const double b = s.b.value_or(s.a);
      const double e = std::sqrt(1.0 + (b * b) / (s.a * s.a));
      const Point f = s.center - (s.a * e) * d;
      c.h = f.x;
      c.k = f.y;
      c.l = b * b / s.a;
      c.e = e;
      return c;
    }
    case ConicType::Parabola: {
      const Point f = s.center - s.a * d;
      c.h = f.x;
      c.k = f.y;
      c.l = 2.0 * s.a;
      c.e = 1.0;
      return c;
    }
  }
  return c;
}

inline StandardForm to_standard_form(const ConicFD& c) {
  StandardForm s;
  s.type = type_of(c.e);
  s.phi = c.phi;
  const Point f{c.h, c.k};
  const Point d{std::cos(c.phi), std::sin(c.phi)};
  switch (s.type) {
    case ConicType::Circle:
      s.a = c.l;
      s.b = c.l;
      s.center = f;
      break;
    case ConicType::NonCircularEllipse: {
      const double one_m = 1.0 - c.e * c.e;
      s.a = c.l / one_m;
      s.b = c.l / std::sqrt(one_m);
      s.center = f - (s.a * c.e) * d;
      break;
    }
    case ConicType::Hyperbola: {
      const double e2m1 = c.e * c.e - 1.0;
      s.a = c.l / e2m1;
      s.b = c.l / std::sqrt(e2m1);
      s.center = f + (s.a * c.e) * d;
      break;
    }
    case ConicType::Parabola:
      s.a = c.l / 2.0;
      s.center = f + s.a * d;
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Quadratic form.
// ---------------------------------------------------------------------------

struct QuadInvariants {
  double delta{};  // det of the 3x3 coefficient matrix
  double J{};      // AC - B^2
  double I{};      // A + C
};

inline QuadInvariants invariants(const ConicQuad& q) {
  QuadInvariants v;
  v.J = q.A * q.C - q.B * q.B;
  v.I = q.A + q.C;
  v.delta = q.A * (q.C * q.F - q.E * q.E) - q.B * (q.B * q.F - q.E * q.D) +
            q.D * (q.B * q.E - q.C * q.D);
  return v;
}

inline ConicQuad normalized(ConicQuad q) {
  const double s = std::sqrt(q.A * q.A + q.B * q.B + q.C * q.C);
  if (!(s > 0.0)) throw DegenerateConicError("quadratic coefficients A, B, C are all zero");
  q.A /= s; q.B /= s; q.C /= s; q.D /= s; q.E /= s; q.F /= s;
  return q;
}

inline double evaluate(const ConicQuad& q, Point p) {
  return q.A * p.x * p.x + 2.0 * q.B * p.x * p.y + q.C * p.y * p.y + 2.0 * q.D * p.x +
         2.0 * q.E * p.y + q.F;
}

/// Conic residual scale used to judge membership: the polynomial is
/// homogeneous of degree 2 in (x, y, 1), so residuals are compared with
/// max(1, |p|)^2 times the coefficient norm.
inline double evaluate_relative(const ConicQuad& q, Point p) {
  const double s = std::max(1.0, std::max(std::abs(p.x), std::abs(p.y)));
  const double coef = std::max({std::abs(q.A), std::abs(q.B), std::abs(q.C), std::abs(q.D) / s,
                                std::abs(q.E) / s, std::abs(q.F) / (s * s)});
  return evaluate(q, p) / (s * s * coef);
}

inline constexpr double kDegeneracyTol = 1e-10;
inline constexpr double kParabolaTol = 1e-8;
inline constexpr double kCircleTol = 1e-8;

/// Determinant test on the length-rescaled coefficient matrix; invariant to
/// translating or scaling the data.
inline bool is_degenerate(const ConicQuad& q) {
  const double s = std::max({1.0, std::abs(q.D), std::abs(q.E), std::sqrt(std::abs(q.F))});
  const double scaled_det = invariants(q).delta / (s * s);
  const double entry = std::max({std::abs(q.A), std::abs(q.B), std::abs(q.C), std::abs(q.D) / s,
                                 std::abs(q.E) / s, std::abs(q.F) / (s * s)});
  return std::abs(scaled_det) < kDegeneracyTol * entry * entry * entry;
}

inline ConicQuad fd_to_quad(const ConicFD& c) {
  // |p|^2 = (l - e p.d)^2 with p = x - focus.
  const double dx = std::cos(c.phi), dy = std::sin(c.phi);
  const double e2 = c.e * c.e;
  const double m11 = 1.0 - e2 * dx * dx;
  const double m12 = -e2 * dx * dy;
  const double m22 = 1.0 - e2 * dy * dy;
  const double le = c.l * c.e;
  ConicQuad q;
  q.A = m11;
  q.B = m12;
  q.C = m22;
  q.D = -(m11 * c.h + m12 * c.k) + le * dx;
  q.E = -(m12 * c.h + m22 * c.k) + le * dy;
  q.F = (m11 * c.h * c.h + 2.0 * m12 * c.h * c.k + m22 * c.k * c.k) -
        2.0 * le * (dx * c.h + dy * c.k) - c.l * c.l;
  return normalized(q);
}

inline ConicType classify_quad(const ConicQuad& raw) {
  const ConicQuad q = normalized(raw);
  if (is_degenerate(q)) throw DegenerateConicError("degenerate conic (Delta ~ 0)");
  const QuadInvariants inv = invariants(q);
  if (std::abs(inv.J) < kParabolaTol) return ConicType::Parabola;
  if (inv.J < 0.0) return ConicType::Hyperbola;
  if (inv.delta / inv.I >= 0.0) throw DegenerateConicError("imaginary ellipse (Delta/I >= 0)");
  if (std::abs(q.B) < kCircleTol && std::abs(q.A - q.C) < kCircleTol) return ConicType::Circle;
  return ConicType::NonCircularEllipse;
}

namespace detail {

/// Axis angle folded into (-pi/2, pi/2].
inline double fold_half_turn(double a) {
  a = wrap_angle(a);
  if (a > kPi / 2) a -= kPi;
  if (a <= -kPi / 2) a += kPi;
  return a;
}

}  // namespace detail

/// Inverse of fd_to_quad. Ellipses and hyperbolas report phi in (-pi/2, pi/2]
/// (for hyperbolas this selects the branch), circles report phi = 0.
inline ConicFD quad_to_fd(const ConicQuad& raw) {
  const ConicQuad q = normalized(raw);
  const ConicType type = classify_quad(q);

  // Principal axes of [[A, B], [B, C]]: theta_big carries the larger eigenvalue.
  const double half_diff = 0.5 * (q.A - q.C);
  const double rad = std::hypot(half_diff, q.B);
  const double mid = 0.5 * (q.A + q.C);
  const double lam_big = mid + rad, lam_small = mid - rad;
  const double theta_big = 0.5 * std::atan2(2.0 * q.B, q.A - q.C);
  const Point v_big{std::cos(theta_big), std::sin(theta_big)};
  const Point v_small{-v_big.y, v_big.x};

  if (type == ConicType::Parabola) {
    // Null direction n; mu is the remaining eigenvalue.
    const bool big_is_null = std::abs(lam_big) < std::abs(lam_small);
    const Point n = big_is_null ? v_big : v_small;
    const double mu = big_is_null ? lam_small : lam_big;
    const Point n_perp{-n.y, n.x};
    const Point g{q.D, q.E};
    const double gu = dot(g, n), gv = dot(g, n_perp);
    if (gu == 0.0) throw DegenerateConicError("parabola without linear term along its axis");
    const double a = std::abs(gu / (2.0 * mu));
    const Point d = (mu / gu > 0.0) ? n : Point{-n.x, -n.y};
    const double v0 = -gv / mu;
    const double u0 = (gv * gv / mu - q.F) / (2.0 * gu);
    StandardForm s;
    s.type = ConicType::Parabola;
    s.a = a;
    s.center = u0 * n + v0 * n_perp;
    s.phi = std::atan2(d.y, d.x);
    return from_standard_form(s);
  }

  const double J = q.A * q.C - q.B * q.B;
  const Point center{(q.B * q.E - q.C * q.D) / J, (q.B * q.D - q.A * q.E) / J};
  const double f_center = q.F + q.D * center.x + q.E * center.y;

  StandardForm s;
  s.center = center;
  if (type == ConicType::Circle) {
    const double r2 = -f_center / mid;
    if (!(r2 > 0.0)) throw DegenerateConicError("circle with non-positive squared radius");
    s.type = ConicType::Circle;
    s.a = std::sqrt(r2);
    s.b = s.a;
    return from_standard_form(s);
  }
  if (type == ConicType::NonCircularEllipse) {
    const double a2 = -f_center / lam_small;  // smaller eigenvalue -> major axis
    const double b2 = -f_center / lam_big;
    if (!(a2 > 0.0 && b2 > 0.0)) throw DegenerateConicError("imaginary ellipse");
    s.type = ConicType::NonCircularEllipse;
    s.a = std::sqrt(a2);
    s.b = std::sqrt(b2);
    s.phi = detail::fold_half_turn(std::atan2(v_small.y, v_small.x));
    return from_standard_form(s);
  }
  // Hyperbola: the transverse axis is the eigen-direction with -f/lambda > 0.
  const bool big_transverse = (-f_center / lam_big) > 0.0;
  const double lam_t = big_transverse ? lam_big : lam_small;
  const double lam_o = big_transverse ? lam_small : lam_big;
  const Point vt = big_transverse ? v_big : v_small;
  s.type = ConicType::Hyperbola;
  s.a = std::sqrt(-f_center / lam_t);
  s.b = std::sqrt(f_center / lam_o);
  s.phi = detail::fold_half_turn(std::atan2(vt.y, vt.x));
  return from_standard_form(s);
}

/// The same ellipse described from its other focus (phi turned by pi).
inline ConicFD other_focus(const ConicFD& c) {
  if (!(c.e > 0.0 && c.e < 1.0)) return c;
  StandardForm s = to_standard_form(c);
  s.phi = wrap_angle(s.phi + kPi);
  return from_standard_form(s);
}

/// Same conic expressed in the identifiability convention used by
/// quad_to_fd (the other focus of an ellipse, or the other branch of a
/// hyperbola, when phi falls outside (-pi/2, pi/2]).
inline ConicFD canonical_fd(const ConicFD& c) {
  const ConicType type = type_of(c.e);
  if (type == ConicType::Circle) return {c.h, c.k, 0.0, c.l, 0.0};
  ConicFD out = c;
  out.phi = wrap_angle(c.phi);
  if (type == ConicType::Parabola) return out;
  if (out.phi > -kPi / 2 && out.phi <= kPi / 2) return out;
  StandardForm s = to_standard_form(c);
  s.phi = wrap_angle(s.phi + kPi);
  // The other focus/branch: same center and axes, direction reversed.
  return from_standard_form(s);
}

// ---------------------------------------------------------------------------
// Nearest conic point.
// ---------------------------------------------------------------------------

namespace detail {

inline double squared_distance(Point datum, double t, const ConicFD& c) {
  const Point w = fd_to_point(t, c);
  const double dx = datum.x - w.x, dy = datum.y - w.y;
  return dx * dx + dy * dy;
}

/// d/dt of the squared distance.
inline double squared_distance_slope(Point datum, double t, const ConicFD& c) {
  const Point w = fd_to_point(t, c);
  const Point dw = fd_tangent(t, c);
  return -2.0 * ((datum.x - w.x) * dw.x + (datum.y - w.y) * dw.y);
}

}  // namespace detail

inline constexpr int kNearestGrid = 512;
inline constexpr double kNearestTol = 1e-10;

/// Polar angle of the conic point closest to `datum`: best local minimum
/// among the 512-point grid seeds, refined by golden-section search and a
/// safeguarded Newton polish on the slope.
inline double nearest_point_angle(Point datum, const ConicFD& c) {
  const bool periodic = c.e < 1.0;
  const double R = angle_support(c.e);
  // Open interval for parabolas/hyperbolas; keep a margin where r blows up.
  const double lo_bound = periodic ? -kPi : -R + 1e-12 * R;
  const double hi_bound = periodic ? kPi : R - 1e-12 * R;
  const double step = 2.0 * R / kNearestGrid;

  std::array<double, kNearestGrid> grid_t{};
  std::array<double, kNearestGrid> grid_f{};
  for (int i = 0; i < kNearestGrid; ++i) {
    grid_t[i] = -R + (i + 0.5) * step;
    grid_f[i] = detail::squared_distance(datum, grid_t[i], c);
  }

  auto eval = [&](double t) {
    return detail::squared_distance(datum, periodic ? wrap_angle(t) : t, c);
  };

  double best_t = grid_t[0];
  double best_f = grid_f[0];
  for (int i = 0; i < kNearestGrid; ++i) {
    const int ip = (i + 1 < kNearestGrid) ? i + 1 : (periodic ? 0 : -1);
    const int im = (i > 0) ? i - 1 : (periodic ? kNearestGrid - 1 : -1);
    const bool local_min =
        (ip < 0 || grid_f[i] <= grid_f[ip]) && (im < 0 || grid_f[i] <= grid_f[im]);
    if (!local_min) continue;

    double a = grid_t[i] - step, b = grid_t[i] + step;
    if (!periodic) {
      a = std::max(a, lo_bound);
      b = std::min(b, hi_bound);
    }
    // Golden-section search on [a, b].
    constexpr double g = 0.6180339887498949;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    while (b - a > kNearestTol) {
      if (f1 <= f2) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - g * (b - a); f1 = eval(x1);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + g * (b - a); f2 = eval(x2);
      }
    }
    double t = 0.5 * (a + b);
    double f = eval(t);
    // Newton on the slope; accept only improving steps that stay near the bracket.
    const double lo = a - 4 * step, hi = b + 4 * step;
    for (int it = 0; it < 6; ++it) {
      const double tt = periodic ? wrap_angle(t) : t;
      const double s0 = detail::squared_distance_slope(datum, tt, c);
      const double hstep = 1e-6;
      double tp = tt + hstep, tm = tt - hstep;
      if (!periodic) {
        tp = std::min(tp, hi_bound);
        tm = std::max(tm, lo_bound);
      }
      const double curv = (detail::squared_distance_slope(datum, tp, c) -
                           detail::squared_distance_slope(datum, tm, c)) / (tp - tm);
      if (!(curv > 0.0)) break;
      double tn = t - s0 / curv;
      if (tn < lo || tn > hi) break;
      if (!periodic && (tn <= lo_bound || tn >= hi_bound)) break;
      const double fn = eval(tn);
      if (!(fn <= f)) break;
      const bool done = std::abs(tn - t) < 1e-15 * std::max(1.0, std::abs(t));
      t = tn;
      f = fn;
      if (done) break;
    }
    if (f < best_f) {
      best_f = f;
      best_t = t;
    }
    if (grid_f[i] < best_f) {
      best_f = grid_f[i];
      best_t = grid_t[i];
    }
  }
  return periodic ? wrap_angle(best_t) : best_t;
}

inline double distance_to_conic(Point datum, const ConicFD& c) {
  return std::sqrt(detail::squared_distance(datum, nearest_point_angle(datum, c), c));
}

}  // namespace conic

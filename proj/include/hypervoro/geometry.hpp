#pragma once

// Poincare ball model of hyperbolic d-space. Points are stored by their
// euclidean coordinates in the open unit ball; all distances, volumes and
// constructions below are hyperbolic unless the name says euclidean.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypervoro {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Points this close to the ideal boundary are rejected at construction.
inline constexpr double kMaxPointNorm = 1.0 - 1e-12;

namespace detail {

// acosh(1 + u) for u >= 0 without cancellation near u = 0.
// log(sinh(x)) for x > 0, stable where sinh overflows.
inline double log_sinh(double x) {
  if (x < 20.0) return std::log(std::sinh(x));
  return x - 0.6931471805599453 + std::log1p(-std::exp(-2.0 * x));
}

inline double acosh1p(double u) {
  if (u < 0) u = 0;
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

inline double sq(double x) { return x * x; }

// Mobius translation of the unit disk sending a to 0 (d = 2 only).
inline std::complex<double> mobius_to_origin(std::complex<double> a,
                                             std::complex<double> z) {
  return (z - a) / (1.0 - std::conj(a) * z);
}

// Inverse of mobius_to_origin(a, .): sends 0 back to a.
inline std::complex<double> mobius_from_origin(std::complex<double> a,
                                               std::complex<double> z) {
  return (z + a) / (1.0 + std::conj(a) * z);
}

// Golden-section minimum of a convex function on [a, b].
inline std::pair<double, double> minimize_convex(
    const std::function<double(double)>& f, double a, double b,
    double tol = 1e-12) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  double xm = 0.5 * (a + b);
  return {xm, f(xm)};
}

// Adaptive Simpson on [a, b], relative tolerance on the total.
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double fa, double b, double fb, double m, double fm,
                          double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double rel_tol) {
  if (b <= a) return 0.0;
  double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double tol = std::abs(whole) * rel_tol + 1e-300;
  return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 60);
}

inline double norm_sq(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return s;
}

// Raw-coordinate distance; callers guarantee both points are inside the ball.
inline double hyp_distance_raw(std::span<const double> a,
                               std::span<const double> b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += sq(a[i] - b[i]);
  double denom = (1.0 - norm_sq(a)) * (1.0 - norm_sq(b));
  return 2.0 * std::asinh(std::sqrt(diff / denom));
}

inline double hyp_distance_raw2(double ax, double ay, double bx, double by) {
  double diff = sq(ax - bx) + sq(ay - by);
  double denom = (1.0 - ax * ax - ay * ay) * (1.0 - bx * bx - by * by);
  return 2.0 * std::asinh(std::sqrt(diff / denom));
}

}  // namespace detail

// Point of the open unit ball, d >= 2. Construction enforces the model's
// domain; everything downstream may assume validity.
class HPoint {
 public:
  explicit HPoint(std::vector<double> coords) : c_(std::move(coords)) {
    if (c_.size() < 2)
      throw std::invalid_argument("HPoint: dimension must be >= 2");
    double n2 = detail::norm_sq(c_);
    if (!std::isfinite(n2) || n2 >= kMaxPointNorm * kMaxPointNorm)
      throw std::domain_error("HPoint: norm must be < 1 - 1e-12");
  }
  HPoint(double x, double y) : HPoint(std::vector<double>{x, y}) {}

  // d = 2 point at hyperbolic radius rho and polar angle theta.
  static HPoint from_polar(double rho, double theta) {
    double e = std::tanh(0.5 * rho);
    return HPoint(e * std::cos(theta), e * std::sin(theta));
  }

  std::size_t dim() const { return c_.size(); }
  double operator[](std::size_t i) const { return c_[i]; }
  std::span<const double> coords() const { return c_; }
  double norm_sq() const { return detail::norm_sq(c_); }
  double norm() const { return std::sqrt(norm_sq()); }

 private:
  std::vector<double> c_;
};

// Half-open annulus around the origin: inner <= d(0, y) < outer.
struct Annulus {
  double inner = 0.0;
  double outer = 0.0;
};

inline double hyp_distance(const HPoint& a, const HPoint& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("hyp_distance: dimension mismatch");
  return detail::hyp_distance_raw(a.coords(), b.coords());
}

// Euclidean radius of the hyperbolic sphere S(0, r): S_p(0,r) = S_e(0, tanh(r/2)).
inline double euclidean_radius(double hyp_r) {
  if (!(hyp_r >= 0.0) || !std::isfinite(hyp_r))
    throw std::domain_error("euclidean_radius: radius must be >= 0");
  return std::tanh(0.5 * hyp_r);
}

inline double hyperbolic_radius(double eucl_r) {
  if (!(eucl_r >= 0.0) || eucl_r >= 1.0)
    throw std::domain_error("hyperbolic_radius: radius must be in [0, 1)");
  return 2.0 * std::atanh(eucl_r);
}

// Hyperbolic distance from the origin.
inline double hyp_radius_of(const HPoint& p) {
  return 2.0 * std::atanh(p.norm());
}

// Polar angle in [0, 2*pi), d = 2.
inline double angle_of(double x, double y) {
  double a = std::atan2(y, x);
  return a < 0.0 ? a + kTwoPi : a;
}
inline double angle_of(const HPoint& p) { return angle_of(p[0], p[1]); }

// Surface measure of the euclidean unit (d-1)-sphere.
inline double sphere_surface(int d) {
  return 2.0 * std::exp(0.5 * d * std::log(kPi) - std::lgamma(0.5 * d));
}

// Volume of the hyperbolic ball B(0, r) in H^d. d = 2 in closed form,
// d >= 3 by adaptive quadrature of sigma_{d-1} * integral sinh^{d-1}.
inline double hyp_ball_volume(double r, int d) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::domain_error("hyp_ball_volume: radius must be >= 0");
  if (d < 2) throw std::invalid_argument("hyp_ball_volume: d must be >= 2");
  if (r == 0.0) return 0.0;
  if (d == 2) return 4.0 * kPi * detail::sq(std::sinh(0.5 * r));
  auto integrand = [d](double t) { return std::pow(std::sinh(t), d - 1); };
  return sphere_surface(d) * detail::integrate(integrand, 0.0, r, 1e-10);
}

// Inner boundary included, outer excluded.
inline bool in_annulus(const HPoint& y, const Annulus& ann) {
  if (!(ann.inner >= 0.0) || !(ann.outer >= ann.inner))
    throw std::invalid_argument("in_annulus: need 0 <= inner <= outer");
  double r = hyp_radius_of(y);
  return r >= ann.inner && r < ann.outer;
}

// Distance between polar points (r1, .) and (r2, .) with angle gap dphi.
// Stable form of the hyperbolic law of cosines.
inline double dist_polar(double r1, double r2, double dphi) {
  double u = 2.0 * detail::sq(std::sinh(0.5 * (r1 - r2))) +
             2.0 * std::sinh(r1) * std::sinh(r2) * detail::sq(std::sin(0.5 * dphi));
  return detail::acosh1p(u);
}

// Distance from the polar point (rho, .) to the radial geodesic segment
// {angle offset dphi, radius in [r1, r2]}. dphi must lie in [0, pi].
inline double dist_to_radial_segment(double rho, double dphi, double r1,
                                     double r2) {
  if (rho == 0.0) return r1;
  double cosd = std::cos(dphi);
  double foot = cosd > 0.0 ? std::atanh(std::tanh(rho) * cosd) : -1.0;
  if (foot <= r1) return dist_polar(rho, r1, dphi);
  if (foot >= r2) return dist_polar(rho, r2, dphi);
  return std::asinh(std::sinh(rho) * std::sin(dphi));
}

// Euclidean center and radius of the hyperbolic ball B(center, r).
struct EuclideanDisk {
  double cx = 0.0, cy = 0.0, radius = 0.0;
};

inline EuclideanDisk ball_to_euclidean(const HPoint& center, double r) {
  if (center.dim() != 2)
    throw std::invalid_argument("ball_to_euclidean: d = 2 only");
  double t = std::tanh(0.5 * r);
  double c2 = center.norm_sq();
  double denom = 1.0 - c2 * t * t;
  double f = (1.0 - t * t) / denom;
  return {center[0] * f, center[1] * f, t * (1.0 - c2) / denom};
}

// Geodesic segment between two d = 2 points, parametrized by hyperbolic
// arc length in [0, length()].
class GeodesicD2 {
 public:
  GeodesicD2(const HPoint& a, const HPoint& b)
      : u_(a[0], a[1]) {
    if (a.dim() != 2 || b.dim() != 2)
      throw std::invalid_argument("GeodesicD2: d = 2 only");
    std::complex<double> w =
        detail::mobius_to_origin(u_, std::complex<double>(b[0], b[1]));
    double wn = std::abs(w);
    len_ = 2.0 * std::atanh(wn);
    dir_ = wn > 0.0 ? w / wn : std::complex<double>(1.0, 0.0);
  }

  double length() const { return len_; }

  HPoint point_at(double ell) const {
    std::complex<double> z =
        detail::mobius_from_origin(u_, std::tanh(0.5 * ell) * dir_);
    return HPoint(z.real(), z.imag());
  }

  // Minimum of d(0, .) over the segment; d(0, .) is convex along geodesics.
  std::pair<double, double> min_origin_distance(double tol = 1e-12) const {
    auto f = [this](double ell) { return hyp_radius_of(point_at(ell)); };
    auto [ell, val] = detail::minimize_convex(f, 0.0, len_, tol);
    // Endpoints can beat the interior probe when the minimum sits on them.
    double f0 = f(0.0), f1 = f(len_);
    if (f0 <= val && f0 <= f1) return {0.0, f0};
    if (f1 <= val) return {len_, f1};
    return {ell, val};
  }

 private:
  std::complex<double> u_;
  std::complex<double> dir_;
  double len_ = 0.0;
};

// Hyperbolic circumcenter of three d = 2 points: the hyperbolic center of
// their euclidean circumcircle, provided that circle lies inside the open
// unit disk (otherwise the circumcenter is ideal/hyperideal: nullopt).
// Throws on collinear input.
inline std::optional<HPoint> hyp_circumcenter_d2(const HPoint& a,
                                                 const HPoint& b,
                                                 const HPoint& c) {
  if (a.dim() != 2 || b.dim() != 2 || c.dim() != 2)
    throw std::invalid_argument("hyp_circumcenter_d2: d = 2 only");
  double bx = b[0] - a[0], by = b[1] - a[1];
  double cx = c[0] - a[0], cy = c[1] - a[1];
  double cross = bx * cy - by * cx;
  double scale = std::sqrt((bx * bx + by * by) * (cx * cx + cy * cy));
  if (std::abs(cross) <= 1e-14 * scale)
    throw std::domain_error("hyp_circumcenter_d2: collinear points");
  double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  double d = 2.0 * cross;
  double ux = (cy * b2 - by * c2) / d;
  double uy = (bx * c2 - cx * b2) / d;
  double re = std::sqrt(ux * ux + uy * uy);
  double ex = a[0] + ux, ey = a[1] + uy;
  double en = std::sqrt(ex * ex + ey * ey);
  if (en + re >= 1.0) return std::nullopt;  // not a hyperbolic circle
  double rho = std::atanh(en - re) + std::atanh(en + re);
  if (en < 1e-300) return HPoint(0.0, 0.0);
  double t = std::tanh(0.5 * rho);
  return HPoint(t * ex / en, t * ey / en);
}

}  // namespace hypervoro

#pragma once

// Polar discretization of the hyperbolic plane into annular sectors of
// uniformly bounded area. Annulus k spans radii [2k*eps, 2(k+1)*eps) and is
// cut into N_k equal wedges, N_k chosen so each sector has area at most
// 4*pi*sinh(eps)^2. Annulus 0 stays whole: one degenerate sector B(0, 2 eps)
// represented by the origin.

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hypervoro/geometry.hpp"

namespace hypervoro {

struct SectorId {
  std::uint32_t k = 0;
  std::uint32_t l = 0;
  friend auto operator<=>(const SectorId&, const SectorId&) = default;
};

class SectorGrid {
 public:
  explicit SectorGrid(double epsilon) : eps_(epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw std::domain_error("SectorGrid: epsilon must be > 0");
  }

  double epsilon() const { return eps_; }

  // Wedge count per annulus. sinh((2k+1) eps) sinh(eps) is the annulus area
  // over 4 pi, so this pick caps the sector area by 4 pi sinh(eps)^2. The
  // count grows like exp(2 k eps); the real-valued form stays finite for
  // any k, the integer form is for annuli that actually get enumerated.
  double sectors_in_annulus_real(std::uint32_t k) const {
    if (k == 0) return 1.0;
    double ratio = std::exp(log_count_ratio(k));
    return ratio < 9.007199254740992e15 ? std::floor(ratio) + 1.0 : ratio;
  }

  std::uint32_t sectors_in_annulus(std::uint32_t k) const {
    double n = sectors_in_annulus_real(k);
    if (!(n < 4294967295.0))
      throw std::overflow_error("SectorGrid: annulus too far out to enumerate");
    return std::uint32_t(n);
  }

  Annulus annulus(std::uint32_t k) const {
    return Annulus{2.0 * k * eps_, 2.0 * (k + 1.0) * eps_};
  }

  double angular_width(std::uint32_t k) const {
    return kTwoPi / double(sectors_in_annulus(k));
  }

  double sector_area(std::uint32_t k) const {
    double a = (2.0 * k + 1.0) * eps_;
    double n = sectors_in_annulus_real(k);
    if (a < 350.0)
      return 4.0 * kPi * std::sinh(a) * std::sinh(eps_) / n;
    // Far annuli: evaluate in logs to dodge sinh overflow. Once the wedge
    // count saturates past integer resolution the area equals the cap.
    if (n < 9.007199254740992e15)
      return 4.0 * kPi *
             std::exp(detail::log_sinh(a) + detail::log_sinh(eps_) -
                      std::log(n));
    return 4.0 * kPi * std::exp(2.0 * detail::log_sinh(eps_));
  }

  SectorId locate(double rho, double phi) const {
    if (!(rho >= 0.0)) throw std::domain_error("SectorGrid::locate: rho < 0");
    auto k = std::uint32_t(std::floor(rho / (2.0 * eps_)));
    std::uint32_t n = sectors_in_annulus(k);
    auto l = std::uint32_t(std::floor(phi / kTwoPi * double(n)));
    if (l >= n) l = n - 1;  // phi just below 2 pi can round up
    return {k, l};
  }
  SectorId locate(const HPoint& p) const {
    return locate(hyp_radius_of(p), angle_of(p));
  }

  // Representative point: inner-boundary radius, first cut angle.
  HPoint representative(SectorId id) const {
    if (id.k == 0) return HPoint(0.0, 0.0);
    return HPoint::from_polar(2.0 * id.k * eps_,
                              kTwoPi * id.l / double(sectors_in_annulus(id.k)));
  }

  double min_origin_distance(SectorId id) const { return 2.0 * id.k * eps_; }

  // Exact hyperbolic distance from a point (polar form) to the closed
  // sector. For a fixed radius the polar distance grows with the angular
  // offset, so the nearest sector point is either at the query's own angle
  // (radial gap) or on the closer bounding radial segment.
  double distance_to(SectorId id, double rho, double phi) const {
    Annulus ann = annulus(id.k);
    if (id.k == 0) return std::max(0.0, rho - ann.outer);
    std::uint32_t n = sectors_in_annulus(id.k);
    double width = kTwoPi / double(n);
    double lo = width * id.l;
    double rel = phi - lo;
    rel -= kTwoPi * std::floor(rel / kTwoPi);  // into [0, 2 pi)
    if (rel <= width) {
      if (rho < ann.inner) return ann.inner - rho;
      if (rho > ann.outer) return rho - ann.outer;
      return 0.0;
    }
    double d_lo = kTwoPi - rel;
    double d_hi = rel - width;
    return dist_to_radial_segment(rho, std::min(d_lo, d_hi), ann.inner,
                                  ann.outer);
  }
  double distance_to(SectorId id, const HPoint& p) const {
    return distance_to(id, hyp_radius_of(p), angle_of(p));
  }

  double log_count_ratio(std::uint32_t k) const {
    return detail::log_sinh((2.0 * k + 1.0) * eps_) - detail::log_sinh(eps_);
  }

  // Every sector whose closure meets the closed ball B(0, r); that is all
  // wedges of annuli with inner radius <= r.
  std::vector<SectorId> sectors_touching_ball(double r) const {
    if (!(r >= 0.0))
      throw std::domain_error("SectorGrid::sectors_touching_ball: r < 0");
    std::vector<SectorId> out;
    for (std::uint32_t k = 0; 2.0 * k * eps_ <= r; ++k) {
      std::uint32_t n = sectors_in_annulus(k);
      for (std::uint32_t l = 0; l < n; ++l) out.push_back({k, l});
    }
    return out;
  }

 private:
  double eps_;
};

}  // namespace hypervoro

#pragma once

// Finite sampling windows with an exact coverage certificate.
//
// A trial samples the process on B(0, R) and must answer questions that
// are measurable with respect to the infinite-volume configuration inside
// B(0, n). Every nucleus outside the window is at distance >= R - n from
// every point of B(0, n), so if the coverage radius of B(0, n) under the
// windowed nuclei is strictly below R - n, no outside nucleus can win a
// distance comparison against a point of the ball: ownership, bisector
// arcs, and sphere crossings inside B(0, n) then agree exactly with the
// infinite-volume tessellation. When the certificate fails the window is
// extended by an independent annulus ring and retried; the extension uses
// a fresh substream per ring, so the law of the combined configuration is
// still the restriction of the same Poisson process.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "hypervoro/geometry.hpp"
#include "hypervoro/rng.hpp"
#include "hypervoro/sampling.hpp"
#include "hypervoro/tessellation.hpp"

namespace hypervoro {

// Radius at which a fixed-window scheme would declare the ball B(0, t)
// "safely covered": the smallest t with exp(-lambda vol(t)) <= tol, floored
// by n and scaled by 4. Reported for diagnostics; estimators rely on the
// per-trial certificate instead.
inline double truncation_radius(double lambda, double n, int d, double tol) {
  if (!(lambda > 0.0) || !(tol > 0.0) || tol >= 1.0 || n < 0.0)
    throw std::domain_error("truncation_radius: bad parameters");
  double target = std::log(1.0 / tol) / lambda;  // required ball volume
  double t;
  if (d == 2) {
    t = 2.0 * std::asinh(std::sqrt(target / (4.0 * kPi)));
  } else {
    double lo = 0.0, hi = 1.0;
    while (hyp_ball_volume(hi, d) < target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (hyp_ball_volume(mid, d) < target ? lo : hi) = mid;
    }
    t = 0.5 * (lo + hi);
  }
  return 4.0 * std::max(n, t);
}

struct WindowPolicy {
  double slack0 = 0.0;  // initial window = n + slack; 0 = pick from lambda
  double ring_width = 0.75;
  int max_rings = 8;          // extension rings past the initial window
  double core_radius = 2.0;   // owner-resolving inner annulus, sampled first
};

// Initial slack sized so that lambda vol(slack) >= 16: coverage of the
// inner ball then exceeds the slack only with probability small enough
// that ring escalation stays rare.
inline double default_window_slack(double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("default_window_slack");
  return std::max(1.9, 2.0 * std::asinh(std::sqrt(16.0 / (4.0 * kPi * lambda))));
}

// Index of the nucleus owning the origin (nearest; ties to the lowest
// index). Exact in any nonempty window: extension rings only ever add
// nuclei farther out than the current window radius.
inline std::uint32_t origin_owner(const ColoredConfig& cfg) {
  std::uint32_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    double d2 = cfg.coords[2 * i] * cfg.coords[2 * i] +
                cfg.coords[2 * i + 1] * cfg.coords[2 * i + 1];
    if (d2 < bd) {
      bd = d2;
      best = std::uint32_t(i);
    }
  }
  return best;
}

struct CertifiedSample {
  ColoredConfig cfg;
  std::optional<Tessellation> tess;  // absent when the shortcut fired
  std::uint32_t owner0;              // cell owning the origin
  double coverage;                   // NaN when uncertified
  int rings;                         // extension rings consumed past the
                                     // initial window (0 = none needed)
  int next_ring;                     // substream index a further extension
                                     // annulus would draw from
  bool certified;
};

// Samples a window certified exact on B(0, n). The annulus schedule is an
// owner-resolving core, the remainder of the initial window, then
// fixed-width extensions; annulus i draws from stream.child(i), so a trial
// that stops early and a trial that escalates share every annulus they
// both sampled. If shortcut_mark_above >= 0 and the origin's owner carries
// a mark above it, the sample is returned uncertified and without a
// tessellation as soon as the owner is known: ownership at the origin is
// exact in any nonempty window, which is all a caller needs to declare
// every event of interest false. The core makes that exit cheap.
inline CertifiedSample sample_certified_window(
    double lambda, double n, const RngStream& stream,
    const WindowPolicy& policy = {}, double shortcut_mark_above = -1.0) {
  if (!(n >= 0.0)) throw std::domain_error("sample_certified_window: n < 0");
  double slack =
      policy.slack0 > 0.0 ? policy.slack0 : default_window_slack(lambda);
  double r0 = n + slack;
  ColoredConfig cfg;
  cfg.dim = 2;
  cfg.lambda = lambda;
  cfg.seed = stream.identity();
  double radius = 0.0;
  double tried = -1.0;
  std::optional<std::uint32_t> owner;
  double owner_dist = std::numeric_limits<double>::infinity();
  for (int ring = 0; ring <= 1 + policy.max_rings; ++ring) {
    double next = ring == 0   ? std::min(policy.core_radius, r0)
                  : ring == 1 ? r0
                              : radius + policy.ring_width;
    if (next > radius) {
      RngStream sub = stream.child(std::uint64_t(ring));
      sample_ppp_annulus_into(cfg, Annulus{radius, next}, sub);
      radius = next;
      cfg.window_radius = radius;
    }
    if (cfg.size() == 0) continue;
    if (!owner) {
      owner = origin_owner(cfg);
      owner_dist = hyp_radius_of(cfg.point(*owner));
    }
    if (shortcut_mark_above >= 0.0 && cfg.mark(*owner) > shortcut_mark_above)
      return {std::move(cfg), std::nullopt, *owner,
              std::numeric_limits<double>::quiet_NaN(),
              std::max(0, ring - 1), ring + 1, false};
    // Coverage of the ball is at least the origin's own nearest-nucleus
    // distance; while that already exceeds the margin, skip the build.
    if (radius - n <= owner_dist) continue;
    if (radius == tried) continue;
    tried = radius;
    Tessellation tess(cfg);
    double cov = tess.coverage_radius(n);
    if (cov < radius - n)
      return {std::move(cfg), std::move(tess), *owner, cov,
              std::max(0, ring - 1), ring + 1, true};
  }
  throw std::runtime_error(
      "sample_certified_window: certificate failed at the ring cap");
}

}  // namespace hypervoro

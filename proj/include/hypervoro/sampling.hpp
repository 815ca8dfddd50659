#pragma once

// Marked Poisson point process sampling on hyperbolic balls and annuli.
// Points carry independent Uniform[0,1) marks; a nucleus is black at
// parameter p iff mark <= p, so one sample serves every p monotonically.

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypervoro/geometry.hpp"
#include "hypervoro/io.hpp"
#include "hypervoro/rng.hpp"

namespace hypervoro {

struct ColoredConfig {
  int dim = 2;
  double lambda = 1.0;
  double window_radius = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> coords;  // dim * size, euclidean ball coordinates
  std::vector<double> marks;

  std::size_t size() const { return marks.size(); }
  double x(std::size_t i) const { return coords[dim * i]; }
  double y(std::size_t i) const { return coords[dim * i + 1]; }
  double mark(std::size_t i) const { return marks[i]; }

  HPoint point(std::size_t i) const {
    return HPoint(std::vector<double>(coords.begin() + dim * i,
                                      coords.begin() + dim * (i + 1)));
  }

  void append(const HPoint& p, double m) {
    if (int(p.dim()) != dim)
      throw std::invalid_argument("ColoredConfig::append: dimension mismatch");
    for (std::size_t k = 0; k < p.dim(); ++k) coords.push_back(p[k]);
    marks.push_back(m);
  }
};

namespace detail {

// d = 2 radial CDF inverts in closed form: the volume of B(0,r) is
// proportional to sinh^2(r/2).
inline double radial_from_uniform_d2(double u, const Annulus& ann) {
  double si = std::sinh(0.5 * ann.inner);
  double so = std::sinh(0.5 * ann.outer);
  double s2 = si * si + u * (so * so - si * si);
  return 2.0 * std::asinh(std::sqrt(s2));
}

// d >= 3 falls back to bisection on the volume ratio.
inline double radial_from_uniform_bisect(double u, const Annulus& ann, int d) {
  double vol_lo = hyp_ball_volume(ann.inner, d);
  double target = vol_lo + u * (hyp_ball_volume(ann.outer, d) - vol_lo);
  double lo = ann.inner, hi = ann.outer;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    (hyp_ball_volume(mid, d) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double radial_from_uniform(double u, const Annulus& ann, int d) {
  return d == 2 ? radial_from_uniform_d2(u, ann)
                : radial_from_uniform_bisect(u, ann, d);
}

// Unit direction. d = 2 by angle, d >= 3 by normalized gaussians made from
// Box-Muller pairs so the draw count per point is fixed.
inline std::vector<double> random_direction(int d, RngStream& rng) {
  std::vector<double> v(d);
  if (d == 2) {
    double th = kTwoPi * rng.next_double();
    v[0] = std::cos(th);
    v[1] = std::sin(th);
    return v;
  }
  for (;;) {
    double n2 = 0.0;
    for (int i = 0; i < d; i += 2) {
      double u1 = rng.next_double(), u2 = rng.next_double();
      double rad = std::sqrt(-2.0 * std::log1p(-u1));
      double a = kTwoPi * u2;
      v[i] = rad * std::cos(a);
      if (i + 1 < d) v[i + 1] = rad * std::sin(a);
    }
    for (double c : v) n2 += c * c;
    if (n2 > 0.0) {
      double inv = 1.0 / std::sqrt(n2);
      for (double& c : v) c *= inv;
      return v;
    }
  }
}

}  // namespace detail

inline double expected_count(double lambda, const Annulus& ann, int d) {
  if (!(lambda >= 0.0)) throw std::domain_error("expected_count: lambda < 0");
  return lambda * (hyp_ball_volume(ann.outer, d) - hyp_ball_volume(ann.inner, d));
}
inline double expected_count(double lambda, double window_radius, int d) {
  return expected_count(lambda, Annulus{0.0, window_radius}, d);
}

// Appends one PPP draw restricted to the annulus. Draw order per point is
// radius, direction, mark; the stream fully determines the result.
inline void sample_ppp_annulus_into(ColoredConfig& cfg, const Annulus& ann,
                                    RngStream& rng) {
  double mean = expected_count(cfg.lambda, ann, cfg.dim);
  std::uint64_t count = rng.poisson(mean);
  cfg.coords.reserve(cfg.coords.size() + cfg.dim * count);
  cfg.marks.reserve(cfg.marks.size() + count);
  for (std::uint64_t i = 0; i < count; ++i) {
    double r = detail::radial_from_uniform(rng.next_double(), ann, cfg.dim);
    std::vector<double> dir = detail::random_direction(cfg.dim, rng);
    double rho = std::tanh(0.5 * r);
    for (double c : dir) cfg.coords.push_back(rho * c);
    cfg.marks.push_back(rng.next_double());
  }
  cfg.window_radius = std::max(cfg.window_radius, ann.outer);
}

inline ColoredConfig sample_ppp(double lambda, double window_radius, int d,
                                RngStream& rng) {
  if (d < 2) throw std::invalid_argument("sample_ppp: d must be >= 2");
  ColoredConfig cfg;
  cfg.dim = d;
  cfg.lambda = lambda;
  cfg.seed = rng.identity();
  sample_ppp_annulus_into(cfg, Annulus{0.0, window_radius}, rng);
  return cfg;
}

// d = 2 polar region: the annulus cut to angles [theta_lo, theta_hi).
// Isotropy makes the angular coordinate an independent uniform.
inline void sample_ppp_polar_region_into(ColoredConfig& cfg, const Annulus& ann,
                                         double theta_lo, double theta_hi,
                                         RngStream& rng) {
  if (cfg.dim != 2)
    throw std::invalid_argument("sample_ppp_polar_region_into: d = 2 only");
  if (!(theta_lo <= theta_hi))
    throw std::invalid_argument("sample_ppp_polar_region_into: bad angles");
  double frac = (theta_hi - theta_lo) / kTwoPi;
  double mean = expected_count(cfg.lambda, ann, 2) * frac;
  std::uint64_t count = rng.poisson(mean);
  for (std::uint64_t i = 0; i < count; ++i) {
    double r = detail::radial_from_uniform_d2(rng.next_double(), ann);
    double th = theta_lo + (theta_hi - theta_lo) * rng.next_double();
    double rho = std::tanh(0.5 * r);
    cfg.coords.push_back(rho * std::cos(th));
    cfg.coords.push_back(rho * std::sin(th));
    cfg.marks.push_back(rng.next_double());
  }
}

// Indices of nuclei black at parameter p under the mark coupling.
inline std::vector<std::size_t> black_indices(const ColoredConfig& cfg,
                                              double p) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cfg.size(); ++i)
    if (cfg.marks[i] <= p) out.push_back(i);
  return out;
}

// Removes points selected by pred(index), compacting in place.
template <typename Pred>
inline void erase_points_if(ColoredConfig& cfg, Pred pred) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (pred(i)) continue;
    for (int k = 0; k < cfg.dim; ++k)
      cfg.coords[cfg.dim * out + k] = cfg.coords[cfg.dim * i + k];
    cfg.marks[out] = cfg.marks[i];
    ++out;
  }
  cfg.coords.resize(cfg.dim * out);
  cfg.marks.resize(out);
}

// Text format: one JSON header line, then one line per point with dim
// coordinates and the mark, 17 significant digits each.
inline void write_config(std::ostream& os, const ColoredConfig& cfg) {
  Json header = {{"dim", cfg.dim},
                 {"lambda", cfg.lambda},
                 {"window_radius", cfg.window_radius},
                 {"seed", cfg.seed},
                 {"count", cfg.size()}};
  os << header.dump() << '\n';
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (int k = 0; k < cfg.dim; ++k) {
      if (k) os << ' ';
      os << fmt17(cfg.coords[cfg.dim * i + k]);
    }
    os << ' ' << fmt17(cfg.marks[i]) << '\n';
  }
}

inline ColoredConfig read_config(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("read_config: missing header");
  Json header = Json::parse(line);
  ColoredConfig cfg;
  cfg.dim = header.at("dim").get<int>();
  cfg.lambda = header.at("lambda").get<double>();
  cfg.window_radius = header.at("window_radius").get<double>();
  cfg.seed = header.at("seed").get<std::uint64_t>();
  std::uint64_t count = header.at("count").get<std::uint64_t>();
  cfg.coords.reserve(cfg.dim * count);
  cfg.marks.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!std::getline(is, line))
      throw std::runtime_error("read_config: truncated point list");
    std::istringstream ls(line);
    for (int k = 0; k < cfg.dim + 1; ++k) {
      double v;
      if (!(ls >> v)) throw std::runtime_error("read_config: bad point line");
      (k < cfg.dim ? cfg.coords : cfg.marks).push_back(v);
    }
  }
  return cfg;
}

}  // namespace hypervoro

#pragma once

// Percolation on the colored tessellation: one-arm events and their
// critical levels, Monte-Carlo estimators coupled through the marks, a
// finite-scale critical-point proxy, decay and mean-field fits, pivotal
// sets, and derivative/correlation audits. A nucleus is black at level p
// iff its mark is <= p, so one marked sample is coherent across every p.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hypervoro/geometry.hpp"
#include "hypervoro/parallel.hpp"
#include "hypervoro/rng.hpp"
#include "hypervoro/sampling.hpp"
#include "hypervoro/stats.hpp"
#include "hypervoro/tessellation.hpp"
#include "hypervoro/window.hpp"

namespace hypervoro {

inline bool is_black(double mark, double p) { return mark <= p; }

// One-arm indicator at scale n: the origin's cell is black and its black
// component contains a cell whose closure reaches distance n. The walk
// crosses only edges whose boundary arc enters B(0, n); cells are
// hyperbolically convex, so any black connection between cells meeting
// the closed ball reroutes through such arcs, and any component member
// reaching distance n is itself found inside the ball.
inline bool one_arm_event(const Tessellation& tess, std::uint32_t owner0,
                          const std::vector<double>& marks, double p,
                          double n) {
  if (!(n >= 0.0)) throw std::domain_error("one_arm_event: n < 0");
  if (marks.size() != tess.size())
    throw std::invalid_argument("one_arm_event: marks size mismatch");
  if (!is_black(marks[owner0], p)) return false;
  if (tess.cell_reach(owner0) >= n) return true;
  std::vector<char> seen(tess.size(), 0);
  std::vector<std::uint32_t> stack{owner0};
  seen[owner0] = 1;
  while (!stack.empty()) {
    std::uint32_t u = stack.back();
    stack.pop_back();
    for (std::size_t s = 0; s < tess.degree(u); ++s) {
      std::uint32_t v = tess.neighbor(u, s);
      if (seen[v] || !is_black(marks[v], p)) continue;
      if (tess.edge_arc_min_origin(tess.incident_edge(u, s)) > n) continue;
      if (tess.cell_reach(v) >= n) return true;
      seen[v] = 1;
      stack.push_back(v);
    }
  }
  return false;
}

inline bool one_arm_event(const ColoredConfig& cfg, double p, double n) {
  if (cfg.size() == 0)
    throw std::invalid_argument("one_arm_event: empty configuration");
  Tessellation tess(cfg);
  return one_arm_event(tess, origin_owner(cfg), cfg.marks, p, n);
}

// Smallest level at which the one-arm event holds: the minimax mark over
// the same restricted paths the event walk uses. The event at level p
// holds iff this value is <= p, which replays the whole p axis from one
// sample. Within a window certified at scale n the value is finite: at
// p = 1 every cell is black and the chain of cells along a radial
// geodesic reaches distance n.
inline double one_arm_critical_p(const Tessellation& tess,
                                 std::uint32_t owner0,
                                 const std::vector<double>& marks, double n) {
  if (!(n >= 0.0)) throw std::domain_error("one_arm_critical_p: n < 0");
  if (marks.size() != tess.size())
    throw std::invalid_argument("one_arm_critical_p: marks size mismatch");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> level(tess.size(), kInf);
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  level[owner0] = marks[owner0];
  heap.emplace(level[owner0], owner0);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > level[u]) continue;
    if (tess.cell_reach(u) >= n) return d;
    for (std::size_t s = 0; s < tess.degree(u); ++s) {
      std::uint32_t v = tess.neighbor(u, s);
      double nd = std::max(d, marks[v]);
      if (nd >= level[v]) continue;
      if (tess.edge_arc_min_origin(tess.incident_edge(u, s)) > n) continue;
      level[v] = nd;
      heap.emplace(nd, v);
    }
  }
  return kInf;
}

// Connected components of the black subgraph over retained adjacencies.
// Clusters are ordered by smallest member, members ascending; white
// nuclei appear nowhere; no black nuclei yields an empty partition.
inline std::vector<std::vector<std::uint32_t>> black_clusters(
    const Tessellation& tess, const std::vector<double>& marks, double p) {
  if (marks.size() != tess.size())
    throw std::invalid_argument("black_clusters: marks size mismatch");
  std::size_t n = tess.size();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!is_black(marks[i], p)) continue;
    for (std::size_t s = 0; s < tess.degree(i); ++s) {
      std::uint32_t j = tess.neighbor(i, s);
      if (j >= i || !is_black(marks[j], p)) continue;
      std::uint32_t ri = find(i), rj = find(j);
      if (ri == rj) continue;
      // Roots stay the minimum of their component, so cluster order and
      // first-touch order coincide below.
      if (ri < rj) parent[rj] = ri;
      else parent[ri] = rj;
    }
  }
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::int32_t> slot(n, -1);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!is_black(marks[i], p)) continue;
    std::uint32_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = std::int32_t(out.size());
      out.emplace_back();
    }
    out[std::size_t(slot[r])].push_back(i);
  }
  return out;
}

// Increasing events measurable from the colors of cells meeting a ball,
// around the origin or a translated base point. kAlways is the constant
// true event, useful as a degenerate audit subject.
struct EventSpec {
  enum Kind { kOwnerBlack, kOneArm, kAlways };
  Kind kind = kOneArm;
  double n = 2.0;       // one-arm scale, ignored otherwise
  double base_x = 0.0;  // base point, euclidean disk coordinates
  double base_y = 0.0;

  bool based() const { return base_x != 0.0 || base_y != 0.0; }
  // Radius the diagram must be exact to for a faithful evaluation.
  double reach_needed() const {
    double rb = 2.0 * std::atanh(std::hypot(base_x, base_y));
    return kind == kOneArm ? rb + n : rb;
  }
};

// Moves base b to the origin by the disk automorphism
// w = (z - b) / (1 - conj(b) z), a hyperbolic isometry; marks and order
// ride along. The returned window radius is what the moved window is
// still guaranteed to contain.
inline ColoredConfig translate_to_origin(const ColoredConfig& cfg, double bx,
                                         double by) {
  if (cfg.dim != 2)
    throw std::invalid_argument("translate_to_origin: dim != 2");
  double bn = std::hypot(bx, by);
  if (!(bn < 1.0))
    throw std::invalid_argument("translate_to_origin: base outside the disk");
  ColoredConfig out = cfg;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    double zx = cfg.x(i), zy = cfg.y(i);
    double nre = zx - bx, nim = zy - by;
    double dre = 1.0 - (bx * zx + by * zy);
    double dim = -(bx * zy - by * zx);
    double den = dre * dre + dim * dim;
    out.coords[2 * i] = (nre * dre + nim * dim) / den;
    out.coords[2 * i + 1] = (nim * dre - nre * dim) / den;
  }
  out.window_radius = std::max(0.0, cfg.window_radius - 2.0 * std::atanh(bn));
  return out;
}

inline bool eval_event(const Tessellation& tess, std::uint32_t owner0,
                       const std::vector<double>& marks, double p,
                       const EventSpec& ev) {
  if (ev.based())
    throw std::invalid_argument("eval_event: translate the base point first");
  if (ev.kind == EventSpec::kAlways) return true;
  if (ev.kind == EventSpec::kOwnerBlack) return is_black(marks[owner0], p);
  return one_arm_event(tess, owner0, marks, p, ev.n);
}

// Smallest level at which the event holds on this sample.
inline double event_critical_p(const Tessellation& tess, std::uint32_t owner0,
                               const std::vector<double>& marks,
                               const EventSpec& ev) {
  if (ev.based())
    throw std::invalid_argument(
        "event_critical_p: translate the base point first");
  if (ev.kind == EventSpec::kAlways) return 0.0;
  if (ev.kind == EventSpec::kOwnerBlack) return marks[owner0];
  return one_arm_critical_p(tess, owner0, marks, ev.n);
}

inline bool eval_event(const ColoredConfig& cfg, double p,
                       const EventSpec& ev) {
  if (cfg.size() == 0)
    throw std::invalid_argument("eval_event: empty configuration");
  if (ev.based()) {
    ColoredConfig moved = translate_to_origin(cfg, ev.base_x, ev.base_y);
    EventSpec local = ev;
    local.base_x = local.base_y = 0.0;
    Tessellation tess(moved);
    return eval_event(tess, origin_owner(moved), moved.marks, p, local);
  }
  Tessellation tess(cfg);
  return eval_event(tess, origin_owner(cfg), cfg.marks, p, ev);
}

// Monte-Carlo one-arm probability at (lambda, p, n). Trial t draws from
// child t of the seed stream; a trial whose origin cell is already white
// skips the window build entirely. Outcomes land in per-trial slots, so
// the estimate is identical for every worker count.
inline EstimateResult estimate_theta(double lambda, double p, double n,
                                     std::size_t trials, std::uint64_t seed,
                                     int workers = 0,
                                     const WindowPolicy& policy = {}) {
  if (trials == 0) throw std::invalid_argument("estimate_theta: no trials");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("estimate_theta: p outside [0, 1]");
  RngStream root(seed);
  std::vector<std::uint8_t> hit(trials, 0);
  parallel_chunks(trials, resolve_workers(workers),
                  [&](std::size_t b, std::size_t e) {
                    for (std::size_t t = b; t < e; ++t) {
                      auto s = sample_certified_window(
                          lambda, n, root.child(std::uint64_t(t)), policy, p);
                      if (!s.certified) continue;
                      hit[t] = one_arm_event(*s.tess, s.owner0, s.cfg.marks,
                                             p, n)
                                   ? 1
                                   : 0;
                    }
                  });
  std::uint64_t cnt = std::accumulate(hit.begin(), hit.end(), std::uint64_t(0));
  return bernoulli_estimate(cnt, trials);
}

// Per-trial one-arm critical levels at scale n; trial t draws from child
// t, matching estimate_theta trial for trial. Thresholding one batch
// replays the event at every p, which couples estimates along the whole
// p axis and pins their monotonicity exactly.
inline std::vector<double> one_arm_critical_batch(
    double lambda, double n, std::size_t trials, const RngStream& stream,
    int workers = 0, const WindowPolicy& policy = {}) {
  std::vector<double> crit(trials);
  parallel_chunks(trials, resolve_workers(workers),
                  [&](std::size_t b, std::size_t e) {
                    for (std::size_t t = b; t < e; ++t) {
                      auto s = sample_certified_window(
                          lambda, n, stream.child(std::uint64_t(t)), policy);
                      crit[t] = one_arm_critical_p(*s.tess, s.owner0,
                                                   s.cfg.marks, n);
                    }
                  });
  return crit;
}

inline std::vector<double> one_arm_critical_batch(
    double lambda, double n, std::size_t trials, std::uint64_t seed,
    int workers = 0, const WindowPolicy& policy = {}) {
  return one_arm_critical_batch(lambda, n, trials, RngStream(seed), workers,
                                policy);
}

inline double theta_from_batch(const std::vector<double>& crit, double p) {
  if (crit.empty()) throw std::invalid_argument("theta_from_batch: no batch");
  std::size_t cnt = 0;
  for (double c : crit) cnt += c <= p ? 1 : 0;
  return double(cnt) / double(crit.size());
}

struct PcEstimate {
  double lo = 0.0;
  double hi = 0.0;
  double mid = 0.0;
  EstimateResult theta_at_mid;
};

// Bisection of the empirical curve from one critical-level batch for the
// level where it crosses one half. The curve is a monotone step function
// of p, so the bisection is exact on it.
inline PcEstimate pc_from_batch(const std::vector<double>& crit,
                                double p_tolerance) {
  if (!(p_tolerance > 0.0))
    throw std::invalid_argument("pc_from_batch: p_tolerance <= 0");
  double lo = 0.01, hi = 0.99;
  if (!(theta_from_batch(crit, lo) < 0.5 && theta_from_batch(crit, hi) >= 0.5))
    throw std::runtime_error(
        "pc_from_batch: no crossing of one half inside [0.01, 0.99]");
  while (hi - lo > p_tolerance) {
    double mid = 0.5 * (lo + hi);
    (theta_from_batch(crit, mid) >= 0.5 ? hi : lo) = mid;
  }
  PcEstimate out;
  out.lo = lo;
  out.hi = hi;
  out.mid = 0.5 * (lo + hi);
  std::uint64_t cnt = 0;
  for (double c : crit) cnt += c <= out.mid ? 1 : 0;
  out.theta_at_mid = bernoulli_estimate(cnt, crit.size());
  return out;
}

// Finite-scale critical-point proxy: the level where the one-arm
// probability at scale n crosses one half. The result is a proxy tied to
// the scale n, not the limit object.
inline PcEstimate estimate_pc(double lambda, double n, std::size_t trials,
                              double p_tolerance, std::uint64_t seed,
                              int workers = 0,
                              const WindowPolicy& policy = {}) {
  if (!(n >= 2.0)) throw std::invalid_argument("estimate_pc: n < 2");
  if (trials < 100) throw std::invalid_argument("estimate_pc: trials < 100");
  if (!(p_tolerance > 0.0))
    throw std::invalid_argument("estimate_pc: p_tolerance <= 0");
  return pc_from_batch(
      one_arm_critical_batch(lambda, n, trials, seed, workers, policy),
      p_tolerance);
}

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  std::size_t points_used = 0;
};

// Weighted least squares of log estimate against scale. Zero estimates
// carry no log-domain information and are dropped; the delta method maps
// the standard error to var(log m) ~ (se/m)^2, whose inverse weights the
// fit.
inline DecayFit fit_decay(
    const std::vector<std::pair<double, EstimateResult>>& points) {
  std::vector<double> x, y, w;
  for (const auto& [n, est] : points) {
    if (!(est.value > 0.0)) continue;
    x.push_back(n);
    y.push_back(std::log(est.value));
    double rel = std::max(est.std_err / est.value, 1e-12);
    w.push_back(1.0 / (rel * rel));
  }
  if (x.size() < 4)
    throw std::invalid_argument("fit_decay: fewer than 4 positive estimates");
  FitResult fit = wls_fit(x, y, w);
  DecayFit out;
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.r_squared = fit.r_squared;
  out.slope_lo = fit.slope - kZ95 * fit.slope_se;
  out.slope_hi = fit.slope + kZ95 * fit.slope_se;
  out.points_used = x.size();
  return out;
}

struct MeanFieldPoint {
  double p = 0.0;
  EstimateResult theta;
  double c_point = 0.0;  // theta / (p - pc midpoint)
  double c_lo = 0.0;     // theta ci_lo / (p - pc midpoint)
};

struct MeanFieldReport {
  PcEstimate pc;
  double ratio = 0.0;   // theta at the doubled scale over theta at scale n,
                        // both at the largest grid level
  bool stable = false;  // ratio >= 0.9 gate for fitting at all
  double c_hat = std::numeric_limits<double>::quiet_NaN();
  double c_lo95 = std::numeric_limits<double>::quiet_NaN();
  EstimateResult theta_base;
  EstimateResult theta_big;
  std::vector<MeanFieldPoint> points;
  std::vector<std::string> warnings;
};

// Report assembly from precomputed critical-level batches at scale n and
// at the doubled scale. Split out so the refusal gate is reachable with
// constructed batches; honest near-critical geometry at desk scales
// shrinks by well under the 10% gate.
inline MeanFieldReport mean_field_from_batches(const PcEstimate& pc,
                                               const std::vector<double>& base,
                                               const std::vector<double>& big,
                                               const std::vector<double>& p_grid) {
  if (p_grid.empty())
    throw std::invalid_argument("mean_field_check: empty grid");
  if (base.empty() || big.empty())
    throw std::invalid_argument("mean_field_check: empty batch");
  MeanFieldReport rep;
  rep.pc = pc;
  for (double p : p_grid) {
    if (!(p > rep.pc.mid + 0.01) || !(p <= 1.0))
      throw std::invalid_argument(
          "mean_field_check: grid level not above the critical estimate");
  }
  double p_top = *std::max_element(p_grid.begin(), p_grid.end());
  auto estimate_at = [&](const std::vector<double>& crit, double p) {
    std::uint64_t cnt = 0;
    for (double c : crit) cnt += c <= p ? 1 : 0;
    return bernoulli_estimate(cnt, crit.size());
  };
  rep.theta_base = estimate_at(base, p_top);
  rep.theta_big = estimate_at(big, p_top);
  rep.ratio = rep.theta_base.value > 0.0
                  ? rep.theta_big.value / rep.theta_base.value
                  : 0.0;
  rep.stable = rep.ratio >= 0.9;
  if (!rep.stable) {
    rep.warnings.push_back(
        "theta shrank by more than 10% at the doubled scale; no fit");
    return rep;
  }
  std::vector<double> grid = p_grid;
  std::sort(grid.begin(), grid.end());
  rep.c_hat = std::numeric_limits<double>::infinity();
  rep.c_lo95 = std::numeric_limits<double>::infinity();
  for (double p : grid) {
    MeanFieldPoint pt;
    pt.p = p;
    pt.theta = estimate_at(base, p);
    double gap = p - rep.pc.mid;
    pt.c_point = pt.theta.value / gap;
    pt.c_lo = pt.theta.ci_lo / gap;
    rep.c_hat = std::min(rep.c_hat, pt.c_point);
    rep.c_lo95 = std::min(rep.c_lo95, pt.c_lo);
    rep.points.push_back(pt);
  }
  return rep;
}

// Linear lower bound on theta above the critical proxy: reports both the
// largest slope through the point estimates (c_hat, the min of
// theta / (p - pc midpoint) over the grid) and the largest slope every
// grid point still supports at 95% (c_lo95, the same min over interval
// lower bounds). The fit is refused when theta has not stabilized in
// scale, meaning the estimate at the doubled scale fell more than 10%.
inline MeanFieldReport mean_field_check(double lambda,
                                        const std::vector<double>& p_grid,
                                        double n_large, std::size_t trials,
                                        std::uint64_t seed, int workers = 0,
                                        const WindowPolicy& policy = {}) {
  if (p_grid.empty())
    throw std::invalid_argument("mean_field_check: empty grid");
  if (trials == 0) throw std::invalid_argument("mean_field_check: no trials");
  RngStream root(seed);
  PcEstimate pc =
      estimate_pc(lambda, n_large, std::max<std::size_t>(trials, 100), 0.02,
                  root.child(1).identity(), workers, policy);
  std::vector<double> base = one_arm_critical_batch(
      lambda, n_large, trials, root.child(2), workers, policy);
  std::vector<double> big = one_arm_critical_batch(
      lambda, 2.0 * n_large, trials, root.child(3), workers, policy);
  return mean_field_from_batches(pc, base, big, p_grid);
}

// Nuclei whose color flip changes the event indicator, found by
// re-evaluating the event with the candidate forced black, then forced
// white. Only cells meeting the event ball can matter: the walk never
// lets any other cell's color through its filters.
inline std::vector<std::uint32_t> pivotal_set(const Tessellation& tess,
                                              std::uint32_t owner0,
                                              const std::vector<double>& marks,
                                              double p, const EventSpec& ev) {
  if (ev.based())
    throw std::invalid_argument("pivotal_set: translate the base point first");
  std::vector<std::uint32_t> scope;
  if (ev.kind == EventSpec::kOneArm)
    scope = tess.cells_meeting_ball(ev.n);
  else
    scope.push_back(owner0);
  std::vector<double> work = marks;
  std::vector<std::uint32_t> piv;
  for (std::uint32_t c : scope) {
    double keep = work[c];
    work[c] = 0.0;  // forced black at any level
    bool on = eval_event(tess, owner0, work, p, ev);
    work[c] = 2.0;  // forced white at any level
    bool off = eval_event(tess, owner0, work, p, ev);
    work[c] = keep;
    if (on != off) piv.push_back(c);
  }
  return piv;
}

inline std::vector<std::uint32_t> pivotal_set(const ColoredConfig& cfg,
                                              double p, const EventSpec& ev) {
  if (cfg.size() == 0)
    throw std::invalid_argument("pivotal_set: empty configuration");
  if (ev.based()) {
    ColoredConfig moved = translate_to_origin(cfg, ev.base_x, ev.base_y);
    EventSpec local = ev;
    local.base_x = local.base_y = 0.0;
    Tessellation tess(moved);
    return pivotal_set(tess, origin_owner(moved), moved.marks, p, local);
  }
  Tessellation tess(cfg);
  return pivotal_set(tess, origin_owner(cfg), cfg.marks, p, ev);
}

struct RussoReport {
  EstimateResult derivative;     // central difference of the event curve
  EstimateResult pivotal_count;  // mean pivotal set size at p
  double p = 0.0;
  double dp = 0.0;
  std::size_t trials = 0;
  bool pass = false;  // the two 95% intervals overlap
};

// Derivative identity audit for an increasing origin event: the mark
// coupling turns the central difference into the indicator of the
// per-sample critical level landing inside (p - dp, p + dp], evaluated
// on the same samples as the pivotal count.
inline RussoReport russo_audit(double lambda, const EventSpec& ev, double p,
                               double dp, std::size_t trials,
                               std::uint64_t seed, int workers = 0,
                               const WindowPolicy& policy = {}) {
  if (!(dp > 0.0))
    throw std::invalid_argument("russo_audit: dp must be positive");
  if (!(p - dp > 0.0 && p + dp < 1.0))
    throw std::invalid_argument("russo_audit: [p - dp, p + dp] leaves (0, 1)");
  if (trials == 0) throw std::invalid_argument("russo_audit: no trials");
  if (ev.based())
    throw std::invalid_argument("russo_audit: audits run at the origin");
  double n_eff = ev.kind == EventSpec::kOneArm ? ev.n : 0.0;
  RngStream root(seed);
  std::vector<std::uint8_t> step(trials, 0);
  std::vector<std::uint32_t> npiv(trials, 0);
  parallel_chunks(trials, resolve_workers(workers),
                  [&](std::size_t b, std::size_t e) {
                    for (std::size_t t = b; t < e; ++t) {
                      auto s = sample_certified_window(
                          lambda, n_eff, root.child(std::uint64_t(t)), policy);
                      double crit = event_critical_p(*s.tess, s.owner0,
                                                     s.cfg.marks, ev);
                      step[t] = crit > p - dp && crit <= p + dp ? 1 : 0;
                      npiv[t] = std::uint32_t(
                          pivotal_set(*s.tess, s.owner0, s.cfg.marks, p, ev)
                              .size());
                    }
                  });
  RussoReport rep;
  rep.p = p;
  rep.dp = dp;
  rep.trials = trials;
  std::uint64_t cnt =
      std::accumulate(step.begin(), step.end(), std::uint64_t(0));
  double q = double(cnt) / double(trials);
  double se = std::sqrt(q * (1.0 - q) / double(trials));
  rep.derivative.value = q / (2.0 * dp);
  rep.derivative.std_err = se / (2.0 * dp);
  rep.derivative.ci_lo = (q - kZ95 * se) / (2.0 * dp);
  rep.derivative.ci_hi = (q + kZ95 * se) / (2.0 * dp);
  rep.derivative.trials = trials;
  rep.derivative.successes = cnt;
  RunningStat rs;
  std::uint64_t total = 0;
  for (std::uint32_t k : npiv) {
    rs.push(double(k));
    total += k;
  }
  rep.pivotal_count.value = rs.mean;
  rep.pivotal_count.std_err = rs.std_err();
  rep.pivotal_count.ci_lo = rs.mean - kZ95 * rs.std_err();
  rep.pivotal_count.ci_hi = rs.mean + kZ95 * rs.std_err();
  rep.pivotal_count.trials = trials;
  rep.pivotal_count.successes = total;
  rep.pass = std::max(rep.derivative.ci_lo, rep.pivotal_count.ci_lo) <=
             std::min(rep.derivative.ci_hi, rep.pivotal_count.ci_hi);
  return rep;
}

struct FkgReport {
  double p_a = 0.0;
  double p_b = 0.0;
  double p_ab = 0.0;
  double gap = 0.0;    // p_ab - p_a p_b
  double sigma = 0.0;  // delta-method standard error of the gap
  std::size_t trials = 0;
  bool pass = false;  // gap not significantly negative: gap >= -3 sigma
};

// Positive-association audit for two increasing events evaluated on
// shared samples; windows are certified out to whichever base ball
// reaches farther, so both indicators are exact per trial.
inline FkgReport fkg_audit(double lambda, double p, const EventSpec& a,
                           const EventSpec& b, std::size_t trials,
                           std::uint64_t seed, int workers = 0,
                           const WindowPolicy& policy = {}) {
  if (trials == 0) throw std::invalid_argument("fkg_audit: no trials");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("fkg_audit: p outside [0, 1]");
  double n_eff = std::max(a.reach_needed(), b.reach_needed());
  RngStream root(seed);
  std::vector<std::uint8_t> ia(trials, 0), ib(trials, 0);
  auto indicator = [&](const CertifiedSample& s, const EventSpec& ev) {
    if (!ev.based())
      return eval_event(*s.tess, s.owner0, s.cfg.marks, p, ev);
    return eval_event(s.cfg, p, ev);
  };
  parallel_chunks(trials, resolve_workers(workers),
                  [&](std::size_t be, std::size_t en) {
                    for (std::size_t t = be; t < en; ++t) {
                      auto s = sample_certified_window(
                          lambda, n_eff, root.child(std::uint64_t(t)), policy);
                      ia[t] = indicator(s, a) ? 1 : 0;
                      ib[t] = indicator(s, b) ? 1 : 0;
                    }
                  });
  double T = double(trials);
  std::uint64_t ca = 0, cb = 0, cab = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    ca += ia[t];
    cb += ib[t];
    cab += ia[t] & ib[t];
  }
  FkgReport rep;
  rep.trials = trials;
  rep.p_a = double(ca) / T;
  rep.p_b = double(cb) / T;
  rep.p_ab = double(cab) / T;
  rep.gap = rep.p_ab - rep.p_a * rep.p_b;
  double ma = rep.p_a, mb = rep.p_b, mab = rep.p_ab;
  // First-order variance of p_ab - p_a p_b from the indicator moments;
  // the cross terms use E[I_ab I_a] = E[I_ab].
  double var = mab * (1.0 - mab) + mb * mb * ma * (1.0 - ma) +
               ma * ma * mb * (1.0 - mb) - 2.0 * mb * mab * (1.0 - ma) -
               2.0 * ma * mab * (1.0 - mb) +
               2.0 * ma * mb * (mab - ma * mb);
  rep.sigma = std::sqrt(std::max(0.0, var) / T);
  rep.pass = rep.gap >= -3.0 * rep.sigma;
  return rep;
}

// Row k holds a nonnegative curve sampled on a uniform ascending grid;
// rows are indexed by their scale, so row 0 is the scale-0 curve.
struct SharpnessCheck {
  std::vector<double> p;
  std::vector<std::vector<double>> f;
};

struct SharpnessViolation {
  std::size_t n = 0;  // row (scale) index
  double p = 0.0;
  double lhs = 0.0;  // central difference of the row
  double rhs = 0.0;  // required slope c n f_n / Sigma_n
};

struct SharpnessReport {
  double c = 0.0;
  double tolerance = 0.0;
  std::vector<SharpnessViolation> violations;
  double x1_proxy = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

// Partial sums Sigma_k(p) = sum of rows 0..k-1 at each grid point,
// accumulated left to right; row 0 gets the empty sum.
inline std::vector<std::vector<double>> sharpness_sigma(
    const std::vector<std::vector<double>>& f) {
  std::vector<std::vector<double>> sigma(f.size());
  if (f.empty()) return sigma;
  std::vector<double> acc(f[0].size(), 0.0);
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k].size() != acc.size())
      throw std::invalid_argument("sharpness_sigma: ragged rows");
    sigma[k] = acc;
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += f[k][j];
  }
  return sigma;
}

namespace detail {

inline void validate_sharpness(const SharpnessCheck& check) {
  if (check.p.size() < 3)
    throw std::invalid_argument("sharpness: need at least 3 grid points");
  double h = check.p[1] - check.p[0];
  if (!(h > 0.0)) throw std::invalid_argument("sharpness: grid not ascending");
  for (std::size_t j = 1; j + 1 < check.p.size(); ++j)
    if (std::abs(check.p[j + 1] - check.p[j] - h) > 1e-9 * std::abs(h))
      throw std::invalid_argument("sharpness: grid spacing not uniform");
  for (const auto& row : check.f) {
    if (row.size() != check.p.size())
      throw std::invalid_argument("sharpness: row length mismatch");
    for (double v : row)
      if (!(v >= 0.0))
        throw std::invalid_argument("sharpness: negative curve value");
  }
}

}  // namespace detail

// Differential-inequality audit: flags interior grid cells where the
// central difference of row n falls below c n f_n / Sigma_n by more than
// the tolerance. Rows that fail to grow along the grid beyond the
// tolerance draw data-quality warnings; the x1 proxy is the largest grid
// level whose column still decays across scales.
inline SharpnessReport sharpness_ode_check(const SharpnessCheck& check,
                                           double c, double tolerance) {
  if (!(c >= 0.0)) throw std::invalid_argument("sharpness_ode_check: c < 0");
  if (!(tolerance >= 0.0))
    throw std::invalid_argument("sharpness_ode_check: tolerance < 0");
  detail::validate_sharpness(check);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  SharpnessReport rep;
  rep.c = c;
  rep.tolerance = tolerance;
  double h = check.p[1] - check.p[0];
  auto sigma = sharpness_sigma(check.f);
  std::size_t rows = check.f.size(), cols = check.p.size();
  for (std::size_t k = 0; k < rows; ++k) {
    for (std::size_t j = 1; j + 1 < cols; ++j) {
      double lhs = (check.f[k][j + 1] - check.f[k][j - 1]) / (2.0 * h);
      double rhs;
      if (k == 0) {
        rhs = 0.0;
      } else if (sigma[k][j] > 0.0) {
        rhs = c * double(k) * check.f[k][j] / sigma[k][j];
      } else {
        rhs = check.f[k][j] > 0.0 ? kInf : 0.0;
      }
      if (lhs < rhs - tolerance)
        rep.violations.push_back({k, check.p[j], lhs, rhs});
    }
    bool monotone = true;
    for (std::size_t j = 0; j + 1 < cols; ++j)
      if (check.f[k][j + 1] < check.f[k][j] - tolerance) monotone = false;
    if (!monotone)
      rep.warnings.push_back("row " + std::to_string(k) +
                             " is not monotone along the grid");
  }
  // Largest grid level whose column is nonincreasing across scales and
  // has genuinely shrunk by the last row.
  for (std::size_t j = cols; j-- > 0;) {
    bool decays = rows < 2 ? false
                           : check.f[rows - 1][j] <=
                                 0.5 * check.f[0][j] + tolerance;
    for (std::size_t k = 0; decays && k + 1 < rows; ++k)
      if (check.f[k + 1][j] > check.f[k][j] + tolerance) decays = false;
    if (decays) {
      rep.x1_proxy = check.p[j];
      break;
    }
  }
  return rep;
}

// Largest c the grid supports without violations, by doubling then
// bisection; passing is monotone in c. Returns NaN when even c = 0
// fails and infinity when no finite c ever fails.
inline double largest_passing_c(const SharpnessCheck& check,
                                double tolerance) {
  auto passes = [&](double c) {
    return sharpness_ode_check(check, c, tolerance).violations.empty();
  };
  if (!passes(0.0)) return std::numeric_limits<double>::quiet_NaN();
  double hi = 1.0;
  int cap = 0;
  while (passes(hi)) {
    hi *= 2.0;
    if (++cap >= 60) return std::numeric_limits<double>::infinity();
  }
  double lo = hi * 0.5 >= 1.0 ? hi * 0.5 : 0.0;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (passes(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace hypervoro

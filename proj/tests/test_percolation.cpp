#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "hypervoro/geometry.hpp"
#include "hypervoro/percolation.hpp"
#include "hypervoro/rng.hpp"
#include "hypervoro/sampling.hpp"
#include "hypervoro/stats.hpp"
#include "hypervoro/tessellation.hpp"
#include "hypervoro/window.hpp"

using namespace hypervoro;
using Catch::Matchers::WithinAbs;

namespace {

// Random marked configuration inside a euclidean disk of the given norm.
ColoredConfig random_config(std::mt19937_64& rng, int n, double max_norm) {
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::uniform_real_distribution<double> ua(0.0, kTwoPi);
  ColoredConfig cfg;
  cfg.dim = 2;
  for (int i = 0; i < n; ++i) {
    double rho = max_norm * std::sqrt(ur(rng));
    double th = ua(rng);
    cfg.coords.push_back(rho * std::cos(th));
    cfg.coords.push_back(rho * std::sin(th));
    cfg.marks.push_back(ur(rng));
  }
  cfg.window_radius = 2.0 * std::atanh(max_norm);
  return cfg;
}

// Breadth-first black components, an independent re-derivation of the
// cluster partition. Components come out ordered by smallest member.
std::vector<std::vector<std::uint32_t>> bfs_components(
    const Tessellation& tess, const std::vector<double>& marks, double p) {
  std::vector<char> vis(tess.size(), 0);
  std::vector<std::vector<std::uint32_t>> comps;
  for (std::uint32_t i = 0; i < tess.size(); ++i) {
    if (vis[i] || !(marks[i] <= p)) continue;
    std::vector<std::uint32_t> comp;
    std::deque<std::uint32_t> queue{i};
    vis[i] = 1;
    while (!queue.empty()) {
      std::uint32_t u = queue.front();
      queue.pop_front();
      comp.push_back(u);
      for (std::size_t s = 0; s < tess.degree(u); ++s) {
        std::uint32_t v = tess.neighbor(u, s);
        if (vis[v] || !(marks[v] <= p)) continue;
        vis[v] = 1;
        queue.push_back(v);
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

// Full-graph arm evaluation through components: owner black and its
// component holding a cell whose closure reaches distance n. No arc
// filtering, no scope; the slow definitional route.
bool arm_via_components(const Tessellation& tess, std::uint32_t owner0,
                        const std::vector<double>& marks, double p, double n) {
  if (!(marks[owner0] <= p)) return false;
  for (const auto& comp : bfs_components(tess, marks, p)) {
    if (!std::binary_search(comp.begin(), comp.end(), owner0)) continue;
    for (std::uint32_t c : comp)
      if (tess.cell_reach(c) >= n) return true;
    return false;
  }
  return false;
}

}  // namespace

TEST_CASE("one-arm basics pin the degenerate scales") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 40; ++rep) {
    ColoredConfig cfg = random_config(rng, 30, 0.85);
    Tessellation tess(cfg);
    std::uint32_t owner = origin_owner(cfg);
    for (double p : {0.2, 0.5, 0.8}) {
      // Scale zero is exactly the owner's color.
      REQUIRE(one_arm_event(tess, owner, cfg.marks, p, 0.0) ==
              (cfg.marks[owner] <= p));
      // A white origin kills the event at every scale.
      if (cfg.marks[owner] > p) {
        REQUIRE_FALSE(one_arm_event(tess, owner, cfg.marks, p, 1.0));
        REQUIRE_FALSE(one_arm_event(tess, owner, cfg.marks, p, 2.5));
      }
    }
    // Everything black connects the origin to any distance the window
    // sees (boundary cells are unbounded, so their reach is infinite).
    REQUIRE(one_arm_event(tess, owner, cfg.marks, 1.0, 1.0));
    REQUIRE(one_arm_event(tess, owner, cfg.marks, 1.0, 2.5));
  }

  ColoredConfig empty;
  REQUIRE_THROWS_AS(one_arm_event(empty, 0.5, 1.0), std::invalid_argument);
  ColoredConfig one = random_config(rng, 12, 0.5);
  Tessellation t1(one);
  REQUIRE_THROWS_AS(one_arm_event(t1, 0, one.marks, 0.5, -1.0),
                    std::domain_error);
  std::vector<double> short_marks(one.size() - 1, 0.5);
  REQUIRE_THROWS_AS(one_arm_event(t1, 0, short_marks, 0.5, 1.0),
                    std::invalid_argument);
}

TEST_CASE("the event at level p is exactly the critical level test") {
  std::mt19937_64 rng(22);
  int finite_crit = 0;
  for (int rep = 0; rep < 150; ++rep) {
    ColoredConfig cfg = random_config(rng, 40, 0.9);
    Tessellation tess(cfg);
    std::uint32_t owner = origin_owner(cfg);
    for (double n : {0.0, 0.8, 1.6}) {
      double crit = one_arm_critical_p(tess, owner, cfg.marks, n);
      REQUIRE(crit >= cfg.marks[owner]);
      if (std::isfinite(crit)) ++finite_crit;
      for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        REQUIRE(one_arm_event(tess, owner, cfg.marks, p, n) == (crit <= p));
      }
      // The critical level is attained: the event holds right at it.
      if (std::isfinite(crit))
        REQUIRE(one_arm_event(tess, owner, cfg.marks, crit, n));
    }
  }
  REQUIRE(finite_crit > 300);
}

TEST_CASE("the restricted walk agrees with full-graph reachability") {
  std::mt19937_64 rng(33);
  int trues = 0, falses = 0;
  for (int rep = 0; rep < 150; ++rep) {
    ColoredConfig cfg = random_config(rng, 45, 0.9);
    Tessellation tess(cfg);
    std::uint32_t owner = origin_owner(cfg);
    for (double p : {0.25, 0.5, 0.75}) {
      for (double n : {0.7, 1.4}) {
        bool lib = one_arm_event(tess, owner, cfg.marks, p, n);
        bool oracle = arm_via_components(tess, owner, cfg.marks, p, n);
        REQUIRE(lib == oracle);
        (lib ? trues : falses) += 1;
      }
    }
  }
  REQUIRE(trues > 100);
  REQUIRE(falses > 100);
}

TEST_CASE("black clusters match breadth-first components") {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 100; ++rep) {
    ColoredConfig cfg = random_config(rng, 8 + rep % 40, 0.8);
    Tessellation tess(cfg);
    double p = 0.2 + 0.6 * (rep % 7) / 6.0;
    auto lib = black_clusters(tess, cfg.marks, p);
    REQUIRE(lib == bfs_components(tess, cfg.marks, p));
    std::size_t total = 0;
    for (const auto& cl : lib) {
      REQUIRE(!cl.empty());
      REQUIRE(std::is_sorted(cl.begin(), cl.end()));
      for (std::uint32_t c : cl) REQUIRE(cfg.marks[c] <= p);
      total += cl.size();
    }
    std::size_t blacks = 0;
    for (double m : cfg.marks) blacks += m <= p ? 1 : 0;
    REQUIRE(total == blacks);

    // Lowering p refines the partition: each finer cluster sits inside
    // one coarser cluster.
    double p_low = p * 0.6;
    std::vector<std::int32_t> coarse(tess.size(), -1);
    for (std::size_t k = 0; k < lib.size(); ++k)
      for (std::uint32_t c : lib[k]) coarse[c] = std::int32_t(k);
    for (const auto& cl : black_clusters(tess, cfg.marks, p_low)) {
      for (std::uint32_t c : cl) REQUIRE(coarse[c] == coarse[cl[0]]);
    }
  }

  ColoredConfig cfg = random_config(rng, 25, 0.7);
  Tessellation tess(cfg);
  REQUIRE(black_clusters(tess, cfg.marks, 1.0).size() == 1);
  REQUIRE(black_clusters(tess, cfg.marks, 0.0).empty());
  std::vector<double> bad(cfg.size() + 1, 0.5);
  REQUIRE_THROWS_AS(black_clusters(tess, bad, 0.5), std::invalid_argument);
}

TEST_CASE("lowering a mark never kills the event") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  int flips_seen = 0;
  for (int rep = 0; rep < 150; ++rep) {
    ColoredConfig cfg = random_config(rng, 35, 0.88);
    Tessellation tess(cfg);
    std::uint32_t owner = origin_owner(cfg);
    double p = 0.3 + 0.4 * ur(rng);
    double n = 0.5 + ur(rng);
    bool before = one_arm_event(tess, owner, cfg.marks, p, n);
    for (int k = 0; k < 6; ++k) {
      std::vector<double> marks = cfg.marks;
      std::size_t i = std::size_t(ur(rng) * double(cfg.size()));
      if (k % 2 == 0) {
        marks[i] = 0.0;  // lower: the event may only turn on
        bool after = one_arm_event(tess, owner, marks, p, n);
        REQUIRE((!before || after));
        if (after != before) ++flips_seen;
      } else {
        marks[i] = 1.0;  // raise: the event may only turn off
        bool after = one_arm_event(tess, owner, marks, p, n);
        REQUIRE((!after || before));
        if (after != before) ++flips_seen;
      }
    }
  }
  REQUIRE(flips_seen > 10);
}

TEST_CASE("theta estimates pin the trivial levels") {
  // Scale zero reduces to the owner's color, so the estimate sits near p.
  EstimateResult th0 = estimate_theta(1.0, 0.3, 0.0, 10000, 2718);
  REQUIRE(th0.trials == 10000);
  REQUIRE_THAT(th0.value, WithinAbs(0.3, 0.014));

  // Everything black: the arm is certain inside a certified window.
  EstimateResult full = estimate_theta(1.0, 1.0, 2.0, 300, 99);
  REQUIRE(full.value == 1.0);
  REQUIRE(full.successes == 300);

  // No marks at or below zero, so the event never fires.
  REQUIRE(estimate_theta(1.0, 0.0, 1.0, 200, 7).value == 0.0);

  REQUIRE_THROWS_AS(estimate_theta(1.0, 0.5, 1.0, 0, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(estimate_theta(1.0, 1.2, 1.0, 10, 1),
                    std::invalid_argument);
}

TEST_CASE("estimates are coupled through the marks") {
  // Same seed, higher level: every trial's indicator can only grow.
  EstimateResult lo = estimate_theta(1.0, 0.4, 1.0, 1500, 55);
  EstimateResult hi = estimate_theta(1.0, 0.6, 1.0, 1500, 55);
  REQUIRE(lo.successes <= hi.successes);

  // The critical-level batch replays the estimator trial for trial.
  std::vector<double> batch =
      one_arm_critical_batch(1.0, 1.0, 1500, std::uint64_t(55));
  REQUIRE(theta_from_batch(batch, 0.4) == lo.value);
  REQUIRE(theta_from_batch(batch, 0.6) == hi.value);

  // At scale zero the critical level is the owner's own mark.
  RngStream root(314);
  for (std::size_t t = 0; t < 50; ++t) {
    auto s = sample_certified_window(1.0, 0.0, root.child(t));
    REQUIRE(one_arm_critical_p(*s.tess, s.owner0, s.cfg.marks, 0.0) ==
            s.cfg.marks[s.owner0]);
  }

  // One window certified at the largest scale serves every smaller one,
  // and the critical level can only rise with the scale.
  RngStream multi(777);
  const double scales[] = {0.0, 0.7, 1.4, 2.0};
  std::size_t counts[4] = {0, 0, 0, 0};
  for (std::size_t t = 0; t < 150; ++t) {
    auto s = sample_certified_window(1.0, 2.0, multi.child(t));
    double prev = -1.0;
    for (int k = 0; k < 4; ++k) {
      double crit =
          one_arm_critical_p(*s.tess, s.owner0, s.cfg.marks, scales[k]);
      REQUIRE(crit >= prev);
      prev = crit;
      counts[k] += crit <= 0.5 ? 1 : 0;
    }
  }
  REQUIRE(counts[0] >= counts[1]);
  REQUIRE(counts[1] >= counts[2]);
  REQUIRE(counts[2] >= counts[3]);

  REQUIRE_THROWS_AS(theta_from_batch({}, 0.5), std::invalid_argument);
}

TEST_CASE("the critical proxy brackets the half crossing") {
  PcEstimate pc2 = estimate_pc(1.0, 2.0, 500, 0.01, 777);
  REQUIRE(pc2.hi - pc2.lo <= 0.01 + 1e-12);
  REQUIRE(pc2.lo >= 0.01);
  REQUIRE(pc2.hi <= 0.99);
  REQUIRE(pc2.lo < pc2.mid);
  REQUIRE(pc2.mid < pc2.hi);
  REQUIRE(pc2.theta_at_mid.trials == 500);

  // The estimate is a pure function of its own batch.
  std::vector<double> batch =
      one_arm_critical_batch(1.0, 2.0, 500, std::uint64_t(777));
  REQUIRE(theta_from_batch(batch, pc2.mid) == pc2.theta_at_mid.value);
  PcEstimate redo = pc_from_batch(batch, 0.01);
  REQUIRE(redo.mid == pc2.mid);

  // Larger scale makes the arm rarer, so the half crossing cannot move
  // down beyond noise.
  PcEstimate pc3 = estimate_pc(1.0, 3.0, 400, 0.01, 778);
  REQUIRE(pc3.mid > pc2.mid - 0.04);

  // Synthetic batch with a known crossing.
  std::vector<double> synth;
  for (int i = 0; i < 40; ++i) synth.push_back(0.2);
  for (int i = 0; i < 60; ++i) synth.push_back(0.7);
  REQUIRE_THAT(pc_from_batch(synth, 0.001).mid, WithinAbs(0.7, 0.002));

  // No crossing inside [0.01, 0.99] in either direction.
  REQUIRE_THROWS_AS(pc_from_batch(std::vector<double>(50, 0.995), 0.01),
                    std::runtime_error);
  REQUIRE_THROWS_AS(pc_from_batch(std::vector<double>(50, 0.005), 0.01),
                    std::runtime_error);

  REQUIRE_THROWS_AS(estimate_pc(1.0, 1.9, 500, 0.01, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(estimate_pc(1.0, 2.0, 99, 0.01, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(estimate_pc(1.0, 2.0, 500, 0.0, 1),
                    std::invalid_argument);
}

TEST_CASE("decay fits recover synthetic slopes") {
  std::vector<std::pair<double, EstimateResult>> exact;
  for (int n = 1; n <= 8; ++n) {
    double v = std::exp(-0.5 * n);
    exact.push_back({double(n), EstimateResult{v, 0.0, v, v, 1000, 0}});
  }
  DecayFit fit = fit_decay(exact);
  REQUIRE_THAT(fit.slope, WithinAbs(-0.5, 1e-9));
  REQUIRE_THAT(fit.intercept, WithinAbs(0.0, 1e-9));
  REQUIRE(fit.r_squared >= 1.0 - 1e-9);
  REQUIRE(fit.points_used == 8);
  REQUIRE(fit.slope_lo <= fit.slope);
  REQUIRE(fit.slope <= fit.slope_hi);

  // One percent relative noise leaves the slope within 0.05.
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  std::vector<std::pair<double, EstimateResult>> noisy;
  for (int n = 1; n <= 8; ++n) {
    double v = std::exp(-0.5 * n) * (1.0 + 0.01 * ur(rng));
    noisy.push_back(
        {double(n), EstimateResult{v, 0.01 * v, 0.0, 0.0, 1000, 0}});
  }
  REQUIRE_THAT(fit_decay(noisy).slope, WithinAbs(-0.5, 0.05));

  // Zeros carry no log information and vanish from the fit.
  std::vector<std::pair<double, EstimateResult>> mixed(exact.begin(),
                                                       exact.begin() + 4);
  mixed.push_back({9.0, EstimateResult{0.0, 0.0, 0.0, 0.0, 1000, 0}});
  REQUIRE(fit_decay(mixed).points_used == 4);

  REQUIRE_THROWS_AS(
      fit_decay({exact.begin(), exact.begin() + 3}),
      std::invalid_argument);
  std::vector<std::pair<double, EstimateResult>> zeros(
      6, {1.0, EstimateResult{0.0, 0.0, 0.0, 0.0, 10, 0}});
  REQUIRE_THROWS_AS(fit_decay(zeros), std::invalid_argument);
}

TEST_CASE("mean-field report bounds theta above the critical proxy") {
  // A grid topped by p = 1 keeps the stability ratio at exactly one.
  MeanFieldReport rep =
      mean_field_check(1.0, {0.7, 0.9, 1.0}, 2.0, 400, 4242);
  REQUIRE(rep.stable);
  REQUIRE(rep.ratio == 1.0);
  REQUIRE(rep.theta_base.value == 1.0);
  REQUIRE(rep.points.size() == 3);
  REQUIRE(rep.points[0].p == 0.7);
  REQUIRE(rep.c_hat > 0.0);
  REQUIRE(rep.c_lo95 <= rep.c_hat);
  // The p = 1 point caps the slope at 1 / (1 - pc).
  REQUIRE(rep.c_hat <= 1.0 / (1.0 - rep.pc.mid) + 1e-12);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& pt : rep.points) m = std::min(m, pt.c_point);
  REQUIRE(rep.c_hat == m);

  // Degenerate one-point grid: the slope through that single point.
  MeanFieldReport one = mean_field_check(1.0, {1.0}, 2.0, 400, 4242);
  REQUIRE(one.points.size() == 1);
  REQUIRE(one.c_hat == one.points[0].theta.value / (1.0 - one.pc.mid));

  // A grid level at the critical estimate is rejected outright.
  REQUIRE_THROWS_AS(mean_field_check(1.0, {0.02}, 2.0, 400, 4242),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(mean_field_check(1.0, {}, 2.0, 400, 4242),
                    std::invalid_argument);

  // The internal critical estimate is reproducible from the outside
  // through the documented child stream.
  PcEstimate pre =
      estimate_pc(1.0, 2.0, 400, 0.02, RngStream(9001).child(1).identity());
  MeanFieldReport again =
      mean_field_check(1.0, {pre.mid + 0.02}, 2.0, 400, 9001);
  REQUIRE(again.pc.mid == pre.mid);

  // A batch that thins by more than ten percent at the doubled scale is
  // refused rather than fitted.
  PcEstimate pc;
  pc.lo = 0.49;
  pc.hi = 0.51;
  pc.mid = 0.5;
  std::vector<double> base(300, 0.4);
  std::vector<double> big(250, 0.4);
  big.insert(big.end(), 50, 0.9);
  MeanFieldReport refuse = mean_field_from_batches(pc, base, big, {0.7});
  REQUIRE_THAT(refuse.ratio, WithinAbs(250.0 / 300.0, 1e-12));
  REQUIRE(!refuse.stable);
  REQUIRE(std::isnan(refuse.c_hat));
  REQUIRE(std::isnan(refuse.c_lo95));
  REQUIRE(refuse.points.empty());
  REQUIRE(refuse.warnings.size() == 1);

  // The same batches pass once the shrink stays inside the gate, and the
  // slope bound divides by the gap to the proxy midpoint.
  std::vector<double> big_ok(280, 0.4);
  big_ok.insert(big_ok.end(), 20, 0.9);
  MeanFieldReport ok = mean_field_from_batches(pc, base, big_ok, {0.7});
  REQUIRE(ok.stable);
  REQUIRE(ok.c_hat == 1.0 / (0.7 - pc.mid));
  REQUIRE(ok.c_lo95 <= ok.c_hat);
  REQUIRE_THROWS_AS(mean_field_from_batches(pc, {}, big_ok, {0.7}),
                    std::invalid_argument);
}

TEST_CASE("pivotal sets match brute double evaluation") {
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::size_t pivotal_total = 0;
  for (int rep = 0; rep < 100; ++rep) {
    ColoredConfig cfg = random_config(rng, 6 + rep % 11, 0.75);
    Tessellation tess(cfg);
    std::uint32_t owner = origin_owner(cfg);
    double p = rep % 2 == 0 ? 0.3 : 0.6;
    EventSpec ev;
    ev.kind = EventSpec::kOneArm;
    ev.n = 1.0;

    // Definitional oracle: flip every nucleus both ways and evaluate
    // through the component route.
    std::vector<std::uint32_t> oracle;
    for (std::uint32_t i = 0; i < cfg.size(); ++i) {
      std::vector<double> work = cfg.marks;
      work[i] = 0.0;
      bool on = arm_via_components(tess, owner, work, p, ev.n);
      work[i] = 2.0;
      bool off = arm_via_components(tess, owner, work, p, ev.n);
      if (on != off) oracle.push_back(i);
    }
    auto piv = pivotal_set(tess, owner, cfg.marks, p, ev);
    std::sort(piv.begin(), piv.end());
    REQUIRE(piv == oracle);
    pivotal_total += piv.size();

    // Directional form for an increasing event: forcing a pivotal
    // nucleus black turns the event on, forcing it white turns it off.
    for (std::uint32_t c : piv) {
      std::vector<double> work = cfg.marks;
      work[c] = 0.0;
      REQUIRE(one_arm_event(tess, owner, work, p, ev.n));
      work[c] = 2.0;
      REQUIRE_FALSE(one_arm_event(tess, owner, work, p, ev.n));
    }
  }
  REQUIRE(pivotal_total > 50);

  // The owner-color event pivots on the owner alone, in any coloring;
  // the constant event pivots on nothing.
  std::mt19937_64 rng2(89);
  for (int rep = 0; rep < 20; ++rep) {
    ColoredConfig cfg = random_config(rng2, 20, 0.8);
    EventSpec owner_ev;
    owner_ev.kind = EventSpec::kOwnerBlack;
    auto piv = pivotal_set(cfg, 0.5, owner_ev);
    REQUIRE(piv == std::vector<std::uint32_t>{origin_owner(cfg)});
    EventSpec always;
    always.kind = EventSpec::kAlways;
    REQUIRE(pivotal_set(cfg, 0.5, always).empty());
  }
  ColoredConfig empty;
  REQUIRE_THROWS_AS(pivotal_set(empty, 0.5, EventSpec{}),
                    std::invalid_argument);
}

TEST_CASE("the derivative audit matches the pivotal count") {
  EventSpec owner_ev;
  owner_ev.kind = EventSpec::kOwnerBlack;
  RussoReport rep = russo_audit(1.0, owner_ev, 0.5, 0.02, 3000, 1234);
  // The owner is pivotal in every single sample.
  REQUIRE(rep.pivotal_count.value == 1.0);
  REQUIRE(rep.pivotal_count.std_err == 0.0);
  REQUIRE(rep.pivotal_count.successes == 3000);
  // The mark is uniform, so the difference quotient estimates exactly 1.
  REQUIRE_THAT(rep.derivative.value, WithinAbs(1.0, 0.35));
  REQUIRE(rep.pass);

  EventSpec arm;
  arm.kind = EventSpec::kOneArm;
  arm.n = 1.0;
  RussoReport arm_rep = russo_audit(1.0, arm, 0.5, 0.05, 1200, 4321);
  REQUIRE(arm_rep.trials == 1200);
  REQUIRE(arm_rep.pass);
  REQUIRE(arm_rep.pivotal_count.value > 0.0);
  REQUIRE(arm_rep.derivative.value > 0.0);

  EventSpec always;
  always.kind = EventSpec::kAlways;
  RussoReport flat = russo_audit(1.0, always, 0.5, 0.02, 200, 5);
  REQUIRE(flat.derivative.value == 0.0);
  REQUIRE(flat.pivotal_count.value == 0.0);
  REQUIRE(flat.pass);

  REQUIRE_THROWS_AS(russo_audit(1.0, owner_ev, 0.5, 0.0, 100, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(russo_audit(1.0, owner_ev, 0.99, 0.02, 100, 1),
                    std::invalid_argument);
  EventSpec based = arm;
  based.base_x = 0.3;
  REQUIRE_THROWS_AS(russo_audit(1.0, based, 0.5, 0.02, 100, 1),
                    std::invalid_argument);
}

TEST_CASE("positive association holds for increasing event pairs") {
  EventSpec owner_ev;
  owner_ev.kind = EventSpec::kOwnerBlack;
  FkgReport same = fkg_audit(1.0, 0.3, owner_ev, owner_ev, 2000, 777);
  // Identical events: the gap is p - p^2 up to sampling noise.
  REQUIRE(same.p_a == same.p_b);
  REQUIRE(same.p_ab == same.p_a);
  REQUIRE_THAT(same.gap, WithinAbs(0.21, 4.0 * same.sigma + 1e-9));
  REQUIRE(same.gap > 0.0);
  REQUIRE(same.pass);

  // Nested arms: the longer arm implies the shorter one sample by
  // sample, so the joint probability equals the smaller marginal.
  EventSpec arm1, arm2;
  arm1.kind = arm2.kind = EventSpec::kOneArm;
  arm1.n = 1.0;
  arm2.n = 2.0;
  FkgReport nested = fkg_audit(1.0, 0.5, arm1, arm2, 500, 888);
  REQUIRE(nested.p_ab == nested.p_b);
  REQUIRE(nested.p_b <= nested.p_a);
  REQUIRE(nested.gap >= 0.0);
  REQUIRE(nested.pass);

  // Arms hung from antipodal base points six apart.
  double bx = std::tanh(1.5);
  EventSpec left, right;
  left.kind = right.kind = EventSpec::kOneArm;
  left.n = right.n = 1.0;
  left.base_x = bx;
  right.base_x = -bx;
  REQUIRE_THAT(hyp_distance(HPoint(bx, 0.0), HPoint(-bx, 0.0)),
               WithinAbs(6.0, 1e-12));
  REQUIRE(left.reach_needed() == right.reach_needed());
  REQUIRE_THAT(left.reach_needed(), WithinAbs(4.0, 1e-12));
  FkgReport anti = fkg_audit(1.0, 0.5, left, right, 300, 999);
  REQUIRE(anti.trials == 300);
  REQUIRE(anti.pass);

  REQUIRE_THROWS_AS(fkg_audit(1.0, 1.5, owner_ev, owner_ev, 100, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(fkg_audit(1.0, 0.5, owner_ev, owner_ev, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("translating a base point to the origin is an isometry") {
  std::mt19937_64 rng(2025);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    ColoredConfig cfg = random_config(rng, 18, 0.85);
    double phi = kTwoPi * ur(rng);
    double bn = 0.8 * std::sqrt(ur(rng));
    double bx = bn * std::cos(phi), by = bn * std::sin(phi);
    ColoredConfig moved = translate_to_origin(cfg, bx, by);
    REQUIRE(moved.size() == cfg.size());
    REQUIRE(moved.marks == cfg.marks);

    // Complex-arithmetic re-derivation of the automorphism.
    std::complex<double> b(bx, by);
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      std::complex<double> z(cfg.x(i), cfg.y(i));
      std::complex<double> w = (z - b) / (1.0 - std::conj(b) * z);
      REQUIRE_THAT(moved.x(i), WithinAbs(w.real(), 1e-12));
      REQUIRE_THAT(moved.y(i), WithinAbs(w.imag(), 1e-12));
    }

    // Pairwise distances survive; the base lands on the origin.
    for (int k = 0; k < 10; ++k) {
      std::size_t i = std::size_t(ur(rng) * double(cfg.size()));
      std::size_t j = std::size_t(ur(rng) * double(cfg.size()));
      REQUIRE_THAT(hyp_distance(moved.point(i), moved.point(j)),
                   WithinAbs(hyp_distance(cfg.point(i), cfg.point(j)), 1e-9));
    }
    ColoredConfig self = translate_to_origin(cfg, cfg.x(0), cfg.y(0));
    REQUIRE_THAT(std::hypot(self.x(0), self.y(0)), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(moved.window_radius,
                 WithinAbs(std::max(0.0, cfg.window_radius -
                                             2.0 * std::atanh(bn)),
                           1e-12));

    // A based one-arm evaluates as the origin event on the moved points.
    EventSpec based;
    based.kind = EventSpec::kOneArm;
    based.n = 0.9;
    based.base_x = bx;
    based.base_y = by;
    Tessellation mt(moved);
    REQUIRE(eval_event(cfg, 0.55, based) ==
            one_arm_event(mt, origin_owner(moved), moved.marks, 0.55, 0.9));
  }

  ColoredConfig cfg = random_config(rng, 10, 0.5);
  REQUIRE_THROWS_AS(translate_to_origin(cfg, 1.0, 0.0),
                    std::invalid_argument);
  cfg.dim = 3;
  REQUIRE_THROWS_AS(translate_to_origin(cfg, 0.1, 0.0),
                    std::invalid_argument);
}

TEST_CASE("sharpness checks flag the constant counterexample") {
  // Power curves satisfy the inequality at c = 1 with zero tolerance.
  SharpnessCheck powers;
  for (int j = 0; j <= 16; ++j) powers.p.push_back(0.1 + 0.05 * j);
  for (int k = 0; k <= 5; ++k) {
    std::vector<double> row;
    for (double x : powers.p) row.push_back(std::pow(x, double(k)));
    powers.f.push_back(row);
  }
  SharpnessReport clean = sharpness_ode_check(powers, 1.0, 0.0);
  REQUIRE(clean.violations.empty());
  REQUIRE(clean.warnings.empty());
  // The last row has shrunk to half of row zero up to x = 0.5^(1/5).
  REQUIRE_THAT(clean.x1_proxy, WithinAbs(0.85, 1e-12));
  double lpc = largest_passing_c(powers, 0.0);
  REQUIRE(lpc >= 1.0);
  REQUIRE(std::isfinite(lpc));

  // Constant rows never grow, so every positive c flags every interior
  // cell of every row past the first.
  SharpnessCheck flat;
  for (int j = 0; j <= 8; ++j) flat.p.push_back(0.1 + 0.1 * j);
  flat.f.assign(5, std::vector<double>(flat.p.size(), 0.5));
  SharpnessReport bad = sharpness_ode_check(flat, 1.0, 0.0);
  REQUIRE(bad.violations.size() == 4 * 7);
  for (const auto& v : bad.violations) {
    REQUIRE(v.n >= 1);
    REQUIRE(v.lhs == 0.0);
    REQUIRE_THAT(v.rhs, WithinAbs(1.0, 1e-12));
  }
  REQUIRE(sharpness_ode_check(flat, 0.0, 0.0).violations.empty());
  REQUIRE(largest_passing_c(flat, 0.0) < 1e-9);

  // Rows of zeros impose no slope at all.
  SharpnessCheck free;
  free.p = {0.1, 0.2, 0.3, 0.4};
  free.f = {{1.0, 1.0, 1.0, 1.0}, {0.0, 0.0, 0.0, 0.0}};
  REQUIRE(std::isinf(largest_passing_c(free, 0.0)));

  // Partial sums accumulate rows exactly.
  auto sigma = sharpness_sigma(powers.f);
  REQUIRE(sigma.size() == powers.f.size());
  for (std::size_t j = 0; j < powers.p.size(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < powers.f.size(); ++k) {
      REQUIRE(sigma[k][j] == acc);
      acc += powers.f[k][j];
    }
  }

  // A dip beyond tolerance draws a data-quality warning.
  SharpnessCheck dip;
  dip.p = {0.1, 0.2, 0.3};
  dip.f = {{0.5, 0.2, 0.5}};
  SharpnessReport warned = sharpness_ode_check(dip, 1.0, 0.05);
  REQUIRE(warned.violations.empty());
  REQUIRE(warned.warnings.size() == 1);
  REQUIRE(warned.warnings[0].find("row 0") != std::string::npos);

  // Columns that grow with the row index never decay anywhere.
  SharpnessCheck grow;
  grow.p = {0.1, 0.2, 0.3};
  grow.f = {{0.1, 0.1, 0.1}, {0.9, 0.9, 0.9}};
  REQUIRE(std::isnan(sharpness_ode_check(grow, 0.0, 0.0).x1_proxy));

  SharpnessCheck bad_grid;
  bad_grid.p = {0.1, 0.2, 0.4};
  bad_grid.f = {{0.0, 0.0, 0.0}};
  REQUIRE_THROWS_AS(sharpness_ode_check(bad_grid, 1.0, 0.0),
                    std::invalid_argument);
  bad_grid.p = {0.3, 0.2, 0.1};
  REQUIRE_THROWS_AS(sharpness_ode_check(bad_grid, 1.0, 0.0),
                    std::invalid_argument);
  bad_grid.p = {0.1, 0.2};
  REQUIRE_THROWS_AS(sharpness_ode_check(bad_grid, 1.0, 0.0),
                    std::invalid_argument);
  SharpnessCheck ragged;
  ragged.p = {0.1, 0.2, 0.3};
  ragged.f = {{0.0, 0.0, 0.0}, {0.0, 0.0}};
  REQUIRE_THROWS_AS(sharpness_ode_check(ragged, 1.0, 0.0),
                    std::invalid_argument);
  SharpnessCheck negative;
  negative.p = {0.1, 0.2, 0.3};
  negative.f = {{0.0, -0.1, 0.0}};
  REQUIRE_THROWS_AS(sharpness_ode_check(negative, 1.0, 0.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(sharpness_ode_check(powers, -1.0, 0.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(sharpness_ode_check(powers, 1.0, -0.1),
                    std::invalid_argument);
}

TEST_CASE("a sampled curve family passes the sharpness check") {
  SharpnessCheck mc;
  for (int j = 0; j <= 6; ++j) mc.p.push_back(0.2 + 0.1 * j);
  for (int k = 0; k <= 3; ++k) {
    std::vector<double> crit =
        one_arm_critical_batch(1.0, double(k), 1200, std::uint64_t(31900 + k));
    std::vector<double> row;
    for (double p : mc.p) row.push_back(theta_from_batch(crit, p));
    mc.f.push_back(row);
  }
  // Tolerance sized to the propagated Monte-Carlo noise of the central
  // differences: three sigmas of se * sqrt(2) / (2h).
  double tol = 0.35;
  double lpc = largest_passing_c(mc, tol);
  REQUIRE(lpc > 0.02);
  REQUIRE(sharpness_ode_check(mc, 0.01, tol).violations.empty());
  REQUIRE(sharpness_ode_check(mc, 0.01, tol).warnings.empty());
}

TEST_CASE("estimators are identical across worker counts") {
  EstimateResult a1 = estimate_theta(1.0, 0.45, 1.0, 400, 123, 1);
  EstimateResult a2 = estimate_theta(1.0, 0.45, 1.0, 400, 123, 2);
  EstimateResult a3 = estimate_theta(1.0, 0.45, 1.0, 400, 123, 3);
  REQUIRE(a1.value == a2.value);
  REQUIRE(a1.value == a3.value);
  REQUIRE(a1.successes == a2.successes);
  REQUIRE(a1.successes == a3.successes);

  auto b1 = one_arm_critical_batch(1.0, 1.0, 300, RngStream(5), 1);
  auto b3 = one_arm_critical_batch(1.0, 1.0, 300, RngStream(5), 3);
  REQUIRE(b1.size() == b3.size());
  REQUIRE(std::memcmp(b1.data(), b3.data(), b1.size() * sizeof(double)) == 0);

  EventSpec arm;
  arm.kind = EventSpec::kOneArm;
  arm.n = 1.0;
  RussoReport r1 = russo_audit(1.0, arm, 0.5, 0.05, 300, 42, 1);
  RussoReport r2 = russo_audit(1.0, arm, 0.5, 0.05, 300, 42, 3);
  REQUIRE(r1.derivative.value == r2.derivative.value);
  REQUIRE(r1.derivative.successes == r2.derivative.successes);
  REQUIRE(r1.pivotal_count.value == r2.pivotal_count.value);
  REQUIRE(r1.pivotal_count.successes == r2.pivotal_count.successes);

  EventSpec owner_ev;
  owner_ev.kind = EventSpec::kOwnerBlack;
  FkgReport f1 = fkg_audit(1.0, 0.4, owner_ev, arm, 300, 77, 1);
  FkgReport f2 = fkg_audit(1.0, 0.4, owner_ev, arm, 300, 77, 3);
  REQUIRE(f1.p_a == f2.p_a);
  REQUIRE(f1.p_b == f2.p_b);
  REQUIRE(f1.p_ab == f2.p_ab);
  REQUIRE(f1.gap == f2.gap);
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "hypervoro/discretization.hpp"
#include "hypervoro/geometry.hpp"
#include "hypervoro/osss.hpp"
#include "hypervoro/percolation.hpp"
#include "hypervoro/rng.hpp"
#include "hypervoro/sampling.hpp"
#include "hypervoro/tessellation.hpp"

using namespace hypervoro;

namespace {

Rational rat(long long a, long long b) { return Rational(a, b); }

DiscreteOSSSCase uniform_bits(std::size_t m, std::vector<int> table) {
  DiscreteOSSSCase c;
  c.alphabets.assign(m, 2);
  c.probs.assign(m, {rat(1, 2), rat(1, 2)});
  c.table = std::move(table);
  return c;
}

// Double-precision re-derivation of the whole report, sharing no code with
// the exact checker.
struct BruteReport {
  double variance;
  std::vector<double> revealment, influence;
};

BruteReport brute_report(const DiscreteOSSSCase& c) {
  std::size_t m = c.alphabets.size();
  std::size_t total = 1;
  for (std::uint32_t a : c.alphabets) total *= a;
  std::vector<std::size_t> stride(m, 1);
  for (std::size_t i = m - 1; i > 0; --i)
    stride[i - 1] = stride[i] * c.alphabets[i];
  auto digit = [&](std::size_t idx, std::size_t i) {
    return (idx / stride[i]) % c.alphabets[i];
  };
  auto weight = [&](std::size_t idx) {
    double w = 1.0;
    for (std::size_t i = 0; i < m; ++i)
      w *= double(c.probs[i][digit(idx, i)].convert_to<double>());
    return w;
  };
  BruteReport rep;
  rep.revealment.assign(m, 0.0);
  rep.influence.assign(m, 0.0);
  double e = 0.0, e2 = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    double w = weight(idx);
    double v = c.table[idx];
    e += w * v;
    e2 += w * v * v;
    const DiscreteTreeNode* node = &c.tree;
    std::set<int> seen;
    while (node->query >= 0) {
      if (seen.insert(node->query).second)
        rep.revealment[std::size_t(node->query)] += w;
      node = &node->children[digit(idx, std::size_t(node->query))];
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t a = digit(idx, i);
      for (std::size_t b = 0; b < c.alphabets[i]; ++b) {
        if (b == a) continue;
        if (c.table[idx + (b - a) * stride[i]] != c.table[idx])
          rep.influence[i] += w * c.probs[i][b].convert_to<double>();
      }
    }
  }
  rep.variance = e2 - e * e;
  return rep;
}

ColoredConfig polar_cfg(double window,
                        std::vector<std::array<double, 3>> pts) {
  ColoredConfig cfg;
  cfg.window_radius = window;
  for (const auto& a : pts)
    cfg.append(HPoint::from_polar(a[0], a[1]), a[2]);
  return cfg;
}

}  // namespace

TEST_CASE("discrete checker pins dictator, parity and majority exactly") {
  SECTION("dictator on two bits") {
    auto c = uniform_bits(2, {0, 0, 1, 1});
    c.tree = sequential_tree(c);
    auto rep = verify_osss_discrete(c);
    REQUIRE(rep.variance == rat(1, 4));
    REQUIRE(rep.revealment == std::vector<Rational>{rat(1, 1), rat(0, 1)});
    REQUIRE(rep.influence == std::vector<Rational>{rat(1, 2), rat(0, 1)});
    REQUIRE(rep.bound == rat(1, 2));
    REQUIRE(rep.holds);
  }
  SECTION("parity on two bits") {
    auto c = uniform_bits(2, {0, 1, 1, 0});
    c.tree = sequential_tree(c);
    auto rep = verify_osss_discrete(c);
    REQUIRE(rep.variance == rat(1, 4));
    REQUIRE(rep.revealment == std::vector<Rational>{rat(1, 1), rat(1, 1)});
    REQUIRE(rep.influence == std::vector<Rational>{rat(1, 2), rat(1, 2)});
    REQUIRE(rep.bound == rat(1, 1));
    REQUIRE(rep.holds);
  }
  SECTION("majority on three bits, left-to-right tree") {
    auto c = uniform_bits(3, {0, 0, 0, 1, 0, 1, 1, 1});
    c.tree = sequential_tree(c);
    auto rep = verify_osss_discrete(c);
    REQUIRE(rep.variance == rat(1, 4));
    REQUIRE(rep.revealment ==
            std::vector<Rational>{rat(1, 1), rat(1, 1), rat(1, 2)});
    REQUIRE(rep.influence ==
            std::vector<Rational>{rat(1, 4), rat(1, 4), rat(1, 4)});
    REQUIRE(rep.bound == rat(5, 8));
    REQUIRE(rep.holds);
  }
  SECTION("constant function needs no queries") {
    auto c = uniform_bits(2, {1, 1, 1, 1});
    c.tree = sequential_tree(c);
    auto rep = verify_osss_discrete(c);
    REQUIRE(rep.variance == rat(0, 1));
    REQUIRE(rep.bound == rat(0, 1));
    REQUIRE(rep.holds);
  }
}

TEST_CASE("discrete checker holds across every three-bit function") {
  for (int f = 0; f < 256; ++f) {
    std::vector<int> table(8);
    for (int i = 0; i < 8; ++i) table[std::size_t(i)] = (f >> i) & 1;
    auto c = uniform_bits(3, table);
    c.tree = sequential_tree(c);
    auto rep = verify_osss_discrete(c);
    if (!rep.holds) {
      INFO("function mask " << f);
      REQUIRE(rep.holds);
    }
  }
  SUCCEED();
}

TEST_CASE("discrete checker agrees with a double-precision re-derivation") {
  DiscreteOSSSCase c;
  c.alphabets = {2, 3, 2};
  c.probs = {{rat(1, 3), rat(2, 3)},
             {rat(1, 6), rat(1, 3), rat(1, 2)},
             {rat(3, 4), rat(1, 4)}};
  c.table = {0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1};
  c.tree = sequential_tree(c);
  auto rep = verify_osss_discrete(c);
  auto brute = brute_report(c);
  REQUIRE_THAT(rep.variance.convert_to<double>(),
               Catch::Matchers::WithinAbs(brute.variance, 1e-12));
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE_THAT(rep.revealment[i].convert_to<double>(),
                 Catch::Matchers::WithinAbs(brute.revealment[i], 1e-12));
    REQUIRE_THAT(rep.influence[i].convert_to<double>(),
                 Catch::Matchers::WithinAbs(brute.influence[i], 1e-12));
  }
  REQUIRE(rep.holds);
}

TEST_CASE("discrete checker rejects malformed cases") {
  auto base = uniform_bits(2, {0, 1, 1, 0});
  base.tree = sequential_tree(base);

  SECTION("tree that stops before the function is determined") {
    auto c = base;
    c.tree = DiscreteTreeNode{};  // constant leaf on a non-constant table
    REQUIRE_THROWS_AS(verify_osss_discrete(c), std::invalid_argument);
  }
  SECTION("probabilities that do not sum to one") {
    auto c = base;
    c.probs[0] = {rat(1, 2), rat(1, 3)};
    REQUIRE_THROWS_AS(verify_osss_discrete(c), std::invalid_argument);
  }
  SECTION("wrong table size") {
    auto c = base;
    c.table.push_back(0);
    REQUIRE_THROWS_AS(verify_osss_discrete(c), std::invalid_argument);
  }
  SECTION("child count mismatch") {
    auto c = base;
    c.tree.children.pop_back();
    REQUIRE_THROWS_AS(verify_osss_discrete(c), std::invalid_argument);
  }
  SECTION("query out of range") {
    auto c = base;
    c.tree.query = 5;
    REQUIRE_THROWS_AS(verify_osss_discrete(c), std::invalid_argument);
  }
}

TEST_CASE("discrete case json round trip") {
  DiscreteOSSSCase c;
  c.alphabets = {2, 3};
  c.probs = {{rat(1, 4), rat(3, 4)}, {rat(1, 3), rat(1, 3), rat(1, 3)}};
  c.table = {0, 1, 1, 1, 0, 0};
  c.tree = sequential_tree(c);
  Json j = discrete_case_to_json(c);
  DiscreteOSSSCase back = discrete_case_from_json(j);
  auto r1 = verify_osss_discrete(c);
  auto r2 = verify_osss_discrete(back);
  REQUIRE(r1.variance == r2.variance);
  REQUIRE(r1.revealment == r2.revealment);
  REQUIRE(r1.influence == r2.influence);
  REQUIRE(r1.holds == r2.holds);
  REQUIRE(discrete_report_to_json(r1) == discrete_report_to_json(r2));
}

TEST_CASE("sector helpers enumerate candidates and sphere touches") {
  SectorGrid grid(0.25);
  // Wedge counts 1, 4, 7, 12, 19 for the first five annuli.
  REQUIRE(candidate_sectors(grid, 1.0).size() == 24);
  REQUIRE(candidate_sectors(grid, 0.0).size() == 5);
  REQUIRE(candidate_sectors(grid, 1.5).size() == 43);

  REQUIRE(sphere_touch_sectors(grid, 0.0) ==
          std::vector<SectorId>{SectorId{0, 0}});
  REQUIRE(sphere_touch_sectors(grid, 0.3).size() == 1);
  // Exactly on the cut between annuli 1 and 2: both sides touch.
  REQUIRE(sphere_touch_sectors(grid, 1.0).size() == 11);
  REQUIRE(sphere_touch_sectors(grid, 0.9).size() == 4);
  REQUIRE(sphere_touch_sectors(grid, 2.0).size() == 31);
}

TEST_CASE("discover certifies ownership of the target sector") {
  SectorGrid grid(0.25);
  std::mt19937_64 mt(77001);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  for (int rep = 0; rep < 4; ++rep) {
    RngStream rng(900 + std::uint64_t(rep));
    ColoredConfig cfg = sample_ppp(1.0, 6.0, 2, rng);
    REQUIRE(cfg.size() > 0);
    for (SectorId x : {SectorId{0, 0}, SectorId{1, 2}, SectorId{3, 5}}) {
      DiscoverResult got = discover(cfg, grid, x);
      REQUIRE(!got.read.empty());
      REQUIRE(got.read.front() == x);
      REQUIRE(!got.owners.empty());

      // Replay determinism.
      DiscoverResult again = discover(cfg, grid, x);
      REQUIRE(got.read == again.read);
      REQUIRE(got.owners == again.owners);
      REQUIRE(got.rings == again.rings);

      // Soundness: at sampled points of the closed sector, the nearest
      // nucleus among the read sectors is the global nearest.
      std::set<SectorId> read_set(got.read.begin(), got.read.end());
      std::vector<char> is_read(cfg.size(), 0);
      for (std::size_t i = 0; i < cfg.size(); ++i)
        is_read[i] = read_set.count(grid.locate(cfg.point(i))) ? 1 : 0;
      Annulus ann = grid.annulus(x.k);
      double width = grid.angular_width(x.k);
      double th0 = x.k == 0 ? 0.0 : width * x.l;
      for (int s = 0; s < 500; ++s) {
        double rho = ann.inner + (ann.outer - ann.inner) * ur(mt);
        double phi = th0 + width * ur(mt);
        HPoint q = HPoint::from_polar(rho, phi);
        double best = 1e300, best_read = 1e300;
        std::size_t arg = 0, arg_read = 0;
        for (std::size_t i = 0; i < cfg.size(); ++i) {
          double d = hyp_distance(q, cfg.point(i));
          if (d < best) {
            best = d;
            arg = i;
          }
          if (is_read[i] && d < best_read) {
            best_read = d;
            arg_read = i;
          }
        }
        REQUIRE(arg == arg_read);
      }

      // Owners are argmins taken at certification points, so each one must
      // be (near-)nearest somewhere in the closed sector. A dense grid in
      // (rho, phi) brackets every owner's witness up to grid spacing.
      std::vector<double> slack(cfg.size(), 1e300);
      for (int a = 0; a <= 40; ++a)
        for (int b = 0; b <= 60; ++b) {
          double rho = ann.inner + (ann.outer - ann.inner) * a / 40.0;
          double phi = th0 + width * b / 60.0;
          HPoint q = HPoint::from_polar(rho, phi);
          double best = 1e300;
          std::vector<double> dq(cfg.size());
          for (std::size_t i = 0; i < cfg.size(); ++i) {
            dq[i] = hyp_distance(q, cfg.point(i));
            best = std::min(best, dq[i]);
          }
          for (std::size_t i = 0; i < cfg.size(); ++i)
            slack[i] = std::min(slack[i], dq[i] - best);
        }
      for (std::uint32_t o : got.owners) REQUIRE(slack[o] < 0.05);
    }
  }
}

TEST_CASE("discover owners match an isolated dominating nucleus") {
  SectorGrid grid(0.25);
  // One nucleus at the representative of sector (2, 0); everything else at
  // radius 3+ scattered in angle. The near nucleus owns the whole sector.
  ColoredConfig cfg = polar_cfg(8.0, {{1.0, 0.05, 0.5},
                                      {3.2, 0.7, 0.5},
                                      {3.4, 1.9, 0.5},
                                      {3.1, 3.1, 0.5},
                                      {3.3, 4.2, 0.5},
                                      {3.2, 5.3, 0.5}});
  DiscoverResult got = discover(cfg, grid, {2, 0});
  REQUIRE(got.owners == std::vector<std::uint32_t>{0});
}

TEST_CASE("discover fails loudly when the window is too small") {
  SectorGrid grid(0.25);
  ColoredConfig cfg = polar_cfg(1.0, {{0.2, 0.3, 0.5}});
  REQUIRE_THROWS_AS(discover(cfg, grid, {1, 0}), std::runtime_error);
  REQUIRE_THROWS_AS(discover(ColoredConfig{}, grid, {0, 0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(discover(cfg, grid, {1, 99}), std::invalid_argument);
}

TEST_CASE("single nucleus exploration reveals the whole touched range") {
  SectorGrid grid(0.25);
  SECTION("black origin percolates and pulls every touching sector") {
    ColoredConfig cfg = polar_cfg(6.0, {{0.0, 0.0, 0.2}});
    DecisionTrace t = reveal_clusters(cfg, 0.5, grid, 1.0, 0.0);
    REQUIRE(t.value);
    REQUIRE(t.value == one_arm_event(cfg, 0.5, 1.0));
    // Sectors touching B(0, 1): annuli 0..2, 12 sectors.
    REQUIRE(t.picks.size() == 12);
    REQUIRE(t.steps.back().z_size == 1);
  }
  SECTION("white origin stops after the first pick") {
    ColoredConfig cfg = polar_cfg(6.0, {{0.0, 0.0, 0.9}});
    DecisionTrace t = reveal_clusters(cfg, 0.5, grid, 1.0, 0.0);
    REQUIRE(!t.value);
    REQUIRE(t.value == one_arm_event(cfg, 0.5, 1.0));
    REQUIRE(t.picks == std::vector<SectorId>{SectorId{0, 0}});
    REQUIRE(t.steps.back().z_size == 0);
  }
}

TEST_CASE("exploration value matches the arm event on sampled configurations") {
  SectorGrid grid(0.25);
  double n = 2.0;
  int truths = 0, total = 0;
  for (int rep = 0; rep < 30; ++rep) {
    RngStream rng(4200 + std::uint64_t(rep));
    ColoredConfig cfg = sample_ppp(1.0, n + 4.5, 2, rng);
    Tessellation tess(cfg);
    std::uint32_t owner0 = tess.owner_of(0.0, 0.0);
    for (double p : {0.3, 0.6}) {
      for (double k : {0.0, 1.0, 2.0}) {
        DecisionTrace t = reveal_clusters(cfg, p, grid, n, k);
        bool oracle = one_arm_event(tess, owner0, cfg.marks, p, n);
        REQUIRE(t.value == oracle);
        ++total;
        truths += t.value ? 1 : 0;

        // Trace bookkeeping.
        REQUIRE(t.steps.size() == t.picks.size());
        REQUIRE(t.candidates == candidate_sectors(grid, n).size());
        std::set<SectorId> uniq(t.picks.begin(), t.picks.end());
        REQUIRE(uniq.size() == t.picks.size());
        std::set<SectorId> cand_set;
        for (SectorId s : candidate_sectors(grid, n)) cand_set.insert(s);
        for (SectorId s : t.picks) REQUIRE(cand_set.count(s) == 1);
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
          REQUIRE(t.steps[i].x_size == i + 1);
          if (i > 0) REQUIRE(t.steps[i].z_size >= t.steps[i - 1].z_size);
        }
        REQUIRE(t.steps.back().m_size == 0);

        // Joined nuclei never exceed the true sphere clusters: count the
        // black components (arcs clipped to the ball) meeting S(0, k).
        std::vector<char> in_c(tess.size(), 0);
        std::vector<std::uint32_t> stack;
        for (std::uint32_t i = 0; i < tess.size(); ++i)
          if (is_black(cfg.marks[i], p) && tess.cell_intersects_sphere(i, k) &&
              !in_c[i]) {
            in_c[i] = 1;
            stack.push_back(i);
          }
        while (!stack.empty()) {
          std::uint32_t u = stack.back();
          stack.pop_back();
          for (std::size_t s = 0; s < tess.degree(u); ++s) {
            std::uint32_t v = tess.neighbor(u, s);
            if (in_c[v] || !is_black(cfg.marks[v], p)) continue;
            if (tess.edge_arc_min_origin(tess.incident_edge(u, s)) > n)
              continue;
            in_c[v] = 1;
            stack.push_back(v);
          }
        }
        auto c_size = std::uint64_t(std::count(in_c.begin(), in_c.end(), 1));
        REQUIRE(t.steps.back().z_size <= c_size);
      }
    }
  }
  // Both outcomes must actually occur for the agreement to mean anything.
  REQUIRE(truths > 0);
  REQUIRE(truths < total);
}

TEST_CASE("revealment covers the candidate range with certain initial picks") {
  SectorGrid grid(0.25);
  double n = 1.5, k = 1.0;
  auto est = estimate_revealment(1.0, 0.5, 0.25, n, k, 40, 31337, 1);
  auto cand = candidate_sectors(grid, n);
  REQUIRE(est.size() == cand.size());
  for (std::size_t i = 0; i < est.size(); ++i) REQUIRE(est[i].first == cand[i]);

  // Sectors touching the starting sphere are picked in every trial.
  std::set<SectorId> init;
  for (SectorId s : sphere_touch_sectors(grid, k)) init.insert(s);
  REQUIRE(init.size() == 11);
  for (const auto& [s, e] : est) {
    REQUIRE(e.trials == 40);
    REQUIRE(e.value >= 0.0);
    REQUIRE(e.value <= 1.0);
    if (init.count(s)) REQUIRE(e.value == 1.0);
  }

  // Worker count must not change a single bit of the estimates.
  auto est3 = estimate_revealment(1.0, 0.5, 0.25, n, k, 40, 31337, 3);
  REQUIRE(est.size() == est3.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    REQUIRE(est[i].first == est3[i].first);
    REQUIRE(est[i].second.value == est3[i].second.value);
    REQUIRE(est[i].second.successes == est3[i].second.successes);
  }
}

TEST_CASE("influence vanishes at p = 0 and for distant sectors") {
  SECTION("p = 0 freezes the event") {
    auto est = estimate_influence(1.0, 0.0, 0.25, 1.0,
                                  {SectorId{0, 0}, SectorId{2, 1}}, 40, 11, 1);
    for (const auto& [s, e] : est) REQUIRE(e.value == 0.0);
  }
  SECTION("a sector far beyond the scale cannot flip the event") {
    auto est = estimate_influence(1.0, 0.5, 0.25, 1.0, {SectorId{9, 0}}, 120,
                                  12, 1);
    REQUIRE(est.size() == 1);
    REQUIRE(est[0].second.value == 0.0);
  }
  SECTION("rotated sectors of one annulus agree within noise") {
    auto est = estimate_influence(1.0, 0.5, 0.25, 1.5,
                                  {SectorId{2, 0}, SectorId{2, 3}}, 300, 13, 0);
    double d = std::abs(est[0].second.value - est[1].second.value);
    double se = std::hypot(est[0].second.std_err, est[1].second.std_err);
    REQUIRE(d <= 5.0 * se + 1e-12);
    REQUIRE(est[0].second.value > 0.0);  // the near annulus genuinely matters
  }
}

TEST_CASE("derivative audit dominates half the influence sum at desk scale") {
  auto rep = derivative_influence_audit(1.0, 0.5, 0.25, 1.0, 0.1, 400, 5150, 0);
  REQUIRE(rep.trials == 400);
  REQUIRE(rep.influences.size() == candidate_sectors(SectorGrid(0.25), 1.0).size());
  REQUIRE(std::isfinite(rep.derivative));
  REQUIRE(rep.derivative_se > 0.0);
  REQUIRE(rep.influence_half_sum > 0.0);
  REQUIRE(rep.sigma > 0.0);
  REQUIRE(rep.pass);

  REQUIRE_THROWS_AS(
      derivative_influence_audit(1.0, 0.5, 0.25, 1.0, 0.0, 10, 1, 1),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      derivative_influence_audit(1.0, 0.95, 0.25, 1.0, 0.1, 10, 1, 1),
      std::invalid_argument);
}

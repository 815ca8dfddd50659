#pragma once

// Sector-revealing exploration of the one-arm event, revealment and
// influence estimators over the sector grid, a derivative-vs-influence
// audit, and an exact rational checker for the decision-tree variance
// bound (OSSS inequality) on finite product spaces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "discretization.hpp"
#include "percolation.hpp"

namespace hypervoro {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Exact discrete checker: Var(f) <= sum_i revealment_i * influence_i for an
// integer-valued function on a finite product space, any decision tree that
// determines it, and independent coordinates. All masses are exact rationals.

struct DiscreteTreeNode {
  int query = -1;  // coordinate queried; -1 = stop revealing
  std::vector<DiscreteTreeNode> children;  // one per letter when query >= 0
};

struct DiscreteOSSSCase {
  std::vector<std::uint32_t> alphabets;     // letters per coordinate
  std::vector<std::vector<Rational>> probs; // per coordinate, sums to 1
  // f by mixed-radix input index, coordinate 0 most significant.
  std::vector<int> table;
  DiscreteTreeNode tree;
};

struct DiscreteOSSSReport {
  Rational variance;
  std::vector<Rational> revealment;  // mass of inputs querying coordinate i
  std::vector<Rational> influence;   // disagreement mass under resampling i
  Rational bound;                    // sum_i revealment_i * influence_i
  bool holds = false;                // variance <= bound
};

namespace detail {

inline void validate_tree(const DiscreteOSSSCase& c, const DiscreteTreeNode& t,
                          int depth) {
  if (depth > 1000)
    throw std::invalid_argument("verify_osss_discrete: tree too deep");
  if (t.query < 0) {
    if (!t.children.empty())
      throw std::invalid_argument("verify_osss_discrete: leaf with children");
    return;
  }
  if (std::size_t(t.query) >= c.alphabets.size())
    throw std::invalid_argument(
        "verify_osss_discrete: tree queries an unknown coordinate");
  if (t.children.size() != c.alphabets[std::size_t(t.query)])
    throw std::invalid_argument(
        "verify_osss_discrete: child count does not match the alphabet");
  for (const DiscreteTreeNode& ch : t.children) validate_tree(c, ch, depth + 1);
}

// Calls fn(index, digits, weight) for every input in mixed-radix order,
// maintaining exact prefix products of the coordinate probabilities.
template <class Fn>
void for_each_input(const DiscreteOSSSCase& c, Fn&& fn) {
  std::size_t m = c.alphabets.size();
  std::vector<std::size_t> digit(m, 0);
  std::vector<Rational> pref(m + 1);
  pref[0] = 1;
  for (std::size_t i = 0; i < m; ++i) pref[i + 1] = pref[i] * c.probs[i][0];
  std::size_t idx = 0;
  for (;;) {
    fn(idx, digit, pref[m]);
    ++idx;
    std::size_t pos = m;
    while (pos > 0) {
      --pos;
      if (++digit[pos] < c.alphabets[pos]) break;
      digit[pos] = 0;
      if (pos == 0) return;
    }
    for (std::size_t i = pos; i < m; ++i)
      pref[i + 1] = pref[i] * c.probs[i][digit[i]];
  }
}

}  // namespace detail

inline DiscreteOSSSReport verify_osss_discrete(const DiscreteOSSSCase& c) {
  std::size_t m = c.alphabets.size();
  if (m == 0)
    throw std::invalid_argument("verify_osss_discrete: no coordinates");
  if (c.probs.size() != m)
    throw std::invalid_argument(
        "verify_osss_discrete: probability rows do not match coordinates");
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (c.alphabets[i] == 0)
      throw std::invalid_argument("verify_osss_discrete: empty alphabet");
    if (total > 1000000 / c.alphabets[i])
      throw std::invalid_argument(
          "verify_osss_discrete: input space larger than 10^6");
    total *= c.alphabets[i];
    if (c.probs[i].size() != c.alphabets[i])
      throw std::invalid_argument(
          "verify_osss_discrete: probability row size mismatch");
    Rational s = 0;
    for (const Rational& q : c.probs[i]) {
      if (q < 0)
        throw std::invalid_argument(
            "verify_osss_discrete: negative probability");
      s += q;
    }
    if (s != 1)
      throw std::invalid_argument(
          "verify_osss_discrete: coordinate probabilities do not sum to 1");
  }
  if (c.table.size() != total)
    throw std::invalid_argument(
        "verify_osss_discrete: table size does not match the input space");
  detail::validate_tree(c, c.tree, 0);

  std::vector<std::size_t> stride(m);
  stride[m - 1] = 1;
  for (std::size_t i = m - 1; i > 0; --i)
    stride[i - 1] = stride[i] * c.alphabets[i];

  DiscreteOSSSReport rep;
  rep.revealment.assign(m, Rational(0));
  rep.influence.assign(m, Rational(0));
  Rational mean = 0, mean_sq = 0;
  std::unordered_map<const DiscreteTreeNode*, int> leaf_value;
  std::vector<std::uint64_t> stamp(m, 0);

  detail::for_each_input(c, [&](std::size_t idx,
                                const std::vector<std::size_t>& digit,
                                const Rational& w) {
    int v = c.table[idx];
    mean += w * v;
    mean_sq += w * v * v;
    const DiscreteTreeNode* node = &c.tree;
    while (node->query >= 0) {
      std::size_t q = std::size_t(node->query);
      if (stamp[q] != idx + 1) {
        stamp[q] = idx + 1;
        rep.revealment[q] += w;
      }
      node = &node->children[digit[q]];
    }
    auto [it, fresh] = leaf_value.emplace(node, v);
    if (!fresh && it->second != v)
      throw std::invalid_argument(
          "verify_osss_discrete: tree does not determine the function");
  });
  rep.variance = mean_sq - mean * mean;

  for (std::size_t i = 0; i < m; ++i) {
    detail::for_each_input(c, [&](std::size_t idx,
                                  const std::vector<std::size_t>& digit,
                                  const Rational& w) {
      int v = c.table[idx];
      std::size_t a = digit[i];
      for (std::size_t b = 0; b < c.alphabets[i]; ++b) {
        if (b == a) continue;
        std::size_t idx2 = idx + (b - a) * stride[i];
        if (c.table[idx2] != v) rep.influence[i] += w * c.probs[i][b];
      }
    });
  }

  rep.bound = 0;
  for (std::size_t i = 0; i < m; ++i)
    rep.bound += rep.revealment[i] * rep.influence[i];
  rep.holds = rep.variance <= rep.bound;
  return rep;
}

// The left-to-right decision tree: query coordinates in index order and stop
// as soon as the function is constant on the remaining block.
inline DiscreteTreeNode sequential_tree(const DiscreteOSSSCase& c) {
  std::size_t m = c.alphabets.size();
  if (m == 0) throw std::invalid_argument("sequential_tree: no coordinates");
  std::size_t total = 1;
  for (std::uint32_t a : c.alphabets) {
    if (a == 0) throw std::invalid_argument("sequential_tree: empty alphabet");
    total *= a;
  }
  if (c.table.size() != total)
    throw std::invalid_argument("sequential_tree: table size mismatch");
  std::function<DiscreteTreeNode(std::size_t, std::size_t, std::size_t)> rec =
      [&](std::size_t d, std::size_t base, std::size_t span) {
        bool constant = true;
        for (std::size_t i = 1; i < span && constant; ++i)
          constant = c.table[base + i] == c.table[base];
        DiscreteTreeNode node;
        if (constant || d == m) return node;
        node.query = int(d);
        std::size_t sub = span / c.alphabets[d];
        node.children.reserve(c.alphabets[d]);
        for (std::size_t a = 0; a < c.alphabets[d]; ++a)
          node.children.push_back(rec(d + 1, base + a * sub, sub));
        return node;
      };
  return rec(0, 0, total);
}

namespace detail {

inline Rational rational_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer())
    throw std::invalid_argument(std::string(what) +
                                ": expected a [numerator, denominator] pair");
  long long num = j[0].get<long long>(), den = j[1].get<long long>();
  if (den == 0)
    throw std::invalid_argument(std::string(what) + ": zero denominator");
  return Rational(num, den);
}

inline DiscreteTreeNode tree_from_json(const Json& j) {
  if (j.is_null()) return {};
  if (!j.is_object() || !j.contains("query"))
    throw std::invalid_argument(
        "discrete_case_from_json: tree node must be null or {query, children}");
  DiscreteTreeNode node;
  node.query = j.at("query").get<int>();
  if (node.query < 0)
    throw std::invalid_argument(
        "discrete_case_from_json: negative query index; use null for a leaf");
  for (const Json& ch : j.value("children", Json::array()))
    node.children.push_back(tree_from_json(ch));
  return node;
}

inline Json tree_to_json(const DiscreteTreeNode& t) {
  if (t.query < 0) return nullptr;
  Json j;
  j["query"] = t.query;
  j["children"] = Json::array();
  for (const DiscreteTreeNode& ch : t.children)
    j["children"].push_back(tree_to_json(ch));
  return j;
}

}  // namespace detail

inline DiscreteOSSSCase discrete_case_from_json(const Json& j) {
  DiscreteOSSSCase c;
  if (!j.is_object())
    throw std::invalid_argument("discrete_case_from_json: expected an object");
  for (const char* key : {"alphabets", "probabilities", "table", "tree"})
    if (!j.contains(key))
      throw std::invalid_argument(
          std::string("discrete_case_from_json: missing field ") + key);
  for (const Json& a : j.at("alphabets"))
    c.alphabets.push_back(a.get<std::uint32_t>());
  for (const Json& row : j.at("probabilities")) {
    std::vector<Rational> r;
    for (const Json& q : row)
      r.push_back(detail::rational_from_json(q, "discrete_case_from_json"));
    c.probs.push_back(std::move(r));
  }
  for (const Json& v : j.at("table")) c.table.push_back(v.get<int>());
  c.tree = detail::tree_from_json(j.at("tree"));
  return c;
}

inline Json discrete_case_to_json(const DiscreteOSSSCase& c) {
  Json j;
  j["alphabets"] = c.alphabets;
  j["probabilities"] = Json::array();
  for (const auto& row : c.probs) {
    Json r = Json::array();
    for (const Rational& q : row)
      r.push_back({boost::multiprecision::numerator(q).convert_to<long long>(),
                   boost::multiprecision::denominator(q)
                       .convert_to<long long>()});
    j["probabilities"].push_back(std::move(r));
  }
  j["table"] = c.table;
  j["tree"] = detail::tree_to_json(c.tree);
  return j;
}

inline Json discrete_report_to_json(const DiscreteOSSSReport& rep) {
  auto str = [](const Rational& q) { return q.str(); };
  Json j;
  j["variance"] = str(rep.variance);
  j["revealment"] = Json::array();
  for (const Rational& q : rep.revealment) j["revealment"].push_back(str(q));
  j["influence"] = Json::array();
  for (const Rational& q : rep.influence) j["influence"].push_back(str(q));
  j["bound"] = str(rep.bound);
  j["holds"] = rep.holds;
  return j;
}

// ---------------------------------------------------------------------------
// Sector revealing machinery over sampled configurations.

// Candidate sectors: representatives strictly inside B(0, n + 1).
inline std::vector<SectorId> candidate_sectors(const SectorGrid& grid,
                                               double n) {
  if (!(n >= 0.0)) throw std::domain_error("candidate_sectors: n < 0");
  std::vector<SectorId> out;
  for (std::uint32_t k = 0; 2.0 * k * grid.epsilon() < n + 1.0; ++k) {
    std::uint32_t nk = grid.sectors_in_annulus(k);
    for (std::uint32_t l = 0; l < nk; ++l) out.push_back({k, l});
  }
  return out;
}

// Sectors whose closure meets the sphere S(0, r). A radius sitting exactly
// on an annulus cut belongs to the closed outer boundary of the annulus
// below as well.
inline std::vector<SectorId> sphere_touch_sectors(const SectorGrid& grid,
                                                  double r) {
  if (!(r >= 0.0)) throw std::domain_error("sphere_touch_sectors: r < 0");
  if (r == 0.0) return {{0, 0}};
  double eps = grid.epsilon();
  auto a = std::uint32_t(std::floor(r / (2.0 * eps)));
  if (2.0 * a * eps > r) --a;  // float guard
  if (2.0 * (a + 1) * eps <= r) ++a;
  std::vector<SectorId> out;
  std::uint32_t na = grid.sectors_in_annulus(a);
  for (std::uint32_t l = 0; l < na; ++l) out.push_back({a, l});
  if (a >= 1 && std::abs(2.0 * a * eps - r) <= 1e-12 * (1.0 + r)) {
    std::uint32_t nb = grid.sectors_in_annulus(a - 1);
    for (std::uint32_t l = 0; l < nb; ++l) out.push_back({a - 1, l});
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct DiscoverResult {
  std::vector<SectorId> read;           // sectors read, in read order
  std::vector<std::uint32_t> owners;    // nuclei owning the certified closure
  int rings = 0;                        // ring radius at certification
};

namespace detail {

inline std::uint64_t sector_key(SectorId s) {
  return (std::uint64_t(s.k) << 32) | s.l;
}

// Reveals sector contents around a target until every point of the target
// sector's closure provably has its nearest nucleus among the revealed ones.
// Certification walks a covering mesh of the closure: a mesh point passes
// when its nearest revealed nucleus plus the mesh cell diameter is still
// closer than every unrevealed sector. A coarse mesh (diameter epsilon) is
// tried before the fine one (epsilon / 4), so every certification is sound
// and the fine mesh is the resolution of record. Reads grow in integer
// rings of the hyperbolic distance between sector representatives.
class Revealer {
 public:
  Revealer(const ColoredConfig& cfg, const SectorGrid& grid)
      : cfg_(cfg), grid_(grid) {
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      HPoint q = cfg.point(i);
      buckets_[sector_key(grid.locate(q))].push_back(std::uint32_t(i));
    }
  }

  // Invoked once per newly read sector with the nuclei it contains.
  std::function<void(SectorId, const std::vector<std::uint32_t>&)> on_read;

  const std::vector<SectorId>& read_order() const { return read_order_; }

  bool is_read(SectorId s) const {
    auto it = read_flags_.find(s.k);
    return it != read_flags_.end() && it->second[s.l];
  }

  struct Outcome {
    std::vector<std::uint32_t> owners;
    int rings = 0;
  };

  Outcome discover(SectorId x) {
    HPoint rep = grid_.representative(x);
    double rx = grid_.min_origin_distance(x);
    double phix = angle_of(rep);
    for (int l = 0;; ++l) {
      read_ring(rx, phix, l);
      if (certified(x)) {
        Outcome out;
        std::sort(owners_scratch_.begin(), owners_scratch_.end());
        owners_scratch_.erase(
            std::unique(owners_scratch_.begin(), owners_scratch_.end()),
            owners_scratch_.end());
        out.owners = owners_scratch_;
        out.rings = l;
        return out;
      }
    }
  }

 private:
  struct ReadPt {
    double x, y, inv;  // inv = 1 / (1 - |z|^2)
    std::uint32_t idx;
  };
  struct MeshSpec {
    double diam;  // padding: upper bound on the mesh cell diameter
    // Centers in polar form, outermost radial row first; angle relative to
    // the wedge start. eucl = tanh(rho / 2), inv = 1 / (1 - eucl^2).
    std::vector<double> rho, relphi, eucl, inv;
  };

  const ColoredConfig& cfg_;
  const SectorGrid& grid_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
  std::unordered_map<std::uint32_t, std::vector<char>> read_flags_;
  std::vector<SectorId> read_order_;
  std::vector<ReadPt> read_pts_;
  std::vector<ReadPt> near_;
  std::vector<std::uint32_t> owners_scratch_;
  std::unordered_map<std::uint64_t, MeshSpec> meshes_;
  std::unordered_map<std::uint32_t, double> diam_cache_;
  int ring_ = 0;
  static const std::vector<std::uint32_t>& empty_bucket() {
    static const std::vector<std::uint32_t> e;
    return e;
  }

  // Upper bound on the diameter of a sector of annulus k: radial extent
  // plus the outer-circle arc subtending the angular width.
  double sector_diam(std::uint32_t k) {
    auto it = diam_cache_.find(k);
    if (it != diam_cache_.end()) return it->second;
    Annulus a = grid_.annulus(k);
    double d =
        (a.outer - a.inner) + std::sinh(a.outer) * grid_.angular_width(k);
    diam_cache_.emplace(k, d);
    return d;
  }

  void try_read(SectorId s) {
    auto [it, fresh] = read_flags_.try_emplace(s.k);
    if (fresh) it->second.assign(grid_.sectors_in_annulus(s.k), 0);
    if (it->second[s.l]) return;
    if (grid_.annulus(s.k).outer > cfg_.window_radius + 1e-9)
      throw std::runtime_error(
          "discover: certification needs sectors outside the sampled window");
    it->second[s.l] = 1;
    read_order_.push_back(s);
    auto bit = buckets_.find(sector_key(s));
    const auto& pts = bit == buckets_.end() ? empty_bucket() : bit->second;
    for (std::uint32_t i : pts) {
      double zx = cfg_.x(i), zy = cfg_.y(i);
      read_pts_.push_back({zx, zy, 1.0 / (1.0 - zx * zx - zy * zy), i});
    }
    if (on_read) on_read(s, pts);
  }

  // Scans wedges of one annulus outward from the angle phi, invoking
  // fn(id, distance) while the exact sector distance stays within limit.
  template <class Fn>
  void scan_annulus(std::uint32_t k, double rho, double phi, double limit,
                    Fn&& fn) {
    std::uint32_t nk = grid_.sectors_in_annulus(k);
    if (nk == 1) {
      double d = grid_.distance_to({k, 0}, rho, phi);
      if (d <= limit) fn(SectorId{k, 0}, d);
      return;
    }
    double width = grid_.angular_width(k);
    auto wrap = [nk](std::int64_t v) {
      std::int64_t m = v % std::int64_t(nk);
      return std::uint32_t(m < 0 ? m + nk : m);
    };
    std::int64_t l0 = std::int64_t(std::floor(phi / width));
    std::uint32_t scanned = 0;
    for (int dir : {1, -1}) {
      for (std::int64_t off = (dir == 1 ? 0 : 1);; ++off) {
        if (scanned >= nk) return;
        SectorId id{k, wrap(l0 + dir * off)};
        double d = grid_.distance_to(id, rho, phi);
        if (d > limit) break;
        fn(id, d);
        ++scanned;
      }
    }
  }

  void read_ring(double rx, double phix, int l) {
    ring_ = l;
    double eps = grid_.epsilon();
    auto klo = std::int64_t(std::ceil((rx - l) / (2.0 * eps) - 1e-9));
    auto khi = std::int64_t(std::floor((rx + l) / (2.0 * eps) + 1e-9));
    for (std::int64_t k = std::max<std::int64_t>(0, klo); k <= khi; ++k) {
      double rr = 2.0 * double(k) * eps;
      if (std::abs(rr - rx) > l + 1e-12) continue;
      std::uint32_t nk = grid_.sectors_in_annulus(std::uint32_t(k));
      if (k == 0) {
        if (rx <= l + 1e-12) try_read({0, 0});
        continue;
      }
      double width = kTwoPi / double(nk);
      auto wrap = [nk](std::int64_t v) {
        std::int64_t m = v % std::int64_t(nk);
        return std::uint32_t(m < 0 ? m + nk : m);
      };
      std::int64_t l0 = std::int64_t(std::floor(phix / width));
      std::uint32_t scanned = 0;
      for (int dir : {1, -1}) {
        for (std::int64_t off = (dir == 1 ? 0 : 1);; ++off) {
          if (scanned >= nk) break;
          std::uint32_t idx = wrap(l0 + dir * off);
          double ang = width * double(idx);
          double dphi = std::abs(phix - ang);
          dphi = std::min(dphi, kTwoPi - dphi);
          if (dist_polar(rx, rr, dphi) > l + 1e-12) break;
          try_read({std::uint32_t(k), idx});
          ++scanned;
        }
        if (scanned >= nk) break;
      }
    }
  }

  const MeshSpec& mesh_for(std::uint32_t k, int level) {
    std::uint64_t key = (std::uint64_t(k) << 1) | std::uint64_t(level);
    auto it = meshes_.find(key);
    if (it != meshes_.end()) return it->second;
    MeshSpec ms;
    double eps = grid_.epsilon();
    ms.diam = level == 0 ? eps : 0.25 * eps;
    Annulus a = grid_.annulus(k);
    double width = grid_.angular_width(k);
    auto mr = std::size_t(std::ceil((a.outer - a.inner) / (0.5 * ms.diam)));
    auto ma = std::size_t(
        std::ceil(std::sinh(a.outer) * width / (0.5 * ms.diam)));
    mr = std::max<std::size_t>(mr, 1);
    ma = std::max<std::size_t>(ma, 1);
    double dr = (a.outer - a.inner) / double(mr);
    double dt = width / double(ma);
    for (std::size_t i = mr; i-- > 0;) {
      double rho = a.inner + (double(i) + 0.5) * dr;
      for (std::size_t j = 0; j < ma; ++j) {
        double eu = std::tanh(0.5 * rho);
        ms.rho.push_back(rho);
        ms.relphi.push_back((double(j) + 0.5) * dt);
        ms.eucl.push_back(eu);
        ms.inv.push_back(1.0 / (1.0 - eu * eu));
      }
    }
    return meshes_.emplace(key, std::move(ms)).first->second;
  }

  bool certified(SectorId x) {
    for (int level : {0, 1})
      if (mesh_pass(x, level)) return true;
    return false;
  }

  bool mesh_pass(SectorId x, int level) {
    const MeshSpec& ms = mesh_for(x.k, level);
    owners_scratch_.clear();
    if (read_pts_.empty()) return false;
    double th0 = x.k == 0 ? 0.0 : grid_.angular_width(x.k) * double(x.l);
    HPoint rep = grid_.representative(x);
    double cutoff = double(ring_) + sector_diam(x.k) + ms.diam + 0.5;
    double scut = detail::sq(std::sinh(0.5 * cutoff));
    double rpx = rep[0], rpy = rep[1];
    double rinv = 1.0 / (1.0 - rpx * rpx - rpy * rpy);
    near_.clear();
    for (const ReadPt& z : read_pts_) {
      double dx = z.x - rpx, dy = z.y - rpy;
      if ((dx * dx + dy * dy) * rinv * z.inv <= scut) near_.push_back(z);
    }
    if (near_.empty()) return false;
    // A nucleus dropped by the filter sits farther than guard from every
    // mesh point, so a filtered minimum within guard is the exact one;
    // otherwise rescan everything for that point.
    double guard = double(ring_) + ms.diam + 0.5 - 1e-6;
    for (std::size_t c = 0; c < ms.rho.size(); ++c) {
      double phi = th0 + ms.relphi[c];
      double mx = ms.eucl[c] * std::cos(phi), my = ms.eucl[c] * std::sin(phi);
      double invm = ms.inv[c];
      double smin = std::numeric_limits<double>::infinity();
      std::uint32_t amin = 0;
      auto scan = [&](const std::vector<ReadPt>& pts) {
        for (const ReadPt& z : pts) {
          double dx = z.x - mx, dy = z.y - my;
          double s = (dx * dx + dy * dy) * invm * z.inv;
          if (s < smin) {
            smin = s;
            amin = z.idx;
          }
        }
      };
      scan(near_);
      double reach = 2.0 * std::asinh(std::sqrt(smin));
      if (reach > guard) {
        scan(read_pts_);
        reach = 2.0 * std::asinh(std::sqrt(smin));
      }
      double limit = reach + ms.diam;
      if (unread_sector_within(ms.rho[c], phi, limit)) return false;
      owners_scratch_.push_back(amin);
    }
    return true;
  }

  bool unread_sector_within(double rho, double phi, double limit) {
    bool hit = false;
    for (std::uint32_t k = 0;; ++k) {
      Annulus a = grid_.annulus(k);
      if (a.inner > rho + limit) break;
      double gap =
          rho < a.inner ? a.inner - rho : (rho > a.outer ? rho - a.outer : 0.0);
      if (gap > limit) continue;
      scan_annulus(k, rho, phi, limit, [&](SectorId id, double) {
        if (!hit && !is_read(id)) hit = true;
      });
      if (hit) return true;
    }
    return false;
  }
};

}  // namespace detail

// Reveals sectors around x until the ownership of the whole closed sector
// is certified by the revealed nuclei alone. Returns the sectors read (in
// order), the owners of the certification mesh, and the final ring radius.
inline DiscoverResult discover(const ColoredConfig& cfg, const SectorGrid& grid,
                               SectorId x) {
  if (cfg.size() == 0)
    throw std::invalid_argument("discover: empty configuration");
  if (x.l >= grid.sectors_in_annulus(x.k))
    throw std::invalid_argument("discover: no such sector");
  detail::Revealer rev(cfg, grid);
  auto got = rev.discover(x);
  return {rev.read_order(), std::move(got.owners), got.rings};
}

// ---------------------------------------------------------------------------
// Cluster-revealing exploration of the one-arm event.

struct TraceStep {
  SectorId picked;
  std::uint64_t x_size = 0;  // sectors picked so far
  std::uint64_t z_size = 0;  // nuclei joined to the sphere clusters
  std::uint64_t w_size = 0;  // black nuclei seen but not yet joined
  std::uint64_t m_size = 0;  // frontier after the update
};

struct DecisionTrace {
  std::vector<SectorId> picks;  // in pick order; lexicographic frontier rule
  std::vector<SectorId> reads;  // every sector read, in read order
  std::vector<TraceStep> steps;
  bool value = false;
  double n = 0, k = 0, p = 0;
  std::size_t candidates = 0;
};

namespace detail {

struct FlagDsu {
  std::vector<std::uint32_t> parent;
  std::vector<char> sphere, joined, reach;
  explicit FlagDsu(std::size_t n)
      : parent(n), sphere(n, 0), joined(n, 0), reach(n, 0) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = std::uint32_t(i);
  }
  std::uint32_t find(std::uint32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    parent[b] = a;
    sphere[a] |= sphere[b];
    joined[a] |= joined[b];
    reach[a] |= reach[b];
  }
};

// Sectors touched by the closed cell of nucleus u clipped to the closed
// ball B(0, n). Boundary certificates: subdivision of every incident arc at
// spacing h, the origin-nearest arc point, sphere crossings and the cell's
// sphere cap, with points on an annulus cut assigned to both sides; wedge
// runs wholly inside the cell are filled by center probes between
// certificate wedges. Touches thinner than h can be missed; nothing outside
// the region is ever reported.
inline std::vector<SectorId> cell_touched_sectors(const Tessellation& tess,
                                                  const SectorGrid& grid,
                                                  std::uint32_t u, double n) {
  double eps = grid.epsilon();
  if (tess.size() == 1) return grid.sectors_touching_ball(n);
  if (tess.cell_min_origin(u) > n) return {};
  std::set<SectorId> out;
  double h = 0.25 * eps;

  auto add_point = [&](double rho, double phi) {
    rho = std::min(rho, n);
    if (phi < 0.0) phi += kTwoPi;
    SectorId s = grid.locate(rho, phi);
    out.insert(s);
    if (s.k > 0 && rho - grid.annulus(s.k).inner <= 1e-9) {
      std::uint32_t kb = s.k - 1;
      double width = grid.angular_width(kb);
      auto lb = std::uint32_t(std::floor(phi / width));
      out.insert({kb, std::min(lb, grid.sectors_in_annulus(kb) - 1)});
    }
  };

  std::vector<double> cross_angles;
  for (std::size_t s = 0; s < tess.degree(u); ++s) {
    std::uint32_t eid = tess.incident_edge(u, s);
    double mo = tess.edge_arc_min_origin(eid);
    if (mo > n) continue;
    HPoint w = tess.edge_arc_min_point(eid);
    add_point(mo, angle_of(w));
    for (const HPoint& cpt : tess.edge_arc_sphere_points(eid, n)) {
      double ang = angle_of(cpt);
      add_point(n, ang);
      cross_angles.push_back(ang);
    }
    auto ap = tess.edge_arc_params(eid);
    // Iterative bisection; prune segments that stay outside the ball.
    struct Seg {
      double ta, tb, da, db;
      HPoint pa, pb;
      int depth;
    };
    HPoint p0 = tess.edge_arc_point_at(eid, ap.u0);
    HPoint p1 = tess.edge_arc_point_at(eid, ap.u1);
    std::vector<Seg> stack{
        {ap.u0, ap.u1, hyp_radius_of(p0), hyp_radius_of(p1), p0, p1, 0}};
    while (!stack.empty()) {
      Seg sg = stack.back();
      stack.pop_back();
      double lo = ap.t_min > sg.ta && ap.t_min < sg.tb
                      ? mo
                      : std::min(sg.da, sg.db);
      if (lo > n) continue;
      bool fine = sg.depth >= 42;
      if (!fine) {
        double da = sg.da > n ? n : sg.da, db = sg.db > n ? n : sg.db;
        // Chord within the ball: compare against clipped radii so ideal
        // tails do not force needless splits once both ends are outside.
        fine = std::abs(da - db) <= h &&
               hyp_distance(sg.pa, sg.pb) <= h;
      }
      if (fine) {
        if (sg.da <= n) add_point(sg.da, angle_of(sg.pa));
        if (sg.db <= n) add_point(sg.db, angle_of(sg.pb));
        continue;
      }
      double tm = 0.5 * (sg.ta + sg.tb);
      HPoint pm = tess.edge_arc_point_at(eid, tm);
      double dm = hyp_radius_of(pm);
      stack.push_back({sg.ta, tm, sg.da, dm, sg.pa, pm, sg.depth + 1});
      stack.push_back({tm, sg.tb, dm, sg.db, pm, sg.pb, sg.depth + 1});
    }
  }
  double ru = tess.nucleus_radius(u);
  if (ru <= n) add_point(ru, angle_of(tess.nucleus(u)));

  // Sphere cap: the boundary of cell /\ ball along S(0, n) is one arc for a
  // convex cell; enumerate the wedges it spans.
  if (n > 0.0 && tess.cell_intersects_sphere(u, n) && tess.cell_reach(u) > n &&
      cross_angles.size() == 2) {
    double a0 = cross_angles[0], a1 = cross_angles[1];
    double fwd = a1 - a0;
    if (fwd < 0.0) fwd += kTwoPi;
    double mid_in = a0 + 0.5 * fwd;
    double mid_out = mid_in + kPi;
    auto inside = [&](double ang) {
      return tess.owner_of(HPoint::from_polar(n, ang)) == u;
    };
    double from = a0, span = fwd;
    if (!inside(mid_in) && inside(mid_out)) {
      from = a1;
      span = kTwoPi - fwd;
    } else if (!inside(mid_in)) {
      span = -1.0;  // numeric tangency; crossing points already added
    }
    if (span >= 0.0) {
      std::uint32_t ck = grid.locate(n, 0.0).k;
      double width = grid.angular_width(ck);
      auto steps = std::size_t(std::ceil(span / width)) + 1;
      for (std::size_t i = 0; i <= steps; ++i) {
        double ang = from + std::min(span, double(i) * width);
        if (ang >= kTwoPi) ang -= kTwoPi;
        add_point(n, ang);
      }
    }
  }

  // Interior fill: wedge runs between certificate wedges whose centers lie
  // in the cell. Touched wedges per annulus are circularly contiguous per
  // component, so runs adjacent to certificates cover interior wedges.
  double rlo = tess.cell_min_origin(u);
  double rhi = std::min(n, tess.cell_reach(u));
  if (rhi >= rlo) {
    auto klo = std::uint32_t(std::max(0.0, std::floor(rlo / (2.0 * eps))));
    auto khi = std::uint32_t(std::floor(rhi / (2.0 * eps)));
    for (std::uint32_t k = klo; k <= khi; ++k) {
      double rc = (2.0 * k + 1.0) * eps;
      if (rc > n || rc < rlo || rc > rhi) continue;
      std::uint32_t nk = grid.sectors_in_annulus(k);
      std::vector<std::uint32_t> certs;
      for (auto it = out.lower_bound({k, 0});
           it != out.end() && it->k == k; ++it)
        certs.push_back(it->l);
      if (certs.empty() || certs.size() >= nk) continue;
      double width = grid.angular_width(k);
      auto probe = [&](std::uint32_t l) {
        HPoint q = HPoint::from_polar(rc, (double(l) + 0.5) * width);
        return tess.owner_of(q) == u;
      };
      for (std::size_t i = 0; i < certs.size(); ++i) {
        std::uint32_t cur = certs[i];
        std::uint32_t nxt = certs[(i + 1) % certs.size()];
        std::uint32_t gap = (nxt + nk - cur - 1) % nk;
        for (std::uint32_t step = 1; step <= gap; ++step) {
          std::uint32_t l = (cur + step) % nk;
          if (out.count({k, l}) || !probe(l)) break;
          out.insert({k, l});
        }
        for (std::uint32_t step = 1; step <= gap; ++step) {
          std::uint32_t l = (nxt + nk - step) % nk;
          if (out.count({k, l}) || !probe(l)) break;
          out.insert({k, l});
        }
      }
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace detail

// Runs the frontier exploration: starting from the sectors touching
// S(0, k), repeatedly pick the lexicographically smallest unpicked candidate
// sector whose closure touches the revealed sphere clusters, certify its
// ownership via discover, and fold its black owners into the cluster
// bookkeeping. Candidates are the sectors with representatives inside
// B(0, n + 1); the cluster region is clipped to the closed ball B(0, n).
// The returned value is the one-arm event evaluated on the revealed nuclei
// and equals one_arm_event(cfg, p, n) on every input.
inline DecisionTrace reveal_clusters(const ColoredConfig& cfg, double p,
                                     const SectorGrid& grid, double n,
                                     double k) {
  if (cfg.size() == 0)
    throw std::invalid_argument("reveal_clusters: empty configuration");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("reveal_clusters: p outside [0, 1]");
  if (!(n >= 0.0)) throw std::domain_error("reveal_clusters: n < 0");
  if (!(k >= 0.0 && k <= n))
    throw std::invalid_argument("reveal_clusters: need 0 <= k <= n");

  std::vector<SectorId> cand = candidate_sectors(grid, n);
  double r_cap = grid.annulus(cand.back().k).outer;
  if (cfg.window_radius + 1e-9 < r_cap)
    throw std::invalid_argument(
        "reveal_clusters: window does not cover the candidate sectors");

  // Truncated support with certified ownership fidelity through r_cap:
  // every cell meeting B(0, r_cap) keeps its exact shape there once nuclei
  // within r_cap + coverage are present.
  std::vector<double> radius(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i)
    radius[i] = hyp_radius_of(cfg.point(i));
  double r_t = std::min(cfg.window_radius, r_cap + 1.0);
  ColoredConfig sub;
  std::vector<std::int64_t> sub_of(cfg.size(), -1);
  std::vector<std::uint32_t> orig_of;
  std::optional<Tessellation> tess;
  for (;;) {
    sub = {};
    sub.lambda = cfg.lambda;
    sub.window_radius = cfg.window_radius;
    std::fill(sub_of.begin(), sub_of.end(), -1);
    orig_of.clear();
    for (std::size_t i = 0; i < cfg.size(); ++i)
      if (radius[i] <= r_t) {
        sub_of[i] = std::int64_t(sub.size());
        orig_of.push_back(std::uint32_t(i));
        sub.append(cfg.point(i), cfg.marks[i]);
      }
    if (sub.size() == 0) {
      if (r_t >= cfg.window_radius - 1e-12)
        throw std::invalid_argument("reveal_clusters: no nuclei in range");
      r_t = cfg.window_radius;
      continue;
    }
    tess.emplace(sub);
    if (r_t >= cfg.window_radius - 1e-12) break;
    double cov = tess->coverage_radius(r_cap);
    if (r_cap + cov <= r_t) break;
    r_t = std::min(cfg.window_radius, r_cap + cov + 0.25);
  }

  std::size_t ns = sub.size();
  std::vector<char> black(ns), read(ns, 0), in_z(ns, 0), in_w(ns, 0);
  for (std::size_t i = 0; i < ns; ++i)
    black[i] = is_black(sub.marks[i], p) ? 1 : 0;
  detail::FlagDsu dsu(ns);
  for (std::uint32_t i = 0; i < ns; ++i) {
    if (!black[i]) continue;
    dsu.sphere[i] = tess->cell_intersects_sphere(i, k) ? 1 : 0;
    dsu.reach[i] = tess->cell_reach(i) >= n ? 1 : 0;
  }
  std::uint32_t owner0 = tess->owner_of(0.0, 0.0);

  DecisionTrace trace;
  trace.n = n;
  trace.k = k;
  trace.p = p;
  trace.candidates = cand.size();

  detail::Revealer rev(cfg, grid);
  rev.on_read = [&](SectorId s, const std::vector<std::uint32_t>& pts) {
    trace.reads.push_back(s);
    for (std::uint32_t orig : pts) {
      std::int64_t su = sub_of[orig];
      if (su < 0) continue;
      auto u = std::uint32_t(su);
      read[u] = 1;
      if (!black[u]) continue;
      for (std::size_t a = 0; a < tess->degree(u); ++a) {
        std::uint32_t v = tess->neighbor(u, a);
        if (!read[v] || !black[v]) continue;
        if (tess->edge_arc_min_origin(tess->incident_edge(u, a)) > n) continue;
        dsu.unite(u, v);
      }
    }
  };

  std::set<SectorId> picked;
  std::set<SectorId> frontier;
  std::set<SectorId> cand_set(cand.begin(), cand.end());
  for (SectorId s : sphere_touch_sectors(grid, k))
    if (cand_set.count(s)) frontier.insert(s);

  std::unordered_map<std::uint32_t, std::vector<SectorId>> touch_cache;
  std::vector<std::uint32_t> w_members;
  std::uint64_t z_count = 0;
  auto join = [&](std::uint32_t u) {
    in_z[u] = 1;
    ++z_count;
    dsu.joined[dsu.find(u)] = 1;
    auto it = touch_cache.find(u);
    if (it == touch_cache.end())
      it = touch_cache
               .emplace(u, detail::cell_touched_sectors(*tess, grid, u, n))
               .first;
    for (SectorId s : it->second)
      if (cand_set.count(s) && !picked.count(s)) frontier.insert(s);
  };

  std::vector<std::uint32_t> h_list, k_list, l_list;
  while (!frontier.empty()) {
    SectorId y = *frontier.begin();
    frontier.erase(frontier.begin());
    picked.insert(y);
    trace.picks.push_back(y);
    auto got = rev.discover(y);
    h_list.clear();
    k_list.clear();
    for (std::uint32_t orig : got.owners) {
      std::int64_t su = sub_of[orig];
      if (su < 0) continue;
      auto u = std::uint32_t(su);
      if (!black[u] || in_z[u] || in_w[u]) continue;
      std::uint32_t r = dsu.find(u);
      (dsu.sphere[r] || dsu.joined[r] ? h_list : k_list).push_back(u);
    }
    std::sort(h_list.begin(), h_list.end());
    h_list.erase(std::unique(h_list.begin(), h_list.end()), h_list.end());
    std::sort(k_list.begin(), k_list.end());
    k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());
    for (std::uint32_t u : h_list) join(u);
    l_list.clear();
    for (std::uint32_t u : w_members) {
      std::uint32_t r = dsu.find(u);
      if (dsu.sphere[r] || dsu.joined[r]) l_list.push_back(u);
    }
    if (!l_list.empty()) {
      std::erase_if(w_members, [&](std::uint32_t u) {
        std::uint32_t r = dsu.find(u);
        return dsu.sphere[r] || dsu.joined[r];
      });
      for (std::uint32_t u : l_list) {
        in_w[u] = 0;
        join(u);
      }
    }
    for (std::uint32_t u : k_list) {
      in_w[u] = 1;
      w_members.push_back(u);
    }
    trace.steps.push_back({y, trace.picks.size(), z_count, w_members.size(),
                           frontier.size()});
    if (trace.picks.size() > cand.size())
      throw std::logic_error("reveal_clusters: frontier failed to terminate");
  }

  trace.value =
      read[owner0] && black[owner0] && dsu.reach[dsu.find(owner0)];
  return trace;
}

// ---------------------------------------------------------------------------
// Estimators.

using SectorEstimates = std::vector<std::pair<SectorId, EstimateResult>>;

// Frequency with which each candidate sector is picked by the exploration.
// Sectors outside the candidate range are never picked and are not listed.
inline SectorEstimates estimate_revealment(double lambda, double p,
                                           double epsilon, double n, double k,
                                           std::size_t trials,
                                           std::uint64_t seed, int workers = 0,
                                           double window_slack = 6.5) {
  if (!(lambda > 0.0))
    throw std::domain_error("estimate_revealment: lambda <= 0");
  if (trials == 0)
    throw std::invalid_argument("estimate_revealment: no trials");
  if (!(window_slack >= 2.0))
    throw std::invalid_argument("estimate_revealment: window slack too small");
  SectorGrid grid(epsilon);
  std::vector<SectorId> cand = candidate_sectors(grid, n);
  RngStream root(seed);
  std::vector<std::vector<SectorId>> picks(trials);
  parallel_chunks(trials, resolve_workers(workers),
                  [&](std::size_t lo, std::size_t hi) {
                    for (std::size_t t = lo; t < hi; ++t) {
                      RngStream rng = root.child(t);
                      ColoredConfig cfg =
                          sample_ppp(lambda, n + window_slack, 2, rng);
                      picks[t] =
                          reveal_clusters(cfg, p, grid, n, k).picks;
                    }
                  });
  std::map<SectorId, std::uint64_t> counts;
  for (SectorId s : cand) counts[s] = 0;
  for (const auto& ps : picks)
    for (SectorId s : ps) ++counts.at(s);
  SectorEstimates out;
  out.reserve(cand.size());
  for (SectorId s : cand)
    out.emplace_back(s, bernoulli_estimate(counts[s], trials));
  return out;
}

namespace detail {

// One-arm event on the support truncated to a certified radius: ownership
// (and hence colors, adjacency arcs and reach tests inside the ball) agrees
// with the full window once nuclei within n + coverage are kept.
inline bool arm_event_truncated(const ColoredConfig& cfg, double p, double n) {
  if (cfg.size() == 0) return false;
  std::vector<double> radius(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i)
    radius[i] = hyp_radius_of(cfg.point(i));
  double r_t = std::min(cfg.window_radius, n + 1.6);
  for (;;) {
    ColoredConfig sub;
    sub.lambda = cfg.lambda;
    sub.window_radius = cfg.window_radius;
    for (std::size_t i = 0; i < cfg.size(); ++i)
      if (radius[i] <= r_t) sub.append(cfg.point(i), cfg.marks[i]);
    if (sub.size() == 0) {
      if (r_t >= cfg.window_radius - 1e-12) return false;
      r_t = cfg.window_radius;
      continue;
    }
    Tessellation tess(sub);
    if (r_t < cfg.window_radius - 1e-12) {
      double cov = tess.coverage_radius(n);
      if (n + cov > r_t) {
        r_t = std::min(cfg.window_radius, n + cov + 0.25);
        continue;
      }
    }
    return one_arm_event(tess, tess.owner_of(0.0, 0.0), sub.marks, p, n);
  }
}

struct InfluenceCounts {
  std::vector<std::uint64_t> disagree;  // per sector
  std::vector<double> trial_sums;       // disagreements per trial
};

inline InfluenceCounts influence_trials(double lambda, double p,
                                        const SectorGrid& grid, double n,
                                        const std::vector<SectorId>& sectors,
                                        std::size_t trials, RngStream root,
                                        int workers) {
  double max_hi = 0.0;
  for (SectorId s : sectors) {
    if (s.l >= grid.sectors_in_annulus(s.k))
      throw std::invalid_argument("estimate_influence: no such sector");
    max_hi = std::max(max_hi, grid.annulus(s.k).outer);
  }
  double r_w = std::max(n + default_window_slack(lambda), max_hi + 1.0);
  std::vector<std::vector<char>> flips(trials);
  parallel_chunks(trials, resolve_workers(workers), [&](std::size_t lo,
                                                        std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      RngStream base_rng = root.child(t, 1);
      ColoredConfig cfg = sample_ppp(lambda, r_w, 2, base_rng);
      bool base_event = arm_event_truncated(cfg, p, n);
      // Coverage on a truncated support only overestimates the full-window
      // coverage, which keeps the skip rule conservative.
      double cov = std::numeric_limits<double>::infinity();
      {
        double r_cov = std::min(r_w, n + 3.0);
        ColoredConfig covsub;
        covsub.lambda = cfg.lambda;
        covsub.window_radius = cfg.window_radius;
        for (std::size_t i = 0; i < cfg.size(); ++i)
          if (hyp_radius_of(cfg.point(i)) <= r_cov)
            covsub.append(cfg.point(i), cfg.marks[i]);
        if (covsub.size() != 0) cov = Tessellation(covsub).coverage_radius(n);
      }
      std::vector<SectorId> locs(cfg.size());
      for (std::size_t i = 0; i < cfg.size(); ++i)
        locs[i] = grid.locate(cfg.point(i));
      flips[t].assign(sectors.size(), 0);
      for (std::size_t j = 0; j < sectors.size(); ++j) {
        SectorId s = sectors[j];
        // Changes confined to a region farther than the coverage radius
        // cannot alter ownership on the ball, so the event is unchanged.
        if (grid.min_origin_distance(s) > n + cov) continue;
        ColoredConfig mod;
        mod.lambda = cfg.lambda;
        mod.window_radius = cfg.window_radius;
        for (std::size_t i = 0; i < cfg.size(); ++i)
          if (!(locs[i] == s)) mod.append(cfg.point(i), cfg.marks[i]);
        RngStream rs = root.child(t, 2 + j);
        double width = grid.angular_width(s.k);
        sample_ppp_polar_region_into(mod, grid.annulus(s.k),
                                     width * double(s.l),
                                     width * double(s.l + 1), rs);
        bool ev = arm_event_truncated(mod, p, n);
        if (ev != base_event) flips[t][j] = 1;
      }
    }
  });
  InfluenceCounts out;
  out.disagree.assign(sectors.size(), 0);
  out.trial_sums.resize(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < sectors.size(); ++j) {
      out.disagree[j] += flips[t][j];
      s += flips[t][j];
    }
    out.trial_sums[t] = s;
  }
  return out;
}

}  // namespace detail

// Disagreement frequency of the one-arm event when a single sector's
// contents are resampled against a shared base sample per trial.
inline SectorEstimates estimate_influence(double lambda, double p,
                                          double epsilon, double n,
                                          const std::vector<SectorId>& sectors,
                                          std::size_t trials,
                                          std::uint64_t seed,
                                          int workers = 0) {
  if (!(lambda > 0.0))
    throw std::domain_error("estimate_influence: lambda <= 0");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("estimate_influence: p outside [0, 1]");
  if (!(n >= 0.0)) throw std::domain_error("estimate_influence: n < 0");
  if (trials == 0)
    throw std::invalid_argument("estimate_influence: no trials");
  SectorGrid grid(epsilon);
  auto counts = detail::influence_trials(lambda, p, grid, n, sectors, trials,
                                         RngStream(seed), workers);
  SectorEstimates out;
  out.reserve(sectors.size());
  for (std::size_t j = 0; j < sectors.size(); ++j)
    out.emplace_back(sectors[j],
                     bernoulli_estimate(counts.disagree[j], trials));
  return out;
}

struct DerivativeInfluenceReport {
  double lambda = 0, p = 0, dp = 0, epsilon = 0, n = 0;
  std::size_t trials = 0;
  double derivative = 0, derivative_se = 0;
  double influence_half_sum = 0, influence_half_sum_se = 0;
  double sigma = 0;  // combined standard error
  bool pass = false;
  SectorEstimates influences;
};

// Checks that the central finite difference of the mark-coupled one-arm
// probability dominates half the summed sector influences within three
// combined standard errors. The influence sum runs over the candidate
// sectors (representatives inside B(0, n + 1)); dropping farther sectors
// only lowers the right-hand side.
inline DerivativeInfluenceReport derivative_influence_audit(
    double lambda, double p, double epsilon, double n, double dp,
    std::size_t trials, std::uint64_t seed, int workers = 0) {
  if (!(lambda > 0.0))
    throw std::domain_error("derivative_influence_audit: lambda <= 0");
  if (!(dp > 0.0))
    throw std::invalid_argument(
        "derivative_influence_audit: dp must be positive");
  if (!(p - dp >= 0.0 && p + dp <= 1.0))
    throw std::invalid_argument(
        "derivative_influence_audit: p +/- dp outside [0, 1]");
  if (trials == 0)
    throw std::invalid_argument("derivative_influence_audit: no trials");
  DerivativeInfluenceReport rep;
  rep.lambda = lambda;
  rep.p = p;
  rep.dp = dp;
  rep.epsilon = epsilon;
  rep.n = n;
  rep.trials = trials;
  SectorGrid grid(epsilon);
  RngStream root(seed);

  std::vector<double> crit =
      one_arm_critical_batch(lambda, n, trials, root.child(1), workers);
  std::uint64_t hits = 0;
  for (double c : crit) hits += (c > p - dp && c <= p + dp) ? 1 : 0;
  double q = double(hits) / double(trials);
  rep.derivative = q / (2.0 * dp);
  rep.derivative_se =
      std::sqrt(q * (1.0 - q) / double(trials)) / (2.0 * dp);

  std::vector<SectorId> sectors = candidate_sectors(grid, n);
  auto counts = detail::influence_trials(lambda, p, grid, n, sectors, trials,
                                         root.child(2), workers);
  rep.influences.reserve(sectors.size());
  for (std::size_t j = 0; j < sectors.size(); ++j)
    rep.influences.emplace_back(sectors[j],
                                bernoulli_estimate(counts.disagree[j], trials));
  RunningStat sums;
  for (double s : counts.trial_sums) sums.push(s);
  rep.influence_half_sum = 0.5 * sums.mean;
  rep.influence_half_sum_se = 0.5 * sums.std_err();
  rep.sigma = std::hypot(rep.derivative_se, rep.influence_half_sum_se);
  rep.pass = rep.derivative >= rep.influence_half_sum - 3.0 * rep.sigma;
  return rep;
}

}  // namespace hypervoro

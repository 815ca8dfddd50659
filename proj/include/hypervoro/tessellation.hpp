#pragma once

// Voronoi tessellation of hyperbolic nuclei in ball coordinates.
//
// Hyperbolic disks are euclidean disks, so the euclidean Delaunay
// triangulation of the ball coordinates carries all candidate adjacencies;
// an edge is a true hyperbolic Voronoi adjacency iff some empty witness
// circumdisk through its endpoints lies inside the open unit disk. Witness
// disks through a fixed pair form a pencil parametrized by the center's
// position t on the euclidean bisector line, the empty ones form exactly
// the interval between the incident circumdisk centers (one side unbounded
// for hull edges), and t -> |center(t)| + radius(t) is convex, which makes
// the filter a one-dimensional convex minimization. Bisectors are
// geodesics, so everything downstream (arc minima, sphere crossings,
// coverage) reduces to unimodal searches along the same parameter.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "hypervoro/geometry.hpp"
#include "hypervoro/io.hpp"
#include "hypervoro/sampling.hpp"

namespace hypervoro {
namespace detail {

inline double cross2(double ox, double oy, double ax, double ay, double bx,
                     double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

// > 0 iff p strictly inside the circumcircle of ccw (a, b, c).
inline double incircle_det(double ax, double ay, double bx, double by,
                           double cx, double cy, double px, double py) {
  double dx = ax - px, dy = ay - py;
  double ex = bx - px, ey = by - py;
  double fx = cx - px, fy = cy - py;
  double ap = dx * dx + dy * dy;
  double bp = ex * ex + ey * ey;
  double cp = fx * fx + fy * fy;
  return dx * (ey * cp - bp * fy) - dy * (ex * cp - bp * fx) +
         ap * (ex * fy - ey * fx);
}

struct Circum {
  double x, y, r2;
};

// Circumcenter relative to a (added back by the caller); r2 = +inf when
// collinear.
inline Circum circum_rel(double bx, double by, double cx, double cy) {
  double d = 2.0 * (bx * cy - by * cx);
  if (d == 0.0)
    return {0.0, 0.0, std::numeric_limits<double>::infinity()};
  double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  double ux = (cy * b2 - by * c2) / d;
  double uy = (bx * c2 - cx * b2) / d;
  return {ux, uy, ux * ux + uy * uy};
}

// Euclidean Delaunay triangulation, sweep-hull construction (halfedge
// output: triangle e/3 owns halfedge e, which runs from triangles[e] to
// triangles[3*(e/3) + (e+1)%3]; halfedges[e] is the twin or -1).
class EuclidDelaunay {
 public:
  std::vector<std::uint32_t> triangles;
  std::vector<std::int32_t> halfedges;

  explicit EuclidDelaunay(const std::vector<double>& coords) : xy_(coords) {
    std::size_t n = xy_.size() / 2;
    if (n < 3) return;

    double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
      minx = std::min(minx, x(i));
      maxx = std::max(maxx, x(i));
      miny = std::min(miny, y(i));
      maxy = std::max(maxy, y(i));
    }
    double cx = 0.5 * (minx + maxx), cy = 0.5 * (miny + maxy);

    std::uint32_t i0 = 0;
    double best = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      double d = sq(x(i) - cx) + sq(y(i) - cy);
      if (d < best) {
        best = d;
        i0 = std::uint32_t(i);
      }
    }
    std::uint32_t i1 = 0;
    best = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == i0) continue;
      double d = sq(x(i) - x(i0)) + sq(y(i) - y(i0));
      if (d < best) {
        best = d;
        i1 = std::uint32_t(i);
      }
    }
    std::uint32_t i2 = 0;
    best = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == i0 || i == i1) continue;
      Circum c = circum_rel(x(i1) - x(i0), y(i1) - y(i0), x(i) - x(i0),
                            y(i) - y(i0));
      if (c.r2 < best) {
        best = c.r2;
        i2 = std::uint32_t(i);
      }
    }
    if (!(best < 1e300))
      throw std::invalid_argument("EuclidDelaunay: all points collinear");
    if (cross2(x(i0), y(i0), x(i1), y(i1), x(i2), y(i2)) < 0.0)
      std::swap(i1, i2);

    Circum cc = circum_rel(x(i1) - x(i0), y(i1) - y(i0), x(i2) - x(i0),
                           y(i2) - y(i0));
    double ccx = x(i0) + cc.x, ccy = y(i0) + cc.y;

    std::vector<std::uint32_t> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::uint32_t(i));
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
      double da = sq(x(a) - ccx) + sq(y(a) - ccy);
      double db = sq(x(b) - ccx) + sq(y(b) - ccy);
      return da != db ? da < db : a < b;
    });

    hash_size_ = std::size_t(std::ceil(std::sqrt(double(n))));
    hull_hash_.assign(hash_size_, -1);
    hull_prev_.assign(n, 0);
    hull_next_.assign(n, 0);
    hull_tri_.assign(n, 0);
    hcx_ = ccx;
    hcy_ = ccy;

    hull_start_ = i0;
    hull_next_[i0] = i1;
    hull_next_[i1] = i2;
    hull_next_[i2] = i0;
    hull_prev_[i2] = i1;
    hull_prev_[i1] = i0;
    hull_prev_[i0] = i2;
    hull_tri_[i0] = 0;
    hull_tri_[i1] = 1;
    hull_tri_[i2] = 2;
    hull_hash_[hash_key(x(i0), y(i0))] = std::int64_t(i0);
    hull_hash_[hash_key(x(i1), y(i1))] = std::int64_t(i1);
    hull_hash_[hash_key(x(i2), y(i2))] = std::int64_t(i2);

    triangles.reserve(3 * (2 * n - 5));
    halfedges.reserve(3 * (2 * n - 5));
    add_triangle(i0, i1, i2, -1, -1, -1);

    for (std::uint32_t id : ids) {
      if (id == i0 || id == i1 || id == i2) continue;
      double px = x(id), py = y(id);

      std::int64_t start = 0;
      std::size_t key = hash_key(px, py);
      for (std::size_t j = 0; j < hash_size_; ++j) {
        start = hull_hash_[(key + j) % hash_size_];
        if (start >= 0 && std::uint32_t(start) !=
                              hull_next_[std::size_t(start)])
          break;
      }
      std::uint32_t e = hull_prev_[std::size_t(start)];
      std::uint32_t st = e, q;
      // Visible: p strictly right of hull edge e -> next (hull runs ccw).
      while (q = hull_next_[e],
             cross2(x(e), y(e), x(q), y(q), px, py) >= 0.0) {
        e = q;
        if (e == st) {
          e = std::uint32_t(-1);
          break;
        }
      }
      if (e == std::uint32_t(-1)) continue;

      std::uint32_t t =
          add_triangle(e, id, hull_next_[e], -1, -1, std::int32_t(hull_tri_[e]));
      hull_tri_[id] = legalize(t + 2);
      hull_tri_[e] = t;

      std::uint32_t nn = hull_next_[e];
      while (q = hull_next_[nn],
             cross2(x(nn), y(nn), x(q), y(q), px, py) < 0.0) {
        t = add_triangle(nn, id, q, std::int32_t(hull_tri_[id]), -1,
                         std::int32_t(hull_tri_[nn]));
        hull_tri_[id] = legalize(t + 2);
        hull_next_[nn] = nn;  // removed
        nn = q;
      }
      if (e == st) {
        while (q = hull_prev_[e],
               cross2(x(q), y(q), x(e), y(e), px, py) < 0.0) {
          t = add_triangle(q, id, e, -1, std::int32_t(hull_tri_[e]),
                           std::int32_t(hull_tri_[q]));
          legalize(t + 2);
          hull_tri_[q] = t;
          hull_next_[e] = e;  // removed
          e = q;
        }
      }
      hull_start_ = hull_prev_[id] = e;
      hull_next_[e] = id;
      hull_prev_[nn] = id;
      hull_next_[id] = nn;
      hull_hash_[hash_key(px, py)] = std::int64_t(id);
      hull_hash_[hash_key(x(e), y(e))] = std::int64_t(e);
    }
  }

 private:
  static double sq(double v) { return v * v; }
  double x(std::size_t i) const { return xy_[2 * i]; }
  double y(std::size_t i) const { return xy_[2 * i + 1]; }

  std::size_t hash_key(double px, double py) const {
    double dx = px - hcx_, dy = py - hcy_;
    if (dx == 0.0 && dy == 0.0) return 0;
    double p = dx / (std::abs(dx) + std::abs(dy));
    double a = (dy > 0.0 ? 3.0 - p : 1.0 + p) / 4.0;  // [0, 1)
    return std::size_t(std::fmod(std::floor(double(hash_size_) * a),
                                 double(hash_size_)));
  }

  std::uint32_t add_triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                             std::int32_t ha, std::int32_t hb,
                             std::int32_t hc) {
    auto t = std::uint32_t(triangles.size());
    triangles.push_back(a);
    triangles.push_back(b);
    triangles.push_back(c);
    link(std::int32_t(t), ha);
    link(std::int32_t(t) + 1, hb);
    link(std::int32_t(t) + 2, hc);
    return t;
  }

  void link(std::int32_t a, std::int32_t b) {
    if (std::size_t(a) >= halfedges.size()) halfedges.resize(a + 1, -1);
    halfedges[std::size_t(a)] = b;
    if (b != -1) {
      if (std::size_t(b) >= halfedges.size()) halfedges.resize(b + 1, -1);
      halfedges[std::size_t(b)] = a;
    }
  }

  std::uint32_t legalize(std::uint32_t a) {
    std::uint32_t ar = 0;
    for (;;) {
      std::int32_t b = halfedges[a];
      std::uint32_t a0 = a - a % 3;
      ar = a0 + (a + 2) % 3;
      if (b == -1) {
        if (stack_.empty()) break;
        a = stack_.back();
        stack_.pop_back();
        continue;
      }
      std::uint32_t b0 = std::uint32_t(b) - std::uint32_t(b) % 3;
      std::uint32_t al = a0 + (a + 1) % 3;
      std::uint32_t bl = b0 + (std::uint32_t(b) + 2) % 3;

      std::uint32_t p0 = triangles[ar];
      std::uint32_t pr = triangles[a];
      std::uint32_t pl = triangles[al];
      std::uint32_t p1 = triangles[bl];

      bool illegal = incircle_det(x(p0), y(p0), x(pr), y(pr), x(pl), y(pl),
                                  x(p1), y(p1)) > 0.0;
      if (illegal) {
        triangles[a] = p1;
        triangles[std::size_t(b)] = p0;
        std::int32_t hbl = halfedges[bl];
        if (hbl == -1) {
          std::uint32_t e = hull_start_;
          do {
            if (hull_tri_[e] == bl) {
              hull_tri_[e] = a;
              break;
            }
            e = hull_prev_[e];
          } while (e != hull_start_);
        }
        link(std::int32_t(a), hbl);
        link(b, halfedges[ar]);
        link(std::int32_t(ar), std::int32_t(bl));
        stack_.push_back(b0 + (std::uint32_t(b) + 1) % 3);
      } else {
        if (stack_.empty()) break;
        a = stack_.back();
        stack_.pop_back();
      }
    }
    return ar;
  }

  const std::vector<double>& xy_;
  std::size_t hash_size_ = 0;
  double hcx_ = 0, hcy_ = 0;
  std::vector<std::int64_t> hull_hash_;
  std::vector<std::uint32_t> hull_prev_, hull_next_, hull_tri_;
  std::uint32_t hull_start_ = 0;
  std::vector<std::uint32_t> stack_;
};

inline constexpr std::size_t kBruteMax = 32;

// Exact small-input Delaunay with symbolic perturbation. Perturbation
// weights decrease in the nucleus index, so exact cocircular ties resolve
// in favor of the lowest index (the diagonal incident to it survives).
inline std::vector<std::array<std::uint32_t, 3>> brute_delaunay(
    const std::vector<double>& xy) {
  std::size_t n = xy.size() / 2;
  auto X = [&](std::uint32_t i) { return (long double)xy[2 * i]; };
  auto Y = [&](std::uint32_t i) { return (long double)xy[2 * i + 1]; };
  auto cross = [&](std::uint32_t o, std::uint32_t a, std::uint32_t b) {
    return (X(a) - X(o)) * (Y(b) - Y(o)) - (Y(a) - Y(o)) * (X(b) - X(o));
  };
  // Perturbed incircle: true iff p lies inside the circle of ccw (a,b,c)
  // after the symbolic perturbation.
  auto inside = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c,
                    std::uint32_t p) {
    long double dx = X(a) - X(p), dy = Y(a) - Y(p);
    long double ex = X(b) - X(p), ey = Y(b) - Y(p);
    long double fx = X(c) - X(p), fy = Y(c) - Y(p);
    long double ap = dx * dx + dy * dy;
    long double bp = ex * ex + ey * ey;
    long double cp = fx * fx + fy * fy;
    long double det = dx * (ey * cp - bp * fy) - dy * (ex * cp - bp * fx) +
                      ap * (ex * fy - ey * fx);
    // Rounding leaves a genuinely cocircular quadruple with |det| far below
    // this band, never at exact zero; inside the band the perturbation rule
    // decides so that ties resolve the same way on every run.
    long double band = 1e-17L * (ap + bp + cp) * (ap + bp + cp);
    if (det > band) return true;
    if (det < -band) return false;
    // Cocircular: the lowest index carries the dominant perturbation.
    struct Term {
      std::uint32_t idx;
      long double coef;
    };
    Term terms[4] = {
        {p, cross(a, b, c) * 2.0L / 2.0L},  // lifting p down pulls it inside
        {a, -((X(b) - X(p)) * (Y(c) - Y(p)) - (Y(b) - Y(p)) * (X(c) - X(p)))},
        {b, -((X(c) - X(p)) * (Y(a) - Y(p)) - (Y(c) - Y(p)) * (X(a) - X(p)))},
        {c, -((X(a) - X(p)) * (Y(b) - Y(p)) - (Y(a) - Y(p)) * (X(b) - X(p)))},
    };
    std::sort(std::begin(terms), std::end(terms),
              [](const Term& s, const Term& t) { return s.idx < t.idx; });
    for (const Term& t : terms)
      if (t.coef != 0.0L) return t.coef > 0.0L;
    return false;  // unreachable: the p-term coefficient is 2*area != 0
  };

  std::vector<std::array<std::uint32_t, 3>> out;
  for (std::uint32_t i = 0; i + 2 < n; ++i)
    for (std::uint32_t j = i + 1; j + 1 < n; ++j)
      for (std::uint32_t k = j + 1; k < n; ++k) {
        long double orient = cross(i, j, k);
        // Collinear up to rounding: the triple spans no usable disk.
        long double s1 = (X(j) - X(i)) * (X(j) - X(i)) +
                         (Y(j) - Y(i)) * (Y(j) - Y(i));
        long double s2 = (X(k) - X(i)) * (X(k) - X(i)) +
                         (Y(k) - Y(i)) * (Y(k) - Y(i));
        if (orient * orient <= 1e-34L * s1 * s2) continue;
        std::array<std::uint32_t, 3> tri =
            orient > 0 ? std::array<std::uint32_t, 3>{i, j, k}
                       : std::array<std::uint32_t, 3>{i, k, j};
        bool ok = true;
        for (std::uint32_t p = 0; p < n && ok; ++p) {
          if (p == i || p == j || p == k) continue;
          if (inside(tri[0], tri[1], tri[2], p)) ok = false;
        }
        if (ok) out.push_back(tri);
      }
  return out;
}

}  // namespace detail

// Nearest-nucleus search over euclidean ball coordinates with hyperbolic
// pruning; ties resolve to the lowest index.
class BallTree {
 public:
  struct Node {
    double cx, cy, rad;
    std::uint32_t begin, end;  // into idx_
    std::int32_t left = -1, right = -1, parent = -1;
  };

  explicit BallTree(std::vector<double> xy) : xy_(std::move(xy)) {
    std::size_t n = xy_.size() / 2;
    idx_.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx_[i] = std::uint32_t(i);
    leaf_of_.assign(n, -1);
    if (n > 0) build(0, std::uint32_t(n), -1);
  }

  std::size_t size() const { return leaf_of_.size(); }
  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& permuted() const { return idx_; }
  std::int32_t leaf_of(std::uint32_t point) const { return leaf_of_[point]; }

  // Hyperbolic distance from query q to any point of the node is at least
  // 2 asinh(de / sqrt((1-|q|^2)(1-zmin^2))): the numerator shrinks to the
  // euclidean gap and the denominator grows to the smallest member norm.
  double lower_bound(const Node& nd, double qx, double qy,
                     double one_minus_q2) const {
    double de = std::hypot(qx - nd.cx, qy - nd.cy) - nd.rad;
    if (de <= 0.0) return 0.0;
    double zmin = std::max(0.0, std::hypot(nd.cx, nd.cy) - nd.rad);
    double denom = one_minus_q2 * (1.0 - zmin * zmin);
    return 2.0 * std::asinh(de / std::sqrt(denom));
  }

  std::pair<std::uint32_t, double> nearest(double qx, double qy) const {
    if (idx_.empty()) throw std::logic_error("BallTree::nearest: empty tree");
    double one_minus_q2 = 1.0 - (qx * qx + qy * qy);
    std::uint32_t best_i = std::uint32_t(-1);
    double best_d = std::numeric_limits<double>::infinity();
    walk(0, qx, qy, one_minus_q2, best_i, best_d, nullptr);
    return {best_i, best_d};
  }

  // Same result as nearest(), but primed with a known candidate so the
  // walk prunes immediately (the tie rule is unchanged: equal distances
  // resolve to the lower index either way).
  std::pair<std::uint32_t, double> nearest_seeded(double qx, double qy,
                                                  std::uint32_t seed) const {
    if (idx_.empty()) throw std::logic_error("BallTree::nearest: empty tree");
    double one_minus_q2 = 1.0 - (qx * qx + qy * qy);
    std::uint32_t best_i = seed;
    double best_d = point_dist(seed, qx, qy, one_minus_q2);
    walk(0, qx, qy, one_minus_q2, best_i, best_d, nullptr);
    return {best_i, best_d};
  }

  double point_dist(std::uint32_t i, double qx, double qy,
                    double one_minus_q2) const {
    double dx = xy_[2 * i] - qx, dy = xy_[2 * i + 1] - qy;
    double z2 = xy_[2 * i] * xy_[2 * i] + xy_[2 * i + 1] * xy_[2 * i + 1];
    return 2.0 * std::asinh(std::sqrt((dx * dx + dy * dy) /
                                      (one_minus_q2 * (1.0 - z2))));
  }

  // Shared walker; mask (when given) restricts to flagged points and relies
  // on the caller-maintained per-node counts.
  struct Mask {
    const std::vector<std::uint32_t>* counts;
    const std::vector<char>* flags;
  };

  void walk(std::int32_t node, double qx, double qy, double one_minus_q2,
            std::uint32_t& best_i, double& best_d, const Mask* mask) const {
    const Node& nd = nodes_[std::size_t(node)];
    if (mask && (*mask->counts)[std::size_t(node)] == 0) return;
    if (lower_bound(nd, qx, qy, one_minus_q2) > best_d) return;
    if (nd.left < 0) {
      for (std::uint32_t s = nd.begin; s < nd.end; ++s) {
        std::uint32_t i = idx_[s];
        if (mask && !(*mask->flags)[i]) continue;
        double d = point_dist(i, qx, qy, one_minus_q2);
        if (d < best_d || (d == best_d && i < best_i)) {
          best_d = d;
          best_i = i;
        }
      }
      return;
    }
    double bl = lower_bound(nodes_[std::size_t(nd.left)], qx, qy, one_minus_q2);
    double br =
        lower_bound(nodes_[std::size_t(nd.right)], qx, qy, one_minus_q2);
    std::int32_t first = nd.left, second = nd.right;
    if (br < bl) std::swap(first, second);
    walk(first, qx, qy, one_minus_q2, best_i, best_d, mask);
    walk(second, qx, qy, one_minus_q2, best_i, best_d, mask);
  }

 private:
  std::int32_t build(std::uint32_t begin, std::uint32_t end,
                     std::int32_t parent) {
    Node nd;
    nd.begin = begin;
    nd.end = end;
    nd.parent = parent;
    double sx = 0, sy = 0;
    for (std::uint32_t s = begin; s < end; ++s) {
      sx += xy_[2 * idx_[s]];
      sy += xy_[2 * idx_[s] + 1];
    }
    nd.cx = sx / (end - begin);
    nd.cy = sy / (end - begin);
    double r2 = 0;
    double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
    for (std::uint32_t s = begin; s < end; ++s) {
      double px = xy_[2 * idx_[s]], py = xy_[2 * idx_[s] + 1];
      r2 = std::max(r2, (px - nd.cx) * (px - nd.cx) +
                            (py - nd.cy) * (py - nd.cy));
      minx = std::min(minx, px);
      maxx = std::max(maxx, px);
      miny = std::min(miny, py);
      maxy = std::max(maxy, py);
    }
    nd.rad = std::sqrt(r2);
    auto id = std::int32_t(nodes_.size());
    nodes_.push_back(nd);
    if (end - begin <= 8) {
      for (std::uint32_t s = begin; s < end; ++s) leaf_of_[idx_[s]] = id;
      return id;
    }
    bool split_x = (maxx - minx) >= (maxy - miny);
    std::uint32_t mid = (begin + end) / 2;
    std::nth_element(idx_.begin() + begin, idx_.begin() + mid,
                     idx_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       double va = split_x ? xy_[2 * a] : xy_[2 * a + 1];
                       double vb = split_x ? xy_[2 * b] : xy_[2 * b + 1];
                       return va != vb ? va < vb : a < b;
                     });
    std::int32_t l = build(begin, mid, id);
    std::int32_t r = build(mid, end, id);
    nodes_[std::size_t(id)].left = l;
    nodes_[std::size_t(id)].right = r;
    return id;
  }

  std::vector<double> xy_;
  std::vector<std::uint32_t> idx_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> leaf_of_;
};

// Nearest search restricted to an online-grown subset ("known" nuclei).
class MaskedNearest {
 public:
  explicit MaskedNearest(const BallTree& tree)
      : tree_(tree),
        counts_(tree.node_count(), 0),
        flags_(tree.size(), 0) {}

  bool has(std::uint32_t i) const { return flags_[i] != 0; }
  std::size_t known_count() const { return total_; }

  void add(std::uint32_t i) {
    if (flags_[i]) return;
    flags_[i] = 1;
    ++total_;
    for (std::int32_t nd = tree_.leaf_of(i); nd >= 0;
         nd = tree_.nodes()[std::size_t(nd)].parent)
      ++counts_[std::size_t(nd)];
  }

  std::optional<std::pair<std::uint32_t, double>> nearest(double qx,
                                                          double qy) const {
    if (total_ == 0) return std::nullopt;
    double one_minus_q2 = 1.0 - (qx * qx + qy * qy);
    std::uint32_t best_i = std::uint32_t(-1);
    double best_d = std::numeric_limits<double>::infinity();
    BallTree::Mask mask{&counts_, &flags_};
    tree_.walk(0, qx, qy, one_minus_q2, best_i, best_d, &mask);
    return std::make_pair(best_i, best_d);
  }

 private:
  const BallTree& tree_;
  std::vector<std::uint32_t> counts_;
  std::vector<char> flags_;
  std::size_t total_ = 0;
};

class Tessellation {
  // Disk centers with |t| > 1 satisfy |m| + rho >= 2|t| - 1 > 1, so the
  // inside-ball search never needs t beyond this clamp.
  static constexpr double kTClamp = 1.0000001;
  static constexpr double kGIdeal = 1.0 - 1e-13;
  static constexpr double kMaxVertexDist = 26.0;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

 public:
  struct Tri {
    std::array<std::uint32_t, 3> v;
    double ccx, ccy, ccr;  // euclidean circumdisk
    bool disk_inside;
    std::optional<HPoint> vertex;  // hyperbolic circumcenter when inside
    double vdist = std::numeric_limits<double>::infinity();  // d(0, vertex)
  };

  struct Edge {
    std::uint32_t a, b;
    std::int32_t tri[2] = {-1, -1};
    double mx, my, ux, uy, h;  // pencil: center(t) = m + t u, radius
                               // sqrt(h^2 + t^2)
    double lo, hi;             // empty-disk interval, clamped
    bool retained = false;
    // Arc of the shared boundary: the g <= 1 sub-interval [u0, u1] of
    // [lo, hi]; an endpoint is "ideal" when the boundary escapes to the
    // rim there instead of ending at a Voronoi vertex.
    mutable bool arc_done = false;
    mutable double u0 = 0, u1 = 0;
    mutable bool ideal0 = false, ideal1 = false;
    mutable double min_origin = 0, t_min_origin = 0;
  };

  explicit Tessellation(const ColoredConfig& cfg) {
    if (cfg.dim != 2)
      throw std::invalid_argument("Tessellation: d = 2 only");
    n_ = cfg.size();
    if (n_ == 0) throw std::invalid_argument("Tessellation: no nuclei");
    xy_ = cfg.coords;
    {
      std::vector<std::uint32_t> order(n_);
      for (std::size_t i = 0; i < n_; ++i) order[i] = std::uint32_t(i);
      std::sort(order.begin(), order.end(),
                [&](std::uint32_t a, std::uint32_t b) {
                  if (xy_[2 * a] != xy_[2 * b]) return xy_[2 * a] < xy_[2 * b];
                  return xy_[2 * a + 1] < xy_[2 * b + 1];
                });
      for (std::size_t i = 1; i < n_; ++i)
        if (xy_[2 * order[i]] == xy_[2 * order[i - 1]] &&
            xy_[2 * order[i] + 1] == xy_[2 * order[i - 1] + 1])
          throw std::invalid_argument("Tessellation: duplicate nuclei");
    }
    tree_.emplace(xy_);

    if (n_ >= 3) {
      std::vector<std::uint32_t> tris;
      std::vector<std::int32_t> halves;
      if (n_ <= detail::kBruteMax) {
        auto list = detail::brute_delaunay(xy_);
        if (list.empty())
          throw std::invalid_argument("Tessellation: collinear nuclei");
        for (auto& t : list) {
          tris.push_back(t[0]);
          tris.push_back(t[1]);
          tris.push_back(t[2]);
        }
      } else {
        detail::EuclidDelaunay dt(xy_);
        tris = std::move(dt.triangles);
        halves = std::move(dt.halfedges);
      }
      build_triangles(tris);
      build_edges(tris, halves.empty() ? nullptr : &halves);
    } else if (n_ == 2) {
      Edge e = make_pencil(0, 1);
      e.lo = -kTClamp;
      e.hi = kTClamp;
      e.retained = true;
      edges_.push_back(e);
    }
    // n_ == 1: a single unbounded cell, no edges.

    finish_edges();
    build_adjacency();
  }

  std::size_t size() const { return n_; }
  double nx(std::uint32_t i) const { return xy_[2 * i]; }
  double ny(std::uint32_t i) const { return xy_[2 * i + 1]; }
  HPoint nucleus(std::uint32_t i) const { return HPoint(nx(i), ny(i)); }
  double nucleus_radius(std::uint32_t i) const {
    return 2.0 * std::atanh(std::hypot(nx(i), ny(i)));
  }

  const std::vector<Tri>& triangles() const { return tris_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const BallTree& tree() const { return *tree_; }

  std::vector<std::uint32_t> neighbors(std::uint32_t i) const {
    return {adj_.begin() + adj_off_[i], adj_.begin() + adj_off_[i + 1]};
  }
  std::size_t degree(std::uint32_t i) const {
    return adj_off_[i + 1] - adj_off_[i];
  }
  std::uint32_t neighbor(std::uint32_t i, std::size_t s) const {
    return adj_[adj_off_[i] + s];
  }
  // Edge id of the s-th retained adjacency of cell i; aligned with neighbor.
  std::uint32_t incident_edge(std::uint32_t i, std::size_t s) const {
    return edge_of_adj_[adj_off_[i] + s];
  }

  bool adjacent(std::uint32_t i, std::uint32_t j) const {
    return std::binary_search(adj_.begin() + adj_off_[i],
                              adj_.begin() + adj_off_[i + 1], j);
  }

  // Id into edges() of the pencil between i and j, retained or not;
  // -1 when the pair shares no Delaunay edge at all.
  std::int32_t edge_id(std::uint32_t i, std::uint32_t j) const {
    if (i > j) std::swap(i, j);
    if (edge_map_.empty() && !edges_.empty()) {
      edge_map_.reserve(edges_.size());
      for (std::size_t eid = 0; eid < edges_.size(); ++eid)
        edge_map_.emplace(
            (std::uint64_t(edges_[eid].a) << 32) | edges_[eid].b, eid);
    }
    auto it = edge_map_.find((std::uint64_t(i) << 32) | j);
    return it == edge_map_.end() ? -1 : std::int32_t(it->second);
  }

  std::pair<std::uint32_t, double> nearest_nucleus(double qx,
                                                   double qy) const {
    return tree_->nearest(qx, qy);
  }
  std::uint32_t owner_of(double qx, double qy) const {
    return tree_->nearest(qx, qy).first;
  }
  std::uint32_t owner_of(const HPoint& p) const {
    return owner_of(p[0], p[1]);
  }

  // Distance from the origin to the shared boundary arc of a retained edge.
  double edge_arc_min_origin(std::uint32_t eid) const {
    const Edge& e = edges_[eid];
    ensure_arc(e);
    return e.min_origin;
  }

  // The arc point nearest the origin (canonical witness of the adjacency).
  HPoint edge_arc_min_point(std::uint32_t eid) const {
    const Edge& e = edges_[eid];
    ensure_arc(e);
    return disk_hyp_center(e, e.t_min_origin);
  }

  // Both crossing points of the arc with the sphere S(0, r), if present.
  std::vector<HPoint> edge_arc_sphere_points(std::uint32_t eid,
                                             double r) const {
    std::vector<HPoint> out;
    const Edge& e = edges_[eid];
    ensure_arc(e);
    if (!(e.min_origin <= r)) return out;
    auto shoot = [&](double ta, double tb) {  // origin_dist monotone on branch
      double fa = origin_dist(e, ta) - r, fb = origin_dist(e, tb) - r;
      if (fa * fb > 0.0) return;
      for (int it = 0; it < 200 && std::abs(tb - ta) > 1e-15; ++it) {
        double tm = 0.5 * (ta + tb);
        double fm = origin_dist(e, tm) - r;
        if (fm * fa > 0.0)
          ta = tm, fa = fm;
        else
          tb = tm, fb = fm;
      }
      out.push_back(disk_hyp_center(e, 0.5 * (ta + tb)));
    };
    if (e.t_min_origin > e.u0) shoot(e.u0, e.t_min_origin);
    if (e.u1 > e.t_min_origin) shoot(e.t_min_origin, e.u1);
    return out;
  }

  // Parameter range of the shared boundary arc in the pencil coordinate,
  // plus the parameter of its origin-nearest point. Ideal ends carry the
  // clamped parameter of the rim escape.
  struct ArcParams {
    double u0, u1, t_min;
    bool ideal0, ideal1;
  };
  ArcParams edge_arc_params(std::uint32_t eid) const {
    const Edge& e = edges_[eid];
    ensure_arc(e);
    return {e.u0, e.u1, e.t_min_origin, e.ideal0, e.ideal1};
  }

  // Point of the shared boundary arc at pencil parameter t, clamped to the
  // arc range. d(0, .) along the arc is unimodal with its min at t_min, so
  // [u0, t_min] and [t_min, u1] are monotone branches.
  HPoint edge_arc_point_at(std::uint32_t eid, double t) const {
    const Edge& e = edges_[eid];
    ensure_arc(e);
    return disk_hyp_center(e, std::clamp(t, e.u0, e.u1));
  }

  // Max distance from the origin over the closure of cell i (+inf when the
  // cell is unbounded). For a bounded convex cell the max sits at a vertex.
  double cell_reach(std::uint32_t i) const {
    if (n_ == 1) return kInf;
    if (reach_.empty()) reach_.assign(n_, -1.0);
    if (reach_[i] >= 0.0) return reach_[i];
    double best = 0.0;
    for (std::size_t s = adj_off_[i]; s < adj_off_[i + 1]; ++s) {
      const Edge& e = edges_[edge_of_adj_[s]];
      ensure_arc(e);
      if (e.ideal0 || e.ideal1) {
        best = kInf;
        break;
      }
      best = std::max(best, std::max(origin_dist(e, e.u0),
                                     origin_dist(e, e.u1)));
    }
    reach_[i] = best;
    return best;
  }

  // Min distance from the origin to the closure of cell i.
  double cell_min_origin(std::uint32_t i) const {
    if (min_origin_.empty()) {
      min_origin_.assign(n_, -1.0);
      origin_owner_ = owner_of(0.0, 0.0);
    }
    if (min_origin_[i] >= 0.0) return min_origin_[i];
    double best;
    if (i == origin_owner_) {
      best = 0.0;
    } else {
      best = kInf;
      for (std::size_t s = adj_off_[i]; s < adj_off_[i + 1]; ++s)
        best = std::min(best, edge_arc_min_origin(edge_of_adj_[s]));
    }
    min_origin_[i] = best;
    return best;
  }

  // Whether the closed cell meets the sphere S(0, r): cells are connected,
  // so this is a two-sided radius test.
  bool cell_intersects_sphere(std::uint32_t i, double r) const {
    return cell_min_origin(i) <= r && cell_reach(i) >= r;
  }

  // All cells whose closure meets the closed ball B(0, r). The set is
  // adjacency-connected and contains the origin's owner.
  std::vector<std::uint32_t> cells_meeting_ball(double r) const {
    std::vector<std::uint32_t> out;
    // 0 untested, 1 meets the ball, 2 does not.
    std::vector<char> state(n_, 0);
    std::vector<std::uint32_t> stack{owner_of(0.0, 0.0)};
    state[stack[0]] = 3;
    while (!stack.empty()) {
      std::uint32_t i = stack.back();
      stack.pop_back();
      out.push_back(i);
      for (std::size_t s = adj_off_[i]; s < adj_off_[i + 1]; ++s) {
        std::uint32_t j = adj_[s];
        if (state[j] == 0) state[j] = cell_meets_ball(j, r) ? 1 : 2;
        if (state[j] == 1) {
          state[j] = 3;  // queued
          stack.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Exact coverage radius of the closed ball: max over y in B(0, r) of the
  // distance to the nearest nucleus. Local maxima live at Voronoi vertices
  // inside the ball, at arc/sphere crossings, and on the sphere in the
  // antipodal direction of the owning nucleus; a small safety pad absorbs
  // the solver tolerances.
  double coverage_radius(double r) const {
    double best = 0.0;
    for (const Tri& t : tris_) {
      if (t.vdist > r) continue;
      double a = std::hypot(t.ccx, t.ccy) - t.ccr;
      double b = std::hypot(t.ccx, t.ccy) + t.ccr;
      best = std::max(best, std::atanh(b) - std::atanh(a));
    }
    auto cells = cells_meeting_ball(r);
    std::vector<char> in_set(n_, 0);
    for (auto c : cells) in_set[c] = 1;
    // Sphere maxima interior to a cell's sphere patch sit in the direction
    // antipodal to the owning nucleus, at value r + d(0, nucleus). The
    // origin's owner beats any farther nucleus at that point, so only
    // cells at least as close to the origin as the owner can qualify.
    double rad2_o = 0.0;
    {
      std::uint32_t o = owner_of(0.0, 0.0);
      rad2_o = nx(o) * nx(o) + ny(o) * ny(o);
    }
    for (auto c : cells) {
      if (nx(c) * nx(c) + ny(c) * ny(c) > rad2_o + 1e-12) continue;
      double ang = angle_of(nx(c), ny(c)) + kPi;
      double rho = std::tanh(0.5 * r);
      double qx = rho * std::cos(ang), qy = rho * std::sin(ang);
      best = std::max(best, tree_->nearest_seeded(qx, qy, c).second);
    }
    for (std::size_t eid = 0; eid < edges_.size(); ++eid) {
      const Edge& e = edges_[eid];
      if (!e.retained || !in_set[e.a] || !in_set[e.b]) continue;
      // Both arc endpoints inside the ball: d(0, .) is convex along the
      // arc, so it never reaches back out to the sphere.
      bool in0 = e.tri[0] >= 0 && tris_[std::size_t(e.tri[0])].vdist <= r;
      bool in1 = e.tri[1] >= 0 && tris_[std::size_t(e.tri[1])].vdist <= r;
      if (in0 && in1) continue;
      if (!e.arc_done && bisector_origin(e).dist > r) continue;
      ensure_arc(e);
      if (e.min_origin > r) continue;
      auto shoot = [&](double ta, double tb) {
        double fa = origin_dist(e, ta) - r, fb = origin_dist(e, tb) - r;
        if (fa * fb > 0.0) return;
        for (int it = 0; it < 120 && std::abs(tb - ta) > 1e-15; ++it) {
          double tm = 0.5 * (ta + tb);
          double fm = origin_dist(e, tm) - r;
          if (fm * fa > 0.0)
            ta = tm, fa = fm;
          else
            tb = tm, fb = fm;
        }
        double tc = 0.5 * (ta + tb);
        double nm = std::hypot(e.mx + tc * e.ux, e.my + tc * e.uy);
        double rho = std::sqrt(e.h * e.h + tc * tc);
        best = std::max(best, std::atanh(nm + rho) - std::atanh(nm - rho));
      };
      if (e.t_min_origin > e.u0) shoot(e.u0, e.t_min_origin);
      if (e.u1 > e.t_min_origin) shoot(e.t_min_origin, e.u1);
    }
    return best + 1e-9;
  }

  // Cell boundary vertices ordered by angle around the nucleus (bounded
  // cells only; used for inspection output).
  std::vector<HPoint> cell_vertices(std::uint32_t i) const {
    std::vector<HPoint> vs;
    for (std::size_t s = adj_off_[i]; s < adj_off_[i + 1]; ++s) {
      const Edge& e = edges_[edge_of_adj_[s]];
      ensure_arc(e);
      if (!e.ideal0) vs.push_back(disk_hyp_center(e, e.u0));
      if (!e.ideal1) vs.push_back(disk_hyp_center(e, e.u1));
    }
    std::sort(vs.begin(), vs.end(), [&](const HPoint& p, const HPoint& q) {
      return angle_of(p[0] - nx(i), p[1] - ny(i)) <
             angle_of(q[0] - nx(i), q[1] - ny(i));
    });
    vs.erase(std::unique(vs.begin(), vs.end(),
                         [](const HPoint& p, const HPoint& q) {
                           return std::abs(p[0] - q[0]) < 1e-13 &&
                                  std::abs(p[1] - q[1]) < 1e-13;
                         }),
             vs.end());
    return vs;
  }

  Json debug_json() const {
    Json j;
    j["nuclei"] = Json::array();
    for (std::size_t i = 0; i < n_; ++i)
      j["nuclei"].push_back({nx(std::uint32_t(i)), ny(std::uint32_t(i))});
    j["edges"] = Json::array();
    for (const Edge& e : edges_)
      if (e.retained) j["edges"].push_back({e.a, e.b});
    j["vertices"] = Json::array();
    for (const Tri& t : tris_)
      if (t.disk_inside)
        j["vertices"].push_back({(*t.vertex)[0], (*t.vertex)[1]});
    return j;
  }

 private:
  void build_triangles(const std::vector<std::uint32_t>& tris) {
    tris_.reserve(tris.size() / 3);
    for (std::size_t t = 0; t < tris.size(); t += 3) {
      Tri tri;
      tri.v = {tris[t], tris[t + 1], tris[t + 2]};
      double ax = nx(tri.v[0]), ay = ny(tri.v[0]);
      detail::Circum c =
          detail::circum_rel(nx(tri.v[1]) - ax, ny(tri.v[1]) - ay,
                             nx(tri.v[2]) - ax, ny(tri.v[2]) - ay);
      tri.ccx = ax + c.x;
      tri.ccy = ay + c.y;
      tri.ccr = std::sqrt(c.r2);
      double nm = std::hypot(tri.ccx, tri.ccy);
      // Vertices beyond kMaxVertexDist from the origin count as ideal: they
      // lie outside any window this library certifies, and the cap keeps
      // ball coordinates clear of the HPoint norm guard.
      tri.disk_inside = nm + tri.ccr < kGIdeal;
      if (tri.disk_inside) {
        double rc = std::atanh(nm - tri.ccr) + std::atanh(nm + tri.ccr);
        if (std::abs(rc) > kMaxVertexDist) {
          tri.disk_inside = false;
        } else if (nm < 1e-300) {
          tri.vertex = HPoint(0.0, 0.0);
          tri.vdist = 0.0;
        } else {
          double rho = std::tanh(0.5 * rc);
          tri.vertex = HPoint(rho * tri.ccx / nm, rho * tri.ccy / nm);
          tri.vdist = std::abs(rc);
        }
      }
      tris_.push_back(std::move(tri));
    }
  }

  Edge make_pencil(std::uint32_t a, std::uint32_t b) const {
    Edge e;
    e.a = a;
    e.b = b;
    double dx = nx(b) - nx(a), dy = ny(b) - ny(a);
    double len = std::hypot(dx, dy);
    e.mx = 0.5 * (nx(a) + nx(b));
    e.my = 0.5 * (ny(a) + ny(b));
    e.ux = -dy / len;
    e.uy = dx / len;
    e.h = 0.5 * len;
    return e;
  }

  double g_of(const Edge& e, double t) const {
    return std::hypot(e.mx + t * e.ux, e.my + t * e.uy) +
           std::sqrt(e.h * e.h + t * t);
  }
  // Euclidean distance from the origin to the center segment over [lo, hi].
  double center_seg_dist(const Edge& e) const {
    double t = std::clamp(-(e.mx * e.ux + e.my * e.uy), e.lo, e.hi);
    return std::hypot(e.mx + t * e.ux, e.my + t * e.uy);
  }
  // The arc lies on the bisector geodesic of its two nuclei: the locus of
  // hyperbolic centers of the pencil disks, a circle orthogonal to the
  // unit circle (a diameter line when the nuclei norms agree). Distance
  // from the origin to that geodesic and the pencil parameter of the
  // nearest point both come in closed form; dist lower-bounds d(0, .)
  // over the arc exactly.
  struct BisectorOrigin {
    double dist;
    double t;
    bool has_t;  // false when the nearest-point parameter is indeterminate
  };
  BisectorOrigin bisector_origin(const Edge& e) const {
    double zi2 = nx(e.a) * nx(e.a) + ny(e.a) * ny(e.a);
    double zj2 = nx(e.b) * nx(e.b) + ny(e.b) * ny(e.b);
    double A = zi2 - zj2;
    double bx = nx(e.a) * (1.0 - zj2) - nx(e.b) * (1.0 - zi2);
    double by = ny(e.a) * (1.0 - zj2) - ny(e.b) * (1.0 - zi2);
    if (A < 0.0) {
      A = -A;
      bx = -bx;
      by = -by;
    }
    double nb = std::hypot(bx, by);
    if (nb == 0.0) return {0.0, 0.0, false};
    double dx = bx / nb, dy = by / nb;     // direction of the nearest point
    double t_num = e.my * dx - e.mx * dy;  // -cross(m, dir)
    double t_den = e.ux * dy - e.uy * dx;  // cross(u, dir)
    double nc = nb / A;                    // |euclid center|, may overflow
    double dist;
    if (!(nc > 1.0)) {
      dist = 0.0;  // not an orthocircle; only possible through roundoff
    } else {
      double rc = std::sqrt((nc - 1.0) * (nc + 1.0));
      dist = 2.0 * std::atanh(1.0 / (nc + rc));
    }
    // A is a difference of squared norms: when they nearly agree its
    // cancellation error poisons the direction, so report dist (still a
    // valid lower bound, near zero here) without a trusted parameter.
    bool conditioned = A > 1e-9 * (zi2 + zj2);
    if (!conditioned || t_den == 0.0) return {dist, 0.0, false};
    return {dist, t_num / t_den, true};
  }
  double origin_dist(const Edge& e, double t) const {
    double nm = std::hypot(e.mx + t * e.ux, e.my + t * e.uy);
    double rho = std::sqrt(e.h * e.h + t * t);
    return std::abs(std::atanh(nm - rho) + std::atanh(nm + rho));
  }
  // Whether the closure of cell i meets B(0, r). Exact for cells that do
  // not contain the origin: the min of d(0, .) over such a cell sits on a
  // boundary arc. cells_meeting_ball seeds the origin's owner itself.
  bool cell_meets_ball(std::uint32_t i, double r) const {
    if (nucleus_radius(i) <= r) return true;
    for (std::size_t s = adj_off_[i]; s < adj_off_[i + 1]; ++s) {
      const Edge& e = edges_[edge_of_adj_[s]];
      for (std::int32_t t : e.tri)
        if (t >= 0 && tris_[std::size_t(t)].vdist <= r) return true;
    }
    for (std::size_t s = adj_off_[i]; s < adj_off_[i + 1]; ++s) {
      const Edge& e = edges_[edge_of_adj_[s]];
      if (!e.arc_done && bisector_origin(e).dist > r) continue;
      ensure_arc(e);
      if (e.min_origin <= r) return true;
    }
    return false;
  }
  HPoint disk_hyp_center(const Edge& e, double t) const {
    double cx = e.mx + t * e.ux, cy = e.my + t * e.uy;
    double nm = std::hypot(cx, cy);
    double rho = std::sqrt(e.h * e.h + t * t);
    double rc = std::atanh(nm - rho) + std::atanh(nm + rho);
    if (nm < 1e-300) return HPoint(0.0, 0.0);
    double s = std::tanh(0.5 * rc) / nm;
    return HPoint(s * cx, s * cy);
  }

  void build_edges(const std::vector<std::uint32_t>& tris,
                   const std::vector<std::int32_t>* halves) {
    if (halves) {
      // The triangulation already pairs halfedges with their twins.
      edges_.reserve(tris.size() / 2);
      for (std::size_t he = 0; he < tris.size(); ++he) {
        std::int32_t tw = (*halves)[he];
        if (tw >= 0 && std::size_t(tw) < he) continue;
        std::uint32_t a = tris[he];
        std::uint32_t b = tris[he - he % 3 + (he + 1) % 3];
        Edge e = make_pencil(std::min(a, b), std::max(a, b));
        e.tri[0] = std::int32_t(he / 3);
        e.tri[1] = tw >= 0 ? std::int32_t(tw / 3) : -1;
        edges_.push_back(e);
      }
    } else {
      std::unordered_map<std::uint64_t, std::size_t> seen;
      seen.reserve(tris.size());
      for (std::size_t he = 0; he < tris.size(); ++he) {
        std::uint32_t a = tris[he];
        std::uint32_t b = tris[he - he % 3 + (he + 1) % 3];
        std::uint32_t lo = std::min(a, b), hi = std::max(a, b);
        auto key = (std::uint64_t(lo) << 32) | hi;
        auto it = seen.find(key);
        if (it != seen.end()) {
          edges_[it->second].tri[1] = std::int32_t(he / 3);
          continue;
        }
        Edge e = make_pencil(lo, hi);
        e.tri[0] = std::int32_t(he / 3);
        seen.emplace(key, edges_.size());
        edges_.push_back(e);
      }
    }
    // Empty-disk intervals from the incident circumcenters.
    for (Edge& e : edges_) {
      auto t_of = [&](std::int32_t tri) {
        return (tris_[std::size_t(tri)].ccx - e.mx) * e.ux +
               (tris_[std::size_t(tri)].ccy - e.my) * e.uy;
      };
      if (e.tri[1] >= 0) {
        double t1 = t_of(e.tri[0]), t2 = t_of(e.tri[1]);
        e.lo = std::min(t1, t2);
        e.hi = std::max(t1, t2);
      } else {
        // Hull edge: empty disks extend away from the triangle's third
        // vertex.
        const Tri& tr = tris_[std::size_t(e.tri[0])];
        std::uint32_t third = tr.v[0];
        for (std::uint32_t v : tr.v)
          if (v != e.a && v != e.b) third = v;
        double side = (nx(third) - e.mx) * e.ux + (ny(third) - e.my) * e.uy;
        double t1 = t_of(e.tri[0]);
        if (side < 0.0) {
          e.lo = t1;
          e.hi = kTClamp;
        } else {
          e.lo = -kTClamp;
          e.hi = t1;
        }
      }
      e.lo = std::max(e.lo, -kTClamp);
      e.hi = std::min(e.hi, kTClamp);
    }
  }

  void finish_edges() {
    for (Edge& e : edges_) {
      if (e.lo > e.hi) {
        e.retained = false;
        continue;
      }
      if (g_of(e, e.lo) < 1.0 || g_of(e, e.hi) < 1.0) {
        e.retained = true;
        continue;
      }
      double rho_min = (e.lo <= 0.0 && e.hi >= 0.0)
                           ? e.h
                           : std::sqrt(e.h * e.h +
                                       std::min(e.lo * e.lo, e.hi * e.hi));
      if (center_seg_dist(e) + rho_min >= 1.0) {
        e.retained = false;  // g exceeds 1 on the whole interval
        continue;
      }
      auto [tm, gm] = detail::minimize_convex(
          [&](double t) { return g_of(e, t); }, e.lo, e.hi, 1e-13);
      e.retained = gm < 1.0;
    }
  }

  void ensure_arc(const Edge& e) const {
    if (e.arc_done) return;
    if (!e.retained)
      throw std::logic_error("Tessellation: arc query on dropped edge");
    auto g = [&](double t) { return g_of(e, t); };
    double glo = g(e.lo), ghi = g(e.hi);
    auto cross_down = [&](double ta, double tb) {
      // g(ta) > threshold >= g(tb): bisect the crossing.
      for (int it = 0; it < 200 && std::abs(tb - ta) > 1e-16; ++it) {
        double tm = 0.5 * (ta + tb);
        (g(tm) > kGIdeal ? ta : tb) = tm;
      }
      return 0.5 * (ta + tb);
    };
    double tmin = e.lo;
    if (glo > kGIdeal || ghi > kGIdeal) {
      auto [tm, gm] =
          detail::minimize_convex(g, e.lo, e.hi, 1e-13);
      tmin = tm;
    }
    e.ideal0 = glo > kGIdeal;
    e.ideal1 = ghi > kGIdeal;
    e.u0 = e.ideal0 ? cross_down(e.lo, tmin) : e.lo;
    e.u1 = e.ideal1 ? cross_down(e.hi, tmin) : e.hi;
    // d(0, .) is unimodal along the arc, with its unconstrained min on the
    // full bisector geodesic available in closed form. Fall back to a
    // direct search when the computed parameter fails its value check
    // (possible under cancellation for nearly equal nuclei norms).
    BisectorOrigin bo = bisector_origin(e);
    double d0 = origin_dist(e, e.u0), d1 = origin_dist(e, e.u1);
    if (bo.has_t && bo.t >= e.u0 && bo.t <= e.u1 &&
        std::abs(origin_dist(e, bo.t) - bo.dist) <= 1e-9 * (1.0 + bo.dist)) {
      e.t_min_origin = bo.t;
      e.min_origin = bo.dist;
    } else if (bo.has_t && bo.t < e.u0) {
      e.t_min_origin = e.u0;
      e.min_origin = d0;
    } else if (bo.has_t && bo.t > e.u1) {
      e.t_min_origin = e.u1;
      e.min_origin = d1;
    } else {
      auto [ta, da] = detail::minimize_convex(
          [&](double t) { return origin_dist(e, t); }, e.u0, e.u1, 1e-13);
      e.t_min_origin = ta;
      e.min_origin = da;
    }
    if (d0 < e.min_origin) {
      e.min_origin = d0;
      e.t_min_origin = e.u0;
    }
    if (d1 < e.min_origin) {
      e.min_origin = d1;
      e.t_min_origin = e.u1;
    }
    e.arc_done = true;
  }

  void build_adjacency() {
    adj_off_.assign(n_ + 1, 0);
    for (const Edge& e : edges_)
      if (e.retained) {
        ++adj_off_[e.a + 1];
        ++adj_off_[e.b + 1];
      }
    for (std::size_t i = 0; i < n_; ++i) adj_off_[i + 1] += adj_off_[i];
    adj_.resize(adj_off_[n_]);
    edge_of_adj_.resize(adj_off_[n_]);
    std::vector<std::size_t> fill(adj_off_.begin(), adj_off_.end() - 1);
    for (std::size_t eid = 0; eid < edges_.size(); ++eid) {
      const Edge& e = edges_[eid];
      if (!e.retained) continue;
      adj_[fill[e.a]] = e.b;
      edge_of_adj_[fill[e.a]++] = std::uint32_t(eid);
      adj_[fill[e.b]] = e.a;
      edge_of_adj_[fill[e.b]++] = std::uint32_t(eid);
    }
    // Sort each neighbor list (and keep the edge ids aligned).
    std::vector<std::pair<std::uint32_t, std::uint32_t>> tmp;
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t b = adj_off_[i], e = adj_off_[i + 1];
      tmp.clear();
      for (std::size_t s = b; s < e; ++s) tmp.emplace_back(adj_[s], edge_of_adj_[s]);
      std::sort(tmp.begin(), tmp.end());
      for (std::size_t s = b; s < e; ++s) {
        adj_[s] = tmp[s - b].first;
        edge_of_adj_[s] = tmp[s - b].second;
      }
    }
  }

  std::size_t n_ = 0;
  std::vector<double> xy_;
  std::optional<BallTree> tree_;
  std::vector<Tri> tris_;
  std::vector<Edge> edges_;
  mutable std::unordered_map<std::uint64_t, std::size_t> edge_map_;
  std::vector<std::size_t> adj_off_;
  std::vector<std::uint32_t> adj_, edge_of_adj_;
  mutable std::vector<double> reach_, min_origin_;
  mutable std::uint32_t origin_owner_ = 0;
};

}  // namespace hypervoro

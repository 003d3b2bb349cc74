#pragma once
/// @file geom.hpp
/// @brief Planar helpers: segment tests, bucketed polylines, banded polygons
/// and an inverse-bilinear quad mesh used to invert characteristic fans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "hcg/core.hpp"

namespace hcg::geom {

/// Distance from p to segment [a, b]; t receives the clamped parameter.
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b, double* t = nullptr) {
  const Vec2 d = b - a;
  const double L2 = dot(d, d);
  double s = L2 > 0.0 ? std::clamp(dot(p - a, d) / L2, 0.0, 1.0) : 0.0;
  if (t) *t = s;
  return norm(p - (a + s * d));
}

/// Proper or touching intersection of [a, b] and [c, d]. Returns the
/// parameters along each segment.
struct SegHit {
  double s;  // along [a, b]
  double t;  // along [c, d]
};

inline std::optional<SegHit> segment_intersection(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const Vec2 r = b - a, q = d - c;
  const double den = cross(r, q);
  if (std::abs(den) < 1e-300) return std::nullopt;
  const Vec2 w = c - a;
  const double s = cross(w, q) / den;
  const double t = cross(w, r) / den;
  if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0) return std::nullopt;
  return SegHit{s, t};
}

struct Box {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(Vec2 p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  bool valid() const { return x0 <= x1 && y0 <= y1; }
};

/// Uniform bucket grid holding integer ids.
class BucketGrid {
 public:
  BucketGrid() = default;
  BucketGrid(Box box, double cell) : cell_(cell) {
    x0_ = box.x0 - cell;
    y0_ = box.y0 - cell;
    nx_ = std::max(1, static_cast<int>(std::ceil((box.x1 - box.x0) / cell)) + 2);
    ny_ = std::max(1, static_cast<int>(std::ceil((box.y1 - box.y0) / cell)) + 2);
    cells_.assign(static_cast<size_t>(nx_) * ny_, {});
  }

  void insert(const Box& b, int id) {
    const int i0 = ix(b.x0), i1 = ix(b.x1), j0 = iy(b.y0), j1 = iy(b.y1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) cells_[static_cast<size_t>(j) * nx_ + i].push_back(id);
  }

  /// Ids in the single cell containing p (empty outside the grid).
  const std::vector<int>& at(Vec2 p) const {
    static const std::vector<int> empty;
    const double fx = (p.x - x0_) / cell_, fy = (p.y - y0_) / cell_;
    if (!(fx >= 0.0 && fy >= 0.0 && fx < nx_ && fy < ny_)) return empty;
    return cells_[static_cast<size_t>(fy) * nx_ + static_cast<size_t>(fx)];
  }

  /// Visit ids in every cell overlapping the box; ids can repeat.
  template <class Fn>
  void visit(const Box& b, Fn&& fn) const {
    const int i0 = ix(b.x0), i1 = ix(b.x1), j0 = iy(b.y0), j1 = iy(b.y1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        for (int id : cells_[static_cast<size_t>(j) * nx_ + i]) fn(id);
  }

  double cell() const { return cell_; }
  bool empty() const { return cells_.empty(); }

 private:
  int ix(double x) const { return std::clamp(static_cast<int>(std::floor((x - x0_) / cell_)), 0, nx_ - 1); }
  int iy(double y) const { return std::clamp(static_cast<int>(std::floor((y - y0_) / cell_)), 0, ny_ - 1); }

  double cell_ = 1.0, x0_ = 0.0, y0_ = 0.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> cells_;
};

/// Open polyline with a segment index for nearest-point and crossing queries.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts, double cell = 0.05) : pts_(std::move(pts)) {
    Box box;
    for (const auto& p : pts_) box.add(p);
    if (pts_.size() < 2) return;
    grid_ = BucketGrid(box, cell);
    for (size_t i = 0; i + 1 < pts_.size(); ++i) grid_.insert(seg_box(i), static_cast<int>(i));
  }

  struct Nearest {
    double dist = std::numeric_limits<double>::infinity();
    size_t seg = 0;
    double t = 0.0;
  };

  /// Nearest point among segments within radius r of p (dist = inf if none).
  Nearest nearest(Vec2 p, double r) const {
    Nearest best;
    if (pts_.size() < 2) return best;
    Box b{p.x - r, p.y - r, p.x + r, p.y + r};
    grid_.visit(b, [&](int id) {
      double t;
      const double d = point_segment_distance(p, pts_[id], pts_[id + 1], &t);
      if (d < best.dist || (d == best.dist && static_cast<size_t>(id) < best.seg)) best = {d, static_cast<size_t>(id), t};
    });
    if (best.dist > r) best = Nearest{};
    return best;
  }

  /// Nearest point on the whole polyline.
  Nearest nearest(Vec2 p) const {
    double r = grid_.empty() ? 1.0 : grid_.cell();
    for (int it = 0; it < 60; ++it, r *= 2.0) {
      Nearest n = nearest(p, r);
      if (n.dist <= r) return n;
    }
    Nearest best;
    for (size_t i = 0; i + 1 < pts_.size(); ++i) {
      double t;
      const double d = point_segment_distance(p, pts_[i], pts_[i + 1], &t);
      if (d < best.dist) best = {d, i, t};
    }
    return best;
  }

  /// First crossing (smallest parameter along [a, b]) of the chord with the polyline.
  struct Crossing {
    double s;  // along the chord
    size_t seg;
    double t;  // along the segment
  };
  std::optional<Crossing> first_crossing(Vec2 a, Vec2 b) const {
    std::optional<Crossing> out;
    if (pts_.size() < 2) return out;
    Box box;
    box.add(a);
    box.add(b);
    grid_.visit(box, [&](int id) {
      auto h = segment_intersection(a, b, pts_[id], pts_[id + 1]);
      if (h && (!out || h->s < out->s || (h->s == out->s && static_cast<size_t>(id) < out->seg)))
        out = Crossing{h->s, static_cast<size_t>(id), h->t};
    });
    return out;
  }

  const std::vector<Vec2>& points() const { return pts_; }

 private:
  Box seg_box(size_t i) const {
    Box b;
    b.add(pts_[i]);
    b.add(pts_[i + 1]);
    return b;
  }
  std::vector<Vec2> pts_;
  BucketGrid grid_;
};

/// Closed polygon with horizontal bands for fast crossing-number tests.
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(std::vector<Vec2> v, int bands = 512) : v_(std::move(v)) {
    for (const auto& p : v_) box_.add(p);
    nb_ = std::max(1, bands);
    bh_ = (box_.y1 - box_.y0) / nb_;
    if (!(bh_ > 0.0)) bh_ = 1.0;
    band_.assign(nb_, {});
    const size_t n = v_.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2 a = v_[i], b = v_[(i + 1) % n];
      const int j0 = band(std::min(a.y, b.y)), j1 = band(std::max(a.y, b.y));
      for (int j = j0; j <= j1; ++j) band_[j].push_back(static_cast<int>(i));
    }
  }

  bool contains(Vec2 p) const {
    if (v_.size() < 3 || p.x < box_.x0 || p.x > box_.x1 || p.y < box_.y0 || p.y > box_.y1) return false;
    const size_t n = v_.size();
    bool in = false;
    for (int i : band_[band(p.y)]) {
      const Vec2 a = v_[i], b = v_[(i + 1) % n];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xi = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < xi) in = !in;
      }
    }
    return in;
  }

  const std::vector<Vec2>& vertices() const { return v_; }
  const Box& box() const { return box_; }

 private:
  int band(double y) const { return std::clamp(static_cast<int>((y - box_.y0) / bh_), 0, nb_ - 1); }
  std::vector<Vec2> v_;
  Box box_;
  int nb_ = 1;
  double bh_ = 1.0;
  std::vector<std::vector<int>> band_;
};

/// Structured mesh of rows (characteristics) sampled at common columns
/// (time-to-go). Quads join rows i, i+1 at columns k, k+1.
class QuadMesh {
 public:
  struct Hit {
    size_t row;
    size_t col;
    double a;  // along the column direction, in [0, 1]
    double b;  // across rows, in [0, 1]
  };

  QuadMesh() = default;
  QuadMesh(std::vector<std::vector<Vec2>> rows, double cell) : rows_(std::move(rows)) {
    Box box;
    for (const auto& r : rows_)
      for (const auto& p : r) box.add(p);
    if (!box.valid()) return;
    grid_ = BucketGrid(box, cell);
    for (size_t i = 0; i + 1 < rows_.size(); ++i) {
      const size_t m = std::min(rows_[i].size(), rows_[i + 1].size());
      for (size_t k = 0; k + 1 < m; ++k) {
        Box b;
        b.add(rows_[i][k]);
        b.add(rows_[i][k + 1]);
        b.add(rows_[i + 1][k]);
        b.add(rows_[i + 1][k + 1]);
        ids_.push_back({static_cast<uint32_t>(i), static_cast<uint32_t>(k)});
        grid_.insert(b, static_cast<int>(ids_.size() - 1));
      }
    }
  }

  /// First quad (lowest row, then column) containing p.
  std::optional<Hit> locate(Vec2 p) const {
    std::optional<Hit> best;
    for (int id : grid_.at(p)) {
      const auto [i, k] = ids_[id];
      if (best && (i > best->row || (i == best->row && k >= best->col))) continue;
      auto h = inside(p, i, k);
      if (h) best = h;
    }
    return best;
  }

  const std::vector<std::vector<Vec2>>& rows() const { return rows_; }

  /// Node nearest to p (linear scan; fallback path only).
  Hit nearest_node(Vec2 p) const {
    Hit out{0, 0, 0.0, 0.0};
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < rows_.size(); ++i)
      for (size_t k = 0; k < rows_[i].size(); ++k) {
        const double d = norm(rows_[i][k] - p);
        if (d < best) {
          best = d;
          out = {i, k, 0.0, 0.0};
        }
      }
    return out;
  }

 private:
  std::optional<Hit> inside(Vec2 p, size_t i, size_t k) const {
    const Vec2 p00 = rows_[i][k], p01 = rows_[i][k + 1];
    const Vec2 p10 = rows_[i + 1][k], p11 = rows_[i + 1][k + 1];
    Box bb;
    bb.add(p00);
    bb.add(p01);
    bb.add(p10);
    bb.add(p11);
    const double eps = 1e-12;
    if (p.x < bb.x0 - eps || p.x > bb.x1 + eps || p.y < bb.y0 - eps || p.y > bb.y1 + eps) return std::nullopt;
    // Newton on the bilinear map.
    double a = 0.5, b = 0.5;
    for (int it = 0; it < 12; ++it) {
      const Vec2 P = (1 - a) * (1 - b) * p00 + a * (1 - b) * p01 + (1 - a) * b * p10 + a * b * p11;
      const Vec2 Pa = (1 - b) * (p01 - p00) + b * (p11 - p10);
      const Vec2 Pb = (1 - a) * (p10 - p00) + a * (p11 - p01);
      const double det = cross(Pa, Pb);
      if (std::abs(det) < 1e-300) return std::nullopt;
      const Vec2 r = p - P;
      const double da = cross(r, Pb) / det, db = cross(Pa, r) / det;
      a += da;
      b += db;
      if (std::abs(da) + std::abs(db) < 1e-13) break;
    }
    const double tol = 1e-9;
    if (a < -tol || a > 1 + tol || b < -tol || b > 1 + tol) return std::nullopt;
    return Hit{i, k, std::clamp(a, 0.0, 1.0), std::clamp(b, 0.0, 1.0)};
  }

  struct Id {
    uint32_t row, col;
  };
  std::vector<std::vector<Vec2>> rows_;
  std::vector<Id> ids_;
  BucketGrid grid_;
};

}  // namespace hcg::geom

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace artheater::geometry {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
Scalar cross2(const Point2<Scalar>& a, const Point2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

template <typename Scalar>
Scalar point_segment_distance(const Point2<Scalar>& p, const Point2<Scalar>& a,
                              const Point2<Scalar>& b) {
  const Point2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  Scalar t = len2 > Scalar(0) ? (p - a).dot(ab) / len2 : Scalar(0);
  t = std::clamp(t, Scalar(0), Scalar(1));
  return (a + t * ab - p).norm();
}

/// Parameter t >= 0 along the ray where it meets segment [a, b], if any.
/// Parallel (including collinear) segments report no hit.
template <typename Scalar>
std::optional<Scalar> ray_segment_hit(const Point2<Scalar>& origin, const Point2<Scalar>& dir,
                                      const Point2<Scalar>& a, const Point2<Scalar>& b) {
  const Point2<Scalar> e = b - a;
  const Scalar denom = cross2(dir, e);
  if (denom == Scalar(0)) return std::nullopt;
  const Point2<Scalar> w = a - origin;
  const Scalar t = cross2(w, e) / denom;
  const Scalar u = cross2(w, dir) / denom;
  if (t < Scalar(0) || u < Scalar(0) || u > Scalar(1)) return std::nullopt;
  return t;
}

template <typename Scalar>
int orientation(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  const Scalar v = cross2<Scalar>(b - a, c - a);
  return (v > Scalar(0)) - (v < Scalar(0));
}

template <typename Scalar>
bool on_segment(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

/// Closed segment intersection test (touching counts).
template <typename Scalar>
bool segments_intersect(const Point2<Scalar>& p1, const Point2<Scalar>& p2,
                        const Point2<Scalar>& q1, const Point2<Scalar>& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

template <typename Scalar>
Scalar signed_area(std::span<const Point2<Scalar>> ring) {
  Scalar twice = 0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) twice += cross2(ring[i], ring[(i + 1) % n]);
  return twice / Scalar(2);
}

/// Winding number of `ring` around p; nonzero means inside.
template <typename Scalar>
int winding_number(std::span<const Point2<Scalar>> ring, const Point2<Scalar>& p) {
  int wn = 0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % n];
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && orientation(a, b, p) > 0) ++wn;
    } else if (b.y() <= p.y() && orientation(a, b, p) < 0) {
      --wn;
    }
  }
  return wn;
}

/// True if the closed ring has no two non-adjacent edges that touch.
template <typename Scalar>
bool is_simple(std::span<const Point2<Scalar>> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Ear-clipping triangulation of a simple counter-clockwise ring.
/// Returns index triples into `ring`; empty if the ring cannot be clipped.
template <typename Scalar>
std::vector<std::array<int, 3>> triangulate(std::span<const Point2<Scalar>> ring) {
  std::vector<std::array<int, 3>> tris;
  std::vector<int> idx(ring.size());
  for (std::size_t i = 0; i < ring.size(); ++i) idx[i] = static_cast<int>(i);

  auto inside_tri = [&](int a, int b, int c, int p) {
    return orientation(ring[a], ring[b], ring[p]) >= 0 && orientation(ring[b], ring[c], ring[p]) >= 0 &&
           orientation(ring[c], ring[a], ring[p]) >= 0;
  };

  std::size_t guard = 0;
  while (idx.size() > 3 && guard < 4 * ring.size() * ring.size()) {
    ++guard;
    bool clipped = false;
    const std::size_t n = idx.size();
    for (std::size_t i = 0; i < n; ++i) {
      const int a = idx[(i + n - 1) % n];
      const int b = idx[i];
      const int c = idx[(i + 1) % n];
      if (orientation(ring[a], ring[b], ring[c]) <= 0) continue;
      bool ear = true;
      for (int p : idx) {
        if (p == a || p == b || p == c) continue;
        if (inside_tri(a, b, c, p)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) return {};
  }
  if (idx.size() == 3) tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace artheater::geometry

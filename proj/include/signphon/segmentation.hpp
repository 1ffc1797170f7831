#pragma once

// Separates signing frames from rest/epenthesis frames using the speed of the
// hand centroid over a sliding window.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "signphon/error.hpp"
#include "signphon/pose_model.hpp"

namespace signphon {

// Mean of the detected keypoints; nullopt when none is detected.
inline std::optional<Point2> hand_centroid(const HandSkeleton& hand) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const auto& k : hand.points()) {
    if (!k.detected()) continue;
    sx += k.x();
    sy += k.y();
    ++n;
  }
  if (n == 0) return std::nullopt;
  return Point2{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

// Convex hull, counter-clockwise (in a y-up frame), no collinear points.
// Andrew's monotone chain.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

struct OrientedRect {
  Point2 center;
  double width = 0.0;   // extent along the axis at `angle`
  double height = 0.0;  // extent along the perpendicular axis
  double angle = 0.0;   // radians, direction of the width axis

  double area() const { return width * height; }
  double longest_side() const { return std::max(width, height); }
};

// Minimum-area enclosing rectangle. Every hull edge direction is a candidate
// axis (rotating calipers); degenerate inputs give zero-size sides.
inline OrientedRect minimum_bounding_rectangle(std::span<const Point2> points) {
  if (points.empty()) throw DataError("minimum_bounding_rectangle: empty point set");
  const auto hull = convex_hull({points.begin(), points.end()});
  if (hull.size() == 1) return {hull[0], 0.0, 0.0, 0.0};

  OrientedRect best;
  double best_area = std::numeric_limits<double>::infinity();
  const std::size_t edges = hull.size() == 2 ? 1 : hull.size();
  for (std::size_t i = 0; i < edges; ++i) {
    const Point2 a = hull[i];
    const Point2 b = hull[(i + 1) % hull.size()];
    const double len = distance(a, b);
    if (len == 0.0) continue;
    const Point2 u{(b.x - a.x) / len, (b.y - a.y) / len};
    const Point2 v{-u.y, u.x};
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (const auto& p : hull) {
      const double pu = p.x * u.x + p.y * u.y;
      const double pv = p.x * v.x + p.y * v.y;
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
      vmin = std::min(vmin, pv);
      vmax = std::max(vmax, pv);
    }
    const double w = umax - umin;
    const double h = vmax - vmin;
    // Equal-area candidates: keep the shorter longest side so the result does not
    // depend on which hull edge is visited first.
    const double area = w * h;
    const double tol = 1e-9 * std::max(1.0, best_area == std::numeric_limits<double>::infinity() ? 1.0 : best_area);
    const bool tie = std::abs(area - best_area) <= tol;
    if ((!tie && area < best_area) || (tie && std::max(w, h) < best.longest_side())) {
      best_area = std::min(area, best_area);
      const double cu = 0.5 * (umin + umax);
      const double cv = 0.5 * (vmin + vmax);
      best = {{cu * u.x + cv * v.x, cu * u.y + cv * v.y}, w, h, std::atan2(u.y, u.x)};
    }
  }
  return best;
}

// Per-frame centroid of one hand; nullopt where the hand was not detected.
struct CentroidTrack {
  Handedness hand = Handedness::right;
  std::vector<std::optional<Point2>> centroids;

  std::size_t size() const { return centroids.size(); }
};

inline CentroidTrack centroid_track(std::span<const PoseFrame> frames, Handedness hand) {
  CentroidTrack t{hand, {}};
  t.centroids.reserve(frames.size());
  for (const auto& f : frames) t.centroids.push_back(hand_centroid(f.hand(hand)));
  return t;
}

// speeds[i] belongs to the window starting at frame i.
struct SpeedSeries {
  std::vector<double> speeds;
  std::size_t window = 3;

  std::size_t size() const { return speeds.size(); }
  double total() const {
    double s = 0.0;
    for (double v : speeds) s += v;
    return s;
  }
};

// Speed of a window = longest side of the minimum bounding rectangle of the
// centroids inside it. Windows without any detected centroid have speed 0.
inline SpeedSeries window_speed(const CentroidTrack& track, std::size_t window = 3) {
  if (window == 0) throw DataError("window_speed: window must be positive");
  SpeedSeries s{{}, window};
  if (track.size() < window) return s;
  std::vector<Point2> buf;
  for (std::size_t start = 0; start + window <= track.size(); ++start) {
    buf.clear();
    for (std::size_t i = start; i < start + window; ++i)
      if (track.centroids[i]) buf.push_back(*track.centroids[i]);
    s.speeds.push_back(buf.empty() ? 0.0 : minimum_bounding_rectangle(buf).longest_side());
  }
  return s;
}

struct SignBoundaries {
  std::size_t start = 0;  // inclusive series index
  std::size_t end = 0;    // inclusive series index
  bool found_maxima = false;
};

// Local maxima: interior t with slope[t-1] > 0 and slope[t] <= 0, where
// slope[t] = S[t+1] - S[t]. A plateau top counts once, at its first index.
inline std::vector<std::size_t> local_maxima(std::span<const double> s) {
  std::vector<std::size_t> out;
  for (std::size_t t = 1; t + 1 < s.size(); ++t)
    if (s[t] - s[t - 1] > 0.0 && s[t + 1] - s[t] <= 0.0) out.push_back(t);
  return out;
}

// First and last maximum of the speed series. Without any maximum (or with
// fewer than three samples) the full range is returned.
inline SignBoundaries find_sign_boundaries(const SpeedSeries& speed) {
  const std::size_t n = speed.size();
  SignBoundaries full{0, n == 0 ? 0 : n - 1, false};
  if (n < 3) return full;
  const auto maxima = local_maxima(speed.speeds);
  if (maxima.empty()) return full;
  return {maxima.front(), maxima.back(), true};
}

struct SegmentResult {
  std::size_t first_frame = 0;  // inclusive
  std::size_t last_frame = 0;   // inclusive
  bool found_maxima = false;
  Handedness dominant = Handedness::right;
  SpeedSeries speed;
};

// Chooses the dominant hand (larger summed speed), locates the sign within
// its speed series and maps window indices back to frame indices. Ties go to
// the right hand.
inline SegmentResult segment_range(std::span<const PoseFrame> frames, std::size_t window = 3) {
  SegmentResult r;
  if (frames.empty()) return r;
  r.last_frame = frames.size() - 1;
  auto right = window_speed(centroid_track(frames, Handedness::right), window);
  auto left = window_speed(centroid_track(frames, Handedness::left), window);
  r.dominant = left.total() > right.total() ? Handedness::left : Handedness::right;
  r.speed = r.dominant == Handedness::right ? std::move(right) : std::move(left);
  const auto b = find_sign_boundaries(r.speed);
  if (!b.found_maxima) return r;
  r.found_maxima = true;
  r.first_frame = b.start;
  r.last_frame = std::min(frames.size() - 1, b.end + window - 1);
  return r;
}

inline std::vector<PoseFrame> segment_video(std::span<const PoseFrame> frames, std::size_t window = 3) {
  const auto r = segment_range(frames, window);
  if (frames.empty()) return {};
  return {frames.begin() + static_cast<std::ptrdiff_t>(r.first_frame),
          frames.begin() + static_cast<std::ptrdiff_t>(r.last_frame) + 1};
}

}  // namespace signphon

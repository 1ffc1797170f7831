#pragma once

// Feature vectors and the binary skeleton raster built from one hand.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "signphon/error.hpp"
#include "signphon/pose_model.hpp"

namespace signphon {

inline constexpr std::size_t kRawFeatureCount = 2 * HandSkeleton::kSize;
inline constexpr std::size_t kDistanceFeatureCount = 15;

// 42 values: (x, y) of every hand slot in slot order, radius first.
using RawFeatureVector = std::array<double, kRawFeatureCount>;
// 15 fingertip distances, see distance_feature_pairs().
using DistanceFeatureVector = std::array<double, kDistanceFeatureCount>;

inline std::vector<std::string> raw_feature_names() {
  std::vector<std::string> names;
  names.reserve(kRawFeatureCount);
  for (std::size_t i = 0; i < HandSkeleton::kSize; ++i) {
    names.push_back(hand_slot_name(i) + "_x");
    names.push_back(hand_slot_name(i) + "_y");
  }
  return names;
}

inline RawFeatureVector raw_features(const HandSkeleton& hand) {
  RawFeatureVector v{};
  for (std::size_t i = 0; i < HandSkeleton::kSize; ++i) {
    const auto& k = hand.at(i);
    if (!k.detected()) throw DataError("incomplete hand: " + hand_slot_name(i) + " not detected");
    v[2 * i] = k.x();
    v[2 * i + 1] = k.y();
  }
  return v;
}

// Endpoints of each distance feature. A finger is represented by its tip.
struct DistancePair {
  std::size_t from;
  std::size_t to;
  std::string name;
};

inline const std::vector<DistancePair>& distance_feature_pairs() {
  static const std::vector<DistancePair> pairs = [] {
    std::vector<DistancePair> out;
    auto tip = [](Finger f) { return HandSkeleton::slot(f, Bone::phalanx); };
    for (Finger f : kFingers)
      out.push_back({HandSkeleton::kRadius, tip(f), "radius_" + std::string(finger_name(f))});
    for (std::size_t a = 0; a < kFingers.size(); ++a)
      for (std::size_t b = a + 1; b < kFingers.size(); ++b)
        out.push_back({tip(kFingers[a]), tip(kFingers[b]),
                       std::string(finger_name(kFingers[a])) + "_" + std::string(finger_name(kFingers[b]))});
    return out;
  }();
  return pairs;
}

inline std::vector<std::string> distance_feature_names() {
  std::vector<std::string> names;
  for (const auto& p : distance_feature_pairs()) names.push_back(p.name);
  return names;
}

inline DistanceFeatureVector distance_features(const HandSkeleton& hand) {
  DistanceFeatureVector v{};
  const auto& pairs = distance_feature_pairs();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& a = hand.at(pairs[i].from);
    const auto& b = hand.at(pairs[i].to);
    if (!a.detected() || !b.detected()) throw DataError("incomplete hand: distance " + pairs[i].name + " needs both endpoints");
    v[i] = distance(a.point(), b.point());
  }
  return v;
}

// ---------------------------------------------------------------------------
// Raster

// Bones of the 21-point hand: the radius connects to the base of every finger
// chain, and each chain runs base to tip.
inline const std::array<std::pair<std::size_t, std::size_t>, 20>& hand_edges() {
  static const auto edges = [] {
    std::array<std::pair<std::size_t, std::size_t>, 20> e{};
    std::size_t n = 0;
    for (std::size_t finger = 0; finger < 5; ++finger) {
      const std::size_t base = 1 + 4 * finger;
      e[n++] = {HandSkeleton::kRadius, base};
      for (std::size_t j = 0; j < 3; ++j) e[n++] = {base + j, base + j + 1};
    }
    return e;
  }();
  return edges;
}

class BinaryHandRaster {
 public:
  explicit BinaryHandRaster(std::size_t size = 128) : size_(size), cells_(size * size, 0) {}

  std::size_t size() const { return size_; }
  bool at(std::size_t x, std::size_t y) const { return cells_.at(y * size_ + x) != 0; }
  void set(std::size_t x, std::size_t y) { cells_.at(y * size_ + x) = 1; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1)); }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

  friend bool operator==(const BinaryHandRaster&, const BinaryHandRaster&) = default;

 private:
  std::size_t size_;
  std::vector<std::uint8_t> cells_;
};

struct RasterOptions {
  std::size_t size = 128;
  std::size_t fill_steps = 10;  // interior samples per bone
  std::size_t margin = 4;
};

// Draws the hand skeleton into a binary grid. Keypoints are min-max
// normalised (aspect preserved) into the grid minus a margin. Each bone with
// both endpoints detected sets its two endpoint cells plus `fill_steps`
// evenly spaced interior samples of the segment between them; the segment is
// parameterised by t so vertical bones need no special case.
inline BinaryHandRaster render_skeleton(const HandSkeleton& hand, const RasterOptions& opt = {}) {
  if (opt.size <= 2 * opt.margin) throw DataError("raster size must exceed twice the margin");
  BinaryHandRaster raster(opt.size);
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const auto& k : hand.points()) {
    if (!k.detected()) continue;
    min_x = std::min(min_x, k.x());
    max_x = std::max(max_x, k.x());
    min_y = std::min(min_y, k.y());
    max_y = std::max(max_y, k.y());
  }
  if (!hand.any_detected()) throw DataError("render_skeleton: no detected keypoints");
  const double extent = std::max(max_x - min_x, max_y - min_y);
  if (extent == 0.0) {
    raster.set(opt.size / 2, opt.size / 2);
    return raster;
  }
  const double span = static_cast<double>(opt.size - 1 - 2 * opt.margin);
  const double margin = static_cast<double>(opt.margin);
  auto to_grid = [&](const Keypoint& k) {
    return Point2{margin + (k.x() - min_x) / extent * span, margin + (k.y() - min_y) / extent * span};
  };
  auto plot = [&](Point2 p) {
    raster.set(static_cast<std::size_t>(std::lround(p.x)), static_cast<std::size_t>(std::lround(p.y)));
  };
  for (const auto& [from, to] : hand_edges()) {
    const auto& a = hand.at(from);
    const auto& b = hand.at(to);
    if (!a.detected() || !b.detected()) continue;
    const Point2 pa = to_grid(a);
    const Point2 pb = to_grid(b);
    plot(pa);
    plot(pb);
    for (std::size_t i = 1; i <= opt.fill_steps; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(opt.fill_steps + 1);
      plot(pa + (pb - pa) * t);
    }
  }
  // Isolated detected keypoints (no detected neighbour) are still drawn.
  for (const auto& k : hand.points())
    if (k.detected()) plot(to_grid(k));
  return raster;
}

// Top-left corner of a size x size crop centred on `centroid`, clamped into
// the frame and snapped down to a multiple of 32 pixels.
inline std::pair<std::int64_t, std::int64_t> crop_origin(Point2 centroid, double frame_w, double frame_h,
                                                         std::int64_t size = 128) {
  if (frame_w < static_cast<double>(size) || frame_h < static_cast<double>(size))
    throw DataError("crop_origin: frame smaller than the crop size");
  auto axis = [&](double c, double extent) {
    const auto hi = static_cast<std::int64_t>(std::floor(extent)) - size;
    auto v = static_cast<std::int64_t>(std::llround(c - static_cast<double>(size) / 2.0));
    v = std::clamp<std::int64_t>(v, 0, hi);
    return (v / 32) * 32;
  };
  return {axis(centroid.x, frame_w), axis(centroid.y, frame_h)};
}

}  // namespace signphon

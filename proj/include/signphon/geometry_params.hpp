#pragma once

// Closed-form orientation, location and handedness from keypoints.

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "signphon/error.hpp"
#include "signphon/pose_model.hpp"
#include "signphon/segmentation.hpp"

namespace signphon {

// Compass label of a direction given in image coordinates (y down).
// Sectors are 45 degrees wide and centred on the compass directions; in the
// counter-clockwise mathematical angle each covers [centre - 22.5, centre + 22.5).
inline Orientation orientation_of_vector(double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) throw DataError("orientation undefined for a zero vector");
  const double deg = std::atan2(-dy, dx) * 180.0 / std::numbers::pi;
  auto sector = static_cast<int>(std::floor((deg + 22.5) / 45.0));
  sector = ((sector % 8) + 8) % 8;  // 0 = east, counter-clockwise
  return static_cast<Orientation>(((2 - sector) % 8 + 8) % 8);
}

// Extended finger orientation: direction from the radius to the middle-finger
// metacarpal.
inline Orientation finger_orientation(const HandSkeleton& hand) {
  const auto& p = hand.radius();
  const auto& q = hand.at(Finger::middle, Bone::metacarpal);
  if (!p.detected() || !q.detected()) throw DataError("orientation undefined: radius or middle metacarpal undetected");
  if (p.x() == q.x() && p.y() == q.y()) throw DataError("orientation undefined: coincident keypoints");
  return orientation_of_vector(q.x() - p.x(), q.y() - p.y());
}

inline constexpr std::array<Location, 6> kBodyLocations = {Location::ears, Location::eyes, Location::nose,
                                                           Location::neck, Location::shoulder, Location::abdominal};

struct LocationConfig {
  double threshold_fraction = 0.10;  // of the frame diagonal
  // Body keypoints standing for each location; lateralised parts list both sides.
  std::map<Location, std::vector<std::size_t>> body_part_slots = {
      {Location::ears, {body::right_ear, body::left_ear}},
      {Location::eyes, {body::right_eye, body::left_eye}},
      {Location::nose, {body::nose}},
      {Location::neck, {body::neck}},
      {Location::shoulder, {body::right_shoulder, body::left_shoulder}},
      {Location::abdominal, {body::mid_hip}},
  };

  void validate() const {
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
      throw DataError("threshold_fraction must lie in (0, 1)");
    for (Location l : kBodyLocations) {
      auto it = body_part_slots.find(l);
      if (it == body_part_slots.end() || it->second.empty())
        throw DataError("location '" + std::string(render(l)) + "' has no body keypoints");
      for (auto s : it->second)
        if (s >= body::kSize) throw DataError("body keypoint index out of range");
    }
  }
};

// Distance (pixels) from a point to a location: the nearer of its body
// keypoints; nullopt when none of them is detected.
inline std::optional<double> body_part_distance(const PoseFrame& frame, Point2 p, Location loc,
                                                const LocationConfig& cfg) {
  std::optional<double> best;
  for (auto slot : cfg.body_part_slots.at(loc)) {
    const auto& k = frame.body[slot];
    if (!k.detected()) continue;
    const double d = distance(k.point(), p);
    if (!best || d < *best) best = d;
  }
  return best;
}

// Rows follow kBodyLocations; columns are (right hand, left hand).
struct DistanceMatrix {
  std::array<std::array<std::optional<double>, 2>, kBodyLocations.size()> d{};

  const std::optional<double>& at(Location l, Handedness h) const {
    return d.at(static_cast<std::size_t>(l)).at(static_cast<std::size_t>(h));
  }
};

inline DistanceMatrix distance_matrix(const PoseFrame& frame, const LocationConfig& cfg) {
  DistanceMatrix m;
  for (Handedness h : {Handedness::right, Handedness::left}) {
    const auto c = hand_centroid(frame.hand(h));
    if (!c) continue;
    for (Location l : kBodyLocations)
      m.d[static_cast<std::size_t>(l)][static_cast<std::size_t>(h)] = body_part_distance(frame, *c, l, cfg);
  }
  return m;
}

struct LocationResult {
  Location location = Location::neutral;
  std::optional<Location> nearest;  // nearest body part regardless of the threshold
  double distance = 0.0;            // to `nearest`, pixels
  bool no_body_parts = false;       // every body part undetected
};

// Nearest body part to the hand centroid, or neutral when it is farther than
// threshold_fraction of the frame diagonal. Distance ties resolve in the
// order of kBodyLocations (head first); the threshold is inclusive.
inline LocationResult locate_hand(const PoseFrame& frame, Handedness hand, const LocationConfig& cfg = {}) {
  const auto c = hand_centroid(frame.hand(hand));
  if (!c) throw DataError("hand location undefined: no detected hand keypoints");
  LocationResult r;
  for (Location l : kBodyLocations) {
    const auto d = body_part_distance(frame, *c, l, cfg);
    if (!d) continue;
    if (!r.nearest || *d < r.distance) {
      r.nearest = l;
      r.distance = *d;
    }
  }
  if (!r.nearest) {
    r.no_body_parts = true;
    return r;
  }
  const double threshold = cfg.threshold_fraction * frame.diagonal();
  r.location = r.distance <= threshold ? *r.nearest : Location::neutral;
  return r;
}

inline Location hand_location(const PoseFrame& frame, Handedness hand, const LocationConfig& cfg = {}) {
  return locate_hand(frame, hand, cfg).location;
}

// Mean normalised distance (distance / frame diagonal) per body location and
// hand. A body part or hand that is not detected contributes 1.0.
struct DistanceHeatmap {
  std::array<std::array<double, 2>, kBodyLocations.size()> mean{};
  std::size_t frames = 0;

  double at(Location l, Handedness h) const {
    return mean.at(static_cast<std::size_t>(l)).at(static_cast<std::size_t>(h));
  }
};

inline DistanceHeatmap distance_heatmap(std::span<const PoseFrame> frames, const LocationConfig& cfg = {}) {
  if (frames.empty()) throw DataError("distance_heatmap: no frames");
  DistanceHeatmap h;
  h.frames = frames.size();
  for (const auto& f : frames) {
    const auto m = distance_matrix(f, cfg);
    const double diag = f.diagonal();
    for (std::size_t r = 0; r < kBodyLocations.size(); ++r)
      for (std::size_t c = 0; c < 2; ++c) h.mean[r][c] += m.d[r][c] ? *m.d[r][c] / diag : 1.0;
  }
  for (auto& row : h.mean)
    for (auto& v : row) v /= static_cast<double>(frames.size());
  return h;
}

inline std::string heatmap_csv(const DistanceHeatmap& h) {
  std::string out = "location,right,left\n";
  char buf[64];
  for (Location l : kBodyLocations) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f\n", h.at(l, Handedness::right), h.at(l, Handedness::left));
    out += render(l);
    out += buf;
  }
  return out;
}

// Hand slots already carry handedness.
inline constexpr Handedness handedness_of(Handedness slot) { return slot; }

}  // namespace signphon

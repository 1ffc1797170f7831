#pragma once

// Core domain types: keypoints, hand skeletons, pose frames and the label
// vocabularies (handedness, handshape, orientation, location).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signphon/error.hpp"

namespace signphon {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// A single detected (or undetected) image point. Image coordinates: origin at
// the top-left corner, y grows downward. Undetected points carry NaN
// coordinates so that (0,0) remains a valid pixel.
class Keypoint {
 public:
  constexpr Keypoint() = default;
  constexpr Keypoint(double x, double y, double confidence = 1.0)
      : x_(x), y_(y), confidence_(confidence) {}

  static constexpr Keypoint undetected() { return Keypoint{}; }

  bool detected() const { return !std::isnan(x_); }
  double x() const { return x_; }
  double y() const { return y_; }
  double confidence() const { return confidence_; }
  Point2 point() const { return {x_, y_}; }

  friend bool operator==(const Keypoint& a, const Keypoint& b) {
    if (!a.detected() || !b.detected()) return a.detected() == b.detected();
    return a.x_ == b.x_ && a.y_ == b.y_ && a.confidence_ == b.confidence_;
  }

 private:
  double x_ = std::numeric_limits<double>::quiet_NaN();
  double y_ = std::numeric_limits<double>::quiet_NaN();
  double confidence_ = 0.0;
};

enum class Finger : std::uint8_t { thumb, index, middle, ring, little };
enum class Bone : std::uint8_t { phalanx, proximal, metacarpal, carpal };

inline constexpr std::array<Finger, 5> kFingers = {Finger::thumb, Finger::index, Finger::middle,
                                                   Finger::ring, Finger::little};

inline constexpr std::string_view finger_name(Finger f) {
  constexpr std::array<std::string_view, 5> names = {"thumb", "index", "middle", "ring", "little"};
  return names[static_cast<std::size_t>(f)];
}

// Slot layout follows the 21-point hand model of the pose estimator:
//   0        radius (wrist)
//   1..4     thumb: trapezium, metacarpal, proximal, phalanx (tip)
//   5..8     index: carpal, metacarpal, proximal, phalanx
//   9..12    middle, 13..16 ring, 17..20 little (same order as index)
// The thumb has no carpal slot; the trapezium takes its place.
class HandSkeleton {
 public:
  static constexpr std::size_t kSize = 21;
  static constexpr std::size_t kRadius = 0;
  static constexpr std::size_t kTrapezium = 1;

  HandSkeleton() = default;
  explicit HandSkeleton(const std::array<Keypoint, kSize>& points) : points_(points) {}

  // Slot of (finger, bone). Throws for (thumb, carpal).
  static std::size_t slot(Finger f, Bone b) {
    const auto fi = static_cast<std::size_t>(f);
    // Distance from the tip: phalanx 0, proximal 1, metacarpal 2, carpal 3.
    const auto from_tip = static_cast<std::size_t>(b);
    if (f == Finger::thumb) {
      if (b == Bone::carpal) throw DataError("thumb has no carpal keypoint (see trapezium)");
      return 4 - from_tip;
    }
    return 1 + 4 * fi + (3 - from_tip);
  }

  const Keypoint& at(std::size_t i) const { return points_.at(i); }
  Keypoint& at(std::size_t i) { return points_.at(i); }
  const Keypoint& at(Finger f, Bone b) const { return points_[slot(f, b)]; }
  const Keypoint& radius() const { return points_[kRadius]; }
  const Keypoint& trapezium() const { return points_[kTrapezium]; }
  const Keypoint& tip(Finger f) const { return at(f, Bone::phalanx); }

  const std::array<Keypoint, kSize>& points() const { return points_; }

  std::size_t detected_count() const {
    return static_cast<std::size_t>(
        std::count_if(points_.begin(), points_.end(), [](const Keypoint& k) { return k.detected(); }));
  }
  bool complete() const { return detected_count() == kSize; }
  bool any_detected() const { return detected_count() > 0; }

  friend bool operator==(const HandSkeleton&, const HandSkeleton&) = default;

 private:
  std::array<Keypoint, kSize> points_{};
};

// Human-readable name of a hand slot, e.g. "index_phalange" or "radius".
inline std::string hand_slot_name(std::size_t slot) {
  if (slot == HandSkeleton::kRadius) return "radius";
  if (slot == HandSkeleton::kTrapezium) return "trapezium";
  static constexpr std::array<std::string_view, 4> bones = {"carpal", "metacarpal", "proximal",
                                                            "phalange"};
  if (slot <= 4) return std::string("thumb_") + std::string(bones[slot - 1]);
  const std::size_t finger = (slot - 1) / 4;
  const std::size_t bone = (slot - 1) % 4;
  return std::string(finger_name(static_cast<Finger>(finger))) + "_" + std::string(bones[bone]);
}

// 25-point body model indices used by the location classifier.
namespace body {
inline constexpr std::size_t kSize = 25;
inline constexpr std::size_t nose = 0;
inline constexpr std::size_t neck = 1;
inline constexpr std::size_t right_shoulder = 2;
inline constexpr std::size_t right_elbow = 3;
inline constexpr std::size_t right_wrist = 4;
inline constexpr std::size_t left_shoulder = 5;
inline constexpr std::size_t left_elbow = 6;
inline constexpr std::size_t left_wrist = 7;
inline constexpr std::size_t mid_hip = 8;
inline constexpr std::size_t right_eye = 15;
inline constexpr std::size_t left_eye = 16;
inline constexpr std::size_t right_ear = 17;
inline constexpr std::size_t left_ear = 18;
}  // namespace body

enum class Handedness : std::uint8_t { right, left };

struct PoseFrame {
  std::array<Keypoint, body::kSize> body{};
  HandSkeleton left_hand;
  HandSkeleton right_hand;
  std::optional<std::vector<Keypoint>> face;
  std::size_t frame_index = 0;
  std::string source_video;
  double frame_width = 1.0;
  double frame_height = 1.0;

  const HandSkeleton& hand(Handedness h) const {
    return h == Handedness::right ? right_hand : left_hand;
  }
  HandSkeleton& hand(Handedness h) { return h == Handedness::right ? right_hand : left_hand; }
  double diagonal() const { return std::hypot(frame_width, frame_height); }
};

// ---------------------------------------------------------------------------
// Label vocabularies

enum class Handshape : std::uint8_t {
  s_hand,
  one_hand,
  b_hand,
  b_hand_tommel,
  c_hand,
  paedagog_hand,
  pege_hand,
  two_hand,
  g_hand,
  three_hand,
  five_hand,
  nine_hand,
  o_hand,
};

enum class HandshapeGroup : std::uint8_t { tied, flat, one_finger, two_fingers, three_five_fingers, closed };

// Compass order, clockwise from north.
enum class Orientation : std::uint8_t { n, ne, e, se, s, sw, w, nw };

enum class Location : std::uint8_t { ears, eyes, nose, neck, shoulder, abdominal, neutral };

template <class E>
struct LabelTraits;

template <>
struct LabelTraits<Handedness> {
  static constexpr std::string_view kind = "handedness";
  static constexpr std::array<std::string_view, 2> codes = {"right", "left"};
};

template <>
struct LabelTraits<Handshape> {
  static constexpr std::string_view kind = "handshape";
  static constexpr std::array<std::string_view, 13> codes = {
      "s-hand", "1-hand", "b-hand", "b-hand-tommel", "c-hand", "paedagog-hand", "pege-hand",
      "2-hand", "g-hand", "3-hand", "5-hand",        "9-hand", "o-hand"};
};

template <>
struct LabelTraits<HandshapeGroup> {
  static constexpr std::string_view kind = "handshape group";
  static constexpr std::array<std::string_view, 6> codes = {"tied",      "flat",        "1-finger",
                                                            "2-fingers", "3-5-fingers", "closed"};
};

template <>
struct LabelTraits<Orientation> {
  static constexpr std::string_view kind = "orientation";
  static constexpr std::array<std::string_view, 8> codes = {"n", "ne", "e", "se", "s", "sw", "w", "nw"};
};

template <>
struct LabelTraits<Location> {
  static constexpr std::string_view kind = "location";
  static constexpr std::array<std::string_view, 7> codes = {"ears",     "eyes",      "nose",   "neck",
                                                            "shoulder", "abdominal", "neutral"};
};

template <class E>
inline constexpr std::size_t label_count() {
  return LabelTraits<E>::codes.size();
}

template <class E>
inline constexpr std::string_view render(E label) {
  return LabelTraits<E>::codes[static_cast<std::size_t>(label)];
}

template <class E>
inline std::optional<E> try_parse(std::string_view text) {
  const auto& codes = LabelTraits<E>::codes;
  for (std::size_t i = 0; i < codes.size(); ++i)
    if (codes[i] == text) return static_cast<E>(i);
  return std::nullopt;
}

template <class E>
inline E parse(std::string_view text) {
  if (auto v = try_parse<E>(text)) return *v;
  throw ParseError("unknown " + std::string(LabelTraits<E>::kind) + " label '" + std::string(text) + "'");
}

template <class E>
inline std::array<E, label_count<E>()> all_labels() {
  std::array<E, label_count<E>()> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<E>(i);
  return out;
}

template <class E>
inline std::vector<std::string> label_names() {
  std::vector<std::string> out;
  for (auto c : LabelTraits<E>::codes) out.emplace_back(c);
  return out;
}

inline constexpr HandshapeGroup handshape_group(Handshape h) {
  switch (h) {
    case Handshape::s_hand:
    case Handshape::one_hand:
      return HandshapeGroup::tied;
    case Handshape::b_hand:
    case Handshape::b_hand_tommel:
    case Handshape::c_hand:
    case Handshape::paedagog_hand:
      return HandshapeGroup::flat;
    case Handshape::pege_hand:
      return HandshapeGroup::one_finger;
    case Handshape::two_hand:
    case Handshape::g_hand:
      return HandshapeGroup::two_fingers;
    case Handshape::three_hand:
    case Handshape::five_hand:
      return HandshapeGroup::three_five_fingers;
    case Handshape::nine_hand:
    case Handshape::o_hand:
      return HandshapeGroup::closed;
  }
  return HandshapeGroup::closed;
}

}  // namespace signphon

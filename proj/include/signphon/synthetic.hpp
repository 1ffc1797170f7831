#pragma once

// Seeded generators for synthetic hands, poses, annotations and feature sets.
// Used by the tests, the acceptance suite and the CLI fixtures.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "signphon/ingest.hpp"
#include "signphon/learn/chain.hpp"
#include "signphon/learn/dataset.hpp"
#include "signphon/pose_model.hpp"

namespace signphon::synthetic {

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

// Finger curl in [0, 1] (0 straight, 1 folded into the palm) and spread factor.
struct HandPrototype {
  std::array<double, 5> flex{};  // thumb, index, middle, ring, little
  double spread = 1.0;
};

inline const HandPrototype& prototype(Handshape h) {
  static const std::array<HandPrototype, 13> table = {{
      {{0.9, 1.0, 1.0, 1.0, 1.0}, 0.6},  // s
      {{0.9, 0.0, 1.0, 1.0, 1.0}, 0.6},  // 1
      {{0.6, 0.0, 0.0, 0.0, 0.0}, 0.2},  // b
      {{0.0, 0.0, 0.0, 0.0, 0.0}, 0.2},  // b tommel
      {{0.4, 0.5, 0.5, 0.5, 0.5}, 0.6},  // c
      {{0.9, 0.3, 0.3, 0.3, 0.3}, 0.2},  // paedagog
      {{0.0, 0.0, 1.0, 1.0, 1.0}, 0.6},  // pege
      {{0.9, 0.0, 0.0, 1.0, 1.0}, 1.4},  // 2
      {{0.0, 0.5, 1.0, 1.0, 1.0}, 0.6},  // g
      {{0.0, 0.0, 0.0, 1.0, 1.0}, 1.4},  // 3
      {{0.0, 0.0, 0.0, 0.0, 0.0}, 1.4},  // 5
      {{0.5, 0.6, 0.0, 0.0, 0.0}, 1.0},  // 9
      {{0.6, 0.7, 0.7, 0.7, 0.7}, 0.6},  // o
  }};
  return table[static_cast<std::size_t>(h)];
}

struct HandPlacement {
  Point2 wrist{0.0, 0.0};
  double rotation_deg = 0.0;  // counter-clockwise as seen on screen; 0 = fingers point north
  double scale = 1.0;
};

// Builds a 21-point hand from a prototype. Fingers are chains of four
// segments from the wrist; every joint after the first bends by flex * 85 deg.
inline HandSkeleton build_hand(const HandPrototype& proto, const HandPlacement& place) {
  static constexpr std::array<std::array<double, 4>, 5> lengths = {{
      {20, 20, 15, 12},  // thumb: trapezium, metacarpal, proximal, tip
      {40, 25, 15, 12},
      {42, 28, 17, 13},
      {40, 25, 15, 12},
      {36, 20, 12, 10},
  }};
  static constexpr std::array<double, 5> base_angle = {-50, -12, 0, 12, 24};
  std::array<Keypoint, HandSkeleton::kSize> pts;
  const double rot = deg2rad(place.rotation_deg);
  // Local frame: +y is up on screen. Convert to image coordinates at the end.
  auto to_image = [&](double lx, double ly) {
    const double rx = lx * std::cos(rot) - ly * std::sin(rot);
    const double ry = lx * std::sin(rot) + ly * std::cos(rot);
    return Keypoint(place.wrist.x + place.scale * rx, place.wrist.y - place.scale * ry);
  };
  pts[HandSkeleton::kRadius] = to_image(0, 0);
  for (std::size_t f = 0; f < 5; ++f) {
    const double spread = f == 0 ? 1.0 : proto.spread;
    double angle = deg2rad(base_angle[f] * spread);  // measured clockwise from north in the local frame
    const double bend = deg2rad(85.0 * proto.flex[f]) * (f == 0 ? 1.0 : -1.0);
    double x = 0, y = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      if (k > 0) angle += bend;
      x += lengths[f][k] * std::sin(angle);
      y += lengths[f][k] * std::cos(angle);
      pts[1 + 4 * f + k] = to_image(x, y);
    }
  }
  return HandSkeleton(pts);
}

inline HandSkeleton jitter(const HandSkeleton& h, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  auto pts = h.points();
  for (auto& k : pts)
    if (k.detected()) k = Keypoint(k.x() + n(rng), k.y() + n(rng), k.confidence());
  return HandSkeleton(pts);
}

struct HandSample {
  HandSkeleton hand;
  Handshape label;
};

struct HandshapeSuiteOptions {
  std::size_t per_class = 40;
  bool random_rotation = false;   // uniform in [0, 360) when set
  double rotation_jitter_deg = 10.0;
  double keypoint_sigma = 1.0;
  double flex_jitter = 0.04;
  double scale_jitter = 0.02;
};

// Noisy instances of the 13 handshape prototypes, classes interleaved.
inline std::vector<HandSample> handshape_suite(const HandshapeSuiteOptions& opt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> full(0.0, 360.0);
  std::uniform_real_distribution<double> pos(150.0, 550.0);
  std::vector<HandSample> out;
  for (std::size_t i = 0; i < opt.per_class; ++i)
    for (auto h : all_labels<Handshape>()) {
      auto proto = prototype(h);
      for (auto& f : proto.flex) f = std::clamp(f + opt.flex_jitter * u(rng), 0.0, 1.0);
      HandPlacement place;
      place.wrist = {pos(rng), pos(rng)};
      place.rotation_deg = opt.random_rotation ? full(rng) : opt.rotation_jitter_deg * u(rng);
      place.scale = 1.0 + opt.scale_jitter * u(rng);
      out.push_back({jitter(build_hand(proto, place), opt.keypoint_sigma, rng), h});
    }
  return out;
}

// ---------------------------------------------------------------------------
// Body and frames

// Upright signer facing the camera in a w x h frame.
inline std::array<Keypoint, body::kSize> default_body(double w = 720.0, double h = 576.0) {
  std::array<Keypoint, body::kSize> b{};
  const double cx = 0.5 * w;
  auto at = [&](double fx, double fy) { return Keypoint(cx + fx * w, fy * h); };
  b[body::nose] = at(0.0, 0.22);
  b[body::neck] = at(0.0, 0.36);
  b[body::right_shoulder] = at(-0.13, 0.38);  // the signer's right side appears on the image left
  b[body::left_shoulder] = at(0.13, 0.38);
  b[body::right_elbow] = at(-0.17, 0.58);
  b[body::left_elbow] = at(0.17, 0.58);
  b[body::right_wrist] = at(-0.14, 0.74);
  b[body::left_wrist] = at(0.14, 0.74);
  b[body::mid_hip] = at(0.0, 0.80);
  b[body::right_eye] = at(-0.03, 0.18);
  b[body::left_eye] = at(0.03, 0.18);
  b[body::right_ear] = at(-0.07, 0.20);
  b[body::left_ear] = at(0.07, 0.20);
  return b;
}

inline PoseFrame make_frame(std::size_t index, const std::string& video, const HandSkeleton& right,
                            const HandSkeleton& left, double w = 720.0, double h = 576.0) {
  PoseFrame f;
  f.body = default_body(w, h);
  f.right_hand = right;
  f.left_hand = left;
  f.frame_index = index;
  f.source_video = video;
  f.frame_width = w;
  f.frame_height = h;
  return f;
}

// Right-hand wrist steps along x: frame t+1 sits steps[t] pixels right of
// frame t. The left hand rests.
inline std::vector<PoseFrame> trajectory_frames(std::span<const double> steps, const std::string& video = "synthetic") {
  const auto& five = prototype(Handshape::five_hand);
  const auto left = build_hand(five, {{480.0, 450.0}, 0.0, 1.0});
  std::vector<PoseFrame> frames;
  double x = 200.0;
  for (std::size_t t = 0; t <= steps.size(); ++t) {
    frames.push_back(make_frame(t, video, build_hand(five, {{x, 450.0}, 0.0, 1.0}), left));
    if (t < steps.size()) x += steps[t];
  }
  return frames;
}

// 26 frames; with a 3-frame window the speeds peak at windows 5 and 18, so
// frames 5..20 are kept.
inline std::vector<double> rest_sign_rest_steps() {
  return {0, 0, 0, 2, 6, 10, 10, 4, 1, 1, 1, 1, 1, 1, 1, 1, 1, 4, 10, 10, 6, 2, 0, 0, 0};
}

inline std::vector<PoseFrame> rest_sign_rest_frames(const std::string& video = "synthetic") {
  const auto steps = rest_sign_rest_steps();
  return trajectory_frames(steps, video);
}

// Rest, two speed bursts separated by slow motion, rest; with noise.
inline std::vector<double> random_trajectory_steps(std::uint64_t seed, std::size_t length = 60) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double c1 = 0.2 + 0.1 * u(rng), c2 = 0.7 + 0.1 * u(rng);
  const double a1 = 8 + 8 * u(rng), a2 = 8 + 8 * u(rng);
  const double w = 0.04 + 0.03 * u(rng);
  std::vector<double> steps(length);
  for (std::size_t t = 0; t < length; ++t) {
    const double s = static_cast<double>(t) / static_cast<double>(length);
    const double g1 = std::exp(-0.5 * std::pow((s - c1) / w, 2));
    const double g2 = std::exp(-0.5 * std::pow((s - c2) / w, 2));
    const double mid = s > c1 && s < c2 ? 1.0 : 0.0;
    steps[t] = a1 * g1 + a2 * g2 + mid + 0.5 * u(rng);
  }
  return steps;
}

// ---------------------------------------------------------------------------
// Orientation x location annotations

struct ContingencyGenerator {
  std::array<double, 8> orientation_weights = {3, 2, 2, 1, 1, 1, 2, 3};
  std::array<double, 7> location_weights = {1, 1, 2, 2, 3, 3, 4};
  std::optional<std::pair<Orientation, Location>> planted;
  double boost = 5.0;  // P(O_i | L_j) multiplied by this (then renormalised) for the planted pair
};

// n records with independent orientation and location unless a pair is
// planted. Handedness alternates right/left.
inline std::vector<AnnotationRecord> sample_annotations(std::size_t n, const ContingencyGenerator& g,
                                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> loc(g.location_weights.begin(), g.location_weights.end());
  std::discrete_distribution<std::size_t> ori(g.orientation_weights.begin(), g.orientation_weights.end());
  std::optional<std::discrete_distribution<std::size_t>> boosted;
  if (g.planted) {
    auto w = g.orientation_weights;
    w[static_cast<std::size_t>(g.planted->first)] *= g.boost;
    boosted.emplace(w.begin(), w.end());
  }
  std::vector<AnnotationRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    AnnotationRecord r;
    r.video_frame = video_frame_name("synthetic", i);
    r.handedness = i % 2 == 0 ? Handedness::right : Handedness::left;
    r.location = static_cast<Location>(loc(rng));
    const bool planted_here = g.planted && r.location == g.planted->second;
    r.orientation = static_cast<Orientation>(planted_here ? (*boosted)(rng) : ori(rng));
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Co-dependent orientation/location feature suite (chain experiments)

struct CodependentOptions {
  std::size_t n = 1500;
  double preferred_probability = 0.8;  // P(O = preferred(L)); the rest is spread uniformly
  double angle_noise_deg = 15.0;       // observation noise on the finger direction
  double position_noise = 15.0;        // pixels, on the hand centroid
};

// Preferred orientation of each location (neutral -> s); sw is never preferred.
inline Orientation preferred_orientation(Location l) {
  static constexpr std::array<Orientation, 7> pref = {Orientation::w,  Orientation::nw, Orientation::n,
                                                      Orientation::ne, Orientation::e,  Orientation::se,
                                                      Orientation::s};
  return pref[static_cast<std::size_t>(l)];
}

inline Point2 location_anchor(Location l) {
  static constexpr std::array<Point2, 7> anchor = {
      Point2{310, 120}, Point2{345, 105}, Point2{360, 130}, Point2{360, 205},
      Point2{265, 220}, Point2{360, 420}, Point2{500, 320}};
  return anchor[static_cast<std::size_t>(l)];
}

// Orientation block: wrist-relative middle metacarpal and middle tip (4
// columns). Location block: hand centroid (2 columns).
inline learn::ChainData codependent_suite(const CodependentOptions& opt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> loc(0, 6);
  std::uniform_int_distribution<int> other(0, 6);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> within(-22.5, 22.5);
  std::normal_distribution<double> angle_noise(0.0, opt.angle_noise_deg);
  std::normal_distribution<double> pos_noise(0.0, opt.position_noise);
  std::normal_distribution<double> kp_noise(0.0, 1.5);

  learn::Matrix ori(opt.n, 4), pos(opt.n, 2);
  std::vector<std::string> o_tokens, l_tokens;
  for (std::size_t i = 0; i < opt.n; ++i) {
    const auto l = static_cast<Location>(loc(rng));
    const auto pref = static_cast<int>(preferred_orientation(l));
    int o = pref;
    if (u01(rng) >= opt.preferred_probability) {
      o = other(rng);
      if (o >= pref) ++o;
    }
    // Compass index k is centred on 90 - 45k degrees (math convention).
    const double theta = deg2rad(90.0 - 45.0 * o + within(rng) + angle_noise(rng));
    ori(i, 0) = 42.0 * std::cos(theta) + kp_noise(rng);
    ori(i, 1) = -42.0 * std::sin(theta) + kp_noise(rng);
    ori(i, 2) = 100.0 * std::cos(theta) + kp_noise(rng);
    ori(i, 3) = -100.0 * std::sin(theta) + kp_noise(rng);
    const auto a = location_anchor(l);
    pos(i, 0) = a.x + pos_noise(rng);
    pos(i, 1) = a.y + pos_noise(rng);
    o_tokens.emplace_back(render(static_cast<Orientation>(o)));
    l_tokens.emplace_back(render(l));
  }
  learn::ChainData d;
  d.features[learn::Task::orientation] = std::move(ori);
  d.features[learn::Task::location] = std::move(pos);
  d.labels[learn::Task::orientation] = learn::TaskLabels::from_tokens(o_tokens, label_names<Orientation>());
  d.labels[learn::Task::location] = learn::TaskLabels::from_tokens(l_tokens, label_names<Location>());
  return d;
}

// ---------------------------------------------------------------------------
// Gaussian blobs

struct Blobs {
  learn::Matrix x;
  std::vector<int> y;
};

inline Blobs make_blobs(const std::vector<std::vector<double>>& centers, std::size_t per_class, double sigma,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  const std::size_t dim = centers.front().size();
  Blobs b{learn::Matrix(centers.size() * per_class, dim), {}};
  std::size_t r = 0;
  for (std::size_t i = 0; i < per_class; ++i)
    for (std::size_t c = 0; c < centers.size(); ++c, ++r) {
      for (std::size_t j = 0; j < dim; ++j) b.x(r, j) = centers[c][j] + n(rng);
      b.y.push_back(static_cast<int>(c));
    }
  return b;
}

}  // namespace signphon::synthetic

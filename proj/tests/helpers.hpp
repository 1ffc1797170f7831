#pragma once

#include <array>
#include <random>

#include "signphon/pose_model.hpp"

namespace testutil {

inline signphon::HandSkeleton random_hand(std::mt19937_64& rng, double lo = 0.0, double hi = 500.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::array<signphon::Keypoint, signphon::HandSkeleton::kSize> pts;
  for (auto& p : pts) p = signphon::Keypoint(u(rng), u(rng));
  return signphon::HandSkeleton(pts);
}

inline signphon::HandSkeleton constant_hand(double x, double y) {
  std::array<signphon::Keypoint, signphon::HandSkeleton::kSize> pts;
  pts.fill(signphon::Keypoint(x, y));
  return signphon::HandSkeleton(pts);
}

template <class F>
signphon::HandSkeleton transform_hand(const signphon::HandSkeleton& h, F&& f) {
  std::array<signphon::Keypoint, signphon::HandSkeleton::kSize> pts;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& k = h.at(i);
    if (!k.detected()) continue;
    const auto p = f(k.point());
    pts[i] = signphon::Keypoint(p.x, p.y, k.confidence());
  }
  return signphon::HandSkeleton(pts);
}

inline signphon::Point2 rotate(signphon::Point2 p, double radians, signphon::Point2 about = {}) {
  const double c = std::cos(radians), s = std::sin(radians);
  const double dx = p.x - about.x, dy = p.y - about.y;
  return {about.x + c * dx - s * dy, about.y + s * dx + c * dy};
}

}  // namespace testutil

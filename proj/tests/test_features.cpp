#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "helpers.hpp"
#include "signphon/features.hpp"

using namespace signphon;

TEST_CASE("raw features") {
  const auto zero = raw_features(testutil::constant_hand(0, 0));
  CHECK(zero.size() == 42);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));

  auto h = testutil::constant_hand(0, 0);
  h.at(HandSkeleton::kRadius) = Keypoint(3, 7);
  const auto v = raw_features(h);
  CHECK(v[0] == 3);
  CHECK(v[1] == 7);

  std::mt19937_64 rng(1);
  const auto r = testutil::random_hand(rng);
  const auto rv = raw_features(r);
  std::size_t i = 0;
  for (const auto& k : r.points()) {
    CHECK(rv[i++] == k.x());
    CHECK(rv[i++] == k.y());
  }
  CHECK(raw_feature_names().size() == 42);
  CHECK(raw_feature_names()[0] == "radius_x");

  h.at(7) = Keypoint::undetected();
  CHECK_THROWS_AS(raw_features(h), DataError);
}

TEST_CASE("distance features") {
  const auto zero = distance_features(testutil::constant_hand(4, 4));
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));

  auto h = testutil::constant_hand(0, 0);
  h.at(HandSkeleton::slot(Finger::thumb, Bone::phalanx)) = Keypoint(3, 4);
  CHECK(distance_features(h)[0] == Catch::Approx(5.0));
  CHECK(distance_feature_names().size() == 15);
  CHECK(distance_feature_names()[0] == "radius_thumb");

  // Independent pair list: radius then the fingertips 4, 8, 12, 16, 20, all unordered pairs.
  const std::array<std::size_t, 6> ends = {0, 4, 8, 12, 16, 20};
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = testutil::random_hand(rng);
    const auto d = distance_features(r);
    std::size_t n = 0;
    for (std::size_t a = 0; a < ends.size(); ++a)
      for (std::size_t b = a + 1; b < ends.size(); ++b) {
        const double dx = r.at(ends[a]).x() - r.at(ends[b]).x();
        const double dy = r.at(ends[a]).y() - r.at(ends[b]).y();
        CHECK(std::abs(d[n++] - std::sqrt(dx * dx + dy * dy)) < 1e-9);
      }
    CHECK(n == 15);
  }

  auto missing = testutil::constant_hand(1, 1);
  missing.at(HandSkeleton::slot(Finger::ring, Bone::phalanx)) = Keypoint::undetected();
  CHECK_THROWS_AS(distance_features(missing), DataError);
}

TEST_CASE("distance features are rigid-motion invariant, raw features are not") {
  std::mt19937_64 rng(3);
  const auto h = testutil::random_hand(rng);
  const auto moved = testutil::transform_hand(h, [](Point2 p) { return testutil::rotate(p, 1.1, {50, 80}) + Point2{-30, 12}; });
  const auto a = distance_features(h), b = distance_features(moved);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
  CHECK(raw_features(h) != raw_features(moved));
}

TEST_CASE("raster rendering") {
  SECTION("one bone: endpoints plus at most fill_steps interior cells") {
    std::array<Keypoint, HandSkeleton::kSize> pts;
    pts[0] = Keypoint(0, 0);
    pts[1] = Keypoint(100, 37);
    const auto r = render_skeleton(HandSkeleton(pts));
    CHECK(r.count() >= 2);
    CHECK(r.count() <= 12);
    CHECK(r.at(4, 4));
  }
  SECTION("vertical bone") {
    std::array<Keypoint, HandSkeleton::kSize> pts;
    pts[0] = Keypoint(10, 0);
    pts[1] = Keypoint(10, 50);
    const auto r = render_skeleton(HandSkeleton(pts));
    std::set<std::size_t> xs;
    for (std::size_t y = 0; y < r.size(); ++y)
      for (std::size_t x = 0; x < r.size(); ++x)
        if (r.at(x, y)) xs.insert(x);
    CHECK(xs.size() == 1);
    CHECK(r.count() == 12);
  }
  SECTION("degenerate hand sets the centre cell") {
    const auto r = render_skeleton(testutil::constant_hand(5, 5));
    CHECK(r.count() == 1);
    CHECK(r.at(64, 64));
  }
  SECTION("full hand matches a per-edge sampling oracle") {
    std::mt19937_64 rng(4);
    const auto h = testutil::random_hand(rng, 100, 300);
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const auto& k : h.points()) {
      lo_x = std::min(lo_x, k.x());
      lo_y = std::min(lo_y, k.y());
      hi_x = std::max(hi_x, k.x());
      hi_y = std::max(hi_y, k.y());
    }
    const double ext = std::max(hi_x - lo_x, hi_y - lo_y), span = 128 - 1 - 8;
    std::vector<std::uint8_t> oracle(128 * 128, 0);
    const std::array<int, 5> bases = {1, 5, 9, 13, 17};
    for (int base : bases) {
      std::vector<int> chain = {0, base, base + 1, base + 2, base + 3};
      for (std::size_t e = 0; e + 1 < chain.size(); ++e) {
        const auto& a = h.at(static_cast<std::size_t>(chain[e]));
        const auto& b = h.at(static_cast<std::size_t>(chain[e + 1]));
        for (int i = 0; i <= 11; ++i) {
          const double t = i / 11.0;
          const double ga_x = 4 + (a.x() - lo_x) / ext * span, gb_x = 4 + (b.x() - lo_x) / ext * span;
          const double ga_y = 4 + (a.y() - lo_y) / ext * span, gb_y = 4 + (b.y() - lo_y) / ext * span;
          oracle[static_cast<std::size_t>(std::lround(ga_y + (gb_y - ga_y) * t)) * 128 +
                 static_cast<std::size_t>(std::lround(ga_x + (gb_x - ga_x) * t))] = 1;
        }
      }
    }
    CHECK(render_skeleton(h).cells() == oracle);
  }
  SECTION("uniform scaling leaves the raster bitwise unchanged") {
    std::mt19937_64 rng(5);
    const auto h = testutil::random_hand(rng, 0, 400);
    const auto big = testutil::transform_hand(h, [](Point2 p) { return p * 2.0; });
    const auto small = testutil::transform_hand(h, [](Point2 p) { return p * 0.25; });
    CHECK(render_skeleton(h) == render_skeleton(big));
    CHECK(render_skeleton(h) == render_skeleton(small));
  }
  CHECK(hand_edges().size() == 20);
  CHECK_THROWS_AS(render_skeleton(HandSkeleton{}), DataError);
}

TEST_CASE("crop origin") {
  CHECK(crop_origin({288, 352}, 512, 512) == std::pair<std::int64_t, std::int64_t>{224, 288});
  CHECK(crop_origin({0, 0}, 512, 512) == std::pair<std::int64_t, std::int64_t>{0, 0});
  CHECK(crop_origin({720, 576}, 720, 576) == std::pair<std::int64_t, std::int64_t>{576, 448});
  CHECK_THROWS_AS(crop_origin({0, 0}, 100, 512), DataError);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 700);
  for (int i = 0; i < 100; ++i) {
    const auto [x, y] = crop_origin({u(rng), u(rng)}, 720, 576);
    CHECK(x % 32 == 0);
    CHECK(y % 32 == 0);
    CHECK(x + 128 <= 720);
    CHECK(y + 128 <= 576);
  }
}

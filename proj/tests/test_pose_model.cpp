#include <catch_amalgamated.hpp>

#include <set>

#include "signphon/pose_model.hpp"

using namespace signphon;

TEST_CASE("undetected keypoint is distinct from the origin") {
  const Keypoint none;
  const Keypoint origin(0, 0);
  CHECK_FALSE(none.detected());
  CHECK(origin.detected());
  CHECK_FALSE(none == origin);
  CHECK(Keypoint::undetected() == none);
}

TEST_CASE("all 21 hand slots are addressable and unique") {
  std::set<std::size_t> slots{HandSkeleton::kRadius};
  for (auto f : kFingers)
    for (auto b : {Bone::phalanx, Bone::proximal, Bone::metacarpal, Bone::carpal}) {
      if (f == Finger::thumb && b == Bone::carpal) {
        CHECK_THROWS_AS(HandSkeleton::slot(f, b), DataError);
        continue;
      }
      slots.insert(HandSkeleton::slot(f, b));
    }
  slots.insert(HandSkeleton::kTrapezium);
  CHECK(slots.size() == HandSkeleton::kSize);
  CHECK(*slots.rbegin() == 20);
}

TEST_CASE("slot layout follows the 21-point hand order") {
  CHECK(HandSkeleton::slot(Finger::thumb, Bone::phalanx) == 4);
  CHECK(HandSkeleton::slot(Finger::thumb, Bone::metacarpal) == 2);
  CHECK(HandSkeleton::slot(Finger::index, Bone::carpal) == 5);
  CHECK(HandSkeleton::slot(Finger::middle, Bone::metacarpal) == 10);
  CHECK(HandSkeleton::slot(Finger::little, Bone::phalanx) == 20);
  CHECK(hand_slot_name(0) == "radius");
  CHECK(hand_slot_name(8) == "index_phalange");
}

TEST_CASE("handshape groups") {
  CHECK(handshape_group(Handshape::s_hand) == HandshapeGroup::tied);
  CHECK(handshape_group(Handshape::pege_hand) == HandshapeGroup::one_finger);
  CHECK(render(handshape_group(Handshape::pege_hand)) == "1-finger");
  CHECK(handshape_group(Handshape::o_hand) == HandshapeGroup::closed);
  std::array<int, label_count<HandshapeGroup>()> used{};
  for (auto h : all_labels<Handshape>()) ++used[static_cast<std::size_t>(handshape_group(h))];
  for (int u : used) CHECK(u > 0);
}

TEST_CASE("label vocabularies") {
  CHECK(label_count<Orientation>() == 8);
  CHECK(label_count<Location>() == 7);
  CHECK(label_count<Handshape>() == 13);
  for (auto o : all_labels<Orientation>()) CHECK(parse<Orientation>(render(o)) == o);
  for (auto h : all_labels<Handshape>()) CHECK(parse<Handshape>(render(h)) == h);
  CHECK(render(Handshape::pege_hand) == "pege-hand");
  CHECK_FALSE(try_parse<Location>("elbow"));
  CHECK_THROWS(parse<Location>("elbow"));
}

TEST_CASE("frame diagonal") {
  PoseFrame f;
  f.frame_width = 600;
  f.frame_height = 800;
  CHECK(f.diagonal() == Catch::Approx(1000.0));
}

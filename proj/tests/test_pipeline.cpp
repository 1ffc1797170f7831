#include <numbers>
#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "signphon/geometry_params.hpp"
#include "signphon/ingest.hpp"
#include "signphon/segmentation.hpp"
#include "signphon/synthetic.hpp"

using namespace signphon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string log;
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("signphon_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run cli(const std::string& args, const fs::path& dir) {
  const auto log = dir / "stderr.txt";
  const std::string cmd = std::string(SIGNPHON_CLI) + " " + args + " 2> " + log.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), read_text_file(log)};
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

std::string data_file(const std::string& name) { return (fs::path(SIGNPHON_DATA) / name).string(); }

}  // namespace

TEST_CASE("segment keeps the sign and warns on stationary video") {
  const auto dir = scratch("segment");
  const auto out = dir.string();
  REQUIRE(cli("--seed 1 --out " + out + " synth --kind rest-sign-rest", dir).code == 0);
  REQUIRE(cli("--frames " + out + "/frames --out " + out + " segment", dir).code == 0);
  std::string expected;
  for (int i = 5; i <= 20; ++i) expected += std::to_string(i) + "\n";
  CHECK(slurp(dir / "segments" / "rsr.txt") == expected);

  const auto still = scratch("segment_still");
  REQUIRE(cli("--seed 1 --out " + still.string() + " synth --kind stationary", still).code == 0);
  const auto r = cli("--frames " + still.string() + "/frames --out " + still.string() + " segment", still);
  CHECK(r.code == 0);
  CHECK_THAT(r.log, Catch::Matchers::ContainsSubstring("no maxima"));
  CHECK(slurp(still / "segments" / "still.txt").size() > 0);
  std::size_t lines = 0;
  for (char c : slurp(still / "segments" / "still.txt")) lines += c == '\n';
  CHECK(lines == 13);
}

TEST_CASE("segment errors") {
  const auto dir = scratch("segment_errors");
  fs::create_directories(dir / "empty");
  CHECK(cli("--frames " + (dir / "empty").string() + " --out " + dir.string() + " segment", dir).code == 2);
  CHECK(cli("--frames " + (dir / "missing").string() + " --out " + dir.string() + " segment", dir).code == 2);

  REQUIRE(cli("--seed 1 --out " + dir.string() + " synth --kind rest-sign-rest", dir).code == 0);
  {
    std::ofstream(dir / "frames" / "rsr_0099_keypoints.json") << "{ broken";
  }
  const auto one_bad = cli("--frames " + (dir / "frames").string() + " --out " + dir.string() + " segment", dir);
  CHECK(one_bad.code == 0);  // 1 of 27 files
  CHECK_THAT(one_bad.log, Catch::Matchers::ContainsSubstring("rsr_0099"));
  for (int i = 100; i < 104; ++i) std::ofstream(dir / "frames" / frame_filename("rsr", static_cast<std::size_t>(i))) << "[]";
  CHECK(cli("--frames " + (dir / "frames").string() + " --out " + dir.string() + " segment", dir).code == 2);
}

TEST_CASE("usage and config errors exit with 1") {
  const auto dir = scratch("usage");
  CHECK(cli("", dir).code == 1);
  CHECK(cli("frobnicate", dir).code == 1);
  CHECK(cli("--out " + dir.string() + " synth --kind planted", dir).code == 1);  // no seed
  CHECK(cli("--seed 1 --out " + dir.string() + " synth --kind nonsense", dir).code == 1);
  std::ofstream(dir / "bad.json") << R"({"seed": 1, "colour": "blue"})";
  const auto r = cli("--config " + (dir / "bad.json").string() + " report", dir);
  CHECK(r.code == 1);
  CHECK_THAT(r.log, Catch::Matchers::ContainsSubstring("colour"));
  std::ofstream(dir / "bad2.json") << R"({"seed": 1, "classifier": {"kind": "svm"}})";
  CHECK(cli("--config " + (dir / "bad2.json").string() + " report", dir).code == 1);
}

TEST_CASE("featurize, train, annotate and codep end to end") {
  const auto dir = scratch("e2e");
  const auto out = dir.string();
  REQUIRE(cli("--seed 3 --out " + out + " synth --kind handshapes", dir).code == 0);
  const std::string inputs =
      "--frames " + out + "/frames --catalog " + out + "/catalog.xml --label-map " + data_file("catalog_labels.tsv");
  REQUIRE(cli(inputs + " --out " + out + " featurize", dir).code == 0);
  const auto table = slurp(dir / "features_distance.csv");
  CHECK(table.rfind("radius_thumb,", 0) == 0);
  CHECK(fs::exists(dir / "features_raw.csv"));
  CHECK(fs::exists(dir / "location_heatmap.csv"));

  // k-NN on the distance features of the synthetic suite.
  std::ofstream(dir / "knn.json") << R"({"seed": 5, "tasks": ["handshape"], "classifier": {"kind": "knn", "k": 5},
                                         "kfold": 5})";
  const auto train_dir = dir / "knn";
  REQUIRE(cli("--config " + (dir / "knn.json").string() + " --features " + out + "/features_distance.csv --out " +
                  train_dir.string() + " train",
              dir)
              .code == 0);
  const auto metrics = slurp(train_dir / "metrics.txt");
  const auto pos = metrics.find("\nhandshape ");
  REQUIRE(pos != std::string::npos);
  std::istringstream row(metrics.substr(pos + 1));
  std::string task, val, test;
  row >> task >> val >> test;
  CHECK(std::stod(test) >= 0.95);
  CHECK(fs::exists(train_dir / "confusion_handshape.csv"));
  CHECK(fs::exists(train_dir / "kfold.txt"));

  // Determinism of the train command.
  const auto again = dir / "knn_again";
  REQUIRE(cli("--config " + (dir / "knn.json").string() + " --features " + out + "/features_distance.csv --out " +
                  again.string() + " train",
              dir)
              .code == 0);
  CHECK(slurp(again / "metrics.txt") == metrics);
  CHECK(slurp(again / "model.json") == slurp(train_dir / "model.json"));

  // Annotate a frame with a 1-hand near the right shoulder pointing north-east.
  const auto frames = dir / "annotate_frames";
  fs::create_directories(frames);
  const auto body = synthetic::default_body();
  // The flexed middle finger bends slot 10 off the rotation axis, so aim it explicitly.
  auto hand = synthetic::build_hand(synthetic::prototype(Handshape::one_hand), {{0, 0}, 0.0, 1.0});
  const Point2 d = hand.at(Finger::middle, Bone::metacarpal).point() - hand.at(HandSkeleton::kRadius).point();
  const double rot = 45.0 - std::atan2(-d.y, d.x) * 180.0 / std::numbers::pi;
  hand = synthetic::build_hand(synthetic::prototype(Handshape::one_hand), {{0, 0}, rot, 1.0});
  const auto c = *hand_centroid(hand);
  const Point2 target = body[body::right_shoulder].point() + Point2{8, 6};
  hand = synthetic::build_hand(synthetic::prototype(Handshape::one_hand), {target - c, rot, 1.0});
  const auto frame = synthetic::make_frame(0, "one", hand, HandSkeleton{});
  REQUIRE(finger_orientation(frame.right_hand) == Orientation::ne);
  REQUIRE(hand_location(frame, Handedness::right) == Location::shoulder);
  write_text_file_atomic(frames / frame_filename("one", 0), write_pose_frame(frame));

  const auto plain = dir / "annotate_plain";
  const auto no_model = cli("--frames " + frames.string() + " --out " + plain.string() + " annotate", dir);
  REQUIRE(no_model.code == 0);
  CHECK_THAT(no_model.log, Catch::Matchers::ContainsSubstring("no handshape model"));
  const auto rows = read_annotations(slurp(plain / "annotations.txt"));
  REQUIRE(rows.size() == 1);  // the left hand is absent
  CHECK_FALSE(rows[0].handshape);
  CHECK(slurp(plain / "annotations.txt").ends_with("right - ne shoulder\n"));

  const auto modelled = dir / "annotate_model";
  REQUIRE(cli("--frames " + frames.string() + " --model " + (train_dir / "model.json").string() + " --out " +
                  modelled.string() + " annotate",
              dir)
              .code == 0);
  const auto file = read_annotation_file(slurp(modelled / "annotations.txt"));
  REQUIRE(file.records.size() == 1);
  CHECK(file.records[0].handshape == Handshape::one_hand);
  CHECK(write_annotations(file.records, HandshapeColumn::index).ends_with("right 1 ne shoulder\n"));

  // Two hands give two rows.
  const auto both = synthetic::make_frame(1, "one", hand, hand);
  write_text_file_atomic(frames / frame_filename("one", 1), write_pose_frame(both));
  const auto two = dir / "annotate_two";
  REQUIRE(cli("--frames " + frames.string() + " --out " + two.string() + " annotate", dir).code == 0);
  CHECK(read_annotations(slurp(two / "annotations.txt")).size() == 3);

  // Co-dependence on the planted fixture, then the report.
  REQUIRE(cli("--seed 9 --out " + out + " synth --kind planted", dir).code == 0);
  REQUIRE(cli("--out " + out + " codep", dir).code == 0);
  CHECK_THAT(slurp(dir / "codep_summary.txt"), Catch::Matchers::ContainsSubstring("n   nose"));
  CHECK(fs::exists(dir / "contingency_right.csv"));
  CHECK(fs::exists(dir / "significance.csv"));
  fs::copy_file(train_dir / "metrics.txt", dir / "metrics.txt", fs::copy_options::overwrite_existing);
  REQUIRE(cli("--out " + out + " report", dir).code == 0);
  const auto report = slurp(dir / "report.md");
  CHECK_THAT(report, Catch::Matchers::ContainsSubstring("handshape"));
  CHECK_THAT(report, Catch::Matchers::ContainsSubstring("significant"));
}

TEST_CASE("codep needs two distinct labels") {
  const auto dir = scratch("codep_degenerate");
  std::vector<AnnotationRecord> recs(5, {"a.png", 0, 0, Handedness::right, {}, Orientation::n, Location::nose});
  write_text_file_atomic(dir / "annotations.txt", write_annotations(recs));
  const auto r = cli("--out " + dir.string() + " codep", dir);
  CHECK(r.code == 2);
  CHECK_THAT(r.log, Catch::Matchers::ContainsSubstring("untestable"));
}

TEST_CASE("joint mode with both couplings reports every task") {
  const auto dir = scratch("joint");
  const auto out = dir.string();
  REQUIRE(cli("--seed 4 --out " + out + " synth --kind handshapes", dir).code == 0);
  REQUIRE(cli("--frames " + out + "/frames --catalog " + out + "/catalog.xml --label-map " +
                  data_file("catalog_labels.tsv") + " --out " + out + " featurize",
              dir)
              .code == 0);
  std::ofstream(dir / "joint.json") << R"({"seed": 2, "mode": "joint",
      "tasks": ["handedness", "handshape", "orientation", "location"],
      "coupling": ["location->orientation", "orientation->location"],
      "classifier": {"kind": "mlp", "epochs": 30, "hidden": [32]}})";
  REQUIRE(cli("--config " + (dir / "joint.json").string() + " --out " + out + " train", dir).code == 0);
  const auto metrics = slurp(dir / "metrics.txt");
  for (const char* t : {"\nhandedness ", "\nhandshape ", "\norientation ", "\nlocation "})
    CHECK_THAT(metrics, Catch::Matchers::ContainsSubstring(t));
  CHECK_THAT(metrics, Catch::Matchers::ContainsSubstring("mode joint"));
}

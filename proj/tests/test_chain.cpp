#include <catch_amalgamated.hpp>

#include "signphon/learn/chain.hpp"
#include "signphon/synthetic.hpp"

using namespace signphon;
using namespace signphon::learn;

namespace {

ChainData small_suite(std::size_t n, std::uint64_t seed, double preferred = 0.8) {
  synthetic::CodependentOptions opt;
  opt.n = n;
  opt.preferred_probability = preferred;
  return synthetic::codependent_suite(opt, seed);
}

ChainConfig two_task_config(ClassifierKind kind, std::uint64_t seed) {
  ChainConfig cfg;
  cfg.tasks = {Task::orientation, Task::location};
  cfg.classifier.kind = kind;
  cfg.classifier.forest.min_samples_leaf = 5;
  cfg.classifier.forest.min_samples_split = 10;
  cfg.classifier.mlp.epochs = 10;
  cfg.classifier.mlp.hidden = {16};
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("coupling edges and names") {
  const auto e = parse_edge("location->orientation");
  CHECK(e.source == Task::location);
  CHECK(e.target == Task::orientation);
  CHECK(edge_name(e) == "location->orientation");
  CHECK_THROWS_AS(parse_edge("location orientation"), ParseError);
  CHECK(parse_classifier(classifier_name(ClassifierKind::forest)) == ClassifierKind::forest);
  CHECK(parse_mode("joint") == ChainMode::joint);
  CHECK(training_order({Task::location, Task::handshape, Task::orientation}) ==
        std::vector<Task>{Task::handshape, Task::location, Task::orientation});
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}

TEST_CASE("empty coupling reproduces independent training exactly") {
  const auto data = small_suite(300, 1);
  for (auto kind : {ClassifierKind::knn, ClassifierKind::forest, ClassifierKind::mlp}) {
    const auto cfg = two_task_config(kind, 11);
    const auto chain = ChainModel::train(data, cfg);
    for (auto t : cfg.tasks) {
      const auto alone = Classifier::train(cfg.classifier, data.features.at(t), data.labels.at(t).y,
                                           data.labels.at(t).classes, task_seed(cfg.seed, t));
      CHECK(chain.base(t).to_json() == alone.to_json());
      CHECK(chain.coupled(t) == nullptr);
    }
  }
}

TEST_CASE("coupling widens each target by the source class count") {
  const auto data = small_suite(300, 2);
  auto cfg = two_task_config(ClassifierKind::knn, 3);
  cfg.coupling = {parse_edge("location->orientation"), parse_edge("orientation->location")};
  const auto chain = ChainModel::train(data, cfg);
  const auto o_width = data.features.at(Task::orientation).cols();
  const auto l_width = data.features.at(Task::location).cols();
  CHECK(chain.input_width(Task::orientation) == o_width + label_count<Location>());
  CHECK(chain.input_width(Task::location) == l_width + label_count<Orientation>());
  CHECK(chain.base(Task::orientation).num_features() == o_width);
  const auto proba = chain.predict_proba(data);
  CHECK(proba.at(Task::orientation).size() == 300);
  CHECK(proba.at(Task::orientation)[0].size() == label_count<Orientation>());
}

TEST_CASE("coupling does not harm on co-dependent labels") {
  const auto train = small_suite(800, 3);
  const auto test = small_suite(600, 4);
  auto cfg = two_task_config(ClassifierKind::forest, 5);
  cfg.classifier.forest.max_features_fraction = 1.0;
  const auto plain = ChainModel::train(train, cfg).accuracy(test);
  cfg.coupling = {parse_edge("location->orientation")};
  const auto coupled = ChainModel::train(train, cfg).accuracy(test);
  CHECK(coupled.at(Task::orientation) >= plain.at(Task::orientation) - 0.02);
  CHECK(coupled.at(Task::location) == plain.at(Task::location));
}

TEST_CASE("joint mode") {
  const auto data = small_suite(200, 6);
  auto cfg = two_task_config(ClassifierKind::knn, 7);
  cfg.mode = ChainMode::joint;
  CHECK_THROWS_AS(ChainModel::train(data, cfg), DataError);
  cfg.classifier.kind = ClassifierKind::mlp;
  cfg.coupling = {parse_edge("location->orientation"), parse_edge("orientation->location")};
  const auto chain = ChainModel::train(data, cfg);
  const auto width = data.features.at(Task::orientation).cols() + data.features.at(Task::location).cols();
  CHECK(chain.input_width(Task::location) == width);
  const auto acc = chain.accuracy(data);
  CHECK(acc.size() == 2);
  const auto back = ChainModel::from_json(chain.to_json());
  CHECK(back.predict_proba(data) == chain.predict_proba(data));
}

TEST_CASE("chain serialisation and determinism") {
  const auto data = small_suite(250, 8);
  for (auto kind : {ClassifierKind::knn, ClassifierKind::forest, ClassifierKind::mlp}) {
    auto cfg = two_task_config(kind, 9);
    cfg.coupling = {parse_edge("orientation->location")};
    const auto a = ChainModel::train(data, cfg);
    const auto b = ChainModel::train(data, cfg);
    CHECK(a.to_json().dump() == b.to_json().dump());
    const auto j = a.to_json();
    CHECK(j.at("format") == "signphon-chain");
    CHECK(j.at("format_version") == kModelFormatVersion);
    const auto back = ChainModel::from_json(j);
    CHECK(back.predict(data) == a.predict(data));
  }
}

TEST_CASE("chain errors") {
  const auto data = small_suite(100, 10);
  auto cfg = two_task_config(ClassifierKind::knn, 1);
  cfg.coupling = {parse_edge("handshape->orientation")};
  CHECK_THROWS_AS(ChainModel::train(data, cfg), DataError);
  cfg.coupling = {};
  cfg.tasks = {Task::orientation, Task::orientation};
  CHECK_THROWS_AS(ChainModel::train(data, cfg), DataError);
  cfg.tasks = {Task::handshape};
  CHECK_THROWS_AS(ChainModel::train(data, cfg), DataError);
  auto broken = data;
  broken.features[Task::location] = broken.features[Task::location].select_rows(std::vector<std::size_t>{0, 1});
  cfg.tasks = {Task::orientation, Task::location};
  CHECK_THROWS_AS(ChainModel::train(broken, cfg), DataError);
}

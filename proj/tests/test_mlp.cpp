#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "signphon/learn/mlp.hpp"
#include "signphon/synthetic.hpp"

using namespace signphon;
using namespace signphon::learn;

namespace {

// Largest relative difference between backprop and central differences.
double gradient_error(MlpNetwork net, std::uint64_t seed, bool with_unknown_labels) {
  net.initialize(seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  for (auto& p : net.parameters()) p += 0.2 * n(rng);
  const std::size_t rows = 5;
  Matrix x(rows, net.input_dim());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = n(rng);
  std::vector<std::vector<int>> labels;
  for (const auto& h : net.heads()) {
    std::vector<int> y;
    for (std::size_t i = 0; i < rows; ++i) y.push_back(static_cast<int>(rng() % h.classes));
    if (with_unknown_labels) y[1] = -1;
    labels.push_back(y);
  }
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> grad;
  net.loss_and_gradient(x, idx, labels, &grad);
  double worst = 0;
  for (std::size_t k = 0; k < net.parameter_count(); ++k) {
    const double keep = net.parameters()[k];
    net.parameters()[k] = keep + 1e-6;
    const double up = net.loss_and_gradient(x, idx, labels, nullptr);
    net.parameters()[k] = keep - 1e-6;
    const double down = net.loss_and_gradient(x, idx, labels, nullptr);
    net.parameters()[k] = keep;
    const double fd = (up - down) / 2e-6;
    worst = std::max(worst, std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-7}));
  }
  return worst;
}

synthetic::Blobs two_blobs(std::uint64_t seed) {
  return synthetic::make_blobs({{0, 0, 0}, {4, 4, 0}}, 150, 0.7, seed);
}

}  // namespace

TEST_CASE("analytic gradients match finite differences") {
  CHECK(gradient_error(MlpNetwork(4, {6}, {{3, {}}}), 1, false) < 1e-4);
  CHECK(gradient_error(MlpNetwork(3, {5, 4, 3}, {{2, {}}}), 2, false) < 1e-4);
  CHECK(gradient_error(MlpNetwork(4, {6}, {{3, {1}}, {4, {0}}}), 3, false) < 1e-4);
  CHECK(gradient_error(MlpNetwork(4, {6}, {{3, {1}}, {4, {0}}, {2, {0, 1}}}), 4, true) < 1e-4);
}

TEST_CASE("separable blobs are learned") {
  const auto train = two_blobs(1), test = two_blobs(2);
  MlpParams p;
  p.seed = 3;
  p.epochs = 50;
  const auto m = MlpModel::train(train.x, train.y, 2, p);
  std::vector<int> pred;
  for (std::size_t i = 0; i < test.x.rows(); ++i) pred.push_back(m.predict(test.x.row(i)));
  CHECK(accuracy(test.y, pred) >= 0.95);
  CHECK(m.network().curve().train_loss.size() == 50);
  CHECK(m.network().curve().validation_accuracy.size() == 2);  // epochs 25 and 50
}

TEST_CASE("training loss does not increase over the first epochs") {
  const auto train = two_blobs(4);
  MlpParams p;
  p.seed = 5;
  p.epochs = 5;
  const auto m = MlpModel::train(train.x, train.y, 2, p);
  const auto& loss = m.network().curve().train_loss;
  for (std::size_t e = 1; e < loss.size(); ++e) CHECK(loss[e] <= loss[e - 1]);
}

TEST_CASE("zero epochs is chance level") {
  const auto d = synthetic::make_blobs({{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 200, 1.0, 6);
  MlpParams p;
  p.seed = 7;
  p.epochs = 0;
  const auto m = MlpModel::train(d.x, d.y, 4, p);
  std::vector<int> pred;
  for (std::size_t i = 0; i < d.x.rows(); ++i) pred.push_back(m.predict(d.x.row(i)));
  CHECK(std::abs(accuracy(d.y, pred) - 0.25) <= 0.10);
}

TEST_CASE("mlp determinism, serialisation and errors") {
  const auto d = two_blobs(8);
  MlpParams p;
  p.seed = 9;
  p.epochs = 3;
  const auto a = MlpModel::train(d.x, d.y, 2, p);
  const auto b = MlpModel::train(d.x, d.y, 2, p);
  CHECK(a.to_json() == b.to_json());
  const auto back = MlpModel::from_json(a.to_json());
  for (std::size_t i = 0; i < 20; ++i) CHECK(back.predict_proba(d.x.row(i)) == a.predict_proba(d.x.row(i)));

  CHECK_THROWS_AS(MlpModel::train(d.x, d.y, 1, p), DataError);
  p.hidden = {4, 4, 4, 4};
  CHECK_THROWS_AS(MlpModel::train(d.x, d.y, 2, p), DataError);
  p.hidden = {4};
  auto bad = d.x;
  for (std::size_t i = 0; i < bad.rows(); ++i) bad(i, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(MlpModel::train(bad, d.y, 2, p), TrainingError);
  CHECK_THROWS_AS(MlpNetwork(2, {3}, {{2, {0}}}), DataError);
}

TEST_CASE("initialisation") {
  MlpNetwork net(10, {20}, {{3, {1}}, {2, {}}});
  net.initialize(1);
  const double bound = std::sqrt(6.0 / 10.0);
  for (double v : net.parameters()) CHECK(std::abs(v) <= bound);
  auto other = net;
  other.initialize(1);
  CHECK(other.parameters() == net.parameters());
}

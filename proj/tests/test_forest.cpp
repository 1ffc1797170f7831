#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "signphon/learn/forest.hpp"

using namespace signphon;
using namespace signphon::learn;

namespace {

struct Data {
  Matrix x;
  std::vector<int> y;
};

Data sign_data(std::size_t n, std::size_t f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Data d{Matrix(n, f), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) d.x(i, j) = u(rng);
    d.y.push_back(d.x(i, 0) > 0 ? 1 : 0);
  }
  return d;
}

}  // namespace

TEST_CASE("importances form a probability vector led by the informative feature") {
  const auto d = sign_data(1000, 10, 1);
  ForestParams p;
  p.seed = 2;
  const auto f = ForestModel::train(d.x, d.y, 2, p);
  const auto& imp = f.importances();
  CHECK(std::abs(std::accumulate(imp.begin(), imp.end(), 0.0) - 1.0) < 1e-9);
  for (double v : imp) CHECK(v >= 0);
  CHECK(std::max_element(imp.begin(), imp.end()) == imp.begin());
  CHECK(f.trees().size() == 30);
  for (const auto& t : f.trees()) {
    CHECK(t.depth() <= 20);
    CHECK(t.leaf_count() <= 800);
  }
  const auto test = sign_data(300, 10, 3);
  std::vector<int> pred;
  for (std::size_t i = 0; i < test.x.rows(); ++i) pred.push_back(f.predict(test.x.row(i)));
  CHECK(accuracy(test.y, pred) > 0.9);
}

TEST_CASE("permuting columns permutes importances") {
  const auto d = sign_data(400, 5, 4);
  ForestParams p;
  p.seed = 5;
  p.max_features_fraction = 1.0;  // all features at every split, so the column order cannot matter
  p.min_samples_leaf = 5;
  p.min_samples_split = 10;
  const auto a = ForestModel::train(d.x, d.y, 2, p);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  const auto b = ForestModel::train(d.x.permute_columns(perm), d.y, 2, p);
  for (std::size_t j = 0; j < perm.size(); ++j)
    CHECK(b.importances()[j] == Catch::Approx(a.importances()[perm[j]]).margin(1e-12));
}

TEST_CASE("single-class data gives a constant classifier") {
  const auto d = sign_data(100, 3, 6);
  const std::vector<int> y(100, 1);
  ForestParams p;
  const auto f = ForestModel::train(d.x, y, 3, p);
  for (double v : f.importances()) CHECK(v == 0.0);
  CHECK(f.predict(d.x.row(0)) == 1);
}

TEST_CASE("training is deterministic and serialisable") {
  const auto d = sign_data(300, 6, 7);
  ForestParams p;
  p.seed = 8;
  const auto a = ForestModel::train(d.x, d.y, 2, p);
  const auto b = ForestModel::train(d.x, d.y, 2, p);
  CHECK(a.to_json() == b.to_json());
  const auto back = ForestModel::from_json(a.to_json());
  for (std::size_t i = 0; i < 50; ++i) CHECK(back.predict_proba(d.x.row(i)) == a.predict_proba(d.x.row(i)));
  p.min_samples_split = 0;
  CHECK_THROWS_AS(ForestModel::train(d.x, d.y, 2, p), DataError);
}

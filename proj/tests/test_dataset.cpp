#include <catch_amalgamated.hpp>

#include <set>

#include "signphon/feature_csv.hpp"
#include "signphon/learn/dataset.hpp"

using namespace signphon;
using namespace signphon::learn;

TEST_CASE("matrix helpers") {
  const auto m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  CHECK(m.rows() == 3);
  CHECK(m(2, 1) == 6);
  const std::vector<std::size_t> idx = {2, 0};
  CHECK(m.select_rows(idx) == Matrix::from_rows({{5, 6}, {1, 2}}));
  CHECK(m.hconcat(Matrix::from_rows({{7}, {8}, {9}})) == Matrix::from_rows({{1, 2, 7}, {3, 4, 8}, {5, 6, 9}}));
  const std::vector<std::size_t> perm = {1, 0};
  CHECK(m.permute_columns(perm) == Matrix::from_rows({{2, 1}, {4, 3}, {6, 5}}));
  CHECK_THROWS(Matrix::from_rows({{1, 2}, {3}}));
}

TEST_CASE("task labels") {
  const std::vector<std::string> tokens = {"b", "a", "b", "c"};
  const auto free = TaskLabels::from_tokens(tokens);
  CHECK(free.classes == std::vector<std::string>{"b", "a", "c"});
  CHECK(free.y == std::vector<int>{0, 1, 0, 2});
  const auto fixed = TaskLabels::from_tokens(tokens, {"a", "b", "c", "d"});
  CHECK(fixed.y == std::vector<int>{1, 0, 1, 2});
  CHECK(fixed.num_classes() == 4);
  CHECK_THROWS_AS(TaskLabels::from_tokens(tokens, {"a", "b"}), DataError);
  for (auto t : kAllTasks) CHECK(parse_task(task_name(t)) == t);
}

TEST_CASE("split sizes use largest remainders") {
  CHECK(split_sizes(200, {}) == std::array<std::size_t, 3>{134, 33, 33});
  CHECK(split_sizes(3, {1.0 / 3, 1.0 / 3, 1.0 / 3}) == std::array<std::size_t, 3>{1, 1, 1});
  CHECK_THROWS_AS(split_sizes(10, {0.5, 0.5, 0.5}), DataError);
  for (std::size_t n = 3; n < 300; n += 7) {
    const auto s = split_sizes(n, {});
    CHECK(s[0] + s[1] + s[2] == n);
  }
}

TEST_CASE("split is a deterministic disjoint cover") {
  SplitSpec spec;
  spec.seed = 42;
  const auto a = split(200, spec);
  const auto b = split(200, spec);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 200);
  CHECK(*all.rbegin() == 199);
  spec.seed = 43;
  CHECK(split(200, spec).train != a.train);
}

TEST_CASE("k-fold") {
  const auto parts = kfold_partition(10, 5, 1);
  std::multiset<std::size_t> seen;
  for (const auto& p : parts) {
    CHECK(p.size() == 2);
    seen.insert(p.begin(), p.end());
  }
  CHECK(seen.size() == 10);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 10);
  CHECK_THROWS_AS(kfold_partition(10, 1, 1), DataError);
  CHECK_THROWS_AS(kfold_partition(3, 5, 1), DataError);

  const auto perfect = kfold(50, 5, 3, [](auto, auto) { return 1.0; });
  CHECK(perfect.mean == 1.0);
  CHECK(perfect.std == 0.0);

  // Majority-class predictor on balanced binary labels: the oracle counts each fold directly.
  std::vector<int> y(100);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  std::vector<double> oracle;
  const auto r = kfold(100, 5, 7, [&](std::span<const std::size_t> train, std::span<const std::size_t> val) {
    std::size_t ones = 0;
    for (auto i : train) ones += static_cast<std::size_t>(y[i]);
    const int majority = 2 * ones > train.size() ? 1 : 0;
    std::size_t ok = 0;
    for (auto i : val) ok += y[i] == majority;
    oracle.push_back(static_cast<double>(ok) / static_cast<double>(val.size()));
    return oracle.back();
  });
  CHECK(r.fold_accuracy == oracle);
  CHECK(std::abs(r.mean - 0.5) < 0.1);
}

TEST_CASE("accuracy, argmax, standardizer") {
  const std::vector<int> t = {0, 1, 2, 2}, p = {0, 1, 1, 2};
  CHECK(accuracy(t, p) == 0.75);
  const std::vector<double> v = {0.1, 0.7, 0.7};
  CHECK(argmax(v) == 1);
  const auto x = Matrix::from_rows({{1, 5}, {3, 5}});
  const auto s = Standardizer::fit(x);
  std::vector<double> out(2);
  s.apply(x.row(0), out);
  CHECK(out[0] == Catch::Approx(-1));
  CHECK(out[1] == 0);
}

TEST_CASE("feature csv round trip") {
  FeatureTable t;
  t.feature_names = {"a", "b"};
  t.rows = {{0.1, 1e-300}, {-2.5, 3}};
  t.labels[Task::handshape] = {"s-hand", "-"};
  t.labels[Task::orientation] = {"n", "e"};
  const auto text = write_feature_csv(t);
  CHECK(text.rfind("a,b,handshape,orientation\n0.1,1e-300,s-hand,n\n", 0) == 0);
  const auto back = read_feature_csv(text);
  CHECK(back.rows == t.rows);
  CHECK(back.labels == t.labels);

  const std::vector<Task> tasks = {Task::handshape};
  const auto d = to_dataset(back, tasks);
  CHECK(d.size() == 1);
  CHECK(d.labels.at(Task::handshape).classes == std::vector<std::string>{"s-hand"});

  const auto legacy = read_feature_csv("x,label\n1,pege-hand\n");
  CHECK(legacy.labels.at(Task::handshape) == std::vector<std::string>{"pege-hand"});
  CHECK_THROWS_AS(read_feature_csv("x,label\n1\n"), ParseError);
  CHECK_THROWS_AS(read_feature_csv("x,label\nabc,s\n"), ParseError);
  CHECK_THROWS_AS(to_dataset(legacy, std::vector<Task>{Task::location}), DataError);
}

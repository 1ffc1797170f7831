#include <catch_amalgamated.hpp>

#include <random>

#include "signphon/learn/metrics.hpp"

using namespace signphon;
using namespace signphon::learn;

TEST_CASE("perfect predictions") {
  const std::vector<int> y = {0, 1, 2, 2, 1};
  const auto m = confusion_matrix(y, y, {"a", "b", "c"});
  CHECK(m.accuracy() == 1.0);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(m.precision(c) == 1.0);
    CHECK(m.recall(c) == 1.0);
    for (std::size_t k = 0; k < 3; ++k)
      if (k != c) CHECK(m.counts[c][k] == 0);
  }
}

TEST_CASE("single predicted class fills one column") {
  const std::vector<int> t = {0, 1, 2, 0}, p = {1, 1, 1, 1};
  const auto m = confusion_matrix(t, p, {"a", "b", "c"});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m.counts[i][0] == 0);
    CHECK(m.counts[i][2] == 0);
  }
  CHECK(m.precision(0) == 0.0);  // 0/0
  CHECK(m.recall(1) == 1.0);
  CHECK(m.precision(1) == 0.25);
}

TEST_CASE("random case matches direct counting") {
  std::mt19937_64 rng(1);
  std::vector<int> t, p;
  for (int i = 0; i < 300; ++i) {
    t.push_back(static_cast<int>(rng() % 3));
    p.push_back(static_cast<int>(rng() % 3));
  }
  const auto m = confusion_matrix(t, p, {"a", "b", "c"});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::size_t n = 0;
      for (std::size_t k = 0; k < t.size(); ++k) n += t[k] == i && p[k] == j;
      CHECK(m.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == n);
    }
  CHECK(m.total() == 300);
}

TEST_CASE("token input and errors") {
  const std::vector<std::string> t = {"n", "e"}, p = {"n", "n"};
  const auto m = confusion_matrix(t, p, {"n", "e"});
  CHECK(m.counts[1][0] == 1);
  const std::vector<std::string> bad = {"n", "up"};
  CHECK_THROWS_AS(confusion_matrix(t, bad, {"n", "e"}), DataError);
  const std::vector<int> a = {0, 1}, b = {0};
  CHECK_THROWS_AS(confusion_matrix(a, b, {"x", "y"}), DataError);
  const std::vector<int> out_of_range = {0, 5};
  CHECK_THROWS_AS(confusion_matrix(a, out_of_range, {"x", "y"}), DataError);

  CHECK(confusion_csv(m) == "truth\\predicted,n,e\nn,1,0\ne,1,0\n");
  CHECK(precision_recall_csv(m) == "class,support,precision,recall\nn,1,0.500000,1.000000\ne,1,0.000000,0.000000\n");
}

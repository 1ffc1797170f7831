#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signphon/error.hpp"
#include "signphon/learn/dataset.hpp"

namespace signphon::learn {

struct KnnParams {
  std::size_t k = 5;
};

// Brute-force k-nearest-neighbour vote under the Euclidean distance.
//
// Ties: neighbours at equal distance are taken in training order; classes
// with equal votes are ranked by the smaller summed distance of their voters,
// then by the lexicographically smaller class name.
class KnnModel {
 public:
  KnnModel() = default;

  static KnnModel train(const Matrix& x, std::span<const int> y, std::vector<std::string> class_names,
                        const KnnParams& params = {}) {
    if (params.k < 1) throw DataError("knn: k must be at least 1");
    if (x.rows() == 0) throw DataError("knn: empty training set");
    if (params.k > x.rows()) throw DataError("knn: k exceeds the number of training samples");
    if (y.size() != x.rows()) throw DataError("knn: label count mismatch");
    KnnModel m;
    m.params_ = params;
    m.x_ = x;
    m.y_.assign(y.begin(), y.end());
    m.classes_ = std::move(class_names);
    for (int v : m.y_)
      if (v < 0 || static_cast<std::size_t>(v) >= m.classes_.size()) throw DataError("knn: label out of range");
    return m;
  }

  std::size_t num_classes() const { return classes_.size(); }
  std::size_t num_features() const { return x_.cols(); }
  const KnnParams& params() const { return params_; }

  struct Vote {
    std::vector<std::size_t> votes;
    std::vector<double> summed_distance;
  };

  Vote vote(std::span<const double> q) const {
    if (q.size() != x_.cols()) throw DataError("knn: query has wrong feature count");
    std::vector<std::pair<double, std::size_t>> d(x_.rows());
    for (std::size_t i = 0; i < x_.rows(); ++i) {
      double s = 0.0;
      const auto r = x_.row(i);
      for (std::size_t j = 0; j < q.size(); ++j) s += (r[j] - q[j]) * (r[j] - q[j]);
      d[i] = {s, i};
    }
    const auto k = static_cast<std::ptrdiff_t>(params_.k);
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    Vote v{std::vector<std::size_t>(classes_.size(), 0), std::vector<double>(classes_.size(), 0.0)};
    for (std::ptrdiff_t i = 0; i < k; ++i) {
      const auto c = static_cast<std::size_t>(y_[d[static_cast<std::size_t>(i)].second]);
      ++v.votes[c];
      v.summed_distance[c] += std::sqrt(d[static_cast<std::size_t>(i)].first);
    }
    return v;
  }

  int predict(std::span<const double> q) const {
    const auto v = vote(q);
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes_.size(); ++c) {
      if (v.votes[c] != v.votes[best]) {
        if (v.votes[c] > v.votes[best]) best = c;
        continue;
      }
      if (v.votes[c] == 0) continue;
      if (v.summed_distance[c] != v.summed_distance[best]) {
        if (v.summed_distance[c] < v.summed_distance[best]) best = c;
        continue;
      }
      if (classes_[c] < classes_[best]) best = c;
    }
    return static_cast<int>(best);
  }

  // Vote fractions.
  std::vector<double> predict_proba(std::span<const double> q) const {
    const auto v = vote(q);
    std::vector<double> p(classes_.size());
    for (std::size_t c = 0; c < p.size(); ++c) p[c] = static_cast<double>(v.votes[c]) / static_cast<double>(params_.k);
    return p;
  }

  nlohmann::json to_json() const {
    return {{"k", params_.k},
            {"classes", classes_},
            {"rows", x_.rows()},
            {"cols", x_.cols()},
            {"x", x_.data()},
            {"y", y_}};
  }

  static KnnModel from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    const auto data = j.at("x").get<std::vector<double>>();
    if (data.size() != rows * cols) throw FormatError("knn model: data size mismatch");
    Matrix x(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t c = 0; c < cols; ++c) x(i, c) = data[i * cols + c];
    const auto y = j.at("y").get<std::vector<int>>();
    return train(x, y, j.at("classes").get<std::vector<std::string>>(), {j.at("k").get<std::size_t>()});
  }

 private:
  KnnParams params_;
  Matrix x_;
  std::vector<int> y_;
  std::vector<std::string> classes_;
};

}  // namespace signphon::learn

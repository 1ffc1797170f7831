#pragma once

// Random forest of CART trees (Gini criterion) grown best-first on bootstrap
// samples, with a random feature subset evaluated at every split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "signphon/error.hpp"
#include "signphon/learn/dataset.hpp"

namespace signphon::learn {

struct ForestParams {
  std::size_t n_estimators = 30;
  std::size_t max_depth = 20;
  std::size_t max_leaf_nodes = 800;
  std::size_t min_samples_leaf = 50;
  std::size_t min_samples_split = 50;
  double max_features_fraction = 0.1;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  std::size_t features_per_split(std::size_t f) const {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(max_features_fraction * static_cast<double>(f))),
                                   1, f);
  }
  void validate() const {
    if (n_estimators == 0 || max_depth == 0 || max_leaf_nodes < 2 || min_samples_leaf == 0 || min_samples_split < 2 ||
        !(max_features_fraction > 0.0 && max_features_fraction <= 1.0))
      throw DataError("forest: invalid hyperparameters");
  }
};

class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> distribution;  // class fractions of the training samples in the node
  };

  // `importance` receives the weighted impurity decrease of every split.
  static DecisionTree grow(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                           std::vector<std::size_t> samples, const ForestParams& p, std::mt19937_64& rng,
                           std::vector<double>& importance) {
    DecisionTree t;
    Grower g{x, y, num_classes, p, rng, t, importance};
    g.run(std::move(samples));
    return t;
  }

  int predict(std::span<const double> q) const {
    const Node* n = &nodes_.front();
    while (n->feature >= 0) n = &nodes_[static_cast<std::size_t>(q[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
    return static_cast<int>(argmax(n->distribution));
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
  }
  std::size_t depth() const { return depth_from(0); }
  const std::vector<Node>& nodes() const { return nodes_; }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& n : nodes_)
      arr.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"d", n.distribution}});
    return arr;
  }
  static DecisionTree from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& n : j)
      t.nodes_.push_back({n.at("f").get<int>(), n.at("t").get<double>(), n.at("l").get<int>(), n.at("r").get<int>(),
                          n.at("d").get<std::vector<double>>()});
    if (t.nodes_.empty()) throw FormatError("tree without nodes");
    return t;
  }

 private:
  std::size_t depth_from(std::size_t i) const {
    const auto& n = nodes_[i];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
  }

  struct Split {
    bool valid = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;  // n * (gini(parent) - weighted gini(children))
  };

  struct Pending {
    std::size_t node;
    std::size_t depth;
    std::vector<std::size_t> samples;
    Split split;
  };

  struct Grower {
    const Matrix& x;
    std::span<const int> y;
    std::size_t num_classes;
    const ForestParams& p;
    std::mt19937_64& rng;
    DecisionTree& tree;
    std::vector<double>& importance;

    static double gini(std::span<const std::size_t> counts, std::size_t n) {
      if (n == 0) return 0.0;
      double s = 0.0;
      for (auto c : counts) {
        const double f = static_cast<double>(c) / static_cast<double>(n);
        s += f * f;
      }
      return 1.0 - s;
    }

    std::vector<std::size_t> class_counts(std::span<const std::size_t> samples) const {
      std::vector<std::size_t> c(num_classes, 0);
      for (auto i : samples) ++c[static_cast<std::size_t>(y[i])];
      return c;
    }

    std::size_t make_node(std::span<const std::size_t> samples) {
      Node n;
      const auto c = class_counts(samples);
      n.distribution.resize(num_classes);
      for (std::size_t k = 0; k < num_classes; ++k)
        n.distribution[k] = static_cast<double>(c[k]) / static_cast<double>(samples.size());
      tree.nodes_.push_back(std::move(n));
      return tree.nodes_.size() - 1;
    }

    Split best_split(std::span<const std::size_t> samples, std::size_t depth) {
      Split best;
      const std::size_t n = samples.size();
      if (n < p.min_samples_split || depth >= p.max_depth || n < 2 * p.min_samples_leaf) return best;
      const auto counts = class_counts(samples);
      const double parent = gini(counts, n);
      if (parent == 0.0) return best;

      std::vector<std::size_t> features(x.cols());
      std::iota(features.begin(), features.end(), std::size_t{0});
      std::shuffle(features.begin(), features.end(), rng);
      const std::size_t wanted = p.features_per_split(x.cols());

      std::vector<std::pair<double, int>> col(n);
      std::vector<std::size_t> left(num_classes), right(num_classes);
      double best_child = parent;
      std::size_t evaluated = 0;
      for (auto f : features) {
        if (evaluated == wanted) break;
        for (std::size_t i = 0; i < n; ++i) col[i] = {x(samples[i], f), y[samples[i]]};
        std::sort(col.begin(), col.end());
        if (col.front().first == col.back().first) continue;  // constant in this node; does not count
        ++evaluated;
        std::fill(left.begin(), left.end(), 0);
        right = counts;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const auto c = static_cast<std::size_t>(col[i].second);
          ++left[c];
          --right[c];
          if (col[i].first == col[i + 1].first) continue;
          const std::size_t nl = i + 1, nr = n - nl;
          if (nl < p.min_samples_leaf || nr < p.min_samples_leaf) continue;
          const double child = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                               static_cast<double>(n);
          if (child < best_child) {
            best_child = child;
            best.valid = true;
            best.feature = f;
            double thr = 0.5 * (col[i].first + col[i + 1].first);
            if (thr >= col[i + 1].first) thr = col[i].first;
            best.threshold = thr;
          }
        }
      }
      if (best.valid) best.gain = static_cast<double>(n) * (parent - best_child);
      return best;
    }

    void run(std::vector<std::size_t> samples) {
      const double total = static_cast<double>(samples.size());
      auto cmp = [](const Pending& a, const Pending& b) {
        if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
        return a.node > b.node;  // earlier nodes first on equal gain
      };
      std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> open(cmp);
      const auto root = make_node(samples);
      auto split = best_split(samples, 0);
      if (split.valid) open.push({root, 0, std::move(samples), split});
      std::size_t leaves = 1;
      while (!open.empty() && leaves < p.max_leaf_nodes) {
        Pending cur = open.top();
        open.pop();
        std::vector<std::size_t> ls, rs;
        for (auto i : cur.samples) (x(i, cur.split.feature) <= cur.split.threshold ? ls : rs).push_back(i);
        const auto l = make_node(ls);
        const auto r = make_node(rs);
        auto& node = tree.nodes_[cur.node];
        node.feature = static_cast<int>(cur.split.feature);
        node.threshold = cur.split.threshold;
        node.left = static_cast<int>(l);
        node.right = static_cast<int>(r);
        importance[cur.split.feature] += cur.split.gain / total;
        ++leaves;
        auto lsplit = best_split(ls, cur.depth + 1);
        auto rsplit = best_split(rs, cur.depth + 1);
        if (lsplit.valid) open.push({l, cur.depth + 1, std::move(ls), lsplit});
        if (rsplit.valid) open.push({r, cur.depth + 1, std::move(rs), rsplit});
      }
    }
  };

  std::vector<Node> nodes_;
};

class ForestModel {
 public:
  ForestModel() = default;

  static ForestModel train(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                           const ForestParams& params = {}) {
    params.validate();
    if (x.rows() == 0 || x.cols() == 0) throw DataError("forest: empty training set");
    if (y.size() != x.rows()) throw DataError("forest: label count mismatch");
    for (int v : y)
      if (v < 0 || static_cast<std::size_t>(v) >= num_classes) throw DataError("forest: label out of range");

    ForestModel m;
    m.params_ = params;
    m.num_classes_ = num_classes;
    m.num_features_ = x.cols();
    m.trees_.resize(params.n_estimators);
    std::vector<std::vector<double>> per_tree(params.n_estimators, std::vector<double>(x.cols(), 0.0));

    auto grow_one = [&](std::size_t t) {
      std::seed_seq seq{static_cast<std::uint64_t>(params.seed), static_cast<std::uint64_t>(t)};
      std::mt19937_64 rng(seq);
      std::vector<std::size_t> samples(x.rows());
      if (params.bootstrap) {
        std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
        for (auto& s : samples) s = pick(rng);
      } else {
        std::iota(samples.begin(), samples.end(), std::size_t{0});
      }
      m.trees_[t] = DecisionTree::grow(x, y, num_classes, std::move(samples), params, rng, per_tree[t]);
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), params.n_estimators));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < params.n_estimators; t += workers) grow_one(t);
      });
    for (auto& th : pool) th.join();

    // Mean decrease in impurity: normalise per tree, average, normalise again.
    m.importances_.assign(x.cols(), 0.0);
    for (const auto& imp : per_tree) {
      const double s = std::accumulate(imp.begin(), imp.end(), 0.0);
      if (s <= 0.0) continue;
      for (std::size_t f = 0; f < imp.size(); ++f) m.importances_[f] += imp[f] / s;
    }
    const double s = std::accumulate(m.importances_.begin(), m.importances_.end(), 0.0);
    if (s > 0.0)
      for (auto& v : m.importances_) v /= s;
    return m;
  }

  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_features() const { return num_features_; }
  const ForestParams& params() const { return params_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Sums to 1 unless no tree made a split, in which case all are zero.
  const std::vector<double>& importances() const { return importances_; }

  // Fraction of trees voting for each class.
  std::vector<double> predict_proba(std::span<const double> q) const {
    if (q.size() != num_features_) throw DataError("forest: query has wrong feature count");
    std::vector<double> p(num_classes_, 0.0);
    for (const auto& t : trees_) p[static_cast<std::size_t>(t.predict(q))] += 1.0;
    for (auto& v : p) v /= static_cast<double>(trees_.size());
    return p;
  }

  // Majority vote; ties go to the lower class index.
  int predict(std::span<const double> q) const { return static_cast<int>(argmax(predict_proba(q))); }

  nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"n_estimators", params_.n_estimators},
            {"max_depth", params_.max_depth},
            {"max_leaf_nodes", params_.max_leaf_nodes},
            {"min_samples_leaf", params_.min_samples_leaf},
            {"min_samples_split", params_.min_samples_split},
            {"max_features_fraction", params_.max_features_fraction},
            {"bootstrap", params_.bootstrap},
            {"seed", params_.seed},
            {"num_classes", num_classes_},
            {"num_features", num_features_},
            {"importances", importances_},
            {"trees", trees}};
  }

  static ForestModel from_json(const nlohmann::json& j) {
    ForestModel m;
    m.params_.n_estimators = j.at("n_estimators").get<std::size_t>();
    m.params_.max_depth = j.at("max_depth").get<std::size_t>();
    m.params_.max_leaf_nodes = j.at("max_leaf_nodes").get<std::size_t>();
    m.params_.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    m.params_.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    m.params_.max_features_fraction = j.at("max_features_fraction").get<double>();
    m.params_.bootstrap = j.at("bootstrap").get<bool>();
    m.params_.seed = j.at("seed").get<std::uint64_t>();
    m.num_classes_ = j.at("num_classes").get<std::size_t>();
    m.num_features_ = j.at("num_features").get<std::size_t>();
    m.importances_ = j.at("importances").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) m.trees_.push_back(DecisionTree::from_json(t));
    return m;
  }

 private:
  ForestParams params_;
  std::size_t num_classes_ = 0;
  std::size_t num_features_ = 0;
  std::vector<DecisionTree> trees_;
  std::vector<double> importances_;
};

}  // namespace signphon::learn

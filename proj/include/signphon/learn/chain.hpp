#pragma once

// Multi-task classification with optional coupling between tasks.
//
// separate: every task first gets an uncoupled base classifier. A task with
//   incoming coupling edges then gets a second classifier trained on its own
//   features plus the class probabilities of each source's base classifier.
//   Because targets only read base (uncoupled) sources, 2-cycles such as
//   location <-> orientation need no special ordering. During training the
//   source probabilities are out-of-fold so that the target does not learn
//   to trust in-sample (over-confident) source outputs.
// joint: one multi-head network over the concatenated task inputs; per-task
//   losses are summed and coupled heads read the source head's softmax.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "signphon/error.hpp"
#include "signphon/learn/dataset.hpp"
#include "signphon/learn/forest.hpp"
#include "signphon/learn/knn.hpp"
#include "signphon/learn/mlp.hpp"

namespace signphon::learn {

inline constexpr int kModelFormatVersion = 1;

enum class ClassifierKind : std::uint8_t { knn, forest, mlp };
enum class ChainMode : std::uint8_t { separate, joint };

inline std::string_view classifier_name(ClassifierKind k) {
  constexpr std::array<std::string_view, 3> names = {"knn", "forest", "mlp"};
  return names[static_cast<std::size_t>(k)];
}
inline ClassifierKind parse_classifier(std::string_view s) {
  for (auto k : {ClassifierKind::knn, ClassifierKind::forest, ClassifierKind::mlp})
    if (classifier_name(k) == s) return k;
  throw ParseError("unknown classifier '" + std::string(s) + "'");
}
inline std::string_view mode_name(ChainMode m) { return m == ChainMode::separate ? "separate" : "joint"; }
inline ChainMode parse_mode(std::string_view s) {
  if (s == "separate") return ChainMode::separate;
  if (s == "joint") return ChainMode::joint;
  throw ParseError("unknown chain mode '" + std::string(s) + "'");
}

// Independent 64-bit seed for stream `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline std::uint64_t task_seed(std::uint64_t seed, Task t) { return derive_seed(seed, static_cast<std::uint64_t>(t) + 1); }

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::knn;
  KnnParams knn;
  ForestParams forest;
  MlpParams mlp;
};

// One trained single-task classifier of any kind.
class Classifier {
 public:
  Classifier() = default;

  static Classifier train(const ClassifierConfig& cfg, const Matrix& x, std::span<const int> y,
                          const std::vector<std::string>& classes, std::uint64_t seed) {
    Classifier c;
    switch (cfg.kind) {
      case ClassifierKind::knn:
        c.model_ = KnnModel::train(x, y, classes, cfg.knn);
        break;
      case ClassifierKind::forest: {
        auto p = cfg.forest;
        p.seed = seed;
        c.model_ = ForestModel::train(x, y, classes.size(), p);
        break;
      }
      case ClassifierKind::mlp: {
        auto p = cfg.mlp;
        p.seed = seed;
        c.model_ = MlpModel::train(x, y, classes.size(), p);
        break;
      }
    }
    return c;
  }

  ClassifierKind kind() const { return static_cast<ClassifierKind>(model_.index()); }
  template <class M>
  const M& as() const {
    return std::get<M>(model_);
  }

  std::vector<double> predict_proba(std::span<const double> q) const {
    return std::visit([&](const auto& m) { return m.predict_proba(q); }, model_);
  }
  int predict(std::span<const double> q) const {
    return std::visit([&](const auto& m) { return m.predict(q); }, model_);
  }
  std::size_t num_features() const {
    return std::visit([](const auto& m) { return m.num_features(); }, model_);
  }

  nlohmann::json to_json() const {
    return {{"kind", classifier_name(kind())}, {"model", std::visit([](const auto& m) { return m.to_json(); }, model_)}};
  }
  static Classifier from_json(const nlohmann::json& j) {
    Classifier c;
    const auto& m = j.at("model");
    switch (parse_classifier(j.at("kind").get<std::string>())) {
      case ClassifierKind::knn: c.model_ = KnnModel::from_json(m); break;
      case ClassifierKind::forest: c.model_ = ForestModel::from_json(m); break;
      case ClassifierKind::mlp: c.model_ = MlpModel::from_json(m); break;
    }
    return c;
  }

 private:
  std::variant<KnnModel, ForestModel, MlpModel> model_;
};

struct CouplingEdge {
  Task source;
  Task target;
  friend auto operator<=>(const CouplingEdge&, const CouplingEdge&) = default;
};

// "location->orientation"
inline CouplingEdge parse_edge(std::string_view s) {
  const auto arrow = s.find("->");
  if (arrow == std::string_view::npos) throw ParseError("coupling edge '" + std::string(s) + "' lacks '->'");
  return {parse_task(s.substr(0, arrow)), parse_task(s.substr(arrow + 2))};
}
inline std::string edge_name(const CouplingEdge& e) {
  return std::string(task_name(e.source)) + "->" + std::string(task_name(e.target));
}

struct ChainConfig {
  std::vector<Task> tasks = {Task::handshape, Task::orientation, Task::location};
  std::vector<CouplingEdge> coupling;
  ChainMode mode = ChainMode::separate;
  ClassifierConfig classifier;
  std::size_t source_folds = 5;  // out-of-fold source probabilities; 0 uses in-sample predictions
  std::uint64_t seed = 0;
};

// Aligned samples: one feature block and one label vector per task.
struct ChainData {
  std::map<Task, Matrix> features;
  std::map<Task, TaskLabels> labels;

  // Every task reads the same feature matrix.
  static ChainData shared(const LabeledDataset& d) {
    ChainData c;
    for (const auto& [t, l] : d.labels) {
      c.features[t] = d.features;
      c.labels[t] = l;
    }
    return c;
  }

  std::size_t size() const { return features.empty() ? 0 : features.begin()->second.rows(); }

  void validate(std::span<const Task> tasks) const {
    std::optional<std::size_t> n;
    for (auto t : tasks) {
      const auto f = features.find(t);
      const auto l = labels.find(t);
      if (f == features.end() || l == labels.end())
        throw DataError("chain: no data for task " + std::string(task_name(t)));
      if (!n) n = f->second.rows();
      if (f->second.rows() != *n || l->second.y.size() != *n) throw DataError("chain: tasks are not aligned");
    }
    if (!n || *n == 0) throw DataError("chain: empty dataset");
  }

  ChainData subset(std::span<const std::size_t> idx) const {
    ChainData c;
    for (const auto& [t, m] : features) c.features[t] = m.select_rows(idx);
    for (const auto& [t, l] : labels) c.labels[t] = {l.classes, l.subset(idx)};
    return c;
  }
};

// Handshape first, then the remaining tasks in the order given.
inline std::vector<Task> training_order(std::vector<Task> tasks) {
  std::stable_partition(tasks.begin(), tasks.end(), [](Task t) { return t == Task::handshape; });
  return tasks;
}

class ChainModel {
 public:
  static ChainModel train(const ChainData& data, const ChainConfig& cfg) {
    ChainModel m;
    m.cfg_ = cfg;
    m.cfg_.tasks = training_order(cfg.tasks);
    std::set<Task> seen;
    for (auto t : m.cfg_.tasks)
      if (!seen.insert(t).second) throw DataError("chain: duplicate task " + std::string(task_name(t)));
    for (const auto& e : cfg.coupling) {
      if (!seen.contains(e.source) || !seen.contains(e.target))
        throw DataError("chain: coupling edge " + edge_name(e) + " names a task that is not trained");
      if (e.source == e.target) throw DataError("chain: self coupling " + edge_name(e));
    }
    data.validate(m.cfg_.tasks);
    for (auto t : m.cfg_.tasks) m.classes_[t] = data.labels.at(t).classes;

    if (cfg.mode == ChainMode::joint) {
      if (cfg.classifier.kind != ClassifierKind::mlp) throw DataError("chain: joint mode requires the mlp classifier");
      m.train_joint(data);
    } else {
      m.train_separate(data);
    }
    return m;
  }

  const ChainConfig& config() const { return cfg_; }
  const std::vector<std::string>& classes(Task t) const { return classes_.at(t); }

  std::vector<CouplingEdge> incoming(Task t) const {
    std::vector<CouplingEdge> in;
    for (const auto& e : cfg_.coupling)
      if (e.target == t) in.push_back(e);
    return in;
  }

  const Classifier& base(Task t) const { return base_.at(t); }
  const Classifier* coupled(Task t) const {
    auto it = coupled_.find(t);
    return it == coupled_.end() ? nullptr : &it->second;
  }

  // Number of input columns the final classifier of `t` reads.
  std::size_t input_width(Task t) const {
    if (cfg_.mode == ChainMode::joint) return joint_.input_dim();
    if (auto c = coupled(t)) return c->num_features();
    return base(t).num_features();
  }

  std::map<Task, std::vector<std::vector<double>>> predict_proba(const ChainData& data) const {
    data.validate(cfg_.tasks);
    std::map<Task, std::vector<std::vector<double>>> out;
    const std::size_t n = data.size();
    if (cfg_.mode == ChainMode::joint) {
      const Matrix x = joint_input(data);
      for (auto t : cfg_.tasks) out[t].resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto heads = joint_.predict_proba(x.row(i));
        for (std::size_t h = 0; h < cfg_.tasks.size(); ++h) out[cfg_.tasks[h]][i] = std::move(heads[h]);
      }
      return out;
    }
    std::map<Task, Matrix> base_probs;
    for (auto t : cfg_.tasks) base_probs[t] = proba_matrix(base_.at(t), data.features.at(t));
    for (auto t : cfg_.tasks) {
      auto& rows = out[t];
      rows.resize(n);
      if (auto c = coupled(t)) {
        const Matrix x = coupled_input(t, data.features.at(t), base_probs);
        for (std::size_t i = 0; i < n; ++i) rows[i] = c->predict_proba(x.row(i));
      } else {
        const auto& p = base_probs.at(t);
        for (std::size_t i = 0; i < n; ++i) rows[i].assign(p.row(i).begin(), p.row(i).end());
      }
    }
    return out;
  }

  std::map<Task, std::vector<int>> predict(const ChainData& data) const {
    std::map<Task, std::vector<int>> out;
    if (cfg_.mode == ChainMode::separate) {
      // Use each classifier's own decision rule (k-NN tie-breaking differs from argmax).
      std::map<Task, Matrix> base_probs;
      for (auto t : cfg_.tasks) base_probs[t] = proba_matrix(base_.at(t), data.features.at(t));
      data.validate(cfg_.tasks);
      for (auto t : cfg_.tasks) {
        auto& y = out[t];
        if (auto c = coupled(t)) {
          const Matrix x = coupled_input(t, data.features.at(t), base_probs);
          for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(c->predict(x.row(i)));
        } else {
          const auto& x = data.features.at(t);
          for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(base_.at(t).predict(x.row(i)));
        }
      }
      return out;
    }
    for (const auto& [t, rows] : predict_proba(data))
      for (const auto& p : rows) out[t].push_back(static_cast<int>(argmax(p)));
    return out;
  }

  std::map<Task, double> accuracy(const ChainData& data) const {
    std::map<Task, double> acc;
    for (const auto& [t, y] : predict(data)) acc[t] = learn::accuracy(data.labels.at(t).y, y);
    return acc;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "signphon-chain";
    j["format_version"] = kModelFormatVersion;
    j["mode"] = mode_name(cfg_.mode);
    j["classifier"] = classifier_name(cfg_.classifier.kind);
    j["seed"] = cfg_.seed;
    j["source_folds"] = cfg_.source_folds;
    std::vector<std::string> tasks, edges;
    for (auto t : cfg_.tasks) tasks.emplace_back(task_name(t));
    for (const auto& e : cfg_.coupling) edges.push_back(edge_name(e));
    j["tasks"] = tasks;
    j["coupling"] = edges;
    for (auto t : cfg_.tasks) j["classes"][std::string(task_name(t))] = classes_.at(t);
    if (cfg_.mode == ChainMode::joint) {
      j["joint"] = joint_.to_json();
      std::vector<std::string> blocks;
      for (auto t : joint_blocks_) blocks.emplace_back(task_name(t));
      j["joint_blocks"] = blocks;
    } else {
      for (const auto& [t, c] : base_) j["base"][std::string(task_name(t))] = c.to_json();
      for (const auto& [t, c] : coupled_) j["coupled"][std::string(task_name(t))] = c.to_json();
    }
    return j;
  }

  static ChainModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "signphon-chain") throw FormatError("model file: not a chain model");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw FormatError("model file: unsupported format version " + std::to_string(version));
    ChainModel m;
    m.cfg_.mode = parse_mode(j.at("mode").get<std::string>());
    m.cfg_.classifier.kind = parse_classifier(j.at("classifier").get<std::string>());
    m.cfg_.seed = j.at("seed").get<std::uint64_t>();
    m.cfg_.source_folds = j.at("source_folds").get<std::size_t>();
    m.cfg_.tasks.clear();
    for (const auto& t : j.at("tasks")) m.cfg_.tasks.push_back(parse_task(t.get<std::string>()));
    for (const auto& e : j.at("coupling")) m.cfg_.coupling.push_back(parse_edge(e.get<std::string>()));
    for (auto t : m.cfg_.tasks)
      m.classes_[t] = j.at("classes").at(std::string(task_name(t))).get<std::vector<std::string>>();
    if (m.cfg_.mode == ChainMode::joint) {
      m.joint_ = MlpNetwork::from_json(j.at("joint"));
      for (const auto& t : j.at("joint_blocks")) m.joint_blocks_.push_back(parse_task(t.get<std::string>()));
    } else {
      for (auto t : m.cfg_.tasks) m.base_[t] = Classifier::from_json(j.at("base").at(std::string(task_name(t))));
      if (j.contains("coupled"))
        for (const auto& [name, c] : j.at("coupled").items()) m.coupled_[parse_task(name)] = Classifier::from_json(c);
    }
    return m;
  }

 private:
  static Matrix proba_matrix(const Classifier& c, const Matrix& x) {
    Matrix p;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto row = c.predict_proba(x.row(i));
      if (i == 0) p = Matrix(x.rows(), row.size());
      std::copy(row.begin(), row.end(), p.row(i).begin());
    }
    return p;
  }

  // Own features followed by the source probabilities in coupling-edge order.
  Matrix coupled_input(Task t, const Matrix& own, const std::map<Task, Matrix>& source_probs) const {
    Matrix x = own;
    for (const auto& e : incoming(t)) x = x.hconcat(source_probs.at(e.source));
    return x;
  }

  void train_separate(const ChainData& data) {
    const auto& tasks = cfg_.tasks;
    std::set<Task> sources;
    for (const auto& e : cfg_.coupling) sources.insert(e.source);

    for (auto t : tasks)
      base_[t] = Classifier::train(cfg_.classifier, data.features.at(t), data.labels.at(t).y, classes_.at(t),
                                   task_seed(cfg_.seed, t));

    std::map<Task, Matrix> train_probs;
    for (auto s : sources) train_probs[s] = source_training_probs(data, s);
    for (auto t : tasks) {
      if (incoming(t).empty()) continue;
      const Matrix x = coupled_input(t, data.features.at(t), train_probs);
      coupled_[t] = Classifier::train(cfg_.classifier, x, data.labels.at(t).y, classes_.at(t),
                                      derive_seed(task_seed(cfg_.seed, t), 1));
    }
  }

  // Probabilities of the source's base classifier on its own training rows.
  Matrix source_training_probs(const ChainData& data, Task s) const {
    const Matrix& x = data.features.at(s);
    const auto& labels = data.labels.at(s);
    const std::size_t n = x.rows();
    const std::size_t folds = cfg_.source_folds;
    if (folds < 2 || n < 2 * folds) return proba_matrix(base_.at(s), x);
    Matrix out(n, labels.num_classes());
    const auto parts = kfold_partition(n, folds, derive_seed(task_seed(cfg_.seed, s), 2));
    auto fold_cfg = cfg_.classifier;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train;
      for (std::size_t g = 0; g < folds; ++g)
        if (g != f) train.insert(train.end(), parts[g].begin(), parts[g].end());
      if (fold_cfg.kind == ClassifierKind::knn) fold_cfg.knn.k = std::min(cfg_.classifier.knn.k, train.size());
      const auto c = Classifier::train(fold_cfg, x.select_rows(train), labels.subset(train), labels.classes,
                                       derive_seed(task_seed(cfg_.seed, s), 10 + f));
      for (auto i : parts[f]) {
        const auto p = c.predict_proba(x.row(i));
        std::copy(p.begin(), p.end(), out.row(i).begin());
      }
    }
    return out;
  }

  // Distinct task feature blocks, concatenated in task order.
  Matrix joint_input(const ChainData& data) const {
    Matrix x = data.features.at(joint_blocks_.front());
    for (std::size_t i = 1; i < joint_blocks_.size(); ++i) x = x.hconcat(data.features.at(joint_blocks_[i]));
    return x;
  }

  void train_joint(const ChainData& data) {
    joint_blocks_.clear();
    for (auto t : cfg_.tasks) {
      bool duplicate = false;
      for (auto b : joint_blocks_) duplicate = duplicate || data.features.at(b) == data.features.at(t);
      if (!duplicate) joint_blocks_.push_back(t);
    }
    const Matrix x = joint_input(data);
    std::vector<HeadSpec> heads;
    std::vector<std::vector<int>> labels;
    for (auto t : cfg_.tasks) {
      HeadSpec h{classes_.at(t).size(), {}};
      for (const auto& e : incoming(t))
        h.sources.push_back(static_cast<std::size_t>(std::find(cfg_.tasks.begin(), cfg_.tasks.end(), e.source) -
                                                     cfg_.tasks.begin()));
      heads.push_back(std::move(h));
      labels.push_back(data.labels.at(t).y);
    }
    auto p = cfg_.classifier.mlp;
    p.seed = cfg_.seed;
    joint_ = MlpNetwork(x.cols(), p.hidden, std::move(heads));
    joint_.fit(x, labels, p);
  }

  ChainConfig cfg_;
  std::map<Task, std::vector<std::string>> classes_;
  std::map<Task, Classifier> base_;
  std::map<Task, Classifier> coupled_;
  MlpNetwork joint_;
  std::vector<Task> joint_blocks_;
};

}  // namespace signphon::learn

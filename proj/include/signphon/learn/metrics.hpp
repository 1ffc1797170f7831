#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "signphon/error.hpp"
#include "signphon/learn/dataset.hpp"

namespace signphon::learn {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& r : counts)
      for (auto v : r) s += v;
    return s;
  }

  double accuracy() const {
    const auto n = total();
    if (n == 0) return 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) ok += counts[i][i];
    return static_cast<double>(ok) / static_cast<double>(n);
  }

  // 0/0 is reported as 0.
  double precision(std::size_t c) const {
    std::size_t col = 0;
    for (const auto& r : counts) col += r[c];
    return col ? static_cast<double>(counts[c][c]) / static_cast<double>(col) : 0.0;
  }
  double recall(std::size_t c) const {
    std::size_t row = 0;
    for (auto v : counts[c]) row += v;
    return row ? static_cast<double>(counts[c][c]) / static_cast<double>(row) : 0.0;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                        std::vector<std::string> classes) {
  if (truth.size() != predicted.size()) throw DataError("confusion matrix: length mismatch");
  ConfusionMatrix m;
  const std::size_t k = classes.size();
  m.classes = std::move(classes);
  m.counts.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= k ||
        static_cast<std::size_t>(predicted[i]) >= k)
      throw DataError("confusion matrix: label index out of range");
    ++m.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return m;
}

// Token overload: every token must belong to `classes`.
inline ConfusionMatrix confusion_matrix(std::span<const std::string> truth, std::span<const std::string> predicted,
                                        std::vector<std::string> classes) {
  const auto t = TaskLabels::from_tokens(truth, classes);
  const auto p = TaskLabels::from_tokens(predicted, classes);
  return confusion_matrix(t.y, p.y, std::move(classes));
}

inline std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "truth\\predicted";
  for (const auto& c : m.classes) out += "," + c;
  out += '\n';
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    out += m.classes[i];
    for (auto v : m.counts[i]) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

inline std::string precision_recall_csv(const ConfusionMatrix& m) {
  std::string out = "class,support,precision,recall\n";
  char buf[64];
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    std::size_t support = 0;
    for (auto v : m.counts[c]) support += v;
    std::snprintf(buf, sizeof buf, ",%zu,%.6f,%.6f\n", support, m.precision(c), m.recall(c));
    out += m.classes[c] + buf;
  }
  return out;
}

}  // namespace signphon::learn

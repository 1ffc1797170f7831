#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signphon/error.hpp"

namespace signphon::learn {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) throw DataError("ragged matrix rows");
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix m(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(row(idx[i]).begin(), cols_, m.row(i).begin());
    return m;
  }

  // Columns of `other` appended to the right.
  Matrix hconcat(const Matrix& other) const {
    if (other.rows_ != rows_) throw DataError("hconcat: row count mismatch");
    Matrix m(rows_, cols_ + other.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
      std::copy_n(row(i).begin(), cols_, m.row(i).begin());
      std::copy_n(other.row(i).begin(), other.cols_, m.row(i).begin() + static_cast<std::ptrdiff_t>(cols_));
    }
    return m;
  }

  // Columns reordered so that new column j is old column perm[j].
  Matrix permute_columns(std::span<const std::size_t> perm) const {
    Matrix m(rows_, perm.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < perm.size(); ++j) m(i, j) = (*this)(i, perm[j]);
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Task : std::uint8_t { handedness, handshape, orientation, location };

inline constexpr std::array<Task, 4> kAllTasks = {Task::handedness, Task::handshape, Task::orientation, Task::location};

inline std::string_view task_name(Task t) {
  constexpr std::array<std::string_view, 4> names = {"handedness", "handshape", "orientation", "location"};
  return names[static_cast<std::size_t>(t)];
}

inline Task parse_task(std::string_view s) {
  for (Task t : kAllTasks)
    if (task_name(t) == s) return t;
  throw ParseError("unknown task '" + std::string(s) + "'");
}

// Class indices of one task plus the vocabulary they index into.
struct TaskLabels {
  std::vector<std::string> classes;
  std::vector<int> y;

  std::size_t num_classes() const { return classes.size(); }
  std::vector<int> subset(std::span<const std::size_t> idx) const {
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(y.at(i));
    return out;
  }

  // Builds the vocabulary from tokens, in first-appearance order unless a
  // vocabulary is given.
  static TaskLabels from_tokens(std::span<const std::string> tokens, std::vector<std::string> vocabulary = {}) {
    TaskLabels t;
    t.classes = std::move(vocabulary);
    const bool fixed = !t.classes.empty();
    for (const auto& tok : tokens) {
      auto it = std::find(t.classes.begin(), t.classes.end(), tok);
      if (it == t.classes.end()) {
        if (fixed) throw DataError("unknown label token '" + tok + "'");
        t.classes.push_back(tok);
        it = t.classes.end() - 1;
      }
      t.y.push_back(static_cast<int>(it - t.classes.begin()));
    }
    return t;
  }
};

struct LabeledDataset {
  Matrix features;
  std::vector<std::string> feature_names;
  std::map<Task, TaskLabels> labels;

  std::size_t size() const { return features.rows(); }

  void validate() const {
    if (features.cols() == 0) throw DataError("dataset has no features");
    if (!feature_names.empty() && feature_names.size() != features.cols())
      throw DataError("feature name count does not match feature columns");
    for (const auto& [task, l] : labels)
      if (l.y.size() != features.rows())
        throw DataError("label count for " + std::string(task_name(task)) + " does not match sample count");
  }

  LabeledDataset subset(std::span<const std::size_t> idx) const {
    LabeledDataset d;
    d.features = features.select_rows(idx);
    d.feature_names = feature_names;
    for (const auto& [task, l] : labels) d.labels[task] = {l.classes, l.subset(idx)};
    return d;
  }
};

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train = 0.67;
  double validation = 0.165;
  double test = 0.165;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

// Sizes by largest-remainder rounding of n * fraction; ties go to the earlier part.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  const std::array<double, 3> f = {spec.train, spec.validation, spec.test};
  for (double v : f)
    if (v < 0.0) throw DataError("split fractions must be non-negative");
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw DataError("split fractions must sum to 1");
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * f[i];
    // Guard against 0.67 * 200 = 133.99999999999997.
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

inline SplitIndices split(std::size_t n, const SplitSpec& spec) {
  if (n < 3) throw DataError("split needs at least 3 samples");
  const auto sizes = split_sizes(n, spec);
  const auto idx = shuffled_indices(n, spec.seed);
  SplitIndices s;
  auto it = idx.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
  it += static_cast<std::ptrdiff_t>(sizes[0]);
  s.validation.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
  it += static_cast<std::ptrdiff_t>(sizes[1]);
  s.test.assign(it, idx.end());
  return s;
}

// ---------------------------------------------------------------------------
// K-fold

struct KFoldResult {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

// Fold f validates on a contiguous block of a seeded permutation; the first
// n % folds folds are one sample larger.
inline std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw DataError("kfold needs at least 2 folds");
  if (n < folds) throw DataError("kfold needs at least as many samples as folds");
  const auto idx = shuffled_indices(n, seed);
  std::vector<std::vector<std::size_t>> parts(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = n / folds + (f < n % folds ? 1 : 0);
    parts[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos), idx.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return parts;
}

// `evaluate(train_idx, validation_idx)` returns the validation accuracy of a
// model trained on train_idx.
inline KFoldResult kfold(std::size_t n, std::size_t folds, std::uint64_t seed,
                         const std::function<double(std::span<const std::size_t>, std::span<const std::size_t>)>& evaluate) {
  const auto parts = kfold_partition(n, folds, seed);
  KFoldResult r;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds; ++g)
      if (g != f) train.insert(train.end(), parts[g].begin(), parts[g].end());
    r.fold_accuracy.push_back(evaluate(train, parts[f]));
  }
  r.mean = std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) / static_cast<double>(folds);
  double var = 0.0;
  for (double a : r.fold_accuracy) var += (a - r.mean) * (a - r.mean);
  r.std = std::sqrt(var / static_cast<double>(folds));
  return r;
}

inline double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw DataError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == predicted[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Per-column z-scoring; zero-variance columns are left centred only.
struct Standardizer {
  std::vector<double> mean, scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    s.mean.assign(x.cols(), 0.0);
    s.scale.assign(x.cols(), 1.0);
    if (x.rows() == 0) return s;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) s.mean[j] += x(i, j);
    for (auto& m : s.mean) m /= static_cast<double>(x.rows());
    std::vector<double> var(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) var[j] += (x(i, j) - s.mean[j]) * (x(i, j) - s.mean[j]);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(x.rows()));
      s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
  }
};

}  // namespace signphon::learn

#pragma once

// Feature matrices as CSV: a header of feature names, one row per sample,
// then the label columns. Label columns are named after tasks
// (handedness, handshape, orientation, location); a single trailing column
// named "label" is also accepted and assigned to a caller-chosen task.

#include <array>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "signphon/error.hpp"
#include "signphon/learn/dataset.hpp"

namespace signphon {

struct FeatureTable {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::map<learn::Task, std::vector<std::string>> labels;  // tokens per task, aligned with rows

  std::size_t size() const { return rows.size(); }
};

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), r.ptr};
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string write_feature_csv(const FeatureTable& t) {
  std::string out;
  for (std::size_t j = 0; j < t.feature_names.size(); ++j) out += (j ? "," : "") + t.feature_names[j];
  for (const auto& [task, tokens] : t.labels) {
    if (tokens.size() != t.rows.size()) throw DataError("feature csv: label column length mismatch");
    out += ',';
    out += learn::task_name(task);
  }
  out += '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != t.feature_names.size()) throw DataError("feature csv: row width mismatch");
    for (std::size_t j = 0; j < t.rows[i].size(); ++j) out += (j ? "," : "") + format_double(t.rows[i][j]);
    for (const auto& [task, tokens] : t.labels) out += ',' + tokens[i];
    out += '\n';
  }
  return out;
}

inline FeatureTable read_feature_csv(std::string_view text, learn::Task label_task = learn::Task::handshape) {
  FeatureTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("feature csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  std::vector<std::optional<learn::Task>> column_task;
  for (const auto& h : header) {
    std::optional<learn::Task> task;
    if (h == "label") {
      task = label_task;
    } else {
      for (auto k : learn::kAllTasks)
        if (learn::task_name(k) == h) task = k;
    }
    if (task) {
      if (t.labels.contains(*task)) throw ParseError("feature csv: duplicate label column '" + h + "'");
      t.labels[*task];
    } else {
      if (!column_task.empty() && column_task.back())
        throw ParseError("feature csv: feature column '" + h + "' after label columns");
      t.feature_names.push_back(h);
    }
    column_task.push_back(task);
  }
  if (t.feature_names.empty()) throw ParseError("feature csv: no feature columns");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("feature csv: row " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " columns, got " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(t.feature_names.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (column_task[j]) {
        t.labels[*column_task[j]].push_back(cells[j]);
        continue;
      }
      double v = 0.0;
      const auto* end = cells[j].data() + cells[j].size();
      const auto r = std::from_chars(cells[j].data(), end, v);
      if (r.ec != std::errc{} || r.ptr != end)
        throw ParseError("feature csv: row " + std::to_string(line_no) + ": bad number '" + cells[j] + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Dataset restricted to rows whose labels for `tasks` are not `skip_token`.
// Label vocabularies come from `vocabularies` when given, else first appearance.
inline learn::LabeledDataset to_dataset(const FeatureTable& t, std::span<const learn::Task> tasks,
                                        const std::map<learn::Task, std::vector<std::string>>& vocabularies = {},
                                        std::string_view skip_token = "-") {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    bool ok = true;
    for (auto task : tasks) {
      const auto it = t.labels.find(task);
      if (it == t.labels.end()) throw DataError("feature csv has no '" + std::string(learn::task_name(task)) + "' column");
      ok = ok && it->second[i] != skip_token;
    }
    if (ok) keep.push_back(i);
  }
  learn::LabeledDataset d;
  d.feature_names = t.feature_names;
  std::vector<std::vector<double>> rows;
  for (auto i : keep) rows.push_back(t.rows[i]);
  d.features = learn::Matrix::from_rows(rows);
  if (rows.empty()) d.features = learn::Matrix(0, t.feature_names.size());
  for (auto task : tasks) {
    std::vector<std::string> tokens;
    for (auto i : keep) tokens.push_back(t.labels.at(task)[i]);
    const auto v = vocabularies.find(task);
    d.labels[task] = learn::TaskLabels::from_tokens(tokens, v == vocabularies.end() ? std::vector<std::string>{} : v->second);
  }
  return d;
}

}  // namespace signphon

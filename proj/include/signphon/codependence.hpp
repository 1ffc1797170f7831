#pragma once

// Orientation x location co-dependence: global contingency table, per-cell
// 2x2 tables, Pearson chi-square tests and Bonferroni screening.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "signphon/error.hpp"
#include "signphon/ingest.hpp"
#include "signphon/pose_model.hpp"

namespace signphon {

inline constexpr std::size_t kOrientationCount = label_count<Orientation>();
inline constexpr std::size_t kLocationCount = label_count<Location>();

struct ContingencyTable {
  std::array<std::array<std::uint64_t, kLocationCount>, kOrientationCount> counts{};
  std::optional<Handedness> hand;  // set for hand-stratified tables

  std::uint64_t at(Orientation o, Location l) const {
    return counts[static_cast<std::size_t>(o)][static_cast<std::size_t>(l)];
  }
  std::uint64_t row_total(std::size_t i) const {
    std::uint64_t s = 0;
    for (auto v : counts.at(i)) s += v;
    return s;
  }
  std::uint64_t column_total(std::size_t j) const {
    std::uint64_t s = 0;
    for (const auto& row : counts) s += row.at(j);
    return s;
  }
  std::uint64_t grand_total() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < kOrientationCount; ++i) s += row_total(i);
    return s;
  }
  void add(Orientation o, Location l, std::uint64_t n = 1) {
    counts[static_cast<std::size_t>(o)][static_cast<std::size_t>(l)] += n;
  }

  friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

inline ContingencyTable build_contingency(std::span<const AnnotationRecord> records) {
  ContingencyTable t;
  for (const auto& r : records) t.add(r.orientation, r.location);
  return t;
}

// One table per hand: [right, left].
inline std::array<ContingencyTable, 2> build_contingency_by_hand(std::span<const AnnotationRecord> records) {
  std::array<ContingencyTable, 2> t;
  t[0].hand = Handedness::right;
  t[1].hand = Handedness::left;
  for (const auto& r : records) t[static_cast<std::size_t>(r.handedness)].add(r.orientation, r.location);
  return t;
}

// Cell (i, j) against the rest of the table:
//   a = n_ij          b = row_i - a
//   c = col_j - a     d = n - a - b - c
struct LocalTable2x2 {
  std::uint64_t a = 0, b = 0, c = 0, d = 0;

  std::uint64_t total() const { return a + b + c + d; }
  friend bool operator==(const LocalTable2x2&, const LocalTable2x2&) = default;
};

inline LocalTable2x2 local_2x2(const ContingencyTable& t, std::size_t i, std::size_t j) {
  if (i >= kOrientationCount || j >= kLocationCount) throw DataError("local_2x2: cell index out of range");
  const std::uint64_t n = t.grand_total();
  if (n == 0) throw DataError("local_2x2: empty table");
  LocalTable2x2 l;
  l.a = t.counts[i][j];
  l.b = t.row_total(i) - l.a;
  l.c = t.column_total(j) - l.a;
  l.d = n - l.a - l.b - l.c;
  return l;
}

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool testable = false;  // false when a marginal is zero
};

// Survival function of the chi-square distribution with one degree of
// freedom: P(X > x) = erfc(sqrt(x / 2)).
inline double chi_square_1dof_sf(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(0.5 * x));
}

// Pearson statistic without continuity correction.
inline ChiSquareResult chi_square_2x2(const LocalTable2x2& t) {
  const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
  const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
  const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) return {};
  const double n = a + b + c + d;
  const double diff = a * d - b * c;
  // Divide step by step to keep large counts in range.
  const double stat = n * (diff / r1) * (diff / r2) / c1 / c2;
  return {stat, chi_square_1dof_sf(stat), true};
}

struct CellSignificance {
  Orientation orientation{};
  Location location{};
  std::optional<Handedness> hand;
  std::uint64_t count = 0;
  double expected = 0.0;  // row total * column total / grand total
  ChiSquareResult test;
  bool significant = false;
};

struct SignificanceReport {
  std::vector<CellSignificance> cells;  // every cell, testable or not
  double alpha = 0.05;
  std::size_t m = 0;  // number of testable cells
  double threshold = 0.0;

  std::vector<CellSignificance> significant_cells() const {
    std::vector<CellSignificance> out;
    for (const auto& c : cells)
      if (c.significant) out.push_back(c);
    return out;
  }
};

// Tests every cell of every table and flags p < alpha / m, where m counts
// the testable cells over all given tables (one family).
inline SignificanceReport bonferroni_screen(std::span<const ContingencyTable> tables, double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  SignificanceReport rep;
  rep.alpha = alpha;
  for (const auto& t : tables) {
    if (t.grand_total() == 0) continue;
    for (std::size_t i = 0; i < kOrientationCount; ++i)
      for (std::size_t j = 0; j < kLocationCount; ++j) {
        CellSignificance c;
        c.orientation = static_cast<Orientation>(i);
        c.location = static_cast<Location>(j);
        c.hand = t.hand;
        c.count = t.counts[i][j];
        c.expected = static_cast<double>(t.row_total(i)) * static_cast<double>(t.column_total(j)) /
                     static_cast<double>(t.grand_total());
        c.test = chi_square_2x2(local_2x2(t, i, j));
        if (c.test.testable) ++rep.m;
        rep.cells.push_back(c);
      }
  }
  if (rep.m == 0) {
    rep.cells.clear();
    return rep;
  }
  rep.threshold = alpha / static_cast<double>(rep.m);
  for (auto& c : rep.cells) c.significant = c.test.testable && c.test.p_value < rep.threshold;
  return rep;
}

inline SignificanceReport bonferroni_screen(const ContingencyTable& table, double alpha = 0.05) {
  return bonferroni_screen(std::span<const ContingencyTable>(&table, 1), alpha);
}

inline std::string contingency_csv(const ContingencyTable& t) {
  std::string out = "orientation";
  for (auto l : all_labels<Location>()) {
    out += ',';
    out += render(l);
  }
  out += '\n';
  for (auto o : all_labels<Orientation>()) {
    out += render(o);
    for (auto l : all_labels<Location>()) {
      out += ',';
      out += std::to_string(t.at(o, l));
    }
    out += '\n';
  }
  return out;
}

inline std::string significance_csv(const SignificanceReport& rep) {
  std::string out = "orientation,location,hand,count,chi2,p,significant\n";
  char buf[128];
  for (const auto& c : rep.cells) {
    out += render(c.orientation);
    out += ',';
    out += render(c.location);
    out += ',';
    out += c.hand ? std::string(render(*c.hand)) : std::string("all");
    out += ',';
    out += std::to_string(c.count);
    if (c.test.testable) {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6e,%d\n", c.test.statistic, c.test.p_value, c.significant ? 1 : 0);
      out += buf;
    } else {
      out += ",NA,NA,0\n";
    }
  }
  return out;
}

inline std::string significance_summary(const SignificanceReport& rep) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "alpha %.4g, testable cells m = %zu, Bonferroni threshold %.6g\n", rep.alpha, rep.m,
                rep.threshold);
  out += buf;
  const auto sig = rep.significant_cells();
  if (sig.empty()) {
    out += "no significant orientation/location pairs\n";
    return out;
  }
  std::snprintf(buf, sizeof buf, "%zu significant orientation/location pairs:\n", sig.size());
  out += buf;
  for (const auto& c : sig) {
    std::snprintf(buf, sizeof buf, "  %-5s %-3s %-9s count %llu (expected %.1f, %s)  chi2 %.4f  p %.3e\n",
                  c.hand ? std::string(render(*c.hand)).c_str() : "all", std::string(render(c.orientation)).c_str(),
                  std::string(render(c.location)).c_str(), static_cast<unsigned long long>(c.count), c.expected,
                  static_cast<double>(c.count) > c.expected ? "over" : "under", c.test.statistic, c.test.p_value);
    out += buf;
  }
  return out;
}

}  // namespace signphon

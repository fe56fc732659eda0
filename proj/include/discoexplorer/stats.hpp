#ifndef DISCOEXPLORER_STATS_HPP
#define DISCOEXPLORER_STATS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "discoexplorer/deql.hpp"
#include "discoexplorer/engine.hpp"
#include "discoexplorer/error.hpp"
#include "discoexplorer/model.hpp"

namespace discoexplorer::stats {

inline constexpr const char* kNone = "None";

enum class CategoricalKind { DisrptLabel, OrigLabel, Direction, SignalType, SignalSubtype, Metadata, FilterMatch };

struct CategoricalVar {
  CategoricalKind kind = CategoricalKind::DisrptLabel;
  std::string key;         // metadata key
  deql::Filters filter;    // for FilterMatch

  bool operator==(const CategoricalVar&) const = default;
};

enum class NumericalVar {
  Arg1Len,
  Arg2Len,
  SrcLen,
  TgtLen,
  Arg1DocPercentile,
  Arg2DocPercentile,
  SrcDocPercentile,
  TgtDocPercentile,
  ArgDistance,
  SignalCount,
};

using Variable = std::variant<CategoricalVar, NumericalVar>;

inline const std::vector<std::pair<std::string, NumericalVar>>& numerical_names() {
  static const std::vector<std::pair<std::string, NumericalVar>> names = {
      {"arg1_len", NumericalVar::Arg1Len},
      {"arg2_len", NumericalVar::Arg2Len},
      {"src_len", NumericalVar::SrcLen},
      {"tgt_len", NumericalVar::TgtLen},
      {"arg1_doc_percentile", NumericalVar::Arg1DocPercentile},
      {"arg2_doc_percentile", NumericalVar::Arg2DocPercentile},
      {"src_doc_percentile", NumericalVar::SrcDocPercentile},
      {"tgt_doc_percentile", NumericalVar::TgtDocPercentile},
      {"arg_distance", NumericalVar::ArgDistance},
      {"signal_count", NumericalVar::SignalCount},
  };
  return names;
}

/// Variable names as used on the wire: "disrpt_label", "metadata:genre",
/// "arg1_len", ... FilterMatch variables are built by the caller.
inline Variable parse_variable(const std::string& name) {
  if (name == "disrpt_label" || name == "label") return CategoricalVar{CategoricalKind::DisrptLabel, {}, {}};
  if (name == "orig_label") return CategoricalVar{CategoricalKind::OrigLabel, {}, {}};
  if (name == "direction") return CategoricalVar{CategoricalKind::Direction, {}, {}};
  if (name == "signal_type") return CategoricalVar{CategoricalKind::SignalType, {}, {}};
  if (name == "signal_subtype") return CategoricalVar{CategoricalKind::SignalSubtype, {}, {}};
  if (text::starts_with(name, "metadata:") && name.size() > 9) {
    return CategoricalVar{CategoricalKind::Metadata, name.substr(9), {}};
  }
  for (const auto& [n, v] : numerical_names()) {
    if (n == name) return v;
  }
  std::vector<std::string> allowed = {"disrpt_label", "orig_label", "direction", "signal_type", "signal_subtype",
                                      "metadata:<key>", "filter_match:<filter>"};
  for (const auto& [n, v] : numerical_names()) allowed.push_back(n);
  throw ValidationError("unknown variable '" + name + "'", allowed);
}

inline bool is_numerical(const Variable& v) { return std::holds_alternative<NumericalVar>(v); }

/// Category values of one relation. Signal variables yield one value per
/// signal, or "None" for a relation without signals.
inline std::vector<std::string> categorical_values(const Relation& rel, const CategoricalVar& var) {
  switch (var.kind) {
    case CategoricalKind::DisrptLabel: return {rel.disrpt_label};
    case CategoricalKind::OrigLabel: return {rel.orig_label};
    case CategoricalKind::Direction: return {direction_name(rel.direction)};
    case CategoricalKind::SignalType:
    case CategoricalKind::SignalSubtype: {
      std::vector<std::string> out;
      for (const auto& s : rel.signals) {
        if (var.kind == CategoricalKind::SignalType) out.push_back(s.sig_type);
        else out.push_back(s.sig_subtype.value_or(kNone));
      }
      if (out.empty()) out.emplace_back(kNone);
      return out;
    }
    case CategoricalKind::Metadata: {
      auto it = rel.metadata.find(var.key);
      return {it == rel.metadata.end() ? std::string(kNone) : it->second};
    }
    case CategoricalKind::FilterMatch: return {engine::passes_filters(rel, var.filter) ? "yes" : "no"};
  }
  return {};
}

/// Numerical variables. Percentiles use the span's first token relative to
/// the document length; distance counts tokens strictly between arg1's last
/// and arg2's first token.
inline double numeric_value(const Relation& rel, NumericalVar var, const Dataset& ds) {
  auto percentile = [&](const Span& s) {
    int len = ds.document_of(rel).size();
    return len > 0 ? 100.0 * s.first() / len : 0.0;
  };
  switch (var) {
    case NumericalVar::Arg1Len: return rel.arg1.size();
    case NumericalVar::Arg2Len: return rel.arg2.size();
    case NumericalVar::SrcLen: return rel.source().size();
    case NumericalVar::TgtLen: return rel.target().size();
    case NumericalVar::Arg1DocPercentile: return percentile(rel.arg1);
    case NumericalVar::Arg2DocPercentile: return percentile(rel.arg2);
    case NumericalVar::SrcDocPercentile: return percentile(rel.source());
    case NumericalVar::TgtDocPercentile: return percentile(rel.target());
    case NumericalVar::ArgDistance: return std::max(0, rel.arg2.first() - rel.arg1.last() - 1);
    case NumericalVar::SignalCount: return static_cast<double>(rel.signals.size());
  }
  return 0.0;
}

/// Relation ordinals of a result set.
template <typename HitRange>
std::vector<int> relation_ids(const HitRange& hits) {
  std::vector<int> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.relation);
  return out;
}

struct FreqRow {
  std::string value;
  long long count = 0;
  double percent = 0.0;

  bool operator==(const FreqRow&) const = default;
};

struct FreqTable {
  std::vector<FreqRow> rows;
  long long total = 0;
  bool key_absent = false;  // metadata key missing from every relation

  bool operator==(const FreqTable&) const = default;
};

inline FreqTable freq_from_counts(const std::map<std::string, long long>& counts) {
  FreqTable t;
  for (const auto& [value, n] : counts) {
    t.rows.push_back({value, n, 0.0});
    t.total += n;
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const FreqRow& a, const FreqRow& b) { return a.count > b.count; });
  for (auto& r : t.rows) r.percent = t.total ? 100.0 * static_cast<double>(r.count) / static_cast<double>(t.total) : 0.0;
  return t;
}

/// Counts per category, descending by count, ties in lexicographic order.
inline FreqTable frequencies(const std::vector<int>& relations, const CategoricalVar& var, const Dataset& ds) {
  std::map<std::string, long long> counts;
  bool key_seen = false;
  for (int r : relations) {
    const Relation& rel = ds.relations[static_cast<std::size_t>(r)];
    if (var.kind == CategoricalKind::Metadata && rel.metadata.count(var.key)) key_seen = true;
    for (auto& v : categorical_values(rel, var)) ++counts[v];
  }
  if (var.kind == CategoricalKind::Metadata && !key_seen) {
    FreqTable empty;
    empty.key_absent = true;
    return empty;
  }
  return freq_from_counts(counts);
}

// ---------------------------------------------------------------------------
// Chi-squared distribution

namespace detail {

// Series for P(a, x); converges for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x); converges for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_fraction(a, x);
}

/// Survival function of the chi-squared distribution.
inline double chi2_sf(double chi2, int dof) {
  if (dof <= 0) return std::numeric_limits<double>::quiet_NaN();
  return gamma_q(dof / 2.0, chi2 / 2.0);
}

inline std::string significance_code(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return ".";
  return "";
}

struct CrossTabOptions {
  long long min_count = 0;  // rows/columns with a smaller total are dropped first
  bool yates = false;       // continuity correction, 2x2 only
};

struct CrossTab {
  std::vector<std::string> row_values;
  std::vector<std::string> col_values;
  std::vector<std::vector<long long>> observed;
  std::vector<std::vector<double>> expected;
  std::vector<std::vector<double>> pearson_residuals;
  long long n = 0;
  bool applicable = false;  // false: fewer than 2 rows or columns remain
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::string sig_code;
  bool yates = false;
};

/// Chi-squared test on an observed table. Rows/columns below `min_count`
/// and zero-marginal rows/columns are removed before the test.
inline CrossTab crosstab_from_counts(std::vector<std::string> rows, std::vector<std::string> cols,
                                     std::vector<std::vector<long long>> observed, const CrossTabOptions& opt = {}) {
  auto row_total = [&](std::size_t i) {
    long long s = 0;
    for (auto v : observed[i]) s += v;
    return s;
  };
  auto col_total = [&](std::size_t j) {
    long long s = 0;
    for (const auto& row : observed) s += row[j];
    return s;
  };
  long long threshold = std::max<long long>(opt.min_count, 1);
  std::vector<std::size_t> keep_rows, keep_cols;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (row_total(i) >= threshold) keep_rows.push_back(i);
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (col_total(j) >= threshold) keep_cols.push_back(j);
  }

  CrossTab t;
  for (auto i : keep_rows) t.row_values.push_back(rows[i]);
  for (auto j : keep_cols) t.col_values.push_back(cols[j]);
  for (auto i : keep_rows) {
    std::vector<long long> row;
    for (auto j : keep_cols) row.push_back(observed[i][j]);
    t.observed.push_back(std::move(row));
  }
  // Dropping columns may zero out a row (and vice versa); repeat until stable.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = t.observed.size(); i-- > 0;) {
      long long s = 0;
      for (auto v : t.observed[i]) s += v;
      if (s == 0) {
        t.observed.erase(t.observed.begin() + static_cast<long>(i));
        t.row_values.erase(t.row_values.begin() + static_cast<long>(i));
        changed = true;
      }
    }
    for (std::size_t j = t.col_values.size(); j-- > 0;) {
      long long s = 0;
      for (const auto& row : t.observed) s += row[j];
      if (s == 0) {
        for (auto& row : t.observed) row.erase(row.begin() + static_cast<long>(j));
        t.col_values.erase(t.col_values.begin() + static_cast<long>(j));
        changed = true;
      }
    }
  }

  const std::size_t R = t.row_values.size();
  const std::size_t C = t.col_values.size();
  for (const auto& row : t.observed) {
    for (auto v : row) t.n += v;
  }
  if (R < 2 || C < 2) return t;

  t.applicable = true;
  t.yates = opt.yates && R == 2 && C == 2;
  std::vector<double> rt(R, 0.0), ct(C, 0.0);
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      rt[i] += static_cast<double>(t.observed[i][j]);
      ct[j] += static_cast<double>(t.observed[i][j]);
    }
  }
  const double N = static_cast<double>(t.n);
  t.expected.assign(R, std::vector<double>(C));
  t.pearson_residuals.assign(R, std::vector<double>(C));
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      double e = rt[i] * ct[j] / N;
      double o = static_cast<double>(t.observed[i][j]);
      t.expected[i][j] = e;
      t.pearson_residuals[i][j] = (o - e) / std::sqrt(e);
      if (t.yates) {
        double d = std::max(0.0, std::fabs(o - e) - 0.5);
        t.chi2 += d * d / e;
      } else {
        t.chi2 += t.pearson_residuals[i][j] * t.pearson_residuals[i][j];
      }
    }
  }
  t.dof = static_cast<int>((R - 1) * (C - 1));
  t.p_value = chi2_sf(t.chi2, t.dof);
  t.sig_code = significance_code(t.p_value);
  return t;
}

/// Cross-tabulates two categorical variables over a result set. A relation
/// with several values (signals) contributes one unit per value pair.
inline CrossTab crosstab(const std::vector<int>& relations, const CategoricalVar& row_var,
                         const CategoricalVar& col_var, const Dataset& ds, const CrossTabOptions& opt = {}) {
  std::map<std::string, std::map<std::string, long long>> cells;
  std::map<std::string, long long> row_counts, col_counts;
  for (int r : relations) {
    const Relation& rel = ds.relations[static_cast<std::size_t>(r)];
    auto rv = categorical_values(rel, row_var);
    auto cv = categorical_values(rel, col_var);
    for (const auto& a : rv) {
      for (const auto& b : cv) {
        ++cells[a][b];
        ++row_counts[a];
        ++col_counts[b];
      }
    }
  }
  auto ordered = [](const std::map<std::string, long long>& counts) {
    std::vector<std::string> out;
    for (const auto& [v, n] : counts) out.push_back(v);
    std::stable_sort(out.begin(), out.end(),
                     [&](const std::string& a, const std::string& b) { return counts.at(a) > counts.at(b); });
    return out;
  };
  auto rows = ordered(row_counts);
  auto cols = ordered(col_counts);
  std::vector<std::vector<long long>> observed(rows.size(), std::vector<long long>(cols.size(), 0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      auto it = cells[rows[i]].find(cols[j]);
      if (it != cells[rows[i]].end()) observed[i][j] = it->second;
    }
  }
  return crosstab_from_counts(std::move(rows), std::move(cols), std::move(observed), opt);
}

// ---------------------------------------------------------------------------
// Numerical summaries

struct BoxSummary {
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_low = 0, whisker_high = 0;
  std::vector<double> outliers;

  bool operator==(const BoxSummary&) const = default;
};

/// Quantile by linear interpolation between closest ranks ("type 7").
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Five-number summary with 1.5 x IQR whiskers; nothing for empty input.
inline std::optional<BoxSummary> box_summary(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  BoxSummary b;
  b.n = values.size();
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  double iqr = b.q3 - b.q1;
  double lo = b.q1 - 1.5 * iqr;
  double hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double v : values) {
    if (v < lo || v > hi) {
      b.outliers.push_back(v);
    } else {
      b.whisker_low = std::min(b.whisker_low, v);
      b.whisker_high = std::max(b.whisker_high, v);
    }
  }
  return b;
}

inline std::vector<double> numeric_values(const std::vector<int>& relations, NumericalVar var, const Dataset& ds) {
  std::vector<double> out;
  out.reserve(relations.size());
  for (int r : relations) out.push_back(numeric_value(ds.relations[static_cast<std::size_t>(r)], var, ds));
  return out;
}

/// One box per category value (numerical x categorical breakdown), ordered
/// like the categorical frequency table.
inline std::vector<std::pair<std::string, BoxSummary>> grouped_box(const std::vector<int>& relations, NumericalVar num,
                                                                   const CategoricalVar& cat, const Dataset& ds) {
  std::map<std::string, std::vector<double>> groups;
  for (int r : relations) {
    const Relation& rel = ds.relations[static_cast<std::size_t>(r)];
    double v = numeric_value(rel, num, ds);
    for (const auto& c : categorical_values(rel, cat)) groups[c].push_back(v);
  }
  std::vector<std::pair<std::string, BoxSummary>> out;
  for (const auto& row : frequencies(relations, cat, ds).rows) {
    out.emplace_back(row.value, *box_summary(groups[row.value]));
  }
  return out;
}

/// (x, y) points for numerical x numerical breakdowns, in corpus order.
inline std::vector<std::pair<double, double>> scatter(const std::vector<int>& relations, NumericalVar x, NumericalVar y,
                                                      const Dataset& ds) {
  std::vector<std::pair<double, double>> out;
  out.reserve(relations.size());
  for (int r : relations) {
    const Relation& rel = ds.relations[static_cast<std::size_t>(r)];
    out.emplace_back(numeric_value(rel, x, ds), numeric_value(rel, y, ds));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset comparison

struct ComparisonRow {
  std::string value;
  long long count_a = 0;
  long long count_b = 0;
  double percent_a = 0.0;
  double percent_b = 0.0;

  bool operator==(const ComparisonRow&) const = default;
};

struct Comparison {
  bool numerical = false;
  std::vector<ComparisonRow> rows;  // categorical
  long long total_a = 0;
  long long total_b = 0;
  std::optional<BoxSummary> box_a;  // numerical
  std::optional<BoxSummary> box_b;
};

/// Pairs two frequency tables over the union of their values, each side
/// normalized to its own total.
inline Comparison pair_tables(const FreqTable& a, const FreqTable& b) {
  Comparison c;
  c.total_a = a.total;
  c.total_b = b.total;
  std::map<std::string, ComparisonRow> rows;
  for (const auto& r : a.rows) {
    rows[r.value].value = r.value;
    rows[r.value].count_a = r.count;
    rows[r.value].percent_a = r.percent;
  }
  for (const auto& r : b.rows) {
    rows[r.value].value = r.value;
    rows[r.value].count_b = r.count;
    rows[r.value].percent_b = r.percent;
  }
  for (auto& [v, row] : rows) c.rows.push_back(row);
  std::stable_sort(c.rows.begin(), c.rows.end(), [](const ComparisonRow& x, const ComparisonRow& y) {
    return x.count_a + x.count_b > y.count_a + y.count_b;
  });
  return c;
}

/// Runs the same query on two datasets and pairs the breakdowns. Filter
/// values missing from one dataset's inventory match nothing there.
inline Comparison compare(const std::string& query, const deql::Filters& filters, bool exact, const Dataset& ds_a,
                          const Dataset& ds_b, const Variable& var) {
  auto spec_a = deql::compile(query, filters, ds_a, exact, false);
  auto spec_b = deql::compile(query, filters, ds_b, exact, false);
  auto rel_a = relation_ids(engine::find(spec_a, ds_a));
  auto rel_b = relation_ids(engine::find(spec_b, ds_b));
  if (auto num = std::get_if<NumericalVar>(&var)) {
    Comparison c;
    c.numerical = true;
    c.total_a = static_cast<long long>(rel_a.size());
    c.total_b = static_cast<long long>(rel_b.size());
    c.box_a = box_summary(numeric_values(rel_a, *num, ds_a));
    c.box_b = box_summary(numeric_values(rel_b, *num, ds_b));
    return c;
  }
  const auto& cat = std::get<CategoricalVar>(var);
  return pair_tables(frequencies(rel_a, cat, ds_a), frequencies(rel_b, cat, ds_b));
}

}  // namespace discoexplorer::stats

#endif  // DISCOEXPLORER_STATS_HPP

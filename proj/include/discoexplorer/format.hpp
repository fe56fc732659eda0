#ifndef DISCOEXPLORER_FORMAT_HPP
#define DISCOEXPLORER_FORMAT_HPP

// TSV exports and plain-text concordance lines, shared by the CLI and the
// HTTP service. TSV: header row, tab-separated, "." decimal separator,
// 4 decimals for derived quantities.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "discoexplorer/engine.hpp"
#include "discoexplorer/model.hpp"
#include "discoexplorer/stats.hpp"

namespace discoexplorer::format {

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// Tabs and line breaks inside a cell become spaces.
inline std::string cell(std::string s) {
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

inline std::string span_text(const Span& span, const Document& doc) {
  std::string out;
  for (const auto& r : span.ranges()) {
    if (!out.empty()) out += " ...";
    for (int p = r.start; p <= r.end; ++p) {
      if (!out.empty()) out += ' ';
      out += doc.tokens[static_cast<std::size_t>(p)].form;
    }
  }
  return out;
}

/// "type/subtype:form form; ..." for each signal of the relation.
inline std::string signal_summary(const Relation& rel, const Document& doc) {
  std::string out;
  for (const auto& sig : rel.signals) {
    if (!out.empty()) out += "; ";
    out += sig.sig_type;
    if (sig.sig_subtype) out += "/" + *sig.sig_subtype;
    if (!sig.token_positions.empty()) {
      out += ':';
      for (std::size_t i = 0; i < sig.token_positions.size(); ++i) {
        if (i) out += ' ';
        out += doc.tokens[static_cast<std::size_t>(sig.token_positions[i])].form;
      }
    }
  }
  return out;
}

inline void write_freq_tsv(std::ostream& out, const stats::FreqTable& t) {
  out << "value\tcount\tpercent\n";
  for (const auto& r : t.rows) out << cell(r.value) << '\t' << r.count << '\t' << fixed4(r.percent) << '\n';
}

inline void write_crosstab_tsv(std::ostream& out, const stats::CrossTab& t) {
  out << "row\tcol\tobserved\texpected\tresidual\tchi2\tdof\tp_value\tsig_code\n";
  for (std::size_t i = 0; i < t.row_values.size(); ++i) {
    for (std::size_t j = 0; j < t.col_values.size(); ++j) {
      out << cell(t.row_values[i]) << '\t' << cell(t.col_values[j]) << '\t' << t.observed[i][j];
      if (t.applicable) {
        out << '\t' << fixed4(t.expected[i][j]) << '\t' << fixed4(t.pearson_residuals[i][j]) << '\t' << fixed4(t.chi2)
            << '\t' << t.dof << '\t' << fixed4(t.p_value) << '\t' << t.sig_code << '\n';
      } else {
        out << "\t\t\t\t\t\t\n";
      }
    }
  }
}

inline const char* kBoxHeader = "group\tn\tmin\tq1\tmedian\tq3\tmax\twhisker_low\twhisker_high\toutliers\n";

inline void write_box_row(std::ostream& out, const std::string& group, const stats::BoxSummary& b) {
  out << cell(group) << '\t' << b.n << '\t' << fixed4(b.min) << '\t' << fixed4(b.q1) << '\t' << fixed4(b.median) << '\t'
      << fixed4(b.q3) << '\t' << fixed4(b.max) << '\t' << fixed4(b.whisker_low) << '\t' << fixed4(b.whisker_high) << '\t';
  for (std::size_t i = 0; i < b.outliers.size(); ++i) out << (i ? "," : "") << fixed4(b.outliers[i]);
  out << '\n';
}

inline void write_box_tsv(std::ostream& out, const std::vector<std::pair<std::string, stats::BoxSummary>>& boxes) {
  out << kBoxHeader;
  for (const auto& [group, b] : boxes) write_box_row(out, group, b);
}

inline void write_compare_tsv(std::ostream& out, const stats::Comparison& c, const std::string& id_a,
                              const std::string& id_b) {
  if (c.numerical) {
    out << kBoxHeader;
    if (c.box_a) write_box_row(out, id_a, *c.box_a);
    if (c.box_b) write_box_row(out, id_b, *c.box_b);
    return;
  }
  out << "value\tcount_a\tpercent_a\tcount_b\tpercent_b\n";
  for (const auto& r : c.rows) {
    out << cell(r.value) << '\t' << r.count_a << '\t' << fixed4(r.percent_a) << '\t' << r.count_b << '\t'
        << fixed4(r.percent_b) << '\n';
  }
}

inline void write_concordance_tsv(std::ostream& out, const std::vector<engine::Hit>& hits, const Dataset& ds) {
  out << "rel_id\tdoc_id\tdisrpt_label\torig_label\tdirection\targ1_text\targ2_text\tsignals\tmatched\n";
  for (const auto& hit : hits) {
    const Relation& rel = ds.relations[static_cast<std::size_t>(hit.relation)];
    const Document& doc = ds.document_of(rel);
    std::string matched;
    for (int p : hit.positions) {
      if (!matched.empty()) matched += ' ';
      matched += doc.tokens[static_cast<std::size_t>(p)].form;
    }
    out << cell(rel.rel_id) << '\t' << cell(rel.doc_id) << '\t' << cell(rel.disrpt_label) << '\t'
        << cell(rel.orig_label) << '\t' << direction_name(rel.direction) << '\t' << cell(span_text(rel.arg1, doc))
        << '\t' << cell(span_text(rel.arg2, doc)) << '\t' << cell(signal_summary(rel, doc)) << '\t' << cell(matched)
        << '\n';
  }
}

/// One-line rendering of a hit: arguments bracketed as [ ... ]1 / [ ... ]2,
/// query matches as _word_, signal tokens as word{type}, skipped text as "...".
inline std::string concordance_line(const engine::Match& m, const Dataset& ds) {
  const Relation& rel = ds.relations[static_cast<std::size_t>(m.relation)];
  const Document& doc = ds.document_of(rel);
  std::string out;
  auto region_close = [](engine::Region r) -> const char* {
    if (r == engine::Region::Arg1) return " ]1";
    if (r == engine::Region::Arg2) return " ]2";
    return "";
  };
  engine::Region open = engine::Region::Outside;
  int prev = -2;
  for (const auto& role : m.highlight_roles) {
    bool arg = role.region == engine::Region::Arg1 || role.region == engine::Region::Arg2;
    if (role.region != open || role.position != prev + 1) {
      out += region_close(open);
      if (prev >= 0 && role.position != prev + 1) out += " ...";
      if (arg) out += " [";
      open = role.region;
    }
    std::string word = doc.tokens[static_cast<std::size_t>(role.position)].form;
    if (role.query_match) word = "_" + word + "_";
    if (!role.signal_types.empty()) word += "{" + text::join(role.signal_types, ",") + "}";
    out += ' ' + word;
    prev = role.position;
  }
  out += region_close(open);
  return rel.rel_id + "\t" + rel.disrpt_label + "\t" + direction_name(rel.direction) + "\t" +
         std::string(text::trim(out));
}

}  // namespace discoexplorer::format

#endif  // DISCOEXPLORER_FORMAT_HPP

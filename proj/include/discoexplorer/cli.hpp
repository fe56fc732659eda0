#ifndef DISCOEXPLORER_CLI_HPP
#define DISCOEXPLORER_CLI_HPP

// Command implementations behind the `discoexplorer` executable. Each takes
// parsed options plus output streams and returns a process exit code.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "discoexplorer/deql.hpp"
#include "discoexplorer/engine.hpp"
#include "discoexplorer/error.hpp"
#include "discoexplorer/format.hpp"
#include "discoexplorer/ingest.hpp"
#include "discoexplorer/manifest.hpp"
#include "discoexplorer/stats.hpp"

namespace discoexplorer::cli {

/// Dataset sources from a manifest, or one dataset from explicit
/// .rels/.conllu paths (id taken from the first .rels file name).
inline std::vector<ingest::DatasetSource> resolve_sources(const std::string& manifest,
                                                          const std::vector<std::string>& paths,
                                                          const std::string& data_root) {
  if (!manifest.empty()) return ingest::load_manifest(manifest, data_root);
  ingest::DatasetSource src;
  for (const auto& p : paths) {
    auto ext = std::filesystem::path(p).extension().string();
    if (ext == ".rels") {
      src.rels_paths.push_back(p);
    } else if (ext == ".conllu") {
      src.conllu_paths.push_back(p);
    } else if (ext == ".json" || ext == ".manifest" || ext == ".txt") {
      return ingest::load_manifest(p, data_root);
    } else {
      throw IoError("don't know what to do with '" + p + "' (expected .rels, .conllu or a manifest)");
    }
  }
  if (src.rels_paths.empty() || src.conllu_paths.empty()) throw IoError("need at least one .rels and one .conllu file");
  auto stem = std::filesystem::path(src.rels_paths.front()).stem().string();
  for (const char* split : {"_train", "_dev", "_test"}) {
    if (stem.size() > std::string(split).size() && stem.ends_with(split)) stem.resize(stem.size() - std::string(split).size());
  }
  src.dataset_id = stem;
  return {src};
}

inline const ingest::DatasetSource& find_source(const std::vector<ingest::DatasetSource>& sources,
                                                const std::string& id) {
  for (const auto& s : sources) {
    if (s.dataset_id == id) return s;
  }
  throw NotFoundError("unknown dataset '" + id + "'");
}

/// Full strict ingestion of every dataset; prints counts and every error.
/// Exit code 0 iff everything loaded cleanly.
inline int cmd_validate(const std::vector<ingest::DatasetSource>& sources, std::ostream& out, std::ostream& err) {
  int status = 0;
  out << "dataset\trelations\tsentences\ttokens\tdocuments\n";
  for (const auto& src : sources) {
    std::vector<std::string> problems;
    try {
      Dataset ds = ingest::load_dataset(src, {.strict = false}, &problems);
      for (const auto& rel : ds.relations) {
        if (auto v = check_partition(rel, ds)) problems.push_back("integrity: " + *v);
      }
      out << ds.dataset_id << '\t' << ds.relations.size() << '\t' << ds.sentence_count() << '\t' << ds.token_count()
          << '\t' << ds.documents.size() << '\n';
    } catch (const Error& e) {
      problems.push_back(std::string(error_kind_name(e.kind())) + ": " + e.what());
    }
    for (const auto& p : problems) err << src.dataset_id << ": " << p << '\n';
    if (!problems.empty()) status = 1;
  }
  return status;
}

struct FilterOptions {
  std::optional<std::string> label, orig_label, direction, signal_type, signal_subtype;
  bool negate_label = false, negate_orig_label = false, negate_direction = false, negate_signal_type = false,
       negate_signal_subtype = false;
  bool any_signal = false, negate_any_signal = false;
};

inline deql::Filters to_filters(const FilterOptions& o) {
  deql::Filters f;
  if (o.label) f.label = deql::LabelFilter{*o.label, o.negate_label, deql::LabelKind::Disrpt};
  if (o.orig_label) f.label = deql::LabelFilter{*o.orig_label, o.negate_orig_label, deql::LabelKind::Orig};
  if (o.direction) f.direction = deql::ValueFilter{*o.direction, o.negate_direction};
  if (o.signal_type) f.signal_type = deql::ValueFilter{*o.signal_type, o.negate_signal_type};
  if (o.signal_subtype) f.signal_subtype = deql::ValueFilter{*o.signal_subtype, o.negate_signal_subtype};
  if (o.negate_any_signal) f.any_signal = deql::SignalPresence::Absent;
  else if (o.any_signal) f.any_signal = deql::SignalPresence::Present;
  return f;
}

struct QueryOptions {
  std::string dataset;
  std::string query;
  FilterOptions filters;
  bool exact = false;
  bool case_sensitive = false;
  bool include_context = false;
  bool count_only = false;
  std::string tsv_path;
  std::optional<std::string> breakdown;
  std::optional<std::string> crosstab;
  long long min_count = 0;
  std::size_t limit = 20;  // concordance lines printed
};

inline void print_error(std::ostream& err, const Error& e) {
  err << error_kind_name(e.kind()) << ": " << e.what();
  if (!e.detail().empty()) err << " (" << e.detail() << ")";
  err << '\n';
}

inline int cmd_query(const Dataset& ds, const QueryOptions& o, std::ostream& out, std::ostream& err) {
  try {
    auto spec = deql::compile(o.query, to_filters(o.filters), ds, o.exact);
    spec.case_sensitive = o.case_sensitive;
    spec.include_context = o.include_context;
    if (o.count_only) {
      out << engine::count(spec, ds) << '\n';
      return 0;
    }
    auto hits = engine::find(spec, ds);
    auto ids = stats::relation_ids(hits);
    if (!o.tsv_path.empty()) {
      std::ofstream tsv(o.tsv_path, std::ios::binary);
      if (!tsv) throw IoError("cannot write '" + o.tsv_path + "'");
      format::write_concordance_tsv(tsv, hits, ds);
    }
    if (o.breakdown) {
      auto row = stats::parse_variable(*o.breakdown);
      if (o.crosstab) {
        auto col = stats::parse_variable(*o.crosstab);
        if (stats::is_numerical(row) || stats::is_numerical(col)) {
          throw ValidationError("--crosstab on the command line takes two categorical variables", {});
        }
        format::write_crosstab_tsv(out, stats::crosstab(ids, std::get<stats::CategoricalVar>(row),
                                                        std::get<stats::CategoricalVar>(col), ds, {o.min_count, false}));
      } else if (auto num = std::get_if<stats::NumericalVar>(&row)) {
        std::vector<std::pair<std::string, stats::BoxSummary>> boxes;
        if (auto b = stats::box_summary(stats::numeric_values(ids, *num, ds))) boxes.emplace_back(*o.breakdown, *b);
        format::write_box_tsv(out, boxes);
      } else {
        format::write_freq_tsv(out, stats::frequencies(ids, std::get<stats::CategoricalVar>(row), ds));
      }
      return 0;
    }
    out << hits.size() << " hits\n";
    for (std::size_t i = 0; i < std::min(o.limit, hits.size()); ++i) {
      out << format::concordance_line(engine::highlight(hits[i], ds), ds) << '\n';
    }
    return 0;
  } catch (const Error& e) {
    print_error(err, e);
    return 2;
  }
}

/// One line of a benchmark query file: `<deql>[<TAB>filter]...` where a
/// filter is `key=value`, `!key=value` (negated) or `exact`. Keys: label,
/// orig_label, direction, signal_type, signal_subtype, any_signal
/// (present|absent).
struct BenchQuery {
  std::string text;
  deql::Filters filters;
  bool exact = false;
  std::string description;
};

inline BenchQuery parse_bench_line(const std::string& line, std::size_t line_no = 0) {
  auto cells = text::split(line, '\t');
  BenchQuery q;
  q.text = std::string(text::trim(cells[0]));
  std::vector<std::string> desc;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    auto item = std::string(text::trim(cells[i]));
    if (item.empty()) continue;
    desc.push_back(item);
    if (item == "exact") {
      q.exact = true;
      continue;
    }
    bool negated = item.front() == '!';
    if (negated) item.erase(0, 1);
    auto eq = item.find('=');
    if (eq == std::string::npos) throw FormatError("bad filter '" + std::string(cells[i]) + "'", "queries", line_no);
    auto key = item.substr(0, eq);
    auto value = item.substr(eq + 1);
    if (key == "label") q.filters.label = deql::LabelFilter{value, negated, deql::LabelKind::Disrpt};
    else if (key == "orig_label") q.filters.label = deql::LabelFilter{value, negated, deql::LabelKind::Orig};
    else if (key == "direction") q.filters.direction = deql::ValueFilter{value, negated};
    else if (key == "signal_type") q.filters.signal_type = deql::ValueFilter{value, negated};
    else if (key == "signal_subtype") q.filters.signal_subtype = deql::ValueFilter{value, negated};
    else if (key == "any_signal") {
      bool present = value == "present";
      if (!present && value != "absent") throw FormatError("any_signal must be present or absent", "queries", line_no);
      q.filters.any_signal = (present != negated) ? deql::SignalPresence::Present : deql::SignalPresence::Absent;
    } else {
      throw FormatError("unknown filter key '" + key + "'", "queries", line_no);
    }
  }
  q.description = text::join(desc, " ");
  return q;
}

inline std::vector<BenchQuery> parse_bench_file(std::istream& in) {
  std::vector<BenchQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    out.push_back(parse_bench_line(line, line_no));
  }
  return out;
}

/// Resident set size and its peak from /proc, in kB (0 when unavailable).
struct MemoryUsage {
  long rss_kb = 0;
  long peak_kb = 0;
};

inline MemoryUsage memory_usage() {
  MemoryUsage m;
  std::ifstream in("/proc/self/status");
  std::string key;
  while (in >> key) {
    if (key == "VmRSS:") in >> m.rss_kb;
    else if (key == "VmHWM:") in >> m.peak_kb;
    else in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  return m;
}

struct BenchRow {
  BenchQuery query;
  std::size_t hits = 0;
  double median_ms = 0, min_ms = 0, max_ms = 0;
};

struct BenchReport {
  double load_seconds = 0;
  long memory_delta_kb = 0;
  long peak_kb = 0;
  std::size_t relations = 0;
  std::size_t tokens = 0;
  std::vector<BenchRow> rows;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Times count() for each query `repetitions` times after a single load.
inline BenchReport run_bench(const ingest::DatasetSource& source, const std::vector<BenchQuery>& queries,
                             int repetitions) {
  BenchReport report;
  auto before = memory_usage();
  auto start = std::chrono::steady_clock::now();
  Dataset ds = ingest::load_dataset(source);
  report.load_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto after = memory_usage();
  report.memory_delta_kb = after.rss_kb - before.rss_kb;
  report.peak_kb = after.peak_kb;
  report.relations = ds.relations.size();
  report.tokens = ds.token_count();
  for (const auto& q : queries) {
    BenchRow row;
    row.query = q;
    auto spec = deql::compile(q.text, q.filters, ds, q.exact);
    std::vector<double> times;
    for (int i = 0; i < std::max(1, repetitions); ++i) {
      auto t0 = std::chrono::steady_clock::now();
      row.hits = engine::count(spec, ds);
      times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    row.median_ms = median(times);
    row.min_ms = *std::min_element(times.begin(), times.end());
    row.max_ms = *std::max_element(times.begin(), times.end());
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline void print_bench(const BenchReport& r, std::ostream& out) {
  out << "load\t" << format::fixed4(r.load_seconds) << "s\trelations " << r.relations << "\ttokens " << r.tokens
      << "\trss +" << format::fixed4(static_cast<double>(r.memory_delta_kb) / 1024.0) << " MB\tpeak "
      << format::fixed4(static_cast<double>(r.peak_kb) / 1024.0) << " MB\n";
  if (r.rows.empty()) return;
  out << "query\tfilters\thits\tmedian_ms\tmin_ms\tmax_ms\n";
  for (const auto& row : r.rows) {
    out << (row.query.text.empty() ? "\"\"" : row.query.text) << '\t' << row.query.description << '\t' << row.hits
        << '\t' << format::fixed4(row.median_ms) << '\t' << format::fixed4(row.min_ms) << '\t'
        << format::fixed4(row.max_ms) << '\n';
  }
}

}  // namespace discoexplorer::cli

#endif  // DISCOEXPLORER_CLI_HPP

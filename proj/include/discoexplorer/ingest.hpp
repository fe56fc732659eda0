#ifndef DISCOEXPLORER_INGEST_HPP
#define DISCOEXPLORER_INGEST_HPP

// Reading DISRPT .rels/.conllu data into a Dataset.
//
// Token indices in .rels files are 1-based and document-wide; everything
// is converted to 0-based document coordinates on the way in.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "discoexplorer/error.hpp"
#include "discoexplorer/model.hpp"
#include "discoexplorer/text.hpp"

namespace discoexplorer::ingest {

namespace detail {

inline std::optional<int> parse_positive(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value < 1) return std::nullopt;
  return value;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Parses a DISRPT range expression such as "5-8,12" (1-based, inclusive)
/// into a 0-based Span. Items that touch after sorting are merged; items
/// that overlap are rejected.
inline Span parse_range_expr(std::string_view expr, const std::string& source = {}, std::size_t line = 0) {
  auto fail = [&](const std::string& msg, std::size_t column) -> FormatError {
    return FormatError("range expression '" + std::string(expr) + "': " + msg, source, line, column);
  };
  if (text::trim(expr).empty()) throw fail("empty expression", 0);

  std::vector<TokenRange> items;
  std::size_t column = 1;
  for (auto item : text::split(expr, ',')) {
    auto trimmed = text::trim(item);
    auto dash = trimmed.find('-');
    std::optional<int> a, b;
    if (dash == std::string_view::npos) {
      a = b = detail::parse_positive(trimmed);
    } else {
      a = detail::parse_positive(trimmed.substr(0, dash));
      b = detail::parse_positive(trimmed.substr(dash + 1));
    }
    if (!a || !b) throw fail("malformed item '" + std::string(item) + "'", column);
    if (*b < *a) throw fail("reversed range '" + std::string(item) + "'", column);
    items.push_back({*a - 1, *b - 1});
    column += item.size() + 1;
  }
  std::sort(items.begin(), items.end(), [](const TokenRange& x, const TokenRange& y) { return x.start < y.start; });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].start <= items[i - 1].end) throw fail("overlapping items", 0);
  }
  return Span::from_ranges(std::move(items));
}

/// Inverse of parse_range_expr for normalized spans.
inline std::string format_range_expr(const Span& span) {
  std::string out;
  for (const auto& r : span.ranges()) {
    if (!out.empty()) out += ',';
    out += std::to_string(r.start + 1);
    if (r.end != r.start) out += '-' + std::to_string(r.end + 1);
  }
  return out;
}

/// Token data read from one or more .conllu files.
struct ConlluCorpus {
  std::vector<Document> documents;
  std::set<std::string> upos_vocab;
  std::set<std::string> deprel_vocab;
  std::set<std::string> lemma_vocab;
};

/// Appends the documents of a CoNLL-U stream to `corpus`. Tokens seen before
/// any `# newdoc id = X` comment go into an anonymous document with an empty
/// id. Multiword-token ranges and empty nodes are not indexed.
inline void read_conllu(std::istream& in, ConlluCorpus& corpus, const std::string& source = {}) {
  std::unordered_set<std::string> seen;
  for (const auto& d : corpus.documents) seen.insert(d.doc_id);

  Document* doc = nullptr;
  bool in_sentence = false;
  std::string line;
  std::size_t line_no = 0;

  auto start_document = [&](std::string id) {
    if (!seen.insert(id).second) throw FormatError("duplicate document id '" + id + "'", source, line_no);
    corpus.documents.push_back(Document{std::move(id), {}, {}});
    doc = &corpus.documents.back();
    in_sentence = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (text::trim(line).empty()) {
      in_sentence = false;
      continue;
    }
    if (line[0] == '#') {
      auto body = text::trim(std::string_view(line).substr(1));
      std::string_view id;
      if (text::starts_with(body, "newdoc id")) {
        id = body.substr(9);
      } else if (text::starts_with(body, "newdoc_id")) {
        id = body.substr(9);
      } else {
        continue;
      }
      id = text::trim(id);
      if (!id.empty() && id.front() == '=') id = text::trim(id.substr(1));
      start_document(std::string(id));
      continue;
    }

    auto cols = text::split(line, '\t');
    if (cols.size() != 10) {
      throw FormatError("expected 10 tab-separated columns, found " + std::to_string(cols.size()), source, line_no);
    }
    auto id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
    if (!detail::parse_positive(id)) throw FormatError("malformed token id '" + std::string(id) + "'", source, line_no, 1);

    if (doc == nullptr) start_document("");
    if (!in_sentence) {
      doc->sentence_starts.push_back(doc->size());
      in_sentence = true;
    }
    TokenRecord tok;
    tok.doc_id = doc->doc_id;
    tok.sent_index = doc->sentence_count() - 1;
    tok.tok_index_doc = doc->size();
    tok.form = std::string(cols[1]);
    tok.lemma = std::string(cols[2]);
    tok.upos = std::string(cols[3]);
    tok.deprel = std::string(cols[7]);
    corpus.upos_vocab.insert(tok.upos);
    corpus.deprel_vocab.insert(tok.deprel);
    corpus.lemma_vocab.insert(tok.lemma);
    doc->tokens.push_back(std::move(tok));
  }
  // Documents announced by a newdoc comment but holding no tokens are dropped.
  std::erase_if(corpus.documents, [](const Document& d) { return d.tokens.empty(); });
}

inline ConlluCorpus parse_conllu(std::istream& in, const std::string& source = {}) {
  ConlluCorpus corpus;
  read_conllu(in, corpus, source);
  return corpus;
}

inline ConlluCorpus parse_conllu(std::string_view content) {
  std::istringstream in{std::string(content)};
  return parse_conllu(in);
}

/// One data line of a .rels file, fields keyed by the DISRPT header names.
struct RelsRow {
  int ordinal = 0;
  std::size_t line = 0;
  std::string source;
  std::string doc;
  std::string unit1_toks;
  std::string unit2_toks;
  std::string unit1_txt;
  std::string unit2_txt;
  std::string s1_toks;
  std::string s2_toks;
  std::string unit1_sent;
  std::string unit2_sent;
  std::string dir;
  std::string orig_label;
  std::string label;
  std::optional<std::string> signals;
  std::map<std::string, std::string> metadata;
};

struct RelsTable {
  std::vector<std::string> header;
  bool has_signals = false;
  std::vector<RelsRow> rows;
};

/// Reads a header-driven .rels table. Column order is free; unknown columns
/// are kept as per-row metadata under their header name.
inline void read_rels(std::istream& in, RelsTable& table, const std::string& source = {}) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return;
  ++line_no;
  detail::strip_cr(line);
  if (!line.empty() && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  std::vector<std::string> header;
  for (auto h : text::split(line, '\t')) header.push_back(text::ascii_lower(text::trim(h)));
  for (const char* required : {"doc", "unit1_toks", "unit2_toks", "dir", "label"}) {
    if (std::find(header.begin(), header.end(), required) == header.end()) {
      throw FormatError(std::string("missing required column '") + required + "'", source, 1);
    }
  }
  bool has_signals = std::find(header.begin(), header.end(), "signals") != header.end();
  bool has_orig = std::find(header.begin(), header.end(), "orig_label") != header.end();
  table.has_signals = table.has_signals || has_signals;
  if (table.header.empty()) table.header = header;

  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line, '\t');
    if (cells.size() != header.size()) {
      throw FormatError("row has " + std::to_string(cells.size()) + " columns, header has " +
                            std::to_string(header.size()),
                        source, line_no);
    }
    RelsRow row;
    row.ordinal = static_cast<int>(table.rows.size());
    row.line = line_no;
    row.source = source;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& name = header[i];
      std::string value(cells[i]);
      if (name == "doc") row.doc = value;
      else if (name == "unit1_toks") row.unit1_toks = value;
      else if (name == "unit2_toks") row.unit2_toks = value;
      else if (name == "unit1_txt") row.unit1_txt = value;
      else if (name == "unit2_txt") row.unit2_txt = value;
      else if (name == "s1_toks") row.s1_toks = value;
      else if (name == "s2_toks") row.s2_toks = value;
      else if (name == "unit1_sent") row.unit1_sent = value;
      else if (name == "unit2_sent") row.unit2_sent = value;
      else if (name == "dir") row.dir = value;
      else if (name == "orig_label") row.orig_label = value;
      else if (name == "label") row.label = value;
      else if (name == "signals") row.signals = value;
      else row.metadata[name] = value;
    }
    if (!parse_direction(row.dir)) {
      throw FormatError("unknown direction '" + row.dir + "' (expected 1>2 or 1<2)", source, line_no);
    }
    if (!has_orig) row.orig_label = row.label;
    table.rows.push_back(std::move(row));
  }
}

inline RelsTable parse_rels(std::istream& in, const std::string& source = {}) {
  RelsTable table;
  read_rels(in, table, source);
  return table;
}

inline RelsTable parse_rels(std::string_view content) {
  std::istringstream in{std::string(content)};
  return parse_rels(in);
}

/// Parses the `signals` cell: `type;subtype;positions` entries separated by
/// `|`, positions being comma-separated 1-based document token indices (or
/// ranges). "" and "_" mean no signals; an empty or "_" subtype is absent.
inline std::vector<Signal> parse_signals(std::string_view cell, const std::string& source = {}, std::size_t line = 0) {
  std::vector<Signal> out;
  cell = text::trim(cell);
  if (cell.empty() || cell == "_") return out;
  for (auto entry : text::split(cell, '|')) {
    auto fields = text::split(entry, ';');
    if (fields.size() != 3) {
      throw FormatError("signal descriptor '" + std::string(entry) + "' must have the form type;subtype;positions",
                        source, line);
    }
    Signal sig;
    sig.sig_type = std::string(text::trim(fields[0]));
    if (sig.sig_type.empty()) throw FormatError("signal descriptor with empty type", source, line);
    auto subtype = text::trim(fields[1]);
    if (!subtype.empty() && subtype != "_") sig.sig_subtype = std::string(subtype);
    auto positions = text::trim(fields[2]);
    if (!positions.empty() && positions != "_") sig.token_positions = parse_range_expr(positions, source, line).positions();
    out.push_back(std::move(sig));
  }
  return out;
}

/// Genre from `<corpus>_<genre>_<name>` document ids (GUM convention).
inline std::optional<std::string> genre_from_doc_id(std::string_view doc_id) {
  auto parts = text::split(doc_id, '_');
  if (parts.size() < 3 || parts[1].empty()) return std::nullopt;
  return std::string(parts[1]);
}

struct BuildOptions {
  bool strict = true;  // false: skip misaligned rows with a warning
};

/// Aligns relation rows to token data and computes contexts, signals and
/// inventories. Rows whose units are listed in reverse text order are
/// swapped so that arg1 precedes arg2; the direction is rewritten so the
/// same unit stays the source.
inline Dataset build_dataset(const RelsTable& rels, ConlluCorpus tokens, const std::string& dataset_id,
                             const BuildOptions& options = {}, std::vector<std::string>* warnings = nullptr) {
  Dataset ds;
  ds.dataset_id = dataset_id;
  ds.documents = std::move(tokens.documents);
  ds.upos_vocab = std::move(tokens.upos_vocab);
  ds.deprel_vocab = std::move(tokens.deprel_vocab);
  ds.lemma_vocab = std::move(tokens.lemma_vocab);
  ds.has_signals = rels.has_signals;
  for (std::size_t i = 0; i < ds.documents.size(); ++i) ds.doc_lookup[ds.documents[i].doc_id] = static_cast<int>(i);

  std::set<std::string> referenced;
  for (const auto& row : rels.rows) referenced.insert(row.doc);
  auto anonymous = ds.doc_lookup.find("");
  if (anonymous != ds.doc_lookup.end()) {
    if (referenced.size() > 1) {
      throw AlignmentError("token data has no '# newdoc id' comments but relations reference " +
                           std::to_string(referenced.size()) + " documents");
    }
    if (referenced.size() == 1 && ds.documents.size() == 1) {
      auto& doc = ds.documents.front();
      doc.doc_id = *referenced.begin();
      for (auto& t : doc.tokens) t.doc_id = doc.doc_id;
      ds.doc_lookup.clear();
      ds.doc_lookup[doc.doc_id] = 0;
    }
  }

  for (const auto& row : rels.rows) {
    auto where = "relation " + std::to_string(row.ordinal) + " (doc '" + row.doc + "', " + row.source + " line " +
                 std::to_string(row.line) + ")";
    try {
      auto doc_it = ds.doc_lookup.find(row.doc);
      if (doc_it == ds.doc_lookup.end()) throw AlignmentError(where + ": unknown document", row.doc);
      const Document& doc = ds.documents[static_cast<std::size_t>(doc_it->second)];

      Span unit1 = parse_range_expr(row.unit1_toks, row.source, row.line);
      Span unit2 = parse_range_expr(row.unit2_toks, row.source, row.line);
      for (const Span* u : {&unit1, &unit2}) {
        if (u->last() >= doc.size()) {
          throw AlignmentError(where + ": token " + std::to_string(u->last() + 1) + " beyond document length " +
                                   std::to_string(doc.size()),
                               row.doc);
        }
      }
      if (unit1.intersects(unit2)) throw AlignmentError(where + ": units overlap", row.doc);

      Relation rel;
      rel.ordinal = static_cast<int>(ds.relations.size());
      rel.rel_id = dataset_id + ":" + std::to_string(row.ordinal);
      rel.doc = doc_it->second;
      rel.doc_id = row.doc;
      auto dir = *parse_direction(row.dir);
      if (unit1.first() < unit2.first()) {
        rel.arg1 = std::move(unit1);
        rel.arg2 = std::move(unit2);
        rel.direction = dir;
      } else {
        rel.arg1 = std::move(unit2);
        rel.arg2 = std::move(unit1);
        rel.direction = dir == Direction::OneToTwo ? Direction::TwoToOne : Direction::OneToTwo;
      }
      rel.disrpt_label = row.label;
      rel.orig_label = row.orig_label;
      rel.metadata = row.metadata;
      if (!rel.metadata.count("genre")) {
        if (auto genre = genre_from_doc_id(row.doc)) rel.metadata["genre"] = *genre;
      }

      if (row.signals) {
        rel.signals = parse_signals(*row.signals, row.source, row.line);
        for (const auto& sig : rel.signals) {
          if (!sig.token_positions.empty() && sig.token_positions.back() >= doc.size()) {
            throw AlignmentError(where + ": signal token beyond document length", row.doc);
          }
        }
      }

      Span args = span_union(rel.arg1, rel.arg2);
      Span window = relation_sentence_window(rel, ds);
      std::vector<int> pre, inter, post;
      for (int p : window.positions()) {
        if (p < args.first()) {
          pre.push_back(p);
        } else if (p > args.last()) {
          post.push_back(p);
        } else if (!args.contains(p)) {
          inter.push_back(p);
        }
      }
      rel.pre_ctx = Span::from_positions(pre);
      rel.inter_ctx = Span::from_positions(inter);
      rel.post_ctx = Span::from_positions(post);

      ds.disrpt_labels.insert(rel.disrpt_label);
      ds.orig_labels.insert(rel.orig_label);
      for (const auto& sig : rel.signals) {
        ds.signal_types.insert(sig.sig_type);
        if (sig.sig_subtype) ds.signal_subtypes.insert(*sig.sig_subtype);
      }
      for (const auto& [k, v] : rel.metadata) ds.metadata_keys.insert(k);
      ds.relations.push_back(std::move(rel));
    } catch (const Error& e) {
      if (options.strict || e.kind() != ErrorKind::Alignment) throw;
      if (warnings) warnings->push_back(e.what());
    }
  }
  build_index(ds);
  return ds;
}

/// Where to find one dataset's files.
struct DatasetSource {
  std::string dataset_id;
  std::vector<std::string> rels_paths;
  std::vector<std::string> conllu_paths;
  std::map<std::string, std::string> display;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

/// Reads every file of `source` and builds the dataset.
inline Dataset load_dataset(const DatasetSource& source, const BuildOptions& options = {},
                            std::vector<std::string>* warnings = nullptr) {
  ConlluCorpus corpus;
  for (const auto& path : source.conllu_paths) {
    auto in = open_input(path);
    read_conllu(in, corpus, path);
  }
  RelsTable rels;
  for (const auto& path : source.rels_paths) {
    auto in = open_input(path);
    read_rels(in, rels, path);
  }
  Dataset ds = build_dataset(rels, std::move(corpus), source.dataset_id, options, warnings);
  ds.display = source.display;
  return ds;
}

}  // namespace discoexplorer::ingest

#endif  // DISCOEXPLORER_INGEST_HPP

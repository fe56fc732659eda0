#ifndef DISCOEXPLORER_DEQL_HPP
#define DISCOEXPLORER_DEQL_HPP

// DEQL: whitespace-separated token patterns with at most one span operator.
//
//   if then                 both anywhere in the two arguments
//   if || then              `if` in arg1, `then` in arg2 (text order)
//   if -||> then            `if` in the source, `then` in the target
//   to|PART |VERB|advcl     word|lemma|pos|deprel, keys inferred when fewer than 4 fields

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "discoexplorer/error.hpp"
#include "discoexplorer/model.hpp"
#include "discoexplorer/text.hpp"

namespace discoexplorer::deql {

enum class SegmentKind { Pattern, ArgOrder, SourceTarget };

struct Segment {
  SegmentKind kind = SegmentKind::Pattern;
  std::string text;
  std::size_t offset = 0;

  bool operator==(const Segment&) const = default;
};

inline constexpr std::string_view kArgOrderOp = "||";
inline constexpr std::string_view kSourceTargetOp = "-||>";

/// Splits a query on whitespace runs. Only whitespace-delimited `||` and
/// `-||>` are operators.
inline std::vector<Segment> tokenize(std::string_view query) {
  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < query.size()) {
    while (i < query.size() && text::is_space(query[i])) ++i;
    if (i >= query.size()) break;
    std::size_t start = i;
    while (i < query.size() && !text::is_space(query[i])) ++i;
    auto word = query.substr(start, i - start);
    SegmentKind kind = SegmentKind::Pattern;
    if (word == kArgOrderOp) kind = SegmentKind::ArgOrder;
    else if (word == kSourceTargetOp) kind = SegmentKind::SourceTarget;
    out.push_back({kind, std::string(word), start});
  }
  return out;
}

struct TokenPattern {
  std::optional<std::string> form;
  std::optional<std::string> lemma;
  std::optional<std::string> upos;
  std::optional<std::string> deprel;

  bool empty() const { return !form && !lemma && !upos && !deprel; }
  bool operator==(const TokenPattern&) const = default;
};

/// Closed vocabularies used to infer the key of a pattern field.
struct Vocabulary {
  const std::set<std::string>* upos = nullptr;
  const std::set<std::string>* deprel = nullptr;

  static Vocabulary of(const Dataset& ds) { return {&ds.upos_vocab, &ds.deprel_vocab}; }

  bool is_upos(const std::string& v) const { return upos && upos->count(v); }

  /// Exact deprel, the base of a subtyped one (`advcl` for `advcl:relcl`), or
  /// a subtype of a known base.
  bool is_deprel(const std::string& v) const {
    if (!deprel) return false;
    if (deprel->count(v)) return true;
    if (auto colon = v.find(':'); colon != std::string::npos && colon > 0 && deprel->count(v.substr(0, colon))) return true;
    auto it = deprel->lower_bound(v + ":");
    return it != deprel->end() && text::starts_with(*it, v + ":");
  }
};

/// Universal Dependencies v2 UPOS tags and deprels.
inline const std::set<std::string>& ud_upos() {
  static const std::set<std::string> tags = {"ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
                                             "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};
  return tags;
}

inline const std::set<std::string>& ud_deprels() {
  static const std::set<std::string> rels = {
      "acl",  "advcl",      "advmod", "amod",  "appos",   "aux",       "case",   "cc",   "ccomp", "clf",
      "compound", "conj",   "cop",    "csubj", "dep",     "det",       "discourse", "dislocated", "expl",
      "fixed", "flat",      "goeswith", "iobj", "list",   "mark",      "nmod",   "nsubj", "nummod", "obj",
      "obl",  "orphan",     "parataxis", "punct", "reparandum", "root", "vocative", "xcomp"};
  return rels;
}

inline Vocabulary ud_vocabulary() { return {&ud_upos(), &ud_deprels()}; }

/// Turns one raw segment into a pattern. Four `|`-separated fields are
/// positional (word|lemma|pos|deprel); otherwise the first field is the word
/// form and later fields are classified as POS, deprel or lemma by vocabulary.
inline TokenPattern resolve_pattern(std::string_view segment, const Vocabulary& vocab, std::size_t offset = 0) {
  auto fields = text::split(segment, '|');
  TokenPattern pat;
  if (fields.size() > 4) {
    throw ParseError("pattern '" + std::string(segment) + "' has more than 4 fields", offset);
  }
  auto opt = [](std::string_view s) -> std::optional<std::string> {
    if (s.empty()) return std::nullopt;
    return std::string(s);
  };
  if (fields.size() == 4) {
    pat = {opt(fields[0]), opt(fields[1]), opt(fields[2]), opt(fields[3])};
  } else {
    pat.form = opt(fields[0]);
    std::size_t field_offset = offset + fields[0].size() + 1;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      std::string value(fields[i]);
      auto here = field_offset;
      field_offset += value.size() + 1;
      if (value.empty()) continue;
      bool upos = vocab.is_upos(value);
      bool deprel = vocab.is_deprel(value);
      if (upos && deprel) {
        throw ParseError("'" + value + "' is both a POS tag and a dependency relation", here);
      }
      auto& slot = upos ? pat.upos : deprel ? pat.deprel : pat.lemma;
      if (slot) {
        const char* key = upos ? "POS tag" : deprel ? "dependency relation" : "lemma";
        throw ParseError("'" + value + "' conflicts with an earlier " + std::string(key) + " in '" +
                             std::string(segment) + "'",
                         here);
      }
      slot = value;
    }
  }
  if (pat.empty()) throw ParseError("empty token pattern '" + std::string(segment) + "'", offset);
  return pat;
}

enum class QueryOp { None, ArgOrder, SourceTarget };

struct QueryAst {
  std::vector<TokenPattern> left_patterns;
  QueryOp op = QueryOp::None;
  std::vector<TokenPattern> right_patterns;

  bool operator==(const QueryAst&) const = default;
};

inline QueryAst parse(std::string_view query, const Vocabulary& vocab) {
  QueryAst ast;
  std::optional<Segment> op_segment;
  for (auto& seg : tokenize(query)) {
    if (seg.kind != SegmentKind::Pattern) {
      if (op_segment) {
        throw ParseError("multiple operators: '" + op_segment->text + "' and '" + seg.text +
                             "' (a query may contain at most one)",
                         seg.offset);
      }
      ast.op = seg.kind == SegmentKind::ArgOrder ? QueryOp::ArgOrder : QueryOp::SourceTarget;
      op_segment = std::move(seg);
      continue;
    }
    auto pat = resolve_pattern(seg.text, vocab, seg.offset);
    (op_segment ? ast.right_patterns : ast.left_patterns).push_back(std::move(pat));
  }
  if (ast.op == QueryOp::ArgOrder && (ast.left_patterns.empty() || ast.right_patterns.empty())) {
    throw ParseError("'||' needs patterns on both sides", op_segment->offset);
  }
  return ast;
}

/// Canonical text form: every pattern in positional 4-field form, so that
/// parse(render(ast)) == ast under any vocabulary.
inline std::string render(const TokenPattern& pat) {
  auto v = [](const std::optional<std::string>& s) { return s.value_or(""); };
  return v(pat.form) + "|" + v(pat.lemma) + "|" + v(pat.upos) + "|" + v(pat.deprel);
}

inline std::string render(const QueryAst& ast) {
  std::vector<std::string> parts;
  for (const auto& p : ast.left_patterns) parts.push_back(render(p));
  if (ast.op == QueryOp::ArgOrder) parts.emplace_back(kArgOrderOp);
  if (ast.op == QueryOp::SourceTarget) parts.emplace_back(kSourceTargetOp);
  for (const auto& p : ast.right_patterns) parts.push_back(render(p));
  return text::join(parts, " ");
}

enum class LabelKind { Disrpt, Orig };

struct LabelFilter {
  std::string value;
  bool negated = false;
  LabelKind which = LabelKind::Disrpt;

  bool operator==(const LabelFilter&) const = default;
};

struct ValueFilter {
  std::string value;
  bool negated = false;

  bool operator==(const ValueFilter&) const = default;
};

enum class SignalPresence { Present, Absent };

/// Relation-level filters chosen outside the query string.
struct Filters {
  std::optional<LabelFilter> label;
  std::optional<ValueFilter> direction;
  std::optional<ValueFilter> signal_type;
  std::optional<ValueFilter> signal_subtype;
  std::optional<SignalPresence> any_signal;

  bool operator==(const Filters&) const = default;
};

/// A compiled, validated search request.
struct QuerySpec {
  std::string text;
  QueryAst ast;
  bool exact = false;
  bool case_sensitive = false;
  bool include_context = false;
  std::string dataset_id;
  Filters filters;
};

namespace detail {

inline void check_member(const std::string& what, const std::string& value, const std::set<std::string>& allowed) {
  if (!allowed.count(value)) {
    throw ValidationError("invalid " + what + " '" + value + "'",
                          std::vector<std::string>(allowed.begin(), allowed.end()));
  }
}

}  // namespace detail

/// Rejects filter values absent from the dataset inventories.
inline void validate(const Filters& f, const Dataset& ds) {
  if (f.label) {
    if (f.label->which == LabelKind::Disrpt) detail::check_member("label", f.label->value, ds.disrpt_labels);
    else detail::check_member("original label", f.label->value, ds.orig_labels);
  }
  if (f.direction) detail::check_member("direction", f.direction->value, {"1<2", "1>2"});
  if (f.signal_type) detail::check_member("signal type", f.signal_type->value, ds.signal_types);
  if (f.signal_subtype) detail::check_member("signal subtype", f.signal_subtype->value, ds.signal_subtypes);
}

/// Parses `query` against the dataset's vocabularies. With `validate_filters`
/// off, filter values unknown to this dataset simply match nothing.
inline QuerySpec compile(std::string query, Filters filters, const Dataset& ds, bool exact = false,
                         bool validate_filters = true) {
  QuerySpec spec;
  spec.ast = parse(query, Vocabulary::of(ds));
  spec.text = std::move(query);
  spec.exact = exact;
  spec.dataset_id = ds.dataset_id;
  if (validate_filters) {
    validate(filters, ds);
  } else if (filters.direction) {
    detail::check_member("direction", filters.direction->value, {"1<2", "1>2"});
  }
  spec.filters = std::move(filters);
  return spec;
}

}  // namespace discoexplorer::deql

#endif  // DISCOEXPLORER_DEQL_HPP

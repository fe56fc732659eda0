#ifndef DISCOEXPLORER_ENGINE_HPP
#define DISCOEXPLORER_ENGINE_HPP

// Query evaluation over an in-memory Dataset.
//
// Scoping rules:
//   no operator   patterns match inside arg1 ∪ arg2; flexible mode assigns
//                 them to distinct tokens in any order, exact mode needs a
//                 contiguous run inside one argument
//   ||            left side in arg1, right side in arg2
//   -||>          left side in the source, right side in the target
// Inside one side, flexible matching keeps pattern order; exact matching
// requires adjacency within one range of the span.

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "discoexplorer/deql.hpp"
#include "discoexplorer/model.hpp"
#include "discoexplorer/text.hpp"

namespace discoexplorer::engine {

using deql::QueryOp;
using deql::QuerySpec;
using deql::TokenPattern;

/// Pattern with form and lemma pre-folded for case-insensitive comparison.
struct CompiledPattern {
  std::optional<std::string> form;
  std::optional<std::string> lemma;
  std::optional<std::string> upos;
  std::optional<std::string> deprel;
  bool case_sensitive = false;

  explicit CompiledPattern(const TokenPattern& pat, bool case_sensitive_ = false)
      : upos(pat.upos), deprel(pat.deprel), case_sensitive(case_sensitive_) {
    if (pat.form) form = case_sensitive ? *pat.form : text::fold_case(*pat.form);
    if (pat.lemma) lemma = case_sensitive ? *pat.lemma : text::fold_case(*pat.lemma);
  }

  bool matches(const TokenRecord& tok) const {
    if (upos && tok.upos != *upos) return false;
    if (deprel && !deprel_matches(tok.deprel, *deprel)) return false;
    if (form && !text_matches(tok.form, *form)) return false;
    if (lemma && !text_matches(tok.lemma, *lemma)) return false;
    return true;
  }

  /// `advcl` accepts `advcl:relcl`; a subtyped pattern needs the exact label.
  static bool deprel_matches(const std::string& actual, const std::string& wanted) {
    if (actual == wanted) return true;
    return actual.size() > wanted.size() && actual[wanted.size()] == ':' && text::starts_with(actual, wanted);
  }

 private:
  bool text_matches(const std::string& actual, const std::string& wanted) const {
    return case_sensitive ? actual == wanted : text::folded_equals(actual, wanted);
  }
};

inline bool match_pattern(const TokenRecord& tok, const TokenPattern& pat, bool case_sensitive = false) {
  return CompiledPattern(pat, case_sensitive).matches(tok);
}

inline std::vector<CompiledPattern> compile_patterns(const std::vector<TokenPattern>& patterns, bool case_sensitive) {
  std::vector<CompiledPattern> out;
  out.reserve(patterns.size());
  for (const auto& p : patterns) out.emplace_back(p, case_sensitive);
  return out;
}

namespace detail {

inline const TokenRecord& token_at(const Document& doc, int pos) { return doc.tokens[static_cast<std::size_t>(pos)]; }

/// Leftmost order-respecting assignment: p1 < p2 < ... with pattern j on p_j.
inline std::optional<std::vector<int>> match_ordered(const std::vector<CompiledPattern>& patterns, const Span& scope,
                                                     const Document& doc) {
  std::vector<int> out;
  out.reserve(patterns.size());
  std::size_t j = 0;
  for (const auto& r : scope.ranges()) {
    for (int p = r.start; p <= r.end && j < patterns.size(); ++p) {
      if (patterns[j].matches(token_at(doc, p))) {
        out.push_back(p);
        ++j;
      }
    }
    if (j == patterns.size()) return out;
  }
  return std::nullopt;
}

/// Leftmost contiguous run inside a single range of `scope`.
inline std::optional<std::vector<int>> match_contiguous(const std::vector<CompiledPattern>& patterns,
                                                        const Span& scope, const Document& doc) {
  const int k = static_cast<int>(patterns.size());
  for (const auto& r : scope.ranges()) {
    for (int start = r.start; start + k - 1 <= r.end; ++start) {
      bool ok = true;
      for (int j = 0; j < k && ok; ++j) ok = patterns[static_cast<std::size_t>(j)].matches(token_at(doc, start + j));
      if (ok) {
        std::vector<int> out(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) out[static_cast<std::size_t>(j)] = start + j;
        return out;
      }
    }
  }
  return std::nullopt;
}

/// Assigns every pattern a distinct token of `scope`, in any order
/// (bipartite matching by augmenting paths). Positions come back in pattern order.
inline std::optional<std::vector<int>> match_unordered(const std::vector<CompiledPattern>& patterns,
                                                       const Span& scope, const Document& doc) {
  const std::size_t k = patterns.size();
  std::vector<std::vector<int>> candidates(k);
  for (const auto& r : scope.ranges()) {
    for (int p = r.start; p <= r.end; ++p) {
      for (std::size_t j = 0; j < k; ++j) {
        if (patterns[j].matches(token_at(doc, p))) candidates[j].push_back(p);
      }
    }
  }
  for (const auto& c : candidates) {
    if (c.empty()) return std::nullopt;
  }
  std::vector<int> owner_pos;      // matched positions
  std::vector<std::size_t> owner;  // pattern owning owner_pos[i]
  std::vector<int> assigned(k, -1);

  auto find_owner = [&](int pos) -> int {
    for (std::size_t i = 0; i < owner_pos.size(); ++i) {
      if (owner_pos[i] == pos) return static_cast<int>(i);
    }
    return -1;
  };
  std::vector<char> visited;
  auto augment = [&](auto&& self, std::size_t j) -> bool {
    for (int pos : candidates[j]) {
      int slot = find_owner(pos);
      if (slot >= 0) {
        if (visited[static_cast<std::size_t>(slot)]) continue;
        visited[static_cast<std::size_t>(slot)] = 1;
        std::size_t other = owner[static_cast<std::size_t>(slot)];
        if (self(self, other)) {
          owner[static_cast<std::size_t>(slot)] = j;
          assigned[j] = pos;
          return true;
        }
      } else {
        owner_pos.push_back(pos);
        owner.push_back(j);
        visited.push_back(0);
        assigned[j] = pos;
        return true;
      }
    }
    return false;
  };
  for (std::size_t j = 0; j < k; ++j) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(augment, j)) return std::nullopt;
  }
  return assigned;
}

}  // namespace detail

/// Matches one side of a query inside `scope`. Returns the leftmost
/// assignment, or nothing. Empty `patterns` trivially match.
inline std::optional<std::vector<int>> match_side(const std::vector<CompiledPattern>& patterns, const Span& scope,
                                                  bool exact, const Document& doc) {
  if (patterns.empty()) return std::vector<int>{};
  return exact ? detail::match_contiguous(patterns, scope, doc) : detail::match_ordered(patterns, scope, doc);
}

inline std::optional<std::vector<int>> match_side(const std::vector<TokenPattern>& patterns, const Span& scope,
                                                  bool exact, const Dataset& ds, const std::string& doc_id,
                                                  bool case_sensitive = false) {
  return match_side(compile_patterns(patterns, case_sensitive), scope, exact, ds.document(doc_id));
}

/// Relation-level filter check, including negations.
inline bool passes_filters(const Relation& rel, const deql::Filters& f) {
  if (f.label) {
    const auto& actual = f.label->which == deql::LabelKind::Disrpt ? rel.disrpt_label : rel.orig_label;
    if ((actual == f.label->value) == f.label->negated) return false;
  }
  if (f.direction) {
    if ((f.direction->value == direction_name(rel.direction)) == f.direction->negated) return false;
  }
  if (f.signal_type) {
    bool any = std::any_of(rel.signals.begin(), rel.signals.end(),
                           [&](const Signal& s) { return s.sig_type == f.signal_type->value; });
    if (any == f.signal_type->negated) return false;
  }
  if (f.signal_subtype) {
    bool any = std::any_of(rel.signals.begin(), rel.signals.end(),
                           [&](const Signal& s) { return s.sig_subtype == f.signal_subtype->value; });
    if (any == f.signal_subtype->negated) return false;
  }
  if (f.any_signal) {
    bool present = !rel.signals.empty();
    if (present != (*f.any_signal == deql::SignalPresence::Present)) return false;
  }
  return true;
}

/// A relation that satisfied a query, before highlighting.
struct Hit {
  int relation = 0;             // Relation::ordinal
  std::vector<int> positions;   // sorted matched token positions

  bool operator==(const Hit&) const = default;
};

/// A query compiled against one dataset; reusable for many relations.
class Matcher {
 public:
  Matcher(const QuerySpec& spec, const Dataset& ds)
      : spec_(spec),
        ds_(ds),
        left_(compile_patterns(spec.ast.left_patterns, spec.case_sensitive)),
        right_(compile_patterns(spec.ast.right_patterns, spec.case_sensitive)) {}

  /// Matched positions when `rel` satisfies both the filters and the patterns.
  std::optional<std::vector<int>> match(const Relation& rel) const {
    if (!passes_filters(rel, spec_.filters)) return std::nullopt;
    return match_patterns(rel);
  }

  std::optional<std::vector<int>> match_patterns(const Relation& rel) const {
    const Document& doc = ds_.document_of(rel);
    std::optional<std::vector<int>> out;
    switch (spec_.ast.op) {
      case QueryOp::None: out = match_free(rel, doc); break;
      case QueryOp::ArgOrder: out = match_pair(rel.arg1, rel.arg2, doc); break;
      case QueryOp::SourceTarget: out = match_pair(rel.source(), rel.target(), doc); break;
    }
    if (out) std::sort(out->begin(), out->end());
    return out;
  }

  /// Relations worth testing, in corpus order. Uses the label index for a
  /// positive label filter and the form/lemma postings of the most selective
  /// pattern to skip relations that cannot match.
  std::vector<int> candidates() const {
    std::vector<int> base;
    const auto& f = spec_.filters;
    bool all = true;
    if (f.label && !f.label->negated) {
      const auto& table = f.label->which == deql::LabelKind::Disrpt ? ds_.index.by_label : ds_.index.by_orig_label;
      auto it = table.find(f.label->value);
      if (it == table.end()) return {};
      base = it->second;
      all = false;
    }
    const std::vector<Posting>* anchor = nullptr;
    bool impossible = false;
    for (const auto* side : {&spec_.ast.left_patterns, &spec_.ast.right_patterns}) {
      for (const auto& pat : *side) {
        for (const auto& [value, table] : {std::pair{&pat.form, &ds_.index.forms}, std::pair{&pat.lemma, &ds_.index.lemmas}}) {
          if (!*value) continue;
          auto it = table->find(text::fold_case(**value));
          if (it == table->end()) {
            impossible = true;
          } else if (!anchor || it->second.size() < anchor->size()) {
            anchor = &it->second;
          }
        }
      }
    }
    if (impossible) return {};
    if (all) {
      base.resize(ds_.relations.size());
      for (std::size_t i = 0; i < base.size(); ++i) base[i] = static_cast<int>(i);
    }
    if (!anchor) return base;
    std::vector<int> out;
    out.reserve(base.size());
    for (int r : base) {
      const Relation& rel = ds_.relations[static_cast<std::size_t>(r)];
      auto [lo, hi] = bounds(rel);
      auto it = std::lower_bound(anchor->begin(), anchor->end(), Posting{rel.doc, lo});
      if (it != anchor->end() && it->doc == rel.doc && it->pos <= hi) out.push_back(r);
    }
    return out;
  }

 private:
  std::pair<int, int> bounds(const Relation& rel) const {
    int lo = rel.arg1.first();
    int hi = std::max(rel.arg1.last(), rel.arg2.last());
    if (spec_.include_context) {
      if (!rel.pre_ctx.empty()) lo = rel.pre_ctx.first();
      if (!rel.post_ctx.empty()) hi = std::max(hi, rel.post_ctx.last());
    }
    return {lo, hi};
  }

  std::optional<std::vector<int>> match_free(const Relation& rel, const Document& doc) const {
    if (left_.empty()) return std::vector<int>{};
    if (spec_.include_context) {
      Span scope = span_union(span_union(rel.arg1, rel.arg2),
                              span_union(rel.pre_ctx, span_union(rel.inter_ctx, rel.post_ctx)));
      return spec_.exact ? detail::match_contiguous(left_, scope, doc) : detail::match_unordered(left_, scope, doc);
    }
    if (!spec_.exact) return detail::match_unordered(left_, span_union(rel.arg1, rel.arg2), doc);
    auto a = detail::match_contiguous(left_, rel.arg1, doc);
    auto b = detail::match_contiguous(left_, rel.arg2, doc);
    if (a && b) return (a->front() <= b->front()) ? a : b;
    return a ? a : b;
  }

  std::optional<std::vector<int>> match_pair(const Span& first, const Span& second, const Document& doc) const {
    auto l = match_side(left_, first, spec_.exact, doc);
    if (!l) return std::nullopt;
    auto r = match_side(right_, second, spec_.exact, doc);
    if (!r) return std::nullopt;
    l->insert(l->end(), r->begin(), r->end());
    return l;
  }

  const QuerySpec& spec_;
  const Dataset& ds_;
  std::vector<CompiledPattern> left_;
  std::vector<CompiledPattern> right_;
};

/// All hits in corpus order, without highlight roles.
inline std::vector<Hit> find(const QuerySpec& spec, const Dataset& ds) {
  Matcher matcher(spec, ds);
  std::vector<Hit> hits;
  for (int r : matcher.candidates()) {
    if (auto pos = matcher.match(ds.relations[static_cast<std::size_t>(r)])) hits.push_back({r, std::move(*pos)});
  }
  return hits;
}

inline std::size_t count(const QuerySpec& spec, const Dataset& ds) {
  Matcher matcher(spec, ds);
  std::size_t n = 0;
  for (int r : matcher.candidates()) {
    if (matcher.match(ds.relations[static_cast<std::size_t>(r)])) ++n;
  }
  return n;
}

enum class Region { Pre, Arg1, Inter, Arg2, Post, Outside };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Pre: return "pre";
    case Region::Arg1: return "arg1";
    case Region::Inter: return "inter";
    case Region::Arg2: return "arg2";
    case Region::Post: return "post";
    case Region::Outside: return "outside";
  }
  return "outside";
}

/// Display role of one token of a hit.
struct TokenRole {
  int position = 0;
  Region region = Region::Outside;
  bool query_match = false;
  std::vector<std::string> signal_types;  // types of this relation's signals covering the token

  bool operator==(const TokenRole&) const = default;
};

struct Match {
  int relation = 0;
  std::string rel_id;
  std::vector<int> matched_token_positions;
  std::vector<TokenRole> highlight_roles;  // sentence window plus any signal tokens, in text order

  bool operator==(const Match&) const = default;
};

inline Region region_of(const Relation& rel, int pos) {
  if (rel.arg1.contains(pos)) return Region::Arg1;
  if (rel.arg2.contains(pos)) return Region::Arg2;
  if (rel.pre_ctx.contains(pos)) return Region::Pre;
  if (rel.inter_ctx.contains(pos)) return Region::Inter;
  if (rel.post_ctx.contains(pos)) return Region::Post;
  return Region::Outside;
}

inline Match highlight(const Hit& hit, const Dataset& ds) {
  const Relation& rel = ds.relations[static_cast<std::size_t>(hit.relation)];
  Match m;
  m.relation = hit.relation;
  m.rel_id = rel.rel_id;
  m.matched_token_positions = hit.positions;

  std::vector<int> positions = relation_sentence_window(rel, ds).positions();
  for (const auto& sig : rel.signals) positions.insert(positions.end(), sig.token_positions.begin(), sig.token_positions.end());
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());

  m.highlight_roles.reserve(positions.size());
  for (int p : positions) {
    TokenRole role;
    role.position = p;
    role.region = region_of(rel, p);
    role.query_match = std::binary_search(hit.positions.begin(), hit.positions.end(), p);
    for (const auto& sig : rel.signals) {
      if (std::binary_search(sig.token_positions.begin(), sig.token_positions.end(), p) &&
          std::find(role.signal_types.begin(), role.signal_types.end(), sig.sig_type) == role.signal_types.end()) {
        role.signal_types.push_back(sig.sig_type);
      }
    }
    m.highlight_roles.push_back(std::move(role));
  }
  return m;
}

/// Full evaluation: hits in corpus order with highlight roles.
inline std::vector<Match> evaluate(const QuerySpec& spec, const Dataset& ds) {
  std::vector<Match> out;
  for (const auto& hit : find(spec, ds)) out.push_back(highlight(hit, ds));
  return out;
}

}  // namespace discoexplorer::engine

#endif  // DISCOEXPLORER_ENGINE_HPP

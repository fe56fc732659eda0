#ifndef DISCOEXPLORER_TESTS_ORACLE_HPP
#define DISCOEXPLORER_TESTS_ORACLE_HPP

// Brute-force reference evaluator. Reads only the Dataset's raw fields and
// shares no matching code with the engine: scopes are plain position sets,
// assignments are found by exhaustive backtracking.

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "discoexplorer/deql.hpp"
#include "discoexplorer/model.hpp"

namespace oracle {

namespace dx = discoexplorer;

inline std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool token_matches(const dx::TokenRecord& t, const dx::deql::TokenPattern& p, bool case_sensitive) {
  auto same = [&](const std::string& a, const std::string& b) { return case_sensitive ? a == b : lower(a) == lower(b); };
  if (p.form && !same(t.form, *p.form)) return false;
  if (p.lemma && !same(t.lemma, *p.lemma)) return false;
  if (p.upos && t.upos != *p.upos) return false;
  if (p.deprel) {
    auto base = t.deprel.substr(0, t.deprel.find(':'));
    if (t.deprel != *p.deprel && base != *p.deprel) return false;
  }
  return true;
}

using Scope = std::set<int>;

inline Scope scope_of(const dx::Span& s) {
  Scope out;
  for (const auto& r : s.ranges()) {
    for (int p = r.start; p <= r.end; ++p) out.insert(p);
  }
  return out;
}

inline Scope merge(Scope a, const Scope& b) {
  a.insert(b.begin(), b.end());
  return a;
}

struct Ctx {
  const dx::Document& doc;
  bool case_sensitive;
  bool ok(int pos, const dx::deql::TokenPattern& p) const {
    return token_matches(doc.tokens[std::size_t(pos)], p, case_sensitive);
  }
};

/// Patterns on strictly increasing positions of `scope`.
inline bool ordered(const std::vector<dx::deql::TokenPattern>& pats, const Scope& scope, const Ctx& c,
                    std::size_t j = 0, int after = -1) {
  if (j == pats.size()) return true;
  for (int p : scope) {
    if (p <= after) continue;
    if (c.ok(p, pats[j]) && ordered(pats, scope, c, j + 1, p)) return true;
  }
  return false;
}

/// Patterns on consecutive positions, all inside `scope`.
inline bool contiguous(const std::vector<dx::deql::TokenPattern>& pats, const Scope& scope, const Ctx& c) {
  for (int start : scope) {
    bool good = true;
    for (std::size_t j = 0; j < pats.size() && good; ++j) {
      int p = start + int(j);
      good = scope.count(p) && c.ok(p, pats[j]);
    }
    if (good) return true;
  }
  return false;
}

/// Patterns on pairwise distinct positions of `scope`, any order.
inline bool distinct(const std::vector<dx::deql::TokenPattern>& pats, const Scope& scope, const Ctx& c,
                     std::vector<int>& used, std::size_t j = 0) {
  if (j == pats.size()) return true;
  for (int p : scope) {
    if (std::find(used.begin(), used.end(), p) != used.end() || !c.ok(p, pats[j])) continue;
    used.push_back(p);
    if (distinct(pats, scope, c, used, j + 1)) return true;
    used.pop_back();
  }
  return false;
}

inline bool side(const std::vector<dx::deql::TokenPattern>& pats, const Scope& scope, bool exact, const Ctx& c) {
  if (pats.empty()) return true;
  return exact ? contiguous(pats, scope, c) : ordered(pats, scope, c);
}

inline bool filters_hold(const dx::Relation& rel, const dx::deql::Filters& f) {
  if (f.label) {
    const std::string& v = f.label->which == dx::deql::LabelKind::Disrpt ? rel.disrpt_label : rel.orig_label;
    bool eq = v == f.label->value;
    if (f.label->negated ? eq : !eq) return false;
  }
  if (f.direction) {
    std::string d = rel.direction == dx::Direction::OneToTwo ? "1>2" : "1<2";
    bool eq = d == f.direction->value;
    if (f.direction->negated ? eq : !eq) return false;
  }
  if (f.signal_type) {
    bool has = false;
    for (const auto& s : rel.signals) has = has || s.sig_type == f.signal_type->value;
    if (f.signal_type->negated ? has : !has) return false;
  }
  if (f.signal_subtype) {
    bool has = false;
    for (const auto& s : rel.signals) has = has || (s.sig_subtype && *s.sig_subtype == f.signal_subtype->value);
    if (f.signal_subtype->negated ? has : !has) return false;
  }
  if (f.any_signal) {
    bool has = !rel.signals.empty();
    if (*f.any_signal == dx::deql::SignalPresence::Present ? !has : has) return false;
  }
  return true;
}

inline bool relation_matches(const dx::deql::QuerySpec& q, const dx::Relation& rel, const dx::Dataset& ds) {
  if (!filters_hold(rel, q.filters)) return false;
  Ctx c{ds.documents[std::size_t(rel.doc)], q.case_sensitive};
  Scope a1 = scope_of(rel.arg1), a2 = scope_of(rel.arg2);
  const auto& ast = q.ast;
  switch (ast.op) {
    case dx::deql::QueryOp::None: {
      if (ast.left_patterns.empty()) return true;
      if (q.include_context) {
        Scope all = merge(merge(a1, a2), merge(scope_of(rel.pre_ctx), merge(scope_of(rel.inter_ctx), scope_of(rel.post_ctx))));
        if (q.exact) return contiguous(ast.left_patterns, all, c);
        std::vector<int> used;
        return distinct(ast.left_patterns, all, c, used);
      }
      if (q.exact) return contiguous(ast.left_patterns, a1, c) || contiguous(ast.left_patterns, a2, c);
      std::vector<int> used;
      return distinct(ast.left_patterns, merge(a1, a2), c, used);
    }
    case dx::deql::QueryOp::ArgOrder:
      return side(ast.left_patterns, a1, q.exact, c) && side(ast.right_patterns, a2, q.exact, c);
    case dx::deql::QueryOp::SourceTarget: {
      bool one_to_two = rel.direction == dx::Direction::OneToTwo;
      const Scope& src = one_to_two ? a1 : a2;
      const Scope& tgt = one_to_two ? a2 : a1;
      return side(ast.left_patterns, src, q.exact, c) && side(ast.right_patterns, tgt, q.exact, c);
    }
  }
  return false;
}

/// Ordinals of matching relations, in corpus order.
inline std::vector<int> evaluate(const dx::deql::QuerySpec& q, const dx::Dataset& ds) {
  std::vector<int> out;
  for (std::size_t i = 0; i < ds.relations.size(); ++i) {
    if (relation_matches(q, ds.relations[i], ds)) out.push_back(int(i));
  }
  return out;
}

/// Positions a hit may legitimately use under the query's operator.
inline Scope allowed_positions(const dx::deql::QuerySpec& q, const dx::Relation& rel) {
  Scope all = merge(scope_of(rel.arg1), scope_of(rel.arg2));
  if (q.include_context && q.ast.op == dx::deql::QueryOp::None) {
    all = merge(all, merge(scope_of(rel.pre_ctx), merge(scope_of(rel.inter_ctx), scope_of(rel.post_ctx))));
  }
  return all;
}

}  // namespace oracle

#endif  // DISCOEXPLORER_TESTS_ORACLE_HPP

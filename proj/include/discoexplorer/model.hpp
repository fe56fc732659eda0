#ifndef DISCOEXPLORER_MODEL_HPP
#define DISCOEXPLORER_MODEL_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "discoexplorer/error.hpp"
#include "discoexplorer/text.hpp"

namespace discoexplorer {

/// One corpus token. All indices are 0-based.
struct TokenRecord {
  std::string doc_id;
  int sent_index = 0;
  int tok_index_doc = 0;
  std::string form;
  std::string lemma;
  std::string upos;
  std::string deprel;

  bool operator==(const TokenRecord&) const = default;
};

/// Inclusive token range in document coordinates.
struct TokenRange {
  int start = 0;
  int end = 0;

  int size() const { return end - start + 1; }
  bool operator==(const TokenRange&) const = default;
};

/// A possibly discontinuous set of document tokens, stored as sorted,
/// non-overlapping, non-adjacent inclusive ranges.
class Span {
 public:
  Span() = default;

  /// Normalizes arbitrary ranges: sorts and merges overlapping or adjacent ones.
  static Span from_ranges(std::vector<TokenRange> ranges) {
    std::sort(ranges.begin(), ranges.end(),
              [](const TokenRange& a, const TokenRange& b) { return a.start < b.start; });
    Span out;
    for (const auto& r : ranges) {
      if (r.end < r.start) throw IntegrityError("reversed token range");
      if (!out.ranges_.empty() && r.start <= out.ranges_.back().end + 1) {
        out.ranges_.back().end = std::max(out.ranges_.back().end, r.end);
      } else {
        out.ranges_.push_back(r);
      }
    }
    return out;
  }

  /// Builds a span from sorted, duplicate-free positions.
  static Span from_positions(const std::vector<int>& positions) {
    Span out;
    for (int p : positions) {
      if (!out.ranges_.empty() && p == out.ranges_.back().end + 1) {
        out.ranges_.back().end = p;
      } else {
        out.ranges_.push_back({p, p});
      }
    }
    return out;
  }

  const std::vector<TokenRange>& ranges() const { return ranges_; }
  bool empty() const { return ranges_.empty(); }

  int size() const {
    int n = 0;
    for (const auto& r : ranges_) n += r.size();
    return n;
  }

  /// Smallest token index. Precondition: !empty().
  int first() const { return ranges_.front().start; }
  /// Largest token index. Precondition: !empty().
  int last() const { return ranges_.back().end; }

  bool contains(int pos) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), pos,
                               [](int p, const TokenRange& r) { return p < r.start; });
    if (it == ranges_.begin()) return false;
    --it;
    return pos <= it->end;
  }

  std::vector<int> positions() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (const auto& r : ranges_) {
      for (int p = r.start; p <= r.end; ++p) out.push_back(p);
    }
    return out;
  }

  bool intersects(const Span& other) const {
    std::size_t i = 0, j = 0;
    while (i < ranges_.size() && j < other.ranges_.size()) {
      const auto& a = ranges_[i];
      const auto& b = other.ranges_[j];
      if (a.end < b.start) {
        ++i;
      } else if (b.end < a.start) {
        ++j;
      } else {
        return true;
      }
    }
    return false;
  }

  bool operator==(const Span&) const = default;

 private:
  std::vector<TokenRange> ranges_;
};

inline Span span_union(const Span& a, const Span& b) {
  std::vector<TokenRange> all = a.ranges();
  all.insert(all.end(), b.ranges().begin(), b.ranges().end());
  return Span::from_ranges(std::move(all));
}

struct Signal {
  std::string sig_type;
  std::optional<std::string> sig_subtype;
  std::vector<int> token_positions;

  bool operator==(const Signal&) const = default;
};

enum class Direction { OneToTwo, TwoToOne };

inline const char* direction_name(Direction d) { return d == Direction::OneToTwo ? "1>2" : "1<2"; }

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "1>2") return Direction::OneToTwo;
  if (s == "1<2") return Direction::TwoToOne;
  return std::nullopt;
}

/// One discourse relation. arg1/arg2 are in text order; direction tells
/// which of them is the source.
struct Relation {
  std::string rel_id;
  int ordinal = 0;
  int doc = 0;  // index into Dataset::documents
  std::string doc_id;
  Span arg1;
  Span arg2;
  Span pre_ctx;
  Span inter_ctx;
  Span post_ctx;
  Direction direction = Direction::OneToTwo;
  std::string disrpt_label;
  std::string orig_label;
  std::vector<Signal> signals;
  std::map<std::string, std::string> metadata;

  const Span& source() const { return direction == Direction::OneToTwo ? arg1 : arg2; }
  const Span& target() const { return direction == Direction::OneToTwo ? arg2 : arg1; }

  bool operator==(const Relation&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<TokenRecord> tokens;
  std::vector<int> sentence_starts;  // first token index of each sentence

  int size() const { return static_cast<int>(tokens.size()); }
  int sentence_count() const { return static_cast<int>(sentence_starts.size()); }

  /// Inclusive token range of sentence `s`.
  TokenRange sentence_range(int s) const {
    int end = (s + 1 < sentence_count()) ? sentence_starts[static_cast<std::size_t>(s) + 1] - 1 : size() - 1;
    return {sentence_starts[static_cast<std::size_t>(s)], end};
  }

  bool operator==(const Document&) const = default;
};

struct Posting {
  int doc = 0;
  int pos = 0;

  bool operator==(const Posting&) const = default;
  auto operator<=>(const Posting&) const = default;
};

/// Lookup tables built once per dataset: case-folded form and lemma to
/// sorted postings, and label to relation ordinals.
struct DatasetIndex {
  std::unordered_map<std::string, std::vector<Posting>> forms;
  std::unordered_map<std::string, std::vector<Posting>> lemmas;
  std::unordered_map<std::string, std::vector<int>> by_label;
  std::unordered_map<std::string, std::vector<int>> by_orig_label;

  bool operator==(const DatasetIndex&) const = default;
};

struct Dataset {
  std::string dataset_id;
  std::vector<Document> documents;
  std::unordered_map<std::string, int> doc_lookup;
  std::vector<Relation> relations;

  std::set<std::string> disrpt_labels;
  std::set<std::string> orig_labels;
  std::set<std::string> signal_types;
  std::set<std::string> signal_subtypes;
  std::set<std::string> metadata_keys;
  bool has_signals = false;

  std::set<std::string> upos_vocab;
  std::set<std::string> deprel_vocab;
  std::set<std::string> lemma_vocab;

  std::map<std::string, std::string> display;  // free-form manifest metadata
  DatasetIndex index;

  const Document& document(const std::string& doc_id) const {
    auto it = doc_lookup.find(doc_id);
    if (it == doc_lookup.end()) throw IntegrityError("unknown document '" + doc_id + "'");
    return documents[static_cast<std::size_t>(it->second)];
  }
  const Document& document_of(const Relation& rel) const { return documents[static_cast<std::size_t>(rel.doc)]; }

  int doc_length(const std::string& doc_id) const { return document(doc_id).size(); }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.tokens.size();
    return n;
  }
  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.sentence_starts.size();
    return n;
  }
};

/// Union of the complete sentences that intersect arg1 or arg2.
inline Span relation_sentence_window(const Relation& rel, const Dataset& ds) {
  const Document& doc = ds.document(rel.doc_id);
  std::vector<TokenRange> sentences;
  int last_sentence = -1;
  for (const Span* arg : {&rel.arg1, &rel.arg2}) {
    for (const auto& r : arg->ranges()) {
      if (r.start < 0 || r.end >= doc.size()) throw IntegrityError("relation " + rel.rel_id + " out of document bounds");
      for (int s = doc.tokens[static_cast<std::size_t>(r.start)].sent_index;
           s <= doc.tokens[static_cast<std::size_t>(r.end)].sent_index; ++s) {
        if (s == last_sentence) continue;
        sentences.push_back(doc.sentence_range(s));
        last_sentence = s;
      }
    }
  }
  return Span::from_ranges(std::move(sentences));
}

/// Returns a description of the first partition violation, or nothing when
/// the five spans are pairwise disjoint and exactly cover the sentence window.
inline std::optional<std::string> check_partition(const Relation& rel, const Dataset& ds) {
  const Span* parts[] = {&rel.arg1, &rel.arg2, &rel.pre_ctx, &rel.inter_ctx, &rel.post_ctx};
  const char* names[] = {"arg1", "arg2", "pre", "inter", "post"};
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      if (parts[i]->intersects(*parts[j])) {
        return rel.rel_id + ": " + names[i] + " overlaps " + names[j];
      }
    }
  }
  Span covered;
  for (const Span* p : parts) covered = span_union(covered, *p);
  if (!(covered == relation_sentence_window(rel, ds))) return rel.rel_id + ": spans do not cover the sentence window";
  if (rel.arg1.empty() || rel.arg2.empty()) return rel.rel_id + ": empty argument";
  if (!(rel.arg1.first() < rel.arg2.first())) return rel.rel_id + ": arguments not in text order";
  return std::nullopt;
}

/// Fills `ds.index` from its documents and relations.
inline void build_index(Dataset& ds) {
  DatasetIndex idx;
  for (std::size_t d = 0; d < ds.documents.size(); ++d) {
    const auto& doc = ds.documents[d];
    for (const auto& tok : doc.tokens) {
      Posting p{static_cast<int>(d), tok.tok_index_doc};
      idx.forms[text::fold_case(tok.form)].push_back(p);
      idx.lemmas[text::fold_case(tok.lemma)].push_back(p);
    }
  }
  for (const auto& rel : ds.relations) {
    idx.by_label[rel.disrpt_label].push_back(rel.ordinal);
    idx.by_orig_label[rel.orig_label].push_back(rel.ordinal);
  }
  ds.index = std::move(idx);
}

}  // namespace discoexplorer

#endif  // DISCOEXPLORER_MODEL_HPP

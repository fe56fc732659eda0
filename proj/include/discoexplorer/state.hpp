#ifndef DISCOEXPLORER_STATE_HPP
#define DISCOEXPLORER_STATE_HPP

// QueryState: everything needed to replay a search, serialized as canonical
// JSON (sorted keys, no whitespace, absent options omitted). The shareable
// link token is the unpadded base64url encoding of that JSON.

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "discoexplorer/deql.hpp"
#include "discoexplorer/error.hpp"

namespace discoexplorer::state {

using nlohmann::json;

inline constexpr int kDefaultPageSize = 50;

struct QueryState {
  std::string dataset;
  std::string query;
  bool exact = false;
  bool case_sensitive = false;
  bool include_context = false;
  deql::Filters filters;

  std::optional<std::string> breakdown;
  std::optional<std::string> crosstab;
  std::optional<std::string> compare_dataset;
  long long min_count = 0;
  bool yates = false;

  long long offset = 0;
  long long page_size = kDefaultPageSize;
  std::optional<std::string> tab;  // UI view, carried verbatim

  bool operator==(const QueryState&) const = default;
};

class StateError : public Error {
 public:
  explicit StateError(std::string message) : Error(ErrorKind::Format, std::move(message)) {}
};

inline json filter_to_json(const deql::Filters& f) {
  json out = json::object();
  if (f.label) {
    out["label"] = {{"value", f.label->value},
                    {"negated", f.label->negated},
                    {"which", f.label->which == deql::LabelKind::Disrpt ? "disrpt" : "orig"}};
  }
  auto value_filter = [&](const char* key, const std::optional<deql::ValueFilter>& v) {
    if (v) out[key] = {{"value", v->value}, {"negated", v->negated}};
  };
  value_filter("direction", f.direction);
  value_filter("signal_type", f.signal_type);
  value_filter("signal_subtype", f.signal_subtype);
  if (f.any_signal) out["any_signal"] = *f.any_signal == deql::SignalPresence::Present ? "present" : "absent";
  return out;
}

namespace detail {

inline void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw StateError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw StateError(std::string("unknown field '") + key + "' in " + where);
  }
}

template <typename T>
T get_as(const json& j, const char* key, const char* where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw StateError(std::string("field '") + key + "' in " + where + " is missing or has the wrong type");
  }
}

inline deql::ValueFilter value_filter(const json& j, const char* where) {
  require_keys(j, {"value", "negated"}, where);
  return {get_as<std::string>(j, "value", where), j.contains("negated") ? get_as<bool>(j, "negated", where) : false};
}

}  // namespace detail

inline deql::Filters filters_from_json(const json& j) {
  detail::require_keys(j, {"label", "direction", "signal_type", "signal_subtype", "any_signal"}, "filters");
  deql::Filters f;
  if (j.contains("label")) {
    const auto& l = j["label"];
    detail::require_keys(l, {"value", "negated", "which"}, "label filter");
    deql::LabelFilter lf;
    lf.value = detail::get_as<std::string>(l, "value", "label filter");
    lf.negated = l.contains("negated") ? detail::get_as<bool>(l, "negated", "label filter") : false;
    auto which = l.contains("which") ? detail::get_as<std::string>(l, "which", "label filter") : "disrpt";
    if (which != "disrpt" && which != "orig") throw StateError("label filter 'which' must be 'disrpt' or 'orig'");
    lf.which = which == "disrpt" ? deql::LabelKind::Disrpt : deql::LabelKind::Orig;
    f.label = lf;
  }
  if (j.contains("direction")) f.direction = detail::value_filter(j["direction"], "direction filter");
  if (j.contains("signal_type")) f.signal_type = detail::value_filter(j["signal_type"], "signal_type filter");
  if (j.contains("signal_subtype")) f.signal_subtype = detail::value_filter(j["signal_subtype"], "signal_subtype filter");
  if (j.contains("any_signal")) {
    auto v = detail::get_as<std::string>(j, "any_signal", "filters");
    if (v != "present" && v != "absent") throw StateError("any_signal must be 'present' or 'absent'");
    f.any_signal = v == "present" ? deql::SignalPresence::Present : deql::SignalPresence::Absent;
  }
  return f;
}

inline json to_json(const QueryState& s) {
  json j = json::object();
  j["dataset"] = s.dataset;
  j["query"] = s.query;
  j["exact"] = s.exact;
  j["case_sensitive"] = s.case_sensitive;
  j["include_context"] = s.include_context;
  j["filters"] = filter_to_json(s.filters);
  if (s.breakdown) j["breakdown"] = *s.breakdown;
  if (s.crosstab) j["crosstab"] = *s.crosstab;
  if (s.compare_dataset) j["compare_dataset"] = *s.compare_dataset;
  j["min_count"] = s.min_count;
  j["yates"] = s.yates;
  j["offset"] = s.offset;
  j["page_size"] = s.page_size;
  if (s.tab) j["tab"] = *s.tab;
  return j;
}

/// Missing fields take their defaults; unknown fields are rejected.
inline QueryState from_json(const json& j) {
  constexpr const char* where = "query state";
  detail::require_keys(j,
                       {"dataset", "query", "exact", "case_sensitive", "include_context", "filters", "breakdown",
                        "crosstab", "compare_dataset", "min_count", "yates", "offset", "page_size", "tab"},
                       where);
  QueryState s;
  s.dataset = detail::get_as<std::string>(j, "dataset", where);
  if (j.contains("query")) s.query = detail::get_as<std::string>(j, "query", where);
  if (j.contains("exact")) s.exact = detail::get_as<bool>(j, "exact", where);
  if (j.contains("case_sensitive")) s.case_sensitive = detail::get_as<bool>(j, "case_sensitive", where);
  if (j.contains("include_context")) s.include_context = detail::get_as<bool>(j, "include_context", where);
  if (j.contains("filters")) s.filters = filters_from_json(j["filters"]);
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return detail::get_as<std::string>(j, key, where);
  };
  s.breakdown = opt_string("breakdown");
  s.crosstab = opt_string("crosstab");
  s.compare_dataset = opt_string("compare_dataset");
  s.tab = opt_string("tab");
  if (j.contains("min_count")) s.min_count = detail::get_as<long long>(j, "min_count", where);
  if (j.contains("yates")) s.yates = detail::get_as<bool>(j, "yates", where);
  if (j.contains("offset")) s.offset = detail::get_as<long long>(j, "offset", where);
  if (j.contains("page_size")) s.page_size = detail::get_as<long long>(j, "page_size", where);
  if (s.offset < 0) throw StateError("offset must be non-negative");
  if (s.page_size < 1) throw StateError("page_size must be positive");
  if (s.min_count < 0) throw StateError("min_count must be non-negative");
  return s;
}

inline std::string canonical_json(const QueryState& s) { return to_json(s).dump(); }

inline std::string base64url_encode(std::string_view data) {
  static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    unsigned v = (static_cast<unsigned char>(data[i]) << 16) | (static_cast<unsigned char>(data[i + 1]) << 8) |
                 static_cast<unsigned char>(data[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
  }
  if (i + 1 == data.size()) {
    unsigned v = static_cast<unsigned char>(data[i]) << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
  } else if (i + 2 == data.size()) {
    unsigned v = (static_cast<unsigned char>(data[i]) << 16) | (static_cast<unsigned char>(data[i + 1]) << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
  }
  return out;
}

inline std::string base64url_decode(std::string_view token) {
  while (!token.empty() && token.back() == '=') token.remove_suffix(1);
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '-' || c == '+') return 62;
    if (c == '_' || c == '/') return 63;
    return -1;
  };
  if (token.size() % 4 == 1) throw StateError("malformed link token");
  std::string out;
  unsigned buffer = 0;
  int bits = 0;
  for (char c : token) {
    int v = value(c);
    if (v < 0) throw StateError("malformed link token");
    buffer = (buffer << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((buffer >> bits) & 0xFF);
    }
  }
  return out;
}

inline std::string encode_link(const QueryState& s) { return base64url_encode(canonical_json(s)); }

inline QueryState decode_link(std::string_view token) {
  json j;
  try {
    j = json::parse(base64url_decode(token));
  } catch (const json::exception&) {
    throw StateError("link token does not hold JSON");
  }
  return from_json(j);
}

}  // namespace discoexplorer::state

#endif  // DISCOEXPLORER_STATE_HPP

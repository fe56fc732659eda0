#ifndef DISCOEXPLORER_SERVER_HPP
#define DISCOEXPLORER_SERVER_HPP

// Local HTTP/JSON service.
//
//   GET  /datasets            dataset records with counts and inventories
//   POST /load                {"dataset": id} -> load time
//   POST /query               QueryState -> page of matches
//   POST /freq                QueryState with "breakdown"
//   POST /crosstab            QueryState with "breakdown" and "crosstab"
//   POST /compare             QueryState with "breakdown" and "compare_dataset"
//   POST /link                QueryState -> {"token": ...}
//   GET  /link?token=...      token -> QueryState
//   GET  /export.tsv?state=   TSV for the state: crosstab, breakdown or concordance
//
// Errors are {"code", "message", "detail"}.

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "discoexplorer/deql.hpp"
#include "discoexplorer/engine.hpp"
#include "discoexplorer/error.hpp"
#include "discoexplorer/format.hpp"
#include "discoexplorer/ingest.hpp"
#include "discoexplorer/model.hpp"
#include "discoexplorer/state.hpp"
#include "discoexplorer/stats.hpp"

namespace discoexplorer::server {

using nlohmann::json;

/// Datasets by id, each loaded at most once, on first use.
class Registry {
 public:
  explicit Registry(std::vector<ingest::DatasetSource> sources = {}, ingest::BuildOptions options = {})
      : options_(options) {
    for (auto& s : sources) {
      auto id = s.dataset_id;
      order_.push_back(id);
      auto e = std::make_unique<Entry>();
      e->source = std::move(s);
      entries_.emplace(id, std::move(e));
    }
  }

  /// Registers an already built dataset.
  void add(std::shared_ptr<const Dataset> ds) {
    auto id = ds->dataset_id;
    auto e = std::make_unique<Entry>();
    e->source.dataset_id = id;
    e->dataset = std::move(ds);
    if (!entries_.count(id)) order_.push_back(id);
    entries_[id] = std::move(e);
  }

  const std::vector<std::string>& ids() const { return order_; }
  bool contains(const std::string& id) const { return entries_.count(id) > 0; }

  std::shared_ptr<const Dataset> get(const std::string& id) const {
    Entry& e = entry(id);
    std::lock_guard lock(e.mutex);
    if (!e.dataset) {
      auto start = std::chrono::steady_clock::now();
      e.dataset = std::make_shared<const Dataset>(ingest::load_dataset(e.source, options_));
      e.load_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return e.dataset;
  }

  double load_seconds(const std::string& id) const {
    Entry& e = entry(id);
    std::lock_guard lock(e.mutex);
    return e.load_seconds;
  }

  const ingest::DatasetSource& source(const std::string& id) const { return entry(id).source; }

 private:
  struct Entry {
    ingest::DatasetSource source;
    std::mutex mutex;
    std::shared_ptr<const Dataset> dataset;
    double load_seconds = 0.0;
  };

  Entry& entry(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFoundError("unknown dataset '" + id + "'");
    return *it->second;
  }

  ingest::BuildOptions options_;
  std::vector<std::string> order_;
  std::map<std::string, std::unique_ptr<Entry>> entries_;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

inline Response json_response(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

inline Response error_response(int status, const std::string& code, const std::string& message,
                               const std::string& detail = {}, json extra = nullptr) {
  json j = {{"code", code}, {"message", message}, {"detail", detail}};
  if (!extra.is_null()) j["result"] = std::move(extra);
  return json_response(j, status);
}

inline json dataset_record(const Dataset& ds) {
  json j;
  j["dataset_id"] = ds.dataset_id;
  j["relations"] = ds.relations.size();
  j["tokens"] = ds.token_count();
  j["sentences"] = ds.sentence_count();
  j["documents"] = ds.documents.size();
  j["has_signals"] = ds.has_signals;
  j["disrpt_labels"] = ds.disrpt_labels;
  j["orig_labels"] = ds.orig_labels;
  j["signal_types"] = ds.signal_types;
  j["signal_subtypes"] = ds.signal_subtypes;
  j["metadata_keys"] = ds.metadata_keys;
  j["display"] = ds.display;
  return j;
}

inline json match_json(const engine::Match& m, const Dataset& ds) {
  const Relation& rel = ds.relations[static_cast<std::size_t>(m.relation)];
  const Document& doc = ds.document_of(rel);
  json j;
  j["rel_id"] = rel.rel_id;
  j["doc_id"] = rel.doc_id;
  j["disrpt_label"] = rel.disrpt_label;
  j["orig_label"] = rel.orig_label;
  j["direction"] = direction_name(rel.direction);
  j["matched_token_positions"] = m.matched_token_positions;
  json signals = json::array();
  for (const auto& s : rel.signals) {
    signals.push_back({{"type", s.sig_type},
                       {"subtype", s.sig_subtype ? json(*s.sig_subtype) : json(nullptr)},
                       {"positions", s.token_positions}});
  }
  j["signals"] = std::move(signals);
  json tokens = json::array();
  for (const auto& role : m.highlight_roles) {
    const auto& tok = doc.tokens[static_cast<std::size_t>(role.position)];
    tokens.push_back({{"position", role.position},
                      {"form", tok.form},
                      {"lemma", tok.lemma},
                      {"upos", tok.upos},
                      {"deprel", tok.deprel},
                      {"region", engine::region_name(role.region)},
                      {"query_match", role.query_match},
                      {"signal_types", role.signal_types}});
  }
  j["tokens"] = std::move(tokens);
  return j;
}

inline json freq_json(const stats::FreqTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({{"value", r.value}, {"count", r.count}, {"percent", r.percent}});
  return {{"rows", rows}, {"total", t.total}, {"key_absent", t.key_absent}};
}

inline json box_json(const std::optional<stats::BoxSummary>& b) {
  if (!b) return nullptr;
  return {{"n", b->n},           {"min", b->min},       {"q1", b->q1},
          {"median", b->median}, {"q3", b->q3},         {"max", b->max},
          {"whisker_low", b->whisker_low}, {"whisker_high", b->whisker_high}, {"outliers", b->outliers}};
}

inline json crosstab_json(const stats::CrossTab& t) {
  json j;
  j["rows"] = t.row_values;
  j["cols"] = t.col_values;
  j["observed"] = t.observed;
  j["n"] = t.n;
  j["applicable"] = t.applicable;
  if (t.applicable) {
    j["expected"] = t.expected;
    j["residuals"] = t.pearson_residuals;
    j["chi2"] = t.chi2;
    j["dof"] = t.dof;
    j["p_value"] = t.p_value;
    j["sig_code"] = t.sig_code;
    j["yates"] = t.yates;
  }
  return j;
}

/// Request handling independent of the HTTP transport.
class Service {
 public:
  explicit Service(std::shared_ptr<Registry> registry) : registry_(std::move(registry)) {}

  Registry& registry() { return *registry_; }

  /// Dispatches one request. `params` are URL query parameters.
  Response handle(const std::string& method, const std::string& path, const std::string& body,
                  const std::map<std::string, std::string>& params = {}) const {
    try {
      if (method == "GET" && path == "/datasets") return datasets();
      if (method == "POST" && path == "/load") return load(parse_body(body));
      if (method == "POST" && path == "/query") return query(parse_state(body));
      if (method == "POST" && path == "/freq") return freq(parse_state(body));
      if (method == "POST" && path == "/crosstab") return crosstab(parse_state(body));
      if (method == "POST" && path == "/compare") return compare(parse_state(body));
      if (method == "POST" && path == "/link") return json_response({{"token", state::encode_link(parse_state(body))}});
      if (method == "GET" && path == "/link") return json_response(state::to_json(state::decode_link(param(params, "token"))));
      if (method == "GET" && path == "/export.tsv") return export_tsv(state::decode_link(param(params, "state")));
      return error_response(404, "not_found", "no route for " + method + " " + path);
    } catch (const state::StateError& e) {
      return error_response(400, "bad_request", e.what());
    } catch (const ParseError& e) {
      return error_response(400, "parse_error", e.what(), e.detail());
    } catch (const ValidationError& e) {
      json allowed = e.allowed();
      return error_response(400, "validation_error", e.what(), e.detail(), json{{"allowed", allowed}});
    } catch (const NotFoundError& e) {
      return error_response(404, "not_found", e.what());
    } catch (const Error& e) {
      return error_response(500, error_kind_name(e.kind()), e.what(), e.detail());
    } catch (const json::exception& e) {
      return error_response(400, "bad_request", std::string("invalid JSON: ") + e.what());
    }
  }

  /// Compiles the state's query and filters against its dataset.
  static deql::QuerySpec compile(const state::QueryState& s, const Dataset& ds) {
    auto spec = deql::compile(s.query, s.filters, ds, s.exact);
    spec.case_sensitive = s.case_sensitive;
    spec.include_context = s.include_context;
    return spec;
  }

 private:
  static json parse_body(const std::string& body) { return json::parse(body.empty() ? "{}" : body); }

  static state::QueryState parse_state(const std::string& body) { return state::from_json(parse_body(body)); }

  static std::string param(const std::map<std::string, std::string>& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) throw state::StateError("missing '" + key + "' parameter");
    return it->second;
  }

  Response datasets() const {
    json list = json::array();
    for (const auto& id : registry_->ids()) list.push_back(dataset_record(*registry_->get(id)));
    return json_response(list);
  }

  Response load(const json& body) const {
    auto id = body.at("dataset").get<std::string>();
    auto ds = registry_->get(id);
    return json_response({{"dataset_id", id},
                          {"load_seconds", registry_->load_seconds(id)},
                          {"relations", ds->relations.size()}});
  }

  /// Variable for a breakdown name; "filter_match:<filter>" answers whether
  /// each relation passes that filter, computed with the filter lifted
  /// from the query.
  static std::pair<stats::Variable, deql::Filters> breakdown_variable(const std::string& name,
                                                                       const deql::Filters& filters) {
    if (!text::starts_with(name, "filter_match:")) return {stats::parse_variable(name), filters};
    auto which = name.substr(13);
    deql::Filters selected, rest = filters;
    bool found = false;
    if (which == "label" && filters.label) {
      selected.label = filters.label;
      selected.label->negated = false;
      rest.label.reset();
      found = true;
    } else if (which == "direction" && filters.direction) {
      selected.direction = filters.direction;
      selected.direction->negated = false;
      rest.direction.reset();
      found = true;
    } else if (which == "signal_type" && filters.signal_type) {
      selected.signal_type = filters.signal_type;
      selected.signal_type->negated = false;
      rest.signal_type.reset();
      found = true;
    } else if (which == "signal_subtype" && filters.signal_subtype) {
      selected.signal_subtype = filters.signal_subtype;
      selected.signal_subtype->negated = false;
      rest.signal_subtype.reset();
      found = true;
    } else if (which == "any_signal" && filters.any_signal) {
      selected.any_signal = deql::SignalPresence::Present;
      rest.any_signal.reset();
      found = true;
    }
    if (!found) {
      throw ValidationError("filter_match needs an active filter named '" + which + "'",
                            {"label", "direction", "signal_type", "signal_subtype", "any_signal"});
    }
    return {stats::CategoricalVar{stats::CategoricalKind::FilterMatch, {}, selected}, rest};
  }

  struct Evaluated {
    std::shared_ptr<const Dataset> ds;
    std::vector<engine::Hit> hits;
    double elapsed_ms = 0.0;
  };

  Evaluated run(const state::QueryState& s, const deql::Filters& filters) const {
    Evaluated out;
    out.ds = registry_->get(s.dataset);
    auto copy = s;
    copy.filters = filters;
    auto spec = compile(copy, *out.ds);
    auto start = std::chrono::steady_clock::now();
    out.hits = engine::find(spec, *out.ds);
    out.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
  }

  Response query(const state::QueryState& s) const {
    auto ev = run(s, s.filters);
    json matches = json::array();
    auto total = static_cast<long long>(ev.hits.size());
    for (long long i = s.offset; i < std::min(total, s.offset + s.page_size); ++i) {
      matches.push_back(match_json(engine::highlight(ev.hits[static_cast<std::size_t>(i)], *ev.ds), *ev.ds));
    }
    json j;
    j["total_hits"] = total;
    j["offset"] = s.offset;
    j["page_size"] = s.page_size;
    j["page_count"] = (total + s.page_size - 1) / s.page_size;
    j["matches"] = std::move(matches);
    j["elapsed_ms"] = ev.elapsed_ms;
    return json_response(j);
  }

  static const std::string& required(const std::optional<std::string>& v, const char* what) {
    if (!v) throw state::StateError(std::string("query state needs '") + what + "'");
    return *v;
  }

  Response freq(const state::QueryState& s) const {
    auto [var, filters] = breakdown_variable(required(s.breakdown, "breakdown"), s.filters);
    auto ev = run(s, filters);
    auto ids = stats::relation_ids(ev.hits);
    json j;
    j["variable"] = *s.breakdown;
    j["total_hits"] = ids.size();
    if (auto num = std::get_if<stats::NumericalVar>(&var)) {
      j["kind"] = "numerical";
      j["box"] = box_json(stats::box_summary(stats::numeric_values(ids, *num, *ev.ds)));
    } else {
      j["kind"] = "categorical";
      j["table"] = freq_json(stats::frequencies(ids, std::get<stats::CategoricalVar>(var), *ev.ds));
    }
    return json_response(j);
  }

  Response crosstab(const state::QueryState& s) const {
    auto [row_var, filters] = breakdown_variable(required(s.breakdown, "breakdown"), s.filters);
    auto [col_var, filters2] = breakdown_variable(required(s.crosstab, "crosstab"), filters);
    auto ev = run(s, filters2);
    auto ids = stats::relation_ids(ev.hits);
    json j;
    j["row_variable"] = *s.breakdown;
    j["col_variable"] = *s.crosstab;
    j["total_hits"] = ids.size();
    auto* row_num = std::get_if<stats::NumericalVar>(&row_var);
    auto* col_num = std::get_if<stats::NumericalVar>(&col_var);
    if (row_num && col_num) {
      j["kind"] = "scatter";
      json points = json::array();
      for (const auto& [x, y] : stats::scatter(ids, *row_num, *col_num, *ev.ds)) points.push_back({x, y});
      j["points"] = std::move(points);
      return json_response(j);
    }
    if (row_num || col_num) {
      j["kind"] = "grouped_box";
      auto num = row_num ? *row_num : *col_num;
      const auto& cat = std::get<stats::CategoricalVar>(row_num ? col_var : row_var);
      json groups = json::array();
      for (const auto& [value, box] : stats::grouped_box(ids, num, cat, *ev.ds)) {
        groups.push_back({{"value", value}, {"box", box_json(box)}});
      }
      j["groups"] = std::move(groups);
      return json_response(j);
    }
    auto table = stats::crosstab(ids, std::get<stats::CategoricalVar>(row_var), std::get<stats::CategoricalVar>(col_var),
                                 *ev.ds, {s.min_count, s.yates});
    j["kind"] = "crosstab";
    j["table"] = crosstab_json(table);
    if (!table.applicable) {
      return error_response(400, "test_not_applicable",
                            "fewer than 2 rows or columns remain; chi-squared test not applicable", {}, j);
    }
    return json_response(j);
  }

  Response compare(const state::QueryState& s) const {
    const auto& other = required(s.compare_dataset, "compare_dataset");
    auto [var, filters] = breakdown_variable(required(s.breakdown, "breakdown"), s.filters);
    auto ds_a = registry_->get(s.dataset);
    auto ds_b = registry_->get(other);
    auto c = stats::compare(s.query, filters, s.exact, *ds_a, *ds_b, var);
    json j;
    j["dataset_a"] = s.dataset;
    j["dataset_b"] = other;
    j["variable"] = *s.breakdown;
    j["total_a"] = c.total_a;
    j["total_b"] = c.total_b;
    if (c.numerical) {
      j["kind"] = "numerical";
      j["box_a"] = box_json(c.box_a);
      j["box_b"] = box_json(c.box_b);
    } else {
      j["kind"] = "categorical";
      json rows = json::array();
      for (const auto& r : c.rows) {
        rows.push_back({{"value", r.value},
                        {"count_a", r.count_a},
                        {"count_b", r.count_b},
                        {"percent_a", r.percent_a},
                        {"percent_b", r.percent_b}});
      }
      j["rows"] = std::move(rows);
    }
    return json_response(j);
  }

  Response export_tsv(const state::QueryState& s) const {
    std::ostringstream out;
    if (s.compare_dataset && s.breakdown) {
      auto [var, filters] = breakdown_variable(*s.breakdown, s.filters);
      auto c = stats::compare(s.query, filters, s.exact, *registry_->get(s.dataset), *registry_->get(*s.compare_dataset), var);
      format::write_compare_tsv(out, c, s.dataset, *s.compare_dataset);
    } else if (s.breakdown && s.crosstab) {
      auto [row_var, f1] = breakdown_variable(*s.breakdown, s.filters);
      auto [col_var, f2] = breakdown_variable(*s.crosstab, f1);
      auto ev = run(s, f2);
      auto ids = stats::relation_ids(ev.hits);
      auto* row_num = std::get_if<stats::NumericalVar>(&row_var);
      auto* col_num = std::get_if<stats::NumericalVar>(&col_var);
      if (row_num && col_num) {
        out << "x\ty\n";
        for (const auto& [x, y] : stats::scatter(ids, *row_num, *col_num, *ev.ds)) {
          out << format::fixed4(x) << '\t' << format::fixed4(y) << '\n';
        }
      } else if (row_num || col_num) {
        auto num = row_num ? *row_num : *col_num;
        const auto& cat = std::get<stats::CategoricalVar>(row_num ? col_var : row_var);
        format::write_box_tsv(out, stats::grouped_box(ids, num, cat, *ev.ds));
      } else {
        format::write_crosstab_tsv(out, stats::crosstab(ids, std::get<stats::CategoricalVar>(row_var),
                                                        std::get<stats::CategoricalVar>(col_var), *ev.ds,
                                                        {s.min_count, s.yates}));
      }
    } else if (s.breakdown) {
      auto [var, filters] = breakdown_variable(*s.breakdown, s.filters);
      auto ev = run(s, filters);
      auto ids = stats::relation_ids(ev.hits);
      if (auto num = std::get_if<stats::NumericalVar>(&var)) {
        std::vector<std::pair<std::string, stats::BoxSummary>> boxes;
        if (auto b = stats::box_summary(stats::numeric_values(ids, *num, *ev.ds))) boxes.emplace_back(*s.breakdown, *b);
        format::write_box_tsv(out, boxes);
      } else {
        format::write_freq_tsv(out, stats::frequencies(ids, std::get<stats::CategoricalVar>(var), *ev.ds));
      }
    } else {
      auto ev = run(s, s.filters);
      format::write_concordance_tsv(out, ev.hits, *ev.ds);
    }
    return {200, out.str(), "text/tab-separated-values; charset=utf-8"};
  }

  std::shared_ptr<Registry> registry_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;  // optional directory served at "/"
};

/// Binds `server` to the service routes. Kept separate from listen() so
/// tests can bind to an ephemeral port.
inline void install_routes(httplib::Server& server, const Service& service) {
  auto adapt = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params.emplace(k, v);
    auto r = service.handle(req.method, req.path, req.body, params);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  for (const char* path : {"/datasets", "/link", "/export.tsv"}) server.Get(path, adapt);
  for (const char* path : {"/load", "/query", "/freq", "/crosstab", "/compare", "/link"}) server.Post(path, adapt);
}

inline int serve(const Service& service, const ServeOptions& opt) {
  httplib::Server server;
  if (!opt.static_dir.empty() && !server.set_mount_point("/", opt.static_dir)) {
    throw IoError("cannot serve static directory '" + opt.static_dir + "'");
  }
  install_routes(server, service);
  if (!server.listen(opt.host, opt.port)) throw IoError("cannot listen on " + opt.host + ":" + std::to_string(opt.port));
  return 0;
}

}  // namespace discoexplorer::server

#endif  // DISCOEXPLORER_SERVER_HPP

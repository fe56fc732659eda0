// discoexplorer: validate, query, benchmark and serve DISRPT relation corpora.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "discoexplorer/cli.hpp"
#include "discoexplorer/server.hpp"

namespace dx = discoexplorer;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : fallback;
}

void add_filter_flags(CLI::App* cmd, dx::cli::FilterOptions& f) {
  cmd->add_option("--label", f.label, "DISRPT label filter");
  cmd->add_option("--orig-label", f.orig_label, "original label filter");
  cmd->add_option("--direction", f.direction, "direction filter (1>2 or 1<2)");
  cmd->add_option("--signal-type", f.signal_type, "signal type filter");
  cmd->add_option("--signal-subtype", f.signal_subtype, "signal subtype filter");
  cmd->add_flag("--negate-label", f.negate_label);
  cmd->add_flag("--negate-orig-label", f.negate_orig_label);
  cmd->add_flag("--negate-direction", f.negate_direction);
  cmd->add_flag("--negate-signal-type", f.negate_signal_type);
  cmd->add_flag("--negate-signal-subtype", f.negate_signal_subtype);
  cmd->add_flag("--any-signal", f.any_signal, "only relations with at least one signal");
  cmd->add_flag("--negate-any-signal", f.negate_any_signal, "only relations without signals");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-memory search and statistics for DISRPT discourse relation corpora"};
  app.require_subcommand(1);

  std::string manifest;
  std::string data_root;
  app.add_option("--manifest", manifest, "dataset manifest (env DISCOEXPLORER_MANIFEST)");
  app.add_option("--data-root", data_root, "base directory for relative manifest paths (env DISCOEXPLORER_DATA_ROOT)");

  std::vector<std::string> validate_paths;
  auto* validate = app.add_subcommand("validate", "ingest corpora strictly and report counts and errors");
  validate->add_option("paths", validate_paths, "manifest, or .rels and .conllu files");

  dx::cli::QueryOptions q;
  auto* query = app.add_subcommand("query", "run a DEQL query");
  query->add_option("dataset", q.dataset, "dataset id from the manifest")->required();
  query->add_option("deql", q.query, "query string (may be empty)");
  add_filter_flags(query, q.filters);
  query->add_flag("--exact", q.exact, "exact sequence matching");
  query->add_flag("--case-sensitive", q.case_sensitive);
  query->add_flag("--include-context", q.include_context, "let patterns match context tokens too");
  query->add_flag("--count-only", q.count_only, "print only the number of hits");
  query->add_option("--tsv", q.tsv_path, "write the concordance as TSV");
  query->add_option("--breakdown", q.breakdown, "print a frequency table / box summary for a variable");
  query->add_option("--crosstab", q.crosstab, "cross-tabulate --breakdown with this variable");
  query->add_option("--min-count", q.min_count, "drop crosstab rows/columns below this total");
  query->add_option("--limit", q.limit, "concordance lines to print");

  std::string bench_dataset, bench_queries;
  int repetitions = 10;
  auto* bench = app.add_subcommand("bench", "time queries against one loaded dataset");
  bench->add_option("dataset", bench_dataset)->required();
  bench->add_option("queries", bench_queries, "query file: <deql>[<TAB>filter]... per line")->required();
  bench->add_option("--repetitions", repetitions, "runs per query (median reported)");

  dx::server::ServeOptions serve_opts;
  std::string port_flag;
  bool public_bind = false;
  auto* serve = app.add_subcommand("serve", "start the local HTTP service");
  serve->add_option("--port", port_flag, "port (env DISCOEXPLORER_PORT, default 8080)");
  serve->add_flag("--public", public_bind, "bind all interfaces instead of loopback");
  serve->add_option("--ui-dir", serve_opts.static_dir, "directory with the browser UI to serve at /");

  CLI11_PARSE(app, argc, argv);

  if (manifest.empty()) manifest = env_or("DISCOEXPLORER_MANIFEST", "");
  if (data_root.empty()) data_root = env_or("DISCOEXPLORER_DATA_ROOT", "");

  try {
    if (*validate) {
      auto sources = dx::cli::resolve_sources(manifest, validate_paths, data_root);
      return dx::cli::cmd_validate(sources, std::cout, std::cerr);
    }
    if (manifest.empty()) {
      std::cerr << "error: --manifest (or DISCOEXPLORER_MANIFEST) is required\n";
      return 2;
    }
    auto sources = dx::ingest::load_manifest(manifest, data_root);
    if (*query) {
      auto ds = dx::ingest::load_dataset(dx::cli::find_source(sources, q.dataset));
      return dx::cli::cmd_query(ds, q, std::cout, std::cerr);
    }
    if (*bench) {
      std::ifstream in(bench_queries);
      if (!in) throw dx::IoError("cannot open '" + bench_queries + "'");
      auto queries = dx::cli::parse_bench_file(in);
      auto report = dx::cli::run_bench(dx::cli::find_source(sources, bench_dataset), queries, repetitions);
      dx::cli::print_bench(report, std::cout);
      return 0;
    }
    if (*serve) {
      serve_opts.port = std::stoi(port_flag.empty() ? env_or("DISCOEXPLORER_PORT", "8080") : port_flag);
      serve_opts.host = public_bind ? "0.0.0.0" : "127.0.0.1";
      dx::server::Service service(std::make_shared<dx::server::Registry>(sources));
      std::cerr << "listening on http://" << serve_opts.host << ":" << serve_opts.port << "\n";
      return dx::server::serve(service, serve_opts);
    }
  } catch (const dx::Error& e) {
    dx::cli::print_error(std::cerr, e);
    return 1;
  }
  return 0;
}

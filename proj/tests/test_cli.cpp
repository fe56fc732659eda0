#include <gtest/gtest.h>

#include <sstream>

#include "discoexplorer/cli.hpp"
#include "fixtures.hpp"

using namespace discoexplorer;

TEST(Validate, CleanManifest) {
  auto sources = cli::resolve_sources(fixtures::path("golden.manifest"), {}, "");
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_validate(sources, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("golden\t24\t25\t"), std::string::npos) << out.str();
  EXPECT_TRUE(err.str().empty());
}

TEST(Validate, ReportsEveryProblem) {
  auto sources = cli::resolve_sources(fixtures::path("bad.manifest"), {}, "");
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_validate(sources, out, err), 1);
  EXPECT_NE(err.str().find("bad_bounds: "), std::string::npos) << err.str();
  EXPECT_NE(err.str().find("bad_arity: "), std::string::npos) << err.str();
  EXPECT_NE(err.str().find("line 3"), std::string::npos) << err.str();
}

TEST(ResolveSources, LoosePaths) {
  auto s = cli::resolve_sources("", {fixtures::path("golden.rels"), fixtures::path("golden.conllu")}, "");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].dataset_id, "golden");
  EXPECT_THROW(cli::resolve_sources("", {fixtures::path("golden.rels")}, ""), IoError);
  EXPECT_THROW(cli::resolve_sources("", {"x.bin"}, ""), IoError);
  EXPECT_THROW(cli::find_source(s, "other"), NotFoundError);
}

TEST(Query, CountAndBreakdown) {
  auto ds = fixtures::golden();
  cli::QueryOptions o;
  o.query = "if || then";
  o.filters.label = "CONDITION";
  o.count_only = true;
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_query(ds, o, out, err), 0);
  EXPECT_EQ(out.str(), "2\n");

  o.count_only = false;
  o.filters.label.reset();
  o.breakdown = "disrpt_label";
  out.str("");
  EXPECT_EQ(cli::cmd_query(ds, o, out, err), 0);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "value\tcount\tpercent");
  EXPECT_NE(out.str().find("CONDITION\t2\t"), std::string::npos);
  EXPECT_NE(out.str().find("CONCESSION\t1\t"), std::string::npos);
}

TEST(Query, ErrorsReturnTwo) {
  auto ds = fixtures::golden();
  cli::QueryOptions o;
  o.query = "a || b || c";
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_query(ds, o, out, err), 2);
  EXPECT_NE(err.str().find("multiple operators"), std::string::npos);
  o.query = "";
  o.filters.direction = "2>1";
  err.str("");
  EXPECT_EQ(cli::cmd_query(ds, o, out, err), 2);
  EXPECT_NE(err.str().find("1<2"), std::string::npos);
}

TEST(Bench, QueryFileGrammar) {
  std::istringstream in("# comment\n\nthink\nthink|VERB|advcl\texact\n\tlabel=ELABORATION\nthink|VERB\t!label=CONJUNCTION\n");
  auto qs = cli::parse_bench_file(in);
  ASSERT_EQ(qs.size(), 4u);
  EXPECT_FALSE(qs[0].filters.label);
  EXPECT_TRUE(qs[1].exact);
  EXPECT_EQ(qs[2].text, "");
  EXPECT_EQ(qs[2].filters.label->value, "ELABORATION");
  EXPECT_TRUE(qs[3].filters.label->negated);
  std::istringstream bad("x\tcolour=red\n");
  EXPECT_THROW(cli::parse_bench_file(bad), FormatError);
}

TEST(Bench, EmptyQueryFileStillReportsLoad) {
  std::istringstream in("");
  auto report = cli::run_bench(fixtures::golden_source(), cli::parse_bench_file(in), 3);
  EXPECT_EQ(report.relations, 24u);
  EXPECT_TRUE(report.rows.empty());
  std::ostringstream out;
  cli::print_bench(report, out);
  EXPECT_EQ(out.str().rfind("load\t", 0), 0u);
  EXPECT_EQ(out.str().find("query\t"), std::string::npos);
}

TEST(Bench, TimesEachQuery) {
  std::istringstream in("if\tlabel=CONDITION\n\tlabel=PURPOSE\n");
  auto report = cli::run_bench(fixtures::golden_source(), cli::parse_bench_file(in), 5);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].hits, 6u);
  EXPECT_EQ(report.rows[1].hits, 5u);
  EXPECT_LE(report.rows[0].min_ms, report.rows[0].median_ms);
  EXPECT_LE(report.rows[0].median_ms, report.rows[0].max_ms);
}

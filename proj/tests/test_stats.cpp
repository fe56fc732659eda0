#include <gtest/gtest.h>

#include <cmath>

#include "discoexplorer/stats.hpp"
#include "fixtures.hpp"
#include "synthetic.hpp"

using namespace discoexplorer;
using stats::CategoricalKind;
using stats::CategoricalVar;

namespace {

// Chi-squared survival function for integer dof, from the textbook closed
// forms: a finite Poisson sum for even dof, erfc plus a half-integer sum for
// odd dof.
double chi2_sf_closed(double x, int k) {
  double h = x / 2.0;
  if (k % 2 == 0) {
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < k / 2; ++j) {
      term *= h / j;
      sum += term;
    }
    return std::exp(-h) * sum;
  }
  double sum = std::erfc(std::sqrt(h));
  for (int j = 1; j <= (k - 1) / 2; ++j) sum += std::exp((j - 0.5) * std::log(h) - h - std::lgamma(j + 0.5));
  return sum;
}

std::vector<int> all(const Dataset& ds) {
  std::vector<int> out;
  for (const auto& r : ds.relations) out.push_back(r.ordinal);
  return out;
}

CategoricalVar var(CategoricalKind k) { return CategoricalVar{k, {}, {}}; }

}  // namespace

TEST(ChiSquare, BalancedTableIsNull) {
  auto t = stats::crosstab_from_counts({"a", "b"}, {"x", "y"}, {{10, 10}, {10, 10}});
  ASSERT_TRUE(t.applicable);
  EXPECT_DOUBLE_EQ(t.chi2, 0.0);
  EXPECT_DOUBLE_EQ(t.p_value, 1.0);
  EXPECT_EQ(t.sig_code, "");
  EXPECT_EQ(t.dof, 1);
}

TEST(ChiSquare, SkewedTwoByTwo) {
  auto t = stats::crosstab_from_counts({"a", "b"}, {"x", "y"}, {{20, 10}, {10, 20}});
  EXPECT_NEAR(t.chi2, 20.0 / 3.0, 1e-6);
  EXPECT_NEAR(t.p_value, 0.0098, 1e-4);
  EXPECT_NEAR(t.p_value, std::erfc(std::sqrt(10.0 / 3.0)), 1e-10);
  EXPECT_EQ(t.sig_code, "**");
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_DOUBLE_EQ(t.expected[i][j], 15.0);
      EXPECT_NEAR(std::fabs(t.pearson_residuals[i][j]), 5.0 / std::sqrt(15.0), 1e-6);
    }
  }
  EXPECT_GT(t.pearson_residuals[0][0], 0);
  EXPECT_LT(t.pearson_residuals[0][1], 0);
}

TEST(ChiSquare, YatesCorrection) {
  auto t = stats::crosstab_from_counts({"a", "b"}, {"x", "y"}, {{20, 10}, {10, 20}}, {0, true});
  EXPECT_TRUE(t.yates);
  EXPECT_NEAR(t.chi2, 4 * 4.5 * 4.5 / 15.0, 1e-12);
  auto big = stats::crosstab_from_counts({"a", "b", "c"}, {"x", "y"}, {{20, 10}, {10, 20}, {5, 5}}, {0, true});
  EXPECT_FALSE(big.yates);
}

TEST(ChiSquare, PValueMatchesClosedForm) {
  for (int dof = 1; dof <= 20; ++dof) {
    for (double x = 0.0; x <= 100.0; x += 0.25) {
      ASSERT_NEAR(stats::chi2_sf(x, dof), chi2_sf_closed(x, dof), 1e-8) << "dof " << dof << " x " << x;
    }
  }
  EXPECT_TRUE(std::isnan(stats::chi2_sf(1.0, 0)));
}

TEST(ChiSquare, RectangularTableAgainstHandComputation) {
  std::vector<std::vector<long long>> o = {{10, 20, 30}, {20, 20, 20}};
  auto t = stats::crosstab_from_counts({"a", "b"}, {"x", "y", "z"}, o);
  double expect = 0;
  double rt[2] = {60, 60}, ct[3] = {30, 40, 50};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      double e = rt[i] * ct[j] / 120.0;
      expect += (double(o[std::size_t(i)][std::size_t(j)]) - e) * (double(o[std::size_t(i)][std::size_t(j)]) - e) / e;
    }
  }
  EXPECT_NEAR(t.chi2, expect, 1e-12);
  EXPECT_EQ(t.dof, 2);
  EXPECT_NEAR(t.p_value, std::exp(-expect / 2), 1e-12);
  EXPECT_EQ(t.sig_code, ".");
}

TEST(ChiSquare, SignificanceCodes) {
  EXPECT_EQ(stats::significance_code(0.0005), "***");
  EXPECT_EQ(stats::significance_code(0.001), "**");
  EXPECT_EQ(stats::significance_code(0.049), "*");
  EXPECT_EQ(stats::significance_code(0.05), ".");
  EXPECT_EQ(stats::significance_code(0.1), "");
}

TEST(CrossTab, DropsSparseAndEmptyMargins) {
  auto t = stats::crosstab_from_counts({"a", "b", "c"}, {"x", "y", "z"}, {{10, 5, 0}, {4, 6, 0}, {1, 0, 0}}, {3, false});
  EXPECT_EQ(t.row_values, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.col_values, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(t.n, 25);
  auto thin = stats::crosstab_from_counts({"a", "b"}, {"x", "y"}, {{10, 0}, {4, 0}});
  EXPECT_FALSE(thin.applicable);
  EXPECT_EQ(thin.col_values, (std::vector<std::string>{"x"}));
}

TEST(CrossTab, CountsAgreeWithDirectTally) {
  auto ds = synth::make({}, "syn");
  auto ids = all(ds);
  auto t = stats::crosstab(ids, var(CategoricalKind::DisrptLabel), var(CategoricalKind::SignalType), ds);
  ASSERT_TRUE(t.applicable);
  long long total = 0;
  for (std::size_t i = 0; i < t.row_values.size(); ++i) {
    for (std::size_t j = 0; j < t.col_values.size(); ++j) {
      long long n = 0;
      for (const auto& rel : ds.relations) {
        if (rel.disrpt_label != t.row_values[i]) continue;
        if (rel.signals.empty()) n += t.col_values[j] == "None";
        for (const auto& s : rel.signals) n += s.sig_type == t.col_values[j];
      }
      EXPECT_EQ(t.observed[i][j], n);
      total += n;
    }
  }
  EXPECT_EQ(t.n, total);
}

TEST(CrossTab, TransposeKeepsStatistic) {
  auto ds = synth::make({}, "syn");
  auto ids = all(ds);
  auto a = stats::crosstab(ids, var(CategoricalKind::DisrptLabel), var(CategoricalKind::Direction), ds);
  auto b = stats::crosstab(ids, var(CategoricalKind::Direction), var(CategoricalKind::DisrptLabel), ds);
  EXPECT_NEAR(a.chi2, b.chi2, 1e-9);
  EXPECT_EQ(a.dof, b.dof);
}

TEST(Frequencies, GoldenLabels) {
  auto ds = fixtures::golden();
  auto t = stats::frequencies(all(ds), var(CategoricalKind::DisrptLabel), ds);
  EXPECT_EQ(t.total, 24);
  ASSERT_EQ(t.rows.size(), 7u);
  EXPECT_EQ(t.rows[0], (stats::FreqRow{"CONDITION", 7, 100.0 * 7 / 24}));
  EXPECT_EQ(t.rows[1].value, "PURPOSE");
  EXPECT_EQ(t.rows[2].value, "TEMPORAL");
  EXPECT_EQ(t.rows[3].value, "ELABORATION");
  // ties broken lexicographically
  EXPECT_EQ(t.rows[4].value, "CAUSAL");
  EXPECT_EQ(t.rows[5].value, "CONCESSION");
  EXPECT_EQ(t.rows[6], (stats::FreqRow{"CONJUNCTION", 1, 100.0 / 24}));
}

TEST(Frequencies, SignalsCountPerSignalWithNone) {
  auto ds = fixtures::golden();
  auto t = stats::frequencies(all(ds), var(CategoricalKind::SignalType), ds);
  std::map<std::string, long long> got;
  for (const auto& r : t.rows) got[r.value] = r.count;
  // R0 carries two dm signals; five relations have none
  EXPECT_EQ(got["dm"], 15);
  EXPECT_EQ(got["None"], 5);
  EXPECT_EQ(got["syntactic"], 3);
  EXPECT_EQ(got["semantic"], 1);
  EXPECT_EQ(got["lexical"], 1);
}

TEST(Frequencies, MetadataKeyAbsent) {
  auto ds = fixtures::golden();
  auto t = stats::frequencies(all(ds), CategoricalVar{CategoricalKind::Metadata, "speaker", {}}, ds);
  EXPECT_TRUE(t.key_absent);
  EXPECT_TRUE(t.rows.empty());
  // genre comes from GUM-style document ids
  auto g = stats::frequencies(all(ds), CategoricalVar{CategoricalKind::Metadata, "genre", {}}, ds);
  EXPECT_EQ(g.rows, (std::vector<stats::FreqRow>{{"news", 22, 100.0 * 22 / 24}, {"academic", 2, 100.0 * 2 / 24}}));
  auto syn = synth::make({}, "syn");
  auto m = stats::frequencies(all(syn), CategoricalVar{CategoricalKind::Metadata, "meta", {}}, syn);
  EXPECT_FALSE(m.key_absent);
  EXPECT_EQ(m.total, (long long)syn.relations.size());
}

TEST(Frequencies, FilterMatch) {
  auto ds = fixtures::golden();
  deql::Filters f;
  f.signal_type = deql::ValueFilter{"dm", false};
  auto t = stats::frequencies(all(ds), CategoricalVar{CategoricalKind::FilterMatch, {}, f}, ds);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (stats::FreqRow{"yes", 14, 100.0 * 14 / 24}));
  EXPECT_EQ(t.rows[1].count, 10);
}

TEST(Numeric, GoldenValues) {
  auto ds = fixtures::golden();
  const auto& because = ds.relations[22];  // arg1 0-3, arg2 5-8, source arg2, 16 tokens in doc
  EXPECT_EQ(stats::numeric_value(because, stats::NumericalVar::Arg1Len, ds), 4);
  EXPECT_EQ(stats::numeric_value(because, stats::NumericalVar::SrcLen, ds), 4);
  EXPECT_EQ(stats::numeric_value(because, stats::NumericalVar::ArgDistance, ds), 1);
  EXPECT_NEAR(stats::numeric_value(because, stats::NumericalVar::SrcDocPercentile, ds), 100.0 * 5 / 16, 1e-12);
  EXPECT_EQ(stats::numeric_value(because, stats::NumericalVar::TgtDocPercentile, ds), 0);
  EXPECT_EQ(stats::numeric_value(ds.relations[0], stats::NumericalVar::SignalCount, ds), 2);
  EXPECT_EQ(stats::numeric_value(ds.relations[18], stats::NumericalVar::Arg1Len, ds), 5);
}

TEST(Box, TypeSevenQuantilesAndOutliers) {
  auto b = stats::box_summary({4, 1, 3, 2, 100});
  ASSERT_TRUE(b);
  EXPECT_EQ(b->n, 5u);
  EXPECT_EQ(b->q1, 2);
  EXPECT_EQ(b->median, 3);
  EXPECT_EQ(b->q3, 4);
  EXPECT_EQ(b->whisker_low, 1);
  EXPECT_EQ(b->whisker_high, 4);
  EXPECT_EQ(b->outliers, std::vector<double>{100});
  auto even = stats::box_summary({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(even->q1, 1.75);
  EXPECT_DOUBLE_EQ(even->median, 2.5);
  EXPECT_DOUBLE_EQ(even->q3, 3.25);
  EXPECT_FALSE(stats::box_summary({}));
  auto one = stats::box_summary({7});
  EXPECT_EQ(one->min, 7);
  EXPECT_EQ(one->max, 7);
}

TEST(Box, GroupedFollowsFrequencyOrder) {
  auto ds = fixtures::golden();
  auto groups = stats::grouped_box(all(ds), stats::NumericalVar::SignalCount, var(CategoricalKind::DisrptLabel), ds);
  ASSERT_EQ(groups.size(), 7u);
  EXPECT_EQ(groups[0].first, "CONDITION");
  EXPECT_EQ(groups[0].second.n, 7u);
  EXPECT_EQ(groups[0].second.max, 2);
  EXPECT_EQ(groups[0].second.min, 0);
}

TEST(Compare, NormalizesEachSide) {
  auto c = stats::pair_tables(stats::freq_from_counts({{"CONJUNCTION", 6}, {"ELABORATION", 4}}),
                              stats::freq_from_counts({{"CONJUNCTION", 2}, {"ELABORATION", 8}}));
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(c.rows[0].value, "ELABORATION");
  EXPECT_DOUBLE_EQ(c.rows[0].percent_a, 40);
  EXPECT_DOUBLE_EQ(c.rows[0].percent_b, 80);
  EXPECT_DOUBLE_EQ(c.rows[1].percent_a, 60);
  EXPECT_DOUBLE_EQ(c.rows[1].percent_b, 20);
}

TEST(Compare, DatasetWithItselfIsSymmetric) {
  auto ds = fixtures::golden();
  auto nosig = fixtures::nosig();
  auto self = stats::compare("", {}, false, ds, ds, stats::parse_variable("disrpt_label"));
  for (const auto& r : self.rows) {
    EXPECT_EQ(r.count_a, r.count_b);
    EXPECT_DOUBLE_EQ(r.percent_a, r.percent_b);
  }
  deql::Filters f;
  f.signal_type = deql::ValueFilter{"dm", false};
  auto other = stats::compare("", f, false, ds, nosig, stats::parse_variable("disrpt_label"));
  EXPECT_EQ(other.total_a, 14);
  EXPECT_EQ(other.total_b, 0);
  auto num = stats::compare("if", {}, false, ds, nosig, stats::parse_variable("arg1_len"));
  EXPECT_TRUE(num.numerical);
  EXPECT_EQ(num.box_a->n, num.box_b->n);
}

TEST(Variables, ParseNames) {
  EXPECT_EQ(std::get<CategoricalVar>(stats::parse_variable("metadata:genre")).key, "genre");
  EXPECT_EQ(std::get<stats::NumericalVar>(stats::parse_variable("arg_distance")), stats::NumericalVar::ArgDistance);
  EXPECT_THROW(stats::parse_variable("metadata:"), ValidationError);
  EXPECT_THROW(stats::parse_variable("bogus"), ValidationError);
}

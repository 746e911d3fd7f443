#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "ligas/analysis.hpp"
#include "ligas/errors.hpp"
#include "ligas/rng.hpp"

namespace ligas::analysis {
namespace {

struct Row {
  Category cat;
  std::size_t cc_plus, cc_minus, mc_plus, mc_minus;
  double cc_pct, mc_pct;  // as printed
};

// Raw counts and printed percentages of the published sign table.
const std::vector<Row> kPublished = {
    {Category::CIA, 144, 18, 7, 13, 88.88, 35},
    {Category::RAA, 100, 0, 2, 42, 100, 4.54},
    {Category::SVA, 441, 35, 148, 52, 92.64, 74},
    {Category::SVO, 362, 38, 54, 46, 90.5, 54},
    {Category::WHE, 465, 51, 0, 4, 90.11, 0},
};

std::vector<SignRecord> records_for(const std::vector<Row>& rows) {
  std::vector<SignRecord> out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.cc_plus; ++i) out.push_back({r.cat, Outcome::CC, 1.0});
    for (std::size_t i = 0; i < r.cc_minus; ++i) out.push_back({r.cat, Outcome::CC, -1.0});
    for (std::size_t i = 0; i < r.mc_plus; ++i) out.push_back({r.cat, Outcome::MC, 0.5});
    for (std::size_t i = 0; i < r.mc_minus; ++i) out.push_back({r.cat, Outcome::MC, 0.0});
  }
  return out;
}

TEST(Outcome, FourCases) {
  EXPECT_EQ(outcome(Label::LA, Label::LA), Outcome::CC);
  EXPECT_EQ(outcome(Label::LUA, Label::LUA), Outcome::CC);
  EXPECT_EQ(outcome(Label::LUA, Label::LA), Outcome::MC);
  EXPECT_EQ(outcome(Label::LA, Label::LUA), Outcome::MC);
}

TEST(SignStats, PublishedTableWithinTolerance) {
  auto recs = records_for(kPublished);
  auto stats = sign_stats(recs);
  ASSERT_EQ(stats.size(), 5u);
  // Hand-computed: 144/162, 7/20, 100/100, 2/44, 441/476, 148/200, 362/400, 54/100, 465/516, 0/4.
  const double oracle_cc[] = {88.8889, 100.0, 92.6471, 90.5, 90.1163};
  const double oracle_mc[] = {35.0, 4.5455, 74.0, 54.0, 0.0};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(stats[i].category, kPublished[i].cat);
    ASSERT_TRUE(stats[i].cc_plus_pct && stats[i].mc_plus_pct);
    EXPECT_NEAR(*stats[i].cc_plus_pct, oracle_cc[i], 1e-4);
    EXPECT_NEAR(*stats[i].mc_plus_pct, oracle_mc[i], 1e-4);
    EXPECT_NEAR(*stats[i].cc_plus_pct, kPublished[i].cc_pct, 0.01);
    EXPECT_NEAR(*stats[i].mc_plus_pct, kPublished[i].mc_pct, 0.01);
  }
  EXPECT_EQ(stats[0].c, 182u);
  EXPECT_EQ(stats[2].c, 676u);
  // (7+2+148+54+0)/(20+44+200+100+4) = 211/368
  auto agg = aggregate_mc_positive(stats);
  ASSERT_TRUE(agg);
  EXPECT_NEAR(*agg, 100.0 * 211.0 / 368.0, 1e-12);
  EXPECT_NEAR(*agg, 57.0, 0.5);
}

TEST(SignStats, ZeroIsNonPositiveAndEmptyCases) {
  std::vector<SignRecord> r = {{Category::SVA, Outcome::CC, 0.0}};
  auto s = sign_stats(r);
  EXPECT_EQ(s[0].cc_minus, 1u);
  EXPECT_FALSE(s[0].mc_plus_pct);
  EXPECT_TRUE(sign_stats({}).empty());
  EXPECT_FALSE(aggregate_mc_positive(s));
  std::vector<SignRecord> all_minus = {{Category::CIA, Outcome::MC, -1.0}};
  EXPECT_EQ(*aggregate_mc_positive(sign_stats(all_minus)), 0.0);
}

TEST(SignStats, CountIdentitiesAndPermutationInvariance) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SignRecord> r;
    const std::size_t n = rng.below(200);
    for (std::size_t i = 0; i < n; ++i) {
      r.push_back({kAllCategories[rng.below(5)], rng.below(2) ? Outcome::CC : Outcome::MC,
                   rng.uniform(-1.0, 1.0)});
    }
    auto s = sign_stats(r);
    std::size_t total = 0;
    for (const auto& x : s) {
      EXPECT_EQ(x.c, x.cc + x.mc);
      EXPECT_EQ(x.cc, x.cc_plus + x.cc_minus);
      EXPECT_EQ(x.mc, x.mc_plus + x.mc_minus);
      total += x.c;
    }
    EXPECT_EQ(total, n);
    rng.shuffle(r);
    auto t = sign_stats(r);
    ASSERT_EQ(t.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(t[i].cc_plus, s[i].cc_plus);
      EXPECT_EQ(t[i].mc_minus, s[i].mc_minus);
    }
  }
}

TEST(Format, PercentHalfEven) {
  EXPECT_EQ(format_percent(100.0 * 144 / 162), "88.89");
  EXPECT_EQ(format_percent(12.125), "12.12");
  EXPECT_EQ(format_percent(12.375), "12.38");
  EXPECT_EQ(format_percent(0.0), "0.00");
  EXPECT_EQ(format_percent(std::nullopt), "");
}

TEST(StatsCsv, HeaderAndRows) {
  auto stats = sign_stats(records_for(kPublished));
  std::ostringstream out;
  write_stats_csv(out, stats, std::vector<std::string>{"digest abc"});
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("# digest abc\ncategory,C,CC,MC,CCplus,CCminus,MCplus,MCminus,CCplus_pct,MCplus_pct\n", 0), 0u);
  EXPECT_NE(s.find("CIA,182,162,20,144,18,7,13,88.89,35.00\n"), std::string::npos);
}

TEST(Scatter, CsvAndSvg) {
  std::vector<ScatterPoint> p = {{0.9, 1.5, Outcome::CC}, {0.6, -0.5, Outcome::MC}, {0.7, 0.25, Outcome::CC}};
  std::ostringstream cc, mc;
  write_scatter_csv(cc, p, Outcome::CC);
  EXPECT_EQ(cc.str(), "prob,ligas\n0.9,1.5\n0.7,0.25\n");
  write_scatter_csv(mc, std::vector<ScatterPoint>{}, Outcome::MC);
  EXPECT_EQ(mc.str(), "prob,ligas\n");
  auto svg = scatter_svg(p, Outcome::CC, "CC");
  std::size_t circles = 0;
  for (std::size_t at = svg.find("<circle"); at != std::string::npos; at = svg.find("<circle", at + 1)) ++circles;
  EXPECT_EQ(circles, 2u);
}

TEST(Heatmap, ColorsAndSpans) {
  EXPECT_EQ(heat_color(0.0, 0.0), (Rgb{255, 255, 255}));
  EXPECT_EQ(heat_color(2.0, 2.0), (Rgb{0, 170, 0}));
  EXPECT_EQ(heat_color(-2.0, 2.0), (Rgb{220, 0, 0}));
  EXPECT_EQ(heat_color(1.0, 2.0), (Rgb{128, 213, 128}));

  HeatmapInput in{"s1", {"the", "dog", "<barks>", "loudly", "."}, {0.1, -0.4, 0.8, 0.0, 0.2}, Label::LA, 0.93};
  auto html = heatmap_render(in);
  std::size_t spans = 0;
  for (std::size_t at = html.find("title=\"ligas="); at != std::string::npos;
       at = html.find("title=\"ligas=", at + 1)) {
    ++spans;
  }
  EXPECT_EQ(spans, 5u);
  EXPECT_NE(html.find("rgb(0,170,0)"), std::string::npos);
  EXPECT_NE(html.find("&lt;barks&gt;"), std::string::npos);
  EXPECT_NE(html.find("predicted=LA"), std::string::npos);

  HeatmapInput zeros{"s2", {"a", "b"}, {0.0, 0.0}, Label::LUA, 0.5};
  auto z = heatmap_render(zeros);
  EXPECT_EQ(z.find("rgb(255,255,255)"), z.find("rgb("));
  EXPECT_EQ(z.find("rgb(0"), std::string::npos);
}

TEST(Magnitudes, MeanAbsPerLabel) {
  std::vector<Label> gold = {Label::LA, Label::LUA, Label::LUA, Label::LA};
  std::vector<double> v = {1.0, -4.0, 2.0, -1.0};
  auto m = compare_magnitudes(gold, v);
  EXPECT_EQ(m.la_mean_abs, 1.0);
  EXPECT_EQ(m.lua_mean_abs, 3.0);
  EXPECT_EQ(*m.ratio, 3.0);
  EXPECT_THROW(compare_magnitudes(gold, std::vector<double>{1.0}), DataError);
}

}  // namespace
}  // namespace ligas::analysis

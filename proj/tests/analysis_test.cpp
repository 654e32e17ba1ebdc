#include <gtest/gtest.h>

#include <random>

#include "perfest/analysis.hpp"

using namespace perfest;

namespace {

/// Results whose cell (t, w) holds scores[t][w][iteration][metric]; NaN marks
/// an invalid iteration.
ComparisonResults fake(const std::vector<std::string>& tasks, const std::vector<std::string>& wfs,
                       const std::vector<std::string>& metrics,
                       const std::vector<std::vector<std::vector<std::vector<double>>>>& scores, std::int64_t seed = 1234) {
  ComparisonResults r;
  r.estimation.metrics = metrics;
  r.estimation.method = CvSettings{.n_reps = 1, .n_folds = 3, .seed = seed};
  r.metrics = metrics;
  r.provenance = Provenance{seed, method_descriptor(r.estimation.method), kToolVersion, "t"};
  for (const auto& t : tasks) r.tasks.push_back(TaskDescriptor{t, "y ~ .", TaskType::regression, 30, "", 42});
  for (const auto& w : wfs) r.workflows.push_back(make_workflow({{"learner", "linreg"}}, w));
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    r.records.emplace_back();
    for (std::size_t w = 0; w < wfs.size(); ++w) {
      std::vector<IterationRecord> cell;
      for (std::size_t i = 0; i < scores[t][w].size(); ++i) {
        IterationRecord rec;
        rec.split_index = i;
        if (std::isnan(scores[t][w][i][0])) {
          rec.error = "failed";
        } else {
          ScoreVector s;
          for (std::size_t m = 0; m < metrics.size(); ++m) s.set(metrics[m], scores[t][w][i][m]);
          rec.scores = s;
        }
        cell.push_back(rec);
      }
      r.records.back().push_back(cell);
    }
  }
  return r;
}

/// One metric, one iteration value per (task, workflow).
ComparisonResults grid(const std::vector<std::string>& tasks, const std::vector<std::string>& wfs,
                       const std::vector<std::vector<std::vector<double>>>& per_iter) {
  std::vector<std::vector<std::vector<std::vector<double>>>> s;
  for (const auto& row : per_iter) {
    s.emplace_back();
    for (const auto& cell : row) {
      s.back().emplace_back();
      for (double v : cell) s.back().back().push_back({v});
    }
  }
  return fake(tasks, wfs, {"mse"}, s);
}

constexpr double NaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST(Summary, BasicStatistics) {
  auto st = describe_values({0.0, 0.0, 0.1});
  EXPECT_NEAR(*st.avg, 0.1 / 3, 1e-15);
  EXPECT_EQ(*st.min, 0.0);
  EXPECT_EQ(*st.max, 0.1);
  EXPECT_EQ(*st.med, 0.0);
  EXPECT_NEAR(*st.std, std::sqrt((2 * std::pow(0.1 / 3, 2) + std::pow(0.2 / 3, 2)) / 2), 1e-15);
  EXPECT_NEAR(*st.iqr, 0.05, 1e-15);  // q75 = 0.05, q25 = 0
  EXPECT_EQ(st.invalid, 0u);
}

TEST(Summary, TenFoldErrorShape) {
  // one error of 2/15 and others at 0 or 1/15 give the familiar iris-style spread
  std::vector<std::optional<double>> v{0, 0, 0, 1.0 / 15, 0, 2.0 / 15, 0, 1.0 / 15, 0, 1.0 / 15};
  auto st = describe_values(v);
  EXPECT_NEAR(*st.avg, 1.0 / 30, 1e-12);
  EXPECT_NEAR(*st.iqr, 1.0 / 15, 1e-12);
  EXPECT_EQ(st.invalid, 0u);
}

TEST(Summary, SingleScoreHasNoStd) {
  auto st = describe_values({0.25});
  EXPECT_EQ(*st.avg, 0.25);
  EXPECT_EQ(*st.med, 0.25);
  EXPECT_EQ(*st.min, 0.25);
  EXPECT_EQ(*st.max, 0.25);
  EXPECT_FALSE(st.std.has_value());
}

TEST(Summary, InvalidCounted) {
  auto r = grid({"t"}, {"A"}, {{{1, NaN, 3}}});
  auto s = summarize(r);
  ASSERT_EQ(s.cells.size(), 1u);
  EXPECT_EQ(s.cells[0].of("mse").invalid, 1u);
  EXPECT_EQ(*s.cells[0].of("mse").avg, 2.0);
  auto all_bad = grid({"t"}, {"A"}, {{{NaN, NaN}}});
  const auto& st = summarize(all_bad).cells[0].of("mse");
  EXPECT_FALSE(st.avg.has_value());
  EXPECT_EQ(st.invalid, 2u);
}

TEST(Summary, PermutationInvariant) {
  std::vector<std::optional<double>> v;
  std::mt19937 g(5);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 25; ++i) v.push_back(u(g));
  v[3].reset();
  const auto base = describe_values(v);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(v.begin(), v.end(), g);
    const auto s = describe_values(v);
    EXPECT_NEAR(*s.avg, *base.avg, 1e-12);
    EXPECT_NEAR(*s.std, *base.std, 1e-12);
    EXPECT_EQ(s.med, base.med);
    EXPECT_EQ(s.iqr, base.iqr);
    EXPECT_EQ(s.min, base.min);
    EXPECT_EQ(s.max, base.max);
    EXPECT_EQ(s.invalid, base.invalid);
  }
}

TEST(Summary, PrintedBlock) {
  auto r = grid({"iris.Species"}, {"svm"}, {{{0, 0.1, 0}}});
  const auto s = format_summary(r);
  EXPECT_NE(s.find("== Summary of a  Cross Validation Performance Estimation Experiment =="), std::string::npos);
  EXPECT_NE(s.find("-> Task:  iris.Species"), std::string::npos);
  EXPECT_NE(s.find("  *Workflow: svm"), std::string::npos);
  EXPECT_NE(s.find("avg     0.0333333"), std::string::npos) << s;
  EXPECT_NE(s.find("invalid         0"), std::string::npos) << s;
}

TEST(Rank, AscendingByDefault) {
  auto r = grid({"t"}, {"A", "B"}, {{{0.1}, {0.2}}});
  auto rk = rank_workflows(r);
  ASSERT_EQ(rk.size(), 1u);
  EXPECT_EQ(rk[0].entries[0].workflow, "A");
  EXPECT_EQ(rk[0].entries[1].workflow, "B");
  rk = rank_workflows(r, 5, {true});
  EXPECT_EQ(rk[0].entries[0].workflow, "B");
}

TEST(Rank, TopLimitsRows) {
  std::vector<std::string> wfs;
  std::vector<std::vector<double>> cells;
  for (int i = 0; i < 18; ++i) {
    wfs.push_back("w" + std::to_string(i));
    cells.push_back({static_cast<double>(18 - i)});
  }
  auto r = grid({"a1", "a2"}, wfs, {cells, cells});
  auto rk = rank_workflows(r, 5);
  ASSERT_EQ(rk.size(), 2u);
  for (const auto& x : rk) EXPECT_EQ(x.entries.size(), 5u);
  EXPECT_EQ(rk[0].entries[0].workflow, "w17");
}

TEST(Rank, TiesKeepDeclarationOrder) {
  auto r = grid({"t"}, {"C", "A", "B"}, {{{1.0}, {1.0}, {0.5}}});
  auto rk = rank_workflows(r);
  EXPECT_EQ(rk[0].entries[0].workflow, "B");
  EXPECT_EQ(rk[0].entries[1].workflow, "C");
  EXPECT_EQ(rk[0].entries[2].workflow, "A");
}

TEST(Rank, NegatedScoresWithMaxsMatch) {
  auto r = grid({"t"}, {"A", "B", "C"}, {{{0.3}, {0.1}, {0.2}}});
  auto neg = grid({"t"}, {"A", "B", "C"}, {{{-0.3}, {-0.1}, {-0.2}}});
  auto a = rank_workflows(r, 5, {false});
  auto b = rank_workflows(neg, 5, {true});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[0].entries[i].workflow, b[0].entries[i].workflow);
}

TEST(Rank, MaxsLengthChecked) {
  auto r = grid({"t"}, {"A"}, {{{0.3}}});
  EXPECT_THROW(rank_workflows(r, 5, {true, false}), InvalidArgument);
  EXPECT_EQ(maxs_from_names({"mse", "acc"}, {"acc"}), (MaxsFlags{false, true}));
  EXPECT_THROW(maxs_from_names({"mse"}, {"acc"}), InvalidArgument);
}

TEST(TopPerformers, PerMetricWinners) {
  auto r = fake({"t"}, {"A", "B"}, {"mse", "mae"}, {{{{1.0, 5.0}}, {{2.0, 4.0}}}});
  auto tp = top_performers(r);
  ASSERT_EQ(tp.size(), 2u);
  EXPECT_EQ(tp[0].entries[0].workflow, "A");
  EXPECT_EQ(tp[1].entries[0].workflow, "B");
  auto single = top_performers(grid({"t"}, {"only"}, {{{9.0}}}));
  EXPECT_EQ(single[0].entries[0].workflow, "only");
  auto broken = top_performers(grid({"t"}, {"bad", "ok"}, {{{NaN}, {100.0}}}));
  EXPECT_EQ(broken[0].entries[0].workflow, "ok");
}

TEST(GetScores, MatrixAndErrors) {
  std::vector<std::vector<double>> thirty;
  for (int i = 0; i < 30; ++i) thirty.push_back({static_cast<double>(i), static_cast<double>(2 * i)});
  thirty[4][0] = NaN;
  auto r = fake({"a3"}, {"svm.v6"}, {"mse", "mae"}, {{thirty}});
  auto m = get_scores(r, "svm.v6", "a3");
  ASSERT_EQ(m.rows.size(), 30u);
  EXPECT_EQ(*m.rows[29][1], 58.0);
  EXPECT_FALSE(m.rows[4][0].has_value());
  EXPECT_FALSE(m.rows[4][1].has_value());
  EXPECT_THROW(get_scores(r, "nope", "a3"), InvalidArgument);
  EXPECT_THROW(get_scores(r, "svm.v6", "nope"), InvalidArgument);
  EXPECT_NE(format_score_matrix(m).find("[30,]"), std::string::npos);
}

TEST(EstimationSummary, SingleCell) {
  auto r = grid({"a7"}, {"x", "y"}, {{{1, 2, 3}, {4, NaN}}});
  auto c = estimation_summary(r, "y", "a7");
  EXPECT_EQ(*c.of("mse").avg, 4.0);
  EXPECT_EQ(c.of("mse").invalid, 1u);
  EXPECT_THROW(estimation_summary(r, "z", "a7"), InvalidArgument);
}

TEST(MetricsSummary, Reducers) {
  auto r = grid({"t"}, {"A", "B"}, {{{1, 2, 9}, {NaN, NaN}}});
  EXPECT_EQ(*metrics_summary(r, Reducer::median).reduced[0][0][0], 2.0);
  EXPECT_EQ(*metrics_summary(r, Reducer::mean).reduced[0][0][0], *summarize(r).cells[0].of("mse").avg);
  EXPECT_FALSE(metrics_summary(r, Reducer::max).reduced[0][0][1].has_value());
  EXPECT_EQ(*metrics_summary(r, Reducer::min).reduced[0][0][0], 1.0);
  EXPECT_THROW(reducer_from_string("mode"), InvalidArgument);
}

TEST(Subset, RegexOnWorkflows) {
  std::vector<std::string> wfs;
  std::vector<std::vector<double>> cells;
  for (int i = 1; i <= 15; ++i) {
    wfs.push_back("svm.v" + std::to_string(i));
    cells.push_back({static_cast<double>(i)});
  }
  auto r = grid({"a1"}, wfs, {cells});
  auto s = subset_results(r, std::nullopt, "4$", std::nullopt);
  EXPECT_EQ(s.workflow_names(), (std::vector<std::string>{"svm.v4", "svm.v14"}));
  EXPECT_EQ(*get_scores(s, "svm.v14", "a1").rows[0][0], 14.0);
  EXPECT_EQ(s.provenance, r.provenance);
  auto g = subset_results(r, std::nullopt, glob_to_regex("*svm*"), std::nullopt);
  EXPECT_EQ(g.workflows.size(), 15u);
}

TEST(Subset, UnanchoredTaskSearch) {
  std::vector<std::string> tasks{"a1", "a2", "a3", "a4", "a5", "a6", "a7", "a10"};
  std::vector<std::vector<std::vector<double>>> cells(tasks.size(), {{1.0}});
  auto r = grid(tasks, {"w"}, cells);
  EXPECT_EQ(subset_results(r, "a1", std::nullopt, std::nullopt).task_names(), (std::vector<std::string>{"a1", "a10"}));
  EXPECT_EQ(subset_results(r, "^a1$", std::nullopt, std::nullopt).task_names(), std::vector<std::string>{"a1"});
}

TEST(Subset, MetricsAndErrors) {
  auto r = fake({"t"}, {"A"}, {"mse", "mae"}, {{{{1.0, 2.0}}}});
  auto s = subset_results(r, std::nullopt, std::nullopt, "mae");
  EXPECT_EQ(s.metrics, std::vector<std::string>{"mae"});
  EXPECT_EQ(s.records[0][0][0].scores->names(), std::vector<std::string>{"mae"});
  EXPECT_THROW(subset_results(r, "zzz", std::nullopt, std::nullopt), InvalidArgument);
  EXPECT_THROW(subset_results(r, std::nullopt, "(", std::nullopt), InvalidArgument);
  try {
    subset_results(r, std::nullopt, "nomatch", std::nullopt);
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("workflows"), std::string::npos);
  }
}

TEST(Glob, Conversion) {
  EXPECT_EQ(glob_to_regex("*svm*"), "^.*svm");
  EXPECT_EQ(glob_to_regex("a?.csv"), "^a.\\.csv$");
}

TEST(Merge, WorkflowsThenTasks) {
  auto cells = [](std::size_t n) { return std::vector<std::vector<double>>(n, {1.0, 2.0, 3.0}); };
  std::vector<std::string> svm, rf, t1{"a1", "a2", "a3", "a4"}, t2{"a5", "a6", "a7"};
  for (int i = 1; i <= 12; ++i) svm.push_back("svm.v" + std::to_string(i));
  for (int i = 1; i <= 6; ++i) rf.push_back("randomForest.v" + std::to_string(i));
  auto part = [&](const std::vector<std::string>& ts, const std::vector<std::string>& ws) {
    return grid(ts, ws, std::vector<std::vector<std::vector<double>>>(ts.size(), cells(ws.size())));
  };
  auto first = merge_results({part(t1, svm), part(t1, rf)}, MergeBy::workflows);
  auto second = merge_results({part(t2, svm), part(t2, rf)}, MergeBy::workflows);
  auto all = merge_results({first, second}, MergeBy::tasks);
  EXPECT_NE(describe(all).find(" 18  workflows applied to  7  predictive tasks"), std::string::npos);
  EXPECT_EQ(all.records.size(), 7u);
  EXPECT_EQ(all.records[6].size(), 18u);
  EXPECT_EQ(all.records[6][17].size(), 3u);
}

TEST(Merge, Incompatibilities) {
  auto a = grid({"t"}, {"A"}, {{{1.0}}});
  auto b = grid({"t"}, {"B"}, {{{1.0}}});
  auto other_seed = fake({"t"}, {"B"}, {"mse"}, {{{{1.0}}}}, 99);
  EXPECT_THROW(merge_results({a, other_seed}, MergeBy::workflows), Incompatible);
  EXPECT_THROW(merge_results({a, a}, MergeBy::workflows), Incompatible);
  auto c = b;
  c.tasks[0].plan_fingerprint = 7;
  EXPECT_NO_THROW(merge_results({a, c}, MergeBy::workflows));
  EXPECT_THROW(merge_results({a, c}, MergeBy::workflows, true), Incompatible);
  EXPECT_EQ(merge_results({a}, MergeBy::tasks), a);
  EXPECT_THROW(merge_by_from_string("rows"), InvalidArgument);
}

TEST(Merge, ByMetrics) {
  auto a = fake({"t"}, {"A"}, {"mse"}, {{{{1.0}, {NaN}}}});
  auto b = fake({"t"}, {"A"}, {"mae"}, {{{{3.0}, {4.0}}}});
  auto m = merge_results({a, b}, MergeBy::metrics);
  EXPECT_EQ(m.metrics, (std::vector<std::string>{"mse", "mae"}));
  EXPECT_EQ(*m.records[0][0][0].scores->get("mae"), 3.0);
  EXPECT_TRUE(m.records[0][0][1].invalid());
}

TEST(Merge, SubsetThenMergeRestoresSummaries) {
  auto r = fake({"t1", "t2"}, {"A", "B", "C"}, {"mse"},
                {{{{1}, {2}}, {{3}, {NaN}}, {{5}, {6}}}, {{{7}, {8}}, {{9}, {1}}, {{2}, {3}}}});
  auto left = subset_results(r, std::nullopt, "^A$", std::nullopt);
  auto right = subset_results(r, std::nullopt, "^(B|C)$", std::nullopt);
  auto back = merge_results({left, right}, MergeBy::workflows);
  auto s1 = summarize(r), s2 = summarize(back);
  ASSERT_EQ(s1.cells.size(), s2.cells.size());
  for (std::size_t i = 0; i < s1.cells.size(); ++i) EXPECT_EQ(s1.cells[i].stats, s2.cells[i].stats);
}

TEST(Csv, Exports) {
  auto r = fake({"t"}, {"A"}, {"mse", "mae"}, {{{{1.0, 2.0}, {NaN, 0}}}});
  const auto s = summary_csv(summarize(r));
  EXPECT_EQ(s.substr(0, s.find('\n')), "task,workflow,metric,avg,std,med,iqr,min,max,invalid");
  EXPECT_NE(s.find("t,A,mse,1,NA,1,0,1,1,1"), std::string::npos) << s;
  const auto sc = scores_csv(r);
  EXPECT_NE(sc.find("t,A,2,mse,NA"), std::string::npos);
  EXPECT_NE(rankings_csv(rank_workflows(r)).find("t,mae,1,A,2"), std::string::npos);
}

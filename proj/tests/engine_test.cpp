#include <gtest/gtest.h>

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "perfest/engine.hpp"
#include "test_support.hpp"

using namespace perfest;
using perfest::testing::blob_task;
using perfest::testing::iris_task;
using perfest::testing::linear_task;

namespace {

Workflow knn(int k, std::string id = "") {
  return make_workflow({{"learner", "knn"}, {"learner.pars", {{"k", k}}}}, std::move(id));
}

EstimationTask est_with(std::vector<std::string> metrics, EstimationMethod m) {
  EstimationTask e;
  e.metrics = std::move(metrics);
  e.method = std::move(m);
  return e;
}

std::string temp_path(const std::string& stem) {
  return (std::filesystem::temp_directory_path() / (stem + "-" + std::to_string(::getpid()) + ".json")).string();
}

}  // namespace

TEST(Engine, TenFoldGivesTenRecords) {
  auto res = performance_estimation({iris_task()}, {knn(3)}, est_with({"err"}, CvSettings{}));
  ASSERT_EQ(res.records.size(), 1u);
  ASSERT_EQ(res.records[0][0].size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& r = res.records[0][0][i];
    EXPECT_FALSE(r.invalid()) << r.error;
    EXPECT_EQ(r.split_index, i);
    EXPECT_EQ(r.scores->names(), std::vector<std::string>{"err"});
  }
}

TEST(Engine, RecordCountsPerMethod) {
  auto lin = linear_task(60, 3);
  auto count = [&](EstimationMethod m) {
    return performance_estimation({lin}, {make_workflow({{"learner", "linreg"}})}, est_with({"mse"}, m)).records[0][0].size();
  };
  EXPECT_EQ(count(CvSettings{.n_reps = 3, .n_folds = 10}), 30u);
  EXPECT_EQ(count(LoocvSettings{}), 60u);
  EXPECT_EQ(count(BootstrapSettings{.n_reps = 7}), 7u);
  EXPECT_EQ(count(HoldoutSettings{.n_reps = 4}), 4u);
  EXPECT_EQ(count(MonteCarloSettings{.n_reps = 5, .sz_train = 0.5, .sz_test = 0.25}), 5u);
}

TEST(Engine, ThrowingWorkflowYieldsInvalidRecords) {
  Registry reg;
  reg.add_workflow("boom", [](const Formula&, const DataFrame&, const DataFrame&, const Json&, Rng&) -> PluginResult {
    throw std::runtime_error("learner exploded");
  });
  Workflow w = make_workflow({{"wf", "plugin:boom"}}, "boom");
  auto res = performance_estimation({iris_task()}, {w, knn(1)}, est_with({"err"}, CvSettings{}), {.registry = &reg});
  ASSERT_EQ(res.records[0][0].size(), 10u);
  for (const auto& r : res.records[0][0]) {
    EXPECT_TRUE(r.invalid());
    EXPECT_NE(r.error.find("learner exploded"), std::string::npos);
  }
  for (const auto& r : res.records[0][1]) EXPECT_FALSE(r.invalid());
}

TEST(Engine, WorkflowsShareSplits) {
  Registry reg;
  auto recorder = [](const Formula& f, const DataFrame& train, const DataFrame& test, const Json&, Rng&) {
    // encode the training rows' x1 sum as a "prediction" so both workflows can be compared
    double s = 0;
    for (double v : train.column("x1").numbers()) s += v;
    PluginResult r;
    r.trues = test.column(f.target);
    r.preds = Predictions::numeric(std::vector<double>(test.n_rows(), s));
    return r;
  };
  reg.add_workflow("rec", recorder);
  auto lin = linear_task(40, 9);
  auto res = performance_estimation({lin}, {make_workflow({{"wf", "rec"}}, "A"), make_workflow({{"wf", "rec"}}, "B")},
                                    est_with({"mae"}, CvSettings{.n_reps = 2, .n_folds = 5}), {.registry = &reg});
  ASSERT_EQ(res.records[0][0].size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(res.records[0][0][i].scores, res.records[0][1][i].scores);
}

TEST(Engine, IdenticalScoresAcrossWorkerCounts) {
  std::vector<PredTask> tasks{blob_task(80, 1), blob_task(60, 2, "blobs2")};
  std::vector<Workflow> wfs{knn(1), knn(5, "knn5"),
                            make_workflow({{"learner", "knn"}, {"pre", {"smote"}}, {"pre.pars", {{"perc.over", 100}}}},
                                          "smoteKnn")};
  auto est = est_with({"err", "acc"}, CvSettings{.n_reps = 2, .n_folds = 5, .seed = 77});
  auto strip = [](ComparisonResults r) {
    for (auto& row : r.records)
      for (auto& cell : row)
        for (auto& rec : cell) rec.times = {};
    r.provenance.timestamp.clear();
    return r;
  };
  const auto base = strip(performance_estimation(tasks, wfs, est));
  for (unsigned n : {2u, 8u}) {
    const auto other = strip(performance_estimation(tasks, wfs, est, {.parallelism = Parallelism::count(n)}));
    EXPECT_EQ(base, other) << n << " workers";
  }
}

TEST(Engine, UnsafePluginRunsSerially) {
  Registry reg;
  std::atomic<int> inside{0};
  std::atomic<int> peak{0};
  reg.add_workflow(
      "serial",
      [&](const Formula& f, const DataFrame&, const DataFrame& test, const Json&, Rng&) {
        const int now = ++inside;
        peak = std::max(peak.load(), now);
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --inside;
        PluginResult r;
        r.trues = test.column(f.target);
        r.preds = Predictions::numeric(std::vector<double>(test.n_rows(), 0.0));
        return r;
      },
      false);
  performance_estimation({linear_task(40, 1)}, {make_workflow({{"wf", "serial"}})},
                         est_with({"mse"}, CvSettings{}), {.parallelism = Parallelism::count(8), .registry = &reg});
  EXPECT_EQ(peak.load(), 1);
}

TEST(Engine, IncompatibleMetricFailsBeforeRunning) {
  int calls = 0;
  Registry reg;
  reg.add_workflow("count", [&](const Formula&, const DataFrame&, const DataFrame&, const Json&, Rng&) {
    ++calls;
    return PluginResult{};
  });
  EXPECT_THROW(performance_estimation({linear_task(30, 1)}, {make_workflow({{"wf", "count"}})},
                                      est_with({"err"}, CvSettings{}), {.registry = &reg}),
               InvalidArgument);
  EXPECT_THROW(performance_estimation({iris_task()}, {knn(1)}, est_with({"mse"}, CvSettings{})), InvalidArgument);
  EXPECT_THROW(performance_estimation({iris_task()}, {knn(1)}, est_with({"bogus"}, CvSettings{})), InvalidArgument);
  EXPECT_EQ(calls, 0);
}

TEST(Engine, EmptyInputsRejected) {
  EXPECT_THROW(performance_estimation({}, {knn(1)}, est_with({"err"}, CvSettings{})), InvalidArgument);
  EXPECT_THROW(performance_estimation({iris_task()}, {}, est_with({"err"}, CvSettings{})), InvalidArgument);
  EXPECT_THROW(performance_estimation({iris_task()}, {knn(1, "a"), knn(3, "a")}, est_with({"err"}, CvSettings{})),
               InvalidArgument);
}

TEST(Engine, DefaultMetricFollowsTaskType) {
  auto r1 = performance_estimation({iris_task()}, {knn(1)}, est_with({}, CvSettings{.n_folds = 3}));
  EXPECT_EQ(r1.metrics, std::vector<std::string>{"err"});
  auto r2 = performance_estimation({linear_task(30, 1)}, {knn(1)}, est_with({}, CvSettings{.n_folds = 3}));
  EXPECT_EQ(r2.metrics, std::vector<std::string>{"mse"});
}

TEST(Engine, TimeMetricsRecorded) {
  auto res = performance_estimation({iris_task()}, {knn(1)}, est_with({"err", "trTime", "tsTime", "totTime"}, CvSettings{.n_folds = 3}));
  for (const auto& r : res.records[0][0]) {
    ASSERT_FALSE(r.invalid());
    EXPECT_DOUBLE_EQ(*r.scores->get("totTime"), *r.scores->get("trTime") + *r.scores->get("tsTime"));
    EXPECT_DOUBLE_EQ(*r.scores->get("trTime"), r.times.train);
  }
}

TEST(Engine, NormalizedMetricsGetTrainTarget) {
  auto res = performance_estimation({linear_task(50, 4)}, {make_workflow({{"learner", "meanBaseline"}})},
                                    est_with({"nmse", "nmae", "theil"}, CvSettings{.n_folds = 5}));
  for (const auto& r : res.records[0][0]) {
    ASSERT_FALSE(r.invalid()) << r.error;
    EXPECT_GT(*r.scores->get("nmse"), 0.0);
  }
}

TEST(Engine, PluginEvaluatorAndTrainReq) {
  Registry reg;
  bool saw_target = false;
  reg.add_evaluator("sizes", EvaluatorPlugin{{"nTest", "nTrain"}, [&](const EvaluationInput& in) {
                                               ScoreVector s;
                                               saw_target = saw_target || in.train_target.has_value();
                                               for (const auto& m : in.metrics) {
                                                 if (m == "nTest") s.set(m, static_cast<double>(in.trues.size()));
                                                 else s.set(m, in.train_target ? std::optional<double>(in.train_target->size()) : std::nullopt);
                                               }
                                               return s;
                                             }});
  auto est = est_with({"plugin:sizes", "mae"}, CvSettings{.n_folds = 5});
  auto lin = linear_task(50, 2);
  auto res = performance_estimation({lin}, {make_workflow({{"learner", "linreg"}})}, est, {.registry = &reg});
  EXPECT_EQ(res.metrics, (std::vector<std::string>{"nTest", "nTrain", "mae"}));
  EXPECT_FALSE(saw_target);
  EXPECT_FALSE(res.records[0][0][0].scores->get("nTrain").has_value());
  est.train_req = true;
  res = performance_estimation({lin}, {make_workflow({{"learner", "linreg"}})}, est, {.registry = &reg});
  EXPECT_TRUE(saw_target);
  EXPECT_EQ(*res.records[0][0][0].scores->get("nTest"), 10.0);
  EXPECT_EQ(*res.records[0][0][0].scores->get("nTrain"), 40.0);
}

TEST(Engine, Bootstrap632BlendsWithResubstitution) {
  // 1-NN memorizes: resubstitution error is 0 when no two rows coincide
  auto task = blob_task(60, 5);
  auto e0 = performance_estimation({task}, {knn(1)}, est_with({"err"}, BootstrapSettings{.n_reps = 20, .seed = 3}));
  auto b632 = performance_estimation(
      {task}, {knn(1)}, est_with({"err"}, BootstrapSettings{.type = BootstrapType::dot632, .n_reps = 20, .seed = 3}));
  ASSERT_EQ(e0.records[0][0].size(), b632.records[0][0].size());
  for (std::size_t i = 0; i < 20; ++i) {
    const double oob = *e0.records[0][0][i].scores->get("err");
    EXPECT_DOUBLE_EQ(*b632.records[0][0][i].scores->get("err"), 0.632 * oob);
  }
}

TEST(Engine, Blend632Formula) {
  EXPECT_DOUBLE_EQ(*blend_632(0.1, 0.3), 0.368 * 0.1 + 0.632 * 0.3);
  EXPECT_FALSE(blend_632(std::nullopt, 0.3).has_value());
}

TEST(Engine, ProgressTraceShape) {
  std::ostringstream os;
  auto task = iris_task();
  auto est = est_with({"err"}, CvSettings{});
  performance_estimation({task}, {knn(3, "knn")}, est,
                         {.progress = progress_printer(os, {task.id()}, {"knn"}, {"err"}, est.method)});
  const auto s = os.str();
  EXPECT_NE(s.find("##### PERFORMANCE ESTIMATION USING  CROSS VALIDATION  #####"), std::string::npos);
  EXPECT_NE(s.find("** PREDICTIVE TASK :: iris.Species"), std::string::npos);
  EXPECT_NE(s.find("++ MODEL/WORKFLOW :: knn"), std::string::npos);
  EXPECT_NE(s.find(" 1 x 10 - Fold Cross Validation"), std::string::npos);
  EXPECT_NE(s.find("Iteration :  1  2  3  4  5  6  7  8  9  10"), std::string::npos);
}

TEST(Engine, DescribePrintsCounts) {
  auto res = performance_estimation({blob_task(30, 1), blob_task(30, 2, "b2")}, {knn(1), knn(3, "k3"), knn(5, "k5")},
                                    est_with({"err", "acc"}, CvSettings{.n_reps = 1, .n_folds = 3}));
  const auto s = describe(res);
  EXPECT_NE(s.find("==  Cross Validation Performance Estimation Experiment =="), std::string::npos);
  EXPECT_NE(s.find("Task for estimating  err,acc  using"), std::string::npos);
  EXPECT_NE(s.find(" 3  workflows applied to  2  predictive tasks"), std::string::npos);
}

TEST(Persistence, RoundTrip) {
  Registry reg;
  reg.add_workflow("flaky", [](const Formula& f, const DataFrame&, const DataFrame& test, const Json&, Rng& rng) {
    if (rng.unit() < 0.3) throw std::runtime_error("flaky");
    PluginResult r;
    r.trues = test.column(f.target);
    r.preds = Predictions::numeric(std::vector<double>(test.n_rows(), 0.5));
    return r;
  });
  auto res = performance_estimation({linear_task(40, 1)},
                                    {make_workflow({{"learner", "linreg"}}), make_workflow({{"wf", "flaky"}}, "flaky")},
                                    est_with({"mse", "mape"}, CvSettings{.n_reps = 2, .n_folds = 4, .seed = 99}),
                                    {.registry = &reg});
  const auto path = temp_path("perfest-roundtrip");
  save_results(res, path);
  const auto back = load_results(path);
  std::remove(path.c_str());
  EXPECT_EQ(back, res);
  EXPECT_EQ(back.provenance.seed, 99);
}

TEST(Persistence, TruncatedFileIsParseError) {
  auto res = performance_estimation({iris_task()}, {knn(1)}, est_with({"err"}, CvSettings{.n_folds = 3}));
  const auto text = to_json(res).dump();
  const auto path = temp_path("perfest-truncated");
  {
    std::ofstream f(path);
    f << text.substr(0, text.size() / 2);
  }
  EXPECT_THROW(load_results(path), ParseError);
  std::remove(path.c_str());
}

TEST(Persistence, VersionMismatchIsIncompatible) {
  auto res = performance_estimation({iris_task()}, {knn(1)}, est_with({"err"}, CvSettings{.n_folds = 3}));
  auto j = to_json(res);
  j["version"] = 99;
  EXPECT_THROW(results_from_json(j), Incompatible);
}

TEST(Parallelism, Parsing) {
  EXPECT_EQ(parallelism_from_string("off").resolve(), 1u);
  EXPECT_EQ(parallelism_from_string("4").resolve(), 4u);
  EXPECT_GE(parallelism_from_string("auto").resolve(), 1u);
  EXPECT_THROW(parallelism_from_string("0"), InvalidArgument);
  EXPECT_THROW(parallelism_from_string("many"), InvalidArgument);
}

#include <gtest/gtest.h>

#include <cmath>

#include "perfest/metrics.hpp"
#include "perfest/rng.hpp"

using namespace perfest;

namespace {

Column labels(std::initializer_list<const char*> ls, std::vector<std::string> cats) {
  std::vector<std::optional<std::string>> v;
  for (auto l : ls) v.emplace_back(l);
  return Column::from_labels("y", v, std::move(cats));
}

Predictions label_preds(std::initializer_list<const char*> ls, const std::vector<std::string>& cats) {
  std::vector<std::int32_t> codes;
  for (auto l : ls) codes.push_back(static_cast<std::int32_t>(std::find(cats.begin(), cats.end(), l) - cats.begin()));
  return Predictions::of_labels(codes, cats);
}

MetricRequest req(std::vector<std::string> names, Json pars = Json::object()) { return {std::move(names), std::move(pars)}; }

}  // namespace

TEST(ClassificationMetrics, PerfectPredictions) {
  std::vector<std::string> cats{"a", "b"};
  auto s = classification_metrics(labels({"a", "b", "b"}, cats), label_preds({"a", "b", "b"}, cats), req({"acc", "err"}));
  EXPECT_EQ(s.get("acc"), 1.0);
  EXPECT_EQ(s.get("err"), 0.0);
}

TEST(ClassificationMetrics, PrecisionRecallF) {
  std::vector<std::string> cats{"n", "p"};
  auto s = classification_metrics(labels({"p", "p", "n", "n"}, cats), label_preds({"p", "n", "p", "p"}, cats),
                                  req({"prec", "rec", "F"}, {{"posClass", "p"}}));
  EXPECT_NEAR(*s.get("prec"), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(*s.get("rec"), 0.5, 1e-15);
  EXPECT_NEAR(*s.get("F"), 0.4, 1e-15);
}

TEST(ClassificationMetrics, UndefinedPrecisionIsMissing) {
  std::vector<std::string> cats{"n", "p"};
  auto s = classification_metrics(labels({"p", "n"}, cats), label_preds({"n", "n"}, cats),
                                  req({"prec", "rec"}, {{"posClass", "p"}}));
  EXPECT_FALSE(s.get("prec").has_value());
  EXPECT_EQ(s.get("rec"), 0.0);
}

TEST(ClassificationMetrics, Errors) {
  std::vector<std::string> cats{"n", "p"};
  auto t = labels({"p", "n"}, cats);
  auto p = label_preds({"n", "n"}, cats);
  EXPECT_THROW(classification_metrics(t, p, req({"bogus"})), InvalidArgument);
  EXPECT_THROW(classification_metrics(t, p, req({"prec"}, {{"posClass", "zzz"}})), InvalidArgument);
  EXPECT_THROW(classification_metrics(t, p, req({"prec"})), InvalidArgument);
}

TEST(ClassificationMetrics, ProbabilitiesCollapseByArgmaxLowestTie) {
  std::vector<std::string> cats{"a", "b"};
  auto probs = Predictions::probabilities({0.5, 0.5, 0.2, 0.8}, cats);
  auto s = classification_metrics(labels({"a", "b"}, cats), probs, req({"acc"}));
  EXPECT_EQ(s.get("acc"), 1.0);
}

TEST(ClassificationMetrics, TotalUtility) {
  std::vector<std::string> cats{"a", "b"};
  Json cb = Json::array({Json::array({1.0, -1.0}), Json::array({-0.5, 2.0})});
  auto s = classification_metrics(labels({"a", "b", "b"}, cats), label_preds({"a", "a", "b"}, cats),
                                  req({"totU"}, {{"cb.matrix", cb}}));
  EXPECT_DOUBLE_EQ(*s.get("totU"), 1.0 - 0.5 + 2.0);
}

// Independent oracle: every metric recomputed from confusion-matrix cells.
TEST(ClassificationMetrics, MatchConfusionMatrixOracleOnRandomInstances) {
  Rng rng(31337, {});
  for (int trial = 0; trial < 1000; ++trial) {
    const auto k = 2 + rng.below(3);
    const auto n = 1 + rng.below(25);
    std::vector<std::string> cats;
    for (std::uint64_t c = 0; c < k; ++c) cats.push_back(std::string(1, static_cast<char>('a' + c)));
    std::vector<std::int32_t> t(n), p(n);
    for (auto& x : t) x = static_cast<std::int32_t>(rng.below(k));
    for (auto& x : p) x = static_cast<std::int32_t>(rng.below(k));
    auto trues = Column::categorical("y", t, cats);
    auto preds = Predictions::of_labels(p, cats);
    const auto pos = rng.below(k);
    const double beta = trial % 3 == 0 ? 2.0 : 1.0;
    auto s = classification_metrics(trues, preds,
                                    req({"acc", "err", "prec", "rec", "F", "macroPrec", "macroRec", "macroF"},
                                        {{"posClass", cats[pos]}, {"beta", beta}}));

    std::vector<std::vector<double>> cm(k, std::vector<double>(k, 0));
    for (std::size_t i = 0; i < n; ++i) cm[t[i]][p[i]] += 1;
    double diag = 0;
    for (std::size_t c = 0; c < k; ++c) diag += cm[c][c];
    auto col_sum = [&](std::size_t c) { double s = 0; for (std::size_t i = 0; i < k; ++i) s += cm[i][c]; return s; };
    auto row_sum = [&](std::size_t c) { double s = 0; for (std::size_t j = 0; j < k; ++j) s += cm[c][j]; return s; };
    auto prec = [&](std::size_t c) -> std::optional<double> { return col_sum(c) ? std::optional(cm[c][c] / col_sum(c)) : std::nullopt; };
    auto rec = [&](std::size_t c) -> std::optional<double> { return row_sum(c) ? std::optional(cm[c][c] / row_sum(c)) : std::nullopt; };
    auto fm = [&](std::size_t c) -> std::optional<double> {
      auto a = prec(c), b = rec(c);
      if (!a || !b) return std::nullopt;
      if (*a == 0 && *b == 0) return 0.0;
      return (1 + beta * beta) * *a * *b / (beta * beta * *a + *b);
    };
    auto macro = [&](auto f) -> std::optional<double> {
      double sum = 0; int m = 0;
      for (std::size_t c = 0; c < k; ++c) if (auto v = f(c)) sum += *v, ++m;
      return m ? std::optional(sum / m) : std::nullopt;
    };
    auto near = [](std::optional<double> a, std::optional<double> b) {
      if (a.has_value() != b.has_value()) return false;
      return !a || std::abs(*a - *b) < 1e-12;
    };
    ASSERT_TRUE(near(s.get("acc"), diag / n));
    ASSERT_EQ(*s.get("acc") + *s.get("err"), 1.0);
    ASSERT_TRUE(near(s.get("prec"), prec(pos)));
    ASSERT_TRUE(near(s.get("rec"), rec(pos)));
    ASSERT_TRUE(near(s.get("F"), fm(pos)));
    ASSERT_TRUE(near(s.get("macroPrec"), macro(prec)));
    ASSERT_TRUE(near(s.get("macroRec"), macro(rec)));
    ASSERT_TRUE(near(s.get("macroF"), macro(fm)));
    auto cmx = confusion_matrix(trues, preds);
    ASSERT_EQ(cmx.total(), n);
  }
}

TEST(ClassificationMetrics, PermutationInvariance) {
  std::vector<std::string> cats{"a", "b", "c"};
  std::vector<std::int32_t> t{0, 1, 2, 2, 1, 0, 0}, p{0, 2, 2, 1, 1, 0, 1};
  auto names = req({"acc", "macroF", "macroPrec", "macroRec"});
  auto base = classification_metrics(Column::categorical("y", t, cats), Predictions::of_labels(p, cats), names);
  std::vector<std::size_t> order{6, 2, 4, 0, 1, 5, 3};
  std::vector<std::int32_t> t2, p2;
  for (auto i : order) t2.push_back(t[i]), p2.push_back(p[i]);
  auto perm = classification_metrics(Column::categorical("y", t2, cats), Predictions::of_labels(p2, cats), names);
  for (const auto& n : names.names) EXPECT_NEAR(*base.get(n), *perm.get(n), 1e-15);
}

TEST(RegressionMetrics, PerfectPredictions) {
  std::vector<double> y{1, 2, 3};
  auto s = regression_metrics(y, y, req({"mae", "mse", "rmse", "theil"}), std::nullopt, 0.0);
  EXPECT_EQ(s.get("mae"), 0.0);
  EXPECT_EQ(s.get("mse"), 0.0);
  EXPECT_EQ(s.get("theil"), 0.0);
}

TEST(RegressionMetrics, NaiveForecastHasTheilOne) {
  std::vector<double> y{3, 5, 4, 8, 7};
  const double last = 2;
  std::vector<double> naive{last, 3, 5, 4, 8};
  auto s = regression_metrics(y, naive, req({"theil"}), std::nullopt, last);
  EXPECT_DOUBLE_EQ(*s.get("theil"), 1.0);
}

TEST(RegressionMetrics, TrainMeanPredictorHasNmseOne) {
  std::vector<double> train{1, 4, 7, 10};
  const double mu = 5.5;
  std::vector<double> y{2, 9, 5, 13};
  std::vector<double> preds(y.size(), mu);
  auto s = regression_metrics(y, preds, req({"nmse", "nmae"}), std::span<const double>(train));
  EXPECT_DOUBLE_EQ(*s.get("nmse"), 1.0);
  EXPECT_DOUBLE_EQ(*s.get("nmae"), 1.0);
}

TEST(RegressionMetrics, ConstantTrainTargetGivesMissingNmse) {
  std::vector<double> train{3, 3, 3};
  std::vector<double> y{1, 2}, p{1, 1};
  auto s = regression_metrics(y, p, req({"nmse"}), std::span<const double>(train));
  EXPECT_FALSE(s.get("nmse").has_value());
}

TEST(RegressionMetrics, Formulas) {
  std::vector<double> y{1, -2, 4, 0}, p{2, -2, 1, 1};
  auto s = regression_metrics(y, p, req({"mae", "mse", "rmse", "mape"}));
  EXPECT_DOUBLE_EQ(*s.get("mae"), (1 + 0 + 3 + 1) / 4.0);
  EXPECT_DOUBLE_EQ(*s.get("mse"), (1 + 0 + 9 + 1) / 4.0);
  EXPECT_NEAR(*s.get("rmse") * *s.get("rmse"), *s.get("mse"), 1e-12);
  EXPECT_LE(*s.get("mae"), *s.get("rmse"));
  EXPECT_DOUBLE_EQ(*s.get("mape"), (1.0 / 1 + 0.0 / 2 + 3.0 / 4) / 3.0);
}

TEST(RegressionMetrics, Errors) {
  std::vector<double> y{1}, p{1};
  EXPECT_THROW(regression_metrics(y, p, req({"theil"})), InvalidArgument);
  EXPECT_THROW(regression_metrics(y, p, req({"nmse"})), InvalidArgument);
  EXPECT_THROW(regression_metrics(y, p, req({"acc"})), InvalidArgument);
  std::vector<double> nan{std::nan("")};
  EXPECT_THROW(regression_metrics(y, nan, req({"mae"})), InvalidArgument);
}

TEST(TimeMetrics, TotalIsSum) {
  std::vector<std::string> names{"trTime", "tsTime", "totTime"};
  auto s = time_metrics(Timing{2.0, 0.5}, names);
  EXPECT_EQ(s.get("totTime"), 2.5);
  auto z = time_metrics(Timing{1.0, 0.0}, names);
  EXPECT_EQ(z.get("tsTime"), 0.0);
  EXPECT_GE(*z.get("totTime"), std::max(*z.get("trTime"), *z.get("tsTime")));
}

namespace {
EvaluatorPlugin pow_err() {
  return {{"powErr"}, [](const EvaluationInput& in) {
            const double pw = in.pars.value("pow", 2.0);
            double s = 0;
            for (std::size_t i = 0; i < in.trues.size(); ++i) s += std::pow(in.trues.number(i) - in.preds.numbers[i], pw);
            ScoreVector out;
            out.set("powErr", s / static_cast<double>(in.trues.size()));
            return out;
          }};
}
}  // namespace

TEST(RunEvaluator, PowErr) {
  std::vector<std::string> names{"powErr"};
  auto s = run_evaluator(pow_err(), Column::numeric("y", {1, 2}), Predictions::numeric({1, 2}), names, std::nullopt,
                         {{"pow", 4}});
  EXPECT_EQ(s.get("powErr"), 0.0);
  auto s3 = run_evaluator(pow_err(), Column::numeric("y", {2}), Predictions::numeric({1}), names, std::nullopt,
                          {{"pow", 3}});
  EXPECT_EQ(s3.get("powErr"), 1.0);
}

TEST(RunEvaluator, ContractChecks) {
  std::vector<std::string> undeclared{"other"};
  EXPECT_THROW(run_evaluator(pow_err(), Column::numeric("y", {1}), Predictions::numeric({1}), undeclared, std::nullopt,
                             Json::object()),
               InvalidArgument);
  EvaluatorPlugin liar{{"m"}, [](const EvaluationInput&) {
                         ScoreVector s;
                         s.set("wrong", 1.0);
                         return s;
                       }};
  std::vector<std::string> names{"m"};
  EXPECT_THROW(run_evaluator(liar, Column::numeric("y", {1}), Predictions::numeric({1}), names, std::nullopt, Json::object()),
               ContractViolation);
}

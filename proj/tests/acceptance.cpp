// Acceptance checks: one PASS/FAIL line per criterion.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "perfest.hpp"

using namespace perfest;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& title, const std::function<std::string()>& check) {
  std::string problem;
  try {
    problem = check();
  } catch (const std::exception& e) {
    problem = std::string("exception: ") + e.what();
  }
  std::cout << (problem.empty() ? "PASS" : "FAIL") << " criterion " << id << ": " << title;
  if (!problem.empty()) {
    std::cout << " -- " << problem;
    ++failures;
  }
  std::cout << std::endl;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// independent oracles

double brute_wilcoxon(const std::vector<double>& d_all) {
  std::vector<double> d;
  for (double v : d_all)
    if (v != 0) d.push_back(v);
  const auto n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += std::abs(d[j]) < std::abs(d[i]);
      equal += std::abs(d[j]) == std::abs(d[i]);
    }
    rank[i] = less + (equal + 1) / 2;
  }
  double v = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) v += rank[i];
  double le = 0, ge = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += rank[i];
    le += s <= v + 1e-9;
    ge += s >= v - 1e-9;
  }
  return std::min(1.0, 2 * std::min(le, ge) / static_cast<double>(total));
}

PredTask iris() {
  auto data = std::make_shared<DataFrame>(read_csv(std::string(PERFEST_TEST_DATA) + "/iris.csv"));
  return make_task(parse_formula("Species ~ ."), data, {.id = "iris"});
}

PredTask index_task(std::size_t n) {
  std::vector<double> idx(n), y(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<double>(i), y[i] = std::sin(0.1 * static_cast<double>(i));
  auto d = std::make_shared<DataFrame>(std::vector<Column>{Column::numeric("idx", idx), Column::numeric("y", y)});
  return make_task(parse_formula("y ~ idx"), d, {.id = "series", .time_series = true});
}

std::size_t records_per_cell(const PredTask& task, const EstimationMethod& m) {
  EstimationTask est;
  est.metrics = {task.is_classification() ? "err" : "mae"};
  est.method = m;
  const auto wf = make_workflow({{"learner", task.is_classification() ? "modeBaseline" : "meanBaseline"}});
  const auto r = performance_estimation({task}, {wf}, est, {.parallelism = Parallelism::automatic()});
  for (const auto& rec : r.records[0][0])
    if (rec.invalid()) throw Error("unexpected invalid iteration: " + rec.error);
  return r.records[0][0].size();
}

Json strip_timing(Json j) {
  j["provenance"].erase("timestamp");
  for (auto& rec : j["records"])
    for (auto& it : rec["iterations"]) {
      it.erase("times");
      if (it["scores"].is_object())
        for (const auto& t : time_metric_names()) it["scores"].erase(t);
    }
  return j;
}

}  // namespace

int main() {
  report(1, "Iman-Davenport FF from chi=18.575, N=3, k=15 is 1.585912 +- 1e-5", [] {
    const auto f = friedman_from_chi(18.575, 3, 15);
    return std::abs(f.ff - 1.585912) <= 1e-5 ? "" : "FF = " + num(f.ff);
  });

  report(2, "Nemenyi critDif for k=15, N=3, alpha=0.05 is 12.38302 +- 1e-3", []() -> std::string {
    const double tabulated = nemenyi_q(15, 0.05);
    const double computed = studentized_range_quantile(0.95, 15) / std::sqrt(2.0);
    if (std::abs(tabulated - computed) > 1e-6) return "table " + num(tabulated) + " vs quadrature " + num(computed);
    const double cd = critical_difference(tabulated, 15, 3);
    return std::abs(cd - 12.38302) <= 1e-3 ? "" : "critDif = " + num(cd);
  });

  report(3, "rank span 10.5 under critDif 12.38: no significant pair, one all-connecting clique", []() -> std::string {
    const std::vector<std::vector<double>> by_task{{2, 4, 7, 1, 9, 1, 4, 6, 5, 1, 8, 6, 0, 3, 6},
                                                   {3, 4, 1, 2, 4, 1, 8, 7, 6, 2, 8, 6, 3, 1, 7},
                                                   {5, 2, 1, 0, 2, 5, 0, 0, 4, 8, 7, 6, 8, 1, 0}};
    std::vector<std::string> wfs, tasks{"a1", "a2", "a3"};
    std::vector<std::vector<double>> scores(15, std::vector<double>(3));
    for (std::size_t w = 0; w < 15; ++w) {
      wfs.push_back("svm.v" + std::to_string(w + 1));
      for (std::size_t t = 0; t < 3; ++t) scores[w][t] = by_task[t][w];
    }
    const auto n = nemenyi_test(compute_ranks(wfs, tasks, scores));
    double span = 0;
    for (const auto& row : n.rk_difs)
      for (double d : row) span = std::max(span, d);
    if (std::abs(span - 10.5) > 1e-12) return "max rkDif = " + num(span);
    if (std::abs(n.crit_dif - 12.38302) > 1e-3) return "critDif = " + num(n.crit_dif);
    for (const auto& row : n.signif_difs)
      for (bool s : row)
        if (s) return "a signifDifs flag is set";
    const auto svg = cd_diagram_svg(cd_input(n));
    std::size_t bars = 0;
    for (auto p = svg.find("class=\"clique\""); p != std::string::npos; p = svg.find("class=\"clique\"", p + 1)) ++bars;
    auto sorted = n.avg_ranks;
    std::sort(sorted.begin(), sorted.end());
    const auto cl = cd_cliques(sorted, n.crit_dif);
    if (bars != 1 || cl.size() != 1 || cl[0] != std::pair<std::size_t, std::size_t>{0, 14})
      return std::to_string(bars) + " clique bars";
    return "";
  });

  report(4, "variant grids expand to 15 and 12 workflows", []() -> std::string {
    VariantGrid a;
    a.params = {{"learner", "svm"}, {"learner.pars", {{"cost", {1, 2, 3, 4, 5}}, {"gamma", {0.1, 0.05, 0.01}}}}};
    VariantGrid b;
    b.wf = "myWF";
    b.params = {{"se", {0, 1}}, {"step", {true, false}}, {"weightRT", {0.4, 0.5, 0.6}}};
    const auto na = workflow_variants(a).size(), nb = workflow_variants(b).size();
    return na == 15 && nb == 12 ? "" : std::to_string(na) + " and " + std::to_string(nb);
  });

  report(5, "iteration counts: 3x10 CV 30, LOOCV 150, bootstrap 100, Monte Carlo 10 with adjacent 500/250 windows",
         []() -> std::string {
           const auto task = iris();
           if (auto n = records_per_cell(task, CvSettings{.n_reps = 3, .n_folds = 10}); n != 30)
             return "CV gave " + std::to_string(n);
           if (auto n = records_per_cell(task, LoocvSettings{}); n != 150) return "LOOCV gave " + std::to_string(n);
           if (auto n = records_per_cell(task, BootstrapSettings{.n_reps = 100}); n != 100)
             return "bootstrap gave " + std::to_string(n);

           // the workflow itself checks the windows it receives
           Registry reg;
           reg.add_workflow("windows", [](const Formula& f, const DataFrame& train, const DataFrame& test, const Json&,
                                          Rng&) -> PluginResult {
             const auto tr = train.column("idx").numbers();
             const auto ts = test.column("idx").numbers();
             if (tr.size() != 500 || ts.size() != 250) throw Error("window sizes");
             for (std::size_t i = 1; i < tr.size(); ++i)
               if (tr[i] != tr[i - 1] + 1) throw Error("train window not contiguous");
             for (std::size_t i = 1; i < ts.size(); ++i)
               if (ts[i] != ts[i - 1] + 1) throw Error("test window not contiguous");
             if (ts.front() != tr.back() + 1) throw Error("train does not immediately precede test");
             auto truth = response_values(f, test);
             const auto v = truth.numbers();
             return {truth, Predictions::numeric({v.begin(), v.end()}), std::nullopt, {}};
           });
           EstimationTask est;
           est.metrics = {"mae"};
           est.method = MonteCarloSettings{.n_reps = 10, .sz_train = 0.5, .sz_test = 0.25};
           const auto r = performance_estimation({index_task(1000)}, {make_workflow({{"wf", "windows"}}, "w")}, est,
                                                 {.registry = &reg});
           if (r.records[0][0].size() != 10) return "Monte Carlo gave " + std::to_string(r.records[0][0].size());
           for (const auto& rec : r.records[0][0])
             if (rec.invalid()) return "Monte Carlo window: " + rec.error;
           return "";
         });

  report(6, "results files from cluster=off and cluster=4 match except timing, over 3 seeds", []() -> std::string {
    const auto dir = fs::temp_directory_path() / "perfest_acceptance_c6";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      Rng rng(77);
      std::ofstream csv(dir / "syn.csv");
      csv << "x1,x2,cat,y\n";
      for (int i = 0; i < 120; ++i) {
        const double a = rng.unit(), b = rng.unit();
        csv << a << ',' << b << ',' << (i % 3 == 0 ? "u" : "v") << ',' << (a + b + 0.3 * rng.unit() > 1.1 ? "hi" : "lo")
            << '\n';
      }
    }
    std::string problem;
    for (int seed : {1, 42, 1234}) {
      Json cfg = Json::parse(R"({
        "tasks": [{"id": "syn", "csvPath": "syn.csv", "formula": "y ~ ."}],
        "workflows": [{"variantGrid": {"learner": "knn", "learner.pars": {"k": [1, 3, 7]}}},
                      {"wfID": "smote", "learner": "knn", "pre": ["smote"], "pre.pars": {"perc.over": 100}},
                      {"learner": "modeBaseline"}],
        "estimation": {"metrics": ["err", "F", "totTime"], "method": "CV", "nReps": 2, "nFolds": 5, "strat": true},
        "outputPath": "res.json"})");
      cfg["estimation"]["seed"] = seed;
      std::ofstream(dir / "cfg.json") << cfg.dump(2);
      Json runs[2];
      const char* clusters[] = {"off", "4"};
      for (int i = 0; i < 2; ++i) {
        const auto out = dir / ("res_" + std::string(clusters[i]) + ".json");
        const std::string cmd = std::string("'") + PERFEST_CLI + "' run -q '" + (dir / "cfg.json").string() +
                                "' --cluster " + clusters[i] + " -o '" + out.string() + "' > /dev/null";
        if (std::system(cmd.c_str()) != 0) return "run failed for seed " + std::to_string(seed);
        runs[i] = strip_timing(Json::parse(std::ifstream(out)));
      }
      if (runs[0] != runs[1]) problem = "results differ for seed " + std::to_string(seed);
    }
    fs::remove_all(dir);
    return problem;
  });

  report(7, "split invariants: stratified minority, Monte Carlo ordering, bootstrap out-of-bag fraction",
         []() -> std::string {
           std::vector<std::int32_t> labels(100, 0);
           for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i * 10 + 3)] = 1;
           const auto cv = cv_splits(100, labels, CvSettings{.strat = true});
           for (const auto& s : cv.iterations) {
             int minority = 0;
             for (auto i : s.test) minority += labels[i];
             if (minority != 1) return "a fold holds " + std::to_string(minority) + " minority cases";
           }
           Rng rng(2024, {7});
           int checked = 0;
           while (checked < 1000) {
             const std::size_t n = 5 + rng.below(400);
             const double tr = rng.unit() < 0.5 ? 0.05 + 0.6 * rng.unit() : static_cast<double>(1 + rng.below(n / 2));
             const double ts = rng.unit() < 0.5 ? 0.05 + 0.3 * rng.unit() : static_cast<double>(1 + rng.below(n / 3 + 1));
             SplitPlan plan;
             try {
               plan = monte_carlo_splits(n, {.n_reps = static_cast<int>(1 + rng.below(5)), .sz_train = tr, .sz_test = ts,
                                             .seed = static_cast<std::int64_t>(rng.next() >> 1)});
             } catch (const InvalidArgument&) {
               continue;
             }
             for (const auto& s : plan.iterations)
               if (*std::max_element(s.train.begin(), s.train.end()) >= *std::min_element(s.test.begin(), s.test.end()))
                 return "a Monte Carlo train index follows a test index";
             ++checked;
           }
           const auto boot = bootstrap_splits(1000, BootstrapSettings{.n_reps = 200});
           double oob = 0;
           for (const auto& s : boot.iterations) oob += static_cast<double>(s.test.size()) / 1000.0;
           oob /= 200.0;
           return std::abs(oob - 0.368) <= 0.01 ? "" : "out-of-bag fraction " + num(oob);
         });

  report(8, "statistical oracles: exact Wilcoxon, confusion-matrix metrics, theil and nmse anchors", []() -> std::string {
    Rng rng(8, {1});
    for (std::size_t n = 1; n <= 10; ++n) {
      for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(n), y(n, 0.0);
        for (auto& v : x) v = static_cast<double>(rng.below(9)) - 4.0;
        if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0; })) x[0] = 1;
        const auto got = wilcoxon_signed_rank_test(x, y).p;
        if (!got || std::abs(*got - brute_wilcoxon(x)) > 1e-12) return "Wilcoxon mismatch at n=" + std::to_string(n);
      }
    }
    for (int trial = 0; trial < 1000; ++trial) {
      const auto k = 2 + rng.below(3);
      const auto n = 1 + rng.below(25);
      std::vector<std::string> cats;
      for (std::uint64_t c = 0; c < k; ++c) cats.push_back(std::string(1, static_cast<char>('a' + c)));
      std::vector<std::int32_t> t(n), p(n);
      for (auto& v : t) v = static_cast<std::int32_t>(rng.below(k));
      for (auto& v : p) v = static_cast<std::int32_t>(rng.below(k));
      const auto pos = rng.below(k);
      const auto s = classification_metrics(Column::categorical("y", t, cats), Predictions::of_labels(p, cats),
                                            {{"acc", "err", "prec", "rec", "F"}, {{"posClass", cats[pos]}}});
      double hit = 0, tp = 0, pred_pos = 0, true_pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        hit += t[i] == p[i];
        tp += t[i] == static_cast<std::int32_t>(pos) && p[i] == static_cast<std::int32_t>(pos);
        pred_pos += p[i] == static_cast<std::int32_t>(pos);
        true_pos += t[i] == static_cast<std::int32_t>(pos);
      }
      const double nn = static_cast<double>(n);
      if (std::abs(*s.get("acc") - hit / nn) > 1e-12 || std::abs(*s.get("err") - (1 - hit / nn)) > 1e-12)
        return "accuracy mismatch";
      if (pred_pos > 0 && std::abs(*s.get("prec") - tp / pred_pos) > 1e-12) return "precision mismatch";
      if (true_pos > 0 && std::abs(*s.get("rec") - tp / true_pos) > 1e-12) return "recall mismatch";
      if (pred_pos > 0 && true_pos > 0 && tp > 0) {
        const double pr = tp / pred_pos, rc = tp / true_pos;
        if (std::abs(*s.get("F") - 2 * pr * rc / (pr + rc)) > 1e-12) return "F mismatch";
      }
    }
    std::vector<double> train, test;
    for (int i = 0; i < 40; ++i) train.push_back(std::cos(0.3 * i) * 5 + i * 0.1);
    for (int i = 0; i < 15; ++i) test.push_back(std::sin(0.7 * i) * 4 + 3);
    std::vector<double> naive{train.back()};
    naive.insert(naive.end(), test.begin(), test.end() - 1);
    const double mean = std::accumulate(train.begin(), train.end(), 0.0) / static_cast<double>(train.size());
    const std::vector<double> flat(test.size(), mean);
    const auto theil = regression_metrics(test, naive, {{"theil"}}, std::nullopt, train.back()).get("theil");
    const auto nmse = regression_metrics(test, flat, {{"nmse"}}, std::span<const double>(train)).get("nmse");
    if (std::abs(*theil - 1) > 1e-12) return "theil of naive forecast = " + num(*theil);
    if (std::abs(*nmse - 1) > 1e-12) return "nmse of train mean = " + num(*nmse);
    return "";
  });

  report(9, "iris knn(k=3), 10-fold CV seed 1234: mean err in [0, 0.08], no invalid iterations", []() -> std::string {
    EstimationTask est;
    est.metrics = {"err"};
    est.method = CvSettings{.n_folds = 10, .seed = 1234};
    const auto r = performance_estimation({iris()}, {make_workflow({{"learner", "knn"}, {"learner.pars", {{"k", 3}}}})},
                                          est, {});
    const auto st = summarize_cell(r, 0, 0).stats[0];
    if (st.invalid != 0) return std::to_string(st.invalid) + " invalid iterations";
    if (!st.avg || *st.avg < 0 || *st.avg > 0.08) return "mean err " + format_value(st.avg);
    // frozen on the first verified run: 8 misclassified of 150
    if (std::abs(*st.avg - 8.0 / 150.0) > 1e-12) return "mean err drifted to " + num(*st.avg);
    return "";
  });

  report(10, "onlyPos never increases MAE of a linear model on a non-negative target", []() -> std::string {
    Rng rng(10);
    std::vector<double> x, y;
    for (int i = 0; i < 200; ++i) {
      x.push_back(rng.unit());
      y.push_back(std::max(0.0, 3 * x.back() - 1 + 0.5 * (rng.unit() - 0.5)));
    }
    auto d = std::make_shared<DataFrame>(std::vector<Column>{Column::numeric("x", x), Column::numeric("y", y)});
    const auto task = make_task(parse_formula("y ~ x"), d, {.id = "nonneg"});
    EstimationTask est;
    est.metrics = {"mae"};
    est.method = CvSettings{.n_reps = 3, .n_folds = 10, .seed = 1234};
    const auto r = performance_estimation({task},
                                          {make_workflow({{"learner", "linreg"}}, "lm"),
                                           make_workflow({{"learner", "linreg"}, {"post", {"onlyPos"}}}, "lmOnlyPos")},
                                          est, {});
    std::size_t improved = 0;
    for (std::size_t i = 0; i < r.records[0][0].size(); ++i) {
      const auto& a = r.records[0][0][i];
      const auto& b = r.records[0][1][i];
      if (a.invalid() || b.invalid()) return "invalid iteration";
      const double plain = *a.scores->get("mae"), clipped = *b.scores->get("mae");
      if (clipped > plain) return "iteration " + std::to_string(i + 1) + " got worse";
      improved += clipped < plain;
    }
    return improved > 0 ? "" : "the linear model never predicted a negative value";
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

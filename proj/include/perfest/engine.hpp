#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "perfest/error.hpp"
#include "perfest/frame.hpp"
#include "perfest/metrics.hpp"
#include "perfest/plugins.hpp"
#include "perfest/predictions.hpp"
#include "perfest/resampling.hpp"
#include "perfest/rng.hpp"
#include "perfest/workflow.hpp"

namespace perfest {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kResultsVersion = 1;

/// Metrics to estimate and the resampling method that estimates them.
struct EstimationTask {
  std::vector<std::string> metrics;
  EstimationMethod method = CvSettings{};
  std::string evaluator;  // empty: built-in metrics only
  Json evaluator_pars = Json::object();
  bool train_req = false;

  friend bool operator==(const EstimationTask& a, const EstimationTask& b) {
    return a.metrics == b.metrics && method_to_json(a.method) == method_to_json(b.method) &&
           a.evaluator == b.evaluator && a.evaluator_pars == b.evaluator_pars && a.train_req == b.train_req;
  }
};

inline Json to_json(const EstimationTask& e) {
  Json j{{"metrics", e.metrics}, {"method", method_to_json(e.method)}};
  j["evaluator"] = e.evaluator.empty() ? Json(nullptr) : Json(e.evaluator);
  j["evaluatorPars"] = e.evaluator_pars;
  j["trainReq"] = e.train_req;
  return j;
}

inline EstimationTask estimation_task_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("estimation task must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "metrics" && k != "method" && k != "evaluator" && k != "evaluatorPars" && k != "trainReq")
      throw ParseError("unknown estimation key '" + k + "'");
  }
  EstimationTask e;
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    if (m.is_string()) e.metrics.push_back(m.get<std::string>());
    else if (m.is_array()) e.metrics = m.get<std::vector<std::string>>();
    else throw ParseError("metrics must be a string or a list of strings");
  }
  if (j.contains("method")) e.method = method_from_json(j.at("method"));
  if (j.contains("evaluator") && !j.at("evaluator").is_null()) e.evaluator = j.at("evaluator").get<std::string>();
  if (j.contains("evaluatorPars")) {
    if (!j.at("evaluatorPars").is_object()) throw ParseError("evaluatorPars must be an object");
    e.evaluator_pars = j.at("evaluatorPars");
  }
  if (j.contains("trainReq")) e.train_req = j.at("trainReq").get<bool>();
  return e;
}

/// Outcome of one train+test repetition. Invalid exactly when `scores` is
/// absent.
struct IterationRecord {
  std::optional<ScoreVector> scores;
  Timing times;
  std::string error;
  std::size_t split_index = 0;

  bool invalid() const noexcept { return !scores.has_value(); }
  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct TaskDescriptor {
  std::string id;
  std::string formula;
  TaskType type = TaskType::classification;
  std::size_t n_rows = 0;
  std::string source;
  std::uint64_t plan_fingerprint = 0;
  friend bool operator==(const TaskDescriptor&, const TaskDescriptor&) = default;
};

struct Provenance {
  std::int64_t seed = 1234;
  std::string method;
  std::string tool_version = kToolVersion;
  std::string timestamp;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Everything an experiment produced. records[t][w] holds the iterations of
/// workflow w on task t, in split-plan order.
struct ComparisonResults {
  EstimationTask estimation;
  std::vector<std::string> metrics;  // resolved metric names, in score order
  std::vector<TaskDescriptor> tasks;
  std::vector<Workflow> workflows;
  std::vector<std::vector<std::vector<IterationRecord>>> records;
  Provenance provenance;

  std::vector<std::string> task_names() const {
    std::vector<std::string> out;
    for (const auto& t : tasks) out.push_back(t.id);
    return out;
  }
  std::vector<std::string> workflow_names() const {
    std::vector<std::string> out;
    for (const auto& w : workflows) out.push_back(w.id);
    return out;
  }
  std::size_t task_index(std::string_view id) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (tasks[i].id == id) return i;
    throw InvalidArgument("unknown task '" + std::string(id) + "'");
  }
  std::size_t workflow_index(std::string_view id) const {
    for (std::size_t i = 0; i < workflows.size(); ++i)
      if (workflows[i].id == id) return i;
    throw InvalidArgument("unknown workflow '" + std::string(id) + "'");
  }
  std::size_t metric_index(std::string_view name) const {
    for (std::size_t i = 0; i < metrics.size(); ++i)
      if (metrics[i] == name) return i;
    throw InvalidArgument("unknown metric '" + std::string(name) + "'");
  }
  const std::vector<IterationRecord>& cell(std::string_view task, std::string_view workflow) const {
    return records[task_index(task)][workflow_index(workflow)];
  }

  friend bool operator==(const ComparisonResults&, const ComparisonResults&) = default;
};

/// Title-case name of the methodology, e.g. "Cross Validation".
inline std::string method_name(const EstimationMethod& m) {
  switch (kind_of(m)) {
    case MethodKind::cv: return "Cross Validation";
    case MethodKind::holdout: return "Hold Out";
    case MethodKind::bootstrap: return "Bootstrap";
    case MethodKind::loocv: return "LOOCV";
    case MethodKind::monte_carlo: return "Monte Carlo";
  }
  return "";
}

namespace detail {

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

inline std::string estimation_header(const ComparisonResults& r) {
  std::ostringstream os;
  os << "Task for estimating  " << join(r.metrics, ",") << "  using\n";
  os << " " << method_descriptor(r.estimation.method) << "\n";
  os << "\t Run with seed =  " << r.provenance.seed << " \n";
  return os.str();
}

}  // namespace detail

/// Short print of a results object.
inline std::string describe(const ComparisonResults& r) {
  std::ostringstream os;
  os << "\n==  " << method_name(r.estimation.method) << " Performance Estimation Experiment ==\n\n";
  os << detail::estimation_header(r) << "\n";
  os << " " << r.workflows.size() << "  workflows applied to  " << r.tasks.size() << "  predictive tasks\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Running experiments

/// off: one thread. auto: half the hardware threads. Otherwise `workers`.
struct Parallelism {
  enum class Mode { off, automatic, explicit_count } mode = Mode::off;
  unsigned workers = 1;

  static Parallelism off() { return {}; }
  static Parallelism automatic() { return {Mode::automatic, 0}; }
  static Parallelism count(unsigned n) { return {Mode::explicit_count, n}; }

  unsigned resolve() const {
    switch (mode) {
      case Mode::off: return 1;
      case Mode::automatic: return std::max(1u, std::thread::hardware_concurrency() / 2);
      case Mode::explicit_count: return std::max(1u, workers);
    }
    return 1;
  }
};

inline Parallelism parallelism_from_string(const std::string& s) {
  if (s == "off") return Parallelism::off();
  if (s == "auto") return Parallelism::automatic();
  try {
    std::size_t used = 0;
    const long n = std::stol(s, &used);
    if (used == s.size() && n >= 1) return Parallelism::count(static_cast<unsigned>(n));
  } catch (const std::exception&) {
  }
  throw InvalidArgument("cluster must be off, auto or a positive worker count, got '" + s + "'");
}

struct ProgressEvent {
  enum class Kind { experiment, task, workflow, iteration } kind;
  std::size_t task = 0;
  std::size_t workflow = 0;
  std::size_t iteration = 0;  // 0-based
};

struct RunOptions {
  Parallelism parallelism;
  std::function<void(const ProgressEvent&)> progress;
  const Registry* registry = nullptr;  // null: the global registry
};

/// Metric names split by the code path that produces them.
struct ResolvedMetrics {
  std::vector<std::string> all;
  std::vector<std::string> classification;
  std::vector<std::string> regression;
  std::vector<std::string> time;
  std::vector<std::string> plugin;
  const EvaluatorPlugin* evaluator = nullptr;
};

inline ResolvedMetrics resolve_metrics(const EstimationTask& est, const std::vector<PredTask>& tasks,
                                       const Registry& registry) {
  ResolvedMetrics r;
  std::string evaluator_id = est.evaluator;
  auto evaluator = [&]() -> const EvaluatorPlugin* {
    if (evaluator_id.empty()) return nullptr;
    const auto* p = registry.evaluator(evaluator_id);
    if (!p) throw InvalidArgument("unknown evaluator '" + evaluator_id + "'");
    return p;
  };
  auto add = [&](const std::string& name) {
    if (detail::contains(r.all, name)) throw InvalidArgument("metric '" + name + "' requested twice");
    r.all.push_back(name);
  };

  std::vector<std::string> names = est.metrics;
  if (names.empty()) {
    bool any_class = false, any_reg = false;
    for (const auto& t : tasks) (t.is_classification() ? any_class : any_reg) = true;
    if (any_class && any_reg) throw InvalidArgument("no metrics given and the tasks mix classification and regression");
    names.push_back(any_class ? "err" : "mse");
  }
  for (const auto& name : names) {
    if (name.rfind("plugin:", 0) == 0) {
      const auto id = name.substr(7);
      if (!evaluator_id.empty() && evaluator_id != id)
        throw InvalidArgument("metrics refer to two evaluators: '" + evaluator_id + "' and '" + id + "'");
      evaluator_id = id;
      for (const auto& d : evaluator()->declared) {
        add(d);
        r.plugin.push_back(d);
      }
      continue;
    }
    add(name);
    if (is_time_metric(name)) {
      r.time.push_back(name);
    } else if (const auto* ev = evaluator(); ev && detail::contains(ev->declared, name)) {
      r.plugin.push_back(name);
    } else if (is_classification_metric(name)) {
      r.classification.push_back(name);
    } else if (is_regression_metric(name)) {
      r.regression.push_back(name);
    } else {
      throw InvalidArgument("unknown metric '" + name + "'");
    }
  }
  r.evaluator = evaluator();

  for (const auto& t : tasks) {
    if (t.is_classification() && !r.regression.empty())
      throw InvalidArgument("regression metric '" + r.regression.front() + "' requested for classification task '" +
                            t.id() + "'");
    if (!t.is_classification() && !r.classification.empty())
      throw InvalidArgument("classification metric '" + r.classification.front() +
                            "' requested for regression task '" + t.id() + "'");
  }
  return r;
}

namespace detail {

enum : std::uint64_t { kTagIteration = 11, kTagResubstitution = 12 };
inline constexpr int kRegressionStrata = 10;

inline std::string timestamp_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::vector<std::int32_t> strata_for(const PredTask& task) {
  const auto& y = task.target();
  if (y.is_categorical()) return std::vector<std::int32_t>(y.codes().begin(), y.codes().end());
  return equal_frequency_bins(y.numbers(), kRegressionStrata);
}

inline std::string what_of(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

/// Runs fn(0..n-1) on up to `workers` threads. fn must not throw.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  const auto count = std::min<std::size_t>(workers, n);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace detail

/// Scores one workflow result with the resolved metrics, in their order.
inline ScoreVector score_result(const WorkflowResult& res, const ResolvedMetrics& m, const EstimationTask& est,
                                const Column& train_target) {
  ScoreVector parts;
  auto absorb = [&](const ScoreVector& s) {
    for (const auto& [n, v] : s.entries()) parts.set(n, v);
  };
  if (!m.classification.empty()) absorb(classification_metrics(res.trues, res.preds, {m.classification, est.evaluator_pars}));
  std::optional<std::span<const double>> tt;
  if (train_target.is_numeric()) tt = train_target.numbers();
  if (!m.regression.empty()) {
    if (!res.trues.is_numeric() || res.preds.shape != PredShape::numeric)
      throw InvalidArgument("regression metrics need a numeric target and numeric predictions");
    std::optional<double> last;
    if (tt && !tt->empty()) last = tt->back();
    absorb(regression_metrics(res.trues.numbers(), res.preds.numbers, {m.regression, est.evaluator_pars}, tt, last));
  }
  if (!m.plugin.empty())
    absorb(run_evaluator(*m.evaluator, res.trues, res.preds, m.plugin, est.train_req ? tt : std::nullopt,
                         est.evaluator_pars));
  absorb(time_metrics(res.times, m.time));
  return parts.restrict_to(m.all);
}

/// Trains and tests `w` on one split and scores it. Never throws: failures
/// come back as invalid records.
inline IterationRecord run_iteration(const PredTask& task, const Workflow& w, const Split& split, std::size_t index,
                                     const ResolvedMetrics& m, const EstimationTask& est, Rng& rng,
                                     const Registry& registry) {
  IterationRecord rec;
  rec.split_index = index;
  try {
    const auto& data = task.data();
    const auto train = data.select_rows(split.train);
    const auto test = data.select_rows(split.test);
    const auto res = run_workflow(w, task.formula(), train, test, rng, registry);
    rec.times = res.times;
    rec.scores = score_result(res, m, est, train.column(task.formula().target));
  } catch (...) {
    rec.scores.reset();
    rec.error = detail::what_of(std::current_exception());
  }
  return rec;
}

/// Efron's .632 blend of a resubstitution score and an out-of-bag score.
inline std::optional<double> blend_632(std::optional<double> resub, std::optional<double> e0) {
  if (!resub || !e0) return std::nullopt;
  return 0.368 * *resub + 0.632 * *e0;
}

/// Runs every workflow on every task under `est`.
inline ComparisonResults performance_estimation(const std::vector<PredTask>& tasks,
                                                const std::vector<Workflow>& workflows, const EstimationTask& est,
                                                const RunOptions& options = {}) {
  const Registry& registry = options.registry ? *options.registry : Registry::global();
  if (tasks.empty()) throw InvalidArgument("no predictive tasks given");
  if (workflows.empty()) throw InvalidArgument("no workflows given");
  for (std::size_t i = 0; i < tasks.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (tasks[i].id() == tasks[j].id()) throw InvalidArgument("duplicate task id '" + tasks[i].id() + "'");
  for (std::size_t i = 0; i < workflows.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (workflows[i].id == workflows[j].id) throw InvalidArgument("duplicate workflow id '" + workflows[i].id + "'");
  for (const auto& w : workflows) validate_workflow(w, registry);
  const auto metrics = resolve_metrics(est, tasks, registry);

  const auto seed = seed_of(est.method);
  const bool dot632 = kind_of(est.method) == MethodKind::bootstrap &&
                      std::get<BootstrapSettings>(est.method).type == BootstrapType::dot632;

  // all plans first, so a bad method fails before anything runs
  std::vector<SplitPlan> plans;
  for (const auto& t : tasks) {
    std::vector<std::int32_t> strata;
    if (kind_of(est.method) == MethodKind::cv || kind_of(est.method) == MethodKind::holdout) strata = detail::strata_for(t);
    plans.push_back(make_splits(est.method, t.data().n_rows(), strata));
  }

  ComparisonResults out;
  out.estimation = est;
  out.metrics = metrics.all;
  out.workflows = workflows;
  out.provenance = Provenance{seed, method_descriptor(est.method), kToolVersion, detail::timestamp_now()};
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    out.tasks.push_back(TaskDescriptor{task.id(), to_string(task.formula()), task.type(), task.data().n_rows(),
                                       task.data().name(), plan_fingerprint(plans[t])});
  }
  out.records.assign(tasks.size(), std::vector<std::vector<IterationRecord>>(workflows.size()));

  const unsigned workers = options.parallelism.resolve();
  std::mutex progress_mutex;
  auto emit = [&](ProgressEvent ev) {
    if (!options.progress) return;
    std::lock_guard lock(progress_mutex);
    options.progress(ev);
  };

  emit({ProgressEvent::Kind::experiment});
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    emit({ProgressEvent::Kind::task, t});
    const auto& task = tasks[t];
    const auto& plan = plans[t];
    for (std::size_t w = 0; w < workflows.size(); ++w) {
      emit({ProgressEvent::Kind::workflow, t, w});
      const auto& wf = workflows[w];
      bool safe = true;
      if (wf.kind == WorkflowKind::user) safe = registry.workflow(wf.function)->concurrency_safe;

      std::optional<ScoreVector> resub;
      std::string resub_error;
      if (dot632) {
        std::vector<std::size_t> all(task.data().n_rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        Rng rng(seed, {detail::kTagResubstitution, t});
        auto r = run_iteration(task, wf, Split{all, all}, 0, metrics, est, rng, registry);
        resub = r.scores;
        resub_error = r.error;
      }

      auto& cell = out.records[t][w];
      cell.resize(plan.iterations.size());
      detail::parallel_for(plan.iterations.size(), safe ? workers : 1, [&](std::size_t i) {
        Rng rng(seed, {detail::kTagIteration, t, i});
        auto rec = run_iteration(task, wf, plan.iterations[i], i, metrics, est, rng, registry);
        if (dot632 && !rec.invalid()) {
          if (!resub) {
            rec.scores.reset();
            rec.error = "resubstitution fit failed: " + resub_error;
          } else {
            ScoreVector blended;
            for (const auto& [n, v] : rec.scores->entries())
              blended.set(n, is_time_metric(n) ? v : blend_632(resub->get(n), v));
            rec.scores = std::move(blended);
          }
        }
        cell[i] = std::move(rec);
        emit({ProgressEvent::Kind::iteration, t, w, i});
      });
    }
  }
  return out;
}

/// The textual progress trace: banner, task and workflow headers, and the
/// "Iteration :  1  2 ..." line.
inline std::function<void(const ProgressEvent&)> progress_printer(std::ostream& os, std::vector<std::string> task_ids,
                                                                   std::vector<std::string> workflow_ids,
                                                                   std::vector<std::string> metric_names,
                                                                   EstimationMethod method) {
  return [&os, task_ids = std::move(task_ids), workflow_ids = std::move(workflow_ids),
          metric_names = std::move(metric_names), method = std::move(method)](const ProgressEvent& ev) {
    switch (ev.kind) {
      case ProgressEvent::Kind::experiment:
        os << "\n\n##### PERFORMANCE ESTIMATION USING  " << method_title(method) << "  #####\n";
        break;
      case ProgressEvent::Kind::task: os << "\n** PREDICTIVE TASK :: " << task_ids[ev.task] << "\n"; break;
      case ProgressEvent::Kind::workflow:
        if (ev.workflow > 0) os << "\n";
        os << "\n++ MODEL/WORKFLOW :: " << workflow_ids[ev.workflow] << " \n";
        os << "Task for estimating  " << detail::join(metric_names, ",") << "  using\n";
        os << " " << method_descriptor(method) << "\n";
        os << "\t Run with seed =  " << seed_of(method) << " \n";
        os << "Iteration :" << std::flush;
        break;
      case ProgressEvent::Kind::iteration: os << "  " << ev.iteration + 1 << std::flush; break;
    }
  };
}

// ---------------------------------------------------------------------------
// Persistence

namespace detail {

inline Json opt_number(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline std::optional<double> number_or_missing(const Json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace detail

inline Json to_json(const IterationRecord& r) {
  Json j;
  if (r.scores) {
    Json s = Json::object();
    for (const auto& [n, v] : r.scores->entries()) s[n] = detail::opt_number(v);
    j["scores"] = std::move(s);
  } else {
    j["scores"] = nullptr;
  }
  j["times"] = Json{{"train", r.times.train}, {"test", r.times.test}};
  j["invalid"] = r.invalid();
  j["error"] = r.error;
  j["split"] = r.split_index;
  return j;
}

inline IterationRecord iteration_record_from_json(const Json& j) {
  IterationRecord r;
  if (!j.at("scores").is_null()) {
    ScoreVector s;
    for (const auto& [n, v] : j.at("scores").items()) s.set(n, detail::number_or_missing(v));
    r.scores = std::move(s);
  }
  r.times.train = j.at("times").at("train").get<double>();
  r.times.test = j.at("times").at("test").get<double>();
  r.error = j.at("error").get<std::string>();
  r.split_index = j.at("split").get<std::size_t>();
  if (j.at("invalid").get<bool>() != r.invalid()) throw ParseError("record invalid flag disagrees with its scores");
  return r;
}

inline Json to_json(const ComparisonResults& r) {
  Json j;
  j["version"] = kResultsVersion;
  j["provenance"] = Json{{"seed", r.provenance.seed},
                         {"method", r.provenance.method},
                         {"toolVersion", r.provenance.tool_version},
                         {"timestamp", r.provenance.timestamp}};
  j["estimationTask"] = to_json(r.estimation);
  j["metrics"] = r.metrics;
  Json tasks = Json::array();
  for (const auto& t : r.tasks) {
    std::ostringstream fp;
    fp << std::hex << std::setw(16) << std::setfill('0') << t.plan_fingerprint;
    tasks.push_back(Json{{"id", t.id},
                         {"formula", t.formula},
                         {"type", to_string(t.type)},
                         {"nRows", t.n_rows},
                         {"source", t.source},
                         {"planFingerprint", fp.str()}});
  }
  j["tasks"] = std::move(tasks);
  Json wfs = Json::array();
  for (const auto& w : r.workflows) wfs.push_back(to_json(w));
  j["workflows"] = std::move(wfs);
  Json recs = Json::array();
  for (std::size_t t = 0; t < r.records.size(); ++t) {
    for (std::size_t w = 0; w < r.records[t].size(); ++w) {
      Json cell = Json::array();
      for (const auto& rec : r.records[t][w]) cell.push_back(to_json(rec));
      recs.push_back(Json{{"task", r.tasks[t].id}, {"workflow", r.workflows[w].id}, {"iterations", std::move(cell)}});
    }
  }
  j["records"] = std::move(recs);
  return j;
}

inline ComparisonResults results_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("version")) throw ParseError("not a results document");
  const auto version = j.at("version").get<int>();
  if (version != kResultsVersion)
    throw Incompatible("results format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kResultsVersion) + ")");
  try {
    ComparisonResults r;
    const auto& p = j.at("provenance");
    r.provenance = Provenance{p.at("seed").get<std::int64_t>(), p.at("method").get<std::string>(),
                              p.at("toolVersion").get<std::string>(), p.at("timestamp").get<std::string>()};
    r.estimation = estimation_task_from_json(j.at("estimationTask"));
    r.metrics = j.at("metrics").get<std::vector<std::string>>();
    for (const auto& t : j.at("tasks")) {
      r.tasks.push_back(TaskDescriptor{t.at("id").get<std::string>(), t.at("formula").get<std::string>(),
                                       task_type_from_string(t.at("type").get<std::string>()),
                                       t.at("nRows").get<std::size_t>(), t.at("source").get<std::string>(),
                                       std::stoull(t.at("planFingerprint").get<std::string>(), nullptr, 16)});
    }
    for (const auto& w : j.at("workflows")) r.workflows.push_back(workflow_from_json(w));
    r.records.assign(r.tasks.size(), std::vector<std::vector<IterationRecord>>(r.workflows.size()));
    std::vector<std::vector<bool>> seen(r.tasks.size(), std::vector<bool>(r.workflows.size(), false));
    for (const auto& c : j.at("records")) {
      const auto t = r.task_index(c.at("task").get<std::string>());
      const auto w = r.workflow_index(c.at("workflow").get<std::string>());
      if (seen[t][w]) throw ParseError("duplicate record cell");
      seen[t][w] = true;
      for (const auto& it : c.at("iterations")) r.records[t][w].push_back(iteration_record_from_json(it));
    }
    for (const auto& row : seen)
      if (std::find(row.begin(), row.end(), false) != row.end()) throw ParseError("results document misses a record cell");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed results document: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("malformed results document: ") + e.what());
  }
}

inline void save_results(const ComparisonResults& r, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path + "'");
  f << to_json(r).dump(1) << "\n";
  if (!f) throw Error("write to '" + path + "' failed");
}

inline ComparisonResults load_results(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read '" + path + "'");
  Json j;
  try {
    j = Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
  return results_from_json(j);
}

}  // namespace perfest

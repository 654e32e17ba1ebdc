#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "perfest/engine.hpp"

namespace perfest {

/// Every problem found while validating a config, reported together.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : InvalidArgument(render(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string render(const std::vector<std::string>& p) {
    std::string s = "invalid experiment config (" + std::to_string(p.size()) + " problem" + (p.size() == 1 ? "" : "s") + "):";
    for (const auto& m : p) s += "\n  - " + m;
    return s;
  }
  std::vector<std::string> problems_;
};

struct TaskSpec {
  std::string id;
  std::string csv_path;  // as written; resolved against the config directory
  std::string formula;
  bool copy = false;
  bool time_series = false;
  std::vector<std::string> na_tokens{"NA", ""};
};

/// A declarative experiment: what `perfest run` executes.
///
///   {"tasks":      [{"id": "iris", "csvPath": "iris.csv", "formula": "Species ~ ."}],
///    "workflows":  [{"learner": "knn", "learner.pars": {"k": 3}, "wfID": "knn3"},
///                   {"variantGrid": {"learner": "knn", "learner.pars": {"k": [1, 5]}, "asIs": []}}],
///    "estimation": {"metrics": ["err"], "method": "CV", "nFolds": 10, "seed": 1234},
///    "cluster":    "off",
///    "outputPath": "results.json"}
///
/// Method parameters may also be nested: "method": {"method": "CV", "nFolds": 10}.
struct ExperimentConfig {
  std::vector<TaskSpec> tasks;
  std::vector<Workflow> workflows;
  EstimationTask estimation;
  Parallelism cluster;
  std::string output_path;
  std::filesystem::path base_dir;  // relative paths resolve here

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

namespace detail {

inline const std::set<std::string>& method_param_keys() {
  static const std::set<std::string> keys{"nReps", "nFolds", "seed", "strat", "hldSz", "type", "szTrain", "szTest",
                                          "dataSplits"};
  return keys;
}

/// Flattened estimation block -> the nested form estimation_task_from_json reads.
inline Json normalize_estimation(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("estimation must be an object");
  Json out = Json::object();
  Json method = Json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "method") {
      if (value.is_object()) {
        for (const auto& [k, v] : value.items()) method[k] = v;
      } else {
        method["method"] = value;
      }
    } else if (method_param_keys().count(key)) {
      method[key] = value;
    } else {
      out[key] = value;
    }
  }
  if (!method.empty()) out["method"] = method;
  return out;
}

inline void parse_cluster(const Json& j, Parallelism& out) {
  if (j.is_number_integer()) {
    out = parallelism_from_string(std::to_string(j.get<long long>()));
  } else if (j.is_string()) {
    out = parallelism_from_string(j.get<std::string>());
  } else if (j.is_boolean()) {
    out = j.get<bool>() ? Parallelism::automatic() : Parallelism::off();
  } else {
    throw InvalidArgument("cluster must be off, auto or a positive worker count");
  }
}

inline std::vector<Workflow> parse_workflow_entry(const Json& decl) {
  if (!decl.is_object()) throw InvalidArgument("must be an object");
  if (!decl.contains("variantGrid")) return {make_workflow(decl)};
  if (decl.size() != 1) throw InvalidArgument("a variantGrid entry must not carry other keys");
  const auto& g = decl.at("variantGrid");
  if (!g.is_object()) throw InvalidArgument("variantGrid must be an object");
  VariantGrid grid;
  for (const auto& [key, value] : g.items()) {
    if (key == "asIs") grid.as_is = string_list(value, "asIs");
    else if (key == "idPrefix") grid.id_prefix = value.get<std::string>();
    else if (key == "wf") grid.wf = value.get<std::string>();
    else grid.params[key] = value;
  }
  return workflow_variants(grid);
}

}  // namespace detail

/// Parses and checks a config without touching the data files.
inline ExperimentConfig parse_config(const Json& j, std::filesystem::path base_dir = {},
                                     const Registry& registry = Registry::global()) {
  std::vector<std::string> problems;
  ExperimentConfig cfg;
  cfg.base_dir = std::move(base_dir);
  if (!j.is_object()) throw ConfigError({"config must be a JSON object"});

  static const std::set<std::string> top{"tasks", "workflows", "estimation", "cluster", "outputPath"};
  for (const auto& [key, value] : j.items())
    if (!top.count(key)) problems.push_back("unknown top-level key '" + key + "'");

  // tasks
  if (!j.contains("tasks") || !j.at("tasks").is_array() || j.at("tasks").empty()) {
    problems.push_back("tasks: a non-empty list is required");
  } else {
    std::set<std::string> seen;
    std::size_t i = 0;
    for (const auto& t : j.at("tasks")) {
      const std::string where = "tasks[" + std::to_string(i++) + "]";
      try {
        if (!t.is_object()) throw InvalidArgument("must be an object");
        static const std::set<std::string> keys{"id", "csvPath", "formula", "copy", "timeSeries", "naTokens"};
        for (const auto& [key, value] : t.items())
          if (!keys.count(key)) throw InvalidArgument("unknown key '" + key + "'");
        TaskSpec s;
        if (!t.contains("csvPath") || !t.at("csvPath").is_string()) throw InvalidArgument("csvPath is required");
        if (!t.contains("formula") || !t.at("formula").is_string()) throw InvalidArgument("formula is required");
        s.csv_path = t.at("csvPath").get<std::string>();
        s.formula = t.at("formula").get<std::string>();
        (void)parse_formula(s.formula);
        s.id = t.value("id", std::string());
        s.copy = t.value("copy", false);
        s.time_series = t.value("timeSeries", false);
        if (t.contains("naTokens")) s.na_tokens = t.at("naTokens").get<std::vector<std::string>>();
        if (!s.id.empty() && !seen.insert(s.id).second) throw InvalidArgument("duplicate task id '" + s.id + "'");
        cfg.tasks.push_back(std::move(s));
      } catch (const std::exception& e) {
        problems.push_back(where + ": " + e.what());
      }
    }
  }

  // workflows
  if (!j.contains("workflows") || !j.at("workflows").is_array() || j.at("workflows").empty()) {
    problems.push_back("workflows: a non-empty list is required");
  } else {
    std::size_t i = 0;
    for (const auto& w : j.at("workflows")) {
      const std::string where = "workflows[" + std::to_string(i++) + "]";
      try {
        for (auto& wf : detail::parse_workflow_entry(w)) {
          try {
            validate_workflow(wf, registry);
          } catch (const std::exception& e) {
            problems.push_back(where + ": " + e.what());
          }
          cfg.workflows.push_back(std::move(wf));
        }
      } catch (const std::exception& e) {
        problems.push_back(where + ": " + e.what());
      }
    }
    std::set<std::string> seen;
    for (const auto& w : cfg.workflows)
      if (!seen.insert(w.id).second) problems.push_back("workflows: duplicate workflow id '" + w.id + "'");
  }

  // estimation
  try {
    cfg.estimation = estimation_task_from_json(detail::normalize_estimation(j.value("estimation", Json::object())));
    // names only; task-type compatibility is checked once the data is loaded
    for (const auto& m : cfg.estimation.metrics) {
      if (m.rfind("plugin:", 0) == 0) {
        if (!registry.evaluator(m.substr(7))) problems.push_back("estimation: unknown evaluator '" + m.substr(7) + "'");
      } else if (!is_time_metric(m) && !is_classification_metric(m) && !is_regression_metric(m)) {
        const auto* ev = cfg.estimation.evaluator.empty() ? nullptr : registry.evaluator(cfg.estimation.evaluator);
        if (!ev || !detail::contains(ev->declared, m)) problems.push_back("estimation: unknown metric '" + m + "'");
      }
    }
    if (!cfg.estimation.evaluator.empty() && !registry.evaluator(cfg.estimation.evaluator))
      problems.push_back("estimation: unknown evaluator '" + cfg.estimation.evaluator + "'");
  } catch (const std::exception& e) {
    problems.push_back(std::string("estimation: ") + e.what());
  }

  if (j.contains("cluster")) {
    try {
      detail::parse_cluster(j.at("cluster"), cfg.cluster);
    } catch (const std::exception& e) {
      problems.push_back(std::string("cluster: ") + e.what());
    }
  }

  if (!j.contains("outputPath") || !j.at("outputPath").is_string() || j.at("outputPath").get<std::string>().empty())
    problems.push_back("outputPath: a file name is required");
  else
    cfg.output_path = j.at("outputPath").get<std::string>();

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const Registry& registry = Registry::global()) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path(), registry);
}

/// Reads every task's CSV and builds the tasks. Problems are collected like
/// parse_config's, including metric/task-type mismatches.
inline std::vector<PredTask> load_tasks(const ExperimentConfig& cfg, const Registry& registry = Registry::global()) {
  std::vector<std::string> problems;
  std::vector<PredTask> tasks;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
    const auto& s = cfg.tasks[i];
    try {
      CsvOptions opts;
      opts.na_tokens = s.na_tokens;
      auto frame = std::make_shared<DataFrame>(read_csv(cfg.resolve(s.csv_path).string(), opts));
      auto task = make_task(parse_formula(s.formula), frame, TaskOptions{s.id, s.copy, s.time_series});
      if (!seen.insert(task.id()).second) throw InvalidArgument("duplicate task id '" + task.id() + "'");
      tasks.push_back(std::move(task));
    } catch (const std::exception& e) {
      problems.push_back("tasks[" + std::to_string(i) + "]: " + e.what());
    }
  }
  if (problems.empty()) {
    try {
      (void)resolve_metrics(cfg.estimation, tasks, registry);
    } catch (const std::exception& e) {
      problems.push_back(std::string("estimation: ") + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return tasks;
}

/// Loads the data and runs the experiment, writing the progress trace to
/// `trace` when given. `workers` overrides the config's cluster setting.
inline ComparisonResults run_experiment(const ExperimentConfig& cfg, std::optional<Parallelism> workers = std::nullopt,
                                        std::ostream* trace = nullptr, const Registry& registry = Registry::global()) {
  const auto tasks = load_tasks(cfg, registry);
  RunOptions opts;
  opts.parallelism = workers.value_or(cfg.cluster);
  opts.registry = &registry;
  if (trace) {
    std::vector<std::string> task_ids, wf_ids;
    for (const auto& t : tasks) task_ids.push_back(t.id());
    for (const auto& w : cfg.workflows) wf_ids.push_back(w.id);
    opts.progress = progress_printer(*trace, std::move(task_ids), std::move(wf_ids),
                                     resolve_metrics(cfg.estimation, tasks, registry).all, cfg.estimation.method);
  }
  return performance_estimation(tasks, cfg.workflows, cfg.estimation, opts);
}

}  // namespace perfest

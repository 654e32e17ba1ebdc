#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "perfest/error.hpp"
#include "perfest/frame.hpp"
#include "perfest/learners.hpp"
#include "perfest/metrics.hpp"
#include "perfest/predictions.hpp"
#include "perfest/rng.hpp"

namespace perfest {

/// A (train, test) pair after pre-processing. `test_rows` maps each surviving
/// test row to its position in the original test frame.
struct PreResult {
  DataFrame train;
  DataFrame test;
  std::vector<std::size_t> test_rows;
};

using PreStepFn = std::function<PreResult(const DataFrame& train, const DataFrame& test, const std::string& target,
                                          const Json& pars, Rng& rng)>;

struct PostContext {
  const Column& train_target;
  const Json& pars;
};

using PostStepFn = std::function<Predictions(Predictions preds, const PostContext& ctx)>;

/// What a user workflow returns. Fields left empty are contract violations,
/// except `times`, which the framework measures when absent.
struct PluginResult {
  std::optional<Column> trues;
  std::optional<Predictions> preds;
  std::optional<Timing> times;
  Json extras = Json::object();
};

using WorkflowFn = std::function<PluginResult(const Formula& formula, const DataFrame& train, const DataFrame& test,
                                              const Json& params, Rng& rng)>;

struct WorkflowPlugin {
  WorkflowFn fn;
  bool concurrency_safe = true;
};

/// String-keyed plugin tables. Register everything before an experiment
/// starts; lookups are safe from several threads.
class Registry {
 public:
  static Registry& global() {
    static Registry r;
    return r;
  }

  void add_learner(const std::string& id, LearnerFn fn) { put(learners_, id, std::move(fn)); }
  void add_pre_step(const std::string& id, PreStepFn fn) { put(pre_, id, std::move(fn)); }
  void add_post_step(const std::string& id, PostStepFn fn) { put(post_, id, std::move(fn)); }
  void add_workflow(const std::string& id, WorkflowFn fn, bool concurrency_safe = true) {
    put(workflows_, id, WorkflowPlugin{std::move(fn), concurrency_safe});
  }
  void add_evaluator(const std::string& id, EvaluatorPlugin plugin) { put(evaluators_, id, std::move(plugin)); }

  const LearnerFn* learner(std::string_view id) const { return get(learners_, id); }
  const PreStepFn* pre_step(std::string_view id) const { return get(pre_, id); }
  const PostStepFn* post_step(std::string_view id) const { return get(post_, id); }
  const WorkflowPlugin* workflow(std::string_view id) const { return get(workflows_, id); }
  const EvaluatorPlugin* evaluator(std::string_view id) const { return get(evaluators_, id); }

  void clear() {
    std::unique_lock lock(mutex_);
    learners_.clear();
    pre_.clear();
    post_.clear();
    workflows_.clear();
    evaluators_.clear();
  }

 private:
  static std::string strip(std::string_view id) {
    constexpr std::string_view prefix = "plugin:";
    if (id.substr(0, prefix.size()) == prefix) id.remove_prefix(prefix.size());
    return std::string(id);
  }

  template <class T>
  void put(std::map<std::string, T>& table, const std::string& id, T value) {
    if (strip(id).empty()) throw InvalidArgument("plugin id must not be empty");
    std::unique_lock lock(mutex_);
    table.insert_or_assign(strip(id), std::move(value));
  }

  template <class T>
  const T* get(const std::map<std::string, T>& table, std::string_view id) const {
    std::shared_lock lock(mutex_);
    auto it = table.find(strip(id));
    return it == table.end() ? nullptr : &it->second;
  }

  mutable std::shared_mutex mutex_;
  std::map<std::string, LearnerFn> learners_;
  std::map<std::string, PreStepFn> pre_;
  std::map<std::string, PostStepFn> post_;
  std::map<std::string, WorkflowPlugin> workflows_;
  std::map<std::string, EvaluatorPlugin> evaluators_;
};

/// Resolves a learner name: built-ins first, then registered plugins.
inline const LearnerFn& find_learner(std::string_view name, const Registry& registry) {
  if (name.substr(0, 7) != "plugin:") {
    const auto& table = builtin_learners();
    if (auto it = table.find(std::string(name)); it != table.end()) return it->second;
  }
  if (const auto* fn = registry.learner(name)) return *fn;
  throw InvalidArgument("unknown learner '" + std::string(name) + "'");
}

}  // namespace perfest

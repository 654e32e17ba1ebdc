#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "perfest/error.hpp"
#include "perfest/frame.hpp"
#include "perfest/learners.hpp"
#include "perfest/plugins.hpp"
#include "perfest/predictions.hpp"
#include "perfest/prepost.hpp"
#include "perfest/rng.hpp"

namespace perfest {

enum class WorkflowKind { standard, timeseries, user };

/// A named workflow: the function implementing it plus its parameters.
struct Workflow {
  std::string id;
  WorkflowKind kind = WorkflowKind::standard;
  std::string function = "standardWF";
  Json params = Json::object();

  friend bool operator==(const Workflow& a, const Workflow& b) {
    return a.id == b.id && a.kind == b.kind && a.function == b.function && a.params == b.params;
  }
};

namespace detail {

inline std::vector<std::string> string_list(const Json& v, const std::string& what) {
  if (v.is_null()) return {};
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw InvalidArgument(what + " must be a name or a list of names");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw InvalidArgument(what + " must contain only names");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline const Json& param_or_null(const Json& params, const char* key) {
  static const Json null_value;
  if (!params.is_object()) return null_value;
  auto it = params.find(key);
  return it == params.end() ? null_value : *it;
}

inline const std::vector<std::string>& standard_param_names() {
  static const std::vector<std::string> names{"learner", "learner.pars", "predictor", "predictor.pars",
                                              "pre",     "pre.pars",     "post",      "post.pars"};
  return names;
}

}  // namespace detail

/// Builds a workflow from a declaration such as
/// {"wf": "standardWF", "wfID": "knn3", "learner": "knn", "learner.pars": {"k": 3}}.
/// Without "wf", a declaration with a "type" parameter is a time-series
/// workflow and anything else a standard one.
inline Workflow make_workflow(Json decl, std::string id = {}) {
  if (!decl.is_object()) throw InvalidArgument("workflow declaration must be an object");
  Workflow w;
  std::string fn;
  if (decl.contains("wf")) {
    fn = decl.at("wf").get<std::string>();
    decl.erase("wf");
  }
  if (decl.contains("wfID")) {
    if (id.empty()) id = decl.at("wfID").get<std::string>();
    decl.erase("wfID");
  }
  if (fn.empty()) fn = decl.contains("type") ? "timeseriesWF" : "standardWF";
  w.function = fn;
  w.kind = fn == "standardWF" ? WorkflowKind::standard : fn == "timeseriesWF" ? WorkflowKind::timeseries : WorkflowKind::user;
  w.params = std::move(decl);
  if (id.empty()) {
    const auto& learner = detail::param_or_null(w.params, "learner");
    id = learner.is_string() ? learner.get<std::string>() : fn;
  }
  w.id = std::move(id);
  return w;
}

inline Json to_json(const Workflow& w) { return Json{{"id", w.id}, {"wf", w.function}, {"params", w.params}}; }

inline Workflow workflow_from_json(const Json& j) {
  try {
    Json decl = j.at("params");
    decl["wf"] = j.at("wf");
    return make_workflow(std::move(decl), j.at("id").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed workflow: ") + e.what());
  }
}

/// Checks names referenced by a workflow before anything runs.
inline void validate_workflow(const Workflow& w, const Registry& registry) {
  if (w.id.empty()) throw InvalidArgument("workflow id must not be empty");
  if (!w.params.is_object()) throw InvalidArgument("workflow '" + w.id + "': parameters must be an object");
  if (w.kind == WorkflowKind::user) {
    if (!registry.workflow(w.function))
      throw InvalidArgument("workflow '" + w.id + "': unknown workflow function '" + w.function + "'");
    return;
  }
  auto allowed = detail::standard_param_names();
  if (w.kind == WorkflowKind::timeseries) {
    allowed.push_back("type");
    allowed.push_back("relearn.step");
    const auto& type = detail::param_or_null(w.params, "type");
    if (!type.is_string() || (type != "slide" && type != "grow"))
      throw InvalidArgument("workflow '" + w.id + "': timeseriesWF needs type \"slide\" or \"grow\"");
    const auto& step = detail::param_or_null(w.params, "relearn.step");
    if (!step.is_null() && (!step.is_number_integer() || step.get<long long>() < 1))
      throw InvalidArgument("workflow '" + w.id + "': relearn.step must be an integer >= 1");
  }
  for (const auto& [key, value] : w.params.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidArgument("workflow '" + w.id + "': unknown parameter '" + key + "'");
  }
  const auto& learner = detail::param_or_null(w.params, "learner");
  if (!learner.is_string()) throw InvalidArgument("workflow '" + w.id + "': a learner name is required");
  (void)find_learner(learner.get<std::string>(), registry);
  try {
    check_learner_pars(learner.get<std::string>(), detail::param_or_null(w.params, "learner.pars"));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("workflow '" + w.id + "': " + e.what());
  }
  for (const auto& s : detail::string_list(detail::param_or_null(w.params, "pre"), "pre"))
    if (!is_known_pre_step(s, registry)) throw InvalidArgument("workflow '" + w.id + "': unknown pre-processing step '" + s + "'");
  for (const auto& s : detail::string_list(detail::param_or_null(w.params, "post"), "post"))
    if (!is_known_post_step(s, registry)) throw InvalidArgument("workflow '" + w.id + "': unknown post-processing step '" + s + "'");
  const auto& predictor = detail::param_or_null(w.params, "predictor");
  if (!predictor.is_null() && predictor != "predict")
    throw InvalidArgument("workflow '" + w.id + "': unknown predictor '" + predictor.dump() + "'");
}

namespace detail {

inline PredShape requested_shape(const Json& predictor_pars, bool classification) {
  if (!classification) return PredShape::numeric;
  const auto& type = param_or_null(predictor_pars, "type");
  if (type.is_null() || type == "class") return PredShape::labels;
  if (type == "prob") return PredShape::probabilities;
  throw InvalidArgument("predictor.pars type must be \"class\" or \"prob\"");
}

/// Copy of `test` whose target cells are all missing.
inline DataFrame mask_target(const DataFrame& test, const std::string& target) {
  DataFrame masked = test;
  if (!masked.has(target)) return masked;
  auto& col = masked.column(target);
  for (std::size_t r = 0; r < col.size(); ++r) col.set_missing(r);
  return masked;
}

struct FitPredict {
  Predictions preds;
  std::vector<std::size_t> test_rows;
  Timing times;
};

// pre chain, fit and predict on one (train, test) pair
inline FitPredict fit_predict(const Formula& f, const DataFrame& train, const DataFrame& test, const Json& params,
                              Rng& rng, const Registry& registry) {
  Stopwatch clock;
  const auto pre = run_pre_chain(string_list(param_or_null(params, "pre"), "pre"), param_or_null(params, "pre.pars"),
                                 train, mask_target(test, f.target), f.target, rng, registry);
  const auto& learner_name = param_or_null(params, "learner");
  if (!learner_name.is_string()) throw InvalidArgument("a learner name is required");
  const auto& fit = find_learner(learner_name.get<std::string>(), registry);
  auto model = fit(f, pre.train, param_or_null(params, "learner.pars"), rng);
  if (!model) throw ContractViolation("learner returned no model");
  const double t_train = clock.seconds();
  const bool classification = train.column(f.target).is_categorical();
  auto preds = model->predict(pre.test, requested_shape(param_or_null(params, "predictor.pars"), classification));
  preds.validate();
  if (preds.size() != pre.test.n_rows())
    throw ContractViolation("model returned " + std::to_string(preds.size()) + " predictions for " +
                            std::to_string(pre.test.n_rows()) + " test rows");
  return {std::move(preds), pre.test_rows, Timing{t_train, clock.seconds() - t_train}};
}

}  // namespace detail

/// Pre-process, learn, predict, post-process. The learner never sees the
/// test target; truths come from the original test frame.
inline WorkflowResult standard_wf(const Formula& f, const DataFrame& train, const DataFrame& test, const Json& params,
                                  Rng& rng, const Registry& registry = Registry::global()) {
  if (train.n_rows() == 0) throw InvalidArgument("standardWF: empty training set");
  if (test.n_rows() == 0) throw InvalidArgument("standardWF: empty test set");
  auto fp = detail::fit_predict(f, train, test, params, rng, registry);
  Stopwatch clock;
  const auto& train_target = train.column(f.target);
  auto preds = run_post_chain(detail::string_list(detail::param_or_null(params, "post"), "post"),
                              detail::param_or_null(params, "post.pars"), std::move(fp.preds), train_target, registry);
  fp.times.test += clock.seconds();
  return WorkflowResult{response_values(f, test).select(fp.test_rows), std::move(preds), fp.times, Json::object()};
}

/// Sliding or growing window workflow over time-ordered data. Models are
/// refitted at test offsets 0, s, 2s, ... and each model predicts the rows up
/// to the next refit. Refits use the true targets of test rows already
/// consumed.
inline WorkflowResult timeseries_wf(const Formula& f, const DataFrame& train, const DataFrame& test, const Json& params,
                                    Rng& rng, const Registry& registry = Registry::global()) {
  if (train.n_rows() == 0) throw InvalidArgument("timeseriesWF: empty training set");
  if (test.n_rows() == 0) throw InvalidArgument("timeseriesWF: empty test set");
  const auto& type = detail::param_or_null(params, "type");
  if (type != "slide" && type != "grow") throw InvalidArgument("timeseriesWF needs type \"slide\" or \"grow\"");
  const bool slide = type == "slide";
  const auto& step_par = detail::param_or_null(params, "relearn.step");
  const long long step_ll = step_par.is_null() ? 1 : step_par.get<long long>();
  if (step_ll < 1) throw InvalidArgument("relearn.step must be at least 1");
  const auto step = static_cast<std::size_t>(step_ll);

  const auto L = train.n_rows();
  const auto n_test = test.n_rows();
  const auto full = train.concat(test, detail::iota_rows(n_test));
  Json inner = params;
  inner.erase("type");
  inner.erase("relearn.step");

  std::optional<Predictions> all;
  std::vector<std::size_t> rows;
  Timing times;
  Json fits = Json::array();
  for (std::size_t j = 0; j < n_test; j += step) {
    const std::size_t lo = slide ? j : 0;
    std::vector<std::size_t> window(L + j - lo);
    std::iota(window.begin(), window.end(), lo);
    std::vector<std::size_t> block(std::min(step, n_test - j));
    std::iota(block.begin(), block.end(), j);
    auto fp = detail::fit_predict(f, full.select_rows(window), test.select_rows(block), inner, rng, registry);
    fits.push_back(Json{{"offset", j}, {"trainRows", window.size()}});
    times.train += fp.times.train;
    times.test += fp.times.test;
    for (auto r : fp.test_rows) rows.push_back(j + r);
    if (!all) all = std::move(fp.preds);
    else all->append(fp.preds);
  }
  Stopwatch clock;
  auto preds = run_post_chain(detail::string_list(detail::param_or_null(params, "post"), "post"),
                              detail::param_or_null(params, "post.pars"), std::move(*all), train.column(f.target), registry);
  times.test += clock.seconds();
  return WorkflowResult{response_values(f, test).select(rows), std::move(preds), times, Json{{"fits", fits}}};
}

/// Calls a user workflow and checks its result.
inline WorkflowResult run_user_workflow(const WorkflowPlugin& plugin, const Formula& f, const DataFrame& train,
                                        const DataFrame& test, const Json& params, Rng& rng) {
  if (!plugin.fn) throw InvalidArgument("workflow plugin has no function");
  Stopwatch clock;
  auto out = plugin.fn(f, train, test, params, rng);
  const double elapsed = clock.seconds();
  if (!out.trues) throw ContractViolation("workflow result has no trues");
  if (!out.preds) throw ContractViolation("workflow result has no preds");
  out.preds->validate();
  if (out.preds->size() != out.trues->size())
    throw ContractViolation("workflow returned " + std::to_string(out.preds->size()) + " predictions for " +
                            std::to_string(out.trues->size()) + " truths");
  const bool categorical = out.trues->is_categorical();
  if (categorical == (out.preds->shape == PredShape::numeric))
    throw ContractViolation("prediction shape '" + to_string(out.preds->shape) + "' does not fit the target kind");
  return WorkflowResult{std::move(*out.trues), std::move(*out.preds), out.times.value_or(Timing{elapsed, 0.0}),
                        std::move(out.extras)};
}

/// Dispatches on the workflow kind.
inline WorkflowResult run_workflow(const Workflow& w, const Formula& f, const DataFrame& train, const DataFrame& test,
                                   Rng& rng, const Registry& registry = Registry::global()) {
  switch (w.kind) {
    case WorkflowKind::standard: return standard_wf(f, train, test, w.params, rng, registry);
    case WorkflowKind::timeseries: return timeseries_wf(f, train, test, w.params, rng, registry);
    case WorkflowKind::user: {
      const auto* plugin = registry.workflow(w.function);
      if (!plugin) throw InvalidArgument("unknown workflow function '" + w.function + "'");
      return run_user_workflow(*plugin, f, train, test, w.params, rng);
    }
  }
  throw InvalidArgument("bad workflow kind");
}

/// A workflow template whose list-valued parameters are expanded into all
/// combinations.
struct VariantGrid {
  std::string wf;                   // empty: inferred as in make_workflow
  Json params = Json::object();     // list values are candidates
  std::vector<std::string> as_is;   // parameters passed whole
  std::string id_prefix;            // empty: learner name, else wf name
};

/// Cartesian expansion in declaration order, last parameter varying fastest.
/// Lists inside learner.pars and predictor.pars are expanded too; pre, post
/// and their parameter maps are never expanded.
inline std::vector<Workflow> workflow_variants(const VariantGrid& grid) {
  if (!grid.params.is_object()) throw InvalidArgument("variant parameters must be an object");
  static const std::set<std::string> fixed{"pre", "post", "pre.pars", "post.pars", "wf", "wfID"};
  static const std::set<std::string> nested{"learner.pars", "predictor.pars"};
  const std::set<std::string> as_is(grid.as_is.begin(), grid.as_is.end());

  std::set<std::string> known;
  struct Slot {
    std::string key;
    std::string sub;  // empty for top-level parameters
    const Json* values;
  };
  std::vector<Slot> slots;
  for (const auto& [key, value] : grid.params.items()) {
    known.insert(key);
    if (fixed.count(key)) continue;
    if (nested.count(key) && value.is_object()) {
      for (const auto& [sub, v] : value.items()) {
        known.insert(sub);
        if (v.is_array() && !as_is.count(sub)) slots.push_back({key, sub, &v});
      }
      continue;
    }
    if (value.is_array() && !as_is.count(key)) slots.push_back({key, "", &value});
  }
  for (const auto& name : grid.as_is)
    if (!known.count(name)) throw InvalidArgument("as.is names unknown parameter '" + name + "'");
  for (const auto& s : slots)
    if (s.values->empty())
      throw InvalidArgument("parameter '" + (s.sub.empty() ? s.key : s.key + "$" + s.sub) + "' has no candidate values");

  std::size_t total = 1;
  for (const auto& s : slots) total *= s.values->size();
  std::vector<Workflow> out;
  out.reserve(total);
  std::vector<std::size_t> pick(slots.size(), 0);
  for (std::size_t v = 0; v < total; ++v) {
    Json params = grid.params;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& value = (*slots[i].values)[pick[i]];
      if (slots[i].sub.empty()) params[slots[i].key] = value;
      else params[slots[i].key][slots[i].sub] = value;
    }
    if (!grid.wf.empty()) params["wf"] = grid.wf;
    auto w = make_workflow(params, "tmp");
    std::string prefix = grid.id_prefix;
    if (prefix.empty()) {
      const auto& learner = detail::param_or_null(w.params, "learner");
      prefix = learner.is_string() ? learner.get<std::string>() : w.function;
    }
    w.id = prefix + ".v" + std::to_string(v + 1);
    out.push_back(std::move(w));
    for (std::size_t i = slots.size(); i-- > 0;) {
      if (++pick[i] < slots[i].values->size()) break;
      pick[i] = 0;
    }
  }
  return out;
}

}  // namespace perfest

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perfest/error.hpp"
#include "perfest/frame.hpp"
#include "perfest/predictions.hpp"

namespace perfest {

/// Named scores in request order. A missing value marks a metric that is
/// undefined on this iteration (e.g. precision with no predicted positives).
class ScoreVector {
 public:
  void set(const std::string& name, std::optional<double> value) {
    for (auto& [n, v] : entries_) {
      if (n == name) {
        v = value;
        return;
      }
    }
    entries_.emplace_back(name, value);
  }
  bool has(std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
  }
  std::optional<double> get(std::string_view name) const {
    for (const auto& [n, v] : entries_)
      if (n == name) return v;
    throw InvalidArgument("no score named '" + std::string(name) + "'");
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
  }
  const std::vector<std::pair<std::string, std::optional<double>>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Keeps only `wanted`, in that order.
  ScoreVector restrict_to(std::span<const std::string> wanted) const {
    ScoreVector out;
    for (const auto& w : wanted) out.set(w, get(w));
    return out;
  }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<std::pair<std::string, std::optional<double>>> entries_;
};

inline const std::vector<std::string>& classification_metric_names() {
  static const std::vector<std::string> names{"acc", "err", "prec", "rec", "F", "macroF", "macroPrec", "macroRec", "totU"};
  return names;
}
inline const std::vector<std::string>& regression_metric_names() {
  static const std::vector<std::string> names{"mae", "mse", "rmse", "mape", "nmse", "nmae", "theil"};
  return names;
}
inline const std::vector<std::string>& time_metric_names() {
  static const std::vector<std::string> names{"trTime", "tsTime", "totTime"};
  return names;
}

namespace detail {
inline bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}
}  // namespace detail

inline bool is_classification_metric(std::string_view name) { return detail::contains(classification_metric_names(), name); }
inline bool is_regression_metric(std::string_view name) { return detail::contains(regression_metric_names(), name); }
inline bool is_time_metric(std::string_view name) { return detail::contains(time_metric_names(), name); }

/// Built-in metrics whose value depends on training data.
inline bool needs_train_target(std::string_view name) { return name == "nmse" || name == "nmae" || name == "theil"; }

/// Metric names plus their parameters (posClass, beta, cb.matrix).
struct MetricRequest {
  std::vector<std::string> names;
  Json pars = Json::object();
};

/// counts[i][j] = rows whose truth is class i and prediction class j.
struct ConfusionMatrix {
  std::vector<std::string> class_order;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }
};

namespace detail {

inline std::vector<std::int32_t> prediction_codes_for(const Column& trues, const Predictions& preds) {
  if (!trues.is_categorical()) throw InvalidArgument("classification metrics need a categorical target");
  if (preds.shape == PredShape::numeric) throw InvalidArgument("classification metrics need label or probability predictions");
  if (preds.size() != trues.size())
    throw ContractViolation("prediction count " + std::to_string(preds.size()) + " differs from truth count " +
                            std::to_string(trues.size()));
  const auto labels = to_labels(preds);
  if (labels.has_missing()) throw InvalidArgument("missing predictions (consider the na2central post-processing step)");
  // map prediction codes into the truth's category indexing
  std::vector<std::int32_t> remap(labels.class_order.size());
  for (std::size_t c = 0; c < labels.class_order.size(); ++c) {
    auto idx = trues.category_index(labels.class_order[c]);
    if (!idx) throw InvalidArgument("predicted class '" + labels.class_order[c] + "' is not a target category");
    remap[c] = *idx;
  }
  std::vector<std::int32_t> out;
  out.reserve(labels.labels.size());
  for (auto c : labels.labels) out.push_back(remap[static_cast<std::size_t>(c)]);
  return out;
}

inline std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

inline std::optional<double> f_measure(std::optional<double> prec, std::optional<double> rec, double beta) {
  if (!prec || !rec) return std::nullopt;
  const double b2 = beta * beta;
  const double den = b2 * *prec + *rec;
  if (den == 0.0) return 0.0;
  return (1 + b2) * *prec * *rec / den;
}

inline std::optional<double> mean_defined(const std::vector<std::optional<double>>& v) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace detail

/// Confusion matrix in the truth column's category order.
inline ConfusionMatrix confusion_matrix(const Column& trues, const Predictions& preds) {
  const auto codes = detail::prediction_codes_for(trues, preds);
  const auto k = trues.categories().size();
  ConfusionMatrix cm{trues.categories(), std::vector<std::vector<std::size_t>>(k, std::vector<std::size_t>(k, 0))};
  for (std::size_t r = 0; r < codes.size(); ++r) {
    if (trues.is_missing(r)) throw InvalidArgument("missing true label");
    ++cm.counts[static_cast<std::size_t>(trues.code(r))][static_cast<std::size_t>(codes[r])];
  }
  return cm;
}

/// acc, err, prec, rec, F, macro averages and total utility.
inline ScoreVector classification_metrics(const Column& trues, const Predictions& preds, const MetricRequest& req) {
  const auto codes = detail::prediction_codes_for(trues, preds);
  const auto n = codes.size();
  const auto k = trues.categories().size();
  const double beta = req.pars.value("beta", 1.0);

  std::size_t correct = 0;
  std::vector<double> tp(k, 0), fp(k, 0), fn(k, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (trues.is_missing(r)) throw InvalidArgument("missing true label");
    const auto t = static_cast<std::size_t>(trues.code(r));
    const auto p = static_cast<std::size_t>(codes[r]);
    if (t == p) {
      ++correct;
      tp[t] += 1;
    } else {
      fp[p] += 1;
      fn[t] += 1;
    }
  }
  auto prec_of = [&](std::size_t c) { return detail::ratio(tp[c], tp[c] + fp[c]); };
  auto rec_of = [&](std::size_t c) { return detail::ratio(tp[c], tp[c] + fn[c]); };
  auto positive = [&]() -> std::size_t {
    if (!req.pars.contains("posClass")) throw InvalidArgument("prec/rec/F need the posClass parameter");
    const auto label = req.pars.at("posClass").get<std::string>();
    auto idx = trues.category_index(label);
    if (!idx) throw InvalidArgument("posClass '" + label + "' is not a class of the target");
    return static_cast<std::size_t>(*idx);
  };
  // classes that occur in truths or predictions take part in macro averages
  auto present = [&](std::size_t c) { return tp[c] + fp[c] + fn[c] > 0; };

  ScoreVector out;
  for (const auto& name : req.names) {
    if (name == "acc") {
      out.set(name, detail::ratio(static_cast<double>(correct), static_cast<double>(n)));
    } else if (name == "err") {
      auto acc = detail::ratio(static_cast<double>(correct), static_cast<double>(n));
      out.set(name, acc ? std::optional<double>(1.0 - *acc) : std::nullopt);
    } else if (name == "prec") {
      out.set(name, prec_of(positive()));
    } else if (name == "rec") {
      out.set(name, rec_of(positive()));
    } else if (name == "F") {
      const auto c = positive();
      out.set(name, detail::f_measure(prec_of(c), rec_of(c), beta));
    } else if (name == "macroPrec" || name == "macroRec" || name == "macroF") {
      std::vector<std::optional<double>> per;
      for (std::size_t c = 0; c < k; ++c) {
        if (!present(c)) continue;
        if (name == "macroPrec") per.push_back(prec_of(c));
        else if (name == "macroRec") per.push_back(rec_of(c));
        else per.push_back(detail::f_measure(prec_of(c), rec_of(c), beta));
      }
      out.set(name, detail::mean_defined(per));
    } else if (name == "totU") {
      if (!req.pars.contains("cb.matrix")) throw InvalidArgument("totU needs the cb.matrix parameter");
      const auto cb = CostBenefitMatrix::from_json(req.pars.at("cb.matrix"), trues.categories());
      double total = 0;
      for (std::size_t r = 0; r < n; ++r)
        total += cb.entries[static_cast<std::size_t>(trues.code(r))][static_cast<std::size_t>(codes[r])];
      out.set(name, total);
    } else {
      throw InvalidArgument("unknown classification metric '" + name + "'");
    }
  }
  return out;
}

/// Errors-based regression metrics. `train_target` feeds nmse/nmae and
/// `last_train_value` seeds the naive forecast used by theil.
inline ScoreVector regression_metrics(std::span<const double> trues, std::span<const double> preds,
                                      const MetricRequest& req,
                                      std::optional<std::span<const double>> train_target = std::nullopt,
                                      std::optional<double> last_train_value = std::nullopt) {
  if (trues.size() != preds.size())
    throw ContractViolation("prediction count " + std::to_string(preds.size()) + " differs from truth count " +
                            std::to_string(trues.size()));
  for (double p : preds)
    if (std::isnan(p)) throw InvalidArgument("missing predictions (consider the na2central post-processing step)");
  for (double t : trues)
    if (std::isnan(t)) throw InvalidArgument("missing true value");
  const auto n = static_cast<double>(trues.size());

  auto train_mean = [&]() -> std::optional<double> {
    if (!train_target) throw InvalidArgument("nmse/nmae need the training target");
    const auto& tt = *train_target;
    if (tt.empty()) return std::nullopt;
    double lo = tt[0], hi = tt[0], sum = 0;
    for (double v : tt) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    if (lo == hi) return std::nullopt;  // constant train target
    return sum / static_cast<double>(tt.size());
  };

  double sae = 0, sse = 0;
  for (std::size_t i = 0; i < trues.size(); ++i) {
    const double e = trues[i] - preds[i];
    sae += std::abs(e);
    sse += e * e;
  }

  ScoreVector out;
  for (const auto& name : req.names) {
    if (name == "mae") {
      out.set(name, detail::ratio(sae, n));
    } else if (name == "mse") {
      out.set(name, detail::ratio(sse, n));
    } else if (name == "rmse") {
      auto mse = detail::ratio(sse, n);
      out.set(name, mse ? std::optional<double>(std::sqrt(*mse)) : std::nullopt);
    } else if (name == "mape") {
      double s = 0;
      std::size_t m = 0;
      for (std::size_t i = 0; i < trues.size(); ++i) {
        if (trues[i] == 0.0) continue;
        s += std::abs(trues[i] - preds[i]) / std::abs(trues[i]);
        ++m;
      }
      out.set(name, detail::ratio(s, static_cast<double>(m)));
    } else if (name == "nmse" || name == "nmae") {
      auto mu = train_mean();
      if (!mu) {
        out.set(name, std::nullopt);
        continue;
      }
      double den = 0;
      for (double y : trues) den += name == "nmse" ? (y - *mu) * (y - *mu) : std::abs(y - *mu);
      out.set(name, detail::ratio(name == "nmse" ? sse : sae, den));
    } else if (name == "theil") {
      if (!last_train_value) throw InvalidArgument("theil needs the last training target value");
      double den = 0;
      double prev = *last_train_value;
      for (double y : trues) {
        den += (y - prev) * (y - prev);
        prev = y;
      }
      auto r = detail::ratio(sse, den);
      out.set(name, r ? std::optional<double>(std::sqrt(*r)) : std::nullopt);
    } else {
      throw InvalidArgument("unknown regression metric '" + name + "'");
    }
  }
  return out;
}

/// trTime, tsTime and totTime in seconds.
inline ScoreVector time_metrics(const Timing& t, std::span<const std::string> names) {
  ScoreVector out;
  for (const auto& name : names) {
    if (name == "trTime") out.set(name, t.train);
    else if (name == "tsTime") out.set(name, t.test);
    else if (name == "totTime") out.set(name, t.train + t.test);
    else throw InvalidArgument("unknown time metric '" + name + "'");
  }
  return out;
}

/// What a user evaluator sees.
struct EvaluationInput {
  const Column& trues;
  const Predictions& preds;
  std::span<const std::string> metrics;
  std::optional<std::span<const double>> train_target;
  const Json& pars;
};

/// A user-supplied metric function together with the metric names it can
/// produce.
struct EvaluatorPlugin {
  std::vector<std::string> declared;
  std::function<ScoreVector(const EvaluationInput&)> fn;
};

/// Calls `plugin` and checks that it returned exactly the requested names.
inline ScoreVector run_evaluator(const EvaluatorPlugin& plugin, const Column& trues, const Predictions& preds,
                                 std::span<const std::string> names, std::optional<std::span<const double>> train_target,
                                 const Json& pars) {
  for (const auto& n : names) {
    if (!detail::contains(plugin.declared, n)) throw InvalidArgument("evaluator does not declare metric '" + n + "'");
  }
  if (!plugin.fn) throw InvalidArgument("evaluator has no function");
  auto scores = plugin.fn(EvaluationInput{trues, preds, names, train_target, pars});
  for (const auto& n : names) {
    if (!scores.has(n)) throw ContractViolation("evaluator did not return metric '" + n + "'");
  }
  for (const auto& n : scores.names()) {
    if (std::find(names.begin(), names.end(), n) == names.end())
      throw ContractViolation("evaluator returned unrequested metric '" + n + "'");
  }
  return scores.restrict_to(names);
}

}  // namespace perfest

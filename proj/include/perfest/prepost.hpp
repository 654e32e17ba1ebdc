#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "perfest/error.hpp"
#include "perfest/frame.hpp"
#include "perfest/learners.hpp"
#include "perfest/plugins.hpp"
#include "perfest/predictions.hpp"
#include "perfest/rng.hpp"

namespace perfest {

namespace detail {

inline std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

inline std::vector<std::size_t> predictor_columns(const DataFrame& d, const std::string& target) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < d.n_cols(); ++c)
    if (d.columns()[c].name() != target) cols.push_back(c);
  return cols;
}

inline const Column& target_column(const DataFrame& d, const std::string& target, const char* who) {
  if (!d.has(target)) throw InvalidArgument(std::string(who) + ": target '" + target + "' not found");
  const auto& t = d.column(target);
  if (!t.is_categorical()) throw InvalidArgument(std::string(who) + " only applies to classification tasks");
  return t;
}

// least frequent present class, ties to the lexicographically smallest label
inline std::int32_t minority_class(const Column& t) {
  std::vector<std::size_t> counts(t.categories().size(), 0);
  for (auto c : t.codes())
    if (c >= 0) ++counts[static_cast<std::size_t>(c)];
  std::optional<std::size_t> best;
  std::size_t present = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    ++present;
    if (!best || counts[c] < counts[*best] || (counts[c] == counts[*best] && t.categories()[c] < t.categories()[*best]))
      best = c;
  }
  if (present < 2) throw InvalidArgument("resampling needs at least two classes in the training data");
  return static_cast<std::int32_t>(*best);
}

inline double number_par(const Json& pars, const char* key, double fallback) {
  if (!pars.is_object() || !pars.contains(key)) return fallback;
  const auto& v = pars.at(key);
  if (!v.is_number()) throw InvalidArgument(std::string("parameter '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace detail

/// Standardises numeric predictors with training mean and sample standard
/// deviation. Constant columns are only centred.
inline PreResult pre_scale(const DataFrame& train, const DataFrame& test, const std::string& target) {
  DataFrame tr = train, ts = test;
  for (auto c : detail::predictor_columns(train, target)) {
    const auto& col = train.columns()[c];
    if (!col.is_numeric()) continue;
    double sum = 0;
    std::size_t n = 0;
    for (double v : col.numbers())
      if (!std::isnan(v)) sum += v, ++n;
    if (n == 0) continue;
    const double mu = sum / static_cast<double>(n);
    double ss = 0;
    for (double v : col.numbers())
      if (!std::isnan(v)) ss += (v - mu) * (v - mu);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    auto apply = [&](DataFrame& d) {
      auto& dc = d.column(col.name());
      for (std::size_t r = 0; r < dc.size(); ++r) {
        if (dc.is_missing(r)) continue;
        const double centred = dc.number(r) - mu;
        dc.set_number(r, sd > 0 ? centred / sd : centred);
      }
    };
    apply(tr);
    apply(ts);
  }
  return {std::move(tr), std::move(ts), detail::iota_rows(test.n_rows())};
}

/// Fills missing predictor cells with the training median (numeric) or mode
/// (categorical).
inline PreResult pre_central_imp(const DataFrame& train, const DataFrame& test, const std::string& target) {
  DataFrame tr = train, ts = test;
  for (auto c : detail::predictor_columns(train, target)) {
    const auto& col = train.columns()[c];
    if (col.size() > 0 && col.missing_count() == col.size())
      throw InvalidArgument("centralImp: predictor '" + col.name() + "' is entirely missing in the training data");
    if (col.is_numeric()) {
      const auto med = detail::median_of(std::vector<double>(col.numbers().begin(), col.numbers().end()));
      if (!med) continue;
      for (DataFrame* d : {&tr, &ts}) {
        auto& dc = d->column(col.name());
        for (std::size_t r = 0; r < dc.size(); ++r)
          if (dc.is_missing(r)) dc.set_number(r, *med);
      }
    } else {
      const auto mode = detail::mode_code(col.codes(), col.categories());
      if (!mode) continue;
      const auto& label = col.categories()[static_cast<std::size_t>(*mode)];
      for (DataFrame* d : {&tr, &ts}) {
        auto& dc = d->column(col.name());
        for (std::size_t r = 0; r < dc.size(); ++r)
          if (dc.is_missing(r)) dc.set_label(r, label);
      }
    }
  }
  return {std::move(tr), std::move(ts), detail::iota_rows(test.n_rows())};
}

/// Drops rows with a missing predictor cell from both frames.
inline PreResult pre_na_omit(const DataFrame& train, const DataFrame& test, const std::string& target) {
  auto keep = [&](const DataFrame& d) {
    std::vector<std::size_t> rows;
    const auto skip = d.find(target);
    for (std::size_t r = 0; r < d.n_rows(); ++r)
      if (!d.row_has_missing(r, skip)) rows.push_back(r);
    return rows;
  };
  const auto train_rows = keep(train);
  if (train_rows.empty()) throw InvalidArgument("naOmit removed every training row");
  auto test_rows = keep(test);
  return {train.select_rows(train_rows), test.select_rows(test_rows), std::move(test_rows)};
}

/// Keeps the minority class whole and samples every other class down to
/// round(perc_under * minority count) rows. Row order is preserved.
inline DataFrame pre_undersample(const DataFrame& train, const std::string& target, double perc_under, Rng& rng) {
  if (!(perc_under > 0)) throw InvalidArgument("undersampl: perc.under must be positive");
  const auto& t = detail::target_column(train, target, "undersampl");
  const auto minority = detail::minority_class(t);
  std::vector<std::vector<std::size_t>> members(t.categories().size());
  for (std::size_t r = 0; r < t.size(); ++r)
    if (t.code(r) >= 0) members[static_cast<std::size_t>(t.code(r))].push_back(r);
  const auto n_min = members[static_cast<std::size_t>(minority)].size();
  const auto quota = static_cast<std::size_t>(std::llround(perc_under * static_cast<double>(n_min)));
  std::vector<std::size_t> rows;
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& m = members[c];
    if (static_cast<std::int32_t>(c) == minority || m.size() <= quota) {
      rows.insert(rows.end(), m.begin(), m.end());
      continue;
    }
    for (auto pick : rng.sample_without_replacement(m.size(), quota)) rows.push_back(m[pick]);
  }
  std::sort(rows.begin(), rows.end());
  return train.select_rows(rows);
}

struct SmoteParams {
  double perc_over = 200;
  double perc_under = 200;
  int k = 5;
};

/// SMOTE: floor(perc_over/100) synthetic cases per minority case, each
/// interpolated towards one of its k nearest minority neighbours, plus
/// floor(perc_under/100 * synthetic count) sampled non-minority rows.
///
/// Output rows: original minority and sampled majority rows in original
/// order, then the synthetic rows.
inline DataFrame pre_smote(const DataFrame& train, const std::string& target, const SmoteParams& p, Rng& rng) {
  if (p.k < 1) throw InvalidArgument("smote: k must be at least 1");
  if (p.perc_over < 0 || p.perc_under < 0) throw InvalidArgument("smote: percentages must be non-negative");
  const auto& t = detail::target_column(train, target, "smote");
  const auto minority = detail::minority_class(t);
  std::vector<std::size_t> min_rows, other_rows;
  for (std::size_t r = 0; r < t.size(); ++r) (t.code(r) == minority ? min_rows : other_rows).push_back(r);
  if (min_rows.size() < 2) throw InvalidArgument("smote: the minority class has a single case, so it has no neighbours");

  const auto preds = detail::predictor_columns(train, target);
  for (auto c : preds)
    for (auto r : min_rows)
      if (train.columns()[c].is_missing(r))
        throw InvalidArgument("smote: predictor '" + train.columns()[c].name() + "' has missing values");

  // distances: numeric predictors scaled by their range over minority cases,
  // categorical mismatches count 1
  std::vector<double> range(preds.size(), 1.0);
  for (std::size_t j = 0; j < preds.size(); ++j) {
    const auto& col = train.columns()[preds[j]];
    if (!col.is_numeric()) continue;
    double lo = col.number(min_rows[0]), hi = lo;
    for (auto r : min_rows) lo = std::min(lo, col.number(r)), hi = std::max(hi, col.number(r));
    range[j] = hi > lo ? hi - lo : 1.0;
  }
  auto distance = [&](std::size_t a, std::size_t b) {
    double d = 0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      const auto& col = train.columns()[preds[j]];
      if (col.is_numeric()) {
        const double z = (col.number(a) - col.number(b)) / range[j];
        d += z * z;
      } else {
        d += col.code(a) == col.code(b) ? 0.0 : 1.0;
      }
    }
    return d;
  };

  const auto per_case = static_cast<std::size_t>(std::floor(p.perc_over / 100.0));
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(p.k), min_rows.size() - 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (case, neighbour)
  std::vector<std::pair<double, std::size_t>> dist;
  for (auto a : min_rows) {
    if (per_case == 0) break;
    dist.clear();
    for (auto b : min_rows)
      if (b != a) dist.emplace_back(distance(a, b), b);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t s = 0; s < per_case; ++s) pairs.emplace_back(a, dist[rng.below(k)].second);
  }

  std::vector<Column> cols;
  for (const auto& col : train.columns()) {
    std::vector<std::size_t> base(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) base[i] = pairs[i].first;
    cols.push_back(col.select(base));
  }
  DataFrame synth(std::move(cols), train.name());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [a, b] = pairs[i];
    for (auto c : preds) {
      const auto& src = train.columns()[c];
      auto& dst = synth.column(src.name());
      if (src.is_numeric()) {
        const double gap = rng.unit();
        dst.set_number(i, src.number(a) + gap * (src.number(b) - src.number(a)));
      } else {
        dst.set_code(i, rng.below(2) == 0 ? src.code(a) : src.code(b));
      }
    }
  }

  const auto n_major = std::min(other_rows.size(),
                                static_cast<std::size_t>(std::floor(p.perc_under / 100.0 * static_cast<double>(pairs.size()))));
  std::vector<std::size_t> keep = min_rows;
  for (auto pick : rng.sample_without_replacement(other_rows.size(), n_major)) keep.push_back(other_rows[pick]);
  std::sort(keep.begin(), keep.end());
  return train.select_rows(keep).concat(synth, detail::iota_rows(synth.n_rows()));
}

/// Replaces missing predictions by the training median (numeric) or mode.
inline Predictions post_na2central(Predictions preds, const Column& train_target) {
  if (preds.shape == PredShape::probabilities) throw InvalidArgument("na2central does not apply to probability predictions");
  if (preds.shape == PredShape::numeric) {
    if (!train_target.is_numeric()) throw InvalidArgument("na2central: numeric predictions need a numeric target");
    const auto med = detail::median_of(std::vector<double>(train_target.numbers().begin(), train_target.numbers().end()));
    for (auto& v : preds.numbers)
      if (std::isnan(v) && med) v = *med;
    return preds;
  }
  if (!train_target.is_categorical()) throw InvalidArgument("na2central: label predictions need a categorical target");
  const auto mode = detail::mode_code(train_target.codes(), train_target.categories());
  if (!mode) return preds;
  const auto& label = train_target.categories()[static_cast<std::size_t>(*mode)];
  auto it = std::find(preds.class_order.begin(), preds.class_order.end(), label);
  if (it == preds.class_order.end()) throw InvalidArgument("na2central: training mode is not a predicted class");
  const auto code = static_cast<std::int32_t>(it - preds.class_order.begin());
  for (auto& c : preds.labels)
    if (c < 0) c = code;
  return preds;
}

/// Negative numeric predictions become zero.
inline Predictions post_only_pos(Predictions preds) {
  if (preds.shape != PredShape::numeric) throw InvalidArgument("onlyPos needs numeric predictions");
  for (auto& v : preds.numbers)
    if (v < 0) v = 0;
  return preds;
}

/// Clamps numeric predictions into [inf_lim, sup_lim].
inline Predictions post_cast2int(Predictions preds, double inf_lim, double sup_lim) {
  if (preds.shape != PredShape::numeric) throw InvalidArgument("cast2int needs numeric predictions");
  if (inf_lim > sup_lim) throw InvalidArgument("cast2int needs infLim <= supLim");
  for (auto& v : preds.numbers)
    if (!std::isnan(v)) v = std::clamp(v, inf_lim, sup_lim);
  return preds;
}

/// Picks, per row, the class j maximising sum_i p_i * cb[i][j]; ties go to
/// the lowest index.
inline Predictions post_maxutil(const Predictions& preds, const CostBenefitMatrix& cb) {
  if (preds.shape != PredShape::probabilities) throw InvalidArgument("maxutil needs class probability predictions");
  cb.validate();
  if (cb.class_order != preds.class_order) throw InvalidArgument("maxutil: cost-benefit classes do not match the predictions");
  const auto k = preds.n_classes();
  std::vector<std::int32_t> codes;
  codes.reserve(preds.size());
  std::vector<double> util(k);
  for (std::size_t r = 0; r < preds.size(); ++r) {
    auto p = preds.prob_row(r);
    for (std::size_t j = 0; j < k; ++j) {
      util[j] = 0;
      for (std::size_t i = 0; i < k; ++i) util[j] += p[i] * cb.entries[i][j];
    }
    codes.push_back(static_cast<std::int32_t>(argmax(util)));
  }
  return Predictions::of_labels(std::move(codes), preds.class_order);
}

namespace detail {

// Step parameters: a nested object under the step's own name wins over the
// flat parameter map shared by the chain.
inline const Json& step_pars(const Json& pars, const std::string& step) {
  static const Json empty = Json::object();
  if (!pars.is_object()) return empty;
  if (auto it = pars.find(step); it != pars.end() && it->is_object()) return *it;
  return pars;
}

inline std::string canonical_step(std::string name) {
  if (name == "na.omit") return "naOmit";
  return name;
}

}  // namespace detail

inline const std::vector<std::string>& builtin_pre_steps() {
  static const std::vector<std::string> names{"scale", "centralImp", "naOmit", "undersampl", "smote"};
  return names;
}
inline const std::vector<std::string>& builtin_post_steps() {
  static const std::vector<std::string> names{"na2central", "onlyPos", "cast2int", "maxutil"};
  return names;
}

inline bool is_known_pre_step(const std::string& name, const Registry& registry) {
  const auto c = detail::canonical_step(name);
  return std::find(builtin_pre_steps().begin(), builtin_pre_steps().end(), c) != builtin_pre_steps().end() ||
         registry.pre_step(name) != nullptr;
}
inline bool is_known_post_step(const std::string& name, const Registry& registry) {
  return std::find(builtin_post_steps().begin(), builtin_post_steps().end(), name) != builtin_post_steps().end() ||
         registry.post_step(name) != nullptr;
}

/// Applies one pre-processing step by name.
inline PreResult apply_pre_step(const std::string& name, const DataFrame& train, const DataFrame& test,
                                const std::string& target, const Json& chain_pars, Rng& rng, const Registry& registry) {
  const auto step = detail::canonical_step(name);
  const auto& pars = detail::step_pars(chain_pars, name);
  if (step == "scale") return pre_scale(train, test, target);
  if (step == "centralImp") return pre_central_imp(train, test, target);
  if (step == "naOmit") return pre_na_omit(train, test, target);
  if (step == "undersampl") {
    return {pre_undersample(train, target, detail::number_par(pars, "perc.under", 1.0), rng), test,
            detail::iota_rows(test.n_rows())};
  }
  if (step == "smote") {
    SmoteParams p;
    p.perc_over = detail::number_par(pars, "perc.over", p.perc_over);
    p.perc_under = detail::number_par(pars, "perc.under", p.perc_under);
    p.k = static_cast<int>(detail::number_par(pars, "k", p.k));
    return {pre_smote(train, target, p, rng), test, detail::iota_rows(test.n_rows())};
  }
  if (const auto* fn = registry.pre_step(name)) {
    auto out = (*fn)(train, test, target, pars, rng);
    if (out.test_rows.size() != out.test.n_rows())
      throw ContractViolation("pre-processing step '" + name + "' returned inconsistent test row identities");
    for (auto r : out.test_rows)
      if (r >= test.n_rows()) throw ContractViolation("pre-processing step '" + name + "' returned an unknown test row");
    return out;
  }
  throw InvalidArgument("unknown pre-processing step '" + name + "'");
}

/// Runs a pre-processing chain, composing test-row identities.
inline PreResult run_pre_chain(const std::vector<std::string>& steps, const Json& pars, const DataFrame& train,
                               const DataFrame& test, const std::string& target, Rng& rng, const Registry& registry) {
  PreResult cur{train, test, detail::iota_rows(test.n_rows())};
  for (const auto& name : steps) {
    auto next = apply_pre_step(name, cur.train, cur.test, target, pars, rng, registry);
    std::vector<std::size_t> rows;
    rows.reserve(next.test_rows.size());
    for (auto r : next.test_rows) rows.push_back(cur.test_rows[r]);
    cur = PreResult{std::move(next.train), std::move(next.test), std::move(rows)};
  }
  return cur;
}

/// Applies one post-processing step by name.
inline Predictions apply_post_step(const std::string& name, Predictions preds, const Column& train_target,
                                   const Json& chain_pars, const Registry& registry) {
  const auto& pars = detail::step_pars(chain_pars, name);
  const auto n = preds.size();
  Predictions out;
  if (name == "na2central") {
    out = post_na2central(std::move(preds), train_target);
  } else if (name == "onlyPos") {
    out = post_only_pos(std::move(preds));
  } else if (name == "cast2int") {
    if (!pars.contains("infLim") || !pars.contains("supLim")) throw InvalidArgument("cast2int needs infLim and supLim");
    out = post_cast2int(std::move(preds), detail::number_par(pars, "infLim", 0), detail::number_par(pars, "supLim", 0));
  } else if (name == "maxutil") {
    if (!pars.contains("cb.matrix")) throw InvalidArgument("maxutil needs the cb.matrix parameter");
    auto cb = CostBenefitMatrix::from_json(pars.at("cb.matrix"), preds.class_order);
    out = post_maxutil(preds, cb);
  } else if (const auto* fn = registry.post_step(name)) {
    out = (*fn)(std::move(preds), PostContext{train_target, pars});
    out.validate();
  } else {
    throw InvalidArgument("unknown post-processing step '" + name + "'");
  }
  if (out.size() != n) throw ContractViolation("post-processing step '" + name + "' changed the prediction count");
  return out;
}

inline Predictions run_post_chain(const std::vector<std::string>& steps, const Json& pars, Predictions preds,
                                  const Column& train_target, const Registry& registry) {
  for (const auto& name : steps) preds = apply_post_step(name, std::move(preds), train_target, pars, registry);
  return preds;
}

}  // namespace perfest

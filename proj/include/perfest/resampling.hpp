#pragma once

// Seeded train/test split plans for the five estimation methodologies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "perfest/error.hpp"
#include "perfest/rng.hpp"

namespace perfest {

using IndexList = std::vector<std::size_t>;

struct Split {
  IndexList train;
  IndexList test;
  friend bool operator==(const Split&, const Split&) = default;
};

struct SplitPlan {
  std::vector<Split> iterations;
  std::int64_t seed = 1234;
  std::string method;
  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

struct CvSettings {
  int n_reps = 1;
  int n_folds = 10;
  std::int64_t seed = 1234;
  bool strat = false;
  std::optional<SplitPlan> data_splits;
};

struct HoldoutSettings {
  int n_reps = 1;
  double hld_sz = 0.3;
  std::int64_t seed = 1234;
  bool strat = false;
  std::optional<SplitPlan> data_splits;
};

enum class BootstrapType { e0, dot632 };

struct BootstrapSettings {
  BootstrapType type = BootstrapType::e0;
  int n_reps = 200;
  std::int64_t seed = 1234;
  std::optional<SplitPlan> data_splits;
};

struct LoocvSettings {
  std::int64_t seed = 1234;
  std::optional<SplitPlan> data_splits;
};

/// Sizes below 1 are fractions of the data set size, otherwise row counts.
struct MonteCarloSettings {
  int n_reps = 10;
  double sz_train = 0.25;
  double sz_test = 0.25;
  std::int64_t seed = 1234;
  std::optional<SplitPlan> data_splits;
};

using EstimationMethod = std::variant<CvSettings, HoldoutSettings, BootstrapSettings, LoocvSettings, MonteCarloSettings>;

enum class MethodKind { cv, holdout, bootstrap, loocv, monte_carlo };

inline MethodKind kind_of(const EstimationMethod& m) { return static_cast<MethodKind>(m.index()); }

inline std::int64_t seed_of(const EstimationMethod& m) {
  return std::visit([](const auto& s) { return s.seed; }, m);
}

inline const std::optional<SplitPlan>& user_splits_of(const EstimationMethod& m) {
  return std::visit([](const auto& s) -> const std::optional<SplitPlan>& { return s.data_splits; }, m);
}

namespace detail {

inline std::string trim_number(double v) {
  std::string s = std::to_string(v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

// stream tags keep the generators of different methods apart
enum : std::uint64_t { kTagCv = 1, kTagHoldout = 2, kTagBootstrap = 3, kTagMonteCarlo = 5 };

}  // namespace detail

/// Human-readable description, e.g. "1 x 10 - Fold Cross Validation".
inline std::string method_descriptor(const EstimationMethod& method) {
  struct V {
    std::string operator()(const CvSettings& s) const {
      return std::to_string(s.n_reps) + " x " + std::to_string(s.n_folds) + " - Fold " +
             (s.strat ? "Stratified " : "") + "Cross Validation";
    }
    std::string operator()(const HoldoutSettings& s) const {
      const auto pct = static_cast<int>(std::lround(s.hld_sz * 100));
      return std::to_string(s.n_reps) + " x " + std::to_string(100 - pct) + "%/" + std::to_string(pct) + "% " +
             (s.strat ? "Stratified " : "") + "Holdout";
    }
    std::string operator()(const BootstrapSettings& s) const {
      return std::to_string(s.n_reps) + " repetitions of " + (s.type == BootstrapType::e0 ? "e0" : ".632") +
             " Bootstrap";
    }
    std::string operator()(const LoocvSettings&) const { return "Leave One Out Cross Validation"; }
    std::string operator()(const MonteCarloSettings& s) const {
      return std::to_string(s.n_reps) + " repetitions Monte Carlo Simulation (szTrain=" + detail::trim_number(s.sz_train) +
             ", szTest=" + detail::trim_number(s.sz_test) + ")";
    }
  };
  return std::visit(V{}, method);
}

inline std::string method_title(const EstimationMethod& method) {
  switch (kind_of(method)) {
    case MethodKind::cv: return "CROSS VALIDATION";
    case MethodKind::holdout: return "HOLD OUT";
    case MethodKind::bootstrap: return "BOOTSTRAP";
    case MethodKind::loocv: return "LOOCV";
    case MethodKind::monte_carlo: return "MONTE CARLO";
  }
  return "";
}

/// Number of iterations the method produces on `n` rows.
inline std::size_t iteration_count(const EstimationMethod& method, std::size_t n) {
  if (const auto& user = user_splits_of(method)) return user->iterations.size();
  switch (kind_of(method)) {
    case MethodKind::cv: {
      const auto& s = std::get<CvSettings>(method);
      return static_cast<std::size_t>(s.n_reps) * static_cast<std::size_t>(s.n_folds);
    }
    case MethodKind::holdout: return static_cast<std::size_t>(std::get<HoldoutSettings>(method).n_reps);
    case MethodKind::bootstrap: return static_cast<std::size_t>(std::get<BootstrapSettings>(method).n_reps);
    case MethodKind::loocv: return n;
    case MethodKind::monte_carlo: return static_cast<std::size_t>(std::get<MonteCarloSettings>(method).n_reps);
  }
  return 0;
}

/// Checks a plan against the invariants of its methodology.
inline void validate_plan(const SplitPlan& plan, std::size_t n, MethodKind kind) {
  auto fail = [&](std::size_t it, const std::string& what) {
    throw InvalidArgument("split plan iteration " + std::to_string(it + 1) + ": " + what);
  };
  for (std::size_t it = 0; it < plan.iterations.size(); ++it) {
    const auto& s = plan.iterations[it];
    if (s.train.empty()) fail(it, "empty training set");
    if (s.test.empty()) fail(it, "empty test set");
    for (auto i : s.train)
      if (i >= n) fail(it, "train index " + std::to_string(i) + " out of range");
    for (auto i : s.test)
      if (i >= n) fail(it, "test index " + std::to_string(i) + " out of range");
    std::set<std::size_t> train_set(s.train.begin(), s.train.end());
    switch (kind) {
      case MethodKind::cv:
      case MethodKind::loocv:
      case MethodKind::holdout: {
        if (train_set.size() != s.train.size()) fail(it, "duplicate training index");
        for (auto i : s.test)
          if (train_set.count(i)) fail(it, "index " + std::to_string(i) + " in both train and test");
        break;
      }
      case MethodKind::bootstrap: {
        IndexList oob;
        for (std::size_t i = 0; i < n; ++i)
          if (!train_set.count(i)) oob.push_back(i);
        if (oob != s.test) fail(it, "test set is not the out-of-bag complement of the training draws");
        break;
      }
      case MethodKind::monte_carlo: {
        auto contiguous = [](const IndexList& v) {
          for (std::size_t k = 1; k < v.size(); ++k)
            if (v[k] != v[k - 1] + 1) return false;
          return true;
        };
        if (!contiguous(s.train) || !contiguous(s.test)) fail(it, "Monte Carlo windows must be contiguous");
        if (s.train.back() >= s.test.front()) fail(it, "training window must precede the test window");
        break;
      }
    }
  }
}

/// Equal-frequency bin labels for stratifying a numeric target.
inline std::vector<std::int32_t> equal_frequency_bins(std::span<const double> values, int n_bins) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<std::int32_t> bins(n, 0);
  if (n_bins < 1) n_bins = 1;
  for (std::size_t r = 0; r < n; ++r)
    bins[order[r]] = static_cast<std::int32_t>((r * static_cast<std::size_t>(n_bins)) / std::max<std::size_t>(n, 1));
  return bins;
}

namespace detail {

inline std::vector<IndexList> members_by_class(std::span<const std::int32_t> labels) {
  std::int32_t k = 0;
  for (auto l : labels) {
    if (l < 0) throw InvalidArgument("stratification labels must not be missing");
    k = std::max(k, l + 1);
  }
  std::vector<IndexList> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);
  return members;
}

inline IndexList complement(std::size_t n, const IndexList& sorted_subset) {
  IndexList out;
  out.reserve(n - sorted_subset.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j < sorted_subset.size() && sorted_subset[j] == i)
      ++j;
    else
      out.push_back(i);
  }
  return out;
}

inline SplitPlan from_user(const SplitPlan& user, std::size_t n, MethodKind kind, std::int64_t seed,
                           std::string descriptor) {
  validate_plan(user, n, kind);
  SplitPlan plan = user;
  plan.seed = seed;
  if (plan.method.empty()) plan.method = std::move(descriptor);
  return plan;
}

}  // namespace detail

/// k-fold cross validation, optionally stratified by `labels`.
inline SplitPlan cv_splits(std::size_t n, std::span<const std::int32_t> labels, const CvSettings& cfg) {
  const EstimationMethod m{cfg};
  if (cfg.data_splits) return detail::from_user(*cfg.data_splits, n, MethodKind::cv, cfg.seed, method_descriptor(m));
  if (cfg.n_folds < 2) throw InvalidArgument("nFolds must be at least 2");
  if (cfg.n_reps < 1) throw InvalidArgument("nReps must be at least 1");
  const auto k = static_cast<std::size_t>(cfg.n_folds);
  if (n < k) throw InvalidArgument("cannot make " + std::to_string(k) + " folds from " + std::to_string(n) + " rows");
  if (cfg.strat && labels.empty()) throw InvalidArgument("stratified CV requires class labels");
  if (cfg.strat && labels.size() != n) throw InvalidArgument("label count does not match row count");

  SplitPlan plan{.iterations = {}, .seed = cfg.seed, .method = method_descriptor(m)};
  for (int rep = 0; rep < cfg.n_reps; ++rep) {
    Rng rng(cfg.seed, {detail::kTagCv, static_cast<std::uint64_t>(rep)});
    std::vector<std::size_t> fold_of(n);
    if (cfg.strat) {
      // each class dealt round-robin; the counter runs on across classes so
      // overall fold sizes also stay within one of each other
      std::size_t counter = 0;
      for (auto& members : detail::members_by_class(labels)) {
        rng.shuffle(members);
        for (auto i : members) fold_of[i] = counter++ % k;
      }
    } else {
      IndexList order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = pos % k;
    }
    for (std::size_t f = 0; f < k; ++f) {
      Split s;
      for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? s.test : s.train).push_back(i);
      plan.iterations.push_back(std::move(s));
    }
  }
  return plan;
}

/// Holdout / random sub-sampling. Test size is round(n * hldSz); stratified
/// plans allocate it across classes by largest remainder.
inline SplitPlan holdout_splits(std::size_t n, std::span<const std::int32_t> labels, const HoldoutSettings& cfg) {
  const EstimationMethod m{cfg};
  if (cfg.data_splits)
    return detail::from_user(*cfg.data_splits, n, MethodKind::holdout, cfg.seed, method_descriptor(m));
  if (!(cfg.hld_sz > 0.0 && cfg.hld_sz < 1.0)) throw InvalidArgument("hldSz must lie in (0, 1)");
  if (cfg.n_reps < 1) throw InvalidArgument("nReps must be at least 1");
  if (n < 2) throw InvalidArgument("holdout needs at least 2 rows");
  if (std::floor(static_cast<double>(n) * cfg.hld_sz) < 1.0) throw InvalidArgument("holdout set would be empty");
  const auto m_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.hld_sz));
  if (m_test >= n) throw InvalidArgument("holdout leaves no training rows");
  if (cfg.strat && labels.empty()) throw InvalidArgument("stratified holdout requires class labels");
  if (cfg.strat && labels.size() != n) throw InvalidArgument("label count does not match row count");

  SplitPlan plan{.iterations = {}, .seed = cfg.seed, .method = method_descriptor(m)};
  for (int rep = 0; rep < cfg.n_reps; ++rep) {
    Rng rng(cfg.seed, {detail::kTagHoldout, static_cast<std::uint64_t>(rep)});
    IndexList test;
    if (cfg.strat) {
      auto members = detail::members_by_class(labels);
      std::vector<std::size_t> alloc(members.size());
      std::vector<std::pair<double, std::size_t>> remainders;
      std::size_t given = 0;
      for (std::size_t c = 0; c < members.size(); ++c) {
        const double exact = static_cast<double>(members[c].size()) * cfg.hld_sz;
        alloc[c] = static_cast<std::size_t>(std::floor(exact));
        given += alloc[c];
        remainders.emplace_back(exact - std::floor(exact), c);
      }
      std::stable_sort(remainders.begin(), remainders.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t r = 0; given < m_test && r < remainders.size(); ++r) {
        const auto c = remainders[r].second;
        if (alloc[c] < members[c].size()) ++alloc[c], ++given;
      }
      for (std::size_t c = 0; c < members.size(); ++c) {
        rng.shuffle(members[c]);
        test.insert(test.end(), members[c].begin(), members[c].begin() + static_cast<std::ptrdiff_t>(alloc[c]));
      }
    } else {
      test = rng.sample_without_replacement(n, m_test);
    }
    std::sort(test.begin(), test.end());
    plan.iterations.push_back(Split{detail::complement(n, test), std::move(test)});
  }
  return plan;
}

/// Bootstrap resamples: n draws with replacement for training, out-of-bag
/// rows (ascending) for testing. Draws with an empty out-of-bag set are
/// repeated, at most 100 times per repetition.
inline SplitPlan bootstrap_splits(std::size_t n, const BootstrapSettings& cfg) {
  const EstimationMethod m{cfg};
  if (cfg.data_splits)
    return detail::from_user(*cfg.data_splits, n, MethodKind::bootstrap, cfg.seed, method_descriptor(m));
  if (n < 2) throw InvalidArgument("bootstrap needs at least 2 rows");
  if (cfg.n_reps < 1) throw InvalidArgument("nReps must be at least 1");
  constexpr int kMaxAttempts = 100;

  SplitPlan plan{.iterations = {}, .seed = cfg.seed, .method = method_descriptor(m)};
  for (int rep = 0; rep < cfg.n_reps; ++rep) {
    Rng rng(cfg.seed, {detail::kTagBootstrap, static_cast<std::uint64_t>(rep)});
    bool done = false;
    for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
      Split s;
      std::vector<char> drawn(n, 0);
      s.train.reserve(n);
      for (std::size_t d = 0; d < n; ++d) {
        const auto i = static_cast<std::size_t>(rng.below(n));
        s.train.push_back(i);
        drawn[i] = 1;
      }
      for (std::size_t i = 0; i < n; ++i)
        if (!drawn[i]) s.test.push_back(i);
      if (!s.test.empty()) {
        plan.iterations.push_back(std::move(s));
        done = true;
      }
    }
    if (!done) throw Error("bootstrap repetition " + std::to_string(rep + 1) + " kept drawing empty out-of-bag sets");
  }
  return plan;
}

/// Leave-one-out: iteration i tests row i.
inline SplitPlan loocv_splits(std::size_t n, const LoocvSettings& cfg) {
  const EstimationMethod m{cfg};
  if (cfg.data_splits)
    return detail::from_user(*cfg.data_splits, n, MethodKind::loocv, cfg.seed, method_descriptor(m));
  if (n < 2) throw InvalidArgument("LOOCV needs at least 2 rows");
  SplitPlan plan{.iterations = {}, .seed = cfg.seed, .method = method_descriptor(m)};
  plan.iterations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Split s;
    s.test = {i};
    s.train.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) s.train.push_back(j);
    plan.iterations.push_back(std::move(s));
  }
  return plan;
}

/// Resolves a Monte Carlo window size: fractions use floor(frac * n).
inline std::size_t resolve_window(double size, std::size_t n, const char* what) {
  if (!(size > 0.0)) throw InvalidArgument(std::string(what) + " must be positive");
  if (size < 1.0) return static_cast<std::size_t>(std::floor(size * static_cast<double>(n)));
  if (size != std::floor(size)) throw InvalidArgument(std::string(what) + " must be a fraction below 1 or a row count");
  return static_cast<std::size_t>(size);
}

/// Time-ordered Monte Carlo windows around distinct random anchors.
///
/// An anchor a is the first test row; training covers [a - w_train, a) and
/// testing [a, a + w_test). Anchors are drawn without replacement from
/// [w_train, n - w_test] and iterations are sorted by anchor.
inline SplitPlan monte_carlo_splits(std::size_t n, const MonteCarloSettings& cfg) {
  const EstimationMethod m{cfg};
  if (cfg.data_splits)
    return detail::from_user(*cfg.data_splits, n, MethodKind::monte_carlo, cfg.seed, method_descriptor(m));
  if (cfg.n_reps < 1) throw InvalidArgument("nReps must be at least 1");
  const auto w_train = resolve_window(cfg.sz_train, n, "szTrain");
  const auto w_test = resolve_window(cfg.sz_test, n, "szTest");
  if (w_train == 0 || w_test == 0) throw InvalidArgument("Monte Carlo windows resolve to zero rows");
  if (w_train + w_test >= n)
    throw InvalidArgument("Monte Carlo windows too large: w_train + w_test = " + std::to_string(w_train + w_test) +
                          " must be below " + std::to_string(n));
  const std::size_t admissible = n - w_test - w_train + 1;
  const auto reps = static_cast<std::size_t>(cfg.n_reps);
  if (admissible < reps)
    throw InvalidArgument("only " + std::to_string(admissible) + " admissible Monte Carlo anchors for " +
                          std::to_string(reps) + " repetitions");

  Rng rng(cfg.seed, {detail::kTagMonteCarlo});
  auto picks = rng.sample_without_replacement(admissible, reps);
  std::sort(picks.begin(), picks.end());
  SplitPlan plan{.iterations = {}, .seed = cfg.seed, .method = method_descriptor(m)};
  for (auto p : picks) {
    const auto anchor = w_train + p;
    Split s;
    s.train.resize(w_train);
    std::iota(s.train.begin(), s.train.end(), anchor - w_train);
    s.test.resize(w_test);
    std::iota(s.test.begin(), s.test.end(), anchor);
    plan.iterations.push_back(std::move(s));
  }
  return plan;
}

/// Dispatches on the method. `labels` are only consulted by stratified methods.
inline SplitPlan make_splits(const EstimationMethod& method, std::size_t n, std::span<const std::int32_t> labels = {}) {
  struct V {
    std::size_t n;
    std::span<const std::int32_t> labels;
    SplitPlan operator()(const CvSettings& s) const { return cv_splits(n, labels, s); }
    SplitPlan operator()(const HoldoutSettings& s) const { return holdout_splits(n, labels, s); }
    SplitPlan operator()(const BootstrapSettings& s) const { return bootstrap_splits(n, s); }
    SplitPlan operator()(const LoocvSettings& s) const { return loocv_splits(n, s); }
    SplitPlan operator()(const MonteCarloSettings& s) const { return monte_carlo_splits(n, s); }
  };
  return std::visit(V{n, labels}, method);
}

/// 64-bit FNV-1a digest of every index list in the plan.
inline std::uint64_t plan_fingerprint(const SplitPlan& plan) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : plan.iterations) {
    feed(s.train.size());
    for (auto i : s.train) feed(i);
    feed(s.test.size());
    for (auto i : s.test) feed(i);
  }
  return h;
}

// JSON: {"seed": .., "method": "..", "iterations": [{"train": [..], "test": [..]}, ..]}
inline void to_json(nlohmann::ordered_json& j, const SplitPlan& plan) {
  j = nlohmann::ordered_json{{"seed", plan.seed}, {"method", plan.method}, {"iterations", nlohmann::ordered_json::array()}};
  for (const auto& s : plan.iterations) j["iterations"].push_back({{"train", s.train}, {"test", s.test}});
}

inline void from_json(const nlohmann::ordered_json& j, SplitPlan& plan) {
  try {
    plan.seed = j.value("seed", std::int64_t{1234});
    plan.method = j.value("method", std::string{});
    plan.iterations.clear();
    for (const auto& it : j.at("iterations")) {
      plan.iterations.push_back(Split{it.at("train").get<IndexList>(), it.at("test").get<IndexList>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed split plan: ") + e.what());
  }
}


/// Method settings as JSON with the conventional parameter names, e.g.
/// {"method": "CV", "nReps": 3, "nFolds": 10, "seed": 1234, "strat": false}.
inline nlohmann::ordered_json method_to_json(const EstimationMethod& method) {
  using J = nlohmann::ordered_json;
  struct V {
    J operator()(const CvSettings& s) const {
      return J{{"method", "CV"}, {"nReps", s.n_reps}, {"nFolds", s.n_folds}, {"seed", s.seed}, {"strat", s.strat}};
    }
    J operator()(const HoldoutSettings& s) const {
      return J{{"method", "Holdout"}, {"nReps", s.n_reps}, {"hldSz", s.hld_sz}, {"seed", s.seed}, {"strat", s.strat}};
    }
    J operator()(const BootstrapSettings& s) const {
      return J{{"method", "Bootstrap"}, {"type", s.type == BootstrapType::e0 ? "e0" : ".632"}, {"nReps", s.n_reps},
               {"seed", s.seed}};
    }
    J operator()(const LoocvSettings& s) const { return J{{"method", "LOOCV"}, {"seed", s.seed}}; }
    J operator()(const MonteCarloSettings& s) const {
      return J{{"method", "MonteCarlo"}, {"nReps", s.n_reps}, {"szTrain", s.sz_train}, {"szTest", s.sz_test},
               {"seed", s.seed}};
    }
  };
  J j = std::visit(V{}, method);
  if (const auto& user = user_splits_of(method)) j["dataSplits"] = *user;
  return j;
}

inline EstimationMethod method_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw InvalidArgument("estimation method must be an object");
  static const std::vector<std::string> known{"method", "nReps", "nFolds", "seed", "strat", "hldSz",
                                              "type",   "szTrain", "szTest", "dataSplits"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidArgument("unknown estimation parameter '" + key + "'");
  }
  const auto name = j.value("method", std::string("CV"));
  try {
    std::optional<SplitPlan> splits;
    if (j.contains("dataSplits")) splits = j.at("dataSplits").get<SplitPlan>();
    auto common = [&](auto& s) {
      s.seed = j.value("seed", s.seed);
      s.data_splits = splits;
    };
    if (name == "CV") {
      CvSettings s;
      s.n_reps = j.value("nReps", s.n_reps);
      s.n_folds = j.value("nFolds", s.n_folds);
      s.strat = j.value("strat", s.strat);
      common(s);
      if (s.n_folds < 2) throw InvalidArgument("nFolds must be >= 2");
      if (s.n_reps < 1) throw InvalidArgument("nReps must be >= 1");
      return s;
    }
    if (name == "Holdout") {
      HoldoutSettings s;
      s.n_reps = j.value("nReps", s.n_reps);
      s.hld_sz = j.value("hldSz", s.hld_sz);
      s.strat = j.value("strat", s.strat);
      common(s);
      if (!(s.hld_sz > 0 && s.hld_sz < 1)) throw InvalidArgument("hldSz must lie in (0,1)");
      if (s.n_reps < 1) throw InvalidArgument("nReps must be >= 1");
      return s;
    }
    if (name == "Bootstrap") {
      BootstrapSettings s;
      const auto type = j.value("type", std::string("e0"));
      if (type == "e0") s.type = BootstrapType::e0;
      else if (type == ".632") s.type = BootstrapType::dot632;
      else throw InvalidArgument("bootstrap type must be \"e0\" or \".632\"");
      s.n_reps = j.value("nReps", s.n_reps);
      common(s);
      if (s.n_reps < 1) throw InvalidArgument("nReps must be >= 1");
      return s;
    }
    if (name == "LOOCV") {
      LoocvSettings s;
      common(s);
      return s;
    }
    if (name == "MonteCarlo") {
      MonteCarloSettings s;
      s.n_reps = j.value("nReps", s.n_reps);
      s.sz_train = j.value("szTrain", s.sz_train);
      s.sz_test = j.value("szTest", s.sz_test);
      common(s);
      if (s.n_reps < 1) throw InvalidArgument("nReps must be >= 1");
      if (!(s.sz_train > 0) || !(s.sz_test > 0)) throw InvalidArgument("szTrain and szTest must be positive");
      return s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad estimation parameter: ") + e.what());
  }
  throw InvalidArgument("unknown estimation method '" + name + "' (expected CV, Holdout, Bootstrap, LOOCV, MonteCarlo)");
}

}  // namespace perfest

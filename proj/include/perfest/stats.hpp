#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "perfest/analysis.hpp"
#include "perfest/distributions.hpp"
#include "perfest/engine.hpp"
#include "perfest/error.hpp"

namespace perfest {

/// Average ranks of k workflows over N tasks. Matrices are workflow-major:
/// avg_scores[w][t].
struct RankSummary {
  std::vector<std::string> workflows;
  std::vector<std::string> tasks;
  std::vector<std::vector<double>> avg_scores;
  std::vector<std::vector<double>> med_scores;
  std::vector<std::vector<double>> rks;
  std::vector<double> avg_rks_wfs;

  std::size_t k() const noexcept { return workflows.size(); }
  std::size_t n() const noexcept { return tasks.size(); }
};

/// Mean ranks of `values` (1 = smallest, or largest when `descending`).
inline std::vector<double> mean_ranks(const std::vector<double>& values, bool descending = false) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return descending ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Ranks workflows within each task (1 = best). `avg_scores[w][t]`.
inline RankSummary compute_ranks(std::vector<std::string> workflows, std::vector<std::string> tasks,
                                 std::vector<std::vector<double>> avg_scores, bool maximize = false,
                                 std::vector<std::vector<double>> med_scores = {}) {
  const auto k = workflows.size(), n = tasks.size();
  if (k < 2) throw InvalidArgument("ranking needs at least 2 workflows");
  if (n < 1) throw InvalidArgument("ranking needs at least 1 task");
  if (avg_scores.size() != k) throw InvalidArgument("score matrix rows do not match the workflow count");
  for (const auto& row : avg_scores) {
    if (row.size() != n) throw InvalidArgument("score matrix columns do not match the task count");
    for (double v : row)
      if (std::isnan(v)) throw InvalidArgument("average scores must not be missing");
  }
  RankSummary rs{std::move(workflows), std::move(tasks), std::move(avg_scores), std::move(med_scores), {}, {}};
  rs.rks.assign(k, std::vector<double>(n, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> col(k);
    for (std::size_t w = 0; w < k; ++w) col[w] = rs.avg_scores[w][t];
    const auto r = mean_ranks(col, maximize);
    for (std::size_t w = 0; w < k; ++w) rs.rks[w][t] = r[w];
  }
  for (std::size_t w = 0; w < k; ++w)
    rs.avg_rks_wfs.push_back(std::accumulate(rs.rks[w].begin(), rs.rks[w].end(), 0.0) / static_cast<double>(n));
  return rs;
}

struct FriedmanResult {
  double chi = 0;
  double ff = 0;
  double crit_val = 0;
  bool rej_null = false;
  double alpha = 0.05;
};

/// Iman-Davenport correction of a Friedman statistic `chi` for k workflows
/// on n tasks.
inline FriedmanResult friedman_from_chi(double chi, std::size_t n, std::size_t k, double alpha = 0.05) {
  if (n < 2 || k < 2) throw InvalidArgument("the Friedman test needs at least 2 tasks and 2 workflows");
  const double N = static_cast<double>(n), K = static_cast<double>(k);
  FriedmanResult f;
  f.chi = chi;
  f.alpha = alpha;
  const double den = N * (K - 1) - chi;
  f.ff = den <= 0 ? std::numeric_limits<double>::infinity() : (N - 1) * chi / den;
  f.crit_val = f_quantile(1.0 - alpha, K - 1, (K - 1) * (N - 1));
  f.rej_null = f.ff > f.crit_val;
  return f;
}

inline double friedman_chi(const std::vector<double>& avg_ranks, std::size_t n) {
  const double K = static_cast<double>(avg_ranks.size()), N = static_cast<double>(n);
  double sum_sq = 0;
  for (double r : avg_ranks) sum_sq += r * r;
  return 12.0 * N / (K * (K + 1)) * (sum_sq - K * (K + 1) * (K + 1) / 4.0);
}

inline FriedmanResult friedman_test(const RankSummary& rs, double alpha = 0.05) {
  return friedman_from_chi(friedman_chi(rs.avg_rks_wfs, rs.n()), rs.n(), rs.k(), alpha);
}

/// CD = q * sqrt(k(k+1) / (6N)).
inline double critical_difference(double q, std::size_t k, std::size_t n) {
  const double K = static_cast<double>(k);
  return q * std::sqrt(K * (K + 1) / (6.0 * static_cast<double>(n)));
}

struct NemenyiResult {
  std::vector<std::string> workflows;
  std::vector<double> avg_ranks;
  double crit_dif = 0;
  std::vector<std::vector<double>> rk_difs;
  std::vector<std::vector<bool>> signif_difs;
};

inline NemenyiResult nemenyi_from_ranks(std::vector<std::string> workflows, std::vector<double> avg_ranks, std::size_t n,
                                        double alpha = 0.05) {
  const auto k = avg_ranks.size();
  if (n < 1) throw InvalidArgument("Nemenyi test needs at least 1 task");
  NemenyiResult r{std::move(workflows), std::move(avg_ranks), 0, {}, {}};
  r.crit_dif = critical_difference(nemenyi_q(static_cast<int>(k), alpha), k, n);
  r.rk_difs.assign(k, std::vector<double>(k, 0.0));
  r.signif_difs.assign(k, std::vector<bool>(k, false));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      r.rk_difs[i][j] = std::abs(r.avg_ranks[i] - r.avg_ranks[j]);
      r.signif_difs[i][j] = r.rk_difs[i][j] > r.crit_dif;
    }
  return r;
}

inline NemenyiResult nemenyi_test(const RankSummary& rs, double alpha = 0.05) {
  return nemenyi_from_ranks(rs.workflows, rs.avg_rks_wfs, rs.n(), alpha);
}

struct BonferroniDunnResult {
  std::vector<std::string> workflows;
  std::vector<double> avg_ranks;
  std::string baseline;
  double crit_dif = 0;
  std::vector<double> diffs;
  std::vector<bool> signif_difs;
};

inline BonferroniDunnResult bonferroni_dunn_test(const RankSummary& rs, const std::string& baseline, double alpha = 0.05) {
  const auto it = std::find(rs.workflows.begin(), rs.workflows.end(), baseline);
  if (it == rs.workflows.end()) throw InvalidArgument("unknown baseline workflow '" + baseline + "'");
  const auto b = static_cast<std::size_t>(it - rs.workflows.begin());
  BonferroniDunnResult r{rs.workflows, rs.avg_rks_wfs, baseline, 0, {}, {}};
  r.crit_dif = critical_difference(bonferroni_dunn_q(static_cast<int>(rs.k()), alpha), rs.k(), rs.n());
  for (std::size_t w = 0; w < rs.k(); ++w) {
    r.diffs.push_back(std::abs(rs.avg_rks_wfs[w] - rs.avg_rks_wfs[b]));
    r.signif_difs.push_back(w != b && r.diffs.back() > r.crit_dif);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Paired tests on per-iteration scores

/// p value (or the reason it is unavailable) of a paired test.
struct TestOutcome {
  std::optional<double> p;
  std::string note;
};

/// Two-sided paired t test on x - y.
inline TestOutcome paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("paired samples differ in length");
  const auto n = x.size();
  if (n < 2) return {std::nullopt, "fewer than 2 paired iterations"};
  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) ss += (x[i] - y[i] - mean) * (x[i] - y[i] - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0) {
    if (mean == 0) return {1.0, "identical scores"};
    return {std::nullopt, "degenerate: constant nonzero difference"};
  }
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  return {std::min(1.0, 2.0 * t_cdf(-std::abs(t), static_cast<double>(n - 1))), ""};
}

inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Two-sided Wilcoxon signed-rank test on x - y. Zero differences are
/// dropped and ties get mean ranks. Exact null distribution up to 25 pairs,
/// normal approximation with continuity correction beyond.
inline TestOutcome wilcoxon_signed_rank_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);
  const auto n = d.size();
  if (n == 0) return {std::nullopt, "no nonzero differences"};
  std::vector<double> mag;
  for (double v : d) mag.push_back(std::abs(v));
  const auto ranks = mean_ranks(mag);
  double v_stat = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) v_stat += ranks[i];

  if (n <= kWilcoxonExactLimit) {
    const auto counts = signed_rank_counts(ranks);
    const double total = std::ldexp(1.0, static_cast<int>(n));
    const auto v2 = static_cast<std::size_t>(std::llround(2.0 * v_stat));
    double lower = 0, upper = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (s <= v2) lower += counts[s];
      if (s >= v2) upper += counts[s];
    }
    return {std::min(1.0, 2.0 * std::min(lower, upper) / total), "exact"};
  }
  const double N = static_cast<double>(n);
  double tie_term = 0;
  std::vector<double> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double mu = N * (N + 1) / 4.0;
  const double sigma = std::sqrt(N * (N + 1) * (2 * N + 1) / 24.0 - tie_term / 48.0);
  const double dev = v_stat - mu;
  const double z = (dev - (dev > 0 ? 0.5 : dev < 0 ? -0.5 : 0.0)) / sigma;
  return {std::min(1.0, 2.0 * normal_cdf(-std::abs(z))), "normal approximation"};
}

/// Per task and workflow: the workflow's score, its difference to the
/// baseline's score, and the p value of the paired test against the baseline.
struct PairwiseEntry {
  std::optional<double> score;
  std::optional<double> diff;
  TestOutcome test;
};

struct PairwiseTestResult {
  std::string baseline;
  std::vector<std::string> tasks;
  std::vector<std::string> workflows;
  std::vector<std::vector<PairwiseEntry>> entries;  // [task][workflow]
};

namespace detail {

inline std::vector<std::optional<double>> metric_column(const std::vector<IterationRecord>& cell, const std::string& metric) {
  std::vector<std::optional<double>> v;
  for (const auto& rec : cell) {
    auto s = rec.scores ? rec.scores->get(metric) : std::nullopt;
    if (s && std::isnan(*s)) s.reset();
    v.push_back(s);
  }
  return v;
}

/// Valid values paired through the shared split index.
inline std::pair<std::vector<double>, std::vector<double>> paired_values(const std::vector<IterationRecord>& a,
                                                                         const std::vector<IterationRecord>& b,
                                                                         const std::string& metric) {
  std::pair<std::vector<double>, std::vector<double>> out;
  const auto va = metric_column(a, metric);
  const auto vb = metric_column(b, metric);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j].split_index != a[i].split_index) continue;
      if (va[i] && vb[j]) {
        out.first.push_back(*va[i]);
        out.second.push_back(*vb[j]);
      }
      break;
    }
  }
  return out;
}

template <class Test>
PairwiseTestResult pairwise(const ComparisonResults& r, const std::string& metric, const std::string& baseline,
                            bool use_median, Test test) {
  const auto m = r.metric_index(metric);
  const auto b = r.workflow_index(baseline);
  PairwiseTestResult out{baseline, r.task_names(), r.workflow_names(), {}};
  for (std::size_t t = 0; t < r.tasks.size(); ++t) {
    const auto base_stats = summarize_cell(r, t, b).stats[m];
    const auto base_score = use_median ? base_stats.med : base_stats.avg;
    std::vector<PairwiseEntry> row;
    for (std::size_t w = 0; w < r.workflows.size(); ++w) {
      const auto st = summarize_cell(r, t, w).stats[m];
      PairwiseEntry e;
      e.score = use_median ? st.med : st.avg;
      if (e.score && base_score) e.diff = *e.score - *base_score;
      if (w == b) {
        e.diff = e.score ? std::optional<double>(0.0) : std::nullopt;
        e.test.note = "baseline";
      } else {
        const auto [x, y] = paired_values(r.records[t][w], r.records[t][b], metric);
        e.test = test(x, y);
      }
      row.push_back(std::move(e));
    }
    out.entries.push_back(std::move(row));
  }
  return out;
}

}  // namespace detail

inline PairwiseTestResult paired_t(const ComparisonResults& r, const std::string& metric, const std::string& baseline) {
  return detail::pairwise(r, metric, baseline, false, paired_t_test);
}

inline PairwiseTestResult wilcoxon_signed_rank(const ComparisonResults& r, const std::string& metric,
                                               const std::string& baseline) {
  return detail::pairwise(r, metric, baseline, true, wilcoxon_signed_rank_test);
}

// ---------------------------------------------------------------------------
// Full comparison

struct PairedComparison {
  std::string metric;
  std::string baseline;
  double alpha = 0.05;
  bool maximize = false;
  std::vector<std::string> excluded;  // workflows lacking an average on some task
  std::optional<RankSummary> ranks;
  std::optional<FriedmanResult> friedman;
  std::optional<NemenyiResult> nemenyi;
  std::optional<BonferroniDunnResult> bonferroni_dunn;
  std::vector<std::string> notices;
  PairwiseTestResult t_test;
  PairwiseTestResult wilcoxon;
};

/// Rank-based and paired tests for every metric of `r`. The default
/// baseline is the workflow with the best average rank.
inline std::vector<PairedComparison> paired_comparisons(const ComparisonResults& r,
                                                        const std::optional<std::string>& baseline = std::nullopt,
                                                        MaxsFlags maxs = {}, double alpha = 0.05) {
  if (r.workflows.size() < 2) throw InvalidArgument("comparisons need at least 2 workflows");
  if (maxs.empty()) maxs.assign(r.metrics.size(), false);
  if (maxs.size() != r.metrics.size()) throw InvalidArgument("maxs needs one flag per metric");
  if (baseline) (void)r.workflow_index(*baseline);
  std::vector<PairedComparison> out;
  for (std::size_t m = 0; m < r.metrics.size(); ++m) {
    PairedComparison pc;
    pc.metric = r.metrics[m];
    pc.alpha = alpha;
    pc.maximize = maxs[m];

    std::vector<std::string> kept;
    std::vector<std::vector<double>> avg, med;
    for (std::size_t w = 0; w < r.workflows.size(); ++w) {
      std::vector<double> a, d;
      bool complete = true;
      for (std::size_t t = 0; t < r.tasks.size(); ++t) {
        const auto st = summarize_cell(r, t, w).stats[m];
        if (!st.avg) complete = false;
        a.push_back(st.avg.value_or(std::numeric_limits<double>::quiet_NaN()));
        d.push_back(st.med.value_or(std::numeric_limits<double>::quiet_NaN()));
      }
      if (!complete) {
        pc.excluded.push_back(r.workflows[w].id);
        continue;
      }
      kept.push_back(r.workflows[w].id);
      avg.push_back(std::move(a));
      med.push_back(std::move(d));
    }
    if (!pc.excluded.empty())
      pc.notices.push_back("excluded from rank-based tests (missing average scores): " + detail::join(pc.excluded, ", "));

    if (kept.size() >= 2) {
      pc.ranks = compute_ranks(kept, r.task_names(), avg, maxs[m], med);
      if (r.tasks.size() >= 2) {
        pc.friedman = friedman_test(*pc.ranks, alpha);
        pc.nemenyi = nemenyi_test(*pc.ranks, alpha);
      } else {
        pc.notices.push_back("Friedman, Nemenyi and Bonferroni-Dunn tests skipped: they need N >= 2 tasks");
      }
    } else {
      pc.notices.push_back("rank-based tests skipped: fewer than 2 workflows with complete average scores");
    }

    if (baseline) {
      pc.baseline = *baseline;
    } else if (pc.ranks) {
      const auto& rk = pc.ranks->avg_rks_wfs;
      pc.baseline = pc.ranks->workflows[static_cast<std::size_t>(std::min_element(rk.begin(), rk.end()) - rk.begin())];
    } else {
      pc.baseline = r.workflows.front().id;
    }
    if (pc.ranks && r.tasks.size() >= 2) {
      if (std::find(kept.begin(), kept.end(), pc.baseline) != kept.end())
        pc.bonferroni_dunn = bonferroni_dunn_test(*pc.ranks, pc.baseline, alpha);
      else
        pc.notices.push_back("Bonferroni-Dunn test skipped: baseline '" + pc.baseline + "' lacks complete scores");
    }
    pc.t_test = paired_t(r, pc.metric, pc.baseline);
    pc.wilcoxon = wilcoxon_signed_rank(r, pc.metric, pc.baseline);
    out.push_back(std::move(pc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

namespace detail {

inline Json opt_json(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline Json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

inline Json matrix_json(const std::vector<std::string>& rows, const std::vector<std::string>& cols,
                        const std::vector<std::vector<double>>& m) {
  Json j = Json::object();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Json row = Json::object();
    for (std::size_t c = 0; c < cols.size(); ++c) row[cols[c]] = number_json(m[i][c]);
    j[rows[i]] = std::move(row);
  }
  return j;
}

inline Json pairwise_json(const PairwiseTestResult& p) {
  Json j = Json::object();
  for (std::size_t t = 0; t < p.tasks.size(); ++t) {
    Json row = Json::object();
    for (std::size_t w = 0; w < p.workflows.size(); ++w) {
      const auto& e = p.entries[t][w];
      Json cell{{"score", opt_json(e.score)}, {"diff", opt_json(e.diff)}, {"p.value", opt_json(e.test.p)}};
      if (!e.test.note.empty()) cell["note"] = e.test.note;
      row[p.workflows[w]] = std::move(cell);
    }
    j[p.tasks[t]] = std::move(row);
  }
  return j;
}

}  // namespace detail

/// JSON report of one comparison, keyed like the classic test output
/// (avgScores, rks, F.test, Nemenyi.test, ...).
inline Json to_json(const PairedComparison& pc) {
  Json j;
  j["metric"] = pc.metric;
  j["setup"] = Json{{"baseline", pc.baseline}, {"alpha", pc.alpha}, {"maximize", pc.maximize},
                    {"excluded", pc.excluded}, {"notices", pc.notices}};
  if (pc.ranks) {
    const auto& r = *pc.ranks;
    j["avgScores"] = detail::matrix_json(r.workflows, r.tasks, r.avg_scores);
    j["medScores"] = detail::matrix_json(r.workflows, r.tasks, r.med_scores);
    j["rks"] = detail::matrix_json(r.workflows, r.tasks, r.rks);
    Json avg = Json::object();
    for (std::size_t w = 0; w < r.k(); ++w) avg[r.workflows[w]] = r.avg_rks_wfs[w];
    j["avgRksWfs"] = std::move(avg);
  }
  if (pc.friedman) {
    const auto& f = *pc.friedman;
    j["F.test"] = Json{{"chi", f.chi}, {"FF", detail::number_json(f.ff)}, {"critVal", f.crit_val}, {"rejNull", f.rej_null}};
  } else {
    j["F.test"] = nullptr;
  }
  if (pc.nemenyi) {
    const auto& n = *pc.nemenyi;
    Json signif = Json::object();
    for (std::size_t i = 0; i < n.workflows.size(); ++i) {
      Json row = Json::object();
      for (std::size_t c = 0; c < n.workflows.size(); ++c) row[n.workflows[c]] = static_cast<bool>(n.signif_difs[i][c]);
      signif[n.workflows[i]] = std::move(row);
    }
    j["Nemenyi.test"] = Json{{"critDif", n.crit_dif},
                             {"rkDifs", detail::matrix_json(n.workflows, n.workflows, n.rk_difs)},
                             {"signifDifs", std::move(signif)}};
  } else {
    j["Nemenyi.test"] = nullptr;
  }
  if (pc.bonferroni_dunn) {
    const auto& b = *pc.bonferroni_dunn;
    Json diffs = Json::object(), signif = Json::object();
    for (std::size_t w = 0; w < b.workflows.size(); ++w) {
      diffs[b.workflows[w]] = b.diffs[w];
      signif[b.workflows[w]] = static_cast<bool>(b.signif_difs[w]);
    }
    j["BonferroniDunn.test"] =
        Json{{"baseline", b.baseline}, {"critDif", b.crit_dif}, {"diffs", std::move(diffs)}, {"signifDifs", std::move(signif)}};
  } else {
    j["BonferroniDunn.test"] = nullptr;
  }
  j["t.test"] = detail::pairwise_json(pc.t_test);
  j["WilcoxonSignedRank.test"] = detail::pairwise_json(pc.wilcoxon);
  return j;
}

inline Json comparison_report(const std::vector<PairedComparison>& all) {
  Json j = Json::object();
  for (const auto& pc : all) j[pc.metric] = to_json(pc);
  return j;
}

}  // namespace perfest

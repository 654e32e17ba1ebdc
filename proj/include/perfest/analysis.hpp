#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "perfest/engine.hpp"
#include "perfest/error.hpp"

namespace perfest {

/// Descriptive statistics of one metric over the valid iterations of a cell.
struct MetricStats {
  std::optional<double> avg, std, med, iqr, min, max;
  std::size_t invalid = 0;
  friend bool operator==(const MetricStats&, const MetricStats&) = default;
};

/// Linear-interpolation quantile of sorted data: position (n-1)p.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Statistics over `values`, skipping missing entries (each counts as invalid).
inline MetricStats describe_values(const std::vector<std::optional<double>>& values) {
  MetricStats s;
  std::vector<double> v;
  for (const auto& x : values) {
    if (x && !std::isnan(*x)) v.push_back(*x);
    else ++s.invalid;
  }
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  double sum = 0;
  for (double x : v) sum += x;
  s.avg = sum / n;
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - *s.avg) * (x - *s.avg);
    s.std = std::sqrt(ss / (n - 1));
  }
  s.med = quantile_sorted(v, 0.5);
  s.iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  s.min = v.front();
  s.max = v.back();
  return s;
}

/// Iteration-by-metric score matrix of one cell; missing entries for invalid
/// iterations or undefined metric values.
struct ScoreMatrix {
  std::vector<std::string> metrics;
  std::vector<std::vector<std::optional<double>>> rows;

  std::vector<std::optional<double>> column(std::size_t m) const {
    std::vector<std::optional<double>> out;
    for (const auto& r : rows) out.push_back(r[m]);
    return out;
  }
};

inline ScoreMatrix scores_of(const ComparisonResults& r, std::size_t t, std::size_t w) {
  ScoreMatrix m{r.metrics, {}};
  for (const auto& rec : r.records[t][w]) {
    std::vector<std::optional<double>> row;
    for (const auto& name : r.metrics) row.push_back(rec.scores ? rec.scores->get(name) : std::nullopt);
    m.rows.push_back(std::move(row));
  }
  return m;
}

inline ScoreMatrix get_scores(const ComparisonResults& r, std::string_view workflow, std::string_view task) {
  return scores_of(r, r.task_index(task), r.workflow_index(workflow));
}

/// Per-metric statistics of one (task, workflow) cell.
struct CellSummary {
  std::string task;
  std::string workflow;
  std::vector<std::string> metrics;
  std::vector<MetricStats> stats;

  const MetricStats& of(std::string_view metric) const {
    for (std::size_t i = 0; i < metrics.size(); ++i)
      if (metrics[i] == metric) return stats[i];
    throw InvalidArgument("unknown metric '" + std::string(metric) + "'");
  }
};

inline CellSummary summarize_cell(const ComparisonResults& r, std::size_t t, std::size_t w) {
  CellSummary c{r.tasks[t].id, r.workflows[w].id, r.metrics, {}};
  const auto m = scores_of(r, t, w);
  for (std::size_t i = 0; i < r.metrics.size(); ++i) c.stats.push_back(describe_values(m.column(i)));
  return c;
}

inline CellSummary estimation_summary(const ComparisonResults& r, std::string_view workflow, std::string_view task) {
  return summarize_cell(r, r.task_index(task), r.workflow_index(workflow));
}

/// Every cell, task-major.
struct SummaryTable {
  std::vector<CellSummary> cells;
};

inline SummaryTable summarize(const ComparisonResults& r) {
  if (r.tasks.empty() || r.workflows.empty()) throw InvalidArgument("empty results");
  SummaryTable s;
  for (std::size_t t = 0; t < r.tasks.size(); ++t)
    for (std::size_t w = 0; w < r.workflows.size(); ++w) s.cells.push_back(summarize_cell(r, t, w));
  return s;
}

// ---------------------------------------------------------------------------
// Rankings

/// One flag per metric; true means higher scores are better.
using MaxsFlags = std::vector<bool>;

/// Builds flags from the names of the metrics to maximize.
inline MaxsFlags maxs_from_names(const std::vector<std::string>& metrics, const std::vector<std::string>& to_maximize) {
  MaxsFlags f(metrics.size(), false);
  for (const auto& name : to_maximize) {
    auto it = std::find(metrics.begin(), metrics.end(), name);
    if (it == metrics.end()) throw InvalidArgument("unknown metric '" + name + "' in maxs");
    f[static_cast<std::size_t>(it - metrics.begin())] = true;
  }
  return f;
}

struct RankEntry {
  std::string workflow;
  double estimate = 0;
};

struct Ranking {
  std::string task;
  std::string metric;
  std::vector<RankEntry> entries;
};

/// Workflows ordered by average score per task and metric. Cells without any
/// valid score are left out; ties keep declaration order.
inline std::vector<Ranking> rank_workflows(const ComparisonResults& r, std::size_t top = 5, MaxsFlags maxs = {}) {
  if (r.tasks.empty() || r.workflows.empty()) throw InvalidArgument("empty results");
  if (maxs.empty()) maxs.assign(r.metrics.size(), false);
  if (maxs.size() != r.metrics.size())
    throw InvalidArgument("maxs has " + std::to_string(maxs.size()) + " flags for " + std::to_string(r.metrics.size()) +
                          " metrics");
  std::vector<Ranking> out;
  for (std::size_t t = 0; t < r.tasks.size(); ++t) {
    std::vector<CellSummary> cells;
    for (std::size_t w = 0; w < r.workflows.size(); ++w) cells.push_back(summarize_cell(r, t, w));
    for (std::size_t m = 0; m < r.metrics.size(); ++m) {
      Ranking rk{r.tasks[t].id, r.metrics[m], {}};
      for (const auto& c : cells)
        if (c.stats[m].avg) rk.entries.push_back({c.workflow, *c.stats[m].avg});
      std::stable_sort(rk.entries.begin(), rk.entries.end(), [&](const RankEntry& a, const RankEntry& b) {
        return maxs[m] ? a.estimate > b.estimate : a.estimate < b.estimate;
      });
      if (rk.entries.size() > top) rk.entries.resize(top);
      out.push_back(std::move(rk));
    }
  }
  return out;
}

/// The best workflow per task and metric.
inline std::vector<Ranking> top_performers(const ComparisonResults& r, MaxsFlags maxs = {}) {
  return rank_workflows(r, 1, std::move(maxs));
}

// ---------------------------------------------------------------------------
// Reductions

enum class Reducer { mean, median, min, max };

inline Reducer reducer_from_string(std::string_view s) {
  if (s == "mean") return Reducer::mean;
  if (s == "median") return Reducer::median;
  if (s == "min") return Reducer::min;
  if (s == "max") return Reducer::max;
  throw InvalidArgument("unknown summary function '" + std::string(s) + "' (use mean, median, min or max)");
}

/// reduced[task][metric][workflow], computed over valid scores.
struct MetricsSummary {
  std::vector<std::string> tasks, metrics, workflows;
  std::vector<std::vector<std::vector<std::optional<double>>>> reduced;
};

inline MetricsSummary metrics_summary(const ComparisonResults& r, Reducer reducer = Reducer::mean) {
  MetricsSummary s{r.task_names(), r.metrics, r.workflow_names(), {}};
  for (std::size_t t = 0; t < r.tasks.size(); ++t) {
    std::vector<std::vector<std::optional<double>>> per_metric(r.metrics.size());
    for (std::size_t w = 0; w < r.workflows.size(); ++w) {
      const auto c = summarize_cell(r, t, w);
      for (std::size_t m = 0; m < r.metrics.size(); ++m) {
        const auto& st = c.stats[m];
        switch (reducer) {
          case Reducer::mean: per_metric[m].push_back(st.avg); break;
          case Reducer::median: per_metric[m].push_back(st.med); break;
          case Reducer::min: per_metric[m].push_back(st.min); break;
          case Reducer::max: per_metric[m].push_back(st.max); break;
        }
      }
    }
    s.reduced.push_back(std::move(per_metric));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Subsetting and merging

/// Wildcard pattern to regular expression: `*` any run, `?` one character.
/// A trailing ".*$" is dropped, so "*svm*" becomes "^.*svm".
inline std::string glob_to_regex(std::string_view glob) {
  std::string re = "^";
  for (char c : glob) {
    switch (c) {
      case '*': re += ".*"; break;
      case '?': re += '.'; break;
      case '.': case '+': case '(': case ')': case '[': case ']': case '{': case '}':
      case '^': case '$': case '|': case '\\':
        re += '\\';
        re += c;
        break;
      default: re += c;
    }
  }
  re += '$';
  if (re.size() >= 4 && re.compare(re.size() - 3, 3, ".*$") == 0) re.resize(re.size() - 3);
  return re;
}

namespace detail {

inline std::vector<std::size_t> matching(const std::vector<std::string>& names, const std::optional<std::string>& pattern,
                                         const char* dimension) {
  std::vector<std::size_t> keep;
  if (!pattern) {
    for (std::size_t i = 0; i < names.size(); ++i) keep.push_back(i);
    return keep;
  }
  std::regex re;
  try {
    re = std::regex(*pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw InvalidArgument("invalid " + std::string(dimension) + " pattern '" + *pattern + "': " + e.what());
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    if (std::regex_search(names[i], re)) keep.push_back(i);
  if (keep.empty()) throw InvalidArgument("no " + std::string(dimension) + " match '" + *pattern + "'");
  return keep;
}

inline std::optional<ScoreVector> restrict_scores(const std::optional<ScoreVector>& s, const std::vector<std::string>& m) {
  if (!s) return std::nullopt;
  return s->restrict_to(m);
}

}  // namespace detail

/// Keeps tasks, workflows and metrics whose names contain a match of the
/// corresponding pattern (unanchored search; use ^ and $ to anchor).
inline ComparisonResults subset_results(const ComparisonResults& r, const std::optional<std::string>& tasks_re,
                                        const std::optional<std::string>& workflows_re,
                                        const std::optional<std::string>& metrics_re) {
  const auto kt = detail::matching(r.task_names(), tasks_re, "tasks");
  const auto kw = detail::matching(r.workflow_names(), workflows_re, "workflows");
  const auto km = detail::matching(r.metrics, metrics_re, "metrics");
  ComparisonResults out;
  out.estimation = r.estimation;
  out.provenance = r.provenance;
  for (auto m : km) out.metrics.push_back(r.metrics[m]);
  if (out.metrics != r.metrics) out.estimation.metrics = out.metrics;
  for (auto t : kt) out.tasks.push_back(r.tasks[t]);
  for (auto w : kw) out.workflows.push_back(r.workflows[w]);
  for (auto t : kt) {
    std::vector<std::vector<IterationRecord>> row;
    for (auto w : kw) {
      auto cell = r.records[t][w];
      for (auto& rec : cell) rec.scores = detail::restrict_scores(rec.scores, out.metrics);
      row.push_back(std::move(cell));
    }
    out.records.push_back(std::move(row));
  }
  return out;
}

enum class MergeBy { workflows, tasks, metrics };

inline MergeBy merge_by_from_string(std::string_view s) {
  if (s == "workflows") return MergeBy::workflows;
  if (s == "tasks") return MergeBy::tasks;
  if (s == "metrics") return MergeBy::metrics;
  throw InvalidArgument("merge dimension must be workflows, tasks or metrics, got '" + std::string(s) + "'");
}

namespace detail {

inline void require_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
  for (const auto& x : b)
    if (std::find(a.begin(), a.end(), x) != a.end())
      throw Incompatible(std::string("both parts contain ") + what + " '" + x + "'");
}

inline void require_same_tasks(const ComparisonResults& a, const ComparisonResults& b, bool strict) {
  if (a.tasks.size() != b.tasks.size()) throw Incompatible("parts hold different task sets");
  for (std::size_t i = 0; i < a.tasks.size(); ++i) {
    const auto &x = a.tasks[i], &y = b.tasks[i];
    if (x.id != y.id || x.n_rows != y.n_rows || x.formula != y.formula || x.type != y.type)
      throw Incompatible("task '" + x.id + "' differs between parts");
    if (strict && x.plan_fingerprint != y.plan_fingerprint)
      throw Incompatible("task '" + x.id + "' was evaluated on different splits");
  }
}

inline void require_same_workflows(const ComparisonResults& a, const ComparisonResults& b) {
  if (a.workflow_names() != b.workflow_names()) throw Incompatible("parts hold different workflow sets");
}

}  // namespace detail

/// Joins results along one dimension. The parts must share seed and method;
/// `strict` additionally demands identical split index lists.
inline ComparisonResults merge_results(const std::vector<ComparisonResults>& parts, MergeBy by, bool strict = false) {
  if (parts.empty()) throw InvalidArgument("nothing to merge");
  ComparisonResults out = parts.front();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const auto& b = parts[p];
    if (b.provenance.seed != out.provenance.seed)
      throw Incompatible("seeds differ (" + std::to_string(out.provenance.seed) + " vs " +
                         std::to_string(b.provenance.seed) + ")");
    if (method_to_json(b.estimation.method) != method_to_json(out.estimation.method))
      throw Incompatible("estimation methods differ ('" + out.provenance.method + "' vs '" + b.provenance.method + "')");
    switch (by) {
      case MergeBy::workflows:
        detail::require_same_tasks(out, b, strict);
        if (out.metrics != b.metrics) throw Incompatible("parts estimate different metrics");
        detail::require_disjoint(out.workflow_names(), b.workflow_names(), "workflow");
        out.workflows.insert(out.workflows.end(), b.workflows.begin(), b.workflows.end());
        for (std::size_t t = 0; t < out.tasks.size(); ++t)
          out.records[t].insert(out.records[t].end(), b.records[t].begin(), b.records[t].end());
        break;
      case MergeBy::tasks:
        detail::require_same_workflows(out, b);
        if (out.metrics != b.metrics) throw Incompatible("parts estimate different metrics");
        detail::require_disjoint(out.task_names(), b.task_names(), "task");
        out.tasks.insert(out.tasks.end(), b.tasks.begin(), b.tasks.end());
        out.records.insert(out.records.end(), b.records.begin(), b.records.end());
        break;
      case MergeBy::metrics:
        detail::require_same_tasks(out, b, strict);
        detail::require_same_workflows(out, b);
        detail::require_disjoint(out.metrics, b.metrics, "metric");
        for (std::size_t t = 0; t < out.tasks.size(); ++t) {
          for (std::size_t w = 0; w < out.workflows.size(); ++w) {
            auto& ca = out.records[t][w];
            const auto& cb = b.records[t][w];
            if (ca.size() != cb.size()) throw Incompatible("iteration counts differ for task '" + out.tasks[t].id + "'");
            for (std::size_t i = 0; i < ca.size(); ++i) {
              if (ca[i].scores && cb[i].scores) {
                for (const auto& [n, v] : cb[i].scores->entries()) ca[i].scores->set(n, v);
              } else {
                if (ca[i].error.empty()) ca[i].error = cb[i].error;
                ca[i].scores.reset();
              }
            }
          }
        }
        out.metrics.insert(out.metrics.end(), b.metrics.begin(), b.metrics.end());
        out.estimation.metrics = out.metrics;
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text and CSV output

/// Six significant digits; "NA" for missing.
inline std::string format_value(std::optional<double> v) {
  if (!v || std::isnan(*v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(6) << *v;
  return os.str();
}

namespace detail {

/// Right-aligned table with a left-aligned row-label column.
inline std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == 0)
        os << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
      else
        os << ' ' << std::right << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string csv_number(std::optional<double> v) {
  if (!v || std::isnan(*v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(17) << *v;
  return os.str();
}

}  // namespace detail

inline std::string format_cell_summary(const CellSummary& c) {
  std::vector<std::string> header{""};
  header.insert(header.end(), c.metrics.begin(), c.metrics.end());
  std::vector<std::vector<std::string>> rows;
  auto add = [&](const char* label, auto get) {
    std::vector<std::string> row{label};
    for (const auto& s : c.stats) row.push_back(get(s));
    rows.push_back(std::move(row));
  };
  add("avg", [](const MetricStats& s) { return format_value(s.avg); });
  add("std", [](const MetricStats& s) { return format_value(s.std); });
  add("med", [](const MetricStats& s) { return format_value(s.med); });
  add("iqr", [](const MetricStats& s) { return format_value(s.iqr); });
  add("min", [](const MetricStats& s) { return format_value(s.min); });
  add("max", [](const MetricStats& s) { return format_value(s.max); });
  add("invalid", [](const MetricStats& s) { return format_value(static_cast<double>(s.invalid)); });
  return detail::render_table(header, rows);
}

/// The full summary print: header, then one statistics block per cell.
inline std::string format_summary(const ComparisonResults& r) {
  std::ostringstream os;
  os << "\n== Summary of a  " << method_name(r.estimation.method) << " Performance Estimation Experiment ==\n\n";
  os << detail::estimation_header(r) << "\n";
  os << "* Predictive Tasks ::  " << detail::join(r.task_names(), ", ") << "\n";
  os << "* Workflows  ::  " << detail::join(r.workflow_names(), ", ") << " \n";
  for (std::size_t t = 0; t < r.tasks.size(); ++t) {
    os << "\n-> Task:  " << r.tasks[t].id << "\n";
    for (std::size_t w = 0; w < r.workflows.size(); ++w) {
      os << "  *Workflow: " << r.workflows[w].id << " \n";
      os << format_cell_summary(summarize_cell(r, t, w));
    }
  }
  return os.str();
}

inline std::string format_rankings(const std::vector<Ranking>& ranks) {
  std::ostringstream os;
  std::string current;
  for (const auto& rk : ranks) {
    if (rk.task != current) {
      if (!current.empty()) os << "\n";
      os << "$" << rk.task << "\n";
      current = rk.task;
    }
    os << "$" << rk.task << "$" << rk.metric << "\n";
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < rk.entries.size(); ++i)
      rows.push_back({std::to_string(i + 1), rk.entries[i].workflow, format_value(rk.entries[i].estimate)});
    os << detail::render_table({"", "Workflow", "Estimate"}, rows) << "\n";
  }
  return os.str();
}

inline std::string format_top_performers(const std::vector<Ranking>& tops) {
  std::ostringstream os;
  std::string current;
  std::vector<std::vector<std::string>> rows;
  auto flush = [&] {
    if (current.empty()) return;
    os << "$" << current << "\n" << detail::render_table({"", "Workflow", "Estimate"}, rows) << "\n";
    rows.clear();
  };
  for (const auto& rk : tops) {
    if (rk.task != current) {
      flush();
      current = rk.task;
    }
    if (rk.entries.empty()) rows.push_back({rk.metric, "NA", "NA"});
    else rows.push_back({rk.metric, rk.entries.front().workflow, format_value(rk.entries.front().estimate)});
  }
  flush();
  return os.str();
}

inline std::string format_score_matrix(const ScoreMatrix& m) {
  std::vector<std::string> header{""};
  header.insert(header.end(), m.metrics.begin(), m.metrics.end());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::vector<std::string> row{"[" + std::to_string(i + 1) + ",]"};
    for (const auto& v : m.rows[i]) row.push_back(format_value(v));
    rows.push_back(std::move(row));
  }
  return detail::render_table(header, rows);
}

inline std::string summary_csv(const SummaryTable& s) {
  std::ostringstream os;
  os << "task,workflow,metric,avg,std,med,iqr,min,max,invalid\n";
  for (const auto& c : s.cells) {
    for (std::size_t m = 0; m < c.metrics.size(); ++m) {
      const auto& st = c.stats[m];
      os << detail::csv_field(c.task) << ',' << detail::csv_field(c.workflow) << ',' << detail::csv_field(c.metrics[m])
         << ',' << detail::csv_number(st.avg) << ',' << detail::csv_number(st.std) << ',' << detail::csv_number(st.med)
         << ',' << detail::csv_number(st.iqr) << ',' << detail::csv_number(st.min) << ','
         << detail::csv_number(st.max) << ',' << st.invalid << '\n';
    }
  }
  return os.str();
}

inline std::string rankings_csv(const std::vector<Ranking>& ranks) {
  std::ostringstream os;
  os << "task,metric,rank,workflow,estimate\n";
  for (const auto& rk : ranks)
    for (std::size_t i = 0; i < rk.entries.size(); ++i)
      os << detail::csv_field(rk.task) << ',' << detail::csv_field(rk.metric) << ',' << i + 1 << ','
         << detail::csv_field(rk.entries[i].workflow) << ',' << detail::csv_number(rk.entries[i].estimate) << '\n';
  return os.str();
}

/// Long-format per-iteration scores of every cell.
inline std::string scores_csv(const ComparisonResults& r) {
  std::ostringstream os;
  os << "task,workflow,iteration,metric,score\n";
  for (std::size_t t = 0; t < r.tasks.size(); ++t)
    for (std::size_t w = 0; w < r.workflows.size(); ++w) {
      const auto m = scores_of(r, t, w);
      for (std::size_t i = 0; i < m.rows.size(); ++i)
        for (std::size_t k = 0; k < m.metrics.size(); ++k)
          os << detail::csv_field(r.tasks[t].id) << ',' << detail::csv_field(r.workflows[w].id) << ',' << i + 1 << ','
             << detail::csv_field(m.metrics[k]) << ',' << detail::csv_number(m.rows[i][k]) << '\n';
    }
  return os.str();
}

}  // namespace perfest

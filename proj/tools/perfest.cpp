// perfest: run, summarize and compare performance estimation experiments.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "perfest.hpp"

using namespace perfest;

namespace {

constexpr int kExitFailure = 2;

struct Filters {
  std::string tasks, workflows, metrics;

  ComparisonResults apply(const ComparisonResults& r) const {
    auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
    if (tasks.empty() && workflows.empty() && metrics.empty()) return r;
    return subset_results(r, opt(tasks), opt(workflows), opt(metrics));
  }
};

void add_filters(CLI::App* cmd, Filters& f) {
  cmd->add_option("--tasks", f.tasks, "Regex selecting task names");
  cmd->add_option("--workflows", f.workflows, "Regex selecting workflow names");
  cmd->add_option("--metrics", f.metrics, "Regex selecting metric names");
}

std::optional<Parallelism> workers_override(const std::string& flag) {
  if (!flag.empty()) return parallelism_from_string(flag);
  if (const char* env = std::getenv("PERFEST_WORKERS"); env && *env) return parallelism_from_string(env);
  return std::nullopt;
}

void maybe_write(const std::string& path, const std::string& text) {
  if (!path.empty()) detail::write_text_file(path, text);
}

const PairedComparison& pick_metric(const std::vector<PairedComparison>& all, const std::string& metric) {
  if (metric.empty()) {
    if (all.size() != 1) throw InvalidArgument("results hold several metrics; choose one with --metric");
    return all.front();
  }
  for (const auto& pc : all)
    if (pc.metric == metric) return pc;
  throw InvalidArgument("unknown metric '" + metric + "'");
}

std::string format_comparison(const PairedComparison& pc) {
  std::ostringstream os;
  os << "== Paired comparisons on metric " << pc.metric << " (alpha = " << pc.alpha << ") ==\n";
  os << "Baseline: " << pc.baseline << "\n";
  for (const auto& n : pc.notices) os << "Note: " << n << "\n";
  if (!pc.excluded.empty()) os << "Excluded (missing scores): " << detail::join(pc.excluded, ", ") << "\n";
  if (pc.ranks) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t w = 0; w < pc.ranks->k(); ++w)
      rows.push_back({pc.ranks->workflows[w], format_value(pc.ranks->avg_rks_wfs[w])});
    os << "\nAverage ranks\n" << detail::render_table({"", "avgRank"}, rows);
  }
  if (pc.friedman) {
    const auto& f = *pc.friedman;
    os << "\nFriedman test (Iman-Davenport)\n"
       << "  chi      " << format_value(f.chi) << "\n"
       << "  FF       " << format_value(f.ff) << "\n"
       << "  critVal  " << format_value(f.crit_val) << "\n"
       << "  rejNull  " << (f.rej_null ? "TRUE" : "FALSE") << "\n";
  }
  if (pc.nemenyi) os << "\nNemenyi critical difference: " << format_value(pc.nemenyi->crit_dif) << "\n";
  if (pc.bonferroni_dunn)
    os << "Bonferroni-Dunn critical difference: " << format_value(pc.bonferroni_dunn->crit_dif) << "\n";
  auto pairwise = [&](const char* title, const PairwiseTestResult& p) {
    os << "\n" << title << " against " << p.baseline << "\n";
    for (std::size_t t = 0; t < p.tasks.size(); ++t) {
      std::vector<std::vector<std::string>> rows;
      for (std::size_t w = 0; w < p.workflows.size(); ++w) {
        const auto& e = p.entries[t][w];
        rows.push_back({p.workflows[w], format_value(e.score), format_value(e.diff), format_value(e.test.p)});
      }
      os << "-> Task: " << p.tasks[t] << "\n" << detail::render_table({"", "score", "diff", "p.value"}, rows);
    }
  };
  pairwise("Paired t test", pc.t_test);
  pairwise("Wilcoxon signed rank test", pc.wilcoxon);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimate and compare the predictive performance of modeling workflows"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // run
  std::string config_path, cluster_flag, output_flag;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Experiment config")->required();
  run->add_option("--cluster", cluster_flag, "off, auto or a worker count (overrides the config and PERFEST_WORKERS)");
  run->add_option("-o,--output", output_flag, "Results file (overrides outputPath)");
  run->add_flag("-q,--quiet", quiet, "No progress trace");

  // summary
  std::string results_path, csv_path, scores_path, reduce;
  Filters filters;
  auto* summary = app.add_subcommand("summary", "Per-cell statistics of every metric");
  summary->add_option("results", results_path, "Results file")->required();
  add_filters(summary, filters);
  summary->add_option("--csv", csv_path, "Also write the statistics as CSV");
  summary->add_option("--scores-csv", scores_path, "Also write every iteration score as CSV");
  summary->add_option("--reduce", reduce, "Print one mean|median|min|max table per task instead")
      ->check(CLI::IsMember({"mean", "median", "min", "max"}));

  // rank / top
  std::size_t top_n = 5;
  std::vector<std::string> maxs;
  auto* rank = app.add_subcommand("rank", "Best workflows per task and metric");
  rank->add_option("results", results_path, "Results file")->required();
  rank->add_option("--top", top_n, "Workflows listed per task and metric")->check(CLI::PositiveNumber);
  rank->add_option("--maxs", maxs, "Metrics where larger is better")->delimiter(',');
  rank->add_option("--csv", csv_path, "Also write the rankings as CSV");
  add_filters(rank, filters);

  auto* top = app.add_subcommand("top", "The single best workflow per task and metric");
  top->add_option("results", results_path, "Results file")->required();
  top->add_option("--maxs", maxs, "Metrics where larger is better")->delimiter(',');
  top->add_option("--csv", csv_path, "Also write the winners as CSV");
  add_filters(top, filters);

  // subset / merge
  std::string out_path;
  auto* subset = app.add_subcommand("subset", "Keep the tasks, workflows and metrics matching regexes");
  subset->add_option("results", results_path, "Results file")->required();
  add_filters(subset, filters);
  subset->add_option("-o,--output", out_path, "Output results file")->required();

  std::vector<std::string> parts;
  std::string by = "workflows";
  bool strict = false;
  auto* merge = app.add_subcommand("merge", "Combine partial results files");
  merge->add_option("results", parts, "Results files")->required()->expected(2, -1);
  merge->add_option("--by", by, "workflows, tasks or metrics")->check(CLI::IsMember({"workflows", "tasks", "metrics"}));
  merge->add_flag("--strict", strict, "Also require identical train/test splits");
  merge->add_option("-o,--output", out_path, "Output results file")->required();

  // compare / cd-diagram
  std::string metric, baseline, kind = "nemenyi";
  double alpha = 0.05;
  auto* compare = app.add_subcommand("compare", "Friedman, Nemenyi, Bonferroni-Dunn and paired tests");
  compare->add_option("results", results_path, "Results file")->required();
  compare->add_option("--metric", metric, "Only this metric");
  compare->add_option("--baseline", baseline, "Baseline workflow (default: best average rank)");
  compare->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-6, 0.5));
  compare->add_option("--maxs", maxs, "Metrics where larger is better")->delimiter(',');
  compare->add_option("-o,--output", out_path, "Write the report as JSON");
  add_filters(compare, filters);

  auto* cd = app.add_subcommand("cd-diagram", "Critical difference diagram as SVG");
  cd->add_option("results", results_path, "Results file")->required();
  cd->add_option("--metric", metric, "Metric to rank on (required with several metrics)");
  cd->add_option("--kind", kind, "nemenyi or bd")->check(CLI::IsMember({"nemenyi", "bd"}));
  cd->add_option("--baseline", baseline, "Baseline workflow for bd");
  cd->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-6, 0.5));
  cd->add_option("--maxs", maxs, "Metrics where larger is better")->delimiter(',');
  cd->add_option("-o,--output", out_path, "SVG file")->required();
  add_filters(cd, filters);

  auto* box = app.add_subcommand("boxplot", "Box plots of per-iteration scores as SVG");
  box->add_option("results", results_path, "Results file")->required();
  add_filters(box, filters);
  box->add_option("-o,--output", out_path, "SVG file")->required();
  box->add_option("--scores-csv", scores_path, "Also write the plotted scores as CSV");

  auto* list = app.add_subcommand("list-metrics", "Metric names usable in a config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitFailure;
  }

  try {
    if (*run) {
      const auto cfg = load_config(config_path);
      const auto out = output_flag.empty() ? cfg.resolve(cfg.output_path).string() : output_flag;
      const auto res = run_experiment(cfg, workers_override(cluster_flag), quiet ? nullptr : &std::cout);
      save_results(res, out);
      if (!quiet) std::cout << "\n\n";
      std::size_t invalid = 0;
      for (const auto& task : res.records)
        for (const auto& cell : task)
          for (const auto& rec : cell) invalid += rec.invalid();
      std::cout << "Results written to " << out;
      if (invalid) std::cout << " (" << invalid << " invalid iterations)";
      std::cout << "\n";
      return 0;
    }

    if (*list) {
      std::cout << "classification: " << detail::join(classification_metric_names(), " ") << "\n";
      std::cout << "regression:     " << detail::join(regression_metric_names(), " ") << "\n";
      std::cout << "time:           " << detail::join(time_metric_names(), " ") << "\n";
      std::cout << "plugin:         plugin:<evaluator id>\n";
      return 0;
    }

    if (*merge) {
      std::vector<ComparisonResults> loaded;
      for (const auto& p : parts) loaded.push_back(load_results(p));
      const auto merged = merge_results(loaded, merge_by_from_string(by), strict);
      save_results(merged, out_path);
      std::cout << describe(merged);
      return 0;
    }

    const auto res = filters.apply(load_results(results_path));

    if (*summary) {
      if (!reduce.empty()) {
        const auto ms = metrics_summary(res, reducer_from_string(reduce));
        for (std::size_t t = 0; t < ms.tasks.size(); ++t) {
          std::vector<std::vector<std::string>> rows;
          for (std::size_t m = 0; m < ms.metrics.size(); ++m) {
            std::vector<std::string> row{ms.metrics[m]};
            for (const auto& v : ms.reduced[t][m]) row.push_back(format_value(v));
            rows.push_back(std::move(row));
          }
          std::vector<std::string> header{""};
          header.insert(header.end(), ms.workflows.begin(), ms.workflows.end());
          std::cout << "$" << ms.tasks[t] << "\n" << detail::render_table(header, rows) << "\n";
        }
      } else {
        std::cout << format_summary(res);
      }
      maybe_write(csv_path, summary_csv(summarize(res)));
      maybe_write(scores_path, scores_csv(res));
      return 0;
    }

    if (*rank || *top) {
      const auto flags = maxs_from_names(res.metrics, maxs);
      if (*rank) {
        const auto ranks = rank_workflows(res, top_n, flags);
        std::cout << format_rankings(ranks);
        maybe_write(csv_path, rankings_csv(ranks));
      } else {
        const auto tops = top_performers(res, flags);
        std::cout << format_top_performers(tops);
        maybe_write(csv_path, rankings_csv(tops));
      }
      return 0;
    }

    if (*subset) {
      save_results(res, out_path);
      std::cout << describe(res);
      return 0;
    }

    if (*compare || *cd) {
      const auto flags = maxs_from_names(res.metrics, maxs);
      const auto base = baseline.empty() ? std::nullopt : std::optional<std::string>(baseline);
      auto all = paired_comparisons(res, base, flags, alpha);
      if (*compare) {
        if (!metric.empty()) all = {pick_metric(all, metric)};
        for (const auto& pc : all) std::cout << format_comparison(pc) << "\n";
        maybe_write(out_path, comparison_report(all).dump(2) + "\n");
        return 0;
      }
      const auto& pc = pick_metric(all, metric);
      if (!pc.nemenyi || !pc.bonferroni_dunn)
        throw InvalidArgument("no CD diagram for " + pc.metric + ": " + detail::join(pc.notices, "; "));
      const auto svg = kind == "nemenyi" ? cd_diagram_svg(cd_input(*pc.nemenyi))
                                         : cd_diagram_svg(cd_input(*pc.bonferroni_dunn));
      detail::write_text_file(out_path, svg);
      std::cout << "CD diagram written to " << out_path << "\n";
      return 0;
    }

    if (*box) {
      detail::write_text_file(out_path, boxplot_svg(box_panels(res)));
      maybe_write(scores_path, scores_csv(res));
      std::cout << "Box plot written to " << out_path << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}

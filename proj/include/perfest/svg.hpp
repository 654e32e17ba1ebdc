#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "perfest/analysis.hpp"
#include "perfest/error.hpp"
#include "perfest/stats.hpp"

namespace perfest {

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
  if (!f) throw Error("write to '" + path + "' failed");
}

}  // namespace detail

/// Groups of mutually non-significant workflows, as index ranges into the
/// rank-sorted order. For each workflow the group runs to the last one whose
/// rank lies within `cd`; groups contained in an earlier one are dropped.
inline std::vector<std::pair<std::size_t, std::size_t>> cd_cliques(const std::vector<double>& sorted_ranks, double cd) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t last_end = 0;
  for (std::size_t i = 0; i < sorted_ranks.size(); ++i) {
    std::size_t j = i;
    while (j + 1 < sorted_ranks.size() && sorted_ranks[j + 1] - sorted_ranks[i] <= cd) ++j;
    if (j > i && (out.empty() || j > last_end)) {
      out.emplace_back(i, j);
      last_end = j;
    }
  }
  return out;
}

/// What a CD diagram needs: names, average ranks and the critical difference.
/// With a baseline, the baseline's +/- CD interval is drawn instead of cliques.
struct CdDiagramInput {
  std::vector<std::string> workflows;
  std::vector<double> avg_ranks;
  double crit_dif = 0;
  std::optional<std::string> baseline;
  std::string title;
};

inline CdDiagramInput cd_input(const NemenyiResult& n, std::string title = "Nemenyi") {
  return {n.workflows, n.avg_ranks, n.crit_dif, std::nullopt, std::move(title)};
}

inline CdDiagramInput cd_input(const BonferroniDunnResult& b, std::string title = "Bonferroni-Dunn") {
  return {b.workflows, b.avg_ranks, b.crit_dif, b.baseline, std::move(title)};
}

inline std::string cd_diagram_svg(const CdDiagramInput& in) {
  const auto k = in.workflows.size();
  if (k < 2 || in.avg_ranks.size() != k) throw InvalidArgument("CD diagram needs at least 2 ranked workflows");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return in.avg_ranks[a] < in.avg_ranks[b]; });
  std::vector<double> sorted;
  for (auto i : order) sorted.push_back(in.avg_ranks[i]);

  const double width = 800, left = 160, right = 160, axis_y = 110;
  const double span = width - left - right;
  const auto x = [&](double r) { return left + (r - 1.0) / static_cast<double>(k - 1) * span; };
  const auto half = (k + 1) / 2;
  const double row_h = 20;
  const double cliques_top = axis_y + 18;
  const auto cliques = in.baseline ? std::vector<std::pair<std::size_t, std::size_t>>{} : cd_cliques(sorted, in.crit_dif);
  const double labels_top = cliques_top + static_cast<double>(cliques.size()) * 8 + 22;
  const double height = labels_top + static_cast<double>(std::max(half, k - half)) * row_h + 20;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << detail::fmt2(width) << ' '
     << detail::fmt2(height) << "\" width=\"" << detail::fmt2(width) << "\" height=\"" << detail::fmt2(height)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!in.title.empty())
    os << "<text x=\"" << detail::fmt2(width / 2) << "\" y=\"18\" text-anchor=\"middle\">" << detail::escape_xml(in.title)
       << "</text>\n";

  // CD ruler, top left
  const double cd_len = std::min(in.crit_dif, static_cast<double>(k - 1)) / static_cast<double>(k - 1) * span;
  os << "<g class=\"cd-ruler\"><line x1=\"" << detail::fmt2(left) << "\" y1=\"45\" x2=\"" << detail::fmt2(left + cd_len)
     << "\" y2=\"45\" stroke=\"black\" stroke-width=\"2\"/>";
  os << "<line x1=\"" << detail::fmt2(left) << "\" y1=\"40\" x2=\"" << detail::fmt2(left) << "\" y2=\"50\" stroke=\"black\"/>";
  os << "<line x1=\"" << detail::fmt2(left + cd_len) << "\" y1=\"40\" x2=\"" << detail::fmt2(left + cd_len)
     << "\" y2=\"50\" stroke=\"black\"/>";
  os << "<text x=\"" << detail::fmt2(left + cd_len / 2) << "\" y=\"36\" text-anchor=\"middle\">CD = "
     << detail::fmt2(in.crit_dif) << "</text></g>\n";

  // rank axis
  os << "<g class=\"axis\"><line x1=\"" << detail::fmt2(x(1)) << "\" y1=\"" << detail::fmt2(axis_y) << "\" x2=\""
     << detail::fmt2(x(static_cast<double>(k))) << "\" y2=\"" << detail::fmt2(axis_y) << "\" stroke=\"black\"/>";
  for (std::size_t r = 1; r <= k; ++r) {
    const double xr = x(static_cast<double>(r));
    os << "<line x1=\"" << detail::fmt2(xr) << "\" y1=\"" << detail::fmt2(axis_y - 6) << "\" x2=\"" << detail::fmt2(xr)
       << "\" y2=\"" << detail::fmt2(axis_y) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << detail::fmt2(xr) << "\" y=\"" << detail::fmt2(axis_y - 10) << "\" text-anchor=\"middle\">" << r
       << "</text>";
  }
  os << "</g>\n";

  if (in.baseline) {
    const auto it = std::find(in.workflows.begin(), in.workflows.end(), *in.baseline);
    if (it == in.workflows.end()) throw InvalidArgument("unknown baseline workflow '" + *in.baseline + "'");
    const double br = in.avg_ranks[static_cast<std::size_t>(it - in.workflows.begin())];
    const double lo = std::max(1.0, br - in.crit_dif), hi = std::min(static_cast<double>(k), br + in.crit_dif);
    os << "<line class=\"cd-interval\" x1=\"" << detail::fmt2(x(lo)) << "\" y1=\"" << detail::fmt2(cliques_top) << "\" x2=\""
       << detail::fmt2(x(hi)) << "\" y2=\"" << detail::fmt2(cliques_top) << "\" stroke=\"black\" stroke-width=\"4\"/>\n";
    os << "<circle class=\"baseline\" cx=\"" << detail::fmt2(x(br)) << "\" cy=\"" << detail::fmt2(cliques_top)
       << "\" r=\"4\" fill=\"red\"/>\n";
  }
  for (std::size_t c = 0; c < cliques.size(); ++c) {
    const double y = cliques_top + static_cast<double>(c) * 8;
    os << "<line class=\"clique\" x1=\"" << detail::fmt2(x(sorted[cliques[c].first]) - 4) << "\" y1=\"" << detail::fmt2(y)
       << "\" x2=\"" << detail::fmt2(x(sorted[cliques[c].second]) + 4) << "\" y2=\"" << detail::fmt2(y)
       << "\" stroke=\"black\" stroke-width=\"3\"/>\n";
  }

  // spurs: best half to the left, the rest to the right
  for (std::size_t pos = 0; pos < k; ++pos) {
    const auto w = order[pos];
    const bool on_left = pos < half;
    const std::size_t row = on_left ? pos : k - 1 - pos;
    const double y = labels_top + static_cast<double>(row) * row_h;
    const double xr = x(in.avg_ranks[w]);
    const double end = on_left ? left - 10 : width - right + 10;
    os << "<g class=\"workflow\"><polyline points=\"" << detail::fmt2(xr) << ',' << detail::fmt2(axis_y) << ' '
       << detail::fmt2(xr) << ',' << detail::fmt2(y) << ' ' << detail::fmt2(end) << ',' << detail::fmt2(y)
       << "\" fill=\"none\" stroke=\"black\"/>";
    os << "<text x=\"" << detail::fmt2(on_left ? end - 4 : end + 4) << "\" y=\"" << detail::fmt2(y + 4)
       << "\" text-anchor=\"" << (on_left ? "end" : "start") << "\">" << detail::escape_xml(in.workflows[w]) << " ("
       << detail::fmt2(in.avg_ranks[w]) << ")</text></g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Box plots

struct BoxSeries {
  std::string label;
  std::vector<double> values;
};

struct BoxPanel {
  std::string title;
  std::vector<BoxSeries> boxes;
};

struct BoxStats {
  double q1, med, q3, lo_whisker, hi_whisker;
  std::vector<double> outliers;
};

/// Tukey box: whiskers reach the most extreme values within 1.5 IQR.
inline BoxStats box_stats(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("box plot of an empty sample");
  std::sort(v.begin(), v.end());
  BoxStats b{quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75), 0, 0, {}};
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.lo_whisker = b.q1;
  b.hi_whisker = b.q3;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) b.outliers.push_back(x);
    else {
      b.lo_whisker = std::min(b.lo_whisker, x);
      b.hi_whisker = std::max(b.hi_whisker, x);
    }
  }
  return b;
}

/// Box plots of valid scores: one panel per (task, metric), one box per workflow.
inline std::vector<BoxPanel> box_panels(const ComparisonResults& r) {
  std::vector<BoxPanel> panels;
  for (std::size_t t = 0; t < r.tasks.size(); ++t) {
    for (std::size_t m = 0; m < r.metrics.size(); ++m) {
      BoxPanel p{r.tasks[t].id + " : " + r.metrics[m], {}};
      for (std::size_t w = 0; w < r.workflows.size(); ++w) {
        BoxSeries s{r.workflows[w].id, {}};
        for (const auto& v : scores_of(r, t, w).column(m))
          if (v) s.values.push_back(*v);
        if (!s.values.empty()) p.boxes.push_back(std::move(s));
      }
      if (!p.boxes.empty()) panels.push_back(std::move(p));
    }
  }
  if (panels.empty()) throw InvalidArgument("no valid scores to plot");
  return panels;
}

inline std::string boxplot_svg(const std::vector<BoxPanel>& panels) {
  if (panels.empty()) throw InvalidArgument("no valid scores to plot");
  const double panel_w = 120, panel_h = 260, top = 30, bottom = 60, left = 70;
  std::size_t max_boxes = 1;
  for (const auto& p : panels) max_boxes = std::max(max_boxes, p.boxes.size());
  const double width = left + static_cast<double>(max_boxes) * panel_w + 20;
  const double height = static_cast<double>(panels.size()) * (panel_h + top + bottom);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << detail::fmt2(width) << ' ' << detail::fmt2(height)
     << "\" width=\"" << detail::fmt2(width) << "\" height=\"" << detail::fmt2(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& p = panels[pi];
    const double y0 = static_cast<double>(pi) * (panel_h + top + bottom) + top;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& b : p.boxes)
      for (double v : b.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const auto y = [&](double v) { return y0 + panel_h - (v - lo) / (hi - lo) * panel_h; };

    os << "<g class=\"panel\"><text x=\"" << detail::fmt2(left) << "\" y=\"" << detail::fmt2(y0 - 10) << "\">"
       << detail::escape_xml(p.title) << "</text>\n";
    os << "<line x1=\"" << detail::fmt2(left) << "\" y1=\"" << detail::fmt2(y0) << "\" x2=\"" << detail::fmt2(left)
       << "\" y2=\"" << detail::fmt2(y0 + panel_h) << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
      const double v = lo + (hi - lo) * tick / 4.0;
      os << "<text x=\"" << detail::fmt2(left - 5) << "\" y=\"" << detail::fmt2(y(v) + 4) << "\" text-anchor=\"end\">"
         << format_value(v) << "</text>";
    }
    os << "\n";
    for (std::size_t bi = 0; bi < p.boxes.size(); ++bi) {
      const auto& s = p.boxes[bi];
      const auto b = box_stats(s.values);
      const double cx = left + (static_cast<double>(bi) + 0.5) * panel_w;
      const double bw = panel_w * 0.4;
      os << "<g class=\"box\">";
      os << "<line class=\"whisker\" x1=\"" << detail::fmt2(cx) << "\" y1=\"" << detail::fmt2(y(b.lo_whisker)) << "\" x2=\""
         << detail::fmt2(cx) << "\" y2=\"" << detail::fmt2(y(b.hi_whisker)) << "\" stroke=\"black\"/>";
      os << "<rect x=\"" << detail::fmt2(cx - bw / 2) << "\" y=\"" << detail::fmt2(y(b.q3)) << "\" width=\""
         << detail::fmt2(bw) << "\" height=\"" << detail::fmt2(y(b.q1) - y(b.q3))
         << "\" fill=\"#dde6f0\" stroke=\"black\"/>";
      os << "<line class=\"median\" x1=\"" << detail::fmt2(cx - bw / 2) << "\" y1=\"" << detail::fmt2(y(b.med)) << "\" x2=\""
         << detail::fmt2(cx + bw / 2) << "\" y2=\"" << detail::fmt2(y(b.med)) << "\" stroke=\"black\" stroke-width=\"2\"/>";
      for (double o : b.outliers)
        os << "<circle class=\"outlier\" cx=\"" << detail::fmt2(cx) << "\" cy=\"" << detail::fmt2(y(o))
           << "\" r=\"3\" fill=\"none\" stroke=\"black\"/>";
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        // fixed jitter pattern keeps the output reproducible
        const double jitter = (static_cast<double>(i % 7) - 3.0) * bw / 10.0;
        os << "<circle class=\"point\" cx=\"" << detail::fmt2(cx + bw * 0.75 + jitter) << "\" cy=\""
           << detail::fmt2(y(s.values[i])) << "\" r=\"2\" fill=\"steelblue\"/>";
      }
      os << "<text x=\"" << detail::fmt2(cx) << "\" y=\"" << detail::fmt2(y0 + panel_h + 16)
         << "\" text-anchor=\"middle\">" << detail::escape_xml(s.label) << "</text></g>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace perfest

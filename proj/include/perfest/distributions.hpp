#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "perfest/error.hpp"

namespace perfest {

namespace detail {
inline void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("probability must lie in (0, 1), got " + std::to_string(p));
}
}  // namespace detail

inline double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }

inline double normal_quantile(double p) {
  detail::check_probability(p);
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double t_cdf(double x, double df) { return boost::math::cdf(boost::math::students_t_distribution<double>(df), x); }

inline double t_quantile(double p, double df) {
  detail::check_probability(p);
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

inline double f_cdf(double x, double df1, double df2) {
  return boost::math::cdf(boost::math::fisher_f_distribution<double>(df1, df2), x);
}

inline double f_quantile(double p, double df1, double df2) {
  detail::check_probability(p);
  return boost::math::quantile(boost::math::fisher_f_distribution<double>(df1, df2), p);
}

/// P(range of k iid standard normals <= q): the studentized range
/// distribution with infinite degrees of freedom.
inline double studentized_range_cdf(double q, int k) {
  if (k < 2) throw InvalidArgument("studentized range needs k >= 2");
  if (q <= 0) return 0.0;
  auto integrand = [&](double z) {
    const double inner = normal_cdf(z + q) - normal_cdf(z);
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI) * std::pow(inner, k - 1);
  };
  double err = 0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 15, 1e-14, &err);
  return std::min(1.0, k * v);
}

inline double studentized_range_quantile(double p, int k) {
  detail::check_probability(p);
  auto f = [&](double q) { return studentized_range_cdf(q, k) - p; };
  boost::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(f, 1e-6, 40.0, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

namespace detail {

// studentized range at infinite df divided by sqrt(2), k = 2..30
inline constexpr std::array<double, 29> kQ05{
    1.9599639845, 2.3437005864, 2.5690317725, 2.7277743709, 2.8497054196, 2.9483200175, 3.0308784496, 3.1017303413,
    3.1636835771, 3.2186536073, 3.2680039245, 3.3127385934, 3.3536177519, 3.3912302838, 3.4260413794, 3.4584247073,
    3.4886847994, 3.5170730087, 3.5437991315, 3.5690400300, 3.5929461370, 3.6156464372, 3.6372523317, 3.6578606731,
    3.6775561759, 3.6964133492, 3.7144980614, 3.7318688169, 3.7485778068};
inline constexpr std::array<double, 29> kQ01{
    2.5758293035, 2.9134943378, 3.1132503453, 3.2546859715, 3.3637403685, 3.4522128234, 3.5264706985, 3.5903386986,
    3.6462915484, 3.6960208999, 3.7407331678, 3.7813182411, 3.8184508563, 3.8526544765, 3.8843431545, 3.9138498871,
    3.9414463675, 3.9673570833, 3.9917695942, 4.0148421653, 4.0367095313, 4.0574873140, 4.0772754533, 4.0961609035,
    4.1142197763, 4.1315190608, 4.1481180164, 4.1640693110, 4.1794199576};

}  // namespace detail

/// Nemenyi critical value q_alpha for k groups. Table lookup for alpha 0.05
/// and 0.01 with k <= 30; computed from the studentized range otherwise.
inline double nemenyi_q(int k, double alpha) {
  if (k < 2) throw InvalidArgument("Nemenyi test needs at least 2 workflows");
  detail::check_probability(alpha);
  if (k <= 30) {
    if (alpha == 0.05) return detail::kQ05[static_cast<std::size_t>(k - 2)];
    if (alpha == 0.01) return detail::kQ01[static_cast<std::size_t>(k - 2)];
  }
  return studentized_range_quantile(1.0 - alpha, k) / std::sqrt(2.0);
}

/// Two-sided normal critical value with a Bonferroni correction for k-1
/// comparisons against one baseline.
inline double bonferroni_dunn_q(int k, double alpha) {
  if (k < 2) throw InvalidArgument("Bonferroni-Dunn test needs at least 2 workflows");
  detail::check_probability(alpha);
  return normal_quantile(1.0 - alpha / (2.0 * (k - 1)));
}

/// Null distribution of the Wilcoxon signed-rank statistic V (sum of the
/// positive ranks) for the given ranks. Ranks may be half-integers (ties);
/// the returned counts are indexed by 2V.
inline std::vector<double> signed_rank_counts(const std::vector<double>& ranks) {
  std::vector<std::size_t> doubled;
  std::size_t total = 0;
  for (double r : ranks) {
    const auto d = static_cast<std::size_t>(std::llround(2.0 * r));
    doubled.push_back(d);
    total += d;
  }
  std::vector<double> counts(total + 1, 0.0);
  counts[0] = 1.0;
  std::size_t reach = 0;
  for (auto d : doubled) {
    reach += d;
    for (std::size_t s = reach; s >= d; --s) {
      counts[s] += counts[s - d];
      if (s == d) break;
    }
  }
  return counts;
}

}  // namespace perfest

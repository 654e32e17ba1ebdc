#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perfest/error.hpp"
#include "perfest/frame.hpp"
#include "perfest/predictions.hpp"
#include "perfest/rng.hpp"

namespace perfest {

/// A fitted model.
class Model {
 public:
  virtual ~Model() = default;
  /// `want` is the requested output shape; models may refuse shapes they
  /// cannot produce.
  virtual Predictions predict(const DataFrame& test, PredShape want) const = 0;
};

struct LearnerSpec {
  std::string name;
  Json pars = Json::object();
};

/// Learner callable: (formula, train, pars, rng) -> fitted model.
using LearnerFn = std::function<std::unique_ptr<Model>(const Formula&, const DataFrame&, const Json&, Rng&)>;

namespace detail {

/// Most frequent label among codes; ties go to the lexicographically smallest
/// label. Missing codes are ignored.
inline std::optional<std::int32_t> mode_code(std::span<const std::int32_t> codes, const std::vector<std::string>& categories) {
  std::vector<std::size_t> counts(categories.size(), 0);
  for (auto c : codes)
    if (c >= 0) ++counts[static_cast<std::size_t>(c)];
  std::optional<std::int32_t> best;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    if (!best || counts[c] > counts[static_cast<std::size_t>(*best)] ||
        (counts[c] == counts[static_cast<std::size_t>(*best)] && categories[c] < categories[static_cast<std::size_t>(*best)]))
      best = static_cast<std::int32_t>(c);
  }
  return best;
}

inline std::optional<double> median_of(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline Predictions labels_or_probs(std::vector<std::vector<double>> rows_probs, const std::vector<std::string>& classes,
                                   PredShape want) {
  if (want == PredShape::numeric) throw InvalidArgument("numeric predictions requested for a classification task");
  if (want == PredShape::probabilities) {
    std::vector<double> flat;
    flat.reserve(rows_probs.size() * classes.size());
    for (const auto& r : rows_probs) flat.insert(flat.end(), r.begin(), r.end());
    return Predictions::probabilities(std::move(flat), classes);
  }
  std::vector<std::int32_t> codes;
  codes.reserve(rows_probs.size());
  for (const auto& r : rows_probs) codes.push_back(static_cast<std::int32_t>(argmax(r)));
  return Predictions::of_labels(std::move(codes), classes);
}

}  // namespace detail

/// Turns predictor columns into a dense numeric design. Numeric predictors
/// map to one feature each, categorical ones to indicator features over the
/// training categories (optionally dropping the first level).
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(const Formula& f, const DataFrame& train, bool drop_first_level) : drop_first_(drop_first_level) {
    for (const auto& name : predictor_names(f, train)) {
      const auto& col = train.column(name);
      Source s{name, col.is_numeric(), {}};
      if (!col.is_numeric()) s.categories = col.categories();
      sources_.push_back(std::move(s));
    }
    for (const auto& s : sources_) {
      if (s.numeric) width_ += 1;
      else width_ += s.categories.size() - (drop_first_ && !s.categories.empty() ? 1 : 0);
    }
  }

  std::size_t width() const noexcept { return width_; }
  bool is_numeric_feature(std::size_t j) const {
    std::size_t at = 0;
    for (const auto& s : sources_) {
      const auto w = s.numeric ? 1 : s.categories.size() - (drop_first_ && !s.categories.empty() ? 1 : 0);
      if (j < at + w) return s.numeric;
      at += w;
    }
    return false;
  }

  /// Row-major n x width matrix. Missing predictor cells are rejected.
  Eigen::MatrixXd encode(const DataFrame& data) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.n_rows()), static_cast<Eigen::Index>(width_));
    Eigen::Index j = 0;
    for (const auto& s : sources_) {
      const auto& col = data.column(s.name);
      if (s.numeric) {
        if (!col.is_numeric()) throw InvalidArgument("predictor '" + s.name + "' changed kind");
        for (std::size_t r = 0; r < data.n_rows(); ++r) {
          if (col.is_missing(r))
            throw InvalidArgument("predictor '" + s.name + "' has missing values (consider centralImp or naOmit)");
          x(static_cast<Eigen::Index>(r), j) = col.number(r);
        }
        ++j;
        continue;
      }
      const std::size_t first = drop_first_ ? 1 : 0;
      const auto w = static_cast<Eigen::Index>(s.categories.size() - std::min(first, s.categories.size()));
      x.block(0, j, x.rows(), w).setZero();
      for (std::size_t r = 0; r < data.n_rows(); ++r) {
        if (col.is_missing(r))
          throw InvalidArgument("predictor '" + s.name + "' has missing values (consider centralImp or naOmit)");
        const auto& label = col.label(r);
        for (std::size_t c = first; c < s.categories.size(); ++c)
          if (s.categories[c] == label) x(static_cast<Eigen::Index>(r), j + static_cast<Eigen::Index>(c - first)) = 1.0;
      }
      j += w;
    }
    return x;
  }

 private:
  struct Source {
    std::string name;
    bool numeric;
    std::vector<std::string> categories;
  };
  std::vector<Source> sources_;
  std::size_t width_ = 0;
  bool drop_first_ = false;
};

/// k nearest neighbours with Euclidean distance on standardised numeric
/// predictors and 0/1 indicators for categorical ones.
class KnnModel final : public Model {
 public:
  KnnModel(const Formula& f, const DataFrame& train, int k, bool weighted) : k_(k), weighted_(weighted) {
    if (k < 1) throw InvalidArgument("knn needs k >= 1");
    if (train.n_rows() == 0) throw InvalidArgument("knn needs at least one training row");
    encoder_ = FeatureEncoder(f, train, false);
    if (encoder_.width() == 0) throw InvalidArgument("knn has no usable predictors");
    x_ = encoder_.encode(train);
    center_ = Eigen::VectorXd::Zero(x_.cols());
    scale_ = Eigen::VectorXd::Ones(x_.cols());
    const auto n = static_cast<double>(x_.rows());
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      if (!encoder_.is_numeric_feature(static_cast<std::size_t>(j))) continue;
      const double mu = x_.col(j).mean();
      const double var = n > 1 ? (x_.col(j).array() - mu).square().sum() / (n - 1) : 0.0;
      center_(j) = mu;
      if (var > 0) scale_(j) = std::sqrt(var);
    }
    x_ = standardize(x_);
    const auto& target = train.column(f.target);
    classification_ = target.is_categorical();
    if (classification_) {
      classes_ = target.categories();
      codes_.assign(target.codes().begin(), target.codes().end());
    } else {
      values_.assign(target.numbers().begin(), target.numbers().end());
    }
  }

  Predictions predict(const DataFrame& test, PredShape want) const override {
    const auto q = standardize(encoder_.encode(test));
    const auto n_train = static_cast<std::size_t>(x_.rows());
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(k_), n_train);
    std::vector<std::pair<double, std::size_t>> dist(n_train);
    std::vector<std::vector<double>> probs;
    std::vector<double> numbers;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      for (std::size_t i = 0; i < n_train; ++i)
        dist[i] = {(x_.row(static_cast<Eigen::Index>(i)) - q.row(r)).squaredNorm(), i};
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      auto weight = [&](std::size_t m) { return weighted_ ? 1.0 / (std::sqrt(dist[m].first) + 1e-12) : 1.0; };
      if (classification_) {
        std::vector<double> votes(classes_.size(), 0.0);
        double total = 0;
        for (std::size_t m = 0; m < k; ++m) {
          const double w = weight(m);
          votes[static_cast<std::size_t>(codes_[dist[m].second])] += w;
          total += w;
        }
        for (auto& v : votes) v /= total;
        probs.push_back(std::move(votes));
      } else {
        double num = 0, den = 0;
        for (std::size_t m = 0; m < k; ++m) {
          num += weight(m) * values_[dist[m].second];
          den += weight(m);
        }
        numbers.push_back(num / den);
      }
    }
    if (classification_) return detail::labels_or_probs(std::move(probs), classes_, want);
    if (want != PredShape::numeric) throw InvalidArgument("class predictions requested for a regression task");
    return Predictions::numeric(std::move(numbers));
  }

 private:
  Eigen::MatrixXd standardize(Eigen::MatrixXd m) const {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) = (m.col(j).array() - center_(j)) / scale_(j);
    return m;
  }

  int k_;
  bool weighted_;
  FeatureEncoder encoder_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd center_, scale_;
  bool classification_ = false;
  std::vector<std::string> classes_;
  std::vector<std::int32_t> codes_;
  std::vector<double> values_;
};

/// Ordinary least squares with an intercept, solved through the normal
/// equations. When the design is singular, `lambda` is added to the
/// non-intercept diagonal so a solution still exists.
class LinRegModel final : public Model {
 public:
  LinRegModel(const Formula& f, const DataFrame& train, double lambda) {
    const auto& target = train.column(f.target);
    if (!target.is_numeric()) throw InvalidArgument("linreg needs a numeric target");
    if (train.n_rows() == 0) throw InvalidArgument("linreg needs at least one training row");
    encoder_ = FeatureEncoder(f, train, true);
    const auto x = design(train);
    Eigen::VectorXd y(static_cast<Eigen::Index>(train.n_rows()));
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
      if (target.is_missing(r)) throw InvalidArgument("linreg target has missing values");
      y(static_cast<Eigen::Index>(r)) = target.number(r);
    }
    Eigen::MatrixXd xtx = x.transpose() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() != Eigen::Success || singular(ldlt)) {
      for (Eigen::Index j = 1; j < xtx.cols(); ++j) xtx(j, j) += lambda;
      ldlt.compute(xtx);
      if (ldlt.info() != Eigen::Success) throw Error("linreg normal equations could not be factored");
    }
    beta_ = ldlt.solve(x.transpose() * y);
    if (!beta_.allFinite()) throw Error("linreg produced non-finite coefficients");
  }

  const Eigen::VectorXd& coefficients() const noexcept { return beta_; }

  Predictions predict(const DataFrame& test, PredShape want) const override {
    if (want != PredShape::numeric) throw InvalidArgument("linreg only produces numeric predictions");
    Eigen::VectorXd yhat = design(test) * beta_;
    return Predictions::numeric(std::vector<double>(yhat.data(), yhat.data() + yhat.size()));
  }

 private:
  Eigen::MatrixXd design(const DataFrame& d) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(d.n_rows()), static_cast<Eigen::Index>(encoder_.width() + 1));
    x.col(0).setOnes();
    if (encoder_.width() > 0) x.rightCols(static_cast<Eigen::Index>(encoder_.width())) = encoder_.encode(d);
    return x;
  }

  static bool singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    const auto d = ldlt.vectorD().cwiseAbs();
    return d.size() > 0 && d.minCoeff() <= 1e-12 * d.maxCoeff();
  }

  FeatureEncoder encoder_;
  Eigen::VectorXd beta_;
};

/// Predicts the training mean.
class MeanBaseline final : public Model {
 public:
  MeanBaseline(const Formula& f, const DataFrame& train) {
    const auto& target = train.column(f.target);
    if (!target.is_numeric()) throw InvalidArgument("meanBaseline needs a numeric target");
    double s = 0;
    std::size_t n = 0;
    for (double v : target.numbers())
      if (!std::isnan(v)) s += v, ++n;
    if (n == 0) throw InvalidArgument("meanBaseline needs at least one training value");
    mean_ = s / static_cast<double>(n);
  }
  Predictions predict(const DataFrame& test, PredShape want) const override {
    if (want != PredShape::numeric) throw InvalidArgument("meanBaseline only produces numeric predictions");
    return Predictions::numeric(std::vector<double>(test.n_rows(), mean_));
  }

 private:
  double mean_ = 0;
};

/// Predicts the training mode; probabilities are the training class
/// frequencies.
class ModeBaseline final : public Model {
 public:
  ModeBaseline(const Formula& f, const DataFrame& train) {
    const auto& target = train.column(f.target);
    if (!target.is_categorical()) throw InvalidArgument("modeBaseline needs a categorical target");
    classes_ = target.categories();
    auto m = detail::mode_code(target.codes(), classes_);
    if (!m) throw InvalidArgument("modeBaseline needs at least one training label");
    mode_ = *m;
    freq_.assign(classes_.size(), 0.0);
    double n = 0;
    for (auto c : target.codes())
      if (c >= 0) freq_[static_cast<std::size_t>(c)] += 1, n += 1;
    for (auto& v : freq_) v /= n;
  }
  Predictions predict(const DataFrame& test, PredShape want) const override {
    if (want == PredShape::numeric) throw InvalidArgument("numeric predictions requested for a classification task");
    if (want == PredShape::labels) return Predictions::of_labels(std::vector<std::int32_t>(test.n_rows(), mode_), classes_);
    std::vector<double> flat;
    for (std::size_t r = 0; r < test.n_rows(); ++r) flat.insert(flat.end(), freq_.begin(), freq_.end());
    return Predictions::probabilities(std::move(flat), classes_);
  }

 private:
  std::vector<std::string> classes_;
  std::int32_t mode_ = 0;
  std::vector<double> freq_;
};

namespace detail {

inline const std::map<std::string, std::vector<std::string>>& builtin_learner_params() {
  static const std::map<std::string, std::vector<std::string>> table{
      {"knn", {"k", "weighted"}}, {"linreg", {"lambda"}}, {"meanBaseline", {}}, {"modeBaseline", {}}};
  return table;
}

}  // namespace detail

/// Rejects learner.pars keys a built-in learner does not take. Names that are
/// not built-in learners are left to their plugin.
inline void check_learner_pars(const std::string& learner, const Json& pars) {
  const auto& table = detail::builtin_learner_params();
  auto it = table.find(learner);
  if (it == table.end() || pars.is_null()) return;
  if (!pars.is_object()) throw InvalidArgument(learner + " parameters must be an object");
  for (const auto& [key, value] : pars.items())
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
      throw InvalidArgument("unknown " + learner + " parameter '" + key + "'");
}

namespace detail {

inline Json value_or_empty(const Json& pars) { return pars.is_null() ? Json::object() : pars; }

}  // namespace detail

/// Built-in learners by name.
inline const std::map<std::string, LearnerFn>& builtin_learners() {
  static const std::map<std::string, LearnerFn> table{
      {"knn",
       [](const Formula& f, const DataFrame& train, const Json& pars, Rng&) -> std::unique_ptr<Model> {
         check_learner_pars("knn", pars);
         const auto p = detail::value_or_empty(pars);
         return std::make_unique<KnnModel>(f, train, p.value("k", 1), p.value("weighted", false));
       }},
      {"linreg",
       [](const Formula& f, const DataFrame& train, const Json& pars, Rng&) -> std::unique_ptr<Model> {
         check_learner_pars("linreg", pars);
         return std::make_unique<LinRegModel>(f, train, detail::value_or_empty(pars).value("lambda", 1e-8));
       }},
      {"meanBaseline",
       [](const Formula& f, const DataFrame& train, const Json& pars, Rng&) -> std::unique_ptr<Model> {
         check_learner_pars("meanBaseline", pars);
         return std::make_unique<MeanBaseline>(f, train);
       }},
      {"modeBaseline",
       [](const Formula& f, const DataFrame& train, const Json& pars, Rng&) -> std::unique_ptr<Model> {
         check_learner_pars("modeBaseline", pars);
         return std::make_unique<ModeBaseline>(f, train);
       }},
  };
  return table;
}

}  // namespace perfest

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perfest/error.hpp"
#include "perfest/frame.hpp"

namespace perfest {

using Json = nlohmann::ordered_json;

enum class PredShape { labels, numeric, probabilities };

inline std::string to_string(PredShape s) {
  switch (s) {
    case PredShape::labels: return "labels";
    case PredShape::numeric: return "numeric";
    case PredShape::probabilities: return "probabilities";
  }
  return "?";
}

/// Model output for a test set: class labels, numbers, or a row-major
/// probability matrix over `class_order`.
struct Predictions {
  PredShape shape = PredShape::numeric;
  std::vector<double> numbers;
  std::vector<std::int32_t> labels;
  std::vector<double> probs;
  std::vector<std::string> class_order;

  static Predictions numeric(std::vector<double> v) {
    Predictions p;
    p.shape = PredShape::numeric;
    p.numbers = std::move(v);
    return p;
  }
  static Predictions of_labels(std::vector<std::int32_t> codes, std::vector<std::string> classes) {
    Predictions p;
    p.shape = PredShape::labels;
    p.labels = std::move(codes);
    p.class_order = std::move(classes);
    p.validate();
    return p;
  }
  static Predictions probabilities(std::vector<double> row_major, std::vector<std::string> classes) {
    Predictions p;
    p.shape = PredShape::probabilities;
    p.probs = std::move(row_major);
    p.class_order = std::move(classes);
    p.validate();
    return p;
  }

  std::size_t n_classes() const noexcept { return class_order.size(); }

  std::size_t size() const noexcept {
    switch (shape) {
      case PredShape::numeric: return numbers.size();
      case PredShape::labels: return labels.size();
      case PredShape::probabilities: return class_order.empty() ? 0 : probs.size() / class_order.size();
    }
    return 0;
  }

  std::span<const double> prob_row(std::size_t row) const {
    return std::span<const double>(probs).subspan(row * n_classes(), n_classes());
  }

  bool has_missing() const {
    if (shape == PredShape::numeric) {
      for (double v : numbers)
        if (std::isnan(v)) return true;
    } else if (shape == PredShape::labels) {
      for (auto c : labels)
        if (c < 0) return true;
    }
    return false;
  }

  /// Throws ContractViolation unless the shape-specific invariants hold.
  void validate() const {
    if (shape == PredShape::labels) {
      for (auto c : labels)
        if (c < kMissingCode || c >= static_cast<std::int32_t>(class_order.size()))
          throw ContractViolation("predicted label code out of range");
    } else if (shape == PredShape::probabilities) {
      if (class_order.empty()) throw ContractViolation("probability predictions without a class order");
      if (probs.size() % class_order.size() != 0) throw ContractViolation("ragged probability matrix");
      for (std::size_t r = 0; r < size(); ++r) {
        double sum = 0;
        for (double p : prob_row(r)) {
          if (!(p >= 0.0)) throw ContractViolation("negative or missing class probability");
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          throw ContractViolation("class probabilities of row " + std::to_string(r) + " sum to " + std::to_string(sum));
      }
    }
  }

  Predictions select(std::span<const std::size_t> rows) const {
    Predictions out;
    out.shape = shape;
    out.class_order = class_order;
    for (auto r : rows) {
      switch (shape) {
        case PredShape::numeric: out.numbers.push_back(numbers.at(r)); break;
        case PredShape::labels: out.labels.push_back(labels.at(r)); break;
        case PredShape::probabilities: {
          auto row = prob_row(r);
          out.probs.insert(out.probs.end(), row.begin(), row.end());
          break;
        }
      }
    }
    return out;
  }

  void append(const Predictions& other) {
    if (other.shape != shape) throw ContractViolation("cannot concatenate predictions of different shapes");
    if (shape != PredShape::numeric && other.class_order != class_order)
      throw ContractViolation("cannot concatenate predictions over different classes");
    numbers.insert(numbers.end(), other.numbers.begin(), other.numbers.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    probs.insert(probs.end(), other.probs.begin(), other.probs.end());
  }
};

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Label predictions; probability matrices collapse by argmax.
inline Predictions to_labels(const Predictions& p) {
  if (p.shape == PredShape::labels) return p;
  if (p.shape == PredShape::numeric) throw InvalidArgument("numeric predictions have no class labels");
  std::vector<std::int32_t> codes;
  codes.reserve(p.size());
  for (std::size_t r = 0; r < p.size(); ++r) codes.push_back(static_cast<std::int32_t>(argmax(p.prob_row(r))));
  return Predictions::of_labels(std::move(codes), p.class_order);
}

/// Square utility matrix: entries[i][j] is the utility of predicting class j
/// when the truth is class i.
struct CostBenefitMatrix {
  std::vector<std::string> class_order;
  std::vector<std::vector<double>> entries;

  void validate() const {
    const auto k = class_order.size();
    if (entries.size() != k) throw InvalidArgument("cost-benefit matrix must be " + std::to_string(k) + "x" + std::to_string(k));
    for (std::size_t i = 0; i < k; ++i) {
      if (entries[i].size() != k) throw InvalidArgument("cost-benefit matrix is not square");
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j && entries[i][j] < 0) throw InvalidArgument("cost-benefit diagonal entries must be >= 0");
        if (i != j && entries[i][j] > 0) throw InvalidArgument("cost-benefit off-diagonal entries must be <= 0");
      }
    }
  }

  /// Reads a nested JSON array laid out in `classes` order.
  static CostBenefitMatrix from_json(const Json& j, std::vector<std::string> classes) {
    CostBenefitMatrix cb;
    cb.class_order = std::move(classes);
    try {
      cb.entries = j.get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception&) {
      throw InvalidArgument("cb.matrix must be a nested numeric array");
    }
    cb.validate();
    return cb;
  }
};

struct Timing {
  double train = 0.0;
  double test = 0.0;
  friend bool operator==(const Timing&, const Timing&) = default;
};

/// Monotonic stopwatch reporting seconds.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// What a workflow hands back for one train/test pair.
struct WorkflowResult {
  Column trues;
  Predictions preds;
  Timing times;
  Json extras = Json::object();
};

}  // namespace perfest

#pragma once

#include <memory>
#include <string>

#include "perfest/frame.hpp"
#include "perfest/rng.hpp"

namespace perfest::testing {

inline PredTask iris_task() {
  auto data = std::make_shared<DataFrame>(read_csv(std::string(PERFEST_TEST_DATA) + "/iris.csv"));
  data->set_name("iris");
  return make_task(parse_formula("Species ~ ."), data);
}

/// y = 2 x1 - x2 + noise, with x1, x2 uniform on [0, 1).
inline PredTask linear_task(std::size_t n, std::uint64_t seed, std::string id = "lin") {
  Rng rng(seed);
  std::vector<double> x1, x2, y;
  for (std::size_t i = 0; i < n; ++i) {
    x1.push_back(rng.unit());
    x2.push_back(rng.unit());
    y.push_back(2 * x1.back() - x2.back() + 0.1 * (rng.unit() - 0.5));
  }
  auto d = std::make_shared<DataFrame>(
      std::vector<Column>{Column::numeric("x1", x1), Column::numeric("x2", x2), Column::numeric("y", y)});
  return make_task(parse_formula("y ~ ."), d, {.id = std::move(id)});
}

/// Two noisy Gaussian blobs labelled "a" and "b".
inline PredTask blob_task(std::size_t n, std::uint64_t seed, std::string id = "blobs") {
  Rng rng(seed);
  std::vector<double> x1, x2;
  std::vector<std::optional<std::string>> y;
  for (std::size_t i = 0; i < n; ++i) {
    const bool b = i % 2 == 1;
    x1.push_back((b ? 1.0 : 0.0) + rng.unit() * 1.2);
    x2.push_back((b ? 0.5 : 0.0) + rng.unit() * 1.2);
    y.push_back(b ? "b" : "a");
  }
  auto d = std::make_shared<DataFrame>(
      std::vector<Column>{Column::numeric("x1", x1), Column::numeric("x2", x2), Column::from_labels("y", y)});
  return make_task(parse_formula("y ~ ."), d, {.id = std::move(id)});
}

}  // namespace perfest::testing

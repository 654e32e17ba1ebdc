#pragma once

// Columnar data frames, CSV ingestion, formulas and predictive tasks.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perfest/error.hpp"

namespace perfest {

enum class ColumnKind { numeric, categorical };

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline constexpr std::int32_t kMissingCode = -1;

/// One named column. Numeric cells are stored as doubles with NaN marking a
/// missing cell; categorical cells as indices into `categories()` with -1
/// marking a missing cell.
class Column {
 public:
  Column() = default;

  static Column numeric(std::string name, std::vector<double> values) {
    for (double v : values) {
      if (std::isinf(v)) throw InvalidArgument("column '" + name + "': non-finite numeric cell");
    }
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::numeric;
    c.numbers_ = std::move(values);
    return c;
  }

  static Column categorical(std::string name, std::vector<std::int32_t> codes,
                            std::vector<std::string> categories) {
    const auto k = static_cast<std::int32_t>(categories.size());
    for (auto code : codes) {
      if (code < kMissingCode || code >= k)
        throw InvalidArgument("column '" + name + "': category code out of range");
    }
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::categorical;
    c.codes_ = std::move(codes);
    c.categories_ = std::move(categories);
    return c;
  }

  /// Builds a categorical column from labels; categories are the sorted
  /// distinct labels unless an explicit ordering is given.
  static Column from_labels(std::string name, const std::vector<std::optional<std::string>>& labels,
                            std::vector<std::string> categories = {}) {
    if (categories.empty()) {
      for (const auto& l : labels)
        if (l) categories.push_back(*l);
      std::sort(categories.begin(), categories.end());
      categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
    }
    std::map<std::string_view, std::int32_t> index;
    for (std::size_t i = 0; i < categories.size(); ++i) index.emplace(categories[i], static_cast<std::int32_t>(i));
    std::vector<std::int32_t> codes;
    codes.reserve(labels.size());
    for (const auto& l : labels) {
      if (!l) {
        codes.push_back(kMissingCode);
        continue;
      }
      auto it = index.find(*l);
      if (it == index.end()) throw InvalidArgument("column '" + name + "': label '" + *l + "' not among categories");
      codes.push_back(it->second);
    }
    return categorical(std::move(name), std::move(codes), std::move(categories));
  }

  const std::string& name() const noexcept { return name_; }
  void rename(std::string name) { name_ = std::move(name); }
  ColumnKind kind() const noexcept { return kind_; }
  bool is_numeric() const noexcept { return kind_ == ColumnKind::numeric; }
  bool is_categorical() const noexcept { return kind_ == ColumnKind::categorical; }
  std::size_t size() const noexcept { return is_numeric() ? numbers_.size() : codes_.size(); }

  bool is_missing(std::size_t row) const {
    return is_numeric() ? std::isnan(numbers_.at(row)) : codes_.at(row) == kMissingCode;
  }
  std::size_t missing_count() const {
    std::size_t m = 0;
    for (std::size_t i = 0; i < size(); ++i) m += is_missing(i) ? 1 : 0;
    return m;
  }

  double number(std::size_t row) const { return numbers_.at(row); }
  std::int32_t code(std::size_t row) const { return codes_.at(row); }
  const std::string& label(std::size_t row) const { return categories_.at(static_cast<std::size_t>(codes_.at(row))); }

  std::span<const double> numbers() const noexcept { return numbers_; }
  std::span<const std::int32_t> codes() const noexcept { return codes_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }

  std::optional<std::int32_t> category_index(std::string_view label) const {
    for (std::size_t i = 0; i < categories_.size(); ++i)
      if (categories_[i] == label) return static_cast<std::int32_t>(i);
    return std::nullopt;
  }

  void set_missing(std::size_t row) {
    if (is_numeric())
      numbers_.at(row) = kMissing;
    else
      codes_.at(row) = kMissingCode;
  }
  void set_number(std::size_t row, double v) {
    if (!is_numeric()) throw InvalidArgument("column '" + name_ + "' is not numeric");
    if (std::isinf(v)) throw InvalidArgument("column '" + name_ + "': non-finite numeric cell");
    numbers_.at(row) = v;
  }
  void set_code(std::size_t row, std::int32_t code) {
    if (!is_categorical()) throw InvalidArgument("column '" + name_ + "' is not categorical");
    if (code < kMissingCode || code >= static_cast<std::int32_t>(categories_.size()))
      throw InvalidArgument("column '" + name_ + "': category code out of range");
    codes_.at(row) = code;
  }
  /// Sets a label, appending it to the categories when new.
  void set_label(std::size_t row, const std::string& label) {
    auto idx = category_index(label);
    if (!idx) {
      categories_.push_back(label);
      idx = static_cast<std::int32_t>(categories_.size() - 1);
    }
    set_code(row, *idx);
  }

  /// Rows in the given order; duplicates allowed.
  Column select(std::span<const std::size_t> rows) const {
    Column out;
    out.name_ = name_;
    out.kind_ = kind_;
    out.categories_ = categories_;
    const auto n = size();
    for (auto r : rows)
      if (r >= n) throw InvalidArgument("row index " + std::to_string(r) + " out of range [0, " + std::to_string(n) + ")");
    if (is_numeric()) {
      out.numbers_.reserve(rows.size());
      for (auto r : rows) out.numbers_.push_back(numbers_[r]);
    } else {
      out.codes_.reserve(rows.size());
      for (auto r : rows) out.codes_.push_back(codes_[r]);
    }
    return out;
  }

  void append_from(const Column& other, std::size_t row) {
    if (other.kind_ != kind_) throw InvalidArgument("column kind mismatch on append");
    if (is_numeric()) {
      numbers_.push_back(other.numbers_.at(row));
    } else if (other.categories_ == categories_) {
      codes_.push_back(other.codes_.at(row));
    } else if (other.is_missing(row)) {
      codes_.push_back(kMissingCode);
    } else {
      codes_.push_back(kMissingCode);
      set_label(codes_.size() - 1, other.label(row));
    }
  }

  /// Cell-wise equality where two missing cells compare equal.
  friend bool operator==(const Column& a, const Column& b) {
    if (a.name_ != b.name_ || a.kind_ != b.kind_ || a.size() != b.size()) return false;
    if (a.is_categorical()) return a.codes_ == b.codes_ && a.categories_ == b.categories_;
    for (std::size_t i = 0; i < a.numbers_.size(); ++i) {
      const double x = a.numbers_[i], y = b.numbers_[i];
      if (std::isnan(x) != std::isnan(y)) return false;
      if (!std::isnan(x) && x != y) return false;
    }
    return true;
  }

 private:
  std::string name_;
  ColumnKind kind_ = ColumnKind::numeric;
  std::vector<double> numbers_;
  std::vector<std::int32_t> codes_;
  std::vector<std::string> categories_;
};

class DataFrame {
 public:
  DataFrame() = default;
  explicit DataFrame(std::vector<Column> columns, std::string name = {})
      : columns_(std::move(columns)), name_(std::move(name)) {
    validate();
  }

  std::size_t n_rows() const noexcept { return columns_.empty() ? n_rows_empty_ : columns_.front().size(); }
  std::size_t n_cols() const noexcept { return columns_.size(); }
  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  Column& column(std::size_t i) { return columns_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].name() == name) return i;
    return std::nullopt;
  }
  bool has(std::string_view name) const { return find(name).has_value(); }

  const Column& column(std::string_view name) const { return columns_[require(name)]; }
  Column& column(std::string_view name) { return columns_[require(name)]; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_) out.push_back(c.name());
    return out;
  }

  void add_column(Column c) {
    if (has(c.name())) throw InvalidArgument("duplicate column name '" + c.name() + "'");
    if (!columns_.empty() && c.size() != n_rows())
      throw InvalidArgument("column '" + c.name() + "' has " + std::to_string(c.size()) + " rows, frame has " +
                            std::to_string(n_rows()));
    columns_.push_back(std::move(c));
  }
  void replace_column(Column c) {
    const auto i = require(c.name());
    if (c.size() != n_rows()) throw InvalidArgument("replacement column '" + c.name() + "' has wrong length");
    columns_[i] = std::move(c);
  }

  DataFrame select_rows(std::span<const std::size_t> rows) const {
    DataFrame out;
    out.name_ = name_;
    out.columns_.reserve(columns_.size());
    for (const auto& c : columns_) out.columns_.push_back(c.select(rows));
    if (columns_.empty()) {
      for (auto r : rows)
        if (r >= n_rows()) throw InvalidArgument("row index " + std::to_string(r) + " out of range");
      out.n_rows_empty_ = rows.size();
    }
    return out;
  }

  /// Rows of `other` appended below this frame's rows (same schema).
  DataFrame concat(const DataFrame& other, std::span<const std::size_t> other_rows) const {
    DataFrame out = *this;
    if (other.n_cols() != n_cols()) throw InvalidArgument("cannot concatenate frames with different schemas");
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto& src = other.column(columns_[c].name());
      for (auto r : other_rows) out.columns_[c].append_from(src, r);
    }
    return out;
  }

  bool row_has_missing(std::size_t row, std::optional<std::size_t> skip_column = std::nullopt) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (skip_column && *skip_column == c) continue;
      if (columns_[c].is_missing(row)) return true;
    }
    return false;
  }

  friend bool operator==(const DataFrame& a, const DataFrame& b) {
    return a.columns_ == b.columns_ && a.n_rows() == b.n_rows();
  }

 private:
  std::size_t require(std::string_view name) const {
    auto i = find(name);
    if (!i) throw InvalidArgument("unknown column '" + std::string(name) + "'");
    return *i;
  }

  void validate() const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].size() != columns_.front().size())
        throw InvalidArgument("column '" + columns_[i].name() + "' length differs from column '" +
                              columns_.front().name() + "'");
      for (std::size_t j = 0; j < i; ++j)
        if (columns_[i].name() == columns_[j].name())
          throw InvalidArgument("duplicate column name '" + columns_[i].name() + "'");
    }
  }

  std::vector<Column> columns_;
  std::string name_;
  std::size_t n_rows_empty_ = 0;
};

inline DataFrame select_rows(const DataFrame& data, std::span<const std::size_t> indices) {
  return data.select_rows(indices);
}

// ---------------------------------------------------------------------------
// CSV

struct CsvOptions {
  std::vector<std::string> na_tokens{"NA", ""};
  bool header_row = true;
  char delimiter = ',';
};

namespace detail {

/// True for integer, decimal and scientific literals; no inf/nan/hex.
inline bool looks_numeric(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  }
  if (digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == s.size();
}

inline std::optional<double> parse_number(std::string_view s) {
  if (!looks_numeric(s)) return std::nullopt;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::string text;
  bool quoted = false;
};

/// RFC 4180 record splitter. Quoted fields may contain delimiters, doubled
/// quotes and line breaks. Records are returned with their starting line.
inline std::vector<std::pair<std::size_t, std::vector<Field>>> split_records(std::string_view text, char delim) {
  std::vector<std::pair<std::size_t, std::vector<Field>>> records;
  std::vector<Field> record;
  Field field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1, record_line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field = Field{};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // a blank line is not a record
    if (!(record.size() == 1 && record[0].text.empty() && !record[0].quoted))
      records.emplace_back(record_line, std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.text.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field.quoted = true;
      field_started = true;
    } else if (ch == delim) {
      end_field();
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (ch == '\n') {
      end_record();
      ++line;
      record_line = line;
    } else {
      field.text.push_back(ch);
      field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field starting on line " + std::to_string(record_line));
  if (field_started || !record.empty()) end_record();
  return records;
}

inline bool needs_quotes(std::string_view s, char delim, const std::vector<std::string>& na_tokens) {
  if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string_view::npos) return true;
  return std::find(na_tokens.begin(), na_tokens.end(), s) != na_tokens.end();
}

}  // namespace detail

/// Parses CSV text. Column kind is numeric iff every non-missing token parses
/// as a number; quoted fields are never treated as missing tokens.
inline DataFrame parse_csv(std::string_view text, const CsvOptions& opts = {}, std::string frame_name = {}) {
  auto records = detail::split_records(text, opts.delimiter);
  if (records.empty()) throw ParseError("empty CSV input");

  std::vector<std::string> names;
  std::size_t first = 0;
  const std::size_t width = records.front().second.size();
  if (opts.header_row) {
    for (auto& f : records.front().second) names.push_back(f.text);
    first = 1;
  } else {
    for (std::size_t c = 0; c < width; ++c) names.push_back("col" + std::to_string(c + 1));
  }
  for (std::size_t r = first; r < records.size(); ++r) {
    if (records[r].second.size() != width)
      throw ParseError("ragged row: record " + std::to_string(r + 1) + " (line " + std::to_string(records[r].first) +
                       ") has " + std::to_string(records[r].second.size()) + " fields, expected " +
                       std::to_string(width));
  }

  auto is_na = [&](const detail::Field& f) {
    return !f.quoted && std::find(opts.na_tokens.begin(), opts.na_tokens.end(), f.text) != opts.na_tokens.end();
  };

  std::vector<Column> columns;
  for (std::size_t c = 0; c < width; ++c) {
    bool numeric = true;
    for (std::size_t r = first; r < records.size() && numeric; ++r) {
      const auto& f = records[r].second[c];
      if (!is_na(f) && !detail::looks_numeric(f.text)) numeric = false;
    }
    if (numeric) {
      std::vector<double> values;
      for (std::size_t r = first; r < records.size(); ++r) {
        const auto& f = records[r].second[c];
        if (is_na(f)) {
          values.push_back(kMissing);
        } else {
          auto v = detail::parse_number(f.text);
          if (!v) throw ParseError("numeric overflow in column '" + names[c] + "' at record " + std::to_string(r + 1));
          values.push_back(*v);
        }
      }
      columns.push_back(Column::numeric(names[c], std::move(values)));
    } else {
      std::vector<std::optional<std::string>> labels;
      for (std::size_t r = first; r < records.size(); ++r) {
        const auto& f = records[r].second[c];
        labels.push_back(is_na(f) ? std::nullopt : std::optional<std::string>(f.text));
      }
      columns.push_back(Column::from_labels(names[c], labels));
    }
  }
  return DataFrame(std::move(columns), std::move(frame_name));
}

inline DataFrame read_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto text = buf.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
  std::string stem = path;
  if (auto slash = stem.find_last_of("/\\"); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
  return parse_csv(text, opts, stem);
}

inline void write_csv(const DataFrame& data, std::ostream& out, const std::string& na_token = "NA",
                      char delimiter = ',') {
  const std::vector<std::string> na{na_token, ""};
  auto emit = [&](const std::string& s, bool protect) {
    if (protect && detail::needs_quotes(s, delimiter, na)) {
      out << '"';
      for (char ch : s) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << s;
    }
  };
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    if (c) out << delimiter;
    emit(data.column(c).name(), true);
  }
  out << '\n';
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t c = 0; c < data.n_cols(); ++c) {
      if (c) out << delimiter;
      const auto& col = data.column(c);
      if (col.is_missing(r))
        out << na_token;
      else if (col.is_numeric())
        out << detail::format_number(col.number(r));
      else
        emit(col.label(r), true);
    }
    out << '\n';
  }
}

inline std::string to_csv(const DataFrame& data, const std::string& na_token = "NA") {
  std::ostringstream os;
  write_csv(data, os, na_token);
  return os.str();
}

// ---------------------------------------------------------------------------
// Formulas

/// `target ~ .` (all other columns) or `target ~ a + b + ...`.
struct Formula {
  std::string target;
  std::optional<std::vector<std::string>> predictors;  // nullopt: every other column

  bool uses_all() const noexcept { return !predictors.has_value(); }
  friend bool operator==(const Formula&, const Formula&) = default;
};

inline std::string to_string(const Formula& f) {
  std::string s = f.target + " ~ ";
  if (f.uses_all()) return s + ".";
  for (std::size_t i = 0; i < f.predictors->size(); ++i) {
    if (i) s += " + ";
    s += (*f.predictors)[i];
  }
  return s;
}

inline Formula parse_formula(std::string_view text) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> Formula {
    throw ParseError("formula syntax error at position " + std::to_string(pos) + ": " + what + " in '" +
                     std::string(text) + "'");
  };
  auto skip_ws = [&] {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  };
  auto ident = [&]() -> std::optional<std::string> {
    skip_ws();
    const auto start = pos;
    auto head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
    auto tail = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
    if (pos >= text.size() || !head(text[pos])) return std::nullopt;
    while (pos < text.size() && tail(text[pos])) ++pos;
    return std::string(text.substr(start, pos - start));
  };

  Formula f;
  auto target = ident();
  if (!target || *target == ".") return fail("expected target name");
  f.target = *target;
  skip_ws();
  if (pos >= text.size() || text[pos] != '~') return fail("expected '~'");
  ++pos;
  skip_ws();
  if (pos < text.size() && text[pos] == '.') {
    const auto save = pos;
    ++pos;
    skip_ws();
    if (pos == text.size()) return f;
    pos = save;
  }
  std::vector<std::string> preds;
  while (true) {
    auto name = ident();
    if (!name || *name == ".") return fail("expected predictor name");
    if (*name == f.target) return fail("target '" + f.target + "' listed among predictors");
    if (std::find(preds.begin(), preds.end(), *name) != preds.end()) return fail("duplicate predictor '" + *name + "'");
    preds.push_back(*name);
    skip_ws();
    if (pos == text.size()) break;
    if (text[pos] != '+') return fail("expected '+'");
    ++pos;
  }
  f.predictors = std::move(preds);
  return f;
}

/// Predictor column names resolved against a frame (frame order for `.`).
inline std::vector<std::string> predictor_names(const Formula& f, const DataFrame& data) {
  if (!f.uses_all()) {
    for (const auto& p : *f.predictors)
      if (!data.has(p)) throw InvalidArgument("unknown predictor column '" + p + "'");
    return *f.predictors;
  }
  std::vector<std::string> out;
  for (const auto& c : data.columns())
    if (c.name() != f.target) out.push_back(c.name());
  return out;
}

/// The target column of `data`, order preserved.
inline Column response_values(const Formula& f, const DataFrame& data) {
  if (!data.has(f.target)) throw InvalidArgument("target column '" + f.target + "' not found");
  return data.column(f.target);
}

// ---------------------------------------------------------------------------
// Predictive tasks

enum class TaskType { classification, regression, timeseries_regression };

inline std::string to_string(TaskType t) {
  switch (t) {
    case TaskType::classification: return "classification";
    case TaskType::regression: return "regression";
    case TaskType::timeseries_regression: return "timeseries-regression";
  }
  return "?";
}

inline TaskType task_type_from_string(std::string_view s) {
  if (s == "classification") return TaskType::classification;
  if (s == "regression") return TaskType::regression;
  if (s == "timeseries-regression") return TaskType::timeseries_regression;
  throw ParseError("unknown task type '" + std::string(s) + "'");
}

class PredTask {
 public:
  PredTask(std::string id, Formula formula, std::shared_ptr<const DataFrame> data, TaskType type, bool owns_copy)
      : id_(std::move(id)), formula_(std::move(formula)), data_(std::move(data)), type_(type), owns_copy_(owns_copy) {}

  const std::string& id() const noexcept { return id_; }
  const Formula& formula() const noexcept { return formula_; }
  const DataFrame& data() const noexcept { return *data_; }
  std::shared_ptr<const DataFrame> data_ptr() const noexcept { return data_; }
  TaskType type() const noexcept { return type_; }
  bool is_classification() const noexcept { return type_ == TaskType::classification; }
  bool owns_copy() const noexcept { return owns_copy_; }
  const Column& target() const { return data_->column(formula_.target); }

  std::string describe() const {
    std::string s = "Prediction Task Object:\n";
    s += "\tTask Name         :: " + id_ + "\n";
    s += "\tTask Type         :: " + to_string(type_) + "\n";
    s += "\tTarget Feature    :: " + formula_.target + "\n";
    s += "\tFormula           :: " + to_string(formula_) + "\n";
    s += "\tTask Data Source  :: ";
    if (owns_copy_)
      s += "internal  " + std::to_string(data_->n_rows()) + "x" + std::to_string(data_->n_cols()) + " data frame.\n";
    else
      s += (data_->name().empty() ? std::string("data") : data_->name()) + "\n";
    return s;
  }

 private:
  std::string id_;
  Formula formula_;
  std::shared_ptr<const DataFrame> data_;
  TaskType type_;
  bool owns_copy_;
};

struct TaskOptions {
  std::string id;            // empty: "<frame name>.<target>"
  bool copy = false;         // snapshot the frame instead of reading the live one
  bool time_series = false;  // numeric targets become timeseries-regression
};

inline PredTask make_task(const Formula& formula, std::shared_ptr<DataFrame> data, const TaskOptions& opts = {}) {
  if (!data) throw InvalidArgument("null data frame");
  if (!data->has(formula.target)) throw InvalidArgument("target column '" + formula.target + "' not found");
  (void)predictor_names(formula, *data);
  const auto& target = data->column(formula.target);
  if (target.missing_count() > 0)
    throw InvalidArgument("target column '" + formula.target + "' has " + std::to_string(target.missing_count()) +
                          " missing values");
  TaskType type = target.is_categorical() ? TaskType::classification : TaskType::regression;
  if (type == TaskType::regression && opts.time_series) type = TaskType::timeseries_regression;
  std::string id = opts.id;
  if (id.empty()) id = (data->name().empty() ? std::string("data") : data->name()) + "." + formula.target;
  std::shared_ptr<const DataFrame> held = opts.copy ? std::make_shared<const DataFrame>(*data) : data;
  return PredTask(std::move(id), formula, std::move(held), type, opts.copy);
}

}  // namespace perfest

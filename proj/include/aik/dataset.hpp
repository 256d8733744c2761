#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aik/error.hpp"
#include "aik/rng.hpp"
#include "aik/types.hpp"

namespace aik {

// Original spellings of the two class labels, kept so masked copies of a
// CSV can be written back with the user's label values.
struct LabelNames {
  std::string positive = "+1";
  std::string negative = "-1";
};

// N x M two-class dataset with per-entry presence. Immutable after
// construction; features are zero wherever presence is false.
class Dataset {
 public:
  Dataset() = default;

  Dataset(RowMatrix features, PresenceMatrix presence, std::vector<Label> labels,
          std::vector<std::string> dim_names = {}, LabelNames label_names = {})
      : features_(std::move(features)),
        presence_(std::move(presence)),
        labels_(std::move(labels)),
        dim_names_(std::move(dim_names)),
        label_names_(std::move(label_names)) {
    if (features_.rows() != presence_.rows() || features_.cols() != presence_.cols()) {
      throw ShapeError("Dataset: features are " + shape_string(features_.rows(), features_.cols()) +
                       " but presence is " + shape_string(presence_.rows(), presence_.cols()));
    }
    if (static_cast<Eigen::Index>(labels_.size()) != features_.rows()) {
      throw ShapeError("Dataset: " + std::to_string(labels_.size()) + " labels for " +
                       std::to_string(features_.rows()) + " rows");
    }
    if (!dim_names_.empty() && static_cast<Eigen::Index>(dim_names_.size()) != features_.cols()) {
      throw ShapeError("Dataset: " + std::to_string(dim_names_.size()) + " dimension names for " +
                       std::to_string(features_.cols()) + " dimensions");
    }
    for (Label l : labels_) {
      if (l != Label::positive && l != Label::negative) {
        throw ParameterError("Dataset: labels must be +1 or -1");
      }
    }
    features_ = presence_.select(features_.array(), 0.0).matrix();
    if (!features_.allFinite()) throw ParameterError("Dataset: non-finite observed feature value");
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }

  const RowMatrix& features() const noexcept { return features_; }
  const PresenceMatrix& presence() const noexcept { return presence_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  Label label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& dim_names() const noexcept { return dim_names_; }
  const LabelNames& label_names() const noexcept { return label_names_; }

  MaskedVector row(std::size_t i) const {
    const auto r = static_cast<Eigen::Index>(i);
    return {features_.row(r).transpose(), presence_.row(r).transpose()};
  }

  std::vector<MaskedVector> samples() const {
    std::vector<MaskedVector> out;
    out.reserve(rows());
    for (std::size_t i = 0; i < rows(); ++i) out.push_back(row(i));
    return out;
  }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
  }

  double missing_fraction() const {
    const auto cells = presence_.size();
    if (cells == 0) return 0.0;
    return static_cast<double>(cells - presence_.count()) / static_cast<double>(cells);
  }

  Dataset select_rows(std::span<const std::size_t> idx) const {
    RowMatrix f(static_cast<Eigen::Index>(idx.size()), features_.cols());
    PresenceMatrix p(static_cast<Eigen::Index>(idx.size()), presence_.cols());
    std::vector<Label> l;
    l.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= rows()) throw ShapeError("Dataset::select_rows: row index out of range");
      const auto r = static_cast<Eigen::Index>(idx[k]);
      f.row(static_cast<Eigen::Index>(k)) = features_.row(r);
      p.row(static_cast<Eigen::Index>(k)) = presence_.row(r);
      l.push_back(labels_[idx[k]]);
    }
    return {std::move(f), std::move(p), std::move(l), dim_names_, label_names_};
  }

  Dataset select_dims(std::span<const std::size_t> dims_idx) const {
    RowMatrix f(features_.rows(), static_cast<Eigen::Index>(dims_idx.size()));
    PresenceMatrix p(presence_.rows(), static_cast<Eigen::Index>(dims_idx.size()));
    std::vector<std::string> names;
    for (std::size_t k = 0; k < dims_idx.size(); ++k) {
      if (dims_idx[k] >= dims()) throw ShapeError("Dataset::select_dims: dimension out of range");
      const auto c = static_cast<Eigen::Index>(dims_idx[k]);
      f.col(static_cast<Eigen::Index>(k)) = features_.col(c);
      p.col(static_cast<Eigen::Index>(k)) = presence_.col(c);
      if (!dim_names_.empty()) names.push_back(dim_names_[dims_idx[k]]);
    }
    return {std::move(f), std::move(p), labels_, std::move(names), label_names_};
  }

  // Same data with a new presence matrix; entries that become missing are
  // zeroed. Values cannot be resurrected: new presence is ANDed with the old.
  Dataset with_presence(const PresenceMatrix& presence) const {
    if (presence.rows() != presence_.rows() || presence.cols() != presence_.cols()) {
      throw ShapeError("Dataset::with_presence: shape mismatch");
    }
    return {features_, presence_ && presence, labels_, dim_names_, label_names_};
  }

 private:
  static std::string shape_string(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

  RowMatrix features_;
  PresenceMatrix presence_;
  std::vector<Label> labels_;
  std::vector<std::string> dim_names_;
  LabelNames label_names_;
};

struct CsvOptions {
  // Column holding the class label; negative values count from the end
  // (-1 is the last column).
  long label_column = -1;
  std::set<std::string> missing_tokens{"", "?", "NaN"};
  // Label value mapped to +1. Empty: the first label value in file order.
  std::string positive_label;
  bool has_header = false;
};

// Feature cells without labels, e.g. rows handed to `predict`.
struct FeatureTable {
  RowMatrix values;
  PresenceMatrix presence;
  std::vector<std::string> dim_names;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

inline RawCsv read_raw_csv(std::istream& in, bool has_header, const std::string& source) {
  RawCsv raw;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (has_header && raw.header.empty() && raw.rows.empty()) {
      raw.header = std::move(cells);
      width = raw.header.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError(source + ": row at line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " columns, expected " + std::to_string(width));
    }
    raw.rows.push_back(std::move(cells));
    raw.line_numbers.push_back(line_no);
  }
  return raw;
}

inline std::size_t resolve_column(long column, std::size_t width, const std::string& source) {
  const long w = static_cast<long>(width);
  const long c = column < 0 ? w + column : column;
  if (c < 0 || c >= w) {
    throw ParseError(source + ": label column " + std::to_string(column) + " out of range for " +
                     std::to_string(width) + " columns");
  }
  return static_cast<std::size_t>(c);
}

inline double parse_number(const std::string& cell, std::size_t line, std::size_t column,
                           const std::string& source) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(source + ": non-numeric cell '" + cell + "' at line " + std::to_string(line) +
                     ", column " + std::to_string(column));
  }
  return v;
}

// Fills values/presence from the raw cells, skipping column `skip` if set.
inline FeatureTable to_feature_table(const RawCsv& raw, std::optional<std::size_t> skip,
                                     const std::set<std::string>& missing, const std::string& source) {
  FeatureTable t;
  const std::size_t width = raw.rows.empty() ? raw.header.size() : raw.rows.front().size();
  const std::size_t m = width - (skip ? 1 : 0);
  const auto n = static_cast<Eigen::Index>(raw.rows.size());
  t.values = RowMatrix::Zero(n, static_cast<Eigen::Index>(m));
  t.presence = PresenceMatrix::Constant(n, static_cast<Eigen::Index>(m), false);
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    Eigen::Index out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (skip && c == *skip) continue;
      const auto& cell = raw.rows[i][c];
      if (!missing.contains(cell)) {
        t.values(static_cast<Eigen::Index>(i), out) = parse_number(cell, raw.line_numbers[i], c, source);
        t.presence(static_cast<Eigen::Index>(i), out) = true;
      }
      ++out;
    }
  }
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (skip && c == *skip) continue;
    t.dim_names.push_back(raw.header[c]);
  }
  return t;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const CsvOptions& opts, const std::string& source = "<csv>") {
  const auto raw = detail::read_raw_csv(in, opts.has_header, source);
  if (raw.rows.empty()) throw ParseError(source + ": no data rows");
  const std::size_t width = raw.rows.front().size();
  const std::size_t label_col = detail::resolve_column(opts.label_column, width, source);

  std::vector<std::string> distinct;
  for (const auto& r : raw.rows) {
    const auto& v = r[label_col];
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
  }
  if (distinct.size() > 2) {
    throw LabelCardinalityError(source + ": label column has " + std::to_string(distinct.size()) +
                                " distinct values, expected 2");
  }
  LabelNames names;
  names.positive = opts.positive_label.empty() ? distinct.front() : opts.positive_label;
  if (std::find(distinct.begin(), distinct.end(), names.positive) == distinct.end()) {
    throw ParseError(source + ": positive label '" + names.positive + "' does not occur in the label column");
  }
  names.negative = "";
  for (const auto& v : distinct) {
    if (v != names.positive) names.negative = v;
  }
  if (distinct.size() < 2) names.negative = names.positive == "-1" ? "+1" : "-1";

  std::vector<Label> labels;
  labels.reserve(raw.rows.size());
  for (const auto& r : raw.rows) labels.push_back(r[label_col] == names.positive ? Label::positive : Label::negative);

  auto table = detail::to_feature_table(raw, label_col, opts.missing_tokens, source);
  return {std::move(table.values), std::move(table.presence), std::move(labels), std::move(table.dim_names),
          std::move(names)};
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_csv(in, opts, path);
}

// Reads feature-only rows. If `label_column` is set, that column is dropped.
// With `expected_dims` given, a file one column wider than expected has its
// `opts.label_column` dropped instead.
inline FeatureTable load_features_csv(const std::string& path, const CsvOptions& opts,
                                      std::optional<long> label_column,
                                      std::optional<std::size_t> expected_dims = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  const auto raw = detail::read_raw_csv(in, opts.has_header, path);
  const std::size_t width = raw.rows.empty() ? raw.header.size() : raw.rows.front().size();
  if (!label_column && expected_dims && width == *expected_dims + 1) label_column = opts.label_column;
  std::optional<std::size_t> skip;
  if (label_column) skip = detail::resolve_column(*label_column, width, path);
  return detail::to_feature_table(raw, skip, opts.missing_tokens, path);
}

// Shortest decimal that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

// Writes the dataset as CSV with the label in the last column. Missing
// entries are written as `missing_token`.
inline void write_csv(std::ostream& out, const Dataset& d, const std::string& missing_token = "?") {
  if (!d.dim_names().empty()) {
    for (const auto& name : d.dim_names()) out << name << ',';
    out << "label\n";
  }
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t t = 0; t < d.dims(); ++t) {
      const auto c = static_cast<Eigen::Index>(t);
      out << (d.presence()(r, c) ? format_double(d.features()(r, c)) : missing_token) << ',';
    }
    out << (d.label(i) == Label::positive ? d.label_names().positive : d.label_names().negative) << '\n';
  }
}

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

inline constexpr int kMaxSplitRetries = 32;

// Uniform row-level split without stratification. Redraws (with a derived
// seed) until the training part holds both classes.
inline Split split(const Dataset& d, const SplitSpec& s) {
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
    throw ParameterError("split: train_fraction must lie strictly between 0 and 1");
  }
  if (d.rows() < 2) throw DegenerateError("split: need at least 2 rows");
  const auto n_train = static_cast<std::size_t>(std::llround(s.train_fraction * static_cast<double>(d.rows())));
  if (n_train == 0 || n_train >= d.rows()) {
    throw DegenerateError("split: train fraction leaves an empty train or test part");
  }

  std::vector<std::size_t> order(d.rows());
  for (int attempt = 0; attempt < kMaxSplitRetries; ++attempt) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMixStream rng(mix_seed(s.seed, static_cast<std::uint64_t>(attempt)));
    deterministic_shuffle(order, rng);
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    bool pos = false, neg = false;
    for (auto i : train) (d.label(i) == Label::positive ? pos : neg) = true;
    if (pos && neg) {
      auto tr = d.select_rows(train);
      auto te = d.select_rows(test);
      return {std::move(tr), std::move(te), std::move(train), std::move(test)};
    }
  }
  throw DegenerateError("split: could not place both classes in the training part after " +
                        std::to_string(kMaxSplitRetries) + " draws");
}

}  // namespace aik

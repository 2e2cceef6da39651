#include "ghsom/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ghsom/error.hpp"

namespace ghsom {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& c : cells)
    if (c.size() >= 2 && c.front() == '"' && c.back() == '"') c = c.substr(1, c.size() - 2);
  return cells;
}

bool parse_number(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Normalization parse_normalization(std::string_view text) {
  if (text == "minmax") return Normalization::minmax;
  if (text == "zscore") return Normalization::zscore;
  fail(ErrorCode::invalid_argument, "normalization must be minmax or zscore");
}

Vector Dataset::normalize(std::span<const double> raw_row) const {
  if (raw_row.size() != scales.size()) fail(ErrorCode::invalid_argument, "dimension mismatch");
  Vector out(raw_row.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = (raw_row[j] - scales[j].offset) / scales[j].scale;
  return out;
}

Vector Dataset::denormalize(std::span<const double> normalized_row) const {
  if (normalized_row.size() != scales.size()) fail(ErrorCode::invalid_argument, "dimension mismatch");
  Vector out(normalized_row.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = normalized_row[j] * scales[j].scale + scales[j].offset;
  return out;
}

Dataset make_dataset(std::string name, std::vector<std::string> feature_names, FeatureMatrix raw,
                     std::vector<std::string> labels, Normalization normalization) {
  if (raw.empty()) fail(ErrorCode::data, "dataset has no rows");
  if (raw.dim() == 0) fail(ErrorCode::data, "dataset has no numeric feature column");
  if (!labels.empty() && labels.size() != raw.rows())
    fail(ErrorCode::data, "label count does not match row count");
  if (feature_names.empty())
    for (std::size_t j = 0; j < raw.dim(); ++j) feature_names.push_back("x" + std::to_string(j));

  Dataset ds;
  ds.name = std::move(name);
  ds.normalization = normalization;
  const std::size_t n = raw.rows();
  for (std::size_t j = 0; j < raw.dim(); ++j) {
    double lo = raw(0, j), hi = raw(0, j), sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, raw(i, j));
      hi = std::max(hi, raw(i, j));
      sum += raw(i, j);
    }
    if (!(lo < hi))
      fail(ErrorCode::data, "column '" + feature_names[j] + "' is constant and cannot be scaled");
    FeatureScale s;
    if (normalization == Normalization::minmax) {
      s.offset = lo;
      s.scale = hi - lo;
    } else {
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += (raw(i, j) - mean) * (raw(i, j) - mean);
      s.offset = mean;
      s.scale = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;
    }
    ds.scales.push_back(s);
  }

  ds.features = FeatureMatrix(n, raw.dim());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < raw.dim(); ++j) {
      double v = (raw(i, j) - ds.scales[j].offset) / ds.scales[j].scale;
      if (normalization == Normalization::minmax) v = std::clamp(v, 0.0, 1.0);
      ds.features(i, j) = v;
    }
  ds.feature_names = std::move(feature_names);
  ds.raw = std::move(raw);
  ds.labels = std::move(labels);
  return ds;
}

Dataset parse_csv(std::string_view text, const CsvOptions& options, std::string name) {
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_numbers;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (trim(line).empty()) continue;
    rows.push_back(split(line, options.delimiter));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) fail(ErrorCode::data, "CSV input is empty");

  std::vector<std::string> header;
  std::size_t first = 0;
  const std::size_t width = rows.front().size();
  if (options.header) {
    for (auto c : rows.front()) header.emplace_back(c);
    first = 1;
  } else {
    for (std::size_t j = 0; j < width; ++j) header.push_back("x" + std::to_string(j));
  }

  std::optional<std::size_t> label_idx;
  if (options.label_column) {
    const std::string& want = *options.label_column;
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == want) label_idx = j;
    if (!label_idx) {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(want.data(), want.data() + want.size(), idx);
      if (ec != std::errc() || ptr != want.data() + want.size() || idx >= width)
        fail(ErrorCode::data, "label column '" + want + "' not found");
      label_idx = idx;
    }
  }

  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < width; ++j)
    if (j != label_idx) feature_names.push_back(header[j]);

  FeatureMatrix raw(0, feature_names.size());
  std::vector<std::string> labels;
  std::size_t rejected = 0;
  Vector values(feature_names.size());
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::string where = "line " + std::to_string(line_numbers[r]);
    if (cells.size() != width)
      fail(ErrorCode::data, where + ": expected " + std::to_string(width) + " cells, found " +
                                std::to_string(cells.size()));
    bool missing = false;
    for (auto c : cells) missing = missing || c.empty();
    if (missing) {
      ++rejected;
      continue;
    }
    std::size_t k = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_idx) continue;
      if (!parse_number(cells[j], values[k]))
        fail(ErrorCode::data, where + ": column '" + header[j] + "' is not numeric ('" +
                                  std::string(cells[j]) + "')");
      ++k;
    }
    raw.append_row(values);
    if (label_idx) labels.emplace_back(cells[*label_idx]);
  }

  Dataset ds = make_dataset(std::move(name), std::move(feature_names), std::move(raw),
                            std::move(labels), options.normalization);
  if (label_idx) ds.label_name = header[*label_idx];
  ds.rejected_rows = rejected;
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), options, path.stem().string());
}

}  // namespace ghsom

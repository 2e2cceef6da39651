#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ghsom/types.hpp"

namespace ghsom {

enum class Normalization { minmax, zscore };

/// normalized = (raw - offset) / scale
struct FeatureScale {
  double offset = 0.0;
  double scale = 1.0;

  bool operator==(const FeatureScale&) const = default;
};

struct CsvOptions {
  char delimiter = ',';
  bool header = true;
  /// Column name (with header) or zero-based index, as text.
  std::optional<std::string> label_column;
  Normalization normalization = Normalization::minmax;
};

struct Dataset {
  std::string name;
  std::vector<std::string> feature_names;
  FeatureMatrix raw;
  FeatureMatrix features;           // normalized
  std::vector<std::string> labels;  // empty when unlabeled
  std::optional<std::string> label_name;
  Normalization normalization = Normalization::minmax;
  std::vector<FeatureScale> scales;
  std::size_t rejected_rows = 0;  // rows skipped for missing values

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.dim(); }
  bool has_labels() const noexcept { return !labels.empty(); }

  Vector normalize(std::span<const double> raw_row) const;
  Vector denormalize(std::span<const double> normalized_row) const;
};

/// Builds the normalized view. Constant columns are rejected
/// (ErrorCode::data) since they cannot be scaled.
Dataset make_dataset(std::string name, std::vector<std::string> feature_names, FeatureMatrix raw,
                     std::vector<std::string> labels, Normalization normalization);

/// Parses CSV text. Rows with an empty cell are skipped and counted; rows
/// with the wrong number of cells or non-numeric features raise
/// ErrorCode::data naming the line and column.
Dataset parse_csv(std::string_view text, const CsvOptions& options, std::string name = "data");

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

Normalization parse_normalization(std::string_view text);

}  // namespace ghsom

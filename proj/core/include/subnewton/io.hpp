#pragma once

// Dataset readers and writers. Loaders either return a validated dense
// Dataset or throw ParseError with a 1-based location.

#include "subnewton/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace subnewton {

/// "label idx:val idx:val ..." with 1-based, strictly distinct indices.
/// Blank lines and lines starting with '#' are skipped. d is the largest
/// index seen unless num_features is given (it must cover every index).
/// Logistic labels map to +1 when positive and -1 otherwise.
Dataset parse_libsvm(std::string_view text, LossKind loss,
                     std::optional<Index> num_features = std::nullopt);
Dataset load_libsvm(const std::filesystem::path& path, LossKind loss,
                    std::optional<Index> num_features = std::nullopt);

/// Rectangular numeric CSV with a header row; `label_column` is 0-based.
Dataset parse_csv(std::string_view text, Index label_column, LossKind loss);
Dataset load_csv(const std::filesystem::path& path, Index label_column, LossKind loss);

/// Values are printed with %.17g so loading reproduces them exactly.
std::string format_libsvm(const Dataset& data);
std::string format_csv(const Dataset& data);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace subnewton

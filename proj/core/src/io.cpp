#include "subnewton/io.hpp"

#include "subnewton/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <vector>

namespace subnewton {

namespace {

// Guards the dense allocation against absurd indices in hostile input.
constexpr Index kMaxDenseEntries = Index{1} << 26;

struct Line {
  std::string_view text;
  std::size_t number;  // 1-based
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back({line, number});
    ++number;
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\v' || c == '\f'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool blank_or_comment(std::string_view line) {
  const std::string_view t = trim(line);
  return t.empty() || t.front() == '#';
}

std::optional<double> parse_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

double map_label(double label, LossKind loss) {
  if (loss == LossKind::Logistic) return label > 0.0 ? 1.0 : -1.0;
  return label;
}

struct Entry {
  Index row;
  Index col;
  double value;
};

}  // namespace

Dataset parse_libsvm(std::string_view text, LossKind loss, std::optional<Index> num_features) {
  if (num_features && *num_features < 1) throw ArgumentError("num_features must be >= 1");
  std::vector<double> labels;
  std::vector<Entry> entries;
  Index max_index = 0;
  std::unordered_set<Index> seen;

  for (const Line& line : split_lines(text)) {
    if (blank_or_comment(line.text)) continue;
    const Index row = static_cast<Index>(labels.size());
    seen.clear();
    std::size_t pos = 0;
    bool have_label = false;
    while (pos < line.text.size()) {
      while (pos < line.text.size() && is_space(line.text[pos])) ++pos;
      if (pos >= line.text.size()) break;
      const std::size_t begin = pos;
      while (pos < line.text.size() && !is_space(line.text[pos])) ++pos;
      const std::string_view token = line.text.substr(begin, pos - begin);
      const std::size_t column = begin + 1;

      if (!have_label) {
        const auto label = parse_double(token);
        if (!label) throw ParseError("invalid label '" + std::string(token) + "'", line.number, column);
        labels.push_back(map_label(*label, loss));
        have_label = true;
        continue;
      }
      if (token.front() == '#') break;
      const std::size_t colon = token.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("expected idx:value, found '" + std::string(token) + "'", line.number,
                         column);
      }
      const std::string_view idx_text = token.substr(0, colon);
      long long idx = 0;
      const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || idx < 1) {
        throw ParseError("invalid feature index '" + std::string(idx_text) + "'", line.number,
                         column);
      }
      const auto value = parse_double(token.substr(colon + 1));
      if (!value) {
        throw ParseError("invalid feature value '" + std::string(token.substr(colon + 1)) + "'",
                         line.number, column + colon + 1);
      }
      if (num_features && idx > *num_features) {
        throw ParseError("feature index " + std::to_string(idx) + " exceeds num_features",
                         line.number, column);
      }
      const Index col = static_cast<Index>(idx - 1);
      if (!seen.insert(col).second) {
        throw ParseError("duplicate feature index " + std::to_string(idx), line.number, column);
      }
      max_index = std::max(max_index, static_cast<Index>(idx));
      entries.push_back({row, col, *value});
    }
  }

  if (labels.empty()) throw ParseError("no data rows", 1);
  const Index n = static_cast<Index>(labels.size());
  const Index d = num_features ? *num_features : max_index;
  if (d < 1) throw ParseError("no feature columns", 1);
  if (d > kMaxDenseEntries / n) throw ParseError("dense matrix would be too large", 1);

  Dataset data;
  data.features = Matrix::Zero(n, d);
  data.responses = Eigen::Map<const Vector>(labels.data(), n);
  for (const Entry& e : entries) data.features(e.row, e.col) = e.value;
  data.validate();
  return data;
}

Dataset parse_csv(std::string_view text, Index label_column, LossKind loss) {
  const std::vector<Line> lines = split_lines(text);
  std::size_t k = 0;
  while (k < lines.size() && trim(lines[k].text).empty()) ++k;
  if (k == lines.size()) throw ParseError("missing header row", 1);

  auto split_fields = [](std::string_view line) {
    std::vector<std::pair<std::string_view, std::size_t>> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t end = line.find(',', start);
      if (end == std::string_view::npos) end = line.size();
      fields.emplace_back(line.substr(start, end - start), start + 1);
      if (end == line.size()) break;
      start = end + 1;
    }
    return fields;
  };

  const auto header = split_fields(lines[k].text);
  const Index width = static_cast<Index>(header.size());
  if (label_column < 0 || label_column >= width) {
    throw ArgumentError("label_column " + std::to_string(label_column) + " is outside the " +
                        std::to_string(width) + " header columns");
  }
  if (width < 2) throw ParseError("need a label column and at least one feature", lines[k].number);

  std::vector<double> values;
  Index n = 0;
  for (std::size_t i = k + 1; i < lines.size(); ++i) {
    if (trim(lines[i].text).empty()) continue;
    const auto fields = split_fields(lines[i].text);
    if (static_cast<Index>(fields.size()) != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       lines[i].number);
    }
    for (const auto& [field, column] : fields) {
      const auto value = parse_double(trim(field));
      if (!value) {
        throw ParseError("non-numeric cell '" + std::string(field) + "'", lines[i].number, column);
      }
      values.push_back(*value);
    }
    ++n;
    if (n > kMaxDenseEntries / width) throw ParseError("dense matrix would be too large", lines[i].number);
  }
  if (n == 0) throw ParseError("no data rows", lines[k].number);

  Dataset data;
  data.features.resize(n, width - 1);
  data.responses.resize(n);
  for (Index r = 0; r < n; ++r) {
    Index out = 0;
    for (Index c = 0; c < width; ++c) {
      const double v = values[static_cast<std::size_t>(r * width + c)];
      if (c == label_column) {
        data.responses[r] = map_label(v, loss);
      } else {
        data.features(r, out++) = v;
      }
    }
  }
  data.validate();
  return data;
}

Dataset load_libsvm(const std::filesystem::path& path, LossKind loss,
                    std::optional<Index> num_features) {
  return parse_libsvm(read_text_file(path), loss, num_features);
}

Dataset load_csv(const std::filesystem::path& path, Index label_column, LossKind loss) {
  return parse_csv(read_text_file(path), label_column, loss);
}

std::string format_libsvm(const Dataset& data) {
  data.validate();
  std::string out;
  char buf[64];
  for (Index r = 0; r < data.rows(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", data.responses[r]);
    out += buf;
    for (Index c = 0; c < data.cols(); ++c) {
      const double v = data.features(r, c);
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(c + 1), v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string format_csv(const Dataset& data) {
  data.validate();
  std::string out = "label";
  for (Index c = 0; c < data.cols(); ++c) out += ",x" + std::to_string(c + 1);
  out += '\n';
  char buf[32];
  for (Index r = 0; r < data.rows(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", data.responses[r]);
    out += buf;
    for (Index c = 0; c < data.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", data.features(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace subnewton

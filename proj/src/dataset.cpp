#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wagmf/problems.hpp"

namespace wagmf {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw Error(ErrorKind::ParseError, path.string() + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_payload(const std::vector<unsigned char>& bytes, std::size_t offset, std::size_t count,
                    const std::filesystem::path& path) {
  if (bytes.size() < offset + count) {
    throw Error(ErrorKind::ParseError, path.string() + ": payload truncated at offset " +
                                           std::to_string(bytes.size()) + ", expected " +
                                           std::to_string(offset + count) + " bytes");
  }
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    std::ostringstream os;
    os << path.string() << ": magic 0x" << std::hex << got << ", expected 0x" << want;
    throw Error(ErrorKind::MagicMismatch, os.str());
  }
}

double parse_field(std::string_view field, std::size_t line, std::size_t column) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                           ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    std::vector<double> values;
    std::string_view rest(line);
    std::size_t column = 1;
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_field(rest.substr(0, comma), line_no, column));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
      ++column;
    }
    if (values.size() < 2) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": need features and a label");
    }
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                             " columns, got " + std::to_string(values.size()));
    }
    const double label = values.back();
    if (label != std::floor(label) || label < 0) {
      throw Error(ErrorKind::LabelOutOfRange, "line " + std::to_string(line_no) + ": label must be a non-negative integer");
    }
    labels.push_back(static_cast<int>(label));
    values.pop_back();
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorKind::ParseError, path.string() + ": no samples");

  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j + 1 < width; ++j)
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  data.labels = std::move(labels);
  data.classes = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  data.validate();
  return data;
}

}  // namespace

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  expect_magic(read_be32(bytes, 0, path), kIdxLabelsMagic, path);
  const std::size_t count = read_be32(bytes, 4, path);
  expect_payload(bytes, 8, count, path);
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

Eigen::MatrixXd load_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  expect_magic(read_be32(bytes, 0, path), kIdxImagesMagic, path);
  const std::size_t count = read_be32(bytes, 4, path);
  const std::size_t rows = read_be32(bytes, 8, path);
  const std::size_t cols = read_be32(bytes, 12, path);
  const std::size_t pixels = rows * cols;
  expect_payload(bytes, 16, count * pixels, path);
  Eigen::MatrixXd images(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < pixels; ++j)
      images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bytes[16 + i * pixels + j] / 255.0;
  return images;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::filesystem::path& labels_path) {
  if (format == DatasetFormat::Csv) return load_csv(path);
  if (labels_path.empty()) throw Error(ErrorKind::ParseError, "idx format needs a label file");
  Dataset data;
  data.features = load_idx_images(path);
  data.labels = load_idx_labels(labels_path);
  if (static_cast<Eigen::Index>(data.labels.size()) != data.features.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "idx image and label counts differ");
  }
  if (data.labels.empty()) throw Error(ErrorKind::ParseError, "idx files hold no samples");
  data.classes = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  data.validate();
  return data;
}

}  // namespace wagmf

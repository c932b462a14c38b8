// Copyright 2026 The rdnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rdnet/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rdnet/random.hpp"

namespace rdnet {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<unsigned char> read_all_bytes(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (file.bad()) throw IoError("read failure on '" + path + "'");
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                        std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size())
    throw IdxError(IdxError::Code::truncated,
                   "'" + path + "': truncated header");
  return (std::uint32_t(bytes[offset]) << 24) |
         (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) |
         std::uint32_t(bytes[offset + 3]);
}

void require_finite(const MatrixX<double>& samples, const std::string& what) {
  if (!samples.allFinite())
    throw NumericalError(what + ": non-finite sample entries");
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

double parse_double(const std::string& token, const std::string& context) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw IoError(context + ": cannot parse number '" + token + "'");
  return value;
}

std::vector<std::string> split_fields(const std::string& line, bool comma_only) {
  std::vector<std::string> fields;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) {
      fields.push_back(current);
      current.clear();
    }
  };
  for (const char c : line) {
    if (c == ',' || c == '\r' || (!comma_only && (c == ' ' || c == '\t')))
      flush();
    else
      current.push_back(c);
  }
  flush();
  return fields;
}

}  // namespace

MatrixX<double> load_idx_images(const std::string& path) {
  const auto bytes = read_all_bytes(path);
  const auto magic = read_be32(bytes, 0, path);
  if (magic != kIdxImageMagic)
    throw IdxError(IdxError::Code::bad_magic,
                   "'" + path + "': expected image magic 0x803, got " +
                       std::to_string(magic));
  const std::size_t count = read_be32(bytes, 4, path);
  const std::size_t rows = read_be32(bytes, 8, path);
  const std::size_t cols = read_be32(bytes, 12, path);
  const std::size_t pixels = rows * cols;
  if (bytes.size() < 16 + count * pixels)
    throw IdxError(IdxError::Code::truncated,
                   "'" + path + "': payload shorter than declared " +
                       std::to_string(count) + " images");

  MatrixX<double> samples(static_cast<Index>(pixels), static_cast<Index>(count));
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t i = 0; i < pixels; ++i)
      samples(static_cast<Index>(i), static_cast<Index>(j)) =
          static_cast<double>(bytes[16 + j * pixels + i]) / 255.0;
  return samples;
}

std::vector<int> load_idx_labels(const std::string& path) {
  const auto bytes = read_all_bytes(path);
  const auto magic = read_be32(bytes, 0, path);
  if (magic != kIdxLabelMagic)
    throw IdxError(IdxError::Code::bad_magic,
                   "'" + path + "': expected label magic 0x801, got " +
                       std::to_string(magic));
  const std::size_t count = read_be32(bytes, 4, path);
  if (bytes.size() < 8 + count)
    throw IdxError(IdxError::Code::truncated,
                   "'" + path + "': payload shorter than declared " +
                       std::to_string(count) + " labels");
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i)
    labels[i] = static_cast<int>(bytes[8 + i]);
  return labels;
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  Dataset dataset;
  dataset.samples = load_idx_images(images_path);
  dataset.labels = load_idx_labels(labels_path);
  if (static_cast<std::size_t>(dataset.samples.cols()) != dataset.labels.size())
    throw IdxError(IdxError::Code::count_mismatch,
                   "count mismatch: " + std::to_string(dataset.samples.cols()) +
                       " images vs " + std::to_string(dataset.labels.size()) +
                       " labels");
  const int max_label =
      dataset.labels.empty()
          ? -1
          : *std::max_element(dataset.labels.begin(), dataset.labels.end());
  dataset.class_count = max_label + 1;
  dataset.provenance = "idx:" + images_path;
  require_finite(dataset.samples, "load_idx");
  return dataset;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.class_count < 1 || spec.dim < 1 || spec.samples_per_class < 1)
    throw ParameterError("synthetic spec: counts must be positive");
  if (spec.subspace_dim < 1 || spec.subspace_dim > spec.dim)
    throw ParameterError("synthetic spec: subspace dim must lie in [1, dim]");
  if (!(spec.noise_sigma >= 0.0))
    throw ParameterError("synthetic spec: noise sigma must be >= 0");
  const Index total_basis = spec.class_count * spec.subspace_dim;
  if (spec.orthogonal_bases && total_basis > spec.dim)
    throw ParameterError(
        "synthetic spec: orthogonal bases need class_count * subspace_dim <= "
        "dim, got " +
        std::to_string(total_basis) + " > " + std::to_string(spec.dim));

  Rng rng(spec.seed);
  const auto orthonormalize = [](const MatrixX<double>& gaussian) {
    Eigen::HouseholderQR<MatrixX<double>> qr(gaussian);
    MatrixX<double> q = MatrixX<double>(qr.householderQ())
                            .leftCols(gaussian.cols());
    const MatrixX<double> r =
        qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < gaussian.cols(); ++i)
      if (r(i, i) < 0.0) q.col(i) = -q.col(i);  // deterministic sign
    return q;
  };

  std::vector<MatrixX<double>> bases(spec.class_count);
  if (spec.orthogonal_bases) {
    const MatrixX<double> frame =
        orthonormalize(rng.normal_matrix(spec.dim, total_basis));
    for (Index j = 0; j < spec.class_count; ++j)
      bases[j] = frame.middleCols(j * spec.subspace_dim, spec.subspace_dim);
  } else {
    for (Index j = 0; j < spec.class_count; ++j)
      bases[j] = orthonormalize(rng.normal_matrix(spec.dim, spec.subspace_dim));
  }

  Dataset dataset;
  const Index m = spec.class_count * spec.samples_per_class;
  dataset.samples.resize(spec.dim, m);
  dataset.labels.resize(m);
  dataset.class_count = spec.class_count;
  Index column = 0;
  for (Index j = 0; j < spec.class_count; ++j) {
    for (Index t = 0; t < spec.samples_per_class; ++t, ++column) {
      const VectorX<double> coeffs =
          rng.normal_matrix(spec.subspace_dim, 1);
      const VectorX<double> noise = rng.normal_matrix(spec.dim, 1);
      dataset.samples.col(column) =
          bases[j] * coeffs + spec.noise_sigma * noise;
      dataset.labels[column] = static_cast<int>(j);
    }
  }
  dataset.provenance = "synthetic:seed=" + std::to_string(spec.seed);
  return dataset;
}

DatasetSplit split_dataset(const Dataset& dataset, Index train_per_class) {
  if (dataset.labels.empty())
    throw ParameterError("split_dataset needs a labeled dataset");
  if (train_per_class < 1)
    throw ParameterError("split_dataset: train_per_class must be positive");

  std::vector<Index> train_cols, test_cols;
  std::vector<Index> seen(dataset.class_count, 0);
  for (Index j = 0; j < dataset.sample_count(); ++j) {
    const int label = dataset.labels[static_cast<std::size_t>(j)];
    if (label < 0 || label >= dataset.class_count)
      throw ParameterError("split_dataset: label out of range");
    if (seen[label]++ < train_per_class)
      train_cols.push_back(j);
    else
      test_cols.push_back(j);
  }
  for (Index c = 0; c < dataset.class_count; ++c)
    if (seen[c] < train_per_class)
      throw ParameterError("split_dataset: class " + std::to_string(c) +
                           " has only " + std::to_string(seen[c]) +
                           " samples, needs " + std::to_string(train_per_class));

  const auto take = [&](const std::vector<Index>& cols, const char* tag) {
    Dataset part;
    part.samples.resize(dataset.dim(), static_cast<Index>(cols.size()));
    part.labels.resize(cols.size());
    part.class_count = dataset.class_count;
    part.provenance = dataset.provenance + ":" + tag;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      part.samples.col(static_cast<Index>(i)) = dataset.samples.col(cols[i]);
      part.labels[i] = dataset.labels[static_cast<std::size_t>(cols[i])];
    }
    return part;
  };
  return {take(train_cols, "train"), take(test_cols, "test")};
}

void write_table(const MatrixX<double>& rows,
                 const std::vector<std::string>& columns,
                 const std::string& path) {
  if (rows.size() > 0 && static_cast<std::size_t>(rows.cols()) != columns.size())
    throw DimensionError("write_table: " + std::to_string(rows.cols()) +
                         " data columns vs " + std::to_string(columns.size()) +
                         " headers");
  std::ofstream file(path);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) file << ',';
    file << columns[c];
  }
  file << '\n';
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) {
      if (c) file << ',';
      file << format_double(rows(r, c));
    }
    file << '\n';
  }
  if (!file) throw IoError("write failure on '" + path + "'");
}

Table read_table(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(file, line))
    throw IoError("'" + path + "': empty table");
  Table table;
  table.columns = split_fields(line, /*comma_only=*/true);

  std::vector<std::vector<double>> parsed;
  while (std::getline(file, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line, /*comma_only=*/true);
    if (fields.size() != table.columns.size())
      throw IoError("'" + path + "': row " + std::to_string(parsed.size() + 1) +
                    " has " + std::to_string(fields.size()) + " fields, header has " +
                    std::to_string(table.columns.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& field : fields)
      row.push_back(parse_double(field, "'" + path + "'"));
    parsed.push_back(std::move(row));
  }

  table.rows.resize(static_cast<Index>(parsed.size()),
                    static_cast<Index>(table.columns.size()));
  for (std::size_t r = 0; r < parsed.size(); ++r)
    for (std::size_t c = 0; c < parsed[r].size(); ++c)
      table.rows(static_cast<Index>(r), static_cast<Index>(c)) = parsed[r][c];
  return table;
}

MatrixX<double> read_matrix_text(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<double>> parsed;
  std::string line;
  while (std::getline(file, line)) {
    const auto fields = split_fields(line, /*comma_only=*/false);
    if (fields.empty()) continue;
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& field : fields)
      row.push_back(parse_double(field, "'" + path + "'"));
    if (!parsed.empty() && row.size() != parsed.front().size())
      throw IoError("'" + path + "': ragged rows (" +
                    std::to_string(row.size()) + " vs " +
                    std::to_string(parsed.front().size()) + " fields)");
    parsed.push_back(std::move(row));
  }
  if (parsed.empty()) throw IoError("'" + path + "': no numeric rows");

  // One sample per line on disk; transpose to samples-as-columns.
  MatrixX<double> samples(static_cast<Index>(parsed.front().size()),
                          static_cast<Index>(parsed.size()));
  for (std::size_t r = 0; r < parsed.size(); ++r)
    for (std::size_t c = 0; c < parsed[r].size(); ++c)
      samples(static_cast<Index>(c), static_cast<Index>(r)) = parsed[r][c];
  require_finite(samples, "read_matrix_text");
  return samples;
}

std::vector<int> read_labels_text(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path + "'");
  std::vector<int> labels;
  std::string line;
  while (std::getline(file, line)) {
    const auto fields = split_fields(line, /*comma_only=*/false);
    for (const auto& field : fields) {
      const double value = parse_double(field, "'" + path + "'");
      const int label = static_cast<int>(value);
      if (static_cast<double>(label) != value || label < 0)
        throw IoError("'" + path + "': label '" + field +
                      "' is not a nonnegative integer");
      labels.push_back(label);
    }
  }
  if (labels.empty()) throw IoError("'" + path + "': no labels");
  return labels;
}

VectorX<double> parse_number_list(const std::string& text) {
  const auto fields = split_fields(text, /*comma_only=*/false);
  if (fields.empty())
    throw ParameterError("empty number list");
  VectorX<double> values(static_cast<Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i)
    values(static_cast<Index>(i)) = parse_double(fields[i], "number list");
  return values;
}

}  // namespace rdnet

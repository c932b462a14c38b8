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
//
// Dataset ingestion (IDX and delimited text), synthetic low-rank dataset
// generation, and plot-ready table emission. Samples are always stored as
// columns of a p x m matrix.

#ifndef RDNET_DATA_IO_HPP
#define RDNET_DATA_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rdnet/core.hpp"
#include "rdnet/errors.hpp"

namespace rdnet {

struct Dataset {
  MatrixX<double> samples;  // p x m, one sample per column
  std::vector<int> labels;  // empty when unlabeled, else size m, values in [0, k)
  Index class_count = 0;
  std::string provenance;

  Index dim() const { return samples.rows(); }
  Index sample_count() const { return samples.cols(); }
};

/// Low-rank multi-class generator: each sample is basis * coefficients plus
/// isotropic noise, with per-class orthonormal bases.
struct SyntheticSpec {
  Index class_count = 3;
  Index dim = 20;
  Index subspace_dim = 2;
  Index samples_per_class = 100;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  // Draw the k bases as disjoint column blocks of one orthonormal frame;
  // requires class_count * subspace_dim <= dim.
  bool orthogonal_bases = true;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Header row plus rectangular numeric payload.
struct Table {
  std::vector<std::string> columns;
  MatrixX<double> rows;
};

/// Reads a big-endian IDX image file into a (rows*cols) x m matrix with
/// pixel values scaled to [0, 1] as value / 255.
MatrixX<double> load_idx_images(const std::string& path);

/// Reads a big-endian IDX label file.
std::vector<int> load_idx_labels(const std::string& path);

/// Loads a paired image/label set; the counts must agree.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

Dataset generate_synthetic(const SyntheticSpec& spec);

/// Stratified split: the first train_per_class samples of each class (in
/// dataset order) go to train, the rest to test.
DatasetSplit split_dataset(const Dataset& dataset, Index train_per_class);

/// Comma-separated table with a header row; floats printed with 17
/// significant digits so parsing recovers every bit.
void write_table(const MatrixX<double>& rows,
                 const std::vector<std::string>& columns,
                 const std::string& path);

Table read_table(const std::string& path);

/// Headerless numeric text: one sample per line, comma or whitespace
/// separated, returned transposed to the p x m convention.
MatrixX<double> read_matrix_text(const std::string& path);

/// One integer class label per line.
std::vector<int> read_labels_text(const std::string& path);

/// Parses "1.0,0.9,0.8" style comma-separated numbers.
VectorX<double> parse_number_list(const std::string& text);

}  // namespace rdnet

#endif  // RDNET_DATA_IO_HPP

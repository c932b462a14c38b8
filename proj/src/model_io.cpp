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

#include "rdnet/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace rdnet {

namespace {

constexpr char kMagic[4] = {'R', 'D', 'N', 'M'};
constexpr std::uint32_t kVersion = 1;

constexpr std::uint8_t kHasNetwork = 1;
constexpr std::uint8_t kHasPca = 2;

class Writer {
 public:
  explicit Writer(const std::string& path)
      : path_(path), file_(path, std::ios::binary) {
    if (!file_) throw IoError("cannot open '" + path + "' for writing");
  }

  void u8(std::uint8_t value) { raw(&value, 1); }

  void u32(std::uint32_t value) {
    std::uint8_t bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = (value >> (8 * i)) & 0xff;
    raw(bytes, 4);
  }

  void i64(std::int64_t value) {
    std::uint8_t bytes[8];
    const auto u = static_cast<std::uint64_t>(value);
    for (int i = 0; i < 8; ++i) bytes[i] = (u >> (8 * i)) & 0xff;
    raw(bytes, 8);
  }

  void f64(double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, 8);
    std::uint8_t bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = (bits >> (8 * i)) & 0xff;
    raw(bytes, 8);
  }

  void matrix(const MatrixX<double>& m) {
    i64(m.rows());
    i64(m.cols());
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }

  void vector(const VectorX<double>& v) {
    i64(v.size());
    for (Index i = 0; i < v.size(); ++i) f64(v(i));
  }

  void finish() {
    file_.flush();
    if (!file_) throw IoError("write failure on '" + path_ + "'");
  }

 private:
  void raw(const std::uint8_t* data, std::size_t size) {
    file_.write(reinterpret_cast<const char*>(data),
                static_cast<std::streamsize>(size));
  }

  std::string path_;
  std::ofstream file_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "'");
    bytes_.assign((std::istreambuf_iterator<char>(file)),
                  std::istreambuf_iterator<char>());
    if (file.bad()) throw IoError("read failure on '" + path + "'");
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[offset_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i)
      value |= std::uint32_t(static_cast<unsigned char>(bytes_[offset_++]))
               << (8 * i);
    return value;
  }

  std::int64_t i64() {
    need(8);
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i)
      value |= std::uint64_t(static_cast<unsigned char>(bytes_[offset_++]))
               << (8 * i);
    return static_cast<std::int64_t>(value);
  }

  double f64() {
    const auto bits = static_cast<std::uint64_t>(i64());
    double value;
    std::memcpy(&value, &bits, 8);
    return value;
  }

  MatrixX<double> matrix() {
    const Index rows = checked_dim(i64(), "matrix rows");
    const Index cols = checked_dim(i64(), "matrix cols");
    MatrixX<double> m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }

  VectorX<double> vector() {
    const Index size = checked_dim(i64(), "vector size");
    VectorX<double> v(size);
    for (Index i = 0; i < size; ++i) v(i) = f64();
    return v;
  }

  Index checked_dim(std::int64_t value, const char* what) {
    if (value < 0 || value > (1 << 28))
      throw IoError("'" + path_ + "': implausible " + what + " " +
                    std::to_string(value));
    return static_cast<Index>(value);
  }

  void need(std::size_t count) {
    if (offset_ + count > bytes_.size())
      throw IoError("'" + path_ + "': truncated model file at offset " +
                    std::to_string(offset_));
  }

  const std::string path_;
  std::vector<char> bytes_;
  std::size_t offset_ = 0;
};

void write_config(Writer& w, const TrainConfig& config) {
  w.f64(config.epsilon_sq);
  w.f64(config.eta);
  w.f64(config.lambda_u);
  w.f64(config.delta);
  w.i64(config.layer_count);
  w.u8(config.mode == CodingMode::adaptive ? 0 : 1);
  w.f64(config.ns_energy_threshold);
  w.i64(config.ns_rank_override);
}

TrainConfig read_config(Reader& r) {
  TrainConfig config;
  config.epsilon_sq = r.f64();
  config.eta = r.f64();
  config.lambda_u = r.f64();
  config.delta = r.f64();
  config.layer_count = r.checked_dim(r.i64(), "layer count");
  config.mode = r.u8() == 0 ? CodingMode::adaptive : CodingMode::fixed_alpha_1;
  config.ns_energy_threshold = r.f64();
  config.ns_rank_override = r.checked_dim(r.i64(), "ns rank override");
  return config;
}

}  // namespace

void save_model(const ModelBundle& bundle, const std::string& path) {
  if (!bundle.network && !bundle.pca)
    throw ParameterError("refusing to save an empty model bundle");

  Writer w(path);
  w.u8(static_cast<std::uint8_t>(kMagic[0]));
  w.u8(static_cast<std::uint8_t>(kMagic[1]));
  w.u8(static_cast<std::uint8_t>(kMagic[2]));
  w.u8(static_cast<std::uint8_t>(kMagic[3]));
  w.u32(kVersion);
  std::uint8_t flags = 0;
  if (bundle.network) flags |= kHasNetwork;
  if (bundle.pca) flags |= kHasPca;
  w.u8(flags);

  if (bundle.pca) {
    const PcaModel& pca = *bundle.pca;
    w.i64(pca.input_dim);
    w.i64(pca.output_dim);
    w.f64(pca.cumulative_variance_ratio);
    w.matrix(pca.components);
    w.vector(pca.component_eigenvalues);
    w.vector(pca.mean_vector);
  }

  if (bundle.network) {
    const TrainedNetwork& network = *bundle.network;
    write_config(w, network.config);
    w.i64(network.dim);
    w.i64(network.class_count);
    w.i64(static_cast<std::int64_t>(network.layers.size()));
    for (const auto& layer : network.layers) {
      w.i64(layer.layer);
      w.f64(layer.alpha);
      w.matrix(layer.expansion);
      w.vector(layer.class_alphas);
      for (const auto& compression : layer.compressions) w.matrix(compression);
    }
    w.i64(static_cast<std::int64_t>(network.ns_bases.size()));
    for (const auto& basis : network.ns_bases) w.matrix(basis);
    w.i64(static_cast<std::int64_t>(network.objective_trace.size()));
    for (const double value : network.objective_trace) w.f64(value);
  }
  w.finish();
}

ModelBundle load_model(const std::string& path) {
  Reader r(path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("'" + path + "' is not a model file (bad magic)");
  const auto version = r.u32();
  if (version != kVersion)
    throw IoError("'" + path + "': unsupported model version " +
                  std::to_string(version));
  const auto flags = r.u8();

  ModelBundle bundle;
  if (flags & kHasPca) {
    PcaModel pca;
    pca.input_dim = r.checked_dim(r.i64(), "pca input dim");
    pca.output_dim = r.checked_dim(r.i64(), "pca output dim");
    pca.cumulative_variance_ratio = r.f64();
    pca.components = r.matrix();
    pca.component_eigenvalues = r.vector();
    pca.mean_vector = r.vector();
    if (pca.components.rows() != pca.input_dim ||
        pca.components.cols() != pca.output_dim)
      throw IoError("'" + path + "': PCA component shape mismatch");
    bundle.pca = std::move(pca);
  }

  if (flags & kHasNetwork) {
    TrainedNetwork network;
    network.config = read_config(r);
    network.dim = r.checked_dim(r.i64(), "network dim");
    network.class_count = r.checked_dim(r.i64(), "class count");
    const Index layer_count = r.checked_dim(r.i64(), "stored layer count");
    network.layers.reserve(static_cast<std::size_t>(layer_count));
    for (Index l = 0; l < layer_count; ++l) {
      LayerParams layer;
      layer.layer = r.checked_dim(r.i64(), "layer index");
      layer.alpha = r.f64();
      layer.expansion = r.matrix();
      layer.class_alphas = r.vector();
      if (layer.class_alphas.size() != network.class_count)
        throw IoError("'" + path + "': layer alpha count mismatch");
      layer.compressions.reserve(static_cast<std::size_t>(network.class_count));
      for (Index j = 0; j < network.class_count; ++j)
        layer.compressions.push_back(r.matrix());
      network.layers.push_back(std::move(layer));
    }
    const Index basis_count = r.checked_dim(r.i64(), "basis count");
    network.ns_bases.reserve(static_cast<std::size_t>(basis_count));
    for (Index t = 0; t < basis_count; ++t)
      network.ns_bases.push_back(r.matrix());
    const Index trace_count = r.checked_dim(r.i64(), "trace length");
    network.objective_trace.resize(static_cast<std::size_t>(trace_count));
    for (Index i = 0; i < trace_count; ++i)
      network.objective_trace[static_cast<std::size_t>(i)] = r.f64();
    bundle.network = std::move(network);
  }
  return bundle;
}

}  // namespace rdnet

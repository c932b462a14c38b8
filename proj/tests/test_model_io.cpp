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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rdnet/data_io.hpp"
#include "rdnet/model_io.hpp"
#include "rdnet/random.hpp"

using namespace rdnet;

namespace {

std::vector<char> slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  REQUIRE(file.good());
  return {(std::istreambuf_iterator<char>(file)),
          std::istreambuf_iterator<char>()};
}

TrainedNetwork tiny_network() {
  SyntheticSpec spec;
  spec.class_count = 2;
  spec.dim = 6;
  spec.subspace_dim = 1;
  spec.samples_per_class = 8;
  spec.noise_sigma = 0.05;
  spec.seed = 5;
  const auto dataset = generate_synthetic(spec);

  TrainConfig config;
  config.layer_count = 3;
  return train(dataset.samples, dataset.labels, config);
}

}  // namespace

TEST_CASE("network bundles round-trip bit-exactly and write identical bytes") {
  const auto network = tiny_network();
  ModelBundle bundle;
  bundle.network = network;

  const std::string path_a = "/tmp/rdnet_model_a.bin";
  const std::string path_b = "/tmp/rdnet_model_b.bin";
  save_model(bundle, path_a);
  save_model(bundle, path_b);
  CHECK(slurp(path_a) == slurp(path_b));

  const auto loaded = load_model(path_a);
  REQUIRE(loaded.network.has_value());
  CHECK_FALSE(loaded.pca.has_value());

  const auto& restored = *loaded.network;
  CHECK(restored.dim == network.dim);
  CHECK(restored.class_count == network.class_count);
  CHECK(restored.config.epsilon_sq == network.config.epsilon_sq);
  CHECK(restored.config.eta == network.config.eta);
  CHECK(restored.config.lambda_u == network.config.lambda_u);
  CHECK(restored.config.delta == network.config.delta);
  CHECK(restored.config.layer_count == network.config.layer_count);
  CHECK(restored.config.mode == network.config.mode);
  CHECK(restored.config.ns_energy_threshold ==
        network.config.ns_energy_threshold);

  REQUIRE(restored.layers.size() == network.layers.size());
  for (std::size_t l = 0; l < network.layers.size(); ++l) {
    CHECK(restored.layers[l].layer == network.layers[l].layer);
    CHECK(restored.layers[l].alpha == network.layers[l].alpha);
    CHECK((restored.layers[l].expansion - network.layers[l].expansion)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((restored.layers[l].class_alphas - network.layers[l].class_alphas)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    REQUIRE(restored.layers[l].compressions.size() ==
            network.layers[l].compressions.size());
    for (std::size_t j = 0; j < network.layers[l].compressions.size(); ++j)
      CHECK((restored.layers[l].compressions[j] -
             network.layers[l].compressions[j])
                .cwiseAbs()
                .maxCoeff() == 0.0);
  }
  REQUIRE(restored.ns_bases.size() == network.ns_bases.size());
  for (std::size_t t = 0; t < network.ns_bases.size(); ++t)
    CHECK((restored.ns_bases[t] - network.ns_bases[t]).cwiseAbs().maxCoeff() ==
          0.0);
  CHECK(restored.objective_trace == network.objective_trace);

  // The reloaded network must classify identically.
  SyntheticSpec spec;
  spec.class_count = 2;
  spec.dim = 6;
  spec.subspace_dim = 1;
  spec.samples_per_class = 8;
  spec.noise_sigma = 0.05;
  spec.seed = 5;
  const auto dataset = generate_synthetic(spec);
  const auto direct = ns_classify(network, forward(network, dataset.samples));
  const auto reloaded = ns_classify(restored, forward(restored, dataset.samples));
  CHECK(direct == reloaded);
}

TEST_CASE("pca-only bundles round-trip") {
  Rng rng(13);
  const MatrixX<double> data = rng.normal_matrix(10, 60);
  ModelBundle bundle;
  bundle.pca = fit_pca(data, PcaSelector{PcaByDim{4}});

  const std::string path = "/tmp/rdnet_model_pca.bin";
  save_model(bundle, path);
  const auto loaded = load_model(path);
  REQUIRE(loaded.pca.has_value());
  CHECK_FALSE(loaded.network.has_value());
  CHECK(loaded.pca->input_dim == 10);
  CHECK(loaded.pca->output_dim == 4);
  CHECK((loaded.pca->components - bundle.pca->components)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((loaded.pca->mean_vector - bundle.pca->mean_vector)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(loaded.pca->cumulative_variance_ratio ==
        bundle.pca->cumulative_variance_ratio);
}

TEST_CASE("model loader rejects malformed files") {
  CHECK_THROWS_AS(save_model(ModelBundle{}, "/tmp/rdnet_model_empty.bin"),
                  ParameterError);
  CHECK_THROWS_AS(load_model("/tmp/rdnet_no_such_file.bin"), IoError);

  const std::string path = "/tmp/rdnet_model_bad.bin";
  {
    std::ofstream file(path, std::ios::binary);
    file << "NOPE not a model";
  }
  CHECK_THROWS_AS(load_model(path), IoError);

  // Corrupt the version field of a valid file.
  ModelBundle bundle;
  bundle.network = tiny_network();
  save_model(bundle, path);
  auto bytes = slurp(path);
  bytes[4] = 0x7f;
  {
    std::ofstream file(path, std::ios::binary);
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_model(path), IoError);

  // Truncate a valid file.
  save_model(bundle, path);
  bytes = slurp(path);
  bytes.resize(bytes.size() / 2);
  {
    std::ofstream file(path, std::ios::binary);
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_model(path), IoError);
}

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
// Versioned binary container for trained networks and PCA transforms.
// Little-endian throughout, matrices as row-major 8-byte floats, so a
// round-trip preserves every bit and identical runs produce identical files.

#ifndef RDNET_MODEL_IO_HPP
#define RDNET_MODEL_IO_HPP

#include <optional>
#include <string>

#include "rdnet/redunet.hpp"
#include "rdnet/spectral.hpp"

namespace rdnet {

/// What one model file holds: a trained network, a PCA front end, or both
/// (the network then consumes PCA-reduced inputs).
struct ModelBundle {
  std::optional<TrainedNetwork> network;
  std::optional<PcaModel> pca;
};

void save_model(const ModelBundle& bundle, const std::string& path);

ModelBundle load_model(const std::string& path);

}  // namespace rdnet

#endif  // RDNET_MODEL_IO_HPP

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
// Slow reference implementations used only to cross-check the library. They
// share no code path with the production solvers: the water level comes from
// plain scalar bisection instead of the breakpoint walk.

#ifndef RDNET_TESTS_ORACLE_HELPERS_HPP
#define RDNET_TESTS_ORACLE_HELPERS_HPP

#include <cmath>

#include "rdnet/random.hpp"
#include "rdnet/spectral.hpp"

namespace rdnet::testing {

/// Water level by bisection on g(L) = sum_i min(L, lambda_i) - D over
/// [0, lambda_max]. 200 halvings push the bracket far below double precision.
inline double water_level_oracle(const Spectrum& spectrum, double distortion) {
  const auto fill = [&](double level) {
    double total = 0.0;
    for (Index i = 0; i < spectrum.size(); ++i)
      total += std::min(level, spectrum.eigenvalues(i));
    return total;
  };
  double lo = 0.0;
  double hi = spectrum.lambda_max;
  for (int iteration = 0; iteration < 200; ++iteration) {
    const double mid = 0.5 * (lo + hi);
    if (fill(mid) < distortion)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Rate from the oracle water level, summed in spectrum order.
inline double exact_rate_oracle(const Spectrum& spectrum, double distortion) {
  if (distortion >= spectrum.trace) return 0.0;
  const double level = water_level_oracle(spectrum, distortion);
  double rate = 0.0;
  for (Index i = 0; i < spectrum.rank; ++i) {
    const double lambda = spectrum.eigenvalues(i);
    rate += 0.5 * std::log(lambda / std::min(level, lambda));
  }
  return rate;
}

/// Random full-rank spectrum: n in [1, max_dim], eigenvalues log-uniform over
/// [1e-3, 1e3].
inline Spectrum random_spectrum(Rng& rng, Index max_dim = 20) {
  const Index n = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(max_dim));
  VectorX<double> values(n);
  for (Index i = 0; i < n; ++i) values(i) = std::pow(10.0, rng.uniform(-3.0, 3.0));
  return Spectrum::from_eigenvalues(std::move(values));
}

/// Random distortion in (0, trace], log-uniform over six decades.
inline double random_distortion(Rng& rng, const Spectrum& spectrum) {
  return spectrum.trace * std::pow(10.0, rng.uniform(-6.0, 0.0));
}

}  // namespace rdnet::testing

#endif  // RDNET_TESTS_ORACLE_HELPERS_HPP

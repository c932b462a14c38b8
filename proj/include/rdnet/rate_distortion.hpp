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
// Exact Gaussian rate-distortion function via reverse water-filling, the
// log-det approximation family R_alpha, the bisection that pins alpha*, and
// numerical evaluation of the error bounds. Rates are in nats throughout;
// conversion to bits is a display concern.

#ifndef RDNET_RATE_DISTORTION_HPP
#define RDNET_RATE_DISTORTION_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rdnet/core.hpp"
#include "rdnet/errors.hpp"
#include "rdnet/spectral.hpp"

namespace rdnet {

/// Default residual tolerance for the alpha* bisection.
inline constexpr double kDefaultAlphaDelta = 1e-8;

/// Hard cap on bisection iterations; generous for any delta >= 1e-14.
inline constexpr int kDefaultAlphaMaxIterations = 60;

template <class Scalar>
struct RdPointT {
  Scalar distortion{};
  Scalar rate{};  // nats
};

using RdPoint = RdPointT<double>;

/// Reverse water-filling allocation: D_i = min(L, lambda_i) with the water
/// level L chosen so the per-component distortions sum to D.
template <class Scalar>
struct WaterFillSolutionT {
  Scalar water_level{};
  VectorX<Scalar> per_component_distortions;  // spectrum order (descending)
  std::vector<Index> active_set;              // indices with L < lambda_i
};

using WaterFillSolution = WaterFillSolutionT<double>;

template <class Scalar>
struct AlphaStarResultT {
  Scalar alpha_star{};
  Scalar residual{};  // |R_alpha(tr)| at the returned alpha
  int iterations{};
  Scalar delta{};
};

using AlphaStarResult = AlphaStarResultT<double>;

enum class BoundSource { general_alpha, aligned_alpha, condition_number };

/// One evaluation of a published bound: lower <= observed <= upper is the
/// property under test, where observed is the per-dimension difference
/// (R_alpha(D) - R(D)) / n.
template <class Scalar>
struct BoundReportT {
  Scalar distortion{};
  Scalar lower{};
  Scalar upper{};
  Scalar observed{};
  BoundSource source{};
  // For singular spectra lambda_min is reported over the nonzero eigenvalues;
  // the published inequality is not claimed in that regime.
  bool restricted = false;
};

using BoundReport = BoundReportT<double>;

namespace detail {

template <class Scalar>
void require_positive_distortion(Scalar distortion) {
  if (!(distortion > Scalar(0)))
    throw ParameterError("distortion must be positive, got " +
                         std::to_string(static_cast<double>(distortion)));
}

template <class Scalar>
void require_unit_interval_alpha(Scalar alpha) {
  if (!(alpha >= Scalar(0)) || alpha > Scalar(1))
    throw ParameterError("alpha must lie in [0, 1], got " +
                         std::to_string(static_cast<double>(alpha)));
}

template <class Scalar>
void require_distortion_at_most_trace(const SpectrumT<Scalar>& spectrum,
                                      Scalar distortion) {
  if (distortion > spectrum.trace * (Scalar(1) + Scalar(1e-12)))
    throw ParameterError("distortion exceeds the spectrum trace");
}

}  // namespace detail

/// Solves sum_i min(L, lambda_i) = D exactly by walking the breakpoints of the
/// piecewise-linear left side, restricted to the nonzero eigenvalues. Zero
/// eigenvalues carry zero distortion.
template <class Scalar>
WaterFillSolutionT<Scalar> water_level(const SpectrumT<Scalar>& spectrum,
                                       Scalar distortion) {
  detail::require_positive_distortion(distortion);
  if (spectrum.rank == 0)
    throw NumericalError("degenerate source: all eigenvalues are zero");
  detail::require_distortion_at_most_trace(spectrum, distortion);

  const Index r = spectrum.rank;
  const auto& values = spectrum.eigenvalues;  // descending; nonzero = first r

  // Ascending walk: segment j has slope (r - j) until the next eigenvalue.
  Scalar level = values(0);
  Scalar filled_below = 0;  // sum of eigenvalues already saturated
  for (Index j = 0; j < r; ++j) {
    const Scalar mu = values(r - 1 - j);
    const Index remaining = r - j;
    const Scalar at_breakpoint = filled_below + Scalar(remaining) * mu;
    if (distortion <= at_breakpoint) {
      level = (distortion - filled_below) / Scalar(remaining);
      break;
    }
    filled_below += mu;
  }

  WaterFillSolutionT<Scalar> solution;
  solution.water_level = level;
  solution.per_component_distortions = values.cwiseMin(level);
  for (Index i = 0; i < values.size(); ++i)
    if (level < values(i)) solution.active_set.push_back(i);
  return solution;
}

/// Exact Gaussian rate-distortion function R(D) = sum_i (1/2) log(lambda_i /
/// D_i) over the nonzero eigenvalues; zero for D at or beyond the trace.
template <class Scalar>
RdPointT<Scalar> exact_rate(const SpectrumT<Scalar>& spectrum,
                            Scalar distortion) {
  detail::require_positive_distortion(distortion);
  if (distortion >= spectrum.trace) return {distortion, Scalar(0)};

  const auto solution = water_level(spectrum, distortion);
  Scalar rate = 0;
  for (Index i = 0; i < spectrum.rank; ++i)
    rate += Scalar(0.5) * std::log(spectrum.eigenvalues(i) /
                                   solution.per_component_distortions(i));
  return {distortion, rate};
}

/// Approximation family R_alpha(D) = (1/2) sum_i log(alpha + n lambda_i / D),
/// taken over all n eigenvalues. With alpha = 0 and a singular spectrum the
/// value is -infinity (the log-det diverges); callers see the IEEE -inf.
template <class Scalar>
Scalar r_alpha(const SpectrumT<Scalar>& spectrum, Scalar alpha,
               Scalar distortion) {
  detail::require_positive_distortion(distortion);
  detail::require_unit_interval_alpha(alpha);

  const Scalar n = Scalar(spectrum.size());
  Scalar sum = 0;
  for (Index i = 0; i < spectrum.size(); ++i)
    sum += std::log(alpha + n * spectrum.eigenvalues(i) / distortion);
  return Scalar(0.5) * sum;
}

/// Unique root of R_alpha(tr) = 0 on [0, 1], found by bisection on the
/// midpoint residual. The root exists because R_0(tr) <= 0 < R_1(tr) and
/// R_alpha(tr) is strictly increasing in alpha.
template <class Scalar>
AlphaStarResultT<Scalar> find_alpha_star(
    const SpectrumT<Scalar>& spectrum, Scalar delta = Scalar(kDefaultAlphaDelta),
    int max_iterations = kDefaultAlphaMaxIterations) {
  if (!(delta > Scalar(0)))
    throw ParameterError("bisection precision delta must be positive");
  if (max_iterations < 1)
    throw ParameterError("max_iterations must be at least 1");
  if (spectrum.rank == 0)
    throw NumericalError("degenerate source: all eigenvalues are zero");

  const auto residual_at = [&](Scalar alpha) {
    return r_alpha(spectrum, alpha, spectrum.trace);
  };

  Scalar lo = 0, hi = 1;
  const Scalar at_zero = residual_at(lo);
  if (std::abs(at_zero) <= delta)
    return {Scalar(0), std::abs(at_zero), 0, delta};

  Scalar best = Scalar(0.5);
  Scalar best_residual = std::numeric_limits<Scalar>::infinity();
  for (int iteration = 1; iteration <= max_iterations; ++iteration) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    const Scalar value = residual_at(mid);
    if (std::abs(value) < best_residual) {
      best = mid;
      best_residual = std::abs(value);
    }
    if (std::abs(value) <= delta)
      return {mid, std::abs(value), iteration, delta};
    if (value < Scalar(0))
      lo = mid;
    else
      hi = mid;
  }
  throw ConvergenceError(
      "alpha* bisection did not reach delta=" +
          std::to_string(static_cast<double>(delta)) + " within " +
          std::to_string(max_iterations) + " iterations",
      static_cast<double>(lo), static_cast<double>(hi),
      static_cast<double>(best), static_cast<double>(best_residual));
}

namespace detail {

template <class Scalar>
Scalar reference_lambda_min(const SpectrumT<Scalar>& spectrum,
                            bool& restricted) {
  restricted = spectrum.singular();
  return restricted ? spectrum.min_nonzero() : spectrum.lambda_min;
}

template <class Scalar>
Scalar observed_gap(const SpectrumT<Scalar>& spectrum, Scalar alpha,
                    Scalar distortion) {
  return (r_alpha(spectrum, alpha, distortion) -
          exact_rate(spectrum, distortion).rate) /
         Scalar(spectrum.size());
}

}  // namespace detail

/// Per-dimension error bounds for a fixed alpha: the gap sits in
/// [0, log(1+alpha)/2] while every component is water-filled and picks up the
/// -log(lambda_mean/lambda_min)/2 term beyond that regime.
template <class Scalar>
BoundReportT<Scalar> approximation_gap_bounds(
    const SpectrumT<Scalar>& spectrum, Scalar alpha, Scalar distortion) {
  detail::require_positive_distortion(distortion);
  detail::require_unit_interval_alpha(alpha);
  detail::require_distortion_at_most_trace(spectrum, distortion);

  BoundReportT<Scalar> report;
  report.source = BoundSource::general_alpha;
  report.distortion = distortion;
  const Scalar lambda_min =
      detail::reference_lambda_min(spectrum, report.restricted);
  const Scalar upper = Scalar(0.5) * std::log1p(alpha);
  if (distortion <= Scalar(spectrum.size()) * lambda_min) {
    report.lower = 0;
    report.upper = upper;
  } else {
    report.lower =
        upper - Scalar(0.5) * std::log(spectrum.lambda_mean / lambda_min);
    report.upper = upper;
  }
  report.observed = detail::observed_gap(spectrum, alpha, distortion);
  return report;
}

/// Bounds for the aligned approximation R_{alpha*}; alpha* may be supplied to
/// avoid re-running the bisection across a grid.
template <class Scalar>
BoundReportT<Scalar> aligned_gap_bounds(
    const SpectrumT<Scalar>& spectrum, Scalar distortion,
    const std::optional<AlphaStarResultT<Scalar>>& alpha_star = std::nullopt) {
  detail::require_positive_distortion(distortion);
  detail::require_distortion_at_most_trace(spectrum, distortion);

  BoundReportT<Scalar> report;
  report.source = BoundSource::aligned_alpha;
  report.distortion = distortion;
  const Scalar lambda_min =
      detail::reference_lambda_min(spectrum, report.restricted);
  const Scalar fraction = lambda_min / spectrum.lambda_mean;
  report.lower = Scalar(0.5) * std::log(fraction);
  report.upper = Scalar(0.5) * std::log(Scalar(2) - fraction);
  const Scalar alpha =
      alpha_star ? alpha_star->alpha_star : find_alpha_star(spectrum).alpha_star;
  report.observed = detail::observed_gap(spectrum, alpha, distortion);
  return report;
}

/// Condition-number form of the aligned bounds: enclosing, and tending to
/// (0, 0) as kappa tends to 1. Infinite kappa yields a vacuous -inf lower
/// bound and upper bound log(2)/2.
template <class Scalar>
BoundReportT<Scalar> condition_gap_bounds(
    const SpectrumT<Scalar>& spectrum, Scalar distortion,
    const std::optional<AlphaStarResultT<Scalar>>& alpha_star = std::nullopt) {
  detail::require_positive_distortion(distortion);
  detail::require_distortion_at_most_trace(spectrum, distortion);

  BoundReportT<Scalar> report;
  report.source = BoundSource::condition_number;
  report.distortion = distortion;
  const Scalar kappa = spectrum.condition_number;
  if (std::isinf(kappa)) {
    report.restricted = true;
    report.lower = -std::numeric_limits<Scalar>::infinity();
    report.upper = Scalar(0.5) * std::log(Scalar(2));
  } else {
    report.lower = Scalar(0.5) * std::log(Scalar(1) / kappa);
    report.upper = Scalar(0.5) * std::log(Scalar(2) - Scalar(1) / kappa);
  }
  const Scalar alpha =
      alpha_star ? alpha_star->alpha_star : find_alpha_star(spectrum).alpha_star;
  report.observed = detail::observed_gap(spectrum, alpha, distortion);
  return report;
}

struct RdVariants {
  bool exact = true;
  bool r0 = true;
  bool r1 = true;
  bool alpha_star = true;

  static RdVariants all() { return {}; }
};

/// Rate-distortion curves over a distortion grid, one column per requested
/// variant. alpha* is solved once per spectrum. max_error_* fields hold the
/// max |variant - exact| over the grid (infinity when a column diverged,
/// NaN when either column was not requested).
template <class Scalar>
struct RdCurveT {
  VectorX<Scalar> distortion;
  VectorX<Scalar> exact;
  VectorX<Scalar> r0;
  VectorX<Scalar> r1;
  VectorX<Scalar> r_alpha_star;
  std::optional<AlphaStarResultT<Scalar>> alpha;
  bool r0_diverged = false;
  Scalar max_error_r0 = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar max_error_r1 = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar max_error_alpha_star = std::numeric_limits<Scalar>::quiet_NaN();
};

using RdCurve = RdCurveT<double>;

template <class Scalar>
RdCurveT<Scalar> rd_curve(const SpectrumT<Scalar>& spectrum,
                          const VectorX<Scalar>& grid,
                          const RdVariants& variants = RdVariants::all(),
                          Scalar delta = Scalar(kDefaultAlphaDelta)) {
  if (grid.size() == 0) throw ParameterError("distortion grid is empty");
  for (Index i = 0; i < grid.size(); ++i) {
    detail::require_positive_distortion(grid(i));
    detail::require_distortion_at_most_trace(spectrum, grid(i));
  }

  RdCurveT<Scalar> curve;
  curve.distortion = grid;
  const Index count = grid.size();
  if (variants.exact) curve.exact.resize(count);
  if (variants.r0) curve.r0.resize(count);
  if (variants.r1) curve.r1.resize(count);
  if (variants.alpha_star) {
    curve.alpha = find_alpha_star(spectrum, delta);
    curve.r_alpha_star.resize(count);
  }

  for (Index i = 0; i < count; ++i) {
    const Scalar d = grid(i);
    if (variants.exact) curve.exact(i) = exact_rate(spectrum, d).rate;
    if (variants.r0) curve.r0(i) = r_alpha(spectrum, Scalar(0), d);
    if (variants.r1) curve.r1(i) = r_alpha(spectrum, Scalar(1), d);
    if (variants.alpha_star)
      curve.r_alpha_star(i) = r_alpha(spectrum, curve.alpha->alpha_star, d);
  }

  if (variants.r0)
    curve.r0_diverged = !curve.r0.allFinite();
  if (variants.exact) {
    const auto max_gap = [&](const VectorX<Scalar>& column) {
      Scalar worst = 0;
      for (Index i = 0; i < count; ++i)
        worst = std::max(worst, std::abs(column(i) - curve.exact(i)));
      return worst;
    };
    if (variants.r0) curve.max_error_r0 = max_gap(curve.r0);
    if (variants.r1) curve.max_error_r1 = max_gap(curve.r1);
    if (variants.alpha_star)
      curve.max_error_alpha_star = max_gap(curve.r_alpha_star);
  }
  return curve;
}

/// Geometric grid over (0, trace], ending exactly at the trace.
template <class Scalar>
VectorX<Scalar> log_spaced_grid(Scalar trace, Index count,
                                Scalar min_fraction = Scalar(1e-6)) {
  if (count < 2) throw ParameterError("grid needs at least 2 points");
  if (!(trace > Scalar(0))) throw ParameterError("trace must be positive");
  if (!(min_fraction > Scalar(0)) || min_fraction >= Scalar(1))
    throw ParameterError("min_fraction must lie in (0, 1)");
  VectorX<Scalar> grid(count);
  const Scalar log_lo = std::log(trace * min_fraction);
  const Scalar log_hi = std::log(trace);
  for (Index i = 0; i < count; ++i)
    grid(i) = std::exp(log_lo + (log_hi - log_lo) * Scalar(i) / Scalar(count - 1));
  grid(count - 1) = trace;
  return grid;
}

/// Uniform grid over (0, trace]: trace * i / count for i = 1..count.
template <class Scalar>
VectorX<Scalar> linear_grid(Scalar trace, Index count) {
  if (count < 1) throw ParameterError("grid needs at least 1 point");
  if (!(trace > Scalar(0))) throw ParameterError("trace must be positive");
  VectorX<Scalar> grid(count);
  for (Index i = 0; i < count; ++i)
    grid(i) = trace * Scalar(i + 1) / Scalar(count);
  grid(count - 1) = trace;
  return grid;
}

}  // namespace rdnet

#endif  // RDNET_RATE_DISTORTION_HPP

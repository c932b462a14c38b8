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
// Covariance estimation, symmetric eigendecomposition, and PCA reduction.
// Everything here is a pure function of its inputs.

#ifndef RDNET_SPECTRAL_HPP
#define RDNET_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "rdnet/core.hpp"
#include "rdnet/errors.hpp"

namespace rdnet {

/// Absolute tolerance on |S_ij - S_ji| for accepting a covariance matrix.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Eigenvalues below -kPsdSlack * lambda_max reject the matrix as indefinite;
/// anything between that and zero is rounding noise and clamps to zero.
inline constexpr double kPsdSlack = 1e-9;

/// An eigenvalue counts toward the rank when it exceeds
/// kRankToleranceFactor * lambda_max.
inline constexpr double kRankToleranceFactor = 1e-12;

/// Validated symmetric positive semidefinite matrix.
template <class Scalar>
class CovarianceMatrixT {
 public:
  static CovarianceMatrixT from_matrix(MatrixX<Scalar> m) {
    if (m.rows() != m.cols())
      throw DimensionError("covariance matrix must be square, got " +
                           std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()));
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= Scalar(kSymmetryTolerance)))
      throw NumericalError("not symmetric: max |S_ij - S_ji| = " +
                           std::to_string(static_cast<double>(asym)));
    return CovarianceMatrixT(std::move(m));
  }

  Index dim() const { return matrix_.rows(); }
  const MatrixX<Scalar>& matrix() const { return matrix_; }

 private:
  explicit CovarianceMatrixT(MatrixX<Scalar> m) : matrix_(std::move(m)) {}
  MatrixX<Scalar> matrix_;
};

using CovarianceMatrix = CovarianceMatrixT<double>;

/// Ordered eigenvalues of a covariance matrix plus the derived statistics the
/// rate-distortion formulas keep reaching for.
template <class Scalar>
struct SpectrumT {
  VectorX<Scalar> eigenvalues;  // descending, all >= 0
  Scalar trace{};
  Scalar lambda_min{};
  Scalar lambda_max{};
  Scalar lambda_mean{};
  Index rank{};              // eigenvalues above the rank threshold
  Scalar condition_number{};  // +inf when the smallest eigenvalue is zero

  Index size() const { return eigenvalues.size(); }
  bool singular() const { return rank < size(); }
  Scalar rank_threshold() const { return Scalar(kRankToleranceFactor) * lambda_max; }

  /// Smallest eigenvalue counted in the rank; only valid when rank > 0.
  Scalar min_nonzero() const { return eigenvalues(rank - 1); }

  /// Builds a spectrum from raw eigenvalues in any order. Values in
  /// [-kPsdSlack * max, 0) clamp to zero; anything more negative is an error.
  static SpectrumT from_eigenvalues(VectorX<Scalar> values) {
    if (values.size() == 0)
      throw ParameterError("spectrum needs at least one eigenvalue");
    std::sort(values.data(), values.data() + values.size(),
              [](Scalar a, Scalar b) { return a > b; });
    const Scalar largest = values(0);
    if (largest < Scalar(0))
      throw NumericalError("not positive semidefinite: all eigenvalues negative");
    const Scalar reject_below = -Scalar(kPsdSlack) * largest;
    SpectrumT s;
    for (Index i = 0; i < values.size(); ++i) {
      if (values(i) < reject_below)
        throw NumericalError(
            "not positive semidefinite: eigenvalue " +
            std::to_string(static_cast<double>(values(i))) + " below slack");
      if (values(i) < Scalar(0)) values(i) = Scalar(0);
    }
    s.eigenvalues = std::move(values);
    s.trace = s.eigenvalues.sum();
    s.lambda_max = s.eigenvalues(0);
    s.lambda_min = s.eigenvalues(s.eigenvalues.size() - 1);
    s.lambda_mean = s.trace / Scalar(s.eigenvalues.size());
    const Scalar threshold = s.rank_threshold();
    s.rank = (s.eigenvalues.array() > threshold).count();
    s.condition_number = s.lambda_min > threshold
                             ? s.lambda_max / s.lambda_min
                             : std::numeric_limits<Scalar>::infinity();
    return s;
  }
};

using Spectrum = SpectrumT<double>;

template <class Scalar>
struct EigenDecompositionT {
  SpectrumT<Scalar> spectrum;
  MatrixX<Scalar> eigenvectors;  // orthonormal columns, matching order
};

using EigenDecomposition = EigenDecompositionT<double>;

/// Full symmetric eigendecomposition with eigenvalues sorted descending and a
/// deterministic sign convention (largest-magnitude entry of each eigenvector
/// is positive).
template <class Scalar>
EigenDecompositionT<Scalar> eigendecompose(const CovarianceMatrixT<Scalar>& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(cov.matrix());
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed to converge");

  const Index n = cov.dim();
  VectorX<Scalar> values(n);
  MatrixX<Scalar> vectors(n, n);
  for (Index i = 0; i < n; ++i) {  // ascending -> descending
    values(i) = solver.eigenvalues()(n - 1 - i);
    vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  for (Index i = 0; i < n; ++i) {
    Index pivot = 0;
    vectors.col(i).cwiseAbs().maxCoeff(&pivot);
    if (vectors(pivot, i) < Scalar(0)) vectors.col(i) = -vectors.col(i);
  }
  return {SpectrumT<Scalar>::from_eigenvalues(std::move(values)),
          std::move(vectors)};
}

/// Unbiased sample covariance (1/(m-1)) Y Y^T, optionally after per-row mean
/// subtraction.
template <class Derived>
CovarianceMatrixT<typename Derived::Scalar> estimate_covariance(
    const Eigen::MatrixBase<Derived>& data, bool centered = true) {
  using Scalar = typename Derived::Scalar;
  const Index m = data.cols();
  if (m < 2)
    throw ParameterError("insufficient samples: covariance needs m >= 2, got " +
                         std::to_string(m));
  MatrixX<Scalar> shifted = data;
  if (centered) shifted.colwise() -= shifted.rowwise().mean().eval();
  MatrixX<Scalar> cov =
      (shifted * shifted.transpose()) / static_cast<Scalar>(m - 1);
  cov = ((cov + cov.transpose()) / Scalar(2)).eval();
  return CovarianceMatrixT<Scalar>::from_matrix(std::move(cov));
}

/// Keep exactly n components.
struct PcaByDim {
  Index n;
};

/// Keep the smallest n whose cumulative eigenvalue mass reaches ratio * trace.
struct PcaByRatio {
  double ratio;
};

using PcaSelector = std::variant<PcaByDim, PcaByRatio>;

template <class Scalar>
struct PcaModelT {
  Index input_dim{};
  Index output_dim{};
  MatrixX<Scalar> components;  // input_dim x output_dim, orthonormal columns
  VectorX<Scalar> component_eigenvalues;  // descending
  Scalar cumulative_variance_ratio{};
  VectorX<Scalar> mean_vector;  // zero when fitted without centering
};

using PcaModel = PcaModelT<double>;

/// Principal components of the sample covariance of `data`.
template <class Derived>
PcaModelT<typename Derived::Scalar> fit_pca(
    const Eigen::MatrixBase<Derived>& data, const PcaSelector& selector,
    bool centered = true) {
  using Scalar = typename Derived::Scalar;
  const Index p = data.rows();
  const Index m = data.cols();
  if (m < 2)
    throw ParameterError("insufficient samples: PCA needs m >= 2, got " +
                         std::to_string(m));

  const auto decomp = eigendecompose(estimate_covariance(data, centered));
  const VectorX<Scalar>& values = decomp.spectrum.eigenvalues;
  const Scalar total = decomp.spectrum.trace;
  if (!(total > Scalar(0)))
    throw NumericalError("zero total variance: PCA undefined for constant data");

  Index n = 0;
  if (const auto* by_dim = std::get_if<PcaByDim>(&selector)) {
    n = by_dim->n;
    const Index limit = std::min(p, m - 1);
    if (n < 1 || n > limit)
      throw ParameterError("target dimension " + std::to_string(n) +
                           " out of range [1, " + std::to_string(limit) + "]");
  } else {
    const double ratio = std::get<PcaByRatio>(selector).ratio;
    if (!(ratio > 0.0) || ratio > 1.0)
      throw ParameterError("target ratio must lie in (0, 1], got " +
                           std::to_string(ratio));
    const Scalar goal = Scalar(ratio) * total - Scalar(1e-12) * total;
    Scalar cumulative = 0;
    for (n = 0; n < p; ) {
      cumulative += values(n);
      ++n;
      if (cumulative >= goal) break;
    }
  }

  PcaModelT<Scalar> model;
  model.input_dim = p;
  model.output_dim = n;
  model.components = decomp.eigenvectors.leftCols(n);
  model.component_eigenvalues = values.head(n);
  model.cumulative_variance_ratio = values.head(n).sum() / total;
  model.mean_vector = centered ? data.rowwise().mean().eval()
                               : VectorX<Scalar>::Zero(p).eval();
  return model;
}

/// Projects data onto the retained components: U^T (Y - mean).
template <class Derived>
MatrixX<typename Derived::Scalar> pca_transform(
    const PcaModelT<typename Derived::Scalar>& model,
    const Eigen::MatrixBase<Derived>& data) {
  if (data.rows() != model.input_dim)
    throw DimensionError("pca_transform: data has " +
                         std::to_string(data.rows()) + " rows, model expects " +
                         std::to_string(model.input_dim));
  return model.components.transpose() *
         (data.derived().colwise() - model.mean_vector).eval();
}

/// Condition number of the covariance restricted to the retained components.
template <class Scalar>
Scalar retained_condition_number(const PcaModelT<Scalar>& model) {
  const Scalar top = model.component_eigenvalues(0);
  const Scalar bottom = model.component_eigenvalues(model.output_dim - 1);
  if (!(bottom > Scalar(kRankToleranceFactor) * top))
    return std::numeric_limits<Scalar>::infinity();
  return top / bottom;
}

}  // namespace rdnet

#endif  // RDNET_SPECTRAL_HPP

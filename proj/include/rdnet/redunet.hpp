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
// Forward-constructed white-box classification network built from regularized
// covariance inverses. Each layer computes an expansion operator E from the
// global feature covariance and one compression operator C_j per class, then
// ascends the coding-rate-reduction objective:
//
//   Z <- normalize(Z + eta E Z - eta sum_j C_j Z Pi_j)
//
// In adaptive mode the regularizers alpha, alpha_j are the endpoint-aligning
// roots computed per layer from the current spectra; the baseline mode pins
// every alpha to 1. Inference replays the stored operators with softmax
// membership estimates, and a nearest-subspace classifier reads out labels.

#ifndef RDNET_REDUNET_HPP
#define RDNET_REDUNET_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rdnet/core.hpp"
#include "rdnet/errors.hpp"
#include "rdnet/rate_distortion.hpp"
#include "rdnet/spectral.hpp"

namespace rdnet {

/// Column-norm tolerance for the unit-sphere feature invariant.
inline constexpr double kFeatureNormTolerance = 1e-9;

/// Regularizer floor applied when a covariance is singular and the adaptive
/// root lands at 0, keeping the operator inverses well-posed.
inline constexpr double kAlphaFloor = 1e-12;

enum class CodingMode { adaptive, fixed_alpha_1 };

inline const char* to_string(CodingMode mode) {
  return mode == CodingMode::adaptive ? "ar" : "fixed";
}

/// Feature columns on the unit sphere.
template <class Scalar>
struct FeatureMatrixT {
  MatrixX<Scalar> columns;  // n x m

  Index dim() const { return columns.rows(); }
  Index count() const { return columns.cols(); }
};

using FeatureMatrix = FeatureMatrixT<double>;

/// Per-sample class weights; row i holds pi_{i,1..k} on the simplex. The
/// diagonal matrix Pi_j of the update rule is diag(weights.col(j)).
template <class Scalar>
struct MembershipSetT {
  MatrixX<Scalar> weights;  // m x k

  Index sample_count() const { return weights.rows(); }
  Index class_count() const { return weights.cols(); }

  static MembershipSetT one_hot(const std::vector<int>& labels,
                                Index class_count) {
    if (class_count < 1)
      throw ParameterError("membership needs at least one class");
    MembershipSetT memberships;
    memberships.weights = MatrixX<Scalar>::Zero(
        static_cast<Index>(labels.size()), class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int label = labels[i];
      if (label < 0 || label >= class_count)
        throw ParameterError("label " + std::to_string(label) +
                             " outside [0, " + std::to_string(class_count) +
                             ") at sample " + std::to_string(i));
      memberships.weights(static_cast<Index>(i), label) = Scalar(1);
    }
    return memberships;
  }

  bool is_one_hot() const {
    for (Index i = 0; i < weights.rows(); ++i) {
      Index ones = 0;
      for (Index j = 0; j < weights.cols(); ++j) {
        if (weights(i, j) == Scalar(1))
          ++ones;
        else if (weights(i, j) != Scalar(0))
          return false;
      }
      if (ones != 1) return false;
    }
    return true;
  }

  /// Simplex invariant: nonnegative rows summing to 1.
  void validate(Scalar tolerance = Scalar(1e-12)) const {
    for (Index i = 0; i < weights.rows(); ++i) {
      Scalar row_sum = 0;
      for (Index j = 0; j < weights.cols(); ++j) {
        if (weights(i, j) < Scalar(0))
          throw NumericalError("negative membership at sample " +
                               std::to_string(i));
        row_sum += weights(i, j);
      }
      if (std::abs(row_sum - Scalar(1)) > tolerance)
        throw NumericalError("membership row " + std::to_string(i) +
                             " sums to " + std::to_string(row_sum));
    }
  }
};

using MembershipSet = MembershipSetT<double>;

template <class Scalar>
struct ExpansionOperatorT {
  Scalar alpha{};
  MatrixX<Scalar> matrix;  // symmetric positive definite
};

using ExpansionOperator = ExpansionOperatorT<double>;

template <class Scalar>
struct CompressionOperatorT {
  Scalar alpha{};
  MatrixX<Scalar> matrix;  // symmetric positive definite
};

using CompressionOperator = CompressionOperatorT<double>;

template <class Scalar>
struct LayerParamsT {
  Index layer{};  // 1-based position in the network
  Scalar alpha{};
  MatrixX<Scalar> expansion;
  VectorX<Scalar> class_alphas;
  std::vector<MatrixX<Scalar>> compressions;
};

using LayerParams = LayerParamsT<double>;

template <class Scalar>
struct TrainConfigT {
  Scalar epsilon_sq = Scalar(0.5);
  Scalar eta = Scalar(0.5);
  Scalar lambda_u = Scalar(500);
  Scalar delta = Scalar(kDefaultAlphaDelta);
  Index layer_count = 100;
  CodingMode mode = CodingMode::adaptive;
  Scalar ns_energy_threshold = Scalar(0.95);
  Index ns_rank_override = 0;  // 0 keeps the energy rule

  void validate() const {
    if (!(epsilon_sq > Scalar(0)) || epsilon_sq > Scalar(1))
      throw ParameterError("epsilon_sq must lie in (0, 1]");
    if (!(eta > Scalar(0))) throw ParameterError("eta must be positive");
    if (!(lambda_u > Scalar(0)))
      throw ParameterError("lambda_u must be positive");
    if (!(delta > Scalar(0))) throw ParameterError("delta must be positive");
    if (layer_count < 0)
      throw ParameterError("layer_count must be nonnegative");
    if (!(ns_energy_threshold > Scalar(0)) || ns_energy_threshold > Scalar(1))
      throw ParameterError("ns_energy_threshold must lie in (0, 1]");
    if (ns_rank_override < 0)
      throw ParameterError("ns_rank_override must be nonnegative");
  }
};

using TrainConfig = TrainConfigT<double>;

template <class Scalar>
struct TrainedNetworkT {
  Index dim{};
  Index class_count{};
  TrainConfigT<Scalar> config;
  std::vector<LayerParamsT<Scalar>> layers;
  std::vector<MatrixX<Scalar>> ns_bases;     // per class, orthonormal columns
  std::vector<Scalar> objective_trace;       // layer_count + 1 values
};

using TrainedNetwork = TrainedNetworkT<double>;

template <class Scalar>
struct ObjectiveAlphasT {
  Scalar alpha{};
  VectorX<Scalar> class_alphas;
};

using ObjectiveAlphas = ObjectiveAlphasT<double>;

template <class Scalar>
struct SimilarityReportT {
  MatrixX<Scalar> gram;        // m x m cosine similarities
  MatrixX<Scalar> pair_means;  // k x k mean |similarity| per class pair
};

using SimilarityReport = SimilarityReportT<double>;

namespace detail {

template <class Scalar>
void check_unit_columns(const MatrixX<Scalar>& columns, const char* where) {
  for (Index j = 0; j < columns.cols(); ++j) {
    const Scalar norm = columns.col(j).norm();
    if (std::abs(norm - Scalar(1)) > Scalar(kFeatureNormTolerance))
      throw NumericalError(std::string(where) + ": column " +
                           std::to_string(j) + " has norm " +
                           std::to_string(static_cast<double>(norm)));
  }
}

/// Endpoint-aligning regularizer for a second-moment matrix, or 1 in the
/// baseline mode. The floor keeps later inverses positive definite when the
/// spectrum is singular.
template <class Scalar>
Scalar solve_operator_alpha(const MatrixX<Scalar>& second_moment,
                            CodingMode mode, Scalar delta) {
  if (mode == CodingMode::fixed_alpha_1) return Scalar(1);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(second_moment,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("operator spectrum failed to converge");
  const auto spectrum =
      SpectrumT<Scalar>::from_eigenvalues(solver.eigenvalues());
  Scalar alpha = find_alpha_star(spectrum, delta).alpha_star;
  if (spectrum.singular() && alpha < Scalar(kAlphaFloor))
    alpha = Scalar(kAlphaFloor);
  return alpha;
}

template <class Scalar>
MatrixX<Scalar> spd_inverse(const MatrixX<Scalar>& matrix, const char* what) {
  Eigen::LLT<MatrixX<Scalar>> llt(matrix);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) +
                         ": regularized covariance is not positive definite");
  MatrixX<Scalar> inverse = llt.solve(
      MatrixX<Scalar>::Identity(matrix.rows(), matrix.cols()));
  return ((inverse + inverse.transpose()) / Scalar(2)).eval();
}

template <class Scalar>
Scalar logdet_spd(const MatrixX<Scalar>& matrix, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(matrix,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": eigensolve failed");
  Scalar logdet = 0;
  for (Index i = 0; i < matrix.rows(); ++i) {
    const Scalar value = solver.eigenvalues()(i);
    if (!(value > Scalar(0)))
      throw NumericalError(std::string(what) + ": log-det of a matrix with "
                           "nonpositive eigenvalue");
    logdet += std::log(value);
  }
  return logdet;
}

}  // namespace detail

/// Projects every data column onto the unit sphere.
template <class Derived>
FeatureMatrixT<typename Derived::Scalar> init_features(
    const Eigen::MatrixBase<Derived>& data) {
  using Scalar = typename Derived::Scalar;
  FeatureMatrixT<Scalar> features;
  features.columns = data.derived();
  for (Index j = 0; j < features.columns.cols(); ++j) {
    const Scalar norm = features.columns.col(j).norm();
    if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm)))
      throw NumericalError("zero or non-finite column at sample index " +
                           std::to_string(j));
    features.columns.col(j) /= norm;
  }
  return features;
}

/// Expansion operator E = (n/(m eps^2)) (alpha I + (n/(m eps^2)) Z Z^T)^{-1}
/// with alpha the aligning root of the spectrum of Z Z^T / m (adaptive) or 1.
template <class Scalar>
ExpansionOperatorT<Scalar> expansion_matrix(
    const FeatureMatrixT<Scalar>& features, Scalar epsilon_sq, CodingMode mode,
    Scalar delta = Scalar(kDefaultAlphaDelta)) {
  if (!(epsilon_sq > Scalar(0)))
    throw ParameterError("epsilon_sq must be positive");
  const Index n = features.dim();
  const Scalar m = Scalar(features.count());
  const MatrixX<Scalar> gram = features.columns * features.columns.transpose();

  ExpansionOperatorT<Scalar> expansion;
  expansion.alpha =
      detail::solve_operator_alpha<Scalar>((gram / m).eval(), mode, delta);
  const Scalar scale = Scalar(n) / (m * epsilon_sq);
  const MatrixX<Scalar> regularized =
      expansion.alpha * MatrixX<Scalar>::Identity(n, n) + scale * gram;
  expansion.matrix = scale * detail::spd_inverse(regularized, "expansion_matrix");
  return expansion;
}

/// Compression operators, one per class:
/// C_j = (n/(m eps^2)) (alpha_j I + (n/(tr(Pi_j) eps^2)) Z Pi_j Z^T)^{-1}.
/// The leading factor stays n/(m eps^2) while the inner scale uses the class
/// mass tr(Pi_j); with Pi_j = I both collapse and C_1 equals E bit for bit.
template <class Scalar>
std::vector<CompressionOperatorT<Scalar>> compression_matrices(
    const FeatureMatrixT<Scalar>& features,
    const MembershipSetT<Scalar>& memberships, Scalar epsilon_sq,
    CodingMode mode, Scalar delta = Scalar(kDefaultAlphaDelta)) {
  if (!(epsilon_sq > Scalar(0)))
    throw ParameterError("epsilon_sq must be positive");
  if (memberships.sample_count() != features.count())
    throw DimensionError("memberships cover " +
                         std::to_string(memberships.sample_count()) +
                         " samples, features have " +
                         std::to_string(features.count()));

  const Index n = features.dim();
  const Scalar m = Scalar(features.count());
  const Scalar lead = Scalar(n) / (m * epsilon_sq);

  std::vector<CompressionOperatorT<Scalar>> compressions;
  compressions.reserve(memberships.class_count());
  for (Index j = 0; j < memberships.class_count(); ++j) {
    const VectorX<Scalar> pi = memberships.weights.col(j);
    const Scalar mass = pi.sum();
    if (!(mass > Scalar(0)))
      throw NumericalError("empty class " + std::to_string(j) +
                           ": tr(Pi_j) = 0");
    const MatrixX<Scalar> weighted = features.columns * pi.asDiagonal();
    const MatrixX<Scalar> gram = weighted * features.columns.transpose();

    CompressionOperatorT<Scalar> compression;
    compression.alpha =
        detail::solve_operator_alpha<Scalar>((gram / mass).eval(), mode, delta);
    const Scalar inner = Scalar(n) / (mass * epsilon_sq);
    const MatrixX<Scalar> regularized =
        compression.alpha * MatrixX<Scalar>::Identity(n, n) + inner * gram;
    compression.matrix =
        lead * detail::spd_inverse(regularized, "compression_matrices");
    compressions.push_back(std::move(compression));
  }
  return compressions;
}

/// One gradient-ascent step Z + eta E Z - eta sum_j C_j Z Pi_j followed by
/// renormalization onto the sphere. Also the test-time update: inference
/// feeds estimated memberships through the same rule.
template <class Scalar>
FeatureMatrixT<Scalar> layer_update_train(
    const FeatureMatrixT<Scalar>& features, const MatrixX<Scalar>& expansion,
    const std::vector<CompressionOperatorT<Scalar>>& compressions,
    const MembershipSetT<Scalar>& memberships, Scalar eta) {
  if (expansion.rows() != features.dim() ||
      expansion.cols() != features.dim())
    throw DimensionError("expansion operator shape mismatch");
  if (static_cast<Index>(compressions.size()) != memberships.class_count())
    throw DimensionError("compression count vs class count mismatch");
  if (memberships.sample_count() != features.count())
    throw DimensionError("membership rows vs feature columns mismatch");

  MatrixX<Scalar> updated =
      features.columns + eta * (expansion * features.columns);
  for (Index j = 0; j < memberships.class_count(); ++j) {
    const MatrixX<Scalar> weighted =
        features.columns * memberships.weights.col(j).asDiagonal();
    updated.noalias() -= eta * (compressions[static_cast<std::size_t>(j)].matrix *
                                weighted);
  }

  FeatureMatrixT<Scalar> next;
  next.columns.resize(updated.rows(), updated.cols());
  for (Index j = 0; j < updated.cols(); ++j) {
    const Scalar norm = updated.col(j).norm();
    if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm)))
      throw NumericalError("feature column collapsed at sample index " +
                           std::to_string(j));
    next.columns.col(j) = updated.col(j) / norm;
  }
  return next;
}

/// Aligning regularizers for the objective at the current features, without
/// forming the operators.
template <class Scalar>
ObjectiveAlphasT<Scalar> solve_objective_alphas(
    const FeatureMatrixT<Scalar>& features,
    const MembershipSetT<Scalar>& memberships, CodingMode mode,
    Scalar delta = Scalar(kDefaultAlphaDelta)) {
  const Scalar m = Scalar(features.count());
  const MatrixX<Scalar> gram = features.columns * features.columns.transpose();

  ObjectiveAlphasT<Scalar> alphas;
  alphas.alpha =
      detail::solve_operator_alpha<Scalar>((gram / m).eval(), mode, delta);
  alphas.class_alphas.resize(memberships.class_count());
  for (Index j = 0; j < memberships.class_count(); ++j) {
    const VectorX<Scalar> pi = memberships.weights.col(j);
    const Scalar mass = pi.sum();
    if (!(mass > Scalar(0)))
      throw NumericalError("empty class " + std::to_string(j) +
                           ": tr(Pi_j) = 0");
    const MatrixX<Scalar> weighted = features.columns * pi.asDiagonal();
    const MatrixX<Scalar> class_gram = weighted * features.columns.transpose();
    alphas.class_alphas(j) = detail::solve_operator_alpha<Scalar>(
        (class_gram / mass).eval(), mode, delta);
  }
  return alphas;
}

/// Coding-rate-reduction objective
///   (1/2) log det(alpha I + (n/(m eps^2)) Z Z^T)
///   - sum_j (tr(Pi_j)/(2m)) log det(alpha_j I + (n/(tr(Pi_j) eps^2)) Z Pi_j Z^T).
template <class Scalar>
Scalar objective(const FeatureMatrixT<Scalar>& features,
                 const MembershipSetT<Scalar>& memberships, Scalar epsilon_sq,
                 const ObjectiveAlphasT<Scalar>& alphas) {
  if (!(epsilon_sq > Scalar(0)))
    throw ParameterError("epsilon_sq must be positive");
  if (memberships.sample_count() != features.count())
    throw DimensionError("membership rows vs feature columns mismatch");
  if (alphas.class_alphas.size() != memberships.class_count())
    throw DimensionError("alpha count vs class count mismatch");

  const Index n = features.dim();
  const Scalar m = Scalar(features.count());
  const MatrixX<Scalar> identity = MatrixX<Scalar>::Identity(n, n);
  const MatrixX<Scalar> gram = features.columns * features.columns.transpose();

  const Scalar expansion_term =
      Scalar(0.5) *
      detail::logdet_spd(
          (alphas.alpha * identity + Scalar(n) / (m * epsilon_sq) * gram).eval(),
          "objective");

  Scalar compression_term = 0;
  for (Index j = 0; j < memberships.class_count(); ++j) {
    const VectorX<Scalar> pi = memberships.weights.col(j);
    const Scalar mass = pi.sum();
    if (!(mass > Scalar(0)))
      throw NumericalError("empty class " + std::to_string(j) +
                           ": tr(Pi_j) = 0");
    const MatrixX<Scalar> weighted = features.columns * pi.asDiagonal();
    const MatrixX<Scalar> class_gram = weighted * features.columns.transpose();
    compression_term +=
        mass / (Scalar(2) * m) *
        detail::logdet_spd((alphas.class_alphas(j) * identity +
                            Scalar(n) / (mass * epsilon_sq) * class_gram)
                               .eval(),
                           "objective");
  }
  return expansion_term - compression_term;
}

/// Softmax membership estimate pi_{i,j} proportional to
/// exp(-lambda_u ||C_j z_i||), computed with max subtraction.
template <class Scalar>
MembershipSetT<Scalar> estimate_membership(
    const FeatureMatrixT<Scalar>& features,
    const std::vector<CompressionOperatorT<Scalar>>& compressions,
    Scalar lambda_u) {
  if (!(lambda_u > Scalar(0)))
    throw ParameterError("lambda_u must be positive");
  if (compressions.empty())
    throw ParameterError("estimate_membership needs at least one class");

  const Index m = features.count();
  const Index k = static_cast<Index>(compressions.size());
  MatrixX<Scalar> scores(m, k);
  for (Index j = 0; j < k; ++j) {
    const MatrixX<Scalar> projected =
        compressions[static_cast<std::size_t>(j)].matrix * features.columns;
    for (Index i = 0; i < m; ++i)
      scores(i, j) = -lambda_u * projected.col(i).norm();
  }

  MembershipSetT<Scalar> memberships;
  memberships.weights.resize(m, k);
  for (Index i = 0; i < m; ++i) {
    const Scalar peak = scores.row(i).maxCoeff();
    Scalar total = 0;
    for (Index j = 0; j < k; ++j) {
      const Scalar value = std::exp(scores(i, j) - peak);
      memberships.weights(i, j) = value;
      total += value;
    }
    memberships.weights.row(i) /= total;
  }
  return memberships;
}

/// Orthonormal bases of the per-class feature spans, truncated at the
/// smallest rank whose singular-value energy reaches the threshold (or at a
/// fixed override rank). Signs follow the largest-entry-positive convention.
template <class Scalar>
std::vector<MatrixX<Scalar>> fit_ns_bases(
    const FeatureMatrixT<Scalar>& features, const std::vector<int>& labels,
    Index class_count, Scalar energy_threshold, Index rank_override = 0) {
  if (!(energy_threshold > Scalar(0)) || energy_threshold > Scalar(1))
    throw ParameterError("energy threshold must lie in (0, 1]");
  if (static_cast<Index>(labels.size()) != features.count())
    throw DimensionError("label count vs feature columns mismatch");

  std::vector<MatrixX<Scalar>> bases;
  bases.reserve(static_cast<std::size_t>(class_count));
  for (Index t = 0; t < class_count; ++t) {
    std::vector<Index> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == static_cast<int>(t))
        members.push_back(static_cast<Index>(i));
    if (members.empty())
      throw NumericalError("empty class " + std::to_string(t) +
                           ": cannot fit a subspace");

    MatrixX<Scalar> block(features.dim(), static_cast<Index>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i)
      block.col(static_cast<Index>(i)) = features.columns.col(members[i]);

    Eigen::JacobiSVD<MatrixX<Scalar>> svd(block, Eigen::ComputeThinU);
    const VectorX<Scalar>& singular = svd.singularValues();
    const Scalar total_energy = singular.squaredNorm();
    Index rank = 0;
    if (rank_override > 0) {
      rank = std::min(rank_override, singular.size());
    } else {
      Scalar energy = 0;
      while (rank < singular.size()) {
        energy += singular(rank) * singular(rank);
        ++rank;
        if (energy >= energy_threshold * total_energy) break;
      }
    }
    if (rank < 1)
      throw NumericalError("class " + std::to_string(t) +
                           " produced an empty subspace");

    MatrixX<Scalar> basis = svd.matrixU().leftCols(rank);
    for (Index c = 0; c < rank; ++c) {
      Index pivot = 0;
      basis.col(c).cwiseAbs().maxCoeff(&pivot);
      if (basis(pivot, c) < Scalar(0)) basis.col(c) = -basis.col(c);
    }
    bases.push_back(std::move(basis));
  }
  return bases;
}

/// Trains the full network: L layers of operator construction plus update,
/// then the nearest-subspace bases on the final features. Records the
/// objective before every layer and after the last one (layer_count + 1
/// values).
template <class Derived>
TrainedNetworkT<typename Derived::Scalar> train(
    const Eigen::MatrixBase<Derived>& data, const std::vector<int>& labels,
    const TrainConfigT<typename Derived::Scalar>& config) {
  using Scalar = typename Derived::Scalar;
  config.validate();
  if (data.rows() < 2)
    throw ParameterError("training needs feature dimension n >= 2");
  if (static_cast<Index>(labels.size()) != data.cols())
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " vs sample count " + std::to_string(data.cols()));

  const Index class_count =
      labels.empty() ? 0
                     : Index(*std::max_element(labels.begin(), labels.end())) + 1;
  if (class_count < 1) throw ParameterError("training needs at least one class");
  std::vector<Index> per_class(static_cast<std::size_t>(class_count), 0);
  for (const int label : labels) {
    if (label < 0)
      throw ParameterError("negative class label");
    ++per_class[static_cast<std::size_t>(label)];
  }
  for (Index j = 0; j < class_count; ++j)
    if (per_class[static_cast<std::size_t>(j)] < 2)
      throw ParameterError("class " + std::to_string(j) +
                           " has fewer than 2 samples");

  const auto memberships =
      MembershipSetT<Scalar>::one_hot(labels, class_count);

  TrainedNetworkT<Scalar> network;
  network.dim = data.rows();
  network.class_count = class_count;
  network.config = config;
  network.layers.reserve(static_cast<std::size_t>(config.layer_count));

  auto features = init_features(data);
  std::vector<Scalar> trace;
  trace.reserve(static_cast<std::size_t>(config.layer_count) + 1);

  try {
    for (Index layer = 1; layer <= config.layer_count; ++layer) {
      auto expansion =
          expansion_matrix(features, config.epsilon_sq, config.mode,
                           config.delta);
      auto compressions =
          compression_matrices(features, memberships, config.epsilon_sq,
                               config.mode, config.delta);

      ObjectiveAlphasT<Scalar> alphas;
      alphas.alpha = expansion.alpha;
      alphas.class_alphas.resize(class_count);
      for (Index j = 0; j < class_count; ++j)
        alphas.class_alphas(j) =
            compressions[static_cast<std::size_t>(j)].alpha;
      trace.push_back(
          objective(features, memberships, config.epsilon_sq, alphas));

      features = layer_update_train(features, expansion.matrix, compressions,
                                    memberships, config.eta);
      detail::check_unit_columns(features.columns, "train");

      LayerParamsT<Scalar> params;
      params.layer = layer;
      params.alpha = expansion.alpha;
      params.expansion = std::move(expansion.matrix);
      params.class_alphas = std::move(alphas.class_alphas);
      params.compressions.reserve(compressions.size());
      for (auto& compression : compressions)
        params.compressions.push_back(std::move(compression.matrix));
      network.layers.push_back(std::move(params));
    }

    const auto final_alphas =
        solve_objective_alphas(features, memberships, config.mode,
                               config.delta);
    trace.push_back(
        objective(features, memberships, config.epsilon_sq, final_alphas));
  } catch (const Error& e) {
    throw TrainingError(
        std::string("training aborted at layer ") +
            std::to_string(network.layers.size() + 1) + ": " + e.what(),
        std::vector<double>(trace.begin(), trace.end()));
  }

  network.objective_trace = std::move(trace);
  network.ns_bases =
      fit_ns_bases(features, labels, class_count, config.ns_energy_threshold,
                   config.ns_rank_override);
  return network;
}

/// Replays the stored operators on new data, estimating memberships per
/// layer with the training-time compression operators.
template <class Derived>
FeatureMatrixT<typename Derived::Scalar> forward(
    const TrainedNetworkT<typename Derived::Scalar>& network,
    const Eigen::MatrixBase<Derived>& data) {
  using Scalar = typename Derived::Scalar;
  if (data.rows() != network.dim)
    throw DimensionError("forward: data dimension " +
                         std::to_string(data.rows()) + " vs network " +
                         std::to_string(network.dim));
  if (data.cols() < 1) throw ParameterError("forward: empty sample set");

  auto features = init_features(data);
  for (const auto& layer : network.layers) {
    std::vector<CompressionOperatorT<Scalar>> compressions;
    compressions.reserve(layer.compressions.size());
    for (std::size_t j = 0; j < layer.compressions.size(); ++j)
      compressions.push_back({layer.class_alphas(static_cast<Index>(j)),
                              layer.compressions[j]});

    auto memberships =
        estimate_membership(features, compressions, network.config.lambda_u);
    memberships.validate();
    features = layer_update_train(features, layer.expansion, compressions,
                                  memberships, network.config.eta);
    detail::check_unit_columns(features.columns, "forward");
  }
  return features;
}

/// Nearest-subspace label: argmin_t ||z||^2 - ||U_t^T z||^2, ties to the
/// lowest class index.
template <class Scalar>
std::vector<int> ns_classify(const TrainedNetworkT<Scalar>& network,
                             const FeatureMatrixT<Scalar>& features) {
  if (network.ns_bases.empty())
    throw ParameterError("network has no fitted subspace bases");
  if (features.dim() != network.dim)
    throw DimensionError("ns_classify: feature dimension mismatch");

  std::vector<int> labels(static_cast<std::size_t>(features.count()));
  for (Index i = 0; i < features.count(); ++i) {
    const VectorX<Scalar> z = features.columns.col(i);
    const Scalar base = z.squaredNorm();
    Scalar best = std::numeric_limits<Scalar>::infinity();
    int best_class = 0;
    for (std::size_t t = 0; t < network.ns_bases.size(); ++t) {
      const Scalar captured = (network.ns_bases[t].transpose() * z).squaredNorm();
      const Scalar residual = base - captured;
      if (residual < best) {
        best = residual;
        best_class = static_cast<int>(t);
      }
    }
    labels[static_cast<std::size_t>(i)] = best_class;
  }
  return labels;
}

/// Gram matrix of the (unit-norm) features plus mean |cosine| per class
/// pair; within-class means exclude the diagonal.
template <class Scalar>
SimilarityReportT<Scalar> cosine_similarity_report(
    const FeatureMatrixT<Scalar>& features, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != features.count())
    throw DimensionError("label count vs feature columns mismatch");
  detail::check_unit_columns(features.columns, "cosine_similarity_report");

  const Index k =
      labels.empty() ? 0
                     : Index(*std::max_element(labels.begin(), labels.end())) + 1;
  SimilarityReportT<Scalar> report;
  report.gram = features.columns.transpose() * features.columns;
  report.pair_means = MatrixX<Scalar>::Zero(k, k);
  MatrixX<Scalar> counts = MatrixX<Scalar>::Zero(k, k);
  for (Index i = 0; i < report.gram.rows(); ++i) {
    for (Index j = 0; j < report.gram.cols(); ++j) {
      if (i == j) continue;
      const Index a = labels[static_cast<std::size_t>(i)];
      const Index b = labels[static_cast<std::size_t>(j)];
      report.pair_means(a, b) += std::abs(report.gram(i, j));
      counts(a, b) += Scalar(1);
    }
  }
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b)
      if (counts(a, b) > Scalar(0)) report.pair_means(a, b) /= counts(a, b);
  return report;
}

}  // namespace rdnet

#endif  // RDNET_REDUNET_HPP

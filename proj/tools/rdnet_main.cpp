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
// Command-line front end: rate-distortion curves and bound audits over a
// spectrum, PCA fitting, network training, and evaluation. Tables are
// comma-separated with a header row; every run prints its resolved
// configuration for reproducibility.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "rdnet/data_io.hpp"
#include "rdnet/model_io.hpp"
#include "rdnet/random.hpp"
#include "rdnet/rate_distortion.hpp"
#include "rdnet/redunet.hpp"
#include "rdnet/spectral.hpp"

namespace {

using namespace rdnet;

constexpr double kLn2 = 0.69314718055994530942;

std::string fmt(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

/// Rates are stored in nats; --bits only changes what gets printed.
double display(double nats, bool bits) { return bits ? nats / kLn2 : nats; }

class ConfigEcho {
 public:
  explicit ConfigEcho(const std::string& command) {
    add("command", command);
  }
  void add(const std::string& key, const std::string& value) {
    lines_.emplace_back(key, value);
  }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  void add(const std::string& key, Index value) {
    add(key, std::to_string(value));
  }
  void add(const std::string& key, bool value) {
    add(key, value ? std::string("true") : std::string("false"));
  }
  void print() const {
    for (const auto& [key, value] : lines_)
      std::printf("[config] %s = %s\n", key.c_str(), value.c_str());
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

// ---------------------------------------------------------------------------
// Spectrum sources shared by rdcurve / alpha / bounds.

struct SpectrumOpts {
  std::string eigenvalues;
  std::string cov_path;
  std::string data_path;
  bool no_center = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--eigenvalues", eigenvalues,
                    "Comma-separated eigenvalue list");
    cmd->add_option("--cov", cov_path, "Covariance matrix file (text)");
    cmd->add_option("--data", data_path,
                    "Sample file, one sample per line; covariance estimated");
    cmd->add_flag("--no-center", no_center,
                  "Skip mean subtraction when estimating from --data");
  }

  Spectrum resolve(ConfigEcho& echo) const {
    const int sources = (!eigenvalues.empty()) + (!cov_path.empty()) +
                        (!data_path.empty());
    if (sources != 1)
      throw ParameterError(
          "exactly one of --eigenvalues, --cov, --data is required");
    if (!eigenvalues.empty()) {
      echo.add("eigenvalues", eigenvalues);
      return Spectrum::from_eigenvalues(parse_number_list(eigenvalues));
    }
    if (!cov_path.empty()) {
      echo.add("cov", cov_path);
      return eigendecompose(
                 CovarianceMatrix::from_matrix(read_matrix_text(cov_path)))
          .spectrum;
    }
    echo.add("data", data_path);
    echo.add("center", !no_center);
    return eigendecompose(
               estimate_covariance(read_matrix_text(data_path), !no_center))
        .spectrum;
  }
};

// ---------------------------------------------------------------------------
// Dataset sources shared by train / eval.

struct DatasetOpts {
  bool synthetic = false;
  Index classes = 3;
  Index dim = 20;
  Index subspace_dim = 2;
  Index per_class = 200;
  double sigma = 0.05;
  std::uint64_t seed = 0;
  Index train_per_class = 100;
  std::string data_path;
  std::string labels_path;
  std::string idx_images;
  std::string idx_labels;
  Index class_limit = 0;
  Index subset_per_class = 0;

  void attach(CLI::App* cmd) {
    cmd->add_flag("--synthetic", synthetic,
                  "Generate the low-rank synthetic dataset");
    cmd->add_option("--classes", classes, "Synthetic: class count");
    cmd->add_option("--dim", dim, "Synthetic: ambient dimension");
    cmd->add_option("--subspace-dim", subspace_dim,
                    "Synthetic: per-class subspace dimension");
    cmd->add_option("--per-class", per_class,
                    "Synthetic: samples generated per class");
    cmd->add_option("--sigma", sigma, "Synthetic: noise level");
    cmd->add_option("--seed", seed, "Synthetic: generator seed");
    cmd->add_option("--train-per-class", train_per_class,
                    "Synthetic: stratified train split size (0 = no split)");
    cmd->add_option("--data", data_path, "Sample file, one sample per line");
    cmd->add_option("--labels", labels_path, "Label file, one label per line");
    cmd->add_option("--idx-images", idx_images, "IDX image file");
    cmd->add_option("--idx-labels", idx_labels, "IDX label file");
    cmd->add_option("--class-limit", class_limit,
                    "Keep only samples with label below this (0 = all)");
    cmd->add_option("--subset-per-class", subset_per_class,
                    "Keep only the first N samples of each class (0 = all)");
  }

  void echo_into(ConfigEcho& echo) const {
    if (synthetic) {
      echo.add("synthetic", true);
      echo.add("classes", classes);
      echo.add("dim", dim);
      echo.add("subspace_dim", subspace_dim);
      echo.add("per_class", per_class);
      echo.add("sigma", sigma);
      echo.add("seed", std::to_string(seed));
      echo.add("train_per_class", train_per_class);
    } else if (!data_path.empty()) {
      echo.add("data", data_path);
      echo.add("labels", labels_path);
    } else {
      echo.add("idx_images", idx_images);
      echo.add("idx_labels", idx_labels);
    }
    if (class_limit > 0) echo.add("class_limit", class_limit);
    if (subset_per_class > 0) echo.add("subset_per_class", subset_per_class);
  }

  Dataset resolve(bool want_test_part) const {
    const int sources =
        synthetic + (!data_path.empty()) + (!idx_images.empty());
    if (sources != 1)
      throw ParameterError(
          "exactly one of --synthetic, --data, --idx-images is required");

    Dataset dataset;
    if (synthetic) {
      SyntheticSpec spec;
      spec.class_count = classes;
      spec.dim = dim;
      spec.subspace_dim = subspace_dim;
      spec.samples_per_class = per_class;
      spec.noise_sigma = sigma;
      spec.seed = seed;
      dataset = generate_synthetic(spec);
      if (train_per_class > 0) {
        auto split = split_dataset(dataset, train_per_class);
        dataset = want_test_part ? std::move(split.test)
                                 : std::move(split.train);
      }
    } else if (!data_path.empty()) {
      if (labels_path.empty())
        throw ParameterError("--data requires --labels");
      dataset.samples = read_matrix_text(data_path);
      dataset.labels = read_labels_text(labels_path);
      if (static_cast<Index>(dataset.labels.size()) != dataset.samples.cols())
        throw DimensionError("label count vs sample count mismatch");
      dataset.class_count =
          1 + *std::max_element(dataset.labels.begin(), dataset.labels.end());
      dataset.provenance = "text:" + data_path;
    } else {
      if (idx_labels.empty())
        throw ParameterError("--idx-images requires --idx-labels");
      dataset = load_idx(idx_images, idx_labels);
    }
    return apply_filters(dataset);
  }

 private:
  Dataset apply_filters(const Dataset& dataset) const {
    if (class_limit == 0 && subset_per_class == 0) return dataset;
    if (dataset.labels.empty())
      throw ParameterError(
          "--class-limit/--subset-per-class need a labeled dataset");
    const Index keep_classes =
        class_limit > 0 ? class_limit : dataset.class_count;
    std::vector<Index> kept;
    std::vector<Index> seen(static_cast<std::size_t>(keep_classes), 0);
    for (Index j = 0; j < dataset.sample_count(); ++j) {
      const int label = dataset.labels[static_cast<std::size_t>(j)];
      if (label >= keep_classes) continue;
      if (subset_per_class > 0 &&
          seen[static_cast<std::size_t>(label)] >= subset_per_class)
        continue;
      ++seen[static_cast<std::size_t>(label)];
      kept.push_back(j);
    }
    Dataset filtered;
    filtered.samples.resize(dataset.dim(), static_cast<Index>(kept.size()));
    filtered.labels.resize(kept.size());
    filtered.class_count = keep_classes;
    filtered.provenance = dataset.provenance + ":subset";
    for (std::size_t i = 0; i < kept.size(); ++i) {
      filtered.samples.col(static_cast<Index>(i)) =
          dataset.samples.col(kept[i]);
      filtered.labels[i] = dataset.labels[static_cast<std::size_t>(kept[i])];
    }
    return filtered;
  }
};

// ---------------------------------------------------------------------------
// rdcurve

struct RdcurveOpts {
  SpectrumOpts spectrum;
  Index grid = 200;
  bool linear = false;
  double delta = kDefaultAlphaDelta;
  std::string out = "rdcurve.csv";
  bool bits = false;
};

int run_rdcurve(const RdcurveOpts& opts) {
  ConfigEcho echo("rdcurve");
  const auto spectrum = opts.spectrum.resolve(echo);
  echo.add("grid", opts.grid);
  echo.add("grid_spacing", std::string(opts.linear ? "linear" : "log"));
  echo.add("delta", opts.delta);
  echo.add("out", opts.out);
  echo.add("units", std::string(opts.bits ? "bits" : "nats"));
  echo.print();

  const auto grid = opts.linear
                        ? linear_grid(spectrum.trace, opts.grid)
                        : log_spaced_grid(spectrum.trace, opts.grid);
  const auto curve = rd_curve(spectrum, grid, RdVariants::all(), opts.delta);

  MatrixX<double> rows(grid.size(), 5);
  for (Index i = 0; i < grid.size(); ++i) {
    rows(i, 0) = curve.distortion(i);
    rows(i, 1) = display(curve.exact(i), opts.bits);
    rows(i, 2) = display(curve.r0(i), opts.bits);
    rows(i, 3) = display(curve.r1(i), opts.bits);
    rows(i, 4) = display(curve.r_alpha_star(i), opts.bits);
  }
  write_table(rows, {"D", "R", "R0", "R1", "Ralpha_star"}, opts.out);

  std::printf("alpha_star = %s\n", fmt(curve.alpha->alpha_star).c_str());
  std::printf("residual = %s\n",
              fmt(display(curve.alpha->residual, opts.bits)).c_str());
  std::printf("iterations = %d\n", curve.alpha->iterations);
  std::printf("kappa = %s\n", fmt(spectrum.condition_number).c_str());
  std::printf("maxerr_r0 = %s\n",
              fmt(display(curve.max_error_r0, opts.bits)).c_str());
  std::printf("maxerr_r1 = %s\n",
              fmt(display(curve.max_error_r1, opts.bits)).c_str());
  std::printf("maxerr_ralpha_star = %s\n",
              fmt(display(curve.max_error_alpha_star, opts.bits)).c_str());
  std::printf("r0_diverged = %s\n", curve.r0_diverged ? "true" : "false");
  std::printf("wrote %s (%ld rows)\n", opts.out.c_str(),
              static_cast<long>(grid.size()));
  return 0;
}

// ---------------------------------------------------------------------------
// alpha

struct AlphaOpts {
  SpectrumOpts spectrum;
  double delta = kDefaultAlphaDelta;
  bool bits = false;
};

int run_alpha(const AlphaOpts& opts) {
  ConfigEcho echo("alpha");
  const auto spectrum = opts.spectrum.resolve(echo);
  echo.add("delta", opts.delta);
  echo.add("units", std::string(opts.bits ? "bits" : "nats"));
  echo.print();

  const auto result = find_alpha_star(spectrum, opts.delta);
  const double bracket_upper =
      1.0 - spectrum.min_nonzero() / spectrum.lambda_mean;
  std::printf("alpha_star = %s\n", fmt(result.alpha_star).c_str());
  std::printf("residual = %s\n",
              fmt(display(result.residual, opts.bits)).c_str());
  std::printf("iterations = %d\n", result.iterations);
  std::printf("bracket = [0, %s]%s\n", fmt(bracket_upper).c_str(),
              spectrum.singular() ? " (restricted to nonzero eigenvalues)"
                                  : "");
  return 0;
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsOpts {
  SpectrumOpts spectrum;
  Index grid = 200;
  Index random_spectra = 0;
  std::uint64_t seed = 0;
  double delta = kDefaultAlphaDelta;
  std::string out = "bounds.csv";
  bool bits = false;
};

int run_bounds(const BoundsOpts& opts) {
  ConfigEcho echo("bounds");
  std::vector<Spectrum> spectra;
  if (opts.random_spectra > 0) {
    echo.add("random", opts.random_spectra);
    echo.add("seed", std::to_string(opts.seed));
    Rng rng(opts.seed);
    for (Index s = 0; s < opts.random_spectra; ++s) {
      const Index n = 1 + static_cast<Index>(rng.uniform() * 20.0);
      VectorX<double> values(n);
      for (Index i = 0; i < n; ++i)
        values(i) = std::pow(10.0, rng.uniform(-3.0, 3.0));
      spectra.push_back(Spectrum::from_eigenvalues(std::move(values)));
    }
  } else {
    spectra.push_back(opts.spectrum.resolve(echo));
  }
  echo.add("grid", opts.grid);
  echo.add("delta", opts.delta);
  echo.add("out", opts.out);
  echo.add("units", std::string(opts.bits ? "bits" : "nats"));
  echo.print();

  // Floating-point slack on the audited inequalities, in nats.
  constexpr double kSlack = 1e-9;
  std::vector<std::vector<double>> rows;
  Index failures = 0;
  for (std::size_t s = 0; s < spectra.size(); ++s) {
    const auto& spectrum = spectra[s];
    const auto astar = find_alpha_star(spectrum, opts.delta);
    const Index points = opts.random_spectra > 0 ? Index(20) : opts.grid;
    const auto grid = log_spaced_grid(spectrum.trace, std::max<Index>(2, points));
    for (Index i = 0; i < grid.size(); ++i) {
      const auto aligned =
          aligned_gap_bounds(spectrum, grid(i), std::optional{astar});
      const auto cond =
          condition_gap_bounds(spectrum, grid(i), std::optional{astar});
      const bool pass = aligned.observed >= aligned.lower - kSlack &&
                        aligned.observed <= aligned.upper + kSlack &&
                        cond.observed >= cond.lower - kSlack &&
                        cond.observed <= cond.upper + kSlack;
      if (!pass) ++failures;
      rows.push_back({static_cast<double>(s), grid(i),
                      display(aligned.observed, opts.bits),
                      display(aligned.lower, opts.bits),
                      display(aligned.upper, opts.bits),
                      display(cond.lower, opts.bits),
                      display(cond.upper, opts.bits), pass ? 1.0 : 0.0});
    }
  }

  MatrixX<double> table(static_cast<Index>(rows.size()), 8);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < 8; ++c)
      table(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  write_table(table,
              {"spectrum", "D", "observed", "aligned_lower", "aligned_upper",
               "cond_lower", "cond_upper", "pass"},
              opts.out);

  std::printf("spectra = %ld\n", static_cast<long>(spectra.size()));
  std::printf("rows = %ld\n", static_cast<long>(rows.size()));
  std::printf("failures = %ld\n", static_cast<long>(failures));
  std::printf("wrote %s\n", opts.out.c_str());
  if (failures > 0) {
    std::fprintf(stderr, "error: %ld bound violations\n",
                 static_cast<long>(failures));
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// pca

struct PcaOpts {
  std::string data_path;
  std::string idx_images;
  Index pca_dim = 0;
  double pca_ratio = 0.0;
  bool no_center = false;
  std::string out = "pca_model.bin";
};

int run_pca(const PcaOpts& opts) {
  ConfigEcho echo("pca");
  const int sources = (!opts.data_path.empty()) + (!opts.idx_images.empty());
  if (sources != 1)
    throw ParameterError("exactly one of --data, --idx-images is required");
  if ((opts.pca_dim > 0) == (opts.pca_ratio > 0.0))
    throw ParameterError("exactly one of --pca-dim, --pca-ratio is required");

  MatrixX<double> samples;
  if (!opts.data_path.empty()) {
    echo.add("data", opts.data_path);
    samples = read_matrix_text(opts.data_path);
  } else {
    echo.add("idx_images", opts.idx_images);
    samples = load_idx_images(opts.idx_images);
  }
  if (opts.pca_dim > 0)
    echo.add("pca_dim", opts.pca_dim);
  else
    echo.add("pca_ratio", opts.pca_ratio);
  echo.add("center", !opts.no_center);
  echo.add("out", opts.out);
  echo.print();

  const auto full =
      eigendecompose(estimate_covariance(samples, !opts.no_center)).spectrum;
  const PcaSelector selector =
      opts.pca_dim > 0 ? PcaSelector{PcaByDim{opts.pca_dim}}
                       : PcaSelector{PcaByRatio{opts.pca_ratio}};
  const auto model = fit_pca(samples, selector, !opts.no_center);

  ModelBundle bundle;
  bundle.pca = model;
  save_model(bundle, opts.out);

  std::printf("input_dim = %ld\n", static_cast<long>(model.input_dim));
  std::printf("selected_dim = %ld\n", static_cast<long>(model.output_dim));
  std::printf("cumulative_variance_ratio = %s\n",
              fmt(model.cumulative_variance_ratio).c_str());
  std::printf("kappa_full = %s\n", fmt(full.condition_number).c_str());
  std::printf("kappa_retained = %s\n",
              fmt(retained_condition_number(model)).c_str());
  std::printf("wrote %s\n", opts.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  DatasetOpts dataset;
  double eps2 = 0.5;
  double eta = 0.5;
  double lambda_u = 500.0;
  double delta = kDefaultAlphaDelta;
  Index layers = 100;
  std::string mode = "ar";
  double ns_energy = 0.95;
  Index ns_rank = 0;
  Index pca_dim = 0;
  double pca_ratio = 0.0;
  bool no_center = false;
  std::string out = "model.bin";
  std::string trace_out;
  bool bits = false;
};

int run_train(const TrainOpts& opts) {
  ConfigEcho echo("train");
  opts.dataset.echo_into(echo);
  echo.add("eps2", opts.eps2);
  echo.add("eta", opts.eta);
  echo.add("lambda_u", opts.lambda_u);
  echo.add("delta", opts.delta);
  echo.add("layers", opts.layers);
  echo.add("mode", opts.mode);
  echo.add("ns_energy", opts.ns_energy);
  if (opts.ns_rank > 0) echo.add("ns_rank", opts.ns_rank);
  if (opts.pca_dim > 0) echo.add("pca_dim", opts.pca_dim);
  if (opts.pca_ratio > 0.0) echo.add("pca_ratio", opts.pca_ratio);
  echo.add("out", opts.out);
  if (!opts.trace_out.empty()) echo.add("trace_out", opts.trace_out);
  echo.add("units", std::string(opts.bits ? "bits" : "nats"));
  echo.print();

  const auto dataset = opts.dataset.resolve(/*want_test_part=*/false);

  ModelBundle bundle;
  MatrixX<double> inputs = dataset.samples;
  if (opts.pca_dim > 0 || opts.pca_ratio > 0.0) {
    if (opts.pca_dim > 0 && opts.pca_ratio > 0.0)
      throw ParameterError("--pca-dim and --pca-ratio are mutually exclusive");
    const PcaSelector selector =
        opts.pca_dim > 0 ? PcaSelector{PcaByDim{opts.pca_dim}}
                         : PcaSelector{PcaByRatio{opts.pca_ratio}};
    bundle.pca = fit_pca(dataset.samples, selector, !opts.no_center);
    inputs = pca_transform(*bundle.pca, dataset.samples);
    std::printf("pca_selected_dim = %ld\n",
                static_cast<long>(bundle.pca->output_dim));
  }

  TrainConfig config;
  config.epsilon_sq = opts.eps2;
  config.eta = opts.eta;
  config.lambda_u = opts.lambda_u;
  config.delta = opts.delta;
  config.layer_count = opts.layers;
  config.mode =
      opts.mode == "fixed" ? CodingMode::fixed_alpha_1 : CodingMode::adaptive;
  config.ns_energy_threshold = opts.ns_energy;
  config.ns_rank_override = opts.ns_rank;

  try {
    bundle.network = train(inputs, dataset.labels, config);
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    for (std::size_t i = 0; i < e.objective_trace.size(); ++i)
      std::fprintf(stderr, "trace[%zu] = %s\n", i,
                   fmt(display(e.objective_trace[i], opts.bits)).c_str());
    return 1;
  }

  save_model(bundle, opts.out);

  const auto& trace = bundle.network->objective_trace;
  std::printf("samples = %ld\n", static_cast<long>(dataset.sample_count()));
  std::printf("feature_dim = %ld\n", static_cast<long>(inputs.rows()));
  std::printf("classes = %ld\n", static_cast<long>(dataset.class_count));
  std::printf("objective_initial = %s\n",
              fmt(display(trace.front(), opts.bits)).c_str());
  std::printf("objective_final = %s\n",
              fmt(display(trace.back(), opts.bits)).c_str());
  std::printf("wrote %s\n", opts.out.c_str());

  if (!opts.trace_out.empty()) {
    MatrixX<double> rows(static_cast<Index>(trace.size()), 2);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      rows(static_cast<Index>(i), 0) = static_cast<double>(i);
      rows(static_cast<Index>(i), 1) = display(trace[i], opts.bits);
    }
    write_table(rows, {"layer", "objective"}, opts.trace_out);
    std::printf("wrote %s\n", opts.trace_out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  DatasetOpts dataset;
  std::string model;
  std::string similarity_out;
  std::string report_out;
  bool bits = false;
};

int run_eval(const EvalOpts& opts) {
  ConfigEcho echo("eval");
  echo.add("model", opts.model);
  opts.dataset.echo_into(echo);
  if (!opts.similarity_out.empty())
    echo.add("similarity_out", opts.similarity_out);
  if (!opts.report_out.empty()) echo.add("report_out", opts.report_out);
  echo.print();

  const auto bundle = load_model(opts.model);
  if (!bundle.network)
    throw ParameterError("'" + opts.model + "' holds no trained network");
  const auto& network = *bundle.network;

  const auto dataset = opts.dataset.resolve(/*want_test_part=*/true);
  if (dataset.sample_count() == 0)
    throw ParameterError("evaluation set is empty");
  if (dataset.labels.empty())
    throw ParameterError("evaluation needs labels");

  MatrixX<double> inputs = dataset.samples;
  if (bundle.pca) inputs = pca_transform(*bundle.pca, dataset.samples);

  const auto features = forward(network, inputs);
  const auto predicted = ns_classify(network, features);

  const Index k = network.class_count;
  std::vector<Index> per_class_total(static_cast<std::size_t>(k), 0);
  std::vector<Index> per_class_correct(static_cast<std::size_t>(k), 0);
  Index correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int expected = dataset.labels[i];
    if (expected < 0 || expected >= k)
      throw ParameterError("label " + std::to_string(expected) +
                           " outside the trained class range");
    ++per_class_total[static_cast<std::size_t>(expected)];
    if (predicted[i] == expected) {
      ++correct;
      ++per_class_correct[static_cast<std::size_t>(expected)];
    }
  }

  const double overall =
      static_cast<double>(correct) / static_cast<double>(predicted.size());
  std::printf("samples = %ld\n", static_cast<long>(predicted.size()));
  std::printf("accuracy = %s\n", fmt(overall).c_str());
  for (Index t = 0; t < k; ++t) {
    const auto total = per_class_total[static_cast<std::size_t>(t)];
    const auto hits = per_class_correct[static_cast<std::size_t>(t)];
    std::printf("accuracy_class_%ld = %s (%ld/%ld)\n", static_cast<long>(t),
                total > 0 ? fmt(static_cast<double>(hits) /
                                static_cast<double>(total))
                                .c_str()
                          : "nan",
                static_cast<long>(hits), static_cast<long>(total));
  }

  if (!opts.report_out.empty()) {
    MatrixX<double> rows(k + 1, 4);
    for (Index t = 0; t < k; ++t) {
      const auto total = per_class_total[static_cast<std::size_t>(t)];
      const auto hits = per_class_correct[static_cast<std::size_t>(t)];
      rows(t, 0) = static_cast<double>(t);
      rows(t, 1) = static_cast<double>(total);
      rows(t, 2) = static_cast<double>(hits);
      rows(t, 3) = total > 0 ? static_cast<double>(hits) / total : 0.0;
    }
    rows(k, 0) = -1.0;
    rows(k, 1) = static_cast<double>(predicted.size());
    rows(k, 2) = static_cast<double>(correct);
    rows(k, 3) = overall;
    write_table(rows, {"class", "count", "correct", "accuracy"},
                opts.report_out);
    std::printf("wrote %s\n", opts.report_out.c_str());
  }

  if (!opts.similarity_out.empty()) {
    const auto report = cosine_similarity_report(features, dataset.labels);
    std::vector<std::string> columns{"class"};
    for (Index b = 0; b < report.pair_means.cols(); ++b)
      columns.push_back("mean_abs_sim_" + std::to_string(b));
    MatrixX<double> rows(report.pair_means.rows(),
                         report.pair_means.cols() + 1);
    for (Index a = 0; a < report.pair_means.rows(); ++a) {
      rows(a, 0) = static_cast<double>(a);
      for (Index b = 0; b < report.pair_means.cols(); ++b)
        rows(a, b + 1) = report.pair_means(a, b);
    }
    write_table(rows, columns, opts.similarity_out);
    std::printf("wrote %s\n", opts.similarity_out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rdnet: Gaussian rate-distortion curves, endpoint-aligned log-det "
      "approximations, and white-box coding-rate networks"};
  app.require_subcommand(1);
  // fallthrough lets --config appear after the subcommand name; the file
  // addresses subcommand flags through [subcommand] sections.
  app.fallthrough(true);
  app.set_config("--config", "",
                 "INI file with one section per subcommand mirroring its "
                 "flags");

  RdcurveOpts rdcurve_opts;
  auto* rdcurve_cmd = app.add_subcommand(
      "rdcurve", "Emit R(D), R0, R1, Ralpha* over a distortion grid");
  rdcurve_opts.spectrum.attach(rdcurve_cmd);
  rdcurve_cmd->add_option("--grid", rdcurve_opts.grid, "Grid point count");
  rdcurve_cmd->add_flag("--linear-grid", rdcurve_opts.linear,
                        "Uniform instead of log-spaced grid");
  rdcurve_cmd->add_option("--delta", rdcurve_opts.delta,
                          "Bisection precision for alpha*");
  rdcurve_cmd->add_option("--out", rdcurve_opts.out, "Output table path");
  rdcurve_cmd->add_flag("--bits", rdcurve_opts.bits, "Display rates in bits");

  AlphaOpts alpha_opts;
  auto* alpha_cmd =
      app.add_subcommand("alpha", "Solve the endpoint-aligning alpha*");
  alpha_opts.spectrum.attach(alpha_cmd);
  alpha_cmd->add_option("--delta", alpha_opts.delta, "Bisection precision");
  alpha_cmd->add_flag("--bits", alpha_opts.bits, "Display rates in bits");

  BoundsOpts bounds_opts;
  auto* bounds_cmd = app.add_subcommand(
      "bounds", "Audit the approximation-error bounds over a grid");
  bounds_opts.spectrum.attach(bounds_cmd);
  bounds_cmd->add_option("--grid", bounds_opts.grid, "Grid point count");
  bounds_cmd->add_option("--random", bounds_opts.random_spectra,
                         "Audit this many random spectra instead of one source");
  bounds_cmd->add_option("--seed", bounds_opts.seed, "Random-spectra seed");
  bounds_cmd->add_option("--delta", bounds_opts.delta, "Bisection precision");
  bounds_cmd->add_option("--out", bounds_opts.out, "Output table path");
  bounds_cmd->add_flag("--bits", bounds_opts.bits, "Display rates in bits");

  PcaOpts pca_opts;
  auto* pca_cmd =
      app.add_subcommand("pca", "Fit a PCA reduction and report kappa");
  pca_cmd->add_option("--data", pca_opts.data_path,
                      "Sample file, one sample per line");
  pca_cmd->add_option("--idx-images", pca_opts.idx_images, "IDX image file");
  pca_cmd->add_option("--pca-dim", pca_opts.pca_dim, "Target dimension");
  pca_cmd->add_option("--pca-ratio", pca_opts.pca_ratio,
                      "Target cumulative variance ratio in (0, 1]");
  pca_cmd->add_flag("--no-center", pca_opts.no_center,
                    "Skip mean subtraction");
  pca_cmd->add_option("--out", pca_opts.out, "Output model path");

  TrainOpts train_opts;
  auto* train_cmd =
      app.add_subcommand("train", "Train a network and save the model");
  train_opts.dataset.attach(train_cmd);
  train_cmd->add_option("--eps2", train_opts.eps2, "Distortion budget eps^2");
  train_cmd->add_option("--eta", train_opts.eta, "Step size");
  train_cmd->add_option("--lambda-u", train_opts.lambda_u,
                        "Membership softmax uniformity");
  train_cmd->add_option("--delta", train_opts.delta, "Bisection precision");
  train_cmd->add_option("--layers", train_opts.layers, "Layer count");
  train_cmd->add_option("--mode", train_opts.mode, "Regularizer mode")
      ->check(CLI::IsMember({"ar", "fixed"}));
  train_cmd->add_option("--ns-energy", train_opts.ns_energy,
                        "Subspace energy threshold in (0, 1]");
  train_cmd->add_option("--ns-rank", train_opts.ns_rank,
                        "Fixed subspace rank override (0 = energy rule)");
  train_cmd->add_option("--pca-dim", train_opts.pca_dim,
                        "Fit a PCA front end with this dimension");
  train_cmd->add_option("--pca-ratio", train_opts.pca_ratio,
                        "Fit a PCA front end with this variance ratio");
  train_cmd->add_flag("--no-center", train_opts.no_center,
                      "Skip mean subtraction in the PCA front end");
  train_cmd->add_option("--out", train_opts.out, "Output model path");
  train_cmd->add_option("--trace-out", train_opts.trace_out,
                        "Objective trace table path");
  train_cmd->add_flag("--bits", train_opts.bits, "Display rates in bits");

  EvalOpts eval_opts;
  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate a trained model on a dataset");
  eval_cmd->add_option("--model", eval_opts.model, "Model file")->required();
  eval_opts.dataset.attach(eval_cmd);
  eval_cmd->add_option("--similarity-out", eval_opts.similarity_out,
                       "Class-pair mean |cosine| table path");
  eval_cmd->add_option("--out", eval_opts.report_out,
                       "Accuracy report table path");
  eval_cmd->add_flag("--bits", eval_opts.bits, "Display rates in bits");

  int exit_code = 0;
  rdcurve_cmd->callback([&] { exit_code = run_rdcurve(rdcurve_opts); });
  alpha_cmd->callback([&] { exit_code = run_alpha(alpha_opts); });
  bounds_cmd->callback([&] { exit_code = run_bounds(bounds_opts); });
  pca_cmd->callback([&] { exit_code = run_pca(pca_opts); });
  train_cmd->callback([&] { exit_code = run_train(train_opts); });
  eval_cmd->callback([&] { exit_code = run_eval(eval_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const rdnet::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return exit_code;
}

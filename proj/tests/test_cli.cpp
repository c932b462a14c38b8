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
// End-to-end tests driving the rdnet binary as a subprocess. The binary path
// arrives as the first program argument (wired through ctest).

#define DOCTEST_CONFIG_IMPLEMENT
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rdnet/data_io.hpp"
#include "rdnet/model_io.hpp"

namespace {

std::string g_binary;
std::string g_tmpdir;
int g_file_counter = 0;

std::string temp_path(const std::string& stem) {
  return g_tmpdir + "/" + stem + "_" + std::to_string(g_file_counter++);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::string& args) {
  const std::string out_path = temp_path("cmd_output");
  const std::string command = g_binary + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = slurp(out_path);
  return result;
}

/// Pulls the value out of a "key = value" report line; fails if absent.
std::string extract(const std::string& output, const std::string& key) {
  const std::string needle = key + " = ";
  auto pos = output.find(needle);
  REQUIRE(pos != std::string::npos);
  pos += needle.size();
  const auto end = output.find('\n', pos);
  return output.substr(pos, end - pos);
}

double extract_number(const std::string& output, const std::string& key) {
  return std::strtod(extract(output, key).c_str(), nullptr);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  REQUIRE(out.good());
}

const char* kGeometric = "51.2,25.6,12.8,6.4,3.2,1.6,0.8,0.4,0.2,0.1";
const char* kLadder = "1.0,0.9,0.8,0.7,0.6,0.5,0.4,0.3,0.2,0.1";

std::string synthetic_flags(const std::string& extra) {
  return "--synthetic --classes 3 --dim 8 --subspace-dim 1 --per-class 30 "
         "--train-per-class 20 --sigma 0.05 --seed 7 " +
         extra;
}

}  // namespace

TEST_CASE("rdcurve writes the five-column table and reports dominance") {
  const auto table_path = temp_path("rdcurve") + ".csv";
  const auto result = run_command(std::string("rdcurve --eigenvalues ") +
                                  kGeometric + " --grid 200 --out " +
                                  table_path);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("[config] command = rdcurve") != std::string::npos);

  const double alpha_star = extract_number(result.output, "alpha_star");
  CHECK(alpha_star == doctest::Approx(0.47106778414006624).epsilon(1e-6));
  CHECK(extract(result.output, "r0_diverged") == "false");

  const double err_r0 = extract_number(result.output, "maxerr_r0");
  const double err_r1 = extract_number(result.output, "maxerr_r1");
  const double err_star = extract_number(result.output, "maxerr_ralpha_star");
  CHECK(err_star < err_r0);
  CHECK(err_star < err_r1);

  const auto table = rdnet::read_table(table_path);
  REQUIRE(table.columns ==
          std::vector<std::string>{"D", "R", "R0", "R1", "Ralpha_star"});
  REQUIRE(table.rows.rows() == 200);
  CHECK(table.rows(199, 0) == doctest::Approx(102.3).epsilon(1e-12));
  CHECK(table.rows(199, 1) == 0.0);
}

TEST_CASE("rdcurve reports the condition number of the ladder spectrum") {
  const auto table_path = temp_path("rdcurve_ladder") + ".csv";
  const auto result = run_command(std::string("rdcurve --eigenvalues ") +
                                  kLadder + " --grid 100 --out " + table_path);
  CHECK(result.exit_code == 0);
  CHECK(extract_number(result.output, "kappa") == 10.0);
  CHECK(extract_number(result.output, "maxerr_ralpha_star") <
        extract_number(result.output, "maxerr_r1"));
}

TEST_CASE("rdcurve on a scalar source collapses the aligned variants") {
  // n = 1 is isotropic: alpha* = 0 and R0 = Ralpha* = R up to rounding.
  const auto table_path = temp_path("rdcurve_scalar") + ".csv";
  const auto result = run_command("rdcurve --eigenvalues 5 --grid 50 --out " +
                                  table_path);
  CHECK(result.exit_code == 0);
  CHECK(extract_number(result.output, "alpha_star") == 0.0);
  CHECK(extract_number(result.output, "maxerr_r0") <= 1e-9);
  CHECK(extract_number(result.output, "maxerr_ralpha_star") <= 1e-9);
}

TEST_CASE("rdcurve flags the diverging R0 column on a singular spectrum") {
  const auto table_path = temp_path("rdcurve_singular") + ".csv";
  const auto result = run_command(
      "rdcurve --eigenvalues 51.2,25.6,12.8,6.4,3.2,0,0,0,0,0 --grid 50 "
      "--out " +
      table_path);
  CHECK(result.exit_code == 0);
  CHECK(extract(result.output, "r0_diverged") == "true");
  CHECK(extract(result.output, "maxerr_r0") == "inf");

  const auto table = rdnet::read_table(table_path);
  bool saw_negative_infinity = false;
  for (rdnet::Index i = 0; i < table.rows.rows(); ++i)
    if (std::isinf(table.rows(i, 2)) && table.rows(i, 2) < 0)
      saw_negative_infinity = true;
  CHECK(saw_negative_infinity);
}

TEST_CASE("rdcurve --bits rescales the displayed rates") {
  const auto nats_path = temp_path("rdcurve_nats") + ".csv";
  const auto bits_path = temp_path("rdcurve_bits") + ".csv";
  const auto nats = run_command(std::string("rdcurve --eigenvalues ") +
                                kLadder + " --grid 20 --out " + nats_path);
  const auto bits = run_command(std::string("rdcurve --eigenvalues ") +
                                kLadder + " --grid 20 --bits --out " +
                                bits_path);
  REQUIRE(nats.exit_code == 0);
  REQUIRE(bits.exit_code == 0);
  const auto table_nats = rdnet::read_table(nats_path);
  const auto table_bits = rdnet::read_table(bits_path);
  // Same distortion grid, rate columns divided by ln 2.
  CHECK(table_bits.rows(0, 0) == table_nats.rows(0, 0));
  CHECK(table_bits.rows(0, 1) ==
        doctest::Approx(table_nats.rows(0, 1) / 0.6931471805599453)
            .epsilon(1e-12));
  // alpha* itself is a mixing weight, not a rate.
  CHECK(extract(nats.output, "alpha_star") ==
        extract(bits.output, "alpha_star"));
}

TEST_CASE("alpha solves the isotropic endpoint without iterating") {
  const auto result = run_command("alpha --eigenvalues 2,2,2");
  CHECK(result.exit_code == 0);
  CHECK(extract_number(result.output, "alpha_star") == 0.0);
  CHECK(extract(result.output, "iterations") == "0");
}

TEST_CASE("alpha matches the frozen ladder root and prints the bracket") {
  const auto result =
      run_command(std::string("alpha --eigenvalues ") + kLadder);
  CHECK(result.exit_code == 0);
  CHECK(extract_number(result.output, "alpha_star") ==
        doctest::Approx(0.14213969083949280).epsilon(1e-6));
  CHECK(std::abs(extract_number(result.output, "residual")) <= 1e-8);
  CHECK(extract_number(result.output, "iterations") <= 60.0);
  CHECK(result.output.find("bracket = [0, ") != std::string::npos);
}

TEST_CASE("alpha rejects a non-positive delta and a missing source") {
  const auto bad_delta =
      run_command(std::string("alpha --eigenvalues ") + kLadder + " --delta 0");
  CHECK(bad_delta.exit_code == 1);
  CHECK(bad_delta.output.find("delta") != std::string::npos);

  const auto no_source = run_command("alpha");
  CHECK(no_source.exit_code == 1);
  CHECK(no_source.output.find("exactly one of") != std::string::npos);
}

TEST_CASE("alpha accepts a covariance file source") {
  const auto cov_path = temp_path("cov") + ".txt";
  write_text(cov_path, "2 0 0\n0 2 0\n0 0 2\n");
  const auto result = run_command("alpha --cov " + cov_path);
  CHECK(result.exit_code == 0);
  CHECK(extract_number(result.output, "alpha_star") == 0.0);
}

TEST_CASE("bounds audits a single spectrum with zero failures") {
  const auto table_path = temp_path("bounds") + ".csv";
  const auto result = run_command(std::string("bounds --eigenvalues ") +
                                  kGeometric + " --grid 50 --out " +
                                  table_path);
  CHECK(result.exit_code == 0);
  CHECK(extract(result.output, "failures") == "0");

  const auto table = rdnet::read_table(table_path);
  REQUIRE(table.columns.size() == 8);
  REQUIRE(table.rows.rows() == 50);
  for (rdnet::Index i = 0; i < table.rows.rows(); ++i)
    CHECK(table.rows(i, 7) == 1.0);
}

TEST_CASE("bounds on the isotropic spectrum degenerate to exact zeros") {
  const auto table_path = temp_path("bounds_iso") + ".csv";
  const auto result =
      run_command("bounds --eigenvalues 1,1,1,1 --grid 10 --out " +
                  table_path);
  CHECK(result.exit_code == 0);
  const auto table = rdnet::read_table(table_path);
  for (rdnet::Index i = 0; i < table.rows.rows(); ++i) {
    for (rdnet::Index c = 2; c <= 6; ++c) CHECK(table.rows(i, c) == 0.0);
    CHECK(table.rows(i, 7) == 1.0);
  }
}

TEST_CASE("bounds batch mode audits random spectra") {
  const auto table_path = temp_path("bounds_batch") + ".csv";
  const auto result =
      run_command("bounds --random 100 --seed 3 --out " + table_path);
  CHECK(result.exit_code == 0);
  CHECK(extract(result.output, "spectra") == "100");
  CHECK(extract(result.output, "rows") == "2000");
  CHECK(extract(result.output, "failures") == "0");
}

TEST_CASE("pca reports dimensions and conditioning, and saves a model") {
  // Anisotropic 5-dim data with a deterministic pattern: full rank, known
  // dominant axis.
  std::ostringstream data;
  for (int i = 0; i < 40; ++i) {
    const double t = 0.1 * i;
    data << 10.0 * std::sin(1.0 + t) << ' ' << 3.0 * std::cos(2.0 + 1.3 * t)
         << ' ' << std::sin(3.0 + 2.1 * t) << ' '
         << 0.3 * std::cos(4.0 + 3.7 * t) << ' '
         << 0.1 * std::sin(5.0 + 4.3 * t) << '\n';
  }
  const auto data_path = temp_path("pca_data") + ".txt";
  write_text(data_path, data.str());

  const auto model_path = temp_path("pca_model") + ".bin";
  const auto by_ratio = run_command("pca --data " + data_path +
                                    " --pca-ratio 1.0 --out " + model_path);
  CHECK(by_ratio.exit_code == 0);
  CHECK(extract(by_ratio.output, "input_dim") == "5");
  CHECK(extract(by_ratio.output, "selected_dim") == "5");
  CHECK(extract_number(by_ratio.output, "cumulative_variance_ratio") ==
        doctest::Approx(1.0).epsilon(1e-12));
  // Full-rank retention leaves the condition number untouched.
  CHECK(extract_number(by_ratio.output, "kappa_retained") ==
        doctest::Approx(extract_number(by_ratio.output, "kappa_full"))
            .epsilon(1e-12));

  const auto bundle = rdnet::load_model(model_path);
  REQUIRE(bundle.pca.has_value());
  CHECK(!bundle.network.has_value());
  CHECK(bundle.pca->output_dim == 5);

  const auto by_dim = run_command("pca --data " + data_path +
                                  " --pca-dim 2 --out " + model_path);
  CHECK(by_dim.exit_code == 0);
  CHECK(extract(by_dim.output, "selected_dim") == "2");
  CHECK(extract_number(by_dim.output, "kappa_retained") <
        extract_number(by_dim.output, "kappa_full"));

  const auto both = run_command("pca --data " + data_path +
                                " --pca-dim 2 --pca-ratio 0.5");
  CHECK(both.exit_code == 1);
}

TEST_CASE("train writes a model plus trace and is byte-deterministic") {
  const auto model_a = temp_path("model_a") + ".bin";
  const auto model_b = temp_path("model_b") + ".bin";
  const auto trace_path = temp_path("trace") + ".csv";

  // eps2, eta, lambda_u, delta stay at their defaults so the echo lines below
  // really exercise default resolution.
  const std::string train_flags = synthetic_flags("--layers 5");
  const auto first = run_command("train " + train_flags + " --out " + model_a +
                                 " --trace-out " + trace_path);
  REQUIRE(first.exit_code == 0);
  CHECK(extract(first.output, "feature_dim") == "8");
  CHECK(extract(first.output, "classes") == "3");
  CHECK(extract(first.output, "samples") == "60");
  // Defaults are echoed in the resolved configuration.
  CHECK(extract(first.output, "[config] eta") == "0.5");
  CHECK(extract(first.output, "[config] lambda_u") == "500");
  CHECK(extract(first.output, "[config] delta").find("e-08") !=
        std::string::npos);

  const auto second = run_command("train " + train_flags + " --out " + model_b);
  REQUIRE(second.exit_code == 0);
  CHECK(slurp(model_a) == slurp(model_b));
  CHECK(!slurp(model_a).empty());

  const auto trace = rdnet::read_table(trace_path);
  REQUIRE(trace.columns == std::vector<std::string>{"layer", "objective"});
  CHECK(trace.rows.rows() == 6);
  CHECK(trace.rows(0, 0) == 0.0);
  CHECK(trace.rows(5, 0) == 5.0);

  const auto bundle = rdnet::load_model(model_a);
  REQUIRE(bundle.network.has_value());
  CHECK(bundle.network->layers.size() == 5);
}

TEST_CASE("eval reports accuracy on the held-out synthetic split") {
  const auto model_path = temp_path("model_eval") + ".bin";
  const auto train_result = run_command(
      "train " + synthetic_flags("--layers 5") + " --out " + model_path);
  REQUIRE(train_result.exit_code == 0);

  const auto report_path = temp_path("report") + ".csv";
  const auto sim_path = temp_path("similarity") + ".csv";
  const auto result = run_command("eval --model " + model_path + " " +
                                  synthetic_flags("") + " --out " +
                                  report_path + " --similarity-out " +
                                  sim_path);
  REQUIRE(result.exit_code == 0);
  CHECK(extract(result.output, "samples") == "30");
  const double accuracy = extract_number(result.output, "accuracy");
  CHECK(accuracy >= 0.8);
  CHECK(result.output.find("accuracy_class_0") != std::string::npos);
  CHECK(result.output.find("accuracy_class_2") != std::string::npos);

  const auto report = rdnet::read_table(report_path);
  REQUIRE(report.rows.rows() == 4);
  CHECK(report.rows(3, 0) == -1.0);
  CHECK(report.rows(3, 3) == doctest::Approx(accuracy).epsilon(1e-12));

  const auto similarity = rdnet::read_table(sim_path);
  CHECK(similarity.rows.rows() == 3);
  CHECK(similarity.rows.cols() == 4);
}

TEST_CASE("eval fails cleanly on an empty test split") {
  const auto model_path = temp_path("model_empty") + ".bin";
  const auto train_result = run_command(
      "train " + synthetic_flags("--layers 2") + " --out " + model_path);
  REQUIRE(train_result.exit_code == 0);

  const auto result = run_command(
      "eval --model " + model_path +
      " --synthetic --classes 3 --dim 8 --subspace-dim 1 --per-class 30 "
      "--train-per-class 30 --sigma 0.05 --seed 7");
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("empty") != std::string::npos);
}

TEST_CASE("train rejects an unknown mode via flag validation") {
  const auto result =
      run_command("train " + synthetic_flags("--mode bogus"));
  CHECK(result.exit_code != 0);
}

TEST_CASE("config file supplies flags and the command line overrides it") {
  const auto config_path = temp_path("config") + ".ini";
  write_text(config_path, std::string("[alpha]\neigenvalues=\"2,2,2\"\n"));

  const auto from_file = run_command("alpha --config " + config_path);
  CHECK(from_file.exit_code == 0);
  CHECK(extract_number(from_file.output, "alpha_star") == 0.0);

  const auto overridden = run_command("alpha --config " + config_path +
                                      " --eigenvalues " + kLadder);
  CHECK(overridden.exit_code == 0);
  CHECK(extract_number(overridden.output, "alpha_star") ==
        doctest::Approx(0.14213969083949280).epsilon(1e-6));
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <rdnet-binary> [doctest args]\n");
    return 2;
  }
  g_binary = argv[1];

  char tmpl[] = "/tmp/rdnet_cli_XXXXXX";
  if (mkdtemp(tmpl) == nullptr) {
    std::fprintf(stderr, "failed to create temp directory\n");
    return 2;
  }
  g_tmpdir = tmpl;

  std::vector<char*> args;
  args.push_back(argv[0]);
  for (int i = 2; i < argc; ++i) args.push_back(argv[i]);
  doctest::Context context(static_cast<int>(args.size()), args.data());
  return context.run();
}

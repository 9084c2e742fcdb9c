/*
 Copyright 2026 The lyapnet authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef LYAPNET_BENCH_HPP
#define LYAPNET_BENCH_HPP

#include "lyapnet/simeval.hpp"
#include "lyapnet/trainer.hpp"

namespace lyapnet {

/// Experiment harness: trains the stable and unconstrained variants on the
/// same data for every seed, evaluates them, and probes recovery from a
/// mid-rollout perturbation of one data extent.
struct BenchSpec {
  Dataset dataset;
  std::vector<uint64_t> seeds = {1};
  std::vector<Mode> modes = {Mode::Stable, Mode::Unconstrained};
  TrainConfig train;
  double split_ratio = 0.8;
  std::vector<int> policy_hidden = {256, 256, 128, 128};
  std::vector<int> icnn_hidden = {128, 128, 128};
  /// Magnitude of the recovery perturbation as a multiple of the data
  /// extent.
  double perturbation_scale = 1.0;
  std::filesystem::path output_dir;  // empty skips file output

  void validate() const;
};

struct BenchRow {
  uint64_t seed = 0;
  Mode mode = Mode::Stable;
  double final_loss = 0.0;
  double mse = 0.0;
  double dtw = 0.0;
  double train_seconds = 0.0;
  bool recovered = false;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

MeanStd mean_std(const std::vector<double>& values);

struct BenchResult {
  std::vector<BenchRow> rows;
};

/// Runs every (seed, mode) pair. When output_dir is set, writes
/// `bench_rows.csv` with one row per run and `bench_aggregate.csv` with
/// per-mode mean and standard deviation of each metric.
BenchResult run_bench(const BenchSpec& spec);

std::string bench_rows_csv(const BenchResult& result);
std::string bench_aggregate_csv(const BenchResult& result);

}  // namespace lyapnet

#endif  // LYAPNET_BENCH_HPP

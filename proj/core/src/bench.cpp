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

#include "lyapnet/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lyapnet {

void BenchSpec::validate() const {
  if (seeds.empty()) {
    throw std::invalid_argument("BenchSpec: need at least one seed");
  }
  if (modes.empty()) {
    throw std::invalid_argument("BenchSpec: need at least one mode");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw std::invalid_argument("BenchSpec: split ratio must lie in (0, 1)");
  }
  if (dataset.demonstrations.empty()) {
    throw std::invalid_argument("BenchSpec: empty dataset");
  }
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double mean_rollout_dtw(const StablePolicyModel& model, const Dataset& ds) {
  const double conv = 1e-2 * ds.extent();
  double total = 0.0;
  for (const auto& demo : ds.demonstrations) {
    Trajectory t = rollout(model, demo.states.front(), demo.dt,
                           10 * demo.length(), conv);
    total += dtw_metric(t.states, demo.states);
  }
  return total / static_cast<double>(ds.demonstrations.size());
}

bool perturbed_recovery(const StablePolicyModel& model, const Dataset& ds,
                        double scale, uint64_t seed) {
  const auto& demo = ds.demonstrations.front();
  const int max_steps = 10 * demo.length();
  std::mt19937_64 rng(seed ^ 0xb5ad4eceda1ce2a9ull);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector dir(ds.dim);
  for (int i = 0; i < ds.dim; ++i) dir(i) = unit(rng);
  if (dir.norm() < 1e-12) dir(0) = 1.0;
  dir *= scale * ds.extent() / dir.norm();
  PerturbationSchedule schedule;
  schedule.displacements.emplace_back(max_steps / 4, dir);
  Trajectory t = rollout(model, demo.states.front(), demo.dt, max_steps,
                         1e-2 * ds.extent(), &schedule);
  return t.terminated == Termination::Converged;
}

}  // namespace

BenchResult run_bench(const BenchSpec& spec) {
  spec.validate();
  BenchResult result;
  for (uint64_t seed : spec.seeds) {
    auto [train_windows, test_windows] = split_dataset(
        spec.dataset, spec.train.loss.horizon, spec.split_ratio, seed);
    for (Mode mode : spec.modes) {
      StablePolicyModel init =
          make_default_model(spec.dataset.dim, spec.dataset.target, seed,
                             spec.policy_hidden, spec.icnn_hidden);
      init.mode = mode;
      TrainConfig cfg = spec.train;
      cfg.seed = seed;
      cfg.loss.dt = spec.dataset.demonstrations.front().dt;

      const auto t0 = std::chrono::steady_clock::now();
      auto [model, report] = train(spec.dataset, train_windows, init, cfg);
      const auto t1 = std::chrono::steady_clock::now();

      BenchRow row;
      row.seed = seed;
      row.mode = mode;
      row.final_loss =
          report.epoch_loss.empty() ? report.initial_loss
                                    : report.epoch_loss.back();
      row.mse = mse_metric(model, spec.dataset,
                           test_windows.empty() ? train_windows : test_windows);
      row.dtw = mean_rollout_dtw(model, spec.dataset);
      row.train_seconds = std::chrono::duration<double>(t1 - t0).count();
      row.recovered =
          perturbed_recovery(model, spec.dataset, spec.perturbation_scale, seed);
      result.rows.push_back(std::move(row));
    }
  }
  if (!spec.output_dir.empty()) {
    std::filesystem::create_directories(spec.output_dir);
    std::ofstream rows(spec.output_dir / "bench_rows.csv");
    rows << bench_rows_csv(result);
    std::ofstream agg(spec.output_dir / "bench_aggregate.csv");
    agg << bench_aggregate_csv(result);
  }
  return result;
}

std::string bench_rows_csv(const BenchResult& result) {
  std::ostringstream out;
  out << "seed,mode,final_loss,mse,dtw,train_seconds,recovered\n";
  for (const BenchRow& r : result.rows) {
    out << r.seed << "," << mode_name(r.mode) << "," << fmt(r.final_loss)
        << "," << fmt(r.mse) << "," << fmt(r.dtw) << ","
        << fmt(r.train_seconds) << "," << (r.recovered ? "true" : "false")
        << "\n";
  }
  return out.str();
}

std::string bench_aggregate_csv(const BenchResult& result) {
  std::ostringstream out;
  out << "mode,metric,mean,std\n";
  for (Mode mode : {Mode::Stable, Mode::Unconstrained}) {
    std::vector<double> loss, mse, dtw, secs, rec;
    for (const BenchRow& r : result.rows) {
      if (r.mode != mode) continue;
      loss.push_back(r.final_loss);
      mse.push_back(r.mse);
      dtw.push_back(r.dtw);
      secs.push_back(r.train_seconds);
      rec.push_back(r.recovered ? 1.0 : 0.0);
    }
    if (loss.empty()) continue;
    const std::pair<const char*, std::vector<double>*> metrics[] = {
        {"final_loss", &loss},
        {"mse", &mse},
        {"dtw", &dtw},
        {"train_seconds", &secs},
        {"recovered", &rec}};
    for (const auto& [name, values] : metrics) {
      MeanStd ms = mean_std(*values);
      out << mode_name(mode) << "," << name << "," << fmt(ms.mean) << ","
          << fmt(ms.std) << "\n";
    }
  }
  return out.str();
}

}  // namespace lyapnet

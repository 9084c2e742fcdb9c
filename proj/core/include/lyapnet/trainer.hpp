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

#ifndef LYAPNET_TRAINER_HPP
#define LYAPNET_TRAINER_HPP

#include "lyapnet/objective.hpp"

namespace lyapnet {

struct TrainConfig {
  LossConfig loss;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 128;
  int max_epochs = 500;
  /// Global L2 clipping threshold; values <= 0 disable clipping.
  double grad_clip_norm = 1.0;
  uint64_t seed = 0;
  /// Snapshot cadence in epochs; 0 keeps only the initial snapshot. When
  /// checkpoint_path is set, snapshots are also written there.
  int checkpoint_every = 0;
  std::string checkpoint_path;
  /// Early stopping patience in epochs on a 10% held-out slice of the
  /// training windows; 0 disables it.
  int early_stop_patience = 0;

  void validate() const;
};

struct InvariantSummary {
  double halfspace_max = 0.0;      // largest grad_v' pi over sampled states
  bool halfspace_ok = true;
  bool recursion_weights_nonneg = true;
  int samples = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_seconds;
  double initial_loss = 0.0;
  uint64_t seed = 0;
  int completed_epochs = 0;
  bool aborted = false;
  std::string diagnostic;
  InvariantSummary invariants;
  std::string config_echo;  // JSON-formatted copy of the configuration
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;

  void initialize(const std::vector<Matrix*>& params);
};

/// One bias-corrected Adam update, in place. Throws on non-finite gradients.
void adam_step(std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, const TrainConfig& cfg);

/// Scales all gradients by max_norm / ||g|| when the global L2 norm exceeds
/// max_norm. Returns the scale that was applied (1 when unchanged).
double clip_gradients(std::vector<Matrix>& grads, double max_norm);

std::string train_config_json(const TrainConfig& cfg);

/// Jointly optimizes the policy network and the ICNN on the given windows.
/// Deterministic for a fixed seed, config, and data. On a non-finite loss or
/// gradient the run aborts and the most recent snapshot (initial model, or
/// the last checkpoint) is returned with the diagnostic recorded.
std::pair<StablePolicyModel, TrainReport> train(
    const Dataset& ds, const std::vector<Window>& windows,
    const StablePolicyModel& initial, const TrainConfig& cfg);

/// Samples states in a box around the data and records the worst half-space
/// residual plus the recursion-weight sign check.
InvariantSummary check_invariants(const StablePolicyModel& model,
                                  const Dataset& ds, int samples,
                                  uint64_t seed);

}  // namespace lyapnet

#endif  // LYAPNET_TRAINER_HPP

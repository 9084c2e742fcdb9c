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

#ifndef LYAPNET_OBJECTIVE_HPP
#define LYAPNET_OBJECTIVE_HPP

#include "lyapnet/dataio.hpp"

namespace lyapnet {

/// Short-horizon training loss configuration.
///
/// The loss combines the velocity mismatch at the window head with one-step
/// Euler residuals along the window:
///
///   L = g_0 mean[(pi(x[s]) - xdot[s])^2]
///     + sum_{i=1..N} g_i mean[(x[s+i-1] + pi(x[s+i-1]) dt - x[s+i])^2]
///
/// where mean averages over all vector components and batch entries, and the
/// discounts g_i default to 2^-i. An optional term penalizes the squared
/// difference between the square-root-velocity representation of the
/// one-step predictions and of the expert window.
struct LossConfig {
  int horizon = 2;
  std::vector<double> discounts = {1.0, 0.5, 0.25};  // g_0 .. g_horizon
  double dt = 0.01;
  bool srvf_term = false;
  double srvf_weight = 0.1;

  void validate() const;
  static std::vector<double> default_discounts(int horizon);
};

/// Square-root velocity representation q[s] = dx[s] / ||dx[s]||^(1/2) with
/// dx[s] = x[s+1] - x[s]. Segments shorter than 1e-12 produce a zero vector
/// and are flagged as degenerate.
struct Srvf {
  std::vector<Vector> q;
  std::vector<bool> degenerate;
};

Srvf srvf_transform(const std::vector<Vector>& states);

/// A batch of windows in matrix form: states[i] holds the (start+i)-th state
/// of every window as a column, velocities the label at the window head.
struct WindowBatch {
  std::vector<Matrix> states;  // horizon + 1 entries, each dim x batch
  Matrix velocities;           // dim x batch

  int batch_size() const {
    return static_cast<int>(states.empty() ? 0 : states.front().cols());
  }
};

WindowBatch gather_windows(const Dataset& ds, const std::vector<Window>& all,
                           std::size_t begin, std::size_t end, int horizon);

/// Builds the loss node for one batch. Differentiable with respect to every
/// model parameter leaf in `nodes`.
Ref horizon_loss_graph(Tape& tape, const StablePolicyModel& model,
                       const ModelNodes& nodes, const WindowBatch& batch,
                       const LossConfig& cfg);

/// Convenience evaluation on a scratch tape.
double horizon_loss(const StablePolicyModel& model, const WindowBatch& batch,
                    const LossConfig& cfg);

}  // namespace lyapnet

#endif  // LYAPNET_OBJECTIVE_HPP

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

#ifndef LYAPNET_SIMEVAL_HPP
#define LYAPNET_SIMEVAL_HPP

#include <iosfwd>
#include <optional>

#include "lyapnet/dataio.hpp"

namespace lyapnet {

enum class Termination { Converged, StepLimit, NonFinite };

std::string termination_name(Termination t);

/// Forward-Euler rollout. Between consecutive entries,
/// states[k+1] == states[k] + dt * actions[k] holds bitwise; scheduled
/// perturbations displace states[k] in place before its action is taken, so
/// the identity links the displaced state to its successor.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> actions;  // one fewer than states
  double dt = 0.0;
  Termination terminated = Termination::StepLimit;
  std::string diagnostic;
};

/// Displacements added to the state right before the step at the given
/// index. Indices must be strictly increasing.
struct PerturbationSchedule {
  std::vector<std::pair<int, Vector>> displacements;

  void validate() const;
};

/// Integrates x' = pi(x) with step dt until the state enters the
/// convergence ball around the model target or the step limit is reached.
/// A non-finite state stops the rollout and keeps the partial trajectory,
/// with the diagnostic naming the failing step.
Trajectory rollout(const StablePolicyModel& model, const Vector& x0, double dt,
                   int max_steps, double conv_radius,
                   const PerturbationSchedule* schedule = nullptr);

/// Mean squared velocity-prediction error over the windows' head samples:
/// sum of squared residual components divided by (dim * window count).
double mse_metric(const StablePolicyModel& model, const Dataset& ds,
                  const std::vector<Window>& windows);

/// Dynamic time warping distance with steps (1,0), (0,1), (1,1), matched
/// endpoints, Euclidean ground distance raised to the power q, and a final
/// 1/q root. Computed by dynamic programming; equals the minimum over all
/// admissible alignment paths.
double dtw_metric(const std::vector<Vector>& a, const std::vector<Vector>& b,
                  double q = 2.0);

/// Writes `x1,x2,a1,a2,v,vdot` rows over a uniform grid (2D models only):
/// the policy action, the potential, and the decrease diagnostic at every
/// grid point, row-major from the minimum corner.
void export_field(const StablePolicyModel& model, const Vector& lo,
                  const Vector& hi, int resolution, std::ostream& out);

/// Writes `k,x1..xn,a1..an` rows; the final state row carries zero action.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace lyapnet

#endif  // LYAPNET_SIMEVAL_HPP

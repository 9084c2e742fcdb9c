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

#ifndef LYAPNET_POLICY_HPP
#define LYAPNET_POLICY_HPP

#include "lyapnet/lyapunov.hpp"

namespace lyapnet {

enum class Mode { Stable, Unconstrained };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& name);

/// Composite policy. In stable mode the raw network output is projected onto
/// the half space where the potential decreases:
///
///   pi(x) = pihat(x) - grad_v(x) * s(g) / (||grad_v(x)||^2 + lambda)
///   g = grad_v(x)' pihat(x) + alpha v(x)
///
/// with s the projection activation. Softplus is the default: it keeps the
/// policy smooth and makes the decrease strictly negative wherever the
/// gradient is nonzero. Relu reproduces the hard projection. The lambda
/// regularizer keeps the denominator away from zero near the target. With
/// alpha = 0 the projection enforces plain asymptotic decrease; alpha > 0
/// adds an exponential-decrease margin.
///
/// In unconstrained mode the raw network is returned verbatim (behavioral
/// cloning ablation).
struct StablePolicyModel {
  MlpParams policy_net;
  LpfSpec lpf;
  Activation projection_activation = Activation::Softplus;
  double lambda = 1e-9;
  double alpha = 0.0;
  Mode mode = Mode::Stable;

  int dim() const { return lpf.dim(); }
  void validate() const;
};

/// Default architecture: policy 2-256-256-128-128-2 with leaky relu, ICNN
/// 2-128-128-128-1 with leaky relu hidden and softplus output.
StablePolicyModel make_default_model(int dim, const Vector& target,
                                     uint64_t seed,
                                     const std::vector<int>& policy_hidden = {
                                         256, 256, 128, 128},
                                     const std::vector<int>& icnn_hidden = {
                                         128, 128, 128});

Vector policy_action(const StablePolicyModel& model, const Vector& x);

/// grad_v(x)' pi(x), the discrete-time potential decrease diagnostic.
/// Stable mode only.
double lyapunov_decrease(const StablePolicyModel& model, const Vector& x);

/// Caches network scratch for repeated policy evaluation (rollouts,
/// certification sweeps). Safe for concurrent use from one thread each.
class PolicyEval {
 public:
  explicit PolicyEval(const StablePolicyModel& model);
  Vector action(const Vector& x) const;
  double decrease(const Vector& x) const;
  /// grad_v(x)' pi(x) without the stable-mode precondition; meaningful as a
  /// diagnostic for unconstrained models too.
  double raw_decrease(const Vector& x) const;
  double potential(const Vector& x) const { return lpf_.value(x); }
  Vector potential_gradient(const Vector& x) const { return lpf_.gradient(x); }
  const StablePolicyModel& model() const { return *model_; }

 private:
  const StablePolicyModel* model_;
  LpfEval lpf_;
};

/// Leaf handles for every trainable parameter of a model, in the canonical
/// order used by the trainer.
struct ModelNodes {
  MlpNodes policy;
  IcnnNodes icnn;
};

ModelNodes model_leaves(Tape& tape, const StablePolicyModel& model);

/// Leaves in canonical order: policy weights/biases per layer, then ICNN
/// input weights/biases per layer, then raw recursion weights.
std::vector<Ref> canonical_leaves(const ModelNodes& nodes);

/// Pointers to the model's parameter matrices in the same canonical order.
std::vector<Matrix*> trainable_parameters(StablePolicyModel& model);

/// Batched policy output node (nxB) for an nxB state node.
Ref policy_graph(Tape& tape, const StablePolicyModel& model,
                 const ModelNodes& nodes, Ref x);

}  // namespace lyapnet

#endif  // LYAPNET_POLICY_HPP

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

#ifndef LYAPNET_NETS_HPP
#define LYAPNET_NETS_HPP

#include <random>
#include <string>
#include <vector>

#include "lyapnet/autodiff.hpp"

namespace lyapnet {

enum class Activation { LeakyRelu, Relu, Softplus };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

double apply_activation(Activation a, double x, double leaky_slope);
double activation_slope(Activation a, double x, double leaky_slope);

/// Plain feedforward network. Hidden layers share one activation; the final
/// layer is linear.
struct MlpParams {
  std::vector<int> sizes;  // e.g. {2, 256, 256, 128, 128, 2}
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;  // column matrices
  Activation hidden_activation = Activation::LeakyRelu;
  double leaky_slope = 0.01;

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
  void validate() const;
};

/// Input-convex network: z_{l+1} = act(U_l x + W_l z_l + b_l) with the
/// recursion weights W_l kept nonnegative through a softplus
/// reparameterization of unconstrained raw weights. The first layer has no
/// recursion term and the output is a single unit. Activations must be
/// convex and non-decreasing, which every member of Activation is.
struct IcnnParams {
  std::vector<int> sizes;  // e.g. {2, 128, 128, 128, 1}
  std::vector<Matrix> input_weights;        // U_l, one per layer
  std::vector<Matrix> raw_recursion_weights;  // one per layer l >= 1
  std::vector<Matrix> biases;               // column matrices
  Activation hidden_activation = Activation::LeakyRelu;
  Activation output_activation = Activation::Softplus;
  double leaky_slope = 0.01;

  int input_dim() const { return sizes.front(); }
  int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
  void validate() const;
};

/// Uniform initialization in [-s, s] with s = sqrt(6 / (fan_in + fan_out)),
/// zero biases. ICNN raw recursion weights are shifted so that the effective
/// softplus-reparameterized weights start near 1/fan_in, which keeps layer
/// magnitudes of order one.
MlpParams make_mlp(const std::vector<int>& sizes, Activation hidden,
                   std::mt19937_64& rng, double leaky_slope = 0.01);
IcnnParams make_icnn(const std::vector<int>& sizes, Activation hidden,
                     Activation output, std::mt19937_64& rng,
                     double leaky_slope = 0.01);

/// ICNN initialized as a smoothed radial cone centered on `target`: the
/// first layer holds evenly spread unit directions scaled by `gain`, deeper
/// layers average them through near-uniform nonnegative recursion weights,
/// and the remaining input weights start small. The initial potential grows
/// like gain * 0.3 * ||x - target||, so its gradient has order-one magnitude
/// at every radius. A flat random start instead leaves the gradient tiny in
/// a wide region around the target, where the projection denominator
/// amplifies the gate into enormous actions; seeding the shape avoids that
/// failure mode from the first optimizer step.
IcnnParams make_icnn_radial(const std::vector<int>& sizes,
                            const Vector& target, std::mt19937_64& rng,
                            double gain = 1.0, double leaky_slope = 0.01);

Vector mlp_forward(const MlpParams& net, const Vector& x);

double icnn_forward(const IcnnParams& net, const Vector& x);

/// Effective nonnegative recursion weights W_l = softplus(raw W_l).
std::vector<Matrix> icnn_effective_weights(const IcnnParams& net);

/// Gradient of icnn_forward with respect to x.
Vector icnn_input_gradient(const IcnnParams& net, const Vector& x);

/// Caches the effective recursion weights so repeated evaluations skip the
/// reparameterization. Used by rollout and certification loops.
class IcnnEval {
 public:
  explicit IcnnEval(const IcnnParams& net);
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  const IcnnParams& params() const { return *net_; }

 private:
  const IcnnParams* net_;
  std::vector<Matrix> effective_;
  // per-call scratch, sized once
  mutable std::vector<Vector> pre_;
  mutable std::vector<Vector> post_;
};

/// Leaf handles for one network's parameters on a tape.
struct MlpNodes {
  std::vector<Ref> weights;
  std::vector<Ref> biases;
};

struct IcnnNodes {
  std::vector<Ref> input_weights;
  std::vector<Ref> raw_recursion_weights;
  std::vector<Ref> biases;
  std::vector<Ref> effective_weights;  // softplus(raw), built with the leaves
};

struct IcnnGraph {
  Ref value;                  // 1xB
  std::vector<Ref> preacts;   // pre-activation of each layer
};

MlpNodes mlp_leaves(Tape& tape, const MlpParams& net);
IcnnNodes icnn_leaves(Tape& tape, const IcnnParams& net);

/// Batched forward passes: x holds one state per column.
Ref mlp_graph(Tape& tape, const MlpParams& net, const MlpNodes& nodes, Ref x);
IcnnGraph icnn_graph(Tape& tape, const IcnnParams& net, const IcnnNodes& nodes,
                     Ref x);

/// Gradient of the ICNN output with respect to its input, expressed with
/// primitive nodes (reverse chain through the layers) so that a backward
/// pass through the result reaches the network parameters. Returns an nxB
/// node for an nxB input.
Ref icnn_gradient_graph(Tape& tape, const IcnnParams& net,
                        const IcnnNodes& nodes, const IcnnGraph& fwd, Ref x);

Ref activation_graph(Tape& tape, Activation a, Ref x, double leaky_slope);
Ref activation_slope_graph(Tape& tape, Activation a, Ref x,
                           double leaky_slope);

}  // namespace lyapnet

#endif  // LYAPNET_NETS_HPP

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

#include "lyapnet/policy.hpp"

#include <stdexcept>
#include <string>

namespace lyapnet {

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::Stable: return "stable";
    case Mode::Unconstrained: return "unconstrained";
  }
  throw std::logic_error("unknown mode");
}

Mode parse_mode(const std::string& name) {
  if (name == "stable") return Mode::Stable;
  if (name == "unconstrained") return Mode::Unconstrained;
  throw std::invalid_argument("unknown mode: " + name);
}

void StablePolicyModel::validate() const {
  policy_net.validate();
  lpf.validate();
  if (lambda < 0.0) {
    throw std::invalid_argument("StablePolicyModel: lambda must be >= 0");
  }
  if (alpha < 0.0) {
    throw std::invalid_argument("StablePolicyModel: alpha must be >= 0");
  }
  if (policy_net.input_dim() != lpf.dim() ||
      policy_net.output_dim() != lpf.dim()) {
    throw std::invalid_argument(
        "StablePolicyModel: policy network dimensions must match the "
        "potential dimension");
  }
}

StablePolicyModel make_default_model(int dim, const Vector& target,
                                     uint64_t seed,
                                     const std::vector<int>& policy_hidden,
                                     const std::vector<int>& icnn_hidden) {
  std::mt19937_64 rng(seed);
  std::vector<int> policy_sizes;
  policy_sizes.push_back(dim);
  policy_sizes.insert(policy_sizes.end(), policy_hidden.begin(),
                      policy_hidden.end());
  policy_sizes.push_back(dim);
  std::vector<int> icnn_sizes;
  icnn_sizes.push_back(dim);
  icnn_sizes.insert(icnn_sizes.end(), icnn_hidden.begin(), icnn_hidden.end());
  icnn_sizes.push_back(1);

  StablePolicyModel model;
  model.policy_net = make_mlp(policy_sizes, Activation::LeakyRelu, rng);
  model.lpf.icnn = make_icnn_radial(icnn_sizes, target, rng);
  model.lpf.target = target;
  model.validate();
  return model;
}

namespace {

void check_finite_stage(const char* stage, const Vector& v) {
  if (!v.allFinite()) {
    throw std::runtime_error(std::string("policy_action: non-finite value in ") +
                             stage);
  }
}

}  // namespace

PolicyEval::PolicyEval(const StablePolicyModel& model)
    : model_(&model), lpf_(model.lpf) {
  model.validate();
}

Vector PolicyEval::action(const Vector& x) const {
  const StablePolicyModel& m = *model_;
  if (x.size() != m.dim()) {
    throw std::invalid_argument("policy_action: state dimension mismatch");
  }
  if (m.mode == Mode::Unconstrained) {
    return mlp_forward(m.policy_net, x);
  }
  if (x == m.lpf.target) {
    // The target is the equilibrium; its action is zero by definition.
    return Vector::Zero(x.size());
  }
  Vector raw = mlp_forward(m.policy_net, x);
  check_finite_stage("policy network output", raw);
  Vector grad = lpf_.gradient(x);
  check_finite_stage("potential gradient", grad);
  double inner = grad.dot(raw);
  if (m.alpha > 0.0) {
    inner += m.alpha * lpf_.value(x);
  }
  const double gate =
      apply_activation(m.projection_activation, inner,
                       m.policy_net.leaky_slope);
  const double denom = grad.squaredNorm() + m.lambda;
  if (!(denom > 0.0)) {
    throw std::runtime_error(
        "policy_action: non-finite or zero projection denominator");
  }
  Vector out = raw - grad * (gate / denom);
  check_finite_stage("projected action", out);
  return out;
}

double PolicyEval::decrease(const Vector& x) const {
  if (model_->mode != Mode::Stable) {
    throw std::invalid_argument("lyapunov_decrease: model is not in stable mode");
  }
  return raw_decrease(x);
}

double PolicyEval::raw_decrease(const Vector& x) const {
  return lpf_.gradient(x).dot(action(x));
}

Vector policy_action(const StablePolicyModel& model, const Vector& x) {
  return PolicyEval(model).action(x);
}

double lyapunov_decrease(const StablePolicyModel& model, const Vector& x) {
  return PolicyEval(model).decrease(x);
}

ModelNodes model_leaves(Tape& tape, const StablePolicyModel& model) {
  model.validate();
  ModelNodes nodes;
  nodes.policy = mlp_leaves(tape, model.policy_net);
  nodes.icnn = icnn_leaves(tape, model.lpf.icnn);
  return nodes;
}

std::vector<Ref> canonical_leaves(const ModelNodes& nodes) {
  std::vector<Ref> out;
  for (std::size_t l = 0; l < nodes.policy.weights.size(); ++l) {
    out.push_back(nodes.policy.weights[l]);
    out.push_back(nodes.policy.biases[l]);
  }
  for (std::size_t l = 0; l < nodes.icnn.input_weights.size(); ++l) {
    out.push_back(nodes.icnn.input_weights[l]);
    out.push_back(nodes.icnn.biases[l]);
  }
  for (Ref r : nodes.icnn.raw_recursion_weights) {
    out.push_back(r);
  }
  return out;
}

std::vector<Matrix*> trainable_parameters(StablePolicyModel& model) {
  std::vector<Matrix*> out;
  for (std::size_t l = 0; l < model.policy_net.weights.size(); ++l) {
    out.push_back(&model.policy_net.weights[l]);
    out.push_back(&model.policy_net.biases[l]);
  }
  for (std::size_t l = 0; l < model.lpf.icnn.input_weights.size(); ++l) {
    out.push_back(&model.lpf.icnn.input_weights[l]);
    out.push_back(&model.lpf.icnn.biases[l]);
  }
  for (std::size_t l = 0; l < model.lpf.icnn.raw_recursion_weights.size();
       ++l) {
    out.push_back(&model.lpf.icnn.raw_recursion_weights[l]);
  }
  return out;
}

Ref policy_graph(Tape& tape, const StablePolicyModel& model,
                 const ModelNodes& nodes, Ref x) {
  model.validate();
  Ref raw = mlp_graph(tape, model.policy_net, nodes.policy, x);
  if (model.mode == Mode::Unconstrained) {
    return raw;
  }
  LpfGraph lpf = lpf_graph(tape, model.lpf, nodes.icnn, x);
  Ref inner = tape.col_sum(tape.mul(lpf.gradient, raw));  // 1xB
  if (model.alpha > 0.0) {
    inner = tape.add(inner, tape.scalar_mul(lpf.value, model.alpha));
  }
  Ref gate = activation_graph(tape, model.projection_activation, inner,
                              model.policy_net.leaky_slope);
  Ref denom = tape.add_scalar(tape.col_sum(tape.square(lpf.gradient)),
                              model.lambda);
  Ref coef = tape.div(gate, denom);  // 1xB
  return tape.sub(raw, tape.mul_row(lpf.gradient, coef));
}

}  // namespace lyapnet

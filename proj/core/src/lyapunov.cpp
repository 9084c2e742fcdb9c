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

#include "lyapnet/lyapunov.hpp"

#include <stdexcept>
#include <string>

namespace lyapnet {

void LpfSpec::validate() const {
  icnn.validate();
  if (!(delta > 0.0)) {
    throw std::invalid_argument("LpfSpec: delta must be positive");
  }
  if (target.size() != icnn.input_dim()) {
    throw std::invalid_argument(
        "LpfSpec: target dimension " + std::to_string(target.size()) +
        " does not match ICNN input dimension " +
        std::to_string(icnn.input_dim()));
  }
}

namespace {

void check_dim(const LpfSpec& spec, const Vector& x) {
  if (x.size() != spec.target.size()) {
    throw std::invalid_argument(
        "lpf: state dimension " + std::to_string(x.size()) +
        " does not match target dimension " +
        std::to_string(spec.target.size()));
  }
}

}  // namespace

LpfEval::LpfEval(const LpfSpec& spec)
    : spec_(&spec), icnn_(spec.icnn) {
  spec.validate();
  anchor_value_ = icnn_.value(spec.target);
  anchor_gradient_ = icnn_.gradient(spec.target);
}

double LpfEval::value(const Vector& x) const {
  check_dim(*spec_, x);
  const Vector d = x - spec_->target;
  return icnn_.value(x) - anchor_value_ - anchor_gradient_.dot(d) +
         spec_->delta * d.squaredNorm();
}

Vector LpfEval::gradient(const Vector& x) const {
  check_dim(*spec_, x);
  const Vector d = x - spec_->target;
  return icnn_.gradient(x) - anchor_gradient_ + (2.0 * spec_->delta) * d;
}

double lpf_value(const LpfSpec& spec, const Vector& x) {
  return LpfEval(spec).value(x);
}

Vector lpf_input_gradient(const LpfSpec& spec, const Vector& x) {
  return LpfEval(spec).gradient(x);
}

LpfGraph lpf_graph(Tape& tape, const LpfSpec& spec, const IcnnNodes& nodes,
                   Ref x) {
  spec.validate();
  const Eigen::Index batch = tape.value(x).cols();
  if (tape.value(x).rows() != spec.target.size()) {
    throw std::invalid_argument("lpf_graph: state dimension mismatch");
  }

  IcnnGraph at_x = icnn_graph(tape, spec.icnn, nodes, x);
  Ref grad_x = icnn_gradient_graph(tape, spec.icnn, nodes, at_x, x);

  // Anchor at the target; a single column shared by the whole batch.
  Ref target_node = tape.constant(spec.target);
  IcnnGraph at_t = icnn_graph(tape, spec.icnn, nodes, target_node);
  Ref grad_t = icnn_gradient_graph(tape, spec.icnn, nodes, at_t, target_node);

  Ref diff = tape.sub(x, tape.constant(spec.target.replicate(1, batch)));
  Ref tangent = tape.matmul(tape.transpose(grad_t), diff);  // 1xB
  Ref quad = tape.scalar_mul(tape.col_sum(tape.square(diff)), spec.delta);

  LpfGraph out;
  out.value = tape.add(tape.sub(tape.sub(at_x.value, at_t.value), tangent),
                       quad);
  out.gradient = tape.add(
      tape.add_bias(grad_x, tape.scalar_mul(grad_t, -1.0)),
      tape.scalar_mul(diff, 2.0 * spec.delta));
  return out;
}

}  // namespace lyapnet

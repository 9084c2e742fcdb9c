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

#ifndef LYAPNET_LYAPUNOV_HPP
#define LYAPNET_LYAPUNOV_HPP

#include "lyapnet/nets.hpp"

namespace lyapnet {

/// Convex potential with a unique zero at the target:
///
///   v(x) = vhat(x) - vhat(x*) - grad_vhat(x*)' (x - x*) + delta ||x - x*||^2
///
/// where vhat is the ICNN. Subtracting the supporting tangent plane at the
/// target keeps the bracketed part nonnegative for any convex vhat (first
/// order convexity condition), so v is positive definite and radially
/// unbounded for every delta > 0, not just for networks whose minimum happens
/// to sit at x*. v stays convex: the correction is affine.
struct LpfSpec {
  IcnnParams icnn;
  Vector target;
  double delta = 1e-4;

  int dim() const { return static_cast<int>(target.size()); }
  void validate() const;
};

double lpf_value(const LpfSpec& spec, const Vector& x);

/// grad v(x) = grad_vhat(x) - grad_vhat(x*) + 2 delta (x - x*).
/// Exactly zero at x = x*.
Vector lpf_input_gradient(const LpfSpec& spec, const Vector& x);

/// Caches the target anchor terms for repeated evaluation.
class LpfEval {
 public:
  explicit LpfEval(const LpfSpec& spec);
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  const LpfSpec& spec() const { return *spec_; }

 private:
  const LpfSpec* spec_;
  IcnnEval icnn_;
  double anchor_value_;
  Vector anchor_gradient_;
};

/// Batched value (1xB) and input gradient (nxB) nodes for an nxB state node.
/// Both stay differentiable with respect to the ICNN parameters, including
/// the anchor terms evaluated at the target.
struct LpfGraph {
  Ref value;
  Ref gradient;
};

LpfGraph lpf_graph(Tape& tape, const LpfSpec& spec, const IcnnNodes& nodes,
                   Ref x);

}  // namespace lyapnet

#endif  // LYAPNET_LYAPUNOV_HPP

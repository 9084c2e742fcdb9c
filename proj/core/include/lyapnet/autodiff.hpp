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

#ifndef LYAPNET_AUTODIFF_HPP
#define LYAPNET_AUTODIFF_HPP

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <vector>

namespace lyapnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerically stable ln(1 + e^x).
double softplus(double x);
/// Numerically stable logistic function 1 / (1 + e^-x).
double sigmoid(double x);
/// Inverse of softplus, ln(e^y - 1), defined for y > 0.
double softplus_inverse(double y);

/// Primitive operations recorded on the tape.
///
/// Elementwise binaries (Add/Sub/Mul/Div) accept operands of identical shape
/// or a 1x1 operand on either side, which broadcasts. MulRow scales the
/// columns of a matrix by a 1xN row; AddBias adds an Mx1 column to every
/// column of an MxN matrix. Anything richer than these matrix/vector/scalar
/// rules is out of scope.
enum class OpKind {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Div,
  MulRow,
  AddBias,
  ScalarMul,
  AddScalar,
  Transpose,
  Sum,
  Mean,
  ColSum,
  Square,
  Sqrt,
  Dot,
  L2NormSq,
  Relu,
  LeakyRelu,
  Softplus,
  Sigmoid,
  ReluStep,
  LeakyReluStep,
};

/// Handle to a node on a Tape.
struct Ref {
  int index = -1;
  bool valid() const { return index >= 0; }
};

/// Reverse-mode automatic differentiation over dense real matrices.
///
/// Values are computed eagerly as the expression graph is built, so value()
/// is available immediately after each builder call. backward() accumulates
/// adjoints for a scalar root and returns the gradients of every leaf.
/// forward() re-evaluates the whole graph from the current leaf values,
/// which supports finite-difference probing via set_leaf().
///
/// A tape is single-threaded; completed value matrices may be read
/// concurrently once construction stops.
class Tape {
 public:
  Ref leaf(Matrix value);
  Ref constant(Matrix value);

  Ref matmul(Ref a, Ref b);
  Ref add(Ref a, Ref b);
  Ref sub(Ref a, Ref b);
  Ref mul(Ref a, Ref b);
  Ref div(Ref a, Ref b);
  Ref mul_row(Ref m, Ref row);
  Ref add_bias(Ref m, Ref bias);
  Ref scalar_mul(Ref a, double c);
  Ref add_scalar(Ref a, double c);
  Ref transpose(Ref a);
  Ref sum(Ref a);
  Ref mean(Ref a);
  Ref col_sum(Ref a);
  Ref square(Ref a);
  Ref sqrt(Ref a);
  Ref dot(Ref a, Ref b);
  Ref l2_norm_sq(Ref a);
  Ref relu(Ref a);
  /// Identical to relu; kept as a named alias for clamping at zero.
  Ref clamp_min0(Ref a) { return relu(a); }
  Ref leaky_relu(Ref a, double slope = 0.01);
  Ref softplus(Ref a);
  Ref sigmoid(Ref a);
  /// Derivative of relu as a value: 1 where a > 0, else 0 (0 at a == 0).
  Ref relu_step(Ref a);
  /// Derivative of leaky_relu as a value: 1 where a > 0, else slope.
  Ref leaky_relu_step(Ref a, double slope = 0.01);

  const Matrix& value(Ref r) const;
  bool is_leaf(Ref r) const;
  /// Overwrites a leaf value (shape must match). Call forward() afterwards
  /// to refresh dependent nodes.
  void set_leaf(Ref r, const Matrix& value);
  /// Recomputes every non-leaf value in topological order.
  void forward();

  /// Runs the reverse pass from a scalar (1x1) root and returns the gradient
  /// of the root with respect to every leaf, keyed by leaf node index.
  /// Adjoints of interior nodes are not exposed.
  std::map<int, Matrix> backward(Ref root);

  /// Builds nodes that evaluate the gradient of f with respect to x, where
  /// f(tape, x) must return a scalar node. The returned node's value equals
  /// the input gradient, and its own ancestry runs through every parameter
  /// node used by f, so a later backward() differentiates through it.
  /// Throws if f uses a primitive with no registered input-derivative rule.
  Ref input_gradient(const std::function<Ref(Tape&, Ref)>& f, Ref x);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    OpKind op;
    int a = -1;
    int b = -1;
    double attr = 0.0;
    Matrix value;
    Matrix adjoint;
  };

  Ref push(OpKind op, int a, int b, double attr, Matrix value);
  const Node& node(Ref r) const;
  void check(Ref r) const;
  void compute(Node& n);
  void accumulate(const Node& n);
  Ref emit_vjp(int node_index, int slot, Ref adjoint);

  std::vector<Node> nodes_;
};

}  // namespace lyapnet

#endif  // LYAPNET_AUTODIFF_HPP

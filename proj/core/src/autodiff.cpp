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

#include "lyapnet/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lyapnet {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) {
    throw std::invalid_argument("softplus_inverse: argument must be positive");
  }
  if (y > 30.0) {
    return y;  // softplus is the identity to double precision here
  }
  return std::log(std::expm1(y));
}

namespace {

std::string shape_of(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

[[noreturn]] void shape_error(const char* op, const Matrix& a,
                              const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": operand shapes " +
                              shape_of(a) + " and " + shape_of(b) +
                              " do not conform");
}

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Broadcast layout of an elementwise binary: identical shapes, or a 1x1 on
// either side.
enum class Cast { Same, AScalar, BScalar };

Cast cast_of(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Cast::Same;
  if (is_scalar(a)) return Cast::AScalar;
  if (is_scalar(b)) return Cast::BScalar;
  shape_error(op, a, b);
}

Matrix map_leaky(const Matrix& a, double slope) {
  return a.unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
}

Matrix map_leaky_step(const Matrix& a, double slope) {
  return a.unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

}  // namespace

Ref Tape::push(OpKind op, int a, int b, double attr, Matrix value) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.attr = attr;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Ref{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check(Ref r) const {
  if (r.index < 0 || r.index >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("Tape: node reference is not on this tape");
  }
}

const Tape::Node& Tape::node(Ref r) const {
  check(r);
  return nodes_[static_cast<std::size_t>(r.index)];
}

const Matrix& Tape::value(Ref r) const { return node(r).value; }

bool Tape::is_leaf(Ref r) const { return node(r).op == OpKind::Leaf; }

void Tape::set_leaf(Ref r, const Matrix& value) {
  check(r);
  Node& n = nodes_[static_cast<std::size_t>(r.index)];
  if (n.op != OpKind::Leaf) {
    throw std::invalid_argument("Tape::set_leaf: node is not a leaf");
  }
  if (n.value.rows() != value.rows() || n.value.cols() != value.cols()) {
    shape_error("set_leaf", n.value, value);
  }
  n.value = value;
}

void Tape::clear() { nodes_.clear(); }

Ref Tape::leaf(Matrix value) {
  return push(OpKind::Leaf, -1, -1, 0.0, std::move(value));
}

Ref Tape::constant(Matrix value) {
  return push(OpKind::Constant, -1, -1, 0.0, std::move(value));
}

Ref Tape::matmul(Ref a, Ref b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.cols() != vb.rows()) shape_error("matmul", va, vb);
  return push(OpKind::MatMul, a.index, b.index, 0.0, va * vb);
}

Ref Tape::add(Ref a, Ref b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  switch (cast_of("add", va, vb)) {
    case Cast::Same:
      return push(OpKind::Add, a.index, b.index, 0.0, va + vb);
    case Cast::AScalar:
      return push(OpKind::Add, a.index, b.index, 0.0,
                  (vb.array() + va(0, 0)).matrix());
    case Cast::BScalar:
      return push(OpKind::Add, a.index, b.index, 0.0,
                  (va.array() + vb(0, 0)).matrix());
  }
  throw std::logic_error("unreachable");
}

Ref Tape::sub(Ref a, Ref b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  switch (cast_of("sub", va, vb)) {
    case Cast::Same:
      return push(OpKind::Sub, a.index, b.index, 0.0, va - vb);
    case Cast::AScalar:
      return push(OpKind::Sub, a.index, b.index, 0.0,
                  (va(0, 0) - vb.array()).matrix());
    case Cast::BScalar:
      return push(OpKind::Sub, a.index, b.index, 0.0,
                  (va.array() - vb(0, 0)).matrix());
  }
  throw std::logic_error("unreachable");
}

Ref Tape::mul(Ref a, Ref b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  switch (cast_of("mul", va, vb)) {
    case Cast::Same:
      return push(OpKind::Mul, a.index, b.index, 0.0, va.cwiseProduct(vb));
    case Cast::AScalar:
      return push(OpKind::Mul, a.index, b.index, 0.0, va(0, 0) * vb);
    case Cast::BScalar:
      return push(OpKind::Mul, a.index, b.index, 0.0, vb(0, 0) * va);
  }
  throw std::logic_error("unreachable");
}

Ref Tape::div(Ref a, Ref b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  switch (cast_of("div", va, vb)) {
    case Cast::Same:
      return push(OpKind::Div, a.index, b.index, 0.0, va.cwiseQuotient(vb));
    case Cast::AScalar:
      return push(OpKind::Div, a.index, b.index, 0.0,
                  (va(0, 0) / vb.array()).matrix());
    case Cast::BScalar:
      return push(OpKind::Div, a.index, b.index, 0.0, va / vb(0, 0));
  }
  throw std::logic_error("unreachable");
}

Ref Tape::mul_row(Ref m, Ref row) {
  const Matrix& vm = value(m);
  const Matrix& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != vm.cols()) shape_error("mul_row", vm, vr);
  return push(OpKind::MulRow, m.index, row.index, 0.0,
              (vm.array().rowwise() * vr.row(0).array()).matrix());
}

Ref Tape::add_bias(Ref m, Ref bias) {
  const Matrix& vm = value(m);
  const Matrix& vb = value(bias);
  if (vb.cols() != 1 || vb.rows() != vm.rows()) shape_error("add_bias", vm, vb);
  return push(OpKind::AddBias, m.index, bias.index, 0.0,
              vm.colwise() + vb.col(0));
}

Ref Tape::scalar_mul(Ref a, double c) {
  return push(OpKind::ScalarMul, a.index, -1, c, c * value(a));
}

Ref Tape::add_scalar(Ref a, double c) {
  return push(OpKind::AddScalar, a.index, -1, c,
              (value(a).array() + c).matrix());
}

Ref Tape::transpose(Ref a) {
  return push(OpKind::Transpose, a.index, -1, 0.0, value(a).transpose());
}

Ref Tape::sum(Ref a) {
  Matrix v(1, 1);
  v(0, 0) = value(a).sum();
  return push(OpKind::Sum, a.index, -1, 0.0, std::move(v));
}

Ref Tape::mean(Ref a) {
  Matrix v(1, 1);
  v(0, 0) = value(a).mean();
  return push(OpKind::Mean, a.index, -1, 0.0, std::move(v));
}

Ref Tape::col_sum(Ref a) {
  return push(OpKind::ColSum, a.index, -1, 0.0, value(a).colwise().sum());
}

Ref Tape::square(Ref a) {
  return push(OpKind::Square, a.index, -1, 0.0,
              value(a).array().square().matrix());
}

Ref Tape::sqrt(Ref a) {
  return push(OpKind::Sqrt, a.index, -1, 0.0,
              value(a).array().sqrt().matrix());
}

Ref Tape::dot(Ref a, Ref b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  const bool vectors = (va.cols() == 1 || va.rows() == 1);
  if (!vectors || va.rows() != vb.rows() || va.cols() != vb.cols()) {
    shape_error("dot", va, vb);
  }
  Matrix v(1, 1);
  v(0, 0) = va.cwiseProduct(vb).sum();
  return push(OpKind::Dot, a.index, b.index, 0.0, std::move(v));
}

Ref Tape::l2_norm_sq(Ref a) {
  Matrix v(1, 1);
  v(0, 0) = value(a).squaredNorm();
  return push(OpKind::L2NormSq, a.index, -1, 0.0, std::move(v));
}

Ref Tape::relu(Ref a) {
  return push(OpKind::Relu, a.index, -1, 0.0, value(a).cwiseMax(0.0));
}

Ref Tape::leaky_relu(Ref a, double slope) {
  return push(OpKind::LeakyRelu, a.index, -1, slope,
              map_leaky(value(a), slope));
}

Ref Tape::softplus(Ref a) {
  return push(OpKind::Softplus, a.index, -1, 0.0,
              value(a).unaryExpr([](double x) { return lyapnet::softplus(x); }));
}

Ref Tape::sigmoid(Ref a) {
  return push(OpKind::Sigmoid, a.index, -1, 0.0,
              value(a).unaryExpr([](double x) { return lyapnet::sigmoid(x); }));
}

Ref Tape::relu_step(Ref a) {
  return push(OpKind::ReluStep, a.index, -1, 0.0,
              value(a).unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; }));
}

Ref Tape::leaky_relu_step(Ref a, double slope) {
  return push(OpKind::LeakyReluStep, a.index, -1, slope,
              map_leaky_step(value(a), slope));
}

void Tape::compute(Node& n) {
  auto va = [this](const Node& nd) -> const Matrix& {
    return nodes_[static_cast<std::size_t>(nd.a)].value;
  };
  auto vb = [this](const Node& nd) -> const Matrix& {
    return nodes_[static_cast<std::size_t>(nd.b)].value;
  };
  switch (n.op) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return;
    case OpKind::MatMul:
      n.value.noalias() = va(n) * vb(n);
      return;
    case OpKind::Add:
      switch (cast_of("add", va(n), vb(n))) {
        case Cast::Same: n.value = va(n) + vb(n); return;
        case Cast::AScalar: n.value = (vb(n).array() + va(n)(0, 0)).matrix(); return;
        case Cast::BScalar: n.value = (va(n).array() + vb(n)(0, 0)).matrix(); return;
      }
      return;
    case OpKind::Sub:
      switch (cast_of("sub", va(n), vb(n))) {
        case Cast::Same: n.value = va(n) - vb(n); return;
        case Cast::AScalar: n.value = (va(n)(0, 0) - vb(n).array()).matrix(); return;
        case Cast::BScalar: n.value = (va(n).array() - vb(n)(0, 0)).matrix(); return;
      }
      return;
    case OpKind::Mul:
      switch (cast_of("mul", va(n), vb(n))) {
        case Cast::Same: n.value = va(n).cwiseProduct(vb(n)); return;
        case Cast::AScalar: n.value = va(n)(0, 0) * vb(n); return;
        case Cast::BScalar: n.value = vb(n)(0, 0) * va(n); return;
      }
      return;
    case OpKind::Div:
      switch (cast_of("div", va(n), vb(n))) {
        case Cast::Same: n.value = va(n).cwiseQuotient(vb(n)); return;
        case Cast::AScalar: n.value = (va(n)(0, 0) / vb(n).array()).matrix(); return;
        case Cast::BScalar: n.value = va(n) / vb(n)(0, 0); return;
      }
      return;
    case OpKind::MulRow:
      n.value = (va(n).array().rowwise() * vb(n).row(0).array()).matrix();
      return;
    case OpKind::AddBias:
      n.value = va(n).colwise() + vb(n).col(0);
      return;
    case OpKind::ScalarMul:
      n.value = n.attr * va(n);
      return;
    case OpKind::AddScalar:
      n.value = (va(n).array() + n.attr).matrix();
      return;
    case OpKind::Transpose:
      n.value = va(n).transpose();
      return;
    case OpKind::Sum:
      n.value(0, 0) = va(n).sum();
      return;
    case OpKind::Mean:
      n.value(0, 0) = va(n).mean();
      return;
    case OpKind::ColSum:
      n.value = va(n).colwise().sum();
      return;
    case OpKind::Square:
      n.value = va(n).array().square().matrix();
      return;
    case OpKind::Sqrt:
      n.value = va(n).array().sqrt().matrix();
      return;
    case OpKind::Dot:
      n.value(0, 0) = va(n).cwiseProduct(vb(n)).sum();
      return;
    case OpKind::L2NormSq:
      n.value(0, 0) = va(n).squaredNorm();
      return;
    case OpKind::Relu:
      n.value = va(n).cwiseMax(0.0);
      return;
    case OpKind::LeakyRelu:
      n.value = map_leaky(va(n), n.attr);
      return;
    case OpKind::Softplus:
      n.value = va(n).unaryExpr([](double x) { return lyapnet::softplus(x); });
      return;
    case OpKind::Sigmoid:
      n.value = va(n).unaryExpr([](double x) { return lyapnet::sigmoid(x); });
      return;
    case OpKind::ReluStep:
      n.value = va(n).unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
      return;
    case OpKind::LeakyReluStep:
      n.value = map_leaky_step(va(n), n.attr);
      return;
  }
}

void Tape::forward() {
  for (Node& n : nodes_) compute(n);
}

// Adds the contribution of node n's adjoint to its parents' adjoints.
void Tape::accumulate(const Node& n) {
  auto A = [this](const Node& nd) -> Node& {
    return nodes_[static_cast<std::size_t>(nd.a)];
  };
  auto B = [this](const Node& nd) -> Node& {
    return nodes_[static_cast<std::size_t>(nd.b)];
  };
  const Matrix& g = n.adjoint;
  switch (n.op) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return;
    case OpKind::MatMul:
      A(n).adjoint.noalias() += g * B(n).value.transpose();
      B(n).adjoint.noalias() += A(n).value.transpose() * g;
      return;
    case OpKind::Add:
      switch (cast_of("add", A(n).value, B(n).value)) {
        case Cast::Same:
          A(n).adjoint += g;
          B(n).adjoint += g;
          return;
        case Cast::AScalar:
          A(n).adjoint(0, 0) += g.sum();
          B(n).adjoint += g;
          return;
        case Cast::BScalar:
          A(n).adjoint += g;
          B(n).adjoint(0, 0) += g.sum();
          return;
      }
      return;
    case OpKind::Sub:
      switch (cast_of("sub", A(n).value, B(n).value)) {
        case Cast::Same:
          A(n).adjoint += g;
          B(n).adjoint -= g;
          return;
        case Cast::AScalar:
          A(n).adjoint(0, 0) += g.sum();
          B(n).adjoint -= g;
          return;
        case Cast::BScalar:
          A(n).adjoint += g;
          B(n).adjoint(0, 0) -= g.sum();
          return;
      }
      return;
    case OpKind::Mul:
      switch (cast_of("mul", A(n).value, B(n).value)) {
        case Cast::Same:
          A(n).adjoint += g.cwiseProduct(B(n).value);
          B(n).adjoint += g.cwiseProduct(A(n).value);
          return;
        case Cast::AScalar:
          A(n).adjoint(0, 0) += g.cwiseProduct(B(n).value).sum();
          B(n).adjoint += A(n).value(0, 0) * g;
          return;
        case Cast::BScalar:
          A(n).adjoint += B(n).value(0, 0) * g;
          B(n).adjoint(0, 0) += g.cwiseProduct(A(n).value).sum();
          return;
      }
      return;
    case OpKind::Div:
      switch (cast_of("div", A(n).value, B(n).value)) {
        case Cast::Same:
          A(n).adjoint += g.cwiseQuotient(B(n).value);
          B(n).adjoint -=
              g.cwiseProduct(n.value).cwiseQuotient(B(n).value);
          return;
        case Cast::AScalar:
          A(n).adjoint(0, 0) += g.cwiseQuotient(B(n).value).sum();
          B(n).adjoint -=
              g.cwiseProduct(n.value).cwiseQuotient(B(n).value);
          return;
        case Cast::BScalar:
          A(n).adjoint += g / B(n).value(0, 0);
          B(n).adjoint(0, 0) -=
              g.cwiseProduct(n.value).sum() / B(n).value(0, 0);
          return;
      }
      return;
    case OpKind::MulRow:
      A(n).adjoint +=
          (g.array().rowwise() * B(n).value.row(0).array()).matrix();
      B(n).adjoint += g.cwiseProduct(A(n).value).colwise().sum();
      return;
    case OpKind::AddBias:
      A(n).adjoint += g;
      B(n).adjoint += g.rowwise().sum();
      return;
    case OpKind::ScalarMul:
      A(n).adjoint += n.attr * g;
      return;
    case OpKind::AddScalar:
      A(n).adjoint += g;
      return;
    case OpKind::Transpose:
      A(n).adjoint += g.transpose();
      return;
    case OpKind::Sum:
      A(n).adjoint.array() += g(0, 0);
      return;
    case OpKind::Mean:
      A(n).adjoint.array() +=
          g(0, 0) / static_cast<double>(A(n).value.size());
      return;
    case OpKind::ColSum:
      A(n).adjoint += g.replicate(A(n).value.rows(), 1);
      return;
    case OpKind::Square:
      A(n).adjoint += 2.0 * g.cwiseProduct(A(n).value);
      return;
    case OpKind::Sqrt:
      A(n).adjoint += 0.5 * g.cwiseQuotient(n.value);
      return;
    case OpKind::Dot:
      A(n).adjoint += g(0, 0) * B(n).value;
      B(n).adjoint += g(0, 0) * A(n).value;
      return;
    case OpKind::L2NormSq:
      A(n).adjoint += 2.0 * g(0, 0) * A(n).value;
      return;
    case OpKind::Relu:
      A(n).adjoint += g.cwiseProduct(A(n).value.unaryExpr(
          [](double x) { return x > 0.0 ? 1.0 : 0.0; }));
      return;
    case OpKind::LeakyRelu:
      A(n).adjoint += g.cwiseProduct(map_leaky_step(A(n).value, n.attr));
      return;
    case OpKind::Softplus:
      A(n).adjoint += g.cwiseProduct(A(n).value.unaryExpr(
          [](double x) { return lyapnet::sigmoid(x); }));
      return;
    case OpKind::Sigmoid:
      A(n).adjoint += g.cwiseProduct(
          n.value.cwiseProduct(Matrix::Ones(n.value.rows(), n.value.cols()) -
                               n.value));
      return;
    case OpKind::ReluStep:
    case OpKind::LeakyReluStep:
      // Step functions carry no gradient almost everywhere.
      return;
  }
}

std::map<int, Matrix> Tape::backward(Ref root) {
  check(root);
  const Node& r = node(root);
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw std::invalid_argument(
        "Tape::backward: root must be scalar (1x1), got " +
        shape_of(r.value));
  }
  for (Node& n : nodes_) {
    n.adjoint.setZero(n.value.rows(), n.value.cols());
  }
  nodes_[static_cast<std::size_t>(root.index)].adjoint(0, 0) = 1.0;
  for (int i = root.index; i >= 0; --i) {
    accumulate(nodes_[static_cast<std::size_t>(i)]);
  }
  std::map<int, Matrix> grads;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (nodes_[static_cast<std::size_t>(i)].op == OpKind::Leaf) {
      grads.emplace(i, nodes_[static_cast<std::size_t>(i)].adjoint);
    }
  }
  return grads;
}

// Emits primitive nodes that compute the vector-Jacobian product of node
// `node_index` with respect to its parent in `slot`, given the symbolic
// adjoint of the node itself. Returns an invalid Ref when the derivative is
// identically zero.
Ref Tape::emit_vjp(int node_index, int slot, Ref adjoint) {
  // Everything needed later is copied out first: pushing nodes below may
  // reallocate the node vector and invalidate references into it.
  const Node n = nodes_[static_cast<std::size_t>(node_index)];
  const Ref pa{n.a};
  const Ref pb{n.b};
  const Ref self{node_index};
  const Matrix av = n.a >= 0 ? nodes_[static_cast<std::size_t>(n.a)].value
                             : n.value;
  const Matrix bv = n.b >= 0 ? nodes_[static_cast<std::size_t>(n.b)].value
                             : n.value;
  auto reduce_if_scalar = [this](Ref r, const Matrix& target) {
    const bool scalar_target = is_scalar(target);
    const bool wide = value(r).size() > 1;
    return scalar_target && wide ? sum(r) : r;
  };
  switch (n.op) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return Ref{};
    case OpKind::MatMul:
      return slot == 0 ? matmul(adjoint, transpose(pb))
                       : matmul(transpose(pa), adjoint);
    case OpKind::Add:
      return reduce_if_scalar(adjoint, slot == 0 ? av : bv);
    case OpKind::Sub: {
      Ref r = slot == 0 ? adjoint : scalar_mul(adjoint, -1.0);
      return reduce_if_scalar(r, slot == 0 ? av : bv);
    }
    case OpKind::Mul: {
      Ref r = mul(adjoint, slot == 0 ? pb : pa);
      return reduce_if_scalar(r, slot == 0 ? av : bv);
    }
    case OpKind::Div: {
      if (slot == 0) {
        return reduce_if_scalar(div(adjoint, pb), av);
      }
      Ref r = scalar_mul(div(mul(adjoint, self), pb), -1.0);
      return reduce_if_scalar(r, bv);
    }
    case OpKind::MulRow:
      return slot == 0 ? mul_row(adjoint, pb)
                       : col_sum(mul(adjoint, pa));
    case OpKind::AddBias:
      return slot == 0
                 ? adjoint
                 : matmul(adjoint, constant(Matrix::Ones(av.cols(), 1)));
    case OpKind::ScalarMul:
      return scalar_mul(adjoint, n.attr);
    case OpKind::AddScalar:
      return adjoint;
    case OpKind::Transpose:
      return transpose(adjoint);
    case OpKind::Sum:
      return mul(constant(Matrix::Ones(av.rows(), av.cols())), adjoint);
    case OpKind::Mean:
      return scalar_mul(
          mul(constant(Matrix::Ones(av.rows(), av.cols())), adjoint),
          1.0 / static_cast<double>(av.size()));
    case OpKind::ColSum:
      return mul_row(constant(Matrix::Ones(av.rows(), av.cols())), adjoint);
    case OpKind::Square:
      return mul(adjoint, scalar_mul(pa, 2.0));
    case OpKind::Sqrt:
      return div(scalar_mul(adjoint, 0.5), self);
    case OpKind::Dot:
      return mul(slot == 0 ? pb : pa, adjoint);
    case OpKind::L2NormSq:
      return scalar_mul(mul(pa, adjoint), 2.0);
    case OpKind::Relu:
      return mul(adjoint, relu_step(pa));
    case OpKind::LeakyRelu:
      return mul(adjoint, leaky_relu_step(pa, n.attr));
    case OpKind::Softplus:
      return mul(adjoint, sigmoid(pa));
    case OpKind::Sigmoid: {
      Ref ones = constant(Matrix::Ones(n.value.rows(), n.value.cols()));
      return mul(adjoint, mul(self, sub(ones, self)));
    }
    case OpKind::ReluStep:
    case OpKind::LeakyReluStep:
      return Ref{};
  }
  throw std::invalid_argument(
      "Tape::input_gradient: primitive has no input-derivative rule");
}

Ref Tape::input_gradient(const std::function<Ref(Tape&, Ref)>& f, Ref x) {
  check(x);
  const Ref root = f(*this, x);
  check(root);
  const Matrix& rv = value(root);
  if (!is_scalar(rv)) {
    throw std::invalid_argument(
        "Tape::input_gradient: f must produce a scalar node, got " +
        shape_of(rv));
  }
  // Nodes whose value depends on x.
  std::vector<char> depends(nodes_.size(), 0);
  depends[static_cast<std::size_t>(x.index)] = 1;
  for (int i = x.index + 1; i <= root.index; ++i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if ((n.a >= 0 && depends[static_cast<std::size_t>(n.a)]) ||
        (n.b >= 0 && depends[static_cast<std::size_t>(n.b)])) {
      depends[static_cast<std::size_t>(i)] = 1;
    }
  }
  const Eigen::Index x_rows = value(x).rows();
  const Eigen::Index x_cols = value(x).cols();
  if (!depends[static_cast<std::size_t>(root.index)]) {
    return constant(Matrix::Zero(x_rows, x_cols));
  }
  std::vector<int> adj(static_cast<std::size_t>(root.index) + 1, -1);
  adj[static_cast<std::size_t>(root.index)] =
      constant(Matrix::Ones(1, 1)).index;
  for (int i = root.index; i >= x.index; --i) {
    if (!depends[static_cast<std::size_t>(i)] ||
        adj[static_cast<std::size_t>(i)] < 0) {
      continue;
    }
    const Ref g{adj[static_cast<std::size_t>(i)]};
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    const int parents[2] = {n.a, n.b};
    for (int slot = 0; slot < 2; ++slot) {
      const int p = parents[slot];
      if (p < 0 || !depends[static_cast<std::size_t>(p)]) continue;
      // Binary ops with the same node in both slots contribute twice.
      Ref c = emit_vjp(i, slot, g);
      if (!c.valid()) continue;
      int& slot_adj = adj[static_cast<std::size_t>(p)];
      slot_adj = slot_adj < 0 ? c.index : add(Ref{slot_adj}, c).index;
    }
  }
  const int gx = adj[static_cast<std::size_t>(x.index)];
  if (gx < 0) {
    return constant(Matrix::Zero(x_rows, x_cols));
  }
  return Ref{gx};
}

}  // namespace lyapnet

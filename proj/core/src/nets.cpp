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

#include "lyapnet/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace lyapnet {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Relu: return "relu";
    case Activation::Softplus: return "softplus";
  }
  throw std::logic_error("unknown activation");
}

Activation parse_activation(const std::string& name) {
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "relu") return Activation::Relu;
  if (name == "softplus") return Activation::Softplus;
  throw std::invalid_argument("unknown activation: " + name);
}

double apply_activation(Activation a, double x, double leaky_slope) {
  switch (a) {
    case Activation::LeakyRelu: return x > 0.0 ? x : leaky_slope * x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Softplus: return softplus(x);
  }
  throw std::logic_error("unknown activation");
}

double activation_slope(Activation a, double x, double leaky_slope) {
  switch (a) {
    case Activation::LeakyRelu: return x > 0.0 ? 1.0 : leaky_slope;
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Softplus: return sigmoid(x);
  }
  throw std::logic_error("unknown activation");
}

void MlpParams::validate() const {
  if (sizes.size() < 2) {
    throw std::invalid_argument("MlpParams: need at least input and output");
  }
  for (int s : sizes) {
    if (s <= 0) throw std::invalid_argument("MlpParams: layer sizes must be positive");
  }
  if (weights.size() != static_cast<std::size_t>(layer_count()) ||
      biases.size() != weights.size()) {
    throw std::invalid_argument("MlpParams: layer count mismatch");
  }
  for (int l = 0; l < layer_count(); ++l) {
    const auto& w = weights[static_cast<std::size_t>(l)];
    if (w.rows() != sizes[static_cast<std::size_t>(l) + 1] ||
        w.cols() != sizes[static_cast<std::size_t>(l)]) {
      throw std::invalid_argument("MlpParams: weight shape mismatch");
    }
    const auto& b = biases[static_cast<std::size_t>(l)];
    if (b.rows() != w.rows() || b.cols() != 1) {
      throw std::invalid_argument("MlpParams: bias shape mismatch");
    }
  }
  if (leaky_slope < 0.0 || leaky_slope > 1.0) {
    throw std::invalid_argument("MlpParams: leaky slope outside [0, 1]");
  }
}

void IcnnParams::validate() const {
  if (sizes.size() < 2) {
    throw std::invalid_argument("IcnnParams: need at least input and output");
  }
  for (int s : sizes) {
    if (s <= 0) throw std::invalid_argument("IcnnParams: layer sizes must be positive");
  }
  if (sizes.back() != 1) {
    throw std::invalid_argument("IcnnParams: output dimension must be 1");
  }
  const auto layers = static_cast<std::size_t>(layer_count());
  if (input_weights.size() != layers || biases.size() != layers ||
      raw_recursion_weights.size() != layers - 1) {
    throw std::invalid_argument("IcnnParams: layer count mismatch");
  }
  for (int l = 0; l < layer_count(); ++l) {
    const auto& u = input_weights[static_cast<std::size_t>(l)];
    if (u.rows() != sizes[static_cast<std::size_t>(l) + 1] ||
        u.cols() != sizes.front()) {
      throw std::invalid_argument("IcnnParams: input weight shape mismatch");
    }
    const auto& b = biases[static_cast<std::size_t>(l)];
    if (b.rows() != u.rows() || b.cols() != 1) {
      throw std::invalid_argument("IcnnParams: bias shape mismatch");
    }
    if (l >= 1) {
      const auto& w = raw_recursion_weights[static_cast<std::size_t>(l) - 1];
      if (w.rows() != sizes[static_cast<std::size_t>(l) + 1] ||
          w.cols() != sizes[static_cast<std::size_t>(l)]) {
        throw std::invalid_argument("IcnnParams: recursion weight shape mismatch");
      }
    }
  }
  if (leaky_slope < 0.0 || leaky_slope > 1.0) {
    throw std::invalid_argument(
        "IcnnParams: leaky slope outside its convex non-decreasing range");
  }
}

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                      std::mt19937_64& rng) {
  const double s =
      std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-s, s);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = dist(rng);
    }
  }
  return m;
}

void check_input(const char* what, Eigen::Index got, int want) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": input has dimension " +
                                std::to_string(got) + ", expected " +
                                std::to_string(want));
  }
}

}  // namespace

MlpParams make_mlp(const std::vector<int>& sizes, Activation hidden,
                   std::mt19937_64& rng, double leaky_slope) {
  MlpParams net;
  net.sizes = sizes;
  net.hidden_activation = hidden;
  net.leaky_slope = leaky_slope;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.weights.push_back(uniform_matrix(sizes[l + 1], sizes[l], rng));
    net.biases.push_back(Matrix::Zero(sizes[l + 1], 1));
  }
  net.validate();
  return net;
}

IcnnParams make_icnn(const std::vector<int>& sizes, Activation hidden,
                     Activation output, std::mt19937_64& rng,
                     double leaky_slope) {
  IcnnParams net;
  net.sizes = sizes;
  net.hidden_activation = hidden;
  net.output_activation = output;
  net.leaky_slope = leaky_slope;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.input_weights.push_back(uniform_matrix(sizes[l + 1], sizes[0], rng));
    net.biases.push_back(Matrix::Zero(sizes[l + 1], 1));
    if (l >= 1) {
      Matrix raw = uniform_matrix(sizes[l + 1], sizes[l], rng);
      // Shift so softplus(raw) starts near 1/fan_in; raw uniform weights
      // would give effective weights near ln 2 and blow up wide layers.
      raw.array() += softplus_inverse(1.0 / static_cast<double>(sizes[l]));
      net.raw_recursion_weights.push_back(std::move(raw));
    }
  }
  net.validate();
  return net;
}

IcnnParams make_icnn_radial(const std::vector<int>& sizes,
                            const Vector& target, std::mt19937_64& rng,
                            double gain, double leaky_slope) {
  if (sizes.size() < 2 || sizes.front() != target.size()) {
    throw std::invalid_argument(
        "make_icnn_radial: sizes must start with the target dimension");
  }
  IcnnParams net;
  net.sizes = sizes;
  net.hidden_activation = Activation::LeakyRelu;
  net.output_activation = Activation::Softplus;
  net.leaky_slope = leaky_slope;
  const int dim = sizes.front();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1];
    Matrix u(rows, dim);
    if (l == 0) {
      for (int i = 0; i < rows; ++i) {
        Vector dir(dim);
        if (dim == 2) {
          const double theta =
              2.0 * M_PI * static_cast<double>(i) / rows + jitter(rng);
          dir << std::cos(theta), std::sin(theta);
        } else {
          for (int k = 0; k < dim; ++k) dir(k) = gauss(rng);
          dir.normalize();
        }
        u.row(i) = gain * dir.transpose();
      }
    } else {
      u = 0.1 * uniform_matrix(rows, dim, rng);
    }
    net.input_weights.push_back(u);
    // The first-layer bias centers the cone on the target; deeper biases
    // start at zero.
    Matrix b = Matrix::Zero(rows, 1);
    if (l == 0) {
      b = -(net.input_weights[0] * target);
    }
    net.biases.push_back(std::move(b));
    if (l >= 1) {
      Matrix raw = uniform_matrix(rows, sizes[l], rng);
      raw.array() += softplus_inverse(1.0 / static_cast<double>(sizes[l]));
      net.raw_recursion_weights.push_back(std::move(raw));
    }
  }
  net.validate();
  return net;
}

Vector mlp_forward(const MlpParams& net, const Vector& x) {
  check_input("mlp_forward", x.size(), net.input_dim());
  Vector h = x;
  for (int l = 0; l < net.layer_count(); ++l) {
    Vector pre = net.weights[static_cast<std::size_t>(l)] * h +
                 net.biases[static_cast<std::size_t>(l)].col(0);
    if (l + 1 < net.layer_count()) {
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        pre(i) = apply_activation(net.hidden_activation, pre(i),
                                  net.leaky_slope);
      }
    }
    h = std::move(pre);
  }
  return h;
}

std::vector<Matrix> icnn_effective_weights(const IcnnParams& net) {
  std::vector<Matrix> out;
  out.reserve(net.raw_recursion_weights.size());
  for (const Matrix& raw : net.raw_recursion_weights) {
    out.push_back(raw.unaryExpr([](double w) { return softplus(w); }));
  }
  return out;
}

IcnnEval::IcnnEval(const IcnnParams& net)
    : net_(&net), effective_(icnn_effective_weights(net)) {
  net.validate();
  pre_.resize(static_cast<std::size_t>(net.layer_count()));
  post_.resize(static_cast<std::size_t>(net.layer_count()));
}

double IcnnEval::value(const Vector& x) const {
  const IcnnParams& net = *net_;
  check_input("icnn_forward", x.size(), net.input_dim());
  const int layers = net.layer_count();
  for (int l = 0; l < layers; ++l) {
    const auto sl = static_cast<std::size_t>(l);
    pre_[sl] = net.input_weights[sl] * x + net.biases[sl].col(0);
    if (l >= 1) {
      pre_[sl].noalias() += effective_[sl - 1] * post_[sl - 1];
    }
    const Activation act =
        (l + 1 < layers) ? net.hidden_activation : net.output_activation;
    post_[sl] = pre_[sl].unaryExpr([&](double v) {
      return apply_activation(act, v, net.leaky_slope);
    });
  }
  return post_[static_cast<std::size_t>(layers - 1)](0);
}

Vector IcnnEval::gradient(const Vector& x) const {
  const IcnnParams& net = *net_;
  value(x);  // refreshes pre_/post_
  const int layers = net.layer_count();
  // delta_l = d(output) / d(pre-activation of layer l)
  Vector delta = pre_[static_cast<std::size_t>(layers - 1)].unaryExpr(
      [&](double v) {
        return activation_slope(net.output_activation, v, net.leaky_slope);
      });
  Vector grad =
      net.input_weights[static_cast<std::size_t>(layers - 1)].transpose() *
      delta;
  for (int l = layers - 2; l >= 0; --l) {
    const auto sl = static_cast<std::size_t>(l);
    Vector carried = effective_[sl].transpose() * delta;
    delta = carried.cwiseProduct(pre_[sl].unaryExpr([&](double v) {
      return activation_slope(net.hidden_activation, v, net.leaky_slope);
    }));
    grad.noalias() += net.input_weights[sl].transpose() * delta;
  }
  return grad;
}

double icnn_forward(const IcnnParams& net, const Vector& x) {
  return IcnnEval(net).value(x);
}

Vector icnn_input_gradient(const IcnnParams& net, const Vector& x) {
  return IcnnEval(net).gradient(x);
}

Ref activation_graph(Tape& tape, Activation a, Ref x, double leaky_slope) {
  switch (a) {
    case Activation::LeakyRelu: return tape.leaky_relu(x, leaky_slope);
    case Activation::Relu: return tape.relu(x);
    case Activation::Softplus: return tape.softplus(x);
  }
  throw std::logic_error("unknown activation");
}

Ref activation_slope_graph(Tape& tape, Activation a, Ref x,
                           double leaky_slope) {
  switch (a) {
    case Activation::LeakyRelu: return tape.leaky_relu_step(x, leaky_slope);
    case Activation::Relu: return tape.relu_step(x);
    case Activation::Softplus: return tape.sigmoid(x);
  }
  throw std::logic_error("unknown activation");
}

MlpNodes mlp_leaves(Tape& tape, const MlpParams& net) {
  net.validate();
  MlpNodes nodes;
  for (int l = 0; l < net.layer_count(); ++l) {
    nodes.weights.push_back(tape.leaf(net.weights[static_cast<std::size_t>(l)]));
    nodes.biases.push_back(tape.leaf(net.biases[static_cast<std::size_t>(l)]));
  }
  return nodes;
}

IcnnNodes icnn_leaves(Tape& tape, const IcnnParams& net) {
  net.validate();
  IcnnNodes nodes;
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto sl = static_cast<std::size_t>(l);
    nodes.input_weights.push_back(tape.leaf(net.input_weights[sl]));
    nodes.biases.push_back(tape.leaf(net.biases[sl]));
  }
  for (const Matrix& raw : net.raw_recursion_weights) {
    Ref r = tape.leaf(raw);
    nodes.raw_recursion_weights.push_back(r);
    nodes.effective_weights.push_back(tape.softplus(r));
  }
  return nodes;
}

Ref mlp_graph(Tape& tape, const MlpParams& net, const MlpNodes& nodes, Ref x) {
  if (tape.value(x).rows() != net.input_dim()) {
    check_input("mlp_graph", tape.value(x).rows(), net.input_dim());
  }
  Ref h = x;
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto sl = static_cast<std::size_t>(l);
    Ref pre = tape.add_bias(tape.matmul(nodes.weights[sl], h),
                            nodes.biases[sl]);
    h = (l + 1 < net.layer_count())
            ? activation_graph(tape, net.hidden_activation, pre,
                               net.leaky_slope)
            : pre;
  }
  return h;
}

IcnnGraph icnn_graph(Tape& tape, const IcnnParams& net, const IcnnNodes& nodes,
                     Ref x) {
  if (tape.value(x).rows() != net.input_dim()) {
    check_input("icnn_graph", tape.value(x).rows(), net.input_dim());
  }
  IcnnGraph out;
  Ref z{};
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto sl = static_cast<std::size_t>(l);
    Ref pre = tape.add_bias(tape.matmul(nodes.input_weights[sl], x),
                            nodes.biases[sl]);
    if (l >= 1) {
      pre = tape.add(pre, tape.matmul(nodes.effective_weights[sl - 1], z));
    }
    out.preacts.push_back(pre);
    const Activation act = (l + 1 < net.layer_count())
                               ? net.hidden_activation
                               : net.output_activation;
    z = activation_graph(tape, act, pre, net.leaky_slope);
  }
  out.value = z;
  return out;
}

Ref icnn_gradient_graph(Tape& tape, const IcnnParams& net,
                        const IcnnNodes& nodes, const IcnnGraph& fwd, Ref x) {
  (void)x;
  const int layers = net.layer_count();
  Ref delta = activation_slope_graph(
      tape, net.output_activation,
      fwd.preacts[static_cast<std::size_t>(layers - 1)], net.leaky_slope);
  Ref grad = tape.matmul(
      tape.transpose(nodes.input_weights[static_cast<std::size_t>(layers - 1)]),
      delta);
  for (int l = layers - 2; l >= 0; --l) {
    const auto sl = static_cast<std::size_t>(l);
    Ref carried = tape.matmul(tape.transpose(nodes.effective_weights[sl]),
                              delta);
    delta = tape.mul(carried,
                     activation_slope_graph(tape, net.hidden_activation,
                                            fwd.preacts[sl], net.leaky_slope));
    grad = tape.add(grad, tape.matmul(tape.transpose(nodes.input_weights[sl]),
                                      delta));
  }
  return grad;
}

}  // namespace lyapnet

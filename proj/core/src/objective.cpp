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

#include "lyapnet/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace lyapnet {

void LossConfig::validate() const {
  if (horizon < 1) {
    throw std::invalid_argument("LossConfig: horizon must be >= 1");
  }
  if (discounts.size() != static_cast<std::size_t>(horizon) + 1) {
    throw std::invalid_argument(
        "LossConfig: need horizon + 1 discount factors");
  }
  if (!(discounts.front() > 0.0)) {
    throw std::invalid_argument("LossConfig: the leading discount must be positive");
  }
  for (double g : discounts) {
    if (g < 0.0) {
      throw std::invalid_argument("LossConfig: discounts must be nonnegative");
    }
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("LossConfig: dt must be positive");
  }
  if (srvf_weight < 0.0) {
    throw std::invalid_argument("LossConfig: srvf weight must be nonnegative");
  }
}

std::vector<double> LossConfig::default_discounts(int horizon) {
  std::vector<double> g;
  for (int i = 0; i <= horizon; ++i) {
    g.push_back(std::pow(2.0, -i));
  }
  return g;
}

Srvf srvf_transform(const std::vector<Vector>& states) {
  if (states.size() < 2) {
    throw std::invalid_argument("srvf_transform: need at least two states");
  }
  Srvf out;
  out.q.reserve(states.size() - 1);
  out.degenerate.reserve(states.size() - 1);
  for (std::size_t s = 0; s + 1 < states.size(); ++s) {
    Vector dx = states[s + 1] - states[s];
    const double norm = dx.norm();
    if (norm < 1e-12) {
      out.q.push_back(Vector::Zero(dx.size()));
      out.degenerate.push_back(true);
    } else {
      out.q.push_back(dx / std::sqrt(norm));
      out.degenerate.push_back(false);
    }
  }
  return out;
}

WindowBatch gather_windows(const Dataset& ds, const std::vector<Window>& all,
                           std::size_t begin, std::size_t end, int horizon) {
  if (begin > end || end > all.size()) {
    throw std::invalid_argument("gather_windows: bad range");
  }
  const auto batch = static_cast<Eigen::Index>(end - begin);
  WindowBatch out;
  out.states.resize(static_cast<std::size_t>(horizon) + 1);
  for (auto& m : out.states) m.resize(ds.dim, batch);
  out.velocities.resize(ds.dim, batch);
  for (std::size_t w = begin; w < end; ++w) {
    const Window& win = all[w];
    const auto& demo =
        ds.demonstrations[static_cast<std::size_t>(win.demonstration)];
    if (win.start + horizon >= demo.length()) {
      throw std::invalid_argument(
          "gather_windows: window crosses a demonstration boundary");
    }
    const auto col = static_cast<Eigen::Index>(w - begin);
    for (int i = 0; i <= horizon; ++i) {
      out.states[static_cast<std::size_t>(i)].col(col) =
          demo.states[static_cast<std::size_t>(win.start + i)];
    }
    out.velocities.col(col) =
        demo.velocities[static_cast<std::size_t>(win.start)];
  }
  return out;
}

namespace {

// Batched SRVF of per-column segments with a vanishing regularizer that
// keeps the quarter-power differentiable at zero-length segments:
// q = dx * (||dx||^2 + eps)^(-1/4).
Ref srvf_columns(Tape& tape, Ref dx) {
  const Eigen::Index cols = tape.value(dx).cols();
  Ref norm_sq = tape.add_scalar(tape.col_sum(tape.square(dx)), 1e-24);
  Ref root = tape.sqrt(tape.sqrt(norm_sq));  // 1xB
  Ref inv = tape.div(tape.constant(Matrix::Ones(1, cols)), root);
  return tape.mul_row(dx, inv);
}

}  // namespace

Ref horizon_loss_graph(Tape& tape, const StablePolicyModel& model,
                       const ModelNodes& nodes, const WindowBatch& batch,
                       const LossConfig& cfg) {
  cfg.validate();
  if (batch.states.size() != static_cast<std::size_t>(cfg.horizon) + 1) {
    throw std::invalid_argument(
        "horizon_loss: batch window length does not match the horizon");
  }
  if (batch.batch_size() == 0) {
    throw std::invalid_argument("horizon_loss: empty batch");
  }

  // Policy outputs at the first `horizon` window positions; position i is
  // shared between the velocity term (i = 0) and the i+1-th Euler residual.
  std::vector<Ref> state_nodes;
  std::vector<Ref> actions;
  for (int i = 0; i < cfg.horizon; ++i) {
    Ref x = tape.constant(batch.states[static_cast<std::size_t>(i)]);
    state_nodes.push_back(x);
    actions.push_back(policy_graph(tape, model, nodes, x));
  }

  Ref vel = tape.constant(batch.velocities);
  Ref loss = tape.scalar_mul(tape.mean(tape.square(tape.sub(actions[0], vel))),
                             cfg.discounts[0]);
  std::vector<Ref> predicted;  // one-step prediction from position i-1
  for (int i = 1; i <= cfg.horizon; ++i) {
    Ref prev = state_nodes[static_cast<std::size_t>(i - 1)];
    Ref step = tape.add(
        prev, tape.scalar_mul(actions[static_cast<std::size_t>(i - 1)],
                              cfg.dt));
    predicted.push_back(step);
    Ref target = tape.constant(batch.states[static_cast<std::size_t>(i)]);
    Ref residual = tape.sub(step, target);
    loss = tape.add(loss,
                    tape.scalar_mul(tape.mean(tape.square(residual)),
                                    cfg.discounts[static_cast<std::size_t>(i)]));
  }

  if (cfg.srvf_term && cfg.srvf_weight > 0.0) {
    // Compare the square-root-velocity form of the one-step predictions
    // against the expert window, segment by segment.
    Ref srvf_loss{};
    for (int i = 1; i <= cfg.horizon; ++i) {
      Ref pred_prev = (i == 1) ? state_nodes[0]
                               : predicted[static_cast<std::size_t>(i - 2)];
      Ref pred_dx =
          tape.sub(predicted[static_cast<std::size_t>(i - 1)], pred_prev);
      Ref q_pred = srvf_columns(tape, pred_dx);
      Ref expert_dx = tape.sub(
          tape.constant(batch.states[static_cast<std::size_t>(i)]),
          tape.constant(batch.states[static_cast<std::size_t>(i - 1)]));
      Ref q_expert = srvf_columns(tape, expert_dx);
      Ref term = tape.mean(tape.square(tape.sub(q_pred, q_expert)));
      srvf_loss = srvf_loss.valid() ? tape.add(srvf_loss, term) : term;
    }
    loss = tape.add(loss, tape.scalar_mul(srvf_loss, cfg.srvf_weight /
                                                         cfg.horizon));
  }
  return loss;
}

double horizon_loss(const StablePolicyModel& model, const WindowBatch& batch,
                    const LossConfig& cfg) {
  Tape tape;
  ModelNodes nodes = model_leaves(tape, model);
  Ref loss = horizon_loss_graph(tape, model, nodes, batch, cfg);
  return tape.value(loss)(0, 0);
}

}  // namespace lyapnet

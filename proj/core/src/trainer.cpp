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

#include "lyapnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "lyapnet/dataio.hpp"

namespace lyapnet {

void TrainConfig::validate() const {
  loss.validate();
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("TrainConfig: learning rate must be positive");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("TrainConfig: betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("TrainConfig: epsilon must be positive");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  }
  if (max_epochs < 0) {
    throw std::invalid_argument("TrainConfig: max epochs must be >= 0");
  }
  if (checkpoint_every < 0 || early_stop_patience < 0) {
    throw std::invalid_argument("TrainConfig: cadence values must be >= 0");
  }
}

void AdamState::initialize(const std::vector<Matrix*>& params) {
  m.clear();
  v.clear();
  for (const Matrix* p : params) {
    m.push_back(Matrix::Zero(p->rows(), p->cols()));
    v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  step = 0;
}

void adam_step(std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].rows() != params[i]->rows() ||
        grads[i].cols() != params[i]->cols()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    if (!grads[i].allFinite()) {
      throw std::runtime_error("adam_step: non-finite gradient at parameter " +
                               std::to_string(i));
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads[i];
    v = (cfg.beta2 * v.array() +
         (1.0 - cfg.beta2) * grads[i].array().square())
            .matrix();
    const Matrix m_hat = m / bc1;
    const Matrix v_hat = v / bc2;
    params[i]->array() -=
        cfg.learning_rate * m_hat.array() /
        (v_hat.array().sqrt() + cfg.epsilon);
  }
}

double clip_gradients(std::vector<Matrix>& grads, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw std::invalid_argument("clip_gradients: max norm must be positive");
  }
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) {
    return 1.0;
  }
  const double scale = max_norm / norm;
  for (Matrix& g : grads) g *= scale;
  return scale;
}

std::string train_config_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["learning_rate"] = cfg.learning_rate;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["epsilon"] = cfg.epsilon;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["grad_clip_norm"] = cfg.grad_clip_norm;
  j["seed"] = cfg.seed;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["early_stop_patience"] = cfg.early_stop_patience;
  j["loss"] = {{"horizon", cfg.loss.horizon},
               {"discounts", cfg.loss.discounts},
               {"dt", cfg.loss.dt},
               {"srvf_term", cfg.loss.srvf_term},
               {"srvf_weight", cfg.loss.srvf_weight}};
  return j.dump();
}

InvariantSummary check_invariants(const StablePolicyModel& model,
                                  const Dataset& ds, int samples,
                                  uint64_t seed) {
  InvariantSummary out;
  out.samples = samples;
  for (const Matrix& w : icnn_effective_weights(model.lpf.icnn)) {
    if (w.minCoeff() < 0.0) {
      out.recursion_weights_nonneg = false;
    }
  }
  if (model.mode != Mode::Stable) {
    return out;
  }
  auto [lo, hi] = ds.bounding_box();
  const Vector center = 0.5 * (lo + hi);
  const Vector half = 1.5 * (hi - lo).cwiseMax(1e-12);
  const double exclusion = 1e-6 * ds.extent();
  PolicyEval eval(model);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    Vector x(ds.dim);
    for (int i = 0; i < ds.dim; ++i) {
      x(i) = center(i) + half(i) * unit(rng);
    }
    if ((x - model.lpf.target).norm() <= exclusion) continue;
    worst = std::max(worst, eval.decrease(x));
  }
  out.halfspace_max = worst;
  out.halfspace_ok = worst <= 1e-8;
  return out;
}

namespace {

struct BatchResult {
  double loss = 0.0;
  bool finite = true;
  std::vector<Matrix> grads;
};

BatchResult evaluate_batch(const StablePolicyModel& model, const Dataset& ds,
                           const std::vector<Window>& windows,
                           const std::vector<std::size_t>& order,
                           std::size_t begin, std::size_t end,
                           const LossConfig& loss_cfg, bool want_grads) {
  std::vector<Window> chunk;
  chunk.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    chunk.push_back(windows[order[i]]);
  }
  WindowBatch batch =
      gather_windows(ds, chunk, 0, chunk.size(), loss_cfg.horizon);
  Tape tape;
  ModelNodes nodes = model_leaves(tape, model);
  Ref loss = horizon_loss_graph(tape, model, nodes, batch, loss_cfg);
  BatchResult out;
  out.loss = tape.value(loss)(0, 0);
  if (!std::isfinite(out.loss)) {
    out.finite = false;
    return out;
  }
  if (want_grads) {
    auto grads = tape.backward(loss);
    for (Ref leaf : canonical_leaves(nodes)) {
      out.grads.push_back(std::move(grads.at(leaf.index)));
    }
    for (const Matrix& g : out.grads) {
      if (!g.allFinite()) {
        out.finite = false;
        return out;
      }
    }
  }
  return out;
}

double dataset_loss(const StablePolicyModel& model, const Dataset& ds,
                    const std::vector<Window>& windows,
                    const std::vector<std::size_t>& order, std::size_t count,
                    int batch_size, const LossConfig& loss_cfg) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t begin = 0; begin < count;
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(count, begin + static_cast<std::size_t>(batch_size));
    BatchResult r = evaluate_batch(model, ds, windows, order, begin, end,
                                   loss_cfg, false);
    total += r.loss * static_cast<double>(end - begin);
    n += end - begin;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

}  // namespace

std::pair<StablePolicyModel, TrainReport> train(
    const Dataset& ds, const std::vector<Window>& windows,
    const StablePolicyModel& initial, const TrainConfig& cfg) {
  cfg.validate();
  initial.validate();
  if (windows.empty()) {
    throw std::invalid_argument("train: no training windows");
  }
  if (initial.dim() != ds.dim) {
    throw std::invalid_argument(
        "train: model dimension does not match the dataset");
  }

  StablePolicyModel model = initial;
  TrainReport report;
  report.seed = cfg.seed;
  report.config_echo = train_config_json(cfg);

  // Shuffling uses its own stream so that model initialization and training
  // can share one user-facing seed.
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  // Optional held-out slice for early stopping.
  std::size_t train_count = windows.size();
  if (cfg.early_stop_patience > 0 && windows.size() >= 10) {
    std::shuffle(order.begin(), order.end(), rng);
    train_count = windows.size() - windows.size() / 10;
  }

  std::vector<std::size_t> eval_order(order);
  report.initial_loss = dataset_loss(model, ds, windows, eval_order,
                                     train_count, cfg.batch_size, cfg.loss);

  std::vector<Matrix*> params = trainable_parameters(model);
  AdamState adam;
  adam.initialize(params);

  StablePolicyModel snapshot = model;  // retained on abort
  double best_holdout = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.begin() + static_cast<long>(train_count),
                 rng);
    double epoch_total = 0.0;
    for (std::size_t begin = 0; begin < train_count;
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          train_count, begin + static_cast<std::size_t>(cfg.batch_size));
      BatchResult r =
          evaluate_batch(model, ds, windows, order, begin, end, cfg.loss, true);
      if (!r.finite) {
        report.aborted = true;
        report.diagnostic =
            "non-finite loss or gradient at epoch " + std::to_string(epoch) +
            "; last checkpoint retained";
        report.invariants = check_invariants(snapshot, ds, 256, cfg.seed);
        return {snapshot, report};
      }
      if (cfg.grad_clip_norm > 0.0) {
        clip_gradients(r.grads, cfg.grad_clip_norm);
      }
      adam_step(params, r.grads, adam, cfg);
      epoch_total += r.loss * static_cast<double>(end - begin);
    }
    const auto t1 = std::chrono::steady_clock::now();
    report.epoch_loss.push_back(epoch_total /
                                static_cast<double>(train_count));
    report.epoch_seconds.push_back(
        std::chrono::duration<double>(t1 - t0).count());
    report.completed_epochs = epoch;

    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      snapshot = model;
      if (!cfg.checkpoint_path.empty()) {
        save_model(model, cfg.checkpoint_path);
      }
    }
    if (cfg.early_stop_patience > 0 && train_count < windows.size()) {
      std::vector<std::size_t> holdout(order.begin() +
                                           static_cast<long>(train_count),
                                       order.end());
      double h = dataset_loss(model, ds, windows, holdout, holdout.size(),
                              cfg.batch_size, cfg.loss);
      if (h < best_holdout - 1e-12) {
        best_holdout = h;
        stall = 0;
      } else if (++stall >= cfg.early_stop_patience) {
        break;
      }
    }
  }

  report.invariants = check_invariants(model, ds, 1024, cfg.seed);
  return {model, report};
}

}  // namespace lyapnet

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

#include <doctest.h>

#include <cmath>

#include "lyapnet/trainer.hpp"
#include "testutil.hpp"

using namespace lyapnet;
using namespace lyapnet::testutil;

namespace {

bool models_equal(const StablePolicyModel& a, const StablePolicyModel& b) {
  StablePolicyModel ca = a;
  StablePolicyModel cb = b;
  auto pa = trainable_parameters(ca);
  auto pb = trainable_parameters(cb);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!(*pa[i] == *pb[i])) return false;
  }
  return true;
}

TrainConfig small_config(const Dataset& ds, int epochs, uint64_t seed) {
  TrainConfig cfg;
  cfg.loss.horizon = 2;
  cfg.loss.discounts = LossConfig::default_discounts(2);
  cfg.loss.dt = ds.demonstrations.front().dt;
  cfg.batch_size = 32;
  cfg.max_epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

StablePolicyModel small_model(const Dataset& ds, uint64_t seed) {
  return make_default_model(ds.dim, ds.target, seed, {16, 16}, {12, 12});
}

}  // namespace

TEST_CASE("adam hand examples") {
  TrainConfig cfg;
  SUBCASE("zero gradients leave parameters and moments untouched") {
    Matrix p = Matrix::Constant(2, 2, 1.5);
    std::vector<Matrix*> params = {&p};
    AdamState state;
    state.initialize(params);
    adam_step(params, {Matrix::Zero(2, 2)}, state, cfg);
    CHECK(p == Matrix::Constant(2, 2, 1.5));
    CHECK(state.m[0] == Matrix::Zero(2, 2));
    CHECK(state.v[0] == Matrix::Zero(2, 2));
  }
  SUBCASE("single bias-corrected step") {
    Matrix p = Matrix::Zero(1, 1);
    std::vector<Matrix*> params = {&p};
    AdamState state;
    state.initialize(params);
    adam_step(params, {Matrix::Ones(1, 1)}, state, cfg);
    CHECK(p(0, 0) ==
          doctest::Approx(-1e-3 * (1.0 / (1.0 + 1e-8))).epsilon(1e-12));
  }
  SUBCASE("two steps follow the hand-computed recursion") {
    Matrix p = Matrix::Zero(1, 1);
    std::vector<Matrix*> params = {&p};
    AdamState state;
    state.initialize(params);
    adam_step(params, {Matrix::Ones(1, 1)}, state, cfg);
    adam_step(params, {Matrix::Ones(1, 1)}, state, cfg);

    double m = 0.0, v = 0.0, x = 0.0;
    for (int t = 1; t <= 2; ++t) {
      m = 0.9 * m + 0.1;
      v = 0.999 * v + 0.001;
      const double mh = m / (1.0 - std::pow(0.9, t));
      const double vh = v / (1.0 - std::pow(0.999, t));
      x -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(p(0, 0) == doctest::Approx(x).epsilon(1e-12));
  }
  SUBCASE("non-finite gradients abort") {
    Matrix p = Matrix::Zero(1, 1);
    std::vector<Matrix*> params = {&p};
    AdamState state;
    state.initialize(params);
    Matrix bad = Matrix::Constant(1, 1, std::nan(""));
    CHECK_THROWS_AS(adam_step(params, {bad}, state, cfg),
                    std::runtime_error);
  }
}

TEST_CASE("gradient clipping") {
  SUBCASE("under the threshold is untouched") {
    std::vector<Matrix> g = {Matrix::Constant(1, 1, 0.5)};
    CHECK(clip_gradients(g, 1.0) == 1.0);
    CHECK(g[0](0, 0) == 0.5);
  }
  SUBCASE("scales down to the threshold") {
    std::vector<Matrix> g = {(Matrix(2, 1) << 3.0, 4.0).finished()};
    const double scale = clip_gradients(g, 1.0);
    CHECK(scale == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(g[0](0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(g[0](1, 0) == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("zero gradients stay zero") {
    std::vector<Matrix> g = {Matrix::Zero(3, 3)};
    CHECK(clip_gradients(g, 1.0) == 1.0);
    CHECK(g[0] == Matrix::Zero(3, 3));
  }
  SUBCASE("the norm is global across matrices") {
    std::vector<Matrix> g = {(Matrix(1, 1) << 3.0).finished(),
                             (Matrix(1, 1) << 4.0).finished()};
    clip_gradients(g, 1.0);
    CHECK(g[0](0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(g[1](0, 0) == doctest::Approx(0.8).epsilon(1e-15));
  }
}

TEST_CASE("zero-epoch training is a no-op") {
  Dataset ds = generate_synthetic(SyntheticShape::Line, 1, 40, 0.0, 5);
  auto windows = make_windows(ds, 2);
  StablePolicyModel init = small_model(ds, 3);
  auto [model, report] = train(ds, windows, init, small_config(ds, 0, 3));
  CHECK(models_equal(model, init));
  CHECK(report.completed_epochs == 0);
  CHECK(report.epoch_loss.empty());
  CHECK(report.initial_loss > 0.0);
}

TEST_CASE("training is deterministic under a fixed seed") {
  Dataset ds = generate_synthetic(SyntheticShape::Line, 1, 40, 0.0, 5);
  auto windows = make_windows(ds, 2);
  StablePolicyModel init = small_model(ds, 3);
  TrainConfig cfg = small_config(ds, 8, 17);
  auto [m1, r1] = train(ds, windows, init, cfg);
  auto [m2, r2] = train(ds, windows, init, cfg);
  CHECK(models_equal(m1, m2));
  CHECK(r1.epoch_loss == r2.epoch_loss);
}

TEST_CASE("training drives the loss down on a straight line") {
  Dataset ds = generate_synthetic(SyntheticShape::Line, 1, 60, 0.0, 5);
  auto windows = make_windows(ds, 2);
  StablePolicyModel init = small_model(ds, 3);
  TrainConfig cfg = small_config(ds, 300, 17);
  auto [model, report] = train(ds, windows, init, cfg);
  REQUIRE(!report.epoch_loss.empty());
  CHECK(report.epoch_loss.back() <= 0.1 * report.initial_loss);

  SUBCASE("loss is non-increasing over 20-epoch strides, within 5%") {
    for (std::size_t e = 0; e + 20 < report.epoch_loss.size(); ++e) {
      CHECK(report.epoch_loss[e + 20] <= 1.05 * report.epoch_loss[e]);
    }
  }
  SUBCASE("recursion weights stay nonnegative and the half space holds") {
    CHECK(report.invariants.recursion_weights_nonneg);
    CHECK(report.invariants.halfspace_ok);
    for (const Matrix& w : icnn_effective_weights(model.lpf.icnn)) {
      CHECK(w.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("non-finite losses abort and keep the last snapshot") {
  Dataset ds = generate_synthetic(SyntheticShape::Line, 1, 30, 0.0, 5);
  auto windows = make_windows(ds, 2);
  StablePolicyModel init = small_model(ds, 3);
  init.policy_net.weights[0](0, 0) = std::numeric_limits<double>::infinity();
  auto [model, report] = train(ds, windows, init, small_config(ds, 5, 1));
  CHECK(report.aborted);
  CHECK(!report.diagnostic.empty());
  CHECK(models_equal(model, init));
}

TEST_CASE("invariant checks hold at checkpoints during training") {
  Dataset ds = generate_synthetic(SyntheticShape::Sine, 1, 40, 0.0, 5);
  auto windows = make_windows(ds, 2);
  StablePolicyModel init = small_model(ds, 3);
  TrainConfig cfg = small_config(ds, 30, 2);
  cfg.checkpoint_every = 10;
  // Sample the half space on the evolving model at every checkpoint by
  // re-running with increasing epoch budgets.
  for (int epochs : {10, 20, 30}) {
    cfg.max_epochs = epochs;
    auto [model, report] = train(ds, windows, init, cfg);
    InvariantSummary inv = check_invariants(model, ds, 512, 99);
    CHECK(inv.halfspace_ok);
    CHECK(inv.recursion_weights_nonneg);
  }
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.loss.dt = 0.01;
  SUBCASE("defaults pass") { cfg.validate(); }
  SUBCASE("bad beta") {
    cfg.beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("bad learning rate") {
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("dimension mismatch is rejected by train") {
    Dataset ds = generate_synthetic(SyntheticShape::Line, 1, 20, 0.0, 5);
    auto windows = make_windows(ds, 2);
    StablePolicyModel init =
        make_default_model(3, Vector::Zero(3), 1, {8}, {8});
    CHECK_THROWS_AS(train(ds, windows, init, small_config(ds, 1, 1)),
                    std::invalid_argument);
  }
}

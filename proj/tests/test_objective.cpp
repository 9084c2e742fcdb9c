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
#include <random>

#include "lyapnet/objective.hpp"
#include "testutil.hpp"

using namespace lyapnet;
using namespace lyapnet::testutil;

namespace {

MlpParams constant_policy(const Vector& c) {
  MlpParams net;
  const int n = static_cast<int>(c.size());
  net.sizes = {n, n};
  net.weights = {Matrix::Zero(n, n)};
  net.biases = {c};
  return net;
}

StablePolicyModel constant_model(const Vector& c) {
  StablePolicyModel m;
  m.policy_net = constant_policy(c);
  std::mt19937_64 rng(0);
  m.lpf.icnn = make_icnn({2, 4, 1}, Activation::LeakyRelu,
                         Activation::Softplus, rng);
  m.lpf.target = Vector::Zero(2);
  m.mode = Mode::Unconstrained;
  return m;
}

StablePolicyModel small_model(uint64_t seed) {
  StablePolicyModel m = make_default_model(2, Vector::Zero(2), seed, {8, 8},
                                           {6, 6});
  m.policy_net.hidden_activation = Activation::Softplus;
  m.lpf.icnn.hidden_activation = Activation::Softplus;
  m.projection_activation = Activation::Softplus;
  return m;
}

std::vector<Vector> to_states(std::initializer_list<std::pair<double, double>> pts) {
  std::vector<Vector> out;
  for (auto [a, b] : pts) {
    Vector v(2);
    v << a, b;
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("srvf transform") {
  SUBCASE("unit-speed segments") {
    auto q = srvf_transform(to_states({{0, 0}, {1, 0}, {2, 0}}));
    REQUIRE(q.q.size() == 2);
    CHECK(q.q[0] == q.q[1]);
    CHECK(q.q[0](0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(q.q[0](1) == 0.0);
    CHECK_FALSE(q.degenerate[0]);
  }
  SUBCASE("norm of q is the square root of the segment length") {
    auto q = srvf_transform(to_states({{0, 0}, {3, 4}}));
    REQUIRE(q.q.size() == 1);
    CHECK(q.q[0](0) == doctest::Approx(3.0 / std::sqrt(5.0)).epsilon(1e-14));
    CHECK(q.q[0](1) == doctest::Approx(4.0 / std::sqrt(5.0)).epsilon(1e-14));
    CHECK(q.q[0].norm() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  }
  SUBCASE("stationary pairs are flagged and zeroed") {
    auto q = srvf_transform(to_states({{1, 1}, {1, 1}, {2, 1}}));
    CHECK(q.degenerate[0]);
    CHECK(q.q[0] == Vector::Zero(2));
    CHECK_FALSE(q.degenerate[1]);
  }
  SUBCASE("norm identity over random curves") {
    std::mt19937_64 rng(3);
    std::vector<Vector> states;
    for (int i = 0; i < 30; ++i) {
      states.push_back(random_matrix(2, 1, rng).col(0));
    }
    auto q = srvf_transform(states);
    for (std::size_t s = 0; s + 1 < states.size(); ++s) {
      if (q.degenerate[s]) continue;
      CHECK(q.q[s].squaredNorm() ==
            doctest::Approx((states[s + 1] - states[s]).norm())
                .epsilon(1e-12));
    }
  }
  SUBCASE("too-short input is rejected") {
    CHECK_THROWS_AS(srvf_transform(to_states({{0, 0}})),
                    std::invalid_argument);
  }
}

TEST_CASE("horizon loss hand example") {
  // One 2D window, horizon 1, dt = 1: velocity residual (1,0) and Euler
  // residual (0,2) give 1 * 0.5 + 0.5 * 2 = 1.5.
  Vector c(2);
  c << 1.0, 0.0;
  StablePolicyModel model = constant_model(c);
  WindowBatch batch;
  batch.states.resize(2);
  batch.states[0] = Matrix::Zero(2, 1);
  batch.states[1] = (Matrix(2, 1) << 1.0, -2.0).finished();
  batch.velocities = Matrix::Zero(2, 1);
  LossConfig cfg;
  cfg.horizon = 1;
  cfg.discounts = {1.0, 0.5};
  cfg.dt = 1.0;
  CHECK(horizon_loss(model, batch, cfg) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("perfect imitation gives exactly zero loss") {
  // Euler-consistent straight-line data with a constant velocity and the
  // matching constant policy.
  Vector c(2);
  c << 0.5, -0.25;
  StablePolicyModel model = constant_model(c);
  const double dt = 0.1;
  LossConfig cfg;
  cfg.horizon = 2;
  cfg.discounts = {1.0, 0.5, 0.25};
  cfg.dt = dt;
  WindowBatch batch;
  batch.states.resize(3);
  for (auto& m : batch.states) m.resize(2, 4);
  batch.velocities.resize(2, 4);
  std::mt19937_64 rng(4);
  for (int w = 0; w < 4; ++w) {
    // Generated by the same sequential Euler recursion the loss applies, so
    // residuals cancel exactly.
    Vector x = random_matrix(2, 1, rng).col(0);
    for (int i = 0; i < 3; ++i) {
      batch.states[static_cast<std::size_t>(i)].col(w) = x;
      x = x + dt * c;
    }
    batch.velocities.col(w) = c;
  }
  CHECK(horizon_loss(model, batch, cfg) == 0.0);
}

TEST_CASE("loss is nonnegative and reduces to velocity MSE with zero tail discounts") {
  std::mt19937_64 rng(5);
  Dataset ds = generate_synthetic(SyntheticShape::Sine, 2, 40, 0.01, 7);
  auto windows = make_windows(ds, 2);
  WindowBatch batch = gather_windows(ds, windows, 0, windows.size(), 2);
  StablePolicyModel model = small_model(9);

  LossConfig cfg;
  cfg.horizon = 2;
  cfg.discounts = {1.0, 0.5, 0.25};
  cfg.dt = ds.demonstrations.front().dt;
  const double full = horizon_loss(model, batch, cfg);
  CHECK(full >= 0.0);

  cfg.discounts = {1.0, 0.0, 0.0};
  const double head_only = horizon_loss(model, batch, cfg);

  // Direct velocity MSE over the same windows.
  PolicyEval eval(model);
  double expected = 0.0;
  for (int w = 0; w < batch.batch_size(); ++w) {
    expected +=
        (eval.action(batch.states[0].col(w)) - batch.velocities.col(w))
            .squaredNorm();
  }
  expected /= 2.0 * static_cast<double>(batch.batch_size());
  CHECK(head_only == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("batch loss equals the mean of per-window losses") {
  Dataset ds = generate_synthetic(SyntheticShape::Line, 1, 30, 0.0, 3);
  auto windows = make_windows(ds, 2);
  StablePolicyModel model = small_model(13);
  LossConfig cfg;
  cfg.horizon = 2;
  cfg.discounts = {1.0, 0.5, 0.25};
  cfg.dt = ds.demonstrations.front().dt;

  WindowBatch all = gather_windows(ds, windows, 0, windows.size(), 2);
  const double batched = horizon_loss(model, all, cfg);
  double mean = 0.0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    WindowBatch one = gather_windows(ds, windows, w, w + 1, 2);
    mean += horizon_loss(model, one, cfg);
  }
  mean /= static_cast<double>(windows.size());
  CHECK(batched == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("windows never cross demonstration boundaries") {
  Dataset ds = generate_synthetic(SyntheticShape::Line, 2, 10, 0.0, 3);
  auto windows = make_windows(ds, 2);
  for (const Window& w : windows) {
    CHECK(w.start + 2 <
          ds.demonstrations[static_cast<std::size_t>(w.demonstration)]
              .length());
  }
  // A hand-built out-of-range window is rejected at gather time.
  std::vector<Window> bad = {Window{0, 8}};
  CHECK_THROWS_AS(gather_windows(ds, bad, 0, 1, 2), std::invalid_argument);
}

TEST_CASE("loss gradients match finite differences") {
  Dataset ds = generate_synthetic(SyntheticShape::Sine, 1, 30, 0.0, 11);
  auto windows = make_windows(ds, 2);
  WindowBatch batch = gather_windows(ds, windows, 0, 6, 2);
  LossConfig cfg;
  cfg.horizon = 2;
  cfg.discounts = {1.0, 0.5, 0.25};
  cfg.dt = ds.demonstrations.front().dt;

  for (bool srvf : {false, true}) {
    cfg.srvf_term = srvf;
    StablePolicyModel model = small_model(21);
    Tape tape;
    ModelNodes nodes = model_leaves(tape, model);
    Ref loss = horizon_loss_graph(tape, model, nodes, batch, cfg);
    auto grads = tape.backward(loss);
    std::vector<Ref> leaves = canonical_leaves(nodes);
    std::vector<Matrix*> params = trainable_parameters(model);
    REQUIRE(leaves.size() == params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      const Matrix at = *params[p];
      auto f = [&](const Matrix& v) {
        StablePolicyModel probe = model;
        *trainable_parameters(probe)[p] = v;
        return horizon_loss(probe, batch, cfg);
      };
      const Matrix fd = finite_difference(f, at, 1e-5);
      CHECK(max_rel_mismatch(grads.at(leaves[p].index), fd) < 1e-3);
    }
  }
}

TEST_CASE("loss config validation") {
  LossConfig cfg;
  SUBCASE("defaults are valid") { cfg.validate(); }
  SUBCASE("horizon below one") {
    cfg.horizon = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("discount count must match horizon") {
    cfg.discounts = {1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("negative discounts are rejected") {
    cfg.discounts = {1.0, -0.5, 0.25};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("default discounts halve per step") {
    auto g = LossConfig::default_discounts(3);
    CHECK(g == std::vector<double>{1.0, 0.5, 0.25, 0.125});
  }
}

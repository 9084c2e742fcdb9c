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
#include <sstream>

#include "lyapnet/bench.hpp"

using namespace lyapnet;

namespace {

// Rows with the wall-clock column blanked; timings are the one field that
// cannot reproduce bitwise.
std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find("train_seconds") != std::string::npos &&
        line.find(',') != std::string::npos &&
        line.find("seed") == std::string::npos &&
        line.find("mode,metric") == std::string::npos) {
      continue;  // aggregate row for the timing metric
    }
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (fields.size() == 7) fields[5] = "-";  // per-run timing column
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << fields[i];
    }
    out << '\n';
  }
  return out.str();
}

BenchSpec tiny_spec() {
  BenchSpec spec;
  spec.dataset = generate_synthetic(SyntheticShape::Line, 2, 30, 0.0, 5);
  spec.seeds = {1, 2};
  spec.train.loss.horizon = 2;
  spec.train.loss.discounts = LossConfig::default_discounts(2);
  spec.train.loss.dt = spec.dataset.demonstrations.front().dt;
  spec.train.max_epochs = 15;
  spec.train.batch_size = 32;
  spec.policy_hidden = {12, 12};
  spec.icnn_hidden = {8, 8};
  return spec;
}

}  // namespace

TEST_CASE("bench harness rows and aggregates") {
  BenchSpec spec = tiny_spec();
  BenchResult result = run_bench(spec);
  REQUIRE(result.rows.size() == spec.seeds.size() * spec.modes.size());

  SUBCASE("timings are positive and metrics finite") {
    for (const BenchRow& r : result.rows) {
      CHECK(r.train_seconds > 0.0);
      CHECK(std::isfinite(r.final_loss));
      CHECK(std::isfinite(r.mse));
      CHECK(std::isfinite(r.dtw));
    }
  }

  SUBCASE("aggregate statistics are recomputable from the rows") {
    const std::string agg = bench_aggregate_csv(result);
    std::vector<double> stable_mse;
    for (const BenchRow& r : result.rows) {
      if (r.mode == Mode::Stable) stable_mse.push_back(r.mse);
    }
    MeanStd ms = mean_std(stable_mse);
    char expect[160];
    std::snprintf(expect, sizeof(expect), "stable,mse,%.17g,%.17g", ms.mean,
                  ms.std);
    CHECK(agg.find(expect) != std::string::npos);
  }

  SUBCASE("identical seeds reproduce identical metrics bitwise") {
    BenchResult again = run_bench(spec);
    CHECK(without_timing(bench_rows_csv(result)) ==
          without_timing(bench_rows_csv(again)));
    CHECK(without_timing(bench_aggregate_csv(result)) ==
          without_timing(bench_aggregate_csv(again)));
  }
}

TEST_CASE("mean and standard deviation helper") {
  MeanStd ms = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(ms.std ==
        doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(mean_std({7.0}).std == 0.0);
  CHECK(mean_std({}).mean == 0.0);
}

TEST_CASE("bench spec validation") {
  BenchSpec spec = tiny_spec();
  spec.seeds.clear();
  CHECK_THROWS_AS(run_bench(spec), std::invalid_argument);
}

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

#ifndef LYAPNET_DATAIO_HPP
#define LYAPNET_DATAIO_HPP

#include <filesystem>
#include <utility>

#include "lyapnet/policy.hpp"

namespace lyapnet {

/// One expert trajectory: states and velocity labels sampled at a fixed
/// period. The last velocity is the zero vector; the last state is the
/// shared target.
struct Demonstration {
  std::vector<Vector> states;
  std::vector<Vector> velocities;
  double dt = 0.01;

  int length() const { return static_cast<int>(states.size()); }
};

struct Dataset {
  std::vector<Demonstration> demonstrations;
  int dim = 0;
  Vector target;

  int total_samples() const;
  /// Largest per-dimension range over all states.
  double extent() const;
  std::pair<Vector, Vector> bounding_box() const;
};

/// Validates the demonstrations (consistent dimension, matching state and
/// velocity lengths >= 2, near-zero terminal velocity, endpoints agreeing
/// within 1e-6 of the data extent) and derives the shared target.
/// Demonstrations may have different lengths.
Dataset make_dataset(std::vector<Demonstration> demos);

/// Directory format: `manifest.txt` lists one CSV file per line, in order.
/// Each CSV starts with a header `dim=<n>,dt=<sampling period>` followed by
/// one row per sample holding 2n decimal fields: n state components then n
/// velocity components. Values are written with 17 significant digits so a
/// round trip is exact.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// A training window: horizon + 1 consecutive states of one demonstration
/// plus the velocity label at its first index. Windows never cross
/// demonstration boundaries.
struct Window {
  int demonstration = 0;
  int start = 0;
};

std::vector<Window> make_windows(const Dataset& ds, int horizon);

/// Seeded random split of the windows into (train, test) with
/// round(ratio * n) train entries. Both halves are returned sorted, disjoint
/// and exhaustive. Requires 0 < ratio < 1.
std::pair<std::vector<Window>, std::vector<Window>> split_windows(
    const std::vector<Window>& windows, double ratio, uint64_t seed);

std::pair<std::vector<Window>, std::vector<Window>> split_dataset(
    const Dataset& ds, int horizon, double ratio, uint64_t seed);

enum class SyntheticShape { Line, Sine, Spiral };

SyntheticShape parse_shape(const std::string& name);
std::string shape_name(SyntheticShape s);

/// Closed-form 2D curves that end at the origin with zero terminal velocity.
/// Velocity labels are forward differences of the states at the declared dt
/// (so a single Euler step with the label lands exactly on the next state),
/// with the final label set to zero. Gaussian noise of the given scale is
/// applied to interior states before the differences are taken.
Dataset generate_synthetic(SyntheticShape shape, int n_demos, int n_samples,
                           double noise_scale, uint64_t seed,
                           double dt = 0.01);

/// Versioned JSON model container with a content checksum. Loading verifies
/// the magic string, version, and checksum, and reproduces every weight
/// bitwise.
void save_model(const StablePolicyModel& model,
                const std::filesystem::path& path);
StablePolicyModel load_model(const std::filesystem::path& path);

}  // namespace lyapnet

#endif  // LYAPNET_DATAIO_HPP

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

#include "lyapnet/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lyapnet {

namespace fs = std::filesystem;
using nlohmann::json;

int Dataset::total_samples() const {
  int n = 0;
  for (const auto& d : demonstrations) n += d.length();
  return n;
}

std::pair<Vector, Vector> Dataset::bounding_box() const {
  Vector lo = Vector::Constant(dim, std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(dim, -std::numeric_limits<double>::infinity());
  for (const auto& d : demonstrations) {
    for (const auto& x : d.states) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
  }
  return {lo, hi};
}

double Dataset::extent() const {
  auto [lo, hi] = bounding_box();
  return (hi - lo).maxCoeff();
}

Dataset make_dataset(std::vector<Demonstration> demos) {
  if (demos.empty()) {
    throw std::invalid_argument("make_dataset: no demonstrations");
  }
  const int dim = static_cast<int>(demos.front().states.empty()
                                       ? 0
                                       : demos.front().states.front().size());
  if (dim == 0) {
    throw std::invalid_argument("make_dataset: empty first demonstration");
  }
  double vel_scale = 0.0;
  for (std::size_t d = 0; d < demos.size(); ++d) {
    const auto& demo = demos[d];
    if (demo.states.size() < 2 || demo.states.size() != demo.velocities.size()) {
      throw std::invalid_argument(
          "make_dataset: demonstration " + std::to_string(d) +
          " needs equally many states and velocities (at least 2)");
    }
    if (!(demo.dt > 0.0)) {
      throw std::invalid_argument("make_dataset: sampling period must be positive");
    }
    for (const auto& x : demo.states) {
      if (x.size() != dim) {
        throw std::invalid_argument(
            "make_dataset: demonstration " + std::to_string(d) +
            " has a state of dimension " + std::to_string(x.size()) +
            ", expected " + std::to_string(dim));
      }
    }
    for (const auto& v : demo.velocities) {
      if (v.size() != dim) {
        throw std::invalid_argument(
            "make_dataset: demonstration " + std::to_string(d) +
            " has a velocity of dimension " + std::to_string(v.size()) +
            ", expected " + std::to_string(dim));
      }
      vel_scale = std::max(vel_scale, v.lpNorm<Eigen::Infinity>());
    }
  }
  Dataset ds;
  ds.dim = dim;
  ds.demonstrations = std::move(demos);
  const double ext = ds.extent();
  const double endpoint_tol = 1e-6 * std::max(ext, 1e-30);
  const Vector& end0 = ds.demonstrations.front().states.back();
  for (std::size_t d = 0; d < ds.demonstrations.size(); ++d) {
    const auto& demo = ds.demonstrations[d];
    if ((demo.states.back() - end0).norm() > endpoint_tol) {
      throw std::invalid_argument(
          "make_dataset: demonstration " + std::to_string(d) +
          " ends away from the shared target (disagreement exceeds 1e-6 of "
          "the data extent)");
    }
    const double vtol = 1e-9 + 1e-6 * vel_scale;
    if (demo.velocities.back().norm() > vtol) {
      throw std::invalid_argument(
          "make_dataset: demonstration " + std::to_string(d) +
          " does not end with zero velocity");
    }
  }
  ds.target = end0;
  return ds;
}

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_value(const std::string& field, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": malformed numeric field '" + field + "'");
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Demonstration load_demo_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("load_dataset: cannot open " + file.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(file.string() + " line 1: missing header");
  }
  int dim = 0;
  double dt = 0.0;
  {
    auto fields = split_fields(line);
    if (fields.size() != 2 || fields[0].rfind("dim=", 0) != 0 ||
        fields[1].rfind("dt=", 0) != 0) {
      throw std::runtime_error(file.string() +
                               " line 1: expected header 'dim=<n>,dt=<dt>'");
    }
    dim = static_cast<int>(
        parse_value(fields[0].substr(4), file.string() + " line 1"));
    dt = parse_value(fields[1].substr(3), file.string() + " line 1");
    if (dim <= 0) {
      throw std::runtime_error(file.string() + " line 1: dim must be positive");
    }
  }
  Demonstration demo;
  demo.dt = dt;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != 2 * dim) {
      throw std::runtime_error(file.string() + " line " +
                               std::to_string(lineno) + ": expected " +
                               std::to_string(2 * dim) + " fields, got " +
                               std::to_string(fields.size()));
    }
    const std::string where = file.string() + " line " + std::to_string(lineno);
    Vector x(dim), v(dim);
    for (int i = 0; i < dim; ++i) {
      x(i) = parse_value(fields[static_cast<std::size_t>(i)], where);
      v(i) = parse_value(fields[static_cast<std::size_t>(dim + i)], where);
    }
    demo.states.push_back(std::move(x));
    demo.velocities.push_back(std::move(v));
  }
  return demo;
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  std::ifstream in(manifest);
  if (!in) {
    throw std::runtime_error("load_dataset: cannot open " + manifest.string());
  }
  std::vector<Demonstration> demos;
  std::string name;
  while (std::getline(in, name)) {
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) {
      name.pop_back();
    }
    if (name.empty()) continue;
    demos.push_back(load_demo_csv(dir / name));
  }
  if (demos.empty()) {
    throw std::runtime_error("load_dataset: manifest lists no demonstrations");
  }
  return make_dataset(std::move(demos));
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) {
    throw std::runtime_error("save_dataset: cannot write manifest in " +
                             dir.string());
  }
  for (std::size_t d = 0; d < ds.demonstrations.size(); ++d) {
    const std::string name = "demo" + std::to_string(d) + ".csv";
    manifest << name << "\n";
    std::ofstream out(dir / name);
    if (!out) {
      throw std::runtime_error("save_dataset: cannot write " + name);
    }
    const auto& demo = ds.demonstrations[d];
    out << "dim=" << ds.dim << ",dt=" << format_value(demo.dt) << "\n";
    for (std::size_t s = 0; s < demo.states.size(); ++s) {
      for (int i = 0; i < ds.dim; ++i) {
        if (i) out << ",";
        out << format_value(demo.states[s](i));
      }
      for (int i = 0; i < ds.dim; ++i) {
        out << "," << format_value(demo.velocities[s](i));
      }
      out << "\n";
    }
  }
}

std::vector<Window> make_windows(const Dataset& ds, int horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("make_windows: horizon must be >= 1");
  }
  std::vector<Window> out;
  for (int d = 0; d < static_cast<int>(ds.demonstrations.size()); ++d) {
    const int len = ds.demonstrations[static_cast<std::size_t>(d)].length();
    for (int s = 0; s + horizon < len; ++s) {
      out.push_back(Window{d, s});
    }
  }
  return out;
}

std::pair<std::vector<Window>, std::vector<Window>> split_windows(
    const std::vector<Window>& windows, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split_windows: ratio must lie in (0, 1)");
  }
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(
      ratio * static_cast<double>(windows.size())));
  std::vector<std::size_t> train_idx(order.begin(),
                                     order.begin() + static_cast<long>(n_train));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<long>(n_train),
                                    order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::pair<std::vector<Window>, std::vector<Window>> out;
  for (auto i : train_idx) out.first.push_back(windows[i]);
  for (auto i : test_idx) out.second.push_back(windows[i]);
  return out;
}

std::pair<std::vector<Window>, std::vector<Window>> split_dataset(
    const Dataset& ds, int horizon, double ratio, uint64_t seed) {
  return split_windows(make_windows(ds, horizon), ratio, seed);
}

SyntheticShape parse_shape(const std::string& name) {
  if (name == "line") return SyntheticShape::Line;
  if (name == "sine") return SyntheticShape::Sine;
  if (name == "spiral") return SyntheticShape::Spiral;
  throw std::invalid_argument("unknown synthetic shape: " + name);
}

std::string shape_name(SyntheticShape s) {
  switch (s) {
    case SyntheticShape::Line: return "line";
    case SyntheticShape::Sine: return "sine";
    case SyntheticShape::Spiral: return "spiral";
  }
  throw std::logic_error("unknown shape");
}

Dataset generate_synthetic(SyntheticShape shape, int n_demos, int n_samples,
                           double noise_scale, uint64_t seed, double dt) {
  if (n_demos < 1) {
    throw std::invalid_argument("generate_synthetic: need at least one demonstration");
  }
  if (n_samples < 2) {
    throw std::invalid_argument("generate_synthetic: need at least two samples");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("generate_synthetic: dt must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Demonstration> demos;
  for (int d = 0; d < n_demos; ++d) {
    Demonstration demo;
    demo.dt = dt;
    const double j0 = jitter(rng);
    const double j1 = jitter(rng);
    for (int s = 0; s < n_samples; ++s) {
      // Uniform progress along the curve: the motion keeps its pace all the
      // way to the target and only the final label is zero.
      const double u =
          static_cast<double>(s) / static_cast<double>(n_samples - 1);
      Vector x(2);
      switch (shape) {
        case SyntheticShape::Line: {
          const double px = -2.0 + 0.4 * j0;
          const double py = 1.0 + 0.4 * j1;
          x << px * (1.0 - u), py * (1.0 - u);
          break;
        }
        case SyntheticShape::Sine: {
          const double span = 5.0 + 0.5 * j0;
          const double amp = 1.0 + 0.2 * j1;
          x << -span * (1.0 - u),
              amp * std::sin(1.5 * M_PI * (1.0 - u));
          break;
        }
        case SyntheticShape::Spiral: {
          const double radius = 2.0 + 0.3 * j0;
          const double theta = 0.5 * j1 + 4.0 * M_PI * (1.0 - u);
          x << radius * (1.0 - u) * std::cos(theta),
              radius * (1.0 - u) * std::sin(theta);
          break;
        }
      }
      demo.states.push_back(std::move(x));
    }
    if (noise_scale > 0.0) {
      // Keep the endpoints exact: the start anchors the curve, the end is
      // the shared target.
      for (int s = 1; s + 1 < n_samples; ++s) {
        demo.states[static_cast<std::size_t>(s)](0) += noise_scale * gauss(rng);
        demo.states[static_cast<std::size_t>(s)](1) += noise_scale * gauss(rng);
      }
    }
    demo.velocities.resize(static_cast<std::size_t>(n_samples));
    for (int s = 0; s + 1 < n_samples; ++s) {
      demo.velocities[static_cast<std::size_t>(s)] =
          (demo.states[static_cast<std::size_t>(s) + 1] -
           demo.states[static_cast<std::size_t>(s)]) /
          dt;
    }
    demo.velocities.back() = Vector::Zero(2);
    demos.push_back(std::move(demo));
  }
  return make_dataset(std::move(demos));
}

namespace {

constexpr const char* kModelMagic = "lyapnet-model";
constexpr int kModelVersion = 1;

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string checksum_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw std::runtime_error("load_model: malformed matrix in " + what);
  }
  const auto r = rows.size();
  const auto c = rows[0].size();
  Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) {
      throw std::runtime_error("load_model: ragged matrix in " + what);
    }
    for (std::size_t j = 0; j < c; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
    }
  }
  return m;
}

json matrices_to_json(const std::vector<Matrix>& ms) {
  json out = json::array();
  for (const auto& m : ms) out.push_back(matrix_to_json(m));
  return out;
}

std::vector<Matrix> matrices_from_json(const json& j, const std::string& what) {
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(matrix_from_json(m, what));
  return out;
}

json payload_json(const StablePolicyModel& model) {
  json j;
  j["format"] = kModelMagic;
  j["version"] = kModelVersion;
  j["mode"] = mode_name(model.mode);
  j["projection_activation"] = activation_name(model.projection_activation);
  j["lambda"] = model.lambda;
  j["alpha"] = model.alpha;
  j["delta"] = model.lpf.delta;
  json target = json::array();
  for (Eigen::Index i = 0; i < model.lpf.target.size(); ++i) {
    target.push_back(model.lpf.target(i));
  }
  j["target"] = std::move(target);

  json policy;
  policy["sizes"] = model.policy_net.sizes;
  policy["activation"] = activation_name(model.policy_net.hidden_activation);
  policy["leaky_slope"] = model.policy_net.leaky_slope;
  policy["weights"] = matrices_to_json(model.policy_net.weights);
  policy["biases"] = matrices_to_json(model.policy_net.biases);
  j["policy"] = std::move(policy);

  json icnn;
  icnn["sizes"] = model.lpf.icnn.sizes;
  icnn["hidden_activation"] = activation_name(model.lpf.icnn.hidden_activation);
  icnn["output_activation"] = activation_name(model.lpf.icnn.output_activation);
  icnn["leaky_slope"] = model.lpf.icnn.leaky_slope;
  icnn["input_weights"] = matrices_to_json(model.lpf.icnn.input_weights);
  icnn["raw_recursion_weights"] =
      matrices_to_json(model.lpf.icnn.raw_recursion_weights);
  icnn["biases"] = matrices_to_json(model.lpf.icnn.biases);
  j["icnn"] = std::move(icnn);
  return j;
}

}  // namespace

void save_model(const StablePolicyModel& model, const fs::path& path) {
  model.validate();
  json j = payload_json(model);
  j["checksum"] = checksum_hex(j.dump());
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_model: cannot write " + path.string());
  }
  out << j.dump(1) << "\n";
}

StablePolicyModel load_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_model: cannot open " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_model: " + path.string() +
                             " is not valid JSON (" + e.what() + ")");
  }
  if (!j.contains("format") || j["format"] != kModelMagic) {
    throw std::runtime_error("load_model: " + path.string() +
                             " has a wrong or missing format marker");
  }
  if (!j.contains("version") || j["version"].get<int>() != kModelVersion) {
    throw std::runtime_error("load_model: unsupported format version in " +
                             path.string());
  }
  if (!j.contains("checksum")) {
    throw std::runtime_error("load_model: missing checksum in " + path.string());
  }
  const std::string stored = j["checksum"].get<std::string>();
  json payload = j;
  payload.erase("checksum");
  if (checksum_hex(payload.dump()) != stored) {
    throw std::runtime_error("load_model: checksum mismatch in " +
                             path.string());
  }

  StablePolicyModel model;
  model.mode = parse_mode(j["mode"].get<std::string>());
  model.projection_activation =
      parse_activation(j["projection_activation"].get<std::string>());
  model.lambda = j["lambda"].get<double>();
  model.alpha = j["alpha"].get<double>();
  model.lpf.delta = j["delta"].get<double>();
  const auto& target = j["target"];
  model.lpf.target = Vector(static_cast<Eigen::Index>(target.size()));
  for (std::size_t i = 0; i < target.size(); ++i) {
    model.lpf.target(static_cast<Eigen::Index>(i)) = target[i].get<double>();
  }

  const auto& policy = j["policy"];
  model.policy_net.sizes = policy["sizes"].get<std::vector<int>>();
  model.policy_net.hidden_activation =
      parse_activation(policy["activation"].get<std::string>());
  model.policy_net.leaky_slope = policy["leaky_slope"].get<double>();
  model.policy_net.weights = matrices_from_json(policy["weights"], "policy weights");
  model.policy_net.biases = matrices_from_json(policy["biases"], "policy biases");

  const auto& icnn = j["icnn"];
  model.lpf.icnn.sizes = icnn["sizes"].get<std::vector<int>>();
  model.lpf.icnn.hidden_activation =
      parse_activation(icnn["hidden_activation"].get<std::string>());
  model.lpf.icnn.output_activation =
      parse_activation(icnn["output_activation"].get<std::string>());
  model.lpf.icnn.leaky_slope = icnn["leaky_slope"].get<double>();
  model.lpf.icnn.input_weights =
      matrices_from_json(icnn["input_weights"], "icnn input weights");
  model.lpf.icnn.raw_recursion_weights = matrices_from_json(
      icnn["raw_recursion_weights"], "icnn recursion weights");
  model.lpf.icnn.biases = matrices_from_json(icnn["biases"], "icnn biases");

  model.validate();
  return model;
}

}  // namespace lyapnet

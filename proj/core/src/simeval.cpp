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

#include "lyapnet/simeval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace lyapnet {

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::StepLimit: return "step-limit";
    case Termination::NonFinite: return "non-finite";
  }
  throw std::logic_error("unknown termination");
}

void PerturbationSchedule::validate() const {
  int prev = -1;
  for (const auto& [step, d] : displacements) {
    if (step < 0 || step <= prev) {
      throw std::invalid_argument(
          "PerturbationSchedule: step indices must be strictly increasing");
    }
    prev = step;
  }
}

Trajectory rollout(const StablePolicyModel& model, const Vector& x0, double dt,
                   int max_steps, double conv_radius,
                   const PerturbationSchedule* schedule) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("rollout: dt must be positive");
  }
  if (max_steps < 1) {
    throw std::invalid_argument("rollout: max_steps must be >= 1");
  }
  if (x0.size() != model.dim()) {
    throw std::invalid_argument("rollout: initial state dimension mismatch");
  }
  if (schedule) schedule->validate();

  PolicyEval eval(model);
  Trajectory traj;
  traj.dt = dt;
  traj.states.push_back(x0);
  std::size_t next_perturbation = 0;

  for (int k = 0;; ++k) {
    if (schedule && next_perturbation < schedule->displacements.size() &&
        schedule->displacements[next_perturbation].first == k) {
      traj.states.back() += schedule->displacements[next_perturbation].second;
      ++next_perturbation;
    }
    const Vector& x = traj.states.back();
    if (!x.allFinite()) {
      traj.terminated = Termination::NonFinite;
      traj.diagnostic =
          "non-finite state at step " + std::to_string(k) + "; rollout aborted";
      return traj;
    }
    if ((x - model.lpf.target).norm() < conv_radius) {
      traj.terminated = Termination::Converged;
      return traj;
    }
    if (k >= max_steps) {
      traj.terminated = Termination::StepLimit;
      return traj;
    }
    Vector a = eval.action(x);
    traj.states.push_back(x + dt * a);
    traj.actions.push_back(std::move(a));
  }
}

double mse_metric(const StablePolicyModel& model, const Dataset& ds,
                  const std::vector<Window>& windows) {
  if (windows.empty()) {
    throw std::invalid_argument("mse_metric: empty window set");
  }
  PolicyEval eval(model);
  double total = 0.0;
  for (const Window& w : windows) {
    const auto& demo =
        ds.demonstrations[static_cast<std::size_t>(w.demonstration)];
    const Vector residual =
        eval.action(demo.states[static_cast<std::size_t>(w.start)]) -
        demo.velocities[static_cast<std::size_t>(w.start)];
    total += residual.squaredNorm();
  }
  return total /
         (static_cast<double>(ds.dim) * static_cast<double>(windows.size()));
}

double dtw_metric(const std::vector<Vector>& a, const std::vector<Vector>& b,
                  double q) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("dtw_metric: sequences must be nonempty");
  }
  if (!(q >= 1.0)) {
    throw std::invalid_argument("dtw_metric: q must be >= 1");
  }
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  auto cost = [&](std::size_t i, std::size_t j) {
    return std::pow((a[i] - b[j]).norm(), q);
  };
  std::vector<double> prev(n), cur(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = cost(i, j);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else if (i == 0) {
        best = cur[j - 1];
      } else if (j == 0) {
        best = prev[j];
      } else {
        best = std::min(prev[j], std::min(cur[j - 1], prev[j - 1]));
      }
      cur[j] = c + best;
    }
    std::swap(prev, cur);
  }
  return std::pow(prev[n - 1], 1.0 / q);
}

namespace {

void write_value(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void export_field(const StablePolicyModel& model, const Vector& lo,
                  const Vector& hi, int resolution, std::ostream& out) {
  if (model.dim() != 2) {
    throw std::invalid_argument("export_field: grid export is 2D-only");
  }
  if (resolution < 2) {
    throw std::invalid_argument("export_field: resolution must be >= 2 per axis");
  }
  if (lo.size() != 2 || hi.size() != 2) {
    throw std::invalid_argument("export_field: box corners must be 2D");
  }
  PolicyEval eval(model);
  out << "x1,x2,a1,a2,v,vdot\n";
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      Vector x(2);
      x(0) = lo(0) + (hi(0) - lo(0)) * static_cast<double>(i) /
                         static_cast<double>(resolution - 1);
      x(1) = lo(1) + (hi(1) - lo(1)) * static_cast<double>(j) /
                         static_cast<double>(resolution - 1);
      const Vector a = eval.action(x);
      const double v = eval.potential(x);
      const double vdot = eval.raw_decrease(x);
      write_value(out, x(0));
      out << ",";
      write_value(out, x(1));
      out << ",";
      write_value(out, a(0));
      out << ",";
      write_value(out, a(1));
      out << ",";
      write_value(out, v);
      out << ",";
      write_value(out, vdot);
      out << "\n";
    }
  }
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.states.empty()) return;
  const Eigen::Index dim = traj.states.front().size();
  out << "k";
  for (Eigen::Index i = 0; i < dim; ++i) out << ",x" << (i + 1);
  for (Eigen::Index i = 0; i < dim; ++i) out << ",a" << (i + 1);
  out << "\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < dim; ++i) {
      out << ",";
      write_value(out, traj.states[k](i));
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
      out << ",";
      write_value(out, k < traj.actions.size() ? traj.actions[k](i) : 0.0);
    }
    out << "\n";
  }
}

}  // namespace lyapnet

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

#ifndef LYAPNET_TESTS_TESTUTIL_HPP
#define LYAPNET_TESTS_TESTUTIL_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lyapnet/autodiff.hpp"

namespace lyapnet::testutil {

inline double rel_error(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

/// Central finite differences of a scalar function with respect to one
/// matrix argument.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f,
                                const Matrix& at, double h = 1e-5) {
  Matrix grad(at.rows(), at.cols());
  for (Eigen::Index i = 0; i < at.rows(); ++i) {
    for (Eigen::Index j = 0; j < at.cols(); ++j) {
      Matrix hi = at;
      Matrix lo = at;
      hi(i, j) += h;
      lo(i, j) -= h;
      grad(i, j) = (f(hi) - f(lo)) / (2.0 * h);
    }
  }
  return grad;
}

/// Worst relative mismatch between an analytic gradient and its central
/// finite-difference estimate, normalized by max(1, |fd|).
inline double max_rel_mismatch(const Matrix& analytic, const Matrix& fd) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      worst = std::max(worst, std::abs(analytic(i, j) - fd(i, j)) /
                                  std::max(1.0, std::abs(fd(i, j))));
    }
  }
  return worst;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                            std::mt19937_64& rng, double lo = -2.0,
                            double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = dist(rng);
    }
  }
  return m;
}

/// Exhaustive-path dynamic time warping: enumerates every monotone alignment
/// path with steps (1,0), (0,1), (1,1) and matched endpoints, accumulating
/// the q-th power of the Euclidean ground distance along each path in path
/// order. Exponential in the sequence lengths; only for short sequences.
inline double dtw_brute_force(const std::vector<Vector>& a,
                              const std::vector<Vector>& b, double q = 2.0) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk =
      [&](std::size_t i, std::size_t j, double acc) {
        acc = acc + std::pow((a[i] - b[j]).norm(), q);
        if (i + 1 == m && j + 1 == n) {
          best = std::min(best, acc);
          return;
        }
        if (i + 1 < m) walk(i + 1, j, acc);
        if (j + 1 < n) walk(i, j + 1, acc);
        if (i + 1 < m && j + 1 < n) walk(i + 1, j + 1, acc);
      };
  walk(0, 0, 0.0);
  return std::pow(best, 1.0 / q);
}

}  // namespace lyapnet::testutil

#endif  // LYAPNET_TESTS_TESTUTIL_HPP

// Copyright 2026 The li-qt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Finite-difference derivatives on uniform 1D grids with stencils of
// arbitrary accuracy (Fornberg's recursion for the weights).
//
// Interior points use a centered stencil of width accuracy+1 (rounded up to
// odd). Where a centered stencil does not fit, a one-sided window of width
// accuracy+derivative is shifted inside the grid, so the formal order is kept
// at the boundaries.

#include <algorithm>
#include <map>
#include <span>
#include <vector>

#include "liqt/error.hpp"

namespace liqt {

/// Weights w[j] such that f^(derivative)(x0) ~ sum_j w[j] f(nodes[j]).
inline std::vector<double> fd_weights(std::span<const double> nodes, double x0, int derivative) {
  const int n = static_cast<int>(nodes.size());
  require(derivative >= 0 && derivative < n, ErrorCode::InvalidArgument, "stencil too small for the derivative");
  const int m = derivative;
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = c[j][m];
  return w;
}

/// Derivative operator of a fixed order and accuracy on n uniformly spaced points.
class FiniteDifference {
 public:
  FiniteDifference(std::size_t n, double spacing, int derivative = 1, int accuracy = 2)
      : n_(n), derivative_(derivative) {
    require(spacing > 0.0, ErrorCode::InvalidArgument, "grid spacing must be positive");
    require(accuracy >= 1, ErrorCode::InvalidArgument, "accuracy must be at least 1");
    require(n >= static_cast<std::size_t>(derivative) + 1, ErrorCode::InvalidArgument,
            "not enough points for the derivative");
    const auto ni = static_cast<long>(n);
    long centered = accuracy + 1;
    if (centered % 2 == 0) ++centered;
    const long one_sided = std::min<long>(ni, accuracy + derivative);
    const long half = (centered - 1) / 2;

    starts_.resize(n);
    stencil_of_.resize(n);
    std::map<std::pair<long, long>, std::size_t> cache;  // (offset of point in window, width)
    double scale = 1.0;
    for (int k = 0; k < derivative; ++k) scale /= spacing;
    for (long i = 0; i < ni; ++i) {
      long width = centered, start = i - half;
      if (centered > ni || start < 0 || start + width > ni) {
        width = one_sided;
        start = std::clamp(i - (width - 1) / 2, 0L, ni - width);
      }
      const auto key = std::make_pair(i - start, width);
      auto it = cache.find(key);
      if (it == cache.end()) {
        std::vector<double> nodes(static_cast<std::size_t>(width));
        for (long j = 0; j < width; ++j) nodes[static_cast<std::size_t>(j)] = static_cast<double>(j);
        auto w = fd_weights(nodes, static_cast<double>(i - start), derivative);
        for (double& v : w) v *= scale;
        stencils_.push_back(std::move(w));
        it = cache.emplace(key, stencils_.size() - 1).first;
      }
      starts_[static_cast<std::size_t>(i)] = static_cast<std::size_t>(start);
      stencil_of_[static_cast<std::size_t>(i)] = it->second;
    }
  }

  std::size_t size() const { return n_; }
  int derivative() const { return derivative_; }

  /// First index and weights of the stencil used at point i.
  std::size_t start(std::size_t i) const { return starts_[i]; }
  std::span<const double> weights(std::size_t i) const { return stencils_[stencil_of_[i]]; }

  /// out[i] = sum_j w_j in[start + j * stride] for values laid out with `stride`.
  template <typename T>
  T at(std::size_t i, const T* values, std::size_t stride = 1) const {
    const auto w = weights(i);
    const T* base = values + starts_[i] * stride;
    T acc{};
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * base[j * stride];
    return acc;
  }

  template <typename T>
  std::vector<T> apply(std::span<const T> values) const {
    require(values.size() == n_, ErrorCode::MismatchedDimensions, "operand length differs from the operator");
    std::vector<T> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = at(i, values.data());
    return out;
  }

 private:
  std::size_t n_;
  int derivative_;
  std::vector<std::size_t> starts_;
  std::vector<std::size_t> stencil_of_;
  std::vector<std::vector<double>> stencils_;
};

/// Composite trapezoid weights (times spacing) for n points; a single point
/// gets unit weight.
inline std::vector<double> trapezoid_weights(std::size_t n, double spacing) {
  std::vector<double> w(n, spacing);
  if (n == 1) {
    w[0] = 1.0;
  } else {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

}  // namespace liqt

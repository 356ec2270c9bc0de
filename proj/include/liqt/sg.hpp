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

// Stern-Gerlach experiment: a source emits particles with magnetic moment
// along M, a magnet along a sends each one to detector D(+1) or D(-1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "liqt/error.hpp"
#include "liqt/inference.hpp"
#include "liqt/rng.hpp"
#include "liqt/vec3.hpp"

namespace liqt {

/// Labeling of the two detectors. `plus` is P(x) = (1 + x a.M)/2 (phase 0),
/// `minus` swaps the labels (phase pi).
enum class SignConvention { plus, minus };

inline double sign_value(SignConvention s) { return s == SignConvention::plus ? 1.0 : -1.0; }
inline double sign_phase(SignConvention s) { return s == SignConvention::plus ? 0.0 : std::numbers::pi; }

inline double sg_probability(Outcome x, const UnitVector3& a, const UnitVector3& m,
                             SignConvention sign = SignConvention::plus) {
  return 0.5 * (1.0 + sign_value(sign) * x.value() * cos_angle(a, m));
}

struct EventLog {
  std::vector<Outcome> outcomes;
  double theta = 0.0;
  UnitVector3 a;
  UnitVector3 m_direction;
  std::uint64_t seed = 0;
  ExperimentConditions conditions;

  std::size_t size() const { return outcomes.size(); }

  CountTable counts() const {
    std::uint64_t plus = 0;
    for (auto x : outcomes) plus += x.value() == 1;
    return CountTable::dichotomic(plus, outcomes.size() - plus);
  }

  /// Throws CorruptData when the declared size or the angle disagree.
  void validate(std::optional<std::size_t> declared_n = std::nullopt) const {
    if (declared_n && *declared_n != outcomes.size())
      fail(ErrorCode::CorruptData, "log holds " + std::to_string(outcomes.size()) + " events, header declares " +
                                       std::to_string(*declared_n));
    if (std::abs(angle_between(a, m_direction) - theta) > 1e-12)
      fail(ErrorCode::CorruptData, "theta disagrees with arccos(a.M)");
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;
};

/// n independent events with P(+1) = sg_probability(+1, a, m, sign).
/// Event i is +1 iff the i-th uniform draw of Rng(seed) is below P(+1).
inline EventLog sample_sg(const UnitVector3& a, const UnitVector3& m, std::size_t n, std::uint64_t seed,
                          SignConvention sign = SignConvention::plus, ExperimentConditions conditions = {}) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one event");
  EventLog log;
  log.a = a;
  log.m_direction = m;
  log.theta = angle_between(a, m);
  log.seed = seed;
  log.conditions = std::move(conditions);
  log.outcomes.reserve(n);
  const double p_plus = sg_probability(Outcome::plus(), a, m, sign);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) log.outcomes.push_back(rng.uniform() < p_plus ? Outcome::plus() : Outcome::minus());
  return log;
}

struct ExpectationEstimate {
  double e_hat = 0.0;
  double std_error = 0.0;
};

inline ExpectationEstimate estimate_expectation(const CountTable& counts) {
  require(counts.size() == 2, ErrorCode::MismatchedDimensions, "dichotomic count table expected");
  require(counts.total() >= 2, ErrorCode::EmptyLog, "need at least two events");
  const double n = static_cast<double>(counts.total());
  const double e = (static_cast<double>(counts[0]) - static_cast<double>(counts[1])) / n;
  return {e, std::sqrt(std::max(0.0, 1.0 - e * e) / n)};
}

inline ExpectationEstimate estimate_expectation(const EventLog& log) { return estimate_expectation(log.counts()); }

struct RobustFit {
  int k = 0;
  double phi = 0.0;
  double residual = 0.0;  ///< RMS of cos(K theta + phi) - E_data
  double fisher = 0.0;    ///< K^2

  DichotomicModel model() const { return DichotomicModel::robust(k, phi); }
};

inline constexpr int kDefaultKMax = 8;

/// Exhaustive scan of E(theta) = cos(K theta + phi), K in [1, k_max],
/// phi in {0, pi}. K = 0 is never a candidate.
///
/// Tie-break: the smallest K whose residual is within one mean standard error
/// of the best residual wins (minimum Fisher information). Without standard
/// errors the tolerance is 1e-12.
///
/// Throws InsufficientData for fewer than 8 distinct angles or a span below pi,
/// NoSignal when the best fit does not beat the constant model by more than
/// the tie tolerance.
inline RobustFit fit_robust_solution(std::span<const double> thetas, std::span<const double> e_hats,
                                     int k_max = kDefaultKMax, std::span<const double> stderrs = {}) {
  require(thetas.size() == e_hats.size(), ErrorCode::MismatchedDimensions, "thetas and e_hats differ in length");
  require(stderrs.empty() || stderrs.size() == thetas.size(), ErrorCode::MismatchedDimensions,
          "stderrs must match thetas");
  require(k_max >= 1, ErrorCode::InvalidArgument, "k_max must be at least 1");

  std::vector<double> sorted(thetas.begin(), thetas.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < 8) fail(ErrorCode::InsufficientData, "need at least 8 distinct theta values");
  if (sorted.back() - sorted.front() < std::numbers::pi - 1e-9)
    fail(ErrorCode::InsufficientData, "theta values must span at least [0, pi]");

  double tolerance = 1e-12;
  if (!stderrs.empty()) {
    double mean = 0.0;
    for (double s : stderrs) mean += s;
    tolerance = std::max(tolerance, mean / static_cast<double>(stderrs.size()));
  }

  const auto n = static_cast<double>(thetas.size());
  auto rms = [&](auto&& predict) {
    double ss = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double d = predict(thetas[i]) - e_hats[i];
      ss += d * d;
    }
    return std::sqrt(ss / n);
  };

  struct Candidate {
    int k;
    double phi;
    double residual;
  };
  std::vector<Candidate> candidates;
  for (int k = 1; k <= k_max; ++k) {
    for (double phi : {0.0, std::numbers::pi}) {
      candidates.push_back({k, phi, rms([&](double t) { return std::cos(k * t + phi); })});
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::min(best, c.residual);

  double mean_e = 0.0;
  for (double e : e_hats) mean_e += e;
  mean_e /= n;
  const double constant_residual = rms([&](double) { return mean_e; });
  if (constant_residual - best <= tolerance)
    fail(ErrorCode::NoSignal, "no candidate improves on the constant model");

  for (const auto& c : candidates) {
    if (c.residual <= best + tolerance) return {c.k, c.phi, c.residual, static_cast<double>(c.k) * c.k};
  }
  fail(ErrorCode::NoSignal, "no candidate selected");
}

inline constexpr std::size_t kDefaultThetaPoints = 16;

/// n uniformly spaced angles on [0, pi], endpoints included.
inline std::vector<double> uniform_theta_grid(std::size_t n = kDefaultThetaPoints) {
  require(n >= 2, ErrorCode::InvalidArgument, "theta grid needs at least two points");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
  return grid;
}

/// Standard arrangement for an angle: a along z, M in the x-z plane.
inline std::pair<UnitVector3, UnitVector3> sg_arrangement(double theta) {
  return {UnitVector3(0.0, 0.0, 1.0), UnitVector3::polar(theta)};
}

/// One log per angle; log i uses derive_seed(seed, i). Runs in parallel.
inline std::vector<EventLog> sample_sg_grid(std::span<const double> thetas, std::size_t n, std::uint64_t seed,
                                            SignConvention sign = SignConvention::plus) {
  const std::vector<double> grid(thetas.begin(), thetas.end());
  return run_repeats<EventLog>(grid.size(), seed, [&](std::size_t i, std::uint64_t s) {
    const auto [a, m] = sg_arrangement(grid[i]);
    return sample_sg(a, m, n, s, sign,
                     ExperimentConditions("sg", {{"sign", sign == SignConvention::plus ? "+" : "-"}}));
  });
}

}  // namespace liqt

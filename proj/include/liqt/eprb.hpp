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

// EPRB experiment: a source emits pairs of particles towards two magnets with
// directions a1 and a2; each pair yields (x, y) with x, y in {+1, -1}.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "liqt/error.hpp"
#include "liqt/inference.hpp"
#include "liqt/rng.hpp"
#include "liqt/vec3.hpp"

namespace liqt {

struct PairOutcome {
  Outcome x;
  Outcome y;

  friend constexpr bool operator==(PairOutcome, PairOutcome) = default;
};

/// Cell index [x, y] = (1 - x)/2 + (1 - y): (+,+) 0, (-,+) 1, (+,-) 2, (-,-) 3.
/// Used for pair CountTables and for the rows of 4x4 operators.
constexpr std::size_t pair_index(Outcome x, Outcome y) {
  return static_cast<std::size_t>((1 - x.value()) / 2 + (1 - y.value()));
}

constexpr PairOutcome pair_from_index(std::size_t i) {
  return {Outcome((i & 1U) ? -1 : 1), Outcome((i & 2U) ? -1 : 1)};
}

/// Which sign the pair correlation takes: `singlet` gives <xy> = -a1.a2
/// (phase pi), `plus` gives <xy> = +a1.a2 (phase 0).
enum class CorrelationSign { singlet, plus };

inline double correlation_for(const UnitVector3& a1, const UnitVector3& a2,
                              CorrelationSign sign = CorrelationSign::singlet) {
  const double c = cos_angle(a1, a2);
  return sign == CorrelationSign::singlet ? -c : c;
}

/// P(x, y) = (1 + x y E12) / 4.
constexpr double pair_probability(PairOutcome p, double e12) {
  return 0.25 * (1.0 + p.x.value() * p.y.value() * e12);
}

inline double eprb_probability(PairOutcome p, const UnitVector3& a1, const UnitVector3& a2) {
  return pair_probability(p, correlation_for(a1, a2));
}

inline std::array<double, 4> pair_probabilities(double e12) {
  std::array<double, 4> p{};
  for (std::size_t i = 0; i < 4; ++i) p[i] = pair_probability(pair_from_index(i), e12);
  return p;
}

struct PairEventLog {
  std::vector<PairOutcome> pairs;
  UnitVector3 a1;
  UnitVector3 a2;
  double theta = 0.0;
  std::uint64_t seed = 0;
  ExperimentConditions conditions;

  std::size_t size() const { return pairs.size(); }

  CountTable counts() const {
    CountTable t(std::vector<std::uint64_t>(4, 0));
    for (auto p : pairs) t.add(pair_index(p.x, p.y));
    return t;
  }

  void validate(std::optional<std::size_t> declared_n = std::nullopt) const {
    if (declared_n && *declared_n != pairs.size())
      fail(ErrorCode::CorruptData, "log holds " + std::to_string(pairs.size()) + " pairs, header declares " +
                                       std::to_string(*declared_n));
    if (std::abs(angle_between(a1, a2) - theta) > 1e-12)
      fail(ErrorCode::CorruptData, "theta disagrees with arccos(a1.a2)");
  }

  friend bool operator==(const PairEventLog&, const PairEventLog&) = default;
};

namespace detail {

/// Draws one cell by inverting the cumulative distribution in pair_index order.
class PairSampler {
 public:
  PairSampler(double e12, std::uint64_t seed) : rng_(seed) {
    const auto p = pair_probabilities(e12);
    cdf_[0] = p[0];
    cdf_[1] = cdf_[0] + p[1];
    cdf_[2] = p[3] == 0.0 ? 1.0 : cdf_[1] + p[2];
  }

  std::size_t next() {
    const double u = rng_.uniform();
    if (u < cdf_[0]) return 0;
    if (u < cdf_[1]) return 1;
    if (u < cdf_[2]) return 2;
    return 3;
  }

 private:
  Rng rng_;
  std::array<double, 3> cdf_{};
};

}  // namespace detail

/// n independent pairs with P(x, y) = (1 + x y e12)/4.
inline std::vector<PairOutcome> sample_pairs(double e12, std::size_t n, std::uint64_t seed) {
  require(std::abs(e12) <= 1.0, ErrorCode::InvalidArgument, "|E12| must not exceed 1");
  detail::PairSampler sampler(e12, seed);
  std::vector<PairOutcome> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pairs.push_back(pair_from_index(sampler.next()));
  return pairs;
}

/// Cell counts of sample_pairs(e12, n, seed) without materializing the log.
inline CountTable sample_pair_counts(double e12, std::size_t n, std::uint64_t seed) {
  require(std::abs(e12) <= 1.0, ErrorCode::InvalidArgument, "|E12| must not exceed 1");
  detail::PairSampler sampler(e12, seed);
  std::array<std::uint64_t, 4> c{};
  for (std::size_t i = 0; i < n; ++i) ++c[sampler.next()];
  return CountTable({c[0], c[1], c[2], c[3]});
}

inline PairEventLog sample_eprb(const UnitVector3& a1, const UnitVector3& a2, std::size_t n, std::uint64_t seed,
                                CorrelationSign sign = CorrelationSign::singlet,
                                ExperimentConditions conditions = {}) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one pair");
  PairEventLog log;
  log.pairs = sample_pairs(correlation_for(a1, a2, sign), n, seed);
  log.a1 = a1;
  log.a2 = a2;
  log.theta = angle_between(a1, a2);
  log.seed = seed;
  log.conditions = std::move(conditions);
  return log;
}

/// Standard arrangement for an angle: a1 along z, a2 in the x-z plane.
inline std::pair<UnitVector3, UnitVector3> eprb_arrangement(double theta) {
  return {UnitVector3(0.0, 0.0, 1.0), UnitVector3::polar(theta)};
}

struct CorrelationReport {
  double xy_mean = 0.0;
  double x_mean = 0.0;
  double y_mean = 0.0;
  double stderr_xy = 0.0;  ///< sqrt((1 - <xy>^2) / n)
  std::uint64_t n = 0;
};

inline CorrelationReport correlation_report(const CountTable& counts) {
  require(counts.size() == 4, ErrorCode::MismatchedDimensions, "pair count table expected");
  require(counts.total() >= 2, ErrorCode::EmptyLog, "need at least two pairs");
  CorrelationReport r;
  r.n = counts.total();
  const double n = static_cast<double>(r.n);
  std::int64_t sx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto p = pair_from_index(i);
    const auto c = static_cast<std::int64_t>(counts[i]);
    sx += p.x.value() * c;
    sy += p.y.value() * c;
    sxy += p.x.value() * p.y.value() * c;
  }
  r.x_mean = static_cast<double>(sx) / n;
  r.y_mean = static_cast<double>(sy) / n;
  r.xy_mean = static_cast<double>(sxy) / n;
  r.stderr_xy = std::sqrt(std::max(0.0, 1.0 - r.xy_mean * r.xy_mean) / n);
  return r;
}

inline CorrelationReport correlation_report(const PairEventLog& log) { return correlation_report(log.counts()); }

struct MarginalSigmas {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
};

/// Distance of <x> and <y> from the uniform-marginal prediction 0, in units of
/// the null standard error 1/sqrt(n).
inline MarginalSigmas marginal_uniformity_test(const CountTable& counts) {
  const auto r = correlation_report(counts);
  require(r.n >= 100, ErrorCode::EmptyLog, "marginal test needs at least 100 pairs");
  const double root_n = std::sqrt(static_cast<double>(r.n));
  return {std::abs(r.x_mean) * root_n, std::abs(r.y_mean) * root_n};
}

inline MarginalSigmas marginal_uniformity_test(const PairEventLog& log) {
  return marginal_uniformity_test(log.counts());
}

struct ComplianceResult {
  double sigma = 0.0;
  bool pass_5sigma = false;
};

inline constexpr double kComplianceSigma = 5.0;

/// 5-standard-deviation test of <xy> against the prediction `expected_xy`,
/// using the normal approximation sqrt((1 - <xy>^2)/n) for the standard error.
inline ComplianceResult compliance_test(const CountTable& counts, double expected_xy) {
  const auto r = correlation_report(counts);
  require(r.n >= 100, ErrorCode::EmptyLog, "compliance test needs at least 100 pairs");
  const double deviation = std::abs(r.xy_mean - expected_xy);
  double sigma = 0.0;
  if (deviation > 0.0)
    sigma = r.stderr_xy > 0.0 ? deviation / r.stderr_xy : std::numeric_limits<double>::infinity();
  return {sigma, sigma <= kComplianceSigma};
}

/// Compliance with the singlet prediction <xy> = -a1.a2.
inline ComplianceResult singlet_compliance_test(const PairEventLog& log) {
  return compliance_test(log.counts(), -cos_angle(log.a1, log.a2));
}

/// Pair Fisher information (E12')^2 / (1 - E12^2); same algebra as the
/// single-magnet case.
inline double fisher_pair(const DichotomicModel& model, double theta) { return fisher_dichotomic(model, theta); }

/// sum_i ln P(x_i, y_i | E12) over the ordered sequence.
inline double log_iprob_sequence(const PairEventLog& log, double e12) {
  const auto p = pair_probabilities(e12);
  double total = 0.0;
  for (auto pr : log.pairs) {
    const double pi = p[pair_index(pr.x, pr.y)];
    if (pi == 0.0) return kImpossible;
    total += std::log(pi);
  }
  return total;
}

}  // namespace liqt

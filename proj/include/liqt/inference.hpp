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

// Plausibility algebra, multinomial i-probs, evidence and Fisher information
// for dichotomic (+1/-1) experiments.
//
// Contracts assumed by everything in this header (documented, not checked):
//  - there is uncertainty about each individual event and about the conditions,
//  - observed frequencies are reproducible and robust against small changes of
//    the conditions,
//  - individual events are independent, so the i-prob of a sequence is the
//    product of single-event i-probs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liqt/error.hpp"

namespace liqt {

/// Dichotomic outcome x in {+1, -1}.
class Outcome {
 public:
  constexpr Outcome() = default;
  constexpr explicit Outcome(int value) : value_(static_cast<std::int8_t>(value)) {
    if (value != 1 && value != -1) fail(ErrorCode::InvalidArgument, "outcome must be +1 or -1");
  }
  static constexpr Outcome plus() { return Outcome(1); }
  static constexpr Outcome minus() { return Outcome(-1); }

  constexpr int value() const { return value_; }
  constexpr Outcome operator-() const { return Outcome(-value_); }
  /// Position in a dichotomic CountTable: +1 -> 0, -1 -> 1.
  constexpr std::size_t index() const { return value_ == 1 ? 0 : 1; }
  friend constexpr bool operator==(Outcome, Outcome) = default;

 private:
  std::int8_t value_ = 1;
};

/// Outcome counts over a finite, ordered outcome space. For dichotomic data
/// index 0 counts x=+1 and index 1 counts x=-1; pair tables use
/// pair_index() from eprb.hpp.
class CountTable {
 public:
  CountTable() = default;
  explicit CountTable(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {
    for (auto c : counts_) total_ += c;
  }
  static CountTable dichotomic(std::uint64_t n_plus, std::uint64_t n_minus) { return CountTable({n_plus, n_minus}); }

  std::size_t size() const { return counts_.size(); }
  std::uint64_t total() const { return total_; }
  std::uint64_t operator[](std::size_t i) const { return counts_.at(i); }
  std::uint64_t count(Outcome x) const { return counts_.at(x.index()); }
  std::span<const std::uint64_t> counts() const { return counts_; }

  void add(std::size_t i, std::uint64_t n = 1) {
    counts_.at(i) += n;
    total_ += n;
  }

  friend bool operator==(const CountTable&, const CountTable&) = default;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Everything about the experiment that is fixed and not of immediate interest.
class ExperimentConditions {
 public:
  ExperimentConditions() = default;
  explicit ExperimentConditions(std::string label, std::map<std::string, std::string> parameters = {})
      : label_(std::move(label)), parameters_(std::move(parameters)) {}

  const std::string& label() const { return label_; }
  const std::map<std::string, std::string>& parameters() const { return parameters_; }

  friend bool operator==(const ExperimentConditions&, const ExperimentConditions&) = default;

 private:
  std::string label_;
  std::map<std::string, std::string> parameters_;
};

/// P(x|theta) = (1 + x E(theta)) / 2, described by the expectation E.
class DichotomicModel {
 public:
  using Function = std::function<double(double)>;

  /// Finite-difference step used for E' when no analytic derivative is known.
  static constexpr double kDerivativeStep = 1e-5;

  /// E(theta) = cos(K theta + phi).
  static DichotomicModel robust(int k_winding, double phi) {
    require(k_winding >= 0, ErrorCode::InvalidArgument, "winding number must be nonnegative");
    DichotomicModel m;
    const double k = k_winding;
    m.expectation_ = [k, phi](double t) { return std::cos(k * t + phi); };
    m.derivative_ = [k, phi](double t) { return -k * std::sin(k * t + phi); };
    m.k_winding_ = k_winding;
    m.phi_ = phi;
    return m;
  }

  /// Theta-independent model E = c; the trivial solution excluded from robust fits.
  static DichotomicModel constant(double c) {
    require(std::abs(c) <= 1.0, ErrorCode::InvalidArgument, "|E| must not exceed 1");
    DichotomicModel m;
    m.expectation_ = [c](double) { return c; };
    m.derivative_ = [](double) { return 0.0; };
    m.k_winding_ = 0;
    return m;
  }

  static DichotomicModel from_function(Function expectation, Function derivative = {}) {
    require(static_cast<bool>(expectation), ErrorCode::InvalidArgument, "expectation function required");
    DichotomicModel m;
    m.expectation_ = std::move(expectation);
    m.derivative_ = std::move(derivative);
    return m;
  }

  double expectation(double theta) const {
    const double e = expectation_(theta);
    require(std::abs(e) <= 1.0 + 1e-12, ErrorCode::InvalidArgument, "model expectation outside [-1, 1]");
    return std::clamp(e, -1.0, 1.0);
  }

  double derivative(double theta) const {
    if (derivative_) return derivative_(theta);
    const double h = kDerivativeStep;
    return (expectation_(theta + h) - expectation_(theta - h)) / (2.0 * h);
  }

  bool closed_form() const { return static_cast<bool>(derivative_); }
  std::optional<int> k_winding() const { return k_winding_; }
  double phi() const { return phi_; }

 private:
  DichotomicModel() = default;

  Function expectation_;
  Function derivative_;
  std::optional<int> k_winding_;
  double phi_ = 0.0;
};

inline double iprob_dichotomic(Outcome x, const DichotomicModel& model, double theta) {
  return 0.5 * (1.0 + x.value() * model.expectation(theta));
}

/// (P(+1|theta), P(-1|theta)) in CountTable order.
inline std::array<double, 2> dichotomic_probabilities(const DichotomicModel& model, double theta) {
  const double e = model.expectation(theta);
  return {0.5 * (1.0 + e), 0.5 * (1.0 - e)};
}

/// Value returned for data that is impossible under the hypothesis.
inline constexpr double kImpossible = -std::numeric_limits<double>::infinity();

inline bool is_impossible(double log_iprob) { return log_iprob == kImpossible; }

/// ln[ N! prod_x p_x^{n_x} / n_x! ] with factorials through lgamma.
/// Returns kImpossible when some n_x > 0 has p_x = 0.
inline double log_multinomial_iprob(const CountTable& counts, std::span<const double> probs) {
  require(counts.size() == probs.size(), ErrorCode::MismatchedDimensions,
          "count table has " + std::to_string(counts.size()) + " cells, probability vector " +
              std::to_string(probs.size()));
  double sum = 0.0;
  for (double p : probs) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "probabilities must lie in [0, 1]");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::InvalidArgument, "probabilities must sum to 1");

  double result = std::lgamma(static_cast<double>(counts.total()) + 1.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto n = counts[i];
    if (n == 0) continue;
    if (probs[i] == 0.0) return kImpossible;
    const double nd = static_cast<double>(n);
    result += nd * std::log(probs[i]) - std::lgamma(nd + 1.0);
  }
  return result;
}

/// Largest |epsilon| accepted as "small" by evidence().
inline constexpr double kMaxEpsilon = std::numbers::pi / 8.0;

namespace detail {

inline std::array<double, 2> nondegenerate_probabilities(const DichotomicModel& model, double theta) {
  const auto p = dichotomic_probabilities(model, theta);
  if (!(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0))
    fail(ErrorCode::DegenerateProbability, "probability reaches 0 or 1 at theta = " + std::to_string(theta));
  return p;
}

inline void check_epsilon(double epsilon) {
  require(std::abs(epsilon) < kMaxEpsilon, ErrorCode::InvalidArgument, "|epsilon| must be below pi/8");
}

}  // namespace detail

/// Ev = ln P(D|theta+eps) / P(D|theta). Positive when the shifted hypothesis is
/// the more plausible one. The multinomial coefficient cancels, so the sum is
/// taken term by term to avoid subtracting two large lgamma values.
inline double evidence(const CountTable& counts, const DichotomicModel& model, double theta, double epsilon) {
  require(counts.size() == 2, ErrorCode::MismatchedDimensions, "dichotomic count table expected");
  detail::check_epsilon(epsilon);
  const auto p0 = detail::nondegenerate_probabilities(model, theta);
  const auto p1 = detail::nondegenerate_probabilities(model, theta + epsilon);
  double ev = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    if (counts[i] != 0) ev += static_cast<double>(counts[i]) * (std::log(p1[i]) - std::log(p0[i]));
  }
  return ev;
}

/// Dichotomic Fisher information (E')^2 / (1 - E^2).
inline double fisher_dichotomic(const DichotomicModel& model, double theta) {
  const double e = model.expectation(theta);
  if (std::abs(e) >= 1.0) fail(ErrorCode::DegenerateProbability, "|E(theta)| = 1, Fisher information undefined");
  const double de = model.derivative(theta);
  return de * de / ((1.0 - e) * (1.0 + e));
}

/// Second-order expansion -(N eps^2 / 2) I_F(theta). Valid when the counts
/// follow the model, n_x = N P(x|theta); see assignment_mismatch().
inline double evidence_quadratic(const CountTable& counts, const DichotomicModel& model, double theta,
                                 double epsilon) {
  require(counts.size() == 2, ErrorCode::MismatchedDimensions, "dichotomic count table expected");
  detail::check_epsilon(epsilon);
  detail::nondegenerate_probabilities(model, theta);
  detail::nondegenerate_probabilities(model, theta + epsilon);
  return -0.5 * static_cast<double>(counts.total()) * epsilon * epsilon * fisher_dichotomic(model, theta);
}

/// |Ev - Ev_quadratic| / (N |eps|^3); stays bounded as eps -> 0 when the
/// expansion holds.
inline double evidence_expansion_error(const CountTable& counts, const DichotomicModel& model, double theta,
                                       double epsilon) {
  const double diff = std::abs(evidence(counts, model, theta, epsilon) -
                               evidence_quadratic(counts, model, theta, epsilon));
  return diff / (static_cast<double>(counts.total()) * std::abs(epsilon * epsilon * epsilon));
}

/// Frequencies n_x / N. Kept separate from DichotomicModel: these are measured
/// quantities, the model values are i-probs.
struct EmpiricalAssignment {
  std::vector<double> frequencies;

  double probability(Outcome x) const { return frequencies.at(x.index()); }
};

inline EmpiricalAssignment empirical_model(const CountTable& counts) {
  require(counts.total() > 0, ErrorCode::EmptyLog, "no events");
  EmpiricalAssignment a;
  a.frequencies.reserve(counts.size());
  for (auto n : counts.counts()) a.frequencies.push_back(static_cast<double>(n) / static_cast<double>(counts.total()));
  return a;
}

/// max_x |n_x/N - P(x|theta)|: how far the data is from the assignment that
/// evidence_quadratic() relies on.
inline double assignment_mismatch(const CountTable& counts, const DichotomicModel& model, double theta) {
  const auto f = empirical_model(counts);
  const auto p = dichotomic_probabilities(model, theta);
  return std::max(std::abs(f.frequencies.at(0) - p[0]), std::abs(f.frequencies.at(1) - p[1]));
}

// Rule checks. Each returns the absolute violation (0 for consistent input).

/// P(A|Z) + P(!A|Z) = 1.
inline double sum_rule_violation(double p_a, double p_not_a) { return std::abs(p_a + p_not_a - 1.0); }

/// P(AB|Z) = P(A|BZ) P(B|Z) = P(B|AZ) P(A|Z).
inline double product_rule_violation(double p_ab, double p_a_given_b, double p_b, double p_b_given_a, double p_a) {
  return std::max(std::abs(p_ab - p_a_given_b * p_b), std::abs(p_ab - p_b_given_a * p_a));
}

/// P(A !A|Z) = 0 and P(A + !A|Z) = 1.
inline double exclusion_rule_violation(double p_a_and_not_a, double p_a_or_not_a) {
  return std::max(std::abs(p_a_and_not_a), std::abs(p_a_or_not_a - 1.0));
}

}  // namespace liqt

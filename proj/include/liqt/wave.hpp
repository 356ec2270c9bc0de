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

// Particle on a line: detector-binned data, Fisher functionals, the nonlinear
// functional F(P, S), the quadratic functional Q(psi), the polar maps between
// them and a Crank-Nicolson evolver for
//
//   (2i / sqrt(lambda)) dpsi/dt = -(2 / (m lambda)) d2psi/dx2 + V psi,
//
// which is the Schroedinger equation for lambda = 4 / hbar^2.
//
// Units: S is the action and V the potential energy after the substitutions
// S -> S/m and V -> V/m have been undone, so psi = sqrt(P) exp(i S sqrt(lambda)/2)
// and hbar_eff = 2 / sqrt(lambda). The defaults are hbar = m = 1 (lambda = 4).
//
// Fields are stored as (time slice, grid point). A single slice is a
// stationary snapshot: time integrals then carry unit weight and time
// derivatives come from the optional dS_dt / dpsi_dt members.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "liqt/differentiation.hpp"
#include "liqt/error.hpp"
#include "liqt/rng.hpp"

namespace liqt {

using Complex = std::complex<double>;

/// Points x_i = -L + i dx on [-L, L] with dx = 2L / (n_x - 1); time slices
/// t_k = t_start + k dt.
struct SpatialGrid {
  double half_extent = 10.0;
  std::size_t n_x = 256;
  double dt = 1e-3;
  std::size_t n_t = 1;
  double t_start = 0.0;

  double dx() const { return 2.0 * half_extent / static_cast<double>(n_x - 1); }
  double x(std::size_t i) const { return -half_extent + static_cast<double>(i) * dx(); }
  double t(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }

  void validate() const {
    require(half_extent > 0.0, ErrorCode::InvalidArgument, "grid half-extent must be positive");
    require(n_x >= 16, ErrorCode::InvalidArgument, "grid needs at least 16 points");
    require(dt > 0.0, ErrorCode::InvalidArgument, "time step must be positive");
    require(n_t >= 1, ErrorCode::InvalidArgument, "need at least one time slice");
  }
};

template <typename T>
class Field {
 public:
  Field() = default;
  Field(std::size_t n_t, std::size_t n_x, T value = T{}) : n_t_(n_t), n_x_(n_x), data_(n_t * n_x, value) {}

  std::size_t n_t() const { return n_t_; }
  std::size_t n_x() const { return n_x_; }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t t, std::size_t i) { return data_[t * n_x_ + i]; }
  const T& operator()(std::size_t t, std::size_t i) const { return data_[t * n_x_ + i]; }

  std::span<T> slice(std::size_t t) { return {data_.data() + t * n_x_, n_x_}; }
  std::span<const T> slice(std::size_t t) const { return {data_.data() + t * n_x_, n_x_}; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::size_t n_t_ = 0;
  std::size_t n_x_ = 0;
  std::vector<T> data_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

struct PolarField {
  RealField P;  ///< probability density, 1/length
  RealField S;  ///< action
  /// 1 where S is defined; empty means everywhere.
  Field<std::uint8_t> valid;
  /// dS/dt for single-slice (stationary) fields.
  std::optional<RealField> dS_dt;

  bool is_valid(std::size_t t, std::size_t i) const { return valid.empty() || valid(t, i) != 0; }
};

struct WaveField {
  ComplexField psi;  ///< length^(-1/2)
  /// dpsi/dt for single-slice (stationary) fields.
  std::optional<ComplexField> dpsi_dt;
};

struct PhysicalParams {
  double mass = 1.0;
  double lambda = 4.0;
  std::function<double(double, double)> potential = [](double, double) { return 0.0; };
  /// True when V does not depend on t.
  bool static_potential = true;

  double hbar() const { return 2.0 / std::sqrt(lambda); }
  double V(double x, double t) const { return potential(x, t); }

  void validate() const {
    require(mass > 0.0, ErrorCode::InvalidArgument, "mass must be positive");
    require(lambda > 0.0, ErrorCode::InvalidArgument, "lambda must be positive");
  }

  static PhysicalParams free_particle(double mass = 1.0, double lambda = 4.0) { return {mass, lambda}; }

  static PhysicalParams harmonic(double omega = 1.0, double mass = 1.0, double lambda = 4.0) {
    PhysicalParams p{mass, lambda};
    p.potential = [k = 0.5 * mass * omega * omega](double x, double) { return k * x * x; };
    return p;
  }
};

struct DiscretizationOptions {
  int x_accuracy = 2;
  int t_accuracy = 2;
  /// Points with P at or below this value are left out of every P-denominator term.
  double probability_floor = 1e-12;

  /// 16th order in x and the widest stencil that fits n_t slices in t.
  static DiscretizationOptions high_order(std::size_t n_t) {
    return {16, static_cast<int>(std::clamp<std::size_t>(n_t, 2, 9)) - 1, 1e-12};
  }
};

namespace detail {

template <typename T>
Field<T> d_dx(const Field<T>& f, double dx, int derivative, int accuracy) {
  const FiniteDifference op(f.n_x(), dx, derivative, accuracy);
  Field<T> out(f.n_t(), f.n_x());
  for (std::size_t t = 0; t < f.n_t(); ++t)
    for (std::size_t i = 0; i < f.n_x(); ++i) out(t, i) = op.at(i, f.slice(t).data());
  return out;
}

template <typename T>
Field<T> d_dt(const Field<T>& f, double dt, int accuracy) {
  require(f.n_t() >= 2, ErrorCode::InvalidArgument, "time derivative needs at least two slices");
  const FiniteDifference op(f.n_t(), dt, 1, accuracy);
  Field<T> out(f.n_t(), f.n_x());
  for (std::size_t t = 0; t < f.n_t(); ++t)
    for (std::size_t i = 0; i < f.n_x(); ++i) out(t, i) = op.at(t, f.data() + i, f.n_x());
  return out;
}

inline void check_shape(const SpatialGrid& grid, std::size_t n_x, const char* what) {
  grid.validate();
  require(n_x == grid.n_x, ErrorCode::MismatchedDimensions, std::string(what) + " does not match the grid");
}

inline double quadrature(const RealField& integrand, const SpatialGrid& grid) {
  const auto wx = trapezoid_weights(integrand.n_x(), grid.dx());
  const auto wt = trapezoid_weights(integrand.n_t(), grid.dt);
  double total = 0.0;
  for (std::size_t t = 0; t < integrand.n_t(); ++t) {
    double row = 0.0;
    for (std::size_t i = 0; i < integrand.n_x(); ++i) row += wx[i] * integrand(t, i);
    total += wt[t] * row;
  }
  return total;
}

inline Complex quadrature(const ComplexField& integrand, const SpatialGrid& grid) {
  const auto wx = trapezoid_weights(integrand.n_x(), grid.dx());
  const auto wt = trapezoid_weights(integrand.n_t(), grid.dt);
  Complex total = 0.0;
  for (std::size_t t = 0; t < integrand.n_t(); ++t) {
    Complex row = 0.0;
    for (std::size_t i = 0; i < integrand.n_x(); ++i) row += wx[i] * integrand(t, i);
    total += wt[t] * row;
  }
  return total;
}

inline RealField time_derivative_of_S(const PolarField& f, const SpatialGrid& grid, int accuracy) {
  if (f.P.n_t() == 1) return f.dS_dt ? *f.dS_dt : RealField(1, f.P.n_x(), 0.0);
  return d_dt(f.S, grid.dt, accuracy);
}

}  // namespace detail

/// Trapezoid integral of one slice.
inline double integrate_slice(std::span<const double> values, double dx) {
  const auto w = trapezoid_weights(values.size(), dx);
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += w[i] * values[i];
  return total;
}

inline double norm_squared(std::span<const Complex> psi, double dx) {
  const auto w = trapezoid_weights(psi.size(), dx);
  double total = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) total += w[i] * std::norm(psi[i]);
  return total;
}

// ---------------------------------------------------------------------------
// Fisher information.

/// int int (dP/dx)^2 / P dx dt over points with P above the floor.
inline double fisher_continuum(const RealField& P, const SpatialGrid& grid, const DiscretizationOptions& opts = {}) {
  detail::check_shape(grid, P.n_x(), "density");
  const auto dP = detail::d_dx(P, grid.dx(), 1, opts.x_accuracy);
  RealField integrand(P.n_t(), P.n_x(), 0.0);
  for (std::size_t t = 0; t < P.n_t(); ++t) {
    for (std::size_t i = 0; i < P.n_x(); ++i) {
      const double p = P(t, i);
      if (p < 0.0) fail(ErrorCode::DegenerateProbability, "negative probability density");
      if (p > opts.probability_floor) integrand(t, i) = dP(t, i) * dP(t, i) / p;
    }
  }
  return detail::quadrature(integrand, grid);
}

/// 2K+1 adjacent detectors of width 2L/(2K+1) covering [-L, L]; detector j
/// is centred at j * width.
struct DetectorLayout {
  double half_extent = 10.0;
  int k_det = 5;

  std::size_t bins() const { return static_cast<std::size_t>(2 * k_det + 1); }
  double width() const { return 2.0 * half_extent / static_cast<double>(bins()); }
  double lower_edge(int j) const { return (static_cast<double>(j) - 0.5) * width(); }
  double upper_edge(int j) const { return (static_cast<double>(j) + 0.5) * width(); }
  std::vector<double> edges() const {
    std::vector<double> e;
    for (int j = -k_det; j <= k_det + 1; ++j) e.push_back((static_cast<double>(j) - 0.5) * width());
    return e;
  }
};

/// Click counts k(tau, j) with detector j stored at column j + K.
struct DetectorData {
  int k_det = 0;
  std::uint64_t n_repeats = 0;
  Field<std::uint64_t> clicks;
  std::uint64_t seed = 0;

  std::uint64_t at(std::size_t tau, int j) const { return clicks(tau, static_cast<std::size_t>(j + k_det)); }

  /// Throws CorruptData unless every time slice sums to N.
  void validate() const {
    require(clicks.n_x() == static_cast<std::size_t>(2 * k_det + 1), ErrorCode::CorruptData,
            "click table width does not match 2K+1 detectors");
    for (std::size_t t = 0; t < clicks.n_t(); ++t) {
      std::uint64_t sum = 0;
      for (auto c : clicks.slice(t)) sum += c;
      if (sum != n_repeats)
        fail(ErrorCode::CorruptData, "time slice " + std::to_string(t) + " has " + std::to_string(sum) +
                                         " clicks, expected " + std::to_string(n_repeats));
    }
  }

  friend bool operator==(const DetectorData&, const DetectorData&) = default;
};

/// Probability of each detector for one density slice: exact integral of the
/// piecewise-linear interpolant of P over each bin, renormalized to sum 1.
inline std::vector<double> bin_probabilities(std::span<const double> P, const SpatialGrid& grid,
                                             const DetectorLayout& layout) {
  const double dx = grid.dx();
  auto cumulative = [&](double x) {
    // Integral of the interpolant from -L to x.
    x = std::clamp(x, -grid.half_extent, grid.half_extent);
    const double s = (x + grid.half_extent) / dx;
    const auto cell = std::min(static_cast<std::size_t>(s), P.size() - 2);
    double total = 0.0;
    for (std::size_t i = 0; i < cell; ++i) total += 0.5 * dx * (P[i] + P[i + 1]);
    const double f = (s - static_cast<double>(cell)) * dx;
    const double slope = (P[cell + 1] - P[cell]) / dx;
    return total + P[cell] * f + 0.5 * slope * f * f;
  };
  std::vector<double> prob(layout.bins());
  double sum = 0.0;
  for (int j = -layout.k_det; j <= layout.k_det; ++j) {
    const double p = std::max(0.0, cumulative(layout.upper_edge(j)) - cumulative(layout.lower_edge(j)));
    prob[static_cast<std::size_t>(j + layout.k_det)] = p;
    sum += p;
  }
  require(sum > 0.0, ErrorCode::DegenerateProbability, "density integrates to zero over the detectors");
  for (double& p : prob) p /= sum;
  return prob;
}

/// n independent clicks per time slice; slice tau draws from
/// Rng(derive_seed(seed, tau)) by inverting the cumulative bin distribution.
inline DetectorData simulate_detector_clicks(const RealField& P_true, const SpatialGrid& grid, int k_det,
                                             std::uint64_t n, std::uint64_t seed) {
  detail::check_shape(grid, P_true.n_x(), "density");
  require(k_det >= 0, ErrorCode::InvalidArgument, "detector half-count must be nonnegative");
  const DetectorLayout layout{grid.half_extent, k_det};
  DetectorData data;
  data.k_det = k_det;
  data.n_repeats = n;
  data.seed = seed;
  data.clicks = Field<std::uint64_t>(P_true.n_t(), layout.bins(), 0);
  for (std::size_t tau = 0; tau < P_true.n_t(); ++tau) {
    const auto prob = bin_probabilities(P_true.slice(tau), grid, layout);
    std::vector<double> cdf(prob.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < prob.size(); ++j) cdf[j] = (acc += prob[j]);
    cdf.back() = 1.0;
    Rng rng(derive_seed(seed, tau));
    for (std::uint64_t e = 0; e < n; ++e) {
      const double u = rng.uniform();
      const auto j = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      ++data.clicks(tau, std::min(j, prob.size() - 1));
    }
  }
  return data;
}

/// P(j | X, tau) for every detector j.
using BinModel = std::function<std::vector<double>(double, std::size_t)>;

/// sum_tau sum_j (dP/dX)^2 / P with a centered difference of step dX at the
/// positions X_tau. Bins with P = 0 and zero derivative are skipped.
inline double fisher_discrete(const BinModel& model, std::span<const double> positions, double dX) {
  require(dX > 0.0, ErrorCode::InvalidArgument, "difference step must be positive");
  double total = 0.0;
  for (std::size_t tau = 0; tau < positions.size(); ++tau) {
    const double X = positions[tau];
    const auto p = model(X, tau);
    const auto hi = model(X + dX, tau);
    const auto lo = model(X - dX, tau);
    require(p.size() == hi.size() && p.size() == lo.size(), ErrorCode::MismatchedDimensions,
            "bin model changed its number of bins");
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double d = (hi[j] - lo[j]) / (2.0 * dX);
      if (p[j] <= 0.0) {
        if (d != 0.0) fail(ErrorCode::DegenerateProbability, "bin probability vanishes where it varies");
        continue;
      }
      total += d * d / p[j];
    }
  }
  return total;
}

/// Bins of N(X, sigma^2) over the given edges; the tails beyond the outer
/// edges are assigned to the outer bins.
inline BinModel gaussian_bin_model(std::vector<double> edges, double sigma) {
  require(edges.size() >= 2 && sigma > 0.0, ErrorCode::InvalidArgument, "need two edges and sigma > 0");
  return [edges = std::move(edges), sigma](double X, std::size_t) {
    auto upper_tail = [&](double e) { return 0.5 * std::erfc((e - X) / (sigma * std::numbers::sqrt2)); };
    std::vector<double> p(edges.size() - 1);
    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
      const double lo = j == 0 ? 1.0 : upper_tail(edges[j]);
      const double hi = j + 2 == edges.size() ? 0.0 : upper_tail(edges[j + 1]);
      p[j] = lo - hi;
    }
    return p;
  };
}

// ---------------------------------------------------------------------------
// Classical limit.

/// dS/dt + (dS/dx)^2 / (2m) + V pointwise. Needs at least two slices.
inline RealField hj_residual(const RealField& S, const PhysicalParams& params, const SpatialGrid& grid,
                             const DiscretizationOptions& opts = {}) {
  detail::check_shape(grid, S.n_x(), "action");
  params.validate();
  const auto St = detail::d_dt(S, grid.dt, opts.t_accuracy);
  const auto Sx = detail::d_dx(S, grid.dx(), 1, opts.x_accuracy);
  RealField r(S.n_t(), S.n_x());
  for (std::size_t t = 0; t < S.n_t(); ++t)
    for (std::size_t i = 0; i < S.n_x(); ++i)
      r(t, i) = St(t, i) + Sx(t, i) * Sx(t, i) / (2.0 * params.mass) + params.V(grid.x(i), grid.t(t));
  return r;
}

/// Integrates dx/dt = (dS/dx)/m from x0 at the first slice to the last slice
/// with midpoint steps, interpolating the velocity linearly in x and t.
/// Returns x at every slice.
inline std::vector<double> trace_characteristic(const RealField& S, double mass, const SpatialGrid& grid, double x0,
                                                const DiscretizationOptions& opts = {}) {
  detail::check_shape(grid, S.n_x(), "action");
  const auto U = detail::d_dx(S, grid.dx(), 1, opts.x_accuracy);
  auto velocity = [&](double x, double t_index) {
    const double s = std::clamp((x + grid.half_extent) / grid.dx(), 0.0, static_cast<double>(grid.n_x - 1));
    const auto i = std::min(static_cast<std::size_t>(s), grid.n_x - 2);
    const double fx = s - static_cast<double>(i);
    const auto k = std::min(static_cast<std::size_t>(t_index), S.n_t() - 1);
    const auto k1 = std::min(k + 1, S.n_t() - 1);
    const double ft = t_index - static_cast<double>(k);
    auto at = [&](std::size_t kk) { return (1.0 - fx) * U(kk, i) + fx * U(kk, i + 1); };
    return ((1.0 - ft) * at(k) + ft * at(k1)) / mass;
  };
  std::vector<double> path{x0};
  double x = x0;
  for (std::size_t k = 0; k + 1 < S.n_t(); ++k) {
    const double kd = static_cast<double>(k);
    const double mid = x + 0.5 * grid.dt * velocity(x, kd);
    x += grid.dt * velocity(mid, kd + 0.5);
    path.push_back(x);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Functionals.

/// F = int int { (dP/dx)^2/P + 2 m lambda [dS/dt + (dS/dx)^2/(2m) + V] P } dx dt.
inline double functional_F(const PolarField& fields, const PhysicalParams& params, const SpatialGrid& grid,
                           const DiscretizationOptions& opts = {}) {
  detail::check_shape(grid, fields.P.n_x(), "density");
  params.validate();
  require(fields.S.n_t() == fields.P.n_t() && fields.S.n_x() == fields.P.n_x(), ErrorCode::MismatchedDimensions,
          "P and S differ in shape");
  const auto& P = fields.P;
  const auto Px = detail::d_dx(P, grid.dx(), 1, opts.x_accuracy);
  const auto Sx = detail::d_dx(fields.S, grid.dx(), 1, opts.x_accuracy);
  const auto St = detail::time_derivative_of_S(fields, grid, opts.t_accuracy);
  const double m = params.mass, lam = params.lambda;
  RealField integrand(P.n_t(), P.n_x());
  for (std::size_t t = 0; t < P.n_t(); ++t) {
    for (std::size_t i = 0; i < P.n_x(); ++i) {
      const double p = P(t, i);
      if (p < 0.0) fail(ErrorCode::DegenerateProbability, "negative probability density");
      const double fisher = p > opts.probability_floor ? Px(t, i) * Px(t, i) / p : 0.0;
      const double hj = St(t, i) + Sx(t, i) * Sx(t, i) / (2.0 * m) + params.V(grid.x(i), grid.t(t));
      integrand(t, i) = fisher + 2.0 * m * lam * hj * p;
    }
  }
  return detail::quadrature(integrand, grid);
}

/// Integral of the Q integrand without discarding the imaginary part, which
/// vanishes identically.
inline Complex functional_Q_complex(const WaveField& wave, const PhysicalParams& params, const SpatialGrid& grid,
                                    const DiscretizationOptions& opts = {}) {
  const auto& psi = wave.psi;
  detail::check_shape(grid, psi.n_x(), "wave function");
  params.validate();
  const auto px = detail::d_dx(psi, grid.dx(), 1, opts.x_accuracy);
  ComplexField pt;
  if (psi.n_t() == 1)
    pt = wave.dpsi_dt ? *wave.dpsi_dt : ComplexField(1, psi.n_x(), 0.0);
  else
    pt = detail::d_dt(psi, grid.dt, opts.t_accuracy);
  const double m = params.mass, lam = params.lambda;
  const Complex i_unit(0.0, 1.0);
  ComplexField integrand(psi.n_t(), psi.n_x());
  for (std::size_t t = 0; t < psi.n_t(); ++t) {
    for (std::size_t i = 0; i < psi.n_x(); ++i) {
      const Complex p = psi(t, i);
      const Complex time_term =
          2.0 * i_unit * m * std::sqrt(lam) * (p * std::conj(pt(t, i)) - std::conj(p) * pt(t, i));
      integrand(t, i) = time_term + 4.0 * std::norm(px(t, i)) + 2.0 * m * lam * params.V(grid.x(i), grid.t(t)) * std::norm(p);
    }
  }
  return detail::quadrature(integrand, grid);
}

/// Q = int int [2 i m sqrt(lambda) (psi dpsi*/dt - psi* dpsi/dt)
///              + 4 |dpsi/dx|^2 + 2 m lambda V |psi|^2] dx dt.
inline double functional_Q(const WaveField& wave, const PhysicalParams& params, const SpatialGrid& grid,
                           const DiscretizationOptions& opts = {}) {
  return functional_Q_complex(wave, params, grid, opts).real();
}

// ---------------------------------------------------------------------------
// Polar maps.

/// psi = sqrt(P) exp(i S sqrt(lambda) / 2).
inline WaveField polar_to_wave(const PolarField& fields, double lambda) {
  require(lambda > 0.0, ErrorCode::InvalidArgument, "lambda must be positive");
  const double k = 0.5 * std::sqrt(lambda);
  WaveField w;
  w.psi = ComplexField(fields.P.n_t(), fields.P.n_x());
  for (std::size_t t = 0; t < fields.P.n_t(); ++t) {
    for (std::size_t i = 0; i < fields.P.n_x(); ++i) {
      const double p = fields.P(t, i);
      if (p < 0.0) fail(ErrorCode::InvalidArgument, "negative probability density");
      w.psi(t, i) = std::polar(std::sqrt(p), k * fields.S(t, i));
    }
  }
  if (fields.P.n_t() == 1 && fields.dS_dt) {
    ComplexField dt(1, fields.P.n_x());
    for (std::size_t i = 0; i < fields.P.n_x(); ++i) dt(0, i) = Complex(0.0, k * (*fields.dS_dt)(0, i)) * w.psi(0, i);
    w.dpsi_dt = std::move(dt);
  }
  return w;
}

/// P = |psi|^2 and S = (2/sqrt(lambda)) arg(psi), unwrapped along x from the
/// leftmost point with |psi|^2 above `floor`. Points at or below the floor are
/// marked invalid and carry S = 0; across such gaps the phase continues from
/// the last valid point. For several slices each slice is additionally
/// shifted by a multiple of 2 pi so that its phase is continuous in time at
/// the peak of the previous slice.
///
/// S is determined up to one additive constant for the whole trajectory.
/// Throws PhaseUndefined when a slice has no valid point.
inline PolarField wave_to_polar(const WaveField& wave, double lambda, double floor = 1e-12) {
  require(lambda > 0.0, ErrorCode::InvalidArgument, "lambda must be positive");
  const auto& psi = wave.psi;
  const std::size_t nt = psi.n_t(), nx = psi.n_x();
  PolarField out;
  out.P = RealField(nt, nx);
  out.S = RealField(nt, nx, 0.0);
  out.valid = Field<std::uint8_t>(nt, nx, 0);
  RealField phase(nt, nx, 0.0);
  for (std::size_t t = 0; t < nt; ++t) {
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < nx; ++i) {
      const double p = std::norm(psi(t, i));
      out.P(t, i) = p;
      if (p <= floor) continue;
      out.valid(t, i) = 1;
      phase(t, i) = prev ? phase(t, *prev) + std::arg(psi(t, i) * std::conj(psi(t, *prev))) : std::arg(psi(t, i));
      prev = i;
    }
    if (!prev) fail(ErrorCode::PhaseUndefined, "wave function vanishes on slice " + std::to_string(t));
    if (t > 0) {
      std::optional<std::size_t> anchor;
      for (std::size_t i = 0; i < nx; ++i) {
        if (out.valid(t, i) && out.valid(t - 1, i) && (!anchor || out.P(t - 1, i) > out.P(t - 1, *anchor)))
          anchor = i;
      }
      if (anchor) {
        const double turns =
            std::round((phase(t - 1, *anchor) - phase(t, *anchor)) / (2.0 * std::numbers::pi));
        for (std::size_t i = 0; i < nx; ++i)
          if (out.valid(t, i)) phase(t, i) += 2.0 * std::numbers::pi * turns;
      }
    }
  }
  const double scale = 2.0 / std::sqrt(lambda);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < nx; ++i)
      if (out.valid(t, i)) out.S(t, i) = scale * phase(t, i);
  return out;
}

/// Smooth random (P, S): P a normalized two-Gaussian mixture drifting and
/// breathing in time, S a quadratic plus a travelling sine. Peaks stay within
/// the middle half of the grid.
inline PolarField random_smooth_fields(const SpatialGrid& grid, Rng& rng) {
  grid.validate();
  const double L = grid.half_extent;
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  const double c1 = u(-0.25, 0.25) * L, c2 = u(-0.25, 0.25) * L;
  const double w1 = u(0.08, 0.12) * L, w2 = u(0.08, 0.12) * L;
  const double v1 = u(-1.0, 1.0), v2 = u(-1.0, 1.0), g = u(-0.5, 0.5), mix = u(0.2, 0.8);
  const double b = u(-1.0, 1.0), c = u(-0.2, 0.2), e = u(-1.0, 1.0), amp = u(0.0, 0.5), k = u(0.2, 1.0),
               omega = u(-1.0, 1.0);
  PolarField f{RealField(grid.n_t, grid.n_x), RealField(grid.n_t, grid.n_x), {}, std::nullopt};
  for (std::size_t t = 0; t < grid.n_t; ++t) {
    const double tt = grid.t(t);
    const double s1 = w1 * (1.0 + g * tt * tt), s2 = w2 * (1.0 - 0.5 * g * tt);
    for (std::size_t i = 0; i < grid.n_x; ++i) {
      const double x = grid.x(i);
      const double z1 = (x - c1 - v1 * tt) / s1, z2 = (x - c2 - v2 * tt) / s2;
      f.P(t, i) = mix * std::exp(-0.5 * z1 * z1) / s1 + (1.0 - mix) * std::exp(-0.5 * z2 * z2) / s2;
      f.S(t, i) = b * x + c * x * x * (1.0 + tt) - e * tt + amp * std::sin(k * x - omega * tt);
    }
    const double norm = integrate_slice(f.P.slice(t), grid.dx());
    for (double& p : f.P.slice(t)) p /= norm;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Linear evolution.

struct EvolveOptions {
  /// Keep every stride-th step, including step 0; must divide the step count.
  std::size_t stride = 1;
  bool check_boundary = true;
  double boundary_mass_limit = 1e-6;
  std::size_t boundary_cells = 5;
  /// Allowed |norm(t) - norm(0)| before UnstableStep is raised.
  double norm_drift_limit = 1e-8;
};

struct Trajectory {
  std::vector<double> times;
  ComplexField psi;
  double norm_drift = 0.0;         ///< max |norm(t) - norm(0)| over kept snapshots
  double max_boundary_mass = 0.0;  ///< max probability within the boundary cells
  SpatialGrid snapshot_grid;       ///< grid whose time axis is the snapshot times

  WaveField wave() const { return {psi, std::nullopt}; }
  std::span<const Complex> final_state() const { return psi.slice(psi.n_t() - 1); }
};

/// Probability within `cells` grid points of either wall.
inline double boundary_mass(std::span<const Complex> psi, double dx, std::size_t cells) {
  double m = 0.0;
  const std::size_t n = psi.size();
  for (std::size_t i = 0; i < std::min(cells, n); ++i) m += std::norm(psi[i]) + std::norm(psi[n - 1 - i]);
  return m * dx;
}

/// Discrete Hamiltonian applied with hard walls: -(2/(m lambda)) D2 psi + V psi.
inline std::vector<Complex> apply_hamiltonian(std::span<const Complex> psi, const PhysicalParams& params,
                                              const SpatialGrid& grid, double t) {
  const double kappa = 2.0 / (params.mass * params.lambda) / (grid.dx() * grid.dx());
  const std::size_t n = psi.size();
  std::vector<Complex> h(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i)
    h[i] = kappa * (2.0 * psi[i] - psi[i - 1] - psi[i + 1]) + params.V(grid.x(i), t) * psi[i];
  return h;
}

/// <psi|H|psi> with the discrete Hamiltonian.
inline double energy_expectation(std::span<const Complex> psi, const PhysicalParams& params, const SpatialGrid& grid,
                                 double t = 0.0) {
  const auto h = apply_hamiltonian(psi, params, grid, t);
  Complex e = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) e += std::conj(psi[i]) * h[i];
  return e.real() * grid.dx();
}

/// Crank-Nicolson steps (1 + i a H) psi' = (1 - i a H) psi with
/// a = sqrt(lambda) dt / 4 and zero Dirichlet walls at +-L, second order in
/// dx and dt and unitary for any dt. A time-dependent V is sampled at the
/// step midpoint. grid.n_t is the number of steps.
///
/// Throws UnstableStep when the norm drifts beyond the limit and
/// BoundaryContact when more than the allowed probability reaches the walls.
inline Trajectory evolve_tdse(std::span<const Complex> psi0, const PhysicalParams& params, const SpatialGrid& grid,
                              const EvolveOptions& options = {}) {
  detail::check_shape(grid, psi0.size(), "initial state");
  params.validate();
  require(options.stride >= 1 && grid.n_t % options.stride == 0, ErrorCode::InvalidArgument,
          "stride must divide the number of steps");
  const std::size_t n = grid.n_x;
  const std::size_t steps = grid.n_t;
  const double dx = grid.dx();
  const double a = std::sqrt(params.lambda) * grid.dt / 4.0;
  const double kappa = 2.0 / (params.mass * params.lambda) / (dx * dx);
  const Complex ia(0.0, a);

  std::vector<Complex> psi(psi0.begin(), psi0.end());
  psi.front() = psi.back() = 0.0;
  const double norm0 = norm_squared(psi, dx);

  // Thomas algorithm on the interior points 1..n-2.
  const std::size_t m = n - 2;
  const Complex off = -ia * kappa;
  std::vector<Complex> diag(m), cprime(m), rhs(m);
  std::vector<double> potential(m);
  auto factor = [&](double t_mid) {
    for (std::size_t k = 0; k < m; ++k) {
      potential[k] = params.V(grid.x(k + 1), t_mid);
      diag[k] = 1.0 + ia * (2.0 * kappa + potential[k]);
    }
    cprime[0] = off / diag[0];
    for (std::size_t k = 1; k < m; ++k) {
      diag[k] -= off * cprime[k - 1];
      cprime[k] = off / diag[k];
    }
  };
  if (params.static_potential) factor(0.0);

  Trajectory traj;
  const std::size_t kept = steps / options.stride + 1;
  traj.psi = ComplexField(kept, n);
  traj.times.reserve(kept);
  auto keep = [&](std::size_t step) {
    const std::size_t k = step / options.stride;
    std::copy(psi.begin(), psi.end(), traj.psi.slice(k).begin());
    traj.times.push_back(grid.t_start + static_cast<double>(step) * grid.dt);
    traj.norm_drift = std::max(traj.norm_drift, std::abs(norm_squared(psi, dx) - norm0));
    traj.max_boundary_mass = std::max(traj.max_boundary_mass, boundary_mass(psi, dx, options.boundary_cells));
  };
  keep(0);

  for (std::size_t step = 1; step <= steps; ++step) {
    if (!params.static_potential) factor(grid.t_start + (static_cast<double>(step) - 0.5) * grid.dt);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = k + 1;
      rhs[k] = (1.0 - ia * (2.0 * kappa + potential[k])) * psi[i] + ia * kappa * (psi[i - 1] + psi[i + 1]);
    }
    // forward sweep with the factored diagonal
    rhs[0] /= diag[0];
    for (std::size_t k = 1; k < m; ++k) rhs[k] = (rhs[k] - off * rhs[k - 1]) / diag[k];
    for (std::size_t k = m - 1; k-- > 0;) rhs[k] -= cprime[k] * rhs[k + 1];
    std::copy(rhs.begin(), rhs.end(), psi.begin() + 1);
    if (step % options.stride == 0) keep(step);
  }

  traj.snapshot_grid = grid;
  traj.snapshot_grid.dt = grid.dt * static_cast<double>(options.stride);
  traj.snapshot_grid.n_t = kept;

  if (traj.norm_drift > options.norm_drift_limit)
    fail(ErrorCode::UnstableStep, "norm drift " + std::to_string(traj.norm_drift) + " exceeds the limit");
  if (options.check_boundary && traj.max_boundary_mass > options.boundary_mass_limit)
    fail(ErrorCode::BoundaryContact, "probability " + std::to_string(traj.max_boundary_mass) + " reached the walls");
  return traj;
}

// ---------------------------------------------------------------------------
// Madelung form of the extremum conditions of F:
//   continuity:      dP/dt + d/dx (P (dS/dx) / m) = 0
//   Hamilton-Jacobi: dS/dt + (dS/dx)^2/(2m) + V - (2/(m lambda)) (d2 sqrt(P)/dx2) / sqrt(P) = 0

struct MadelungOptions {
  DiscretizationOptions discretization;
  /// Points with P below this fraction of the slice maximum are masked.
  double core_fraction = 1e-6;
};

struct MadelungReport {
  double continuity_rms = 0.0;       ///< P-weighted RMS of the continuity residual
  double hamilton_jacobi_rms = 0.0;  ///< P-weighted RMS of the quantum Hamilton-Jacobi residual
  double max_abs_dP_dt = 0.0;
  std::size_t evaluated_points = 0;
  std::size_t masked_points = 0;
};

inline MadelungReport check_madelung_extremum(const PolarField& fields, const PhysicalParams& params,
                                              const SpatialGrid& grid, const MadelungOptions& options = {}) {
  detail::check_shape(grid, fields.P.n_x(), "density");
  params.validate();
  const auto& P = fields.P;
  const std::size_t nt = P.n_t(), nx = P.n_x();
  require(nt >= 3, ErrorCode::InvalidArgument, "need at least three time slices");
  const auto& d = options.discretization;

  RealField A(nt, nx);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < nx; ++i) A(t, i) = std::sqrt(std::max(0.0, P(t, i)));
  const auto Pt = detail::d_dt(P, grid.dt, d.t_accuracy);
  const auto St = detail::d_dt(fields.S, grid.dt, d.t_accuracy);
  const auto Sx = detail::d_dx(fields.S, grid.dx(), 1, d.x_accuracy);
  const auto Axx = detail::d_dx(A, grid.dx(), 2, d.x_accuracy);
  RealField flux(nt, nx);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < nx; ++i) flux(t, i) = P(t, i) * Sx(t, i) / params.mass;
  const auto flux_x = detail::d_dx(flux, grid.dx(), 1, d.x_accuracy);

  std::vector<double> peak(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < nx; ++i) peak[t] = std::max(peak[t], P(t, i));

  // A point is usable when it and its neighbours in x and t are in the core.
  const long reach = std::max(2, d.x_accuracy);
  auto core = [&](std::size_t t, long i) {
    return i >= 0 && i < static_cast<long>(nx) && fields.is_valid(t, static_cast<std::size_t>(i)) &&
           P(t, static_cast<std::size_t>(i)) > options.core_fraction * peak[t];
  };

  MadelungReport report;
  double wsum = 0.0, cont = 0.0, hj = 0.0;
  const double qcoef = 2.0 / (params.mass * params.lambda);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t i = 0; i < nx; ++i) {
      bool ok = true;
      for (long o = -reach; o <= reach && ok; ++o) {
        ok = core(t, static_cast<long>(i) + o);
        if (t > 0) ok = ok && core(t - 1, static_cast<long>(i) + o);
        if (t + 1 < nt) ok = ok && core(t + 1, static_cast<long>(i) + o);
      }
      if (!ok) {
        ++report.masked_points;
        continue;
      }
      ++report.evaluated_points;
      const double rc = Pt(t, i) + flux_x(t, i);
      const double rq = St(t, i) + Sx(t, i) * Sx(t, i) / (2.0 * params.mass) + params.V(grid.x(i), grid.t(t)) -
                        qcoef * Axx(t, i) / A(t, i);
      const double w = P(t, i);
      wsum += w;
      cont += w * rc * rc;
      hj += w * rq * rq;
      report.max_abs_dP_dt = std::max(report.max_abs_dP_dt, std::abs(Pt(t, i)));
    }
  }
  if (wsum == 0.0) fail(ErrorCode::PhaseUndefined, "no point away from nodes");
  report.continuity_rms = std::sqrt(cont / wsum);
  report.hamilton_jacobi_rms = std::sqrt(hj / wsum);
  return report;
}

inline MadelungReport check_madelung_extremum(const Trajectory& traj, const PhysicalParams& params,
                                              const MadelungOptions& options = {}) {
  const auto fields = wave_to_polar(traj.wave(), params.lambda, options.discretization.probability_floor);
  return check_madelung_extremum(fields, params, traj.snapshot_grid, options);
}

// ---------------------------------------------------------------------------
// Reference states and moments.

/// (2 pi sigma^2)^(-1/4) exp(-(x - x0)^2 / (4 sigma^2) + i p0 x / hbar), with
/// walls zeroed and the discrete norm set to 1.
inline std::vector<Complex> gaussian_packet(const SpatialGrid& grid, double x0, double p0, double sigma,
                                            double hbar) {
  require(sigma > 0.0 && hbar > 0.0, ErrorCode::InvalidArgument, "sigma and hbar must be positive");
  std::vector<Complex> psi(grid.n_x);
  for (std::size_t i = 0; i < grid.n_x; ++i) {
    const double x = grid.x(i);
    psi[i] = std::polar(std::exp(-(x - x0) * (x - x0) / (4.0 * sigma * sigma)), p0 * x / hbar);
  }
  psi.front() = psi.back() = 0.0;
  const double n = std::sqrt(norm_squared(psi, grid.dx()));
  for (auto& v : psi) v /= n;
  return psi;
}

/// Harmonic-oscillator ground state: Gaussian with sigma^2 = hbar / (2 m omega).
inline std::vector<Complex> harmonic_ground_state(const SpatialGrid& grid, double omega, double mass, double hbar) {
  return gaussian_packet(grid, 0.0, 0.0, std::sqrt(hbar / (2.0 * mass * omega)), hbar);
}

/// sigma(t)^2 = sigma0^2 (1 + (hbar t / (2 m sigma0^2))^2).
inline double free_gaussian_width_squared(double sigma0, double t, double mass, double hbar) {
  const double s = hbar * t / (2.0 * mass * sigma0 * sigma0);
  return sigma0 * sigma0 * (1.0 + s * s);
}

inline double position_mean(std::span<const Complex> psi, const SpatialGrid& grid) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    num += grid.x(i) * std::norm(psi[i]);
    den += std::norm(psi[i]);
  }
  return num / den;
}

inline double position_variance(std::span<const Complex> psi, const SpatialGrid& grid) {
  const double mean = position_mean(psi, grid);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double d = grid.x(i) - mean;
    num += d * d * std::norm(psi[i]);
    den += std::norm(psi[i]);
  }
  return num / den;
}

/// |<a|b>|^2 / (<a|a><b|b>).
inline double fidelity(std::span<const Complex> a, std::span<const Complex> b) {
  Complex ab = 0.0;
  double aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += std::conj(a[i]) * b[i];
    aa += std::norm(a[i]);
    bb += std::norm(b[i]);
  }
  return std::norm(ab) / (aa * bb);
}

}  // namespace liqt

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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "liqt/wave.hpp"

namespace liqt {
namespace {

using std::numbers::pi;

RealField gaussian_density(const SpatialGrid& grid, double mean, double sigma) {
  RealField P(1, grid.n_x);
  for (std::size_t i = 0; i < grid.n_x; ++i) {
    const double z = (grid.x(i) - mean) / sigma;
    P(0, i) = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * pi));
  }
  return P;
}

// ---------------------------------------------------------------------------
// Detectors

TEST(DetectorLayout, CoversInterval) {
  const DetectorLayout layout{10.0, 5};
  EXPECT_EQ(layout.bins(), 11u);
  const auto e = layout.edges();
  ASSERT_EQ(e.size(), 12u);
  EXPECT_NEAR(e.front(), -10.0, 1e-12);
  EXPECT_NEAR(e.back(), 10.0, 1e-12);
  EXPECT_NEAR(layout.lower_edge(0), -layout.upper_edge(0), 1e-15);
}

TEST(BinProbabilities, UniformDensityGivesEqualBins) {
  const SpatialGrid grid{10.0, 221};
  const std::vector<double> P(grid.n_x, 0.05);
  for (double p : bin_probabilities(P, grid, {10.0, 5})) EXPECT_NEAR(p, 1.0 / 11, 1e-12);
}

TEST(DetectorClicks, NarrowPacketHitsCentralDetector) {
  const SpatialGrid grid{10.0, 2001};
  const auto data = simulate_detector_clicks(gaussian_density(grid, 0.0, 0.05), grid, 5, 10000, 1);
  EXPECT_EQ(data.at(0, 0), 10000u);
  EXPECT_NO_THROW(data.validate());
}

TEST(DetectorClicks, UniformDensityWithinFiveSigma) {
  const SpatialGrid grid{10.0, 221};
  RealField P(2, grid.n_x, 0.05);
  const std::uint64_t n = 1000000;
  const auto data = simulate_detector_clicks(P, grid, 5, n, 9);
  const double p = 1.0 / 11, sigma = std::sqrt(n * p * (1 - p));
  for (std::size_t tau = 0; tau < 2; ++tau) {
    std::uint64_t sum = 0;
    for (int j = -5; j <= 5; ++j) {
      EXPECT_LT(std::abs(static_cast<double>(data.at(tau, j)) - n * p), 5.0 * sigma);
      sum += data.at(tau, j);
    }
    EXPECT_EQ(sum, n);
  }
  EXPECT_EQ(data, simulate_detector_clicks(P, grid, 5, n, 9));
}

TEST(DetectorData, ValidateRejectsWrongTotals) {
  DetectorData d{1, 10, Field<std::uint64_t>(1, 3, 0), 0};
  d.clicks(0, 1) = 9;
  EXPECT_THROW(d.validate(), Error);
  d.clicks(0, 2) = 1;
  EXPECT_NO_THROW(d.validate());
}

// ---------------------------------------------------------------------------
// Fisher information

TEST(FisherDiscrete, PositionIndependentModelCarriesNoInformation) {
  const BinModel flat = [](double, std::size_t) { return std::vector<double>{0.2, 0.3, 0.5}; };
  const std::vector<double> xs{0.0, 1.0, 2.0};
  EXPECT_EQ(fisher_discrete(flat, xs, 1e-3), 0.0);
}

TEST(FisherDiscrete, FineBinsApproachGaussianLimit) {
  std::vector<double> edges;
  for (int i = 0; i <= 400; ++i) edges.push_back(-10.0 + 0.05 * i);
  const auto model = gaussian_bin_model(edges, 1.0);
  const std::vector<double> xs{0.3};
  EXPECT_NEAR(fisher_discrete(model, xs, 1e-4), 1.0, 1e-2);
  // Coarse bins lose information.
  const auto coarse = gaussian_bin_model({-1.0, 0.0, 1.0}, 1.0);
  const double i_coarse = fisher_discrete(coarse, xs, 1e-4);
  EXPECT_GT(i_coarse, 0.0);
  EXPECT_LT(i_coarse, 1.0);
}

TEST(FisherDiscrete, AdditiveOverTimeSlices) {
  const auto model = gaussian_bin_model({-3.0, -1.0, 0.0, 1.0, 3.0}, 0.5);
  const std::vector<double> one{0.25}, two{0.25, 0.25};
  EXPECT_NEAR(fisher_discrete(model, two, 1e-4), 2.0 * fisher_discrete(model, one, 1e-4), 1e-12);
}

TEST(FisherDiscrete, InvariantUnderJointShift) {
  // Dyadic edges, positions and step keep every subtraction exact.
  std::vector<double> edges, shifted;
  for (int i = 0; i <= 16; ++i) {
    edges.push_back(-4.0 + 0.5 * i);
    shifted.push_back(-4.0 + 0.5 * i + 2.0);
  }
  const std::vector<double> x{0.5, -0.25}, xs{2.5, 1.75};
  const double a = fisher_discrete(gaussian_bin_model(edges, 0.75), x, 0x1p-10);
  const double b = fisher_discrete(gaussian_bin_model(shifted, 0.75), xs, 0x1p-10);
  EXPECT_NEAR(a, b, 1e-12 * a);
}

TEST(FisherDiscrete, VanishingVaryingBinThrows) {
  const BinModel ramp = [](double X, std::size_t) {
    const double p = std::max(0.0, X);
    return std::vector<double>{p, 1.0 - p};
  };
  const std::vector<double> xs{0.0};
  try {
    fisher_discrete(ramp, xs, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateProbability);
  }
}

TEST(FisherContinuum, GaussianIsInverseVariance) {
  for (double sigma : {0.5, 1.0, 2.0}) {
    const SpatialGrid grid{12.0, 1024};
    EXPECT_NEAR(fisher_continuum(gaussian_density(grid, 0.4, sigma), grid) * sigma * sigma, 1.0, 1e-2);
  }
}

TEST(FisherContinuum, UniformDensityIsZero) {
  const SpatialGrid grid{5.0, 101};
  EXPECT_EQ(fisher_continuum(RealField(1, grid.n_x, 0.1), grid), 0.0);
}

TEST(FisherContinuum, SecondOrderConvergence) {
  // P = sech^2(x)/2 has I = 4/3. (For a Gaussian the h^2 term integrates to zero.)
  std::vector<double> err;
  for (std::size_t n : {101, 201, 401}) {
    const SpatialGrid grid{12.0, n};
    RealField P(1, n);
    for (std::size_t i = 0; i < n; ++i) P(0, i) = 0.5 / std::pow(std::cosh(grid.x(i)), 2);
    err.push_back(std::abs(fisher_continuum(P, grid) - 4.0 / 3.0));
  }
  EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.3);
}

TEST(FisherContinuum, NegativeDensityThrows) {
  const SpatialGrid grid{5.0, 32};
  RealField P(1, grid.n_x, 0.1);
  P(0, 7) = -1e-3;
  EXPECT_THROW(fisher_continuum(P, grid), Error);
}

// ---------------------------------------------------------------------------
// Classical limit

TEST(HamiltonJacobi, PlaneWaveActionSolvesFreeEquation) {
  const SpatialGrid grid{5.0, 64, 0.01, 20};
  const double p = 1.3, v0 = 0.7;
  auto params = PhysicalParams::free_particle();
  params.potential = [v0](double, double) { return v0; };
  RealField S(grid.n_t, grid.n_x);
  for (std::size_t t = 0; t < grid.n_t; ++t)
    for (std::size_t i = 0; i < grid.n_x; ++i) S(t, i) = p * grid.x(i) - (0.5 * p * p + v0) * grid.t(t);
  const auto r = hj_residual(S, params, grid);
  for (std::size_t t = 0; t < grid.n_t; ++t)
    for (std::size_t i = 0; i < grid.n_x; ++i) EXPECT_NEAR(r(t, i), 0.0, 1e-10);
}

TEST(HamiltonJacobi, SpreadingActionAndCharacteristics) {
  // S = x^2 / (2 (t + t0)) solves the free equation with m = 1; its
  // characteristics are x(t) = x0 (t + t0) / t0.
  const double t0 = 1.0;
  const SpatialGrid grid{6.0, 121, 0.01, 101};
  RealField S(grid.n_t, grid.n_x);
  for (std::size_t t = 0; t < grid.n_t; ++t)
    for (std::size_t i = 0; i < grid.n_x; ++i) S(t, i) = grid.x(i) * grid.x(i) / (2.0 * (grid.t(t) + t0));
  const auto params = PhysicalParams::free_particle();
  const auto r = hj_residual(S, params, grid, {2, 4, 1e-12});
  double worst = 0.0;
  for (std::size_t t = 0; t < grid.n_t; ++t)
    for (std::size_t i = 0; i < grid.n_x; ++i) worst = std::max(worst, std::abs(r(t, i)));
  EXPECT_LT(worst, 1e-5);

  const auto path = trace_characteristic(S, 1.0, grid, 1.5);
  ASSERT_EQ(path.size(), grid.n_t);
  for (std::size_t t = 0; t < grid.n_t; ++t) EXPECT_NEAR(path[t], 1.5 * (grid.t(t) + t0) / t0, 1e-4);
}

TEST(HamiltonJacobi, NeedsTwoSlices) {
  const SpatialGrid grid{5.0, 32};
  EXPECT_THROW(hj_residual(RealField(1, 32), PhysicalParams::free_particle(), grid), Error);
}

// ---------------------------------------------------------------------------
// Functionals

TEST(FunctionalF, StaticGaussianIsFisherInformation) {
  const SpatialGrid grid{12.0, 1024};
  const double sigma = 0.8;
  const PolarField f{gaussian_density(grid, 0.0, sigma), RealField(1, grid.n_x, 0.0), {}, std::nullopt};
  EXPECT_NEAR(functional_F(f, PhysicalParams::free_particle(), grid), 1.0 / (sigma * sigma), 1e-2);
}

PolarField harmonic_fields(const SpatialGrid& grid, double dP, double dS) {
  // lambda = 4, m = omega = 1: hbar = 1, sigma^2 = 1/2, E = 1/2.
  PolarField f{gaussian_density(grid, 0.0, std::sqrt(0.5)), RealField(1, grid.n_x), {}, RealField(1, grid.n_x, -0.5)};
  for (std::size_t i = 0; i < grid.n_x; ++i) {
    const double x = grid.x(i);
    f.P(0, i) *= 1.0 + dP * std::cos(x);
    f.S(0, i) = dS * std::sin(0.5 * x);
  }
  return f;
}

TEST(FunctionalF, HarmonicGroundStateIsStationary) {
  const SpatialGrid grid{10.0, 801};
  const auto params = PhysicalParams::harmonic(1.0);
  const DiscretizationOptions opts{8, 2, 1e-300};
  const double f0 = functional_F(harmonic_fields(grid, 0.0, 0.0), params, grid, opts);
  EXPECT_NEAR(f0, 0.0, 1e-8);
  const double d1 = functional_F(harmonic_fields(grid, 1e-2, 1e-2), params, grid, opts) - f0;
  const double d2 = functional_F(harmonic_fields(grid, 5e-3, 5e-3), params, grid, opts) - f0;
  EXPECT_GT(d1, 0.0);
  EXPECT_NEAR(d1 / d2, 4.0, 0.1);
}

TEST(FunctionalF, EqualsQOnRandomFields) {
  const SpatialGrid grid{12.0, 256, 0.01, 8};
  const auto opts = DiscretizationOptions::high_order(grid.n_t);
  const auto params = PhysicalParams::harmonic(1.3);
  Rng rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    const auto fields = random_smooth_fields(grid, rng);
    const double F = functional_F(fields, params, grid, opts);
    const auto Q = functional_Q_complex(polar_to_wave(fields, params.lambda), params, grid, opts);
    EXPECT_LT(std::abs(F - Q.real()) / (std::abs(F) + std::abs(Q.real())), 1e-8) << trial;
    EXPECT_LT(std::abs(Q.imag()), 1e-8 * std::abs(Q.real()));
  }
}

TEST(FunctionalF, EqualsQForStationaryState) {
  const SpatialGrid grid{10.0, 801};
  const auto params = PhysicalParams::harmonic(1.0);
  const auto fields = harmonic_fields(grid, 0.1, 0.2);
  const DiscretizationOptions opts{16, 2, 1e-300};
  const double F = functional_F(fields, params, grid, opts);
  const double Q = functional_Q(polar_to_wave(fields, params.lambda), params, grid, opts);
  EXPECT_NEAR(F, Q, 1e-9 * std::abs(F));
}

TEST(FunctionalQ, StaticRealWaveIsKineticPlusPotential) {
  const SpatialGrid grid{12.0, 1024};
  const auto P = gaussian_density(grid, 0.0, 1.0);
  WaveField w{ComplexField(1, grid.n_x), std::nullopt};
  for (std::size_t i = 0; i < grid.n_x; ++i) w.psi(0, i) = std::sqrt(P(0, i));
  EXPECT_NEAR(functional_Q(w, PhysicalParams::free_particle(), grid), 1.0, 1e-2);
  // Adding V = x^2/2 with lambda = 4 contributes 2 m lambda <V> = 4 <x^2> = 4.
  EXPECT_NEAR(functional_Q(w, PhysicalParams::harmonic(1.0), grid), 5.0, 1e-2);
}

TEST(FunctionalQ, VanishesOnSchrodingerSolutions) {
  const SpatialGrid grid{15.0, 512, 0.005, 40};
  const auto params = PhysicalParams::harmonic(0.7);
  const auto traj = evolve_tdse(gaussian_packet(grid, 1.0, 0.5, 1.0, params.hbar()), params, grid);
  const auto opts = DiscretizationOptions{8, 6, 1e-12};
  const auto Q = functional_Q_complex(traj.wave(), params, traj.snapshot_grid, opts);
  // Scale: the kinetic part 4 int |psi_x|^2 dx of the initial slice times the duration.
  const SpatialGrid slice_grid{grid.half_extent, grid.n_x, 1.0, 1};
  WaveField first{ComplexField(1, grid.n_x), std::nullopt};
  std::copy(traj.psi.slice(0).begin(), traj.psi.slice(0).end(), first.psi.slice(0).begin());
  const double kinetic = functional_Q(first, PhysicalParams::free_particle(), slice_grid, opts) * traj.times.back();
  EXPECT_LT(std::abs(Q.real()), 1e-3 * kinetic);
  EXPECT_LT(std::abs(Q.imag()), 1e-10 * kinetic);
}

// ---------------------------------------------------------------------------
// Polar maps

TEST(PolarMaps, RoundTripRecoversFieldsUpToConstant) {
  const SpatialGrid grid{12.0, 256, 0.01, 8};
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto fields = random_smooth_fields(grid, rng);
    const auto back = wave_to_polar(polar_to_wave(fields, 4.0), 4.0);
    std::optional<double> offset;
    for (std::size_t t = 0; t < grid.n_t; ++t) {
      for (std::size_t i = 0; i < grid.n_x; ++i) {
        EXPECT_NEAR(back.P(t, i), fields.P(t, i), 1e-14);
        if (!back.is_valid(t, i)) continue;
        const double d = back.S(t, i) - fields.S(t, i);
        if (!offset) offset = d;
        EXPECT_NEAR(d, *offset, 1e-9);
      }
    }
  }
}

TEST(PolarMaps, PlaneWavePhaseIsLinear) {
  const SpatialGrid grid{10.0, 400};
  const double lambda = 9.0, p = 2.5;
  WaveField w{ComplexField(1, grid.n_x), std::nullopt};
  for (std::size_t i = 0; i < grid.n_x; ++i) w.psi(0, i) = std::polar(0.2, 0.5 * std::sqrt(lambda) * p * grid.x(i));
  const auto f = wave_to_polar(w, lambda);
  const double offset = f.S(0, 0) - p * grid.x(0);
  for (std::size_t i = 0; i < grid.n_x; ++i) EXPECT_NEAR(f.S(0, i) - p * grid.x(i), offset, 1e-10);
  EXPECT_NEAR(std::remainder(offset * 0.5 * std::sqrt(lambda), 2 * pi), 0.0, 1e-10);
}

TEST(PolarMaps, NodesAreMasked) {
  const SpatialGrid grid{5.0, 101};  // contains x = 0
  WaveField w{ComplexField(1, grid.n_x), std::nullopt};
  for (std::size_t i = 0; i < grid.n_x; ++i) w.psi(0, i) = grid.x(i) * std::exp(-grid.x(i) * grid.x(i));
  const auto f = wave_to_polar(w, 4.0);
  EXPECT_FALSE(f.is_valid(0, 50));
  EXPECT_EQ(f.S(0, 50), 0.0);
  EXPECT_TRUE(f.is_valid(0, 49));
  // Sign change across the node is a phase jump of pi.
  EXPECT_NEAR(std::abs(f.S(0, 51) - f.S(0, 49)), pi, 1e-12);
}

TEST(PolarMaps, VanishingSliceHasNoPhase) {
  const SpatialGrid grid{5.0, 32};
  WaveField w{ComplexField(2, grid.n_x, 0.0), std::nullopt};
  w.psi(0, 3) = 1.0;
  try {
    wave_to_polar(w, 4.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PhaseUndefined);
  }
}

TEST(PolarMaps, StationaryTimeDerivativeCarriesOver) {
  const SpatialGrid grid{10.0, 101};
  const auto fields = harmonic_fields(grid, 0.0, 0.0);
  const auto w = polar_to_wave(fields, 4.0);
  ASSERT_TRUE(w.dpsi_dt.has_value());
  // psi_t = i (sqrt(lambda)/2) S_t psi = -0.5 i psi.
  for (std::size_t i = 0; i < grid.n_x; ++i) EXPECT_NEAR(std::abs((*w.dpsi_dt)(0, i) + Complex(0, 0.5) * w.psi(0, i)), 0.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Evolution

TEST(Evolve, HarmonicGroundStateIsStationary) {
  const SpatialGrid grid{10.0, 512, 1e-3, 2000};
  const auto params = PhysicalParams::harmonic(1.0);
  const auto psi0 = harmonic_ground_state(grid, 1.0, 1.0, params.hbar());
  const auto traj = evolve_tdse(psi0, params, grid, {.stride = 500});
  EXPECT_EQ(traj.psi.n_t(), 5u);
  EXPECT_GT(fidelity(psi0, traj.final_state()), 1.0 - 1e-6);
  EXPECT_NEAR(traj.times.back(), 2.0, 1e-12);
}

TEST(Evolve, FreePacketSpreadsAsExpected) {
  const SpatialGrid grid{25.0, 2048, 0.002, 1000};
  const auto params = PhysicalParams::free_particle();
  const double sigma0 = 1.0;
  const auto traj = evolve_tdse(gaussian_packet(grid, 0.0, 0.0, sigma0, params.hbar()), params, grid, {.stride = 1000});
  const double expected = free_gaussian_width_squared(sigma0, 2.0, 1.0, params.hbar());
  EXPECT_NEAR(std::sqrt(position_variance(traj.final_state(), grid) / expected), 1.0, 1e-4);
}

TEST(Evolve, MovingPacketFollowsEhrenfest) {
  const SpatialGrid grid{20.0, 1024, 0.002, 1000};
  const auto params = PhysicalParams::free_particle(2.0, 4.0);
  const double p0 = 3.0;
  const auto traj = evolve_tdse(gaussian_packet(grid, -3.0, p0, 1.0, params.hbar()), params, grid, {.stride = 250});
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    EXPECT_NEAR(position_mean(traj.psi.slice(k), grid), -3.0 + p0 / 2.0 * traj.times[k], 1e-2);
}

TEST(Evolve, NormAndEnergyConservedOverLongRun) {
  const SpatialGrid grid{10.0, 256, 1e-3, 10000};
  const auto params = PhysicalParams::harmonic(1.0);
  const auto psi0 = gaussian_packet(grid, 1.5, 0.5, 0.8, params.hbar());
  const auto traj = evolve_tdse(psi0, params, grid, {.stride = 100});
  EXPECT_LT(traj.norm_drift, 1e-10);
  const double e0 = energy_expectation(psi0, params, grid);
  EXPECT_NEAR(energy_expectation(traj.final_state(), params, grid), e0, 1e-8 * std::abs(e0));
}

TEST(Evolve, LambdaScalingSymmetry) {
  // (lambda, t, V) -> (lambda / c^2, t / c, c^2 V) maps solutions to solutions.
  const double c = 2.0;
  const SpatialGrid grid{10.0, 256, 2e-3, 500};
  const auto params = PhysicalParams::harmonic(1.0, 1.0, 4.0);
  SpatialGrid scaled_grid = grid;
  scaled_grid.dt = grid.dt / c;
  const auto scaled = PhysicalParams::harmonic(c, 1.0, 4.0 / (c * c));
  const auto psi0 = gaussian_packet(grid, 1.0, 0.3, 0.9, 1.0);
  const auto a = evolve_tdse(psi0, params, grid, {.stride = 500});
  const auto b = evolve_tdse(psi0, scaled, scaled_grid, {.stride = 500});
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.n_x; ++i) worst = std::max(worst, std::abs(a.final_state()[i] - b.final_state()[i]));
  EXPECT_LT(worst, 1e-10);
}

TEST(Evolve, TimeDependentPotentialIsUnitary) {
  const SpatialGrid grid{10.0, 256, 1e-3, 1000};
  auto params = PhysicalParams::free_particle();
  params.potential = [](double x, double t) { return 0.5 * x * x * (1.0 + 0.5 * std::sin(3.0 * t)); };
  params.static_potential = false;
  const auto traj = evolve_tdse(harmonic_ground_state(grid, 1.0, 1.0, params.hbar()), params, grid, {.stride = 100});
  EXPECT_LT(traj.norm_drift, 1e-10);
}

TEST(Evolve, PacketReachingWallIsReported) {
  const SpatialGrid grid{10.0, 256, 1e-2, 400};
  const auto params = PhysicalParams::free_particle();
  try {
    evolve_tdse(gaussian_packet(grid, 5.0, 4.0, 0.5, params.hbar()), params, grid);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoundaryContact);
  }
  EvolveOptions lenient;
  lenient.check_boundary = false;
  EXPECT_NO_THROW(evolve_tdse(gaussian_packet(grid, 5.0, 4.0, 0.5, params.hbar()), params, grid, lenient));
}

TEST(Evolve, NormDriftBeyondLimitIsReported) {
  const SpatialGrid grid{10.0, 64, 1e-2, 10};
  const auto params = PhysicalParams::free_particle();
  EvolveOptions strict;
  strict.norm_drift_limit = -1.0;
  try {
    evolve_tdse(harmonic_ground_state(grid, 1.0, 1.0, params.hbar()), params, grid, strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnstableStep);
  }
}

TEST(Evolve, StrideMustDivideSteps) {
  const SpatialGrid grid{10.0, 64, 1e-2, 10};
  const auto params = PhysicalParams::free_particle();
  EXPECT_THROW(evolve_tdse(harmonic_ground_state(grid, 1.0, 1.0, 1.0), params, grid, {.stride = 3}), Error);
}

// ---------------------------------------------------------------------------
// Madelung form of the extremum conditions

TEST(Madelung, StationaryStateHasConstantDensity) {
  const SpatialGrid grid{10.0, 1024, 2e-3, 100};
  const auto params = PhysicalParams::harmonic(1.0);
  const auto traj = evolve_tdse(harmonic_ground_state(grid, 1.0, 1.0, params.hbar()), params, grid, {.stride = 10});
  MadelungOptions mo;
  mo.core_fraction = 1e-3;
  const auto rep = check_madelung_extremum(traj, params, mo);
  EXPECT_LT(rep.max_abs_dP_dt, 1e-4);
  EXPECT_LT(rep.continuity_rms, 1e-7);
  EXPECT_LT(rep.hamilton_jacobi_rms, 1e-6);
  EXPECT_GT(rep.evaluated_points, 0u);
  EXPECT_GT(rep.masked_points, 0u);
}

TEST(Madelung, ResidualsConvergeAtSecondOrder) {
  std::vector<double> cont, hj;
  for (int r = 0; r < 3; ++r) {
    const SpatialGrid grid{15.0, std::size_t{256} << r, 0.02 / (1 << r), std::size_t{40} << r};
    const auto params = PhysicalParams::free_particle();
    const auto traj = evolve_tdse(gaussian_packet(grid, -1.0, 1.0, 1.0, params.hbar()), params, grid, {.stride = 2});
    MadelungOptions mo;
    mo.core_fraction = 1e-2;
    const auto rep = check_madelung_extremum(traj, params, mo);
    cont.push_back(rep.continuity_rms);
    hj.push_back(rep.hamilton_jacobi_rms);
  }
  EXPECT_NEAR(std::log2(cont[1] / cont[2]), 2.0, 0.3);
  EXPECT_NEAR(std::log2(hj[1] / hj[2]), 2.0, 0.3);
  EXPECT_LT(cont[0] / cont[2], 32.0);
}

TEST(Madelung, RequiresThreeSlices) {
  const SpatialGrid grid{10.0, 64};
  const PolarField f{gaussian_density(grid, 0.0, 1.0), RealField(1, grid.n_x, 0.0), {}, std::nullopt};
  EXPECT_THROW(check_madelung_extremum(f, PhysicalParams::free_particle(), grid), Error);
}

}  // namespace
}  // namespace liqt

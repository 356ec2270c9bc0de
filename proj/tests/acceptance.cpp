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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "liqt/cli.hpp"
#include "liqt/liqt.hpp"

namespace {

using namespace liqt;
using std::numbers::pi;
namespace fs = std::filesystem;

struct Result {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Result sg_closed_form() {
  const auto grid = uniform_theta_grid(16);
  const auto logs = sample_sg_grid(grid, 1000000, 20260101);
  double worst = 0.0;
  std::vector<double> e, s;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto est = estimate_expectation(logs[i]);
    const double n = static_cast<double>(logs[i].size());
    // Null standard error of the frequency of +1 under the prediction, floored
    // at one count where the prediction is certain.
    const double p = 0.5 * (1.0 + std::cos(grid[i]));
    const double sigma = std::max(std::sqrt(p * (1.0 - p) / n), 1.0 / n);
    worst = std::max(worst, std::abs(0.5 * (1.0 + est.e_hat) - p) / sigma);
    e.push_back(est.e_hat);
    s.push_back(est.std_error);
  }
  const auto fit = fit_robust_solution(grid, e, kDefaultKMax, s);
  return {worst <= 5.0 && fit.k == 1 && fit.phi == 0.0,
          "max deviation " + num(worst) + " sigma, fit K=" + std::to_string(fit.k) + " phi=" + num(fit.phi)};
}

Result fisher_constancy() {
  double worst = 0.0;
  for (int k = 1; k <= 3; ++k) {
    for (double phi : {0.0, pi}) {
      const auto model = DichotomicModel::robust(k, phi);
      for (int i = 0; i < 1000; ++i) {
        const double theta = 0.001 + (pi - 0.002) * i / 999.0;
        if (std::abs(model.expectation(theta)) >= 1.0 - 1e-12) continue;
        worst = std::max(worst, std::abs(fisher_dichotomic(model, theta) - k * k));
      }
    }
  }
  return {worst < 1e-9, "max |I_F - K^2| = " + num(worst)};
}

Result evidence_order() {
  const auto model = DichotomicModel::robust(1, 0.0);
  const double theta = pi / 3;
  const CountTable counts = CountTable::dichotomic(7500, 2500);  // N P(x|theta), N = 10^4
  std::vector<double> scaled;
  for (double eps : {0.04, 0.02, 0.01, 0.005, 0.0025}) scaled.push_back(evidence_expansion_error(counts, model, theta, eps));
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 1; i < scaled.size(); ++i) {
    const double r = scaled[i] / scaled[i - 1];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo >= 0.2 && hi <= 5.0, "successive |Ev - Ev_q|/(N eps^3) ratios in [" + num(lo) + ", " + num(hi) + "]"};
}

Result eprb_singlet() {
  double worst_xy = 0.0, worst_marginal = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double theta = pi * i / 11.0;
    const auto counts = sample_pair_counts(-std::cos(theta), 1000000, derive_seed(77, static_cast<std::uint64_t>(i)));
    const auto r = correlation_report(counts);
    const double n = static_cast<double>(r.n);
    const double sigma = std::max(std::sqrt((1.0 - std::cos(theta) * std::cos(theta)) / n), 1.0 / n);
    worst_xy = std::max(worst_xy, std::abs(r.xy_mean + std::cos(theta)) / sigma);
    const auto m = marginal_uniformity_test(counts);
    worst_marginal = std::max({worst_marginal, m.sigma_x, m.sigma_y});
  }
  const auto passes = run_repeats<int>(1000, 4242, [](std::size_t, std::uint64_t seed) {
    const auto counts = sample_pair_counts(-std::cos(pi / 3), 1000000, seed);
    return compliance_test(counts, -std::cos(pi / 3)).pass_5sigma ? 1 : 0;
  });
  int passed = 0;
  for (int p : passes) passed += p;
  return {worst_xy <= 5.0 && worst_marginal <= 5.0 && passed >= 999,
          "<xy> within " + num(worst_xy) + " sigma, marginals within " + num(worst_marginal) + " sigma, " +
              std::to_string(passed) + "/1000 seeds compliant"};
}

Result separation() {
  double worst_m = 0.0;
  for (const auto& m : fibonacci_directions(10)) {
    const auto sep = separate_sg(robust_sg_frequency, sg_design(m));
    if (!sep.primary().m) return {false, "no source direction recovered"};
    worst_m = std::max(worst_m, norm(sep.primary().m->vec() - m.vec()));
  }
  const auto sep = separate_eprb(singlet_observations(eprb_design()));
  ComplexMatrix expected = 0.25 * ComplexMatrix::Identity(4, 4);
  for (int k = 1; k <= 3; ++k) expected -= 0.25 * pauli::first(k) * pauli::second(k);
  const auto rho = sep.rho();
  const double entry = (rho.matrix() - expected).cwiseAbs().maxCoeff();
  const double projector = rho.projector_defect();
  const auto state = rho_to_state(rho);
  const double r = 1.0 / std::sqrt(2.0);
  const double amp = std::max({std::abs(state(0)), std::abs(state(1) - r), std::abs(state(2) + r), std::abs(state(3))});
  return {worst_m < 1e-12 && entry < 1e-10 && projector < 1e-12 && amp < 1e-10,
          "|M - M_fit| " + num(worst_m) + ", rho entries " + num(entry) + ", |rho^2 - rho| " + num(projector) +
              ", singlet amplitudes " + num(amp)};
}

Result non_separability() {
  const FrequencyFunction squared = [](liqt::Outcome x, const UnitVector3& a, const UnitVector3& m) {
    const double c = cos_angle(a, m);
    return 0.5 * (1.0 + x.value() * c * c);
  };
  const auto design = sg_design(UnitVector3::polar(0.9, 0.4), 20);
  const auto bad = separate_sg(squared, design);
  const auto good = separate_sg(robust_sg_frequency, design);
  return {bad.status == SeparationStatus::non_separable && bad.residual > 1e-2 && good.residual < 1e-10,
          "squared residual " + num(bad.residual) + ", robust residual " + num(good.residual)};
}

Result f_equals_q() {
  const SpatialGrid grid{12.0, 256, 0.01, 8};
  const auto opts = DiscretizationOptions::high_order(grid.n_t);
  const auto params = PhysicalParams::harmonic(1.0);
  Rng rng(99);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto fields = random_smooth_fields(grid, rng);
    const double F = functional_F(fields, params, grid, opts);
    const double Q = functional_Q(polar_to_wave(fields, params.lambda), params, grid, opts);
    worst = std::max(worst, std::abs(F - Q) / (std::abs(F) + std::abs(Q)));
  }
  return {worst < 1e-8, "max |F - Q|/(|F| + |Q|) = " + num(worst)};
}

Result linear_route() {
  // Harmonic oscillator, one period.
  const auto ho = PhysicalParams::harmonic(1.0);
  const std::size_t steps = 6000;
  const SpatialGrid ho_grid{10.0, 512, 2.0 * pi / steps, steps};
  const auto psi0 = harmonic_ground_state(ho_grid, 1.0, 1.0, ho.hbar());
  const auto ho_traj = evolve_tdse(psi0, ho, ho_grid, {.stride = steps});
  const double fid = fidelity(psi0, ho_traj.final_state());

  // Free Gaussian width law.
  const auto free = PhysicalParams::free_particle();
  const SpatialGrid free_grid{25.0, 2048, 0.002, 1000};
  const auto free_traj = evolve_tdse(gaussian_packet(free_grid, 0.0, 0.0, 1.0, free.hbar()), free, free_grid,
                                     {.stride = 1000});
  const double width = std::sqrt(position_variance(free_traj.final_state(), free_grid));
  const double width_err = std::abs(width / std::sqrt(free_gaussian_width_squared(1.0, 2.0, 1.0, free.hbar())) - 1.0);

  // Norm over 10^4 steps.
  const SpatialGrid long_grid{10.0, 256, 1e-3, 10000};
  const auto long_traj =
      evolve_tdse(gaussian_packet(long_grid, 1.0, 0.5, 0.8, ho.hbar()), ho, long_grid, {.stride = 100});

  // Madelung residuals under refinement.
  std::vector<double> cont, hj;
  for (int r = 0; r < 3; ++r) {
    const SpatialGrid grid{15.0, std::size_t{256} << r, 0.02 / (1 << r), std::size_t{40} << r};
    const auto traj = evolve_tdse(gaussian_packet(grid, -1.0, 1.0, 1.0, free.hbar()), free, grid, {.stride = 2});
    MadelungOptions mo;
    mo.core_fraction = 1e-2;
    const auto rep = check_madelung_extremum(traj, free, mo);
    cont.push_back(rep.continuity_rms);
    hj.push_back(rep.hamilton_jacobi_rms);
  }
  const double oc = std::log2(cont[1] / cont[2]), oh = std::log2(hj[1] / hj[2]);
  const bool ok = fid > 1.0 - 1e-6 && width_err < 1e-4 && long_traj.norm_drift < 1e-10 && oc > 1.7 && oh > 1.7;
  return {ok, "HO fidelity 1-" + num(1.0 - fid) + ", width error " + num(width_err) + ", norm drift " +
                  num(long_traj.norm_drift) + ", Madelung orders " + num(oc) + "/" + num(oh)};
}

std::map<std::vector<std::uint64_t>, double> enumerate(std::size_t n, const std::vector<double>& p) {
  std::map<std::vector<std::uint64_t>, double> out;
  std::vector<std::size_t> seq(n, 0);
  for (;;) {
    std::vector<std::uint64_t> counts(p.size(), 0);
    double prob = 1.0;
    for (auto s : seq) {
      ++counts[s];
      prob *= p[s];
    }
    out[counts] += prob;
    std::size_t i = 0;
    while (i < n && ++seq[i] == p.size()) seq[i++] = 0;
    if (i == n) break;
  }
  return out;
}

Result multinomial_oracle() {
  double worst = 0.0;
  std::size_t tables = 0;
  const std::vector<std::vector<double>> cases{{0.5, 0.5}, {0.2, 0.8}, {0.999, 0.001}, {0.25, 0.25, 0.25, 0.25},
                                               {0.1, 0.2, 0.3, 0.4}};
  for (const auto& p : cases) {
    const std::size_t n_max = p.size() == 2 ? 12 : 8;
    for (std::size_t n = 0; n <= n_max; ++n) {
      for (const auto& [counts, prob] : enumerate(n, p)) {
        worst = std::max(worst, std::abs(log_multinomial_iprob(CountTable(counts), p) - std::log(prob)));
        ++tables;
      }
    }
  }
  // Four-outcome tables up to N = 12 by direct product over sequences of a
  // fixed table: N!/prod n! sequences of equal probability.
  const std::vector<double> p4{0.1, 0.2, 0.3, 0.4};
  for (std::uint64_t a = 0; a <= 12; ++a)
    for (std::uint64_t b = 0; a + b <= 12; ++b)
      for (std::uint64_t c = 0; a + b + c <= 12; ++c)
        for (std::uint64_t d = 0; a + b + c + d <= 12; ++d) {
          // Count sequences by multiplying binomials with integer arithmetic.
          auto binom = [](std::uint64_t n, std::uint64_t k) {
            std::uint64_t r = 1;
            for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
            return r;
          };
          const std::uint64_t n = a + b + c + d;
          const auto ways = binom(n, a) * binom(n - a, b) * binom(n - a - b, c);
          const double prob = static_cast<double>(ways) * std::pow(0.1, a) * std::pow(0.2, b) * std::pow(0.3, c) *
                              std::pow(0.4, d);
          worst = std::max(worst, std::abs(log_multinomial_iprob(CountTable({a, b, c, d}), p4) - std::log(prob)));
          ++tables;
        }
  return {worst < 1e-10, std::to_string(tables) + " tables, max |difference| " + num(worst)};
}

Result determinism() {
  const fs::path root = fs::temp_directory_path() / ("liqt_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::ostringstream sink;
  const std::vector<std::vector<std::string>> runs{
      {"sg", "run", "--theta-grid", "8", "--n", "20000", "--seed", "1"},
      {"eprb", "run", "--theta-grid", "6", "--n", "20000", "--seed", "2"},
      {"evolve", "--nx", "256", "--steps", "200", "--stride", "50", "--detectors", "4", "--clicks", "1000", "--seed",
       "3"},
      {"separate", "sg", "--synthetic", "robust"},
      {"check", "fq", "--trials", "3"}};
  std::size_t compared = 0;
  bool ok = true;
  for (std::size_t i = 0; i < runs.size() && ok; ++i) {
    const fs::path first = root / ("run" + std::to_string(i)), second = root / ("replay" + std::to_string(i));
    auto args = runs[i];
    args.insert(args.end(), {"--out", first.string()});
    ok = cli::run_command(args, sink, sink) == cli::kExitOk;
    if (!ok) break;
    // Replay from the configuration recorded in the manifest.
    const auto manifest = io::RunManifest::from_json(io::read_json(first / io::kManifestName));
    io::write_file(root / "replay.toml", manifest.config.at("resolved").get<std::string>());
    std::vector<std::string> replay{"--config", (root / "replay.toml").string()};
    std::istringstream words(manifest.config.at("command").get<std::string>());
    for (std::string w; words >> w;) replay.push_back(w);
    replay.insert(replay.end(), {"--out", second.string()});
    ok = cli::run_command(replay, sink, sink) == cli::kExitOk;
    for (const auto& entry : fs::recursive_directory_iterator(first)) {
      if (!ok || entry.path().extension() != ".csv") continue;
      const auto other = second / fs::relative(entry.path(), first);
      ok = fs::exists(other) && io::read_file(entry.path()) == io::read_file(other);
      ++compared;
    }
  }
  fs::remove_all(root);
  return {ok && compared > 0, std::to_string(compared) + " CSV files compared after manifest replay"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Result()> run;
  };
  const std::vector<Criterion> criteria{
      {"SG closed form and fit", 10, sg_closed_form},
      {"Fisher information constancy", 1, fisher_constancy},
      {"Evidence expansion order", 1, evidence_order},
      {"EPRB singlet statistics", 60, eprb_singlet},
      {"Separation of exact data", 1, separation},
      {"Non-separability counterexample", 1, non_separability},
      {"F equals Q", 5, f_equals_q},
      {"Linear route", 120, linear_route},
      {"Multinomial enumeration oracle", 5, multinomial_oracle},
      {"CLI determinism", 60, determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = r.pass && secs < c.budget_s;
    failures += !pass;
    std::printf("%s %2zu %s: %s (%.2f s, budget %.0f s)\n", pass ? "PASS" : "FAIL", i + 1, c.name, r.detail.c_str(),
                secs, c.budget_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

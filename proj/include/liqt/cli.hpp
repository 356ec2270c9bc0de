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

// The li-qt command line. run_command() is the whole program minus main(),
// so tests can drive it in-process.
//
// Exit codes: 0 success, 2 usage or validation failure, 3 scientific-contract
// failure (no signal, non-separable data, failed compliance test, unstable
// evolution, ...).

#include <algorithm>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "liqt/io.hpp"

namespace liqt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitContract = 3;

namespace detail {

namespace fs = std::filesystem;
using io::json;

struct Options {
  std::string out = "li-qt-out";
  std::uint64_t seed = 1;

  // sg / eprb
  std::optional<double> theta;
  std::size_t theta_grid = 0;
  std::size_t n = 1000;
  std::string sign = "+";
  std::string correlation_sign = "-";
  std::string log_path;
  int k_max = kDefaultKMax;
  std::vector<double> a1, a2;
  std::optional<double> expected_xy;

  // separate
  std::string input;
  std::string synthetic;
  bool assert_separable = false;
  double noise_floor = 0.0;

  // evolve
  std::string potential = "harmonic";
  double lambda = 4.0;
  double mass = 1.0;
  double omega = 1.0;
  double half_extent = 10.0;
  std::size_t nx = 512;
  double dt = 1e-3;
  std::size_t steps = 1000;
  std::size_t stride = 100;
  double x0 = 0.0;
  double p0 = 0.0;
  std::optional<double> sigma;
  int detectors = -1;
  std::uint64_t clicks = 1000;

  // check
  std::size_t trials = 50;
  std::size_t check_nx = 256;
  std::size_t check_nt = 8;
};

/// Files written by a command plus the seeds it used.
struct Outputs {
  std::vector<fs::path> files;  // relative to the output directory
  std::vector<std::uint64_t> seeds;
};

inline std::string fmt(double v) { return io::format_double(v); }

inline UnitVector3 vector_option(const std::vector<double>& v, const char* name) {
  require(v.size() == 3, ErrorCode::InvalidArgument, std::string(name) + " needs three components");
  return UnitVector3(Vec3{v[0], v[1], v[2]});
}

inline std::vector<double> theta_values(const Options& o, std::size_t default_points) {
  if (o.theta) {
    require(*o.theta >= 0.0 && *o.theta <= std::numbers::pi, ErrorCode::InvalidArgument, "theta must lie in [0, pi]");
    return {*o.theta};
  }
  return uniform_theta_grid(o.theta_grid ? o.theta_grid : default_points);
}

inline std::string slot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "theta_%02zu", i);
  return buf;
}

/// Directories below `root` (or root itself) holding a sidecar with this stem, sorted.
inline std::vector<fs::path> find_logs(const fs::path& root, const std::string& stem) {
  std::vector<fs::path> dirs;
  if (fs::is_regular_file(root)) return {root};
  if (!fs::is_directory(root)) fail(ErrorCode::Io, "no such directory: " + root.string());
  if (fs::exists(root / (stem + ".json"))) dirs.push_back(root);
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == stem + ".json" && e.path().parent_path() != root)
      dirs.push_back(e.path().parent_path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) fail(ErrorCode::InvalidArgument, "no " + stem + " logs under " + root.string());
  return dirs;
}

inline fs::path relative_to(const fs::path& p, const fs::path& dir) { return fs::relative(p, dir); }

// ---------------------------------------------------------------------------

inline Outputs sg_run_cmd(const Options& o, const fs::path& dir, std::ostream& out) {
  require(o.n >= 2, ErrorCode::InvalidArgument, "--n must be at least 2");
  const auto sign = o.sign == "+" ? SignConvention::plus : SignConvention::minus;
  const auto thetas = theta_values(o, kDefaultThetaPoints);
  Outputs res{{}, {o.seed}};
  if (o.theta) {
    const auto [a, m] = sg_arrangement(thetas[0]);
    const auto log = sample_sg(a, m, o.n, o.seed, sign, ExperimentConditions("sg", {{"sign", o.sign}}));
    for (const auto& f : io::save_event_log(log, dir)) res.files.push_back(relative_to(f, dir));
    const auto est = estimate_expectation(log);
    out << "theta=" << fmt(thetas[0]) << " n=" << o.n << " e_hat=" << fmt(est.e_hat)
        << " std_error=" << fmt(est.std_error) << "\n";
    return res;
  }
  const auto logs = sample_sg_grid(thetas, o.n, o.seed, sign);
  std::string summary = "theta,n,e_hat,std_error,expected\n";
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (const auto& f : io::save_event_log(logs[i], dir / slot_name(i))) res.files.push_back(relative_to(f, dir));
    const auto est = estimate_expectation(logs[i]);
    summary += fmt(thetas[i]) + "," + std::to_string(o.n) + "," + fmt(est.e_hat) + "," + fmt(est.std_error) + "," +
               fmt(sign_value(sign) * std::cos(thetas[i])) + "\n";
  }
  io::write_file(dir / "summary.csv", summary);
  res.files.emplace_back("summary.csv");
  out << "wrote " << logs.size() << " event logs to " << dir.string() << "\n";
  return res;
}

inline Outputs sg_fit_cmd(const Options& o, const fs::path& dir, std::ostream& out) {
  std::vector<double> thetas, e_hats, errs;
  json points = json::array();
  for (const auto& p : find_logs(o.log_path, "events")) {
    const auto log = io::load_event_log(p);
    const auto est = estimate_expectation(log);
    thetas.push_back(log.theta);
    e_hats.push_back(est.e_hat);
    errs.push_back(est.std_error);
    points.push_back({{"theta", log.theta}, {"e_hat", est.e_hat}, {"std_error", est.std_error}, {"n", log.size()}});
  }
  const auto fit = fit_robust_solution(thetas, e_hats, o.k_max, errs);
  const json report = {{"K", fit.k}, {"phi", fit.phi}, {"residual", fit.residual}, {"fisher", fit.fisher},
                       {"points", points}};
  io::write_file(dir / "fit.json", report.dump(2) + "\n");
  out << "K=" << fit.k << " phi=" << fmt(fit.phi) << " residual=" << fmt(fit.residual) << "\n";
  return {{"fit.json"}, {}};
}

inline CorrelationSign correlation_sign(const std::string& s) {
  return s == "+" || s == "plus" ? CorrelationSign::plus : CorrelationSign::singlet;
}

inline Outputs eprb_run_cmd(const Options& o, const fs::path& dir, std::ostream& out) {
  require(o.n >= 2, ErrorCode::InvalidArgument, "--n must be at least 2");
  const auto sign = correlation_sign(o.correlation_sign);
  const std::string sign_label = sign == CorrelationSign::plus ? "+" : "-";
  const auto thetas = theta_values(o, 12);
  Outputs res{{}, {o.seed}};
  const auto logs = run_repeats<PairEventLog>(thetas.size(), o.seed, [&](std::size_t i, std::uint64_t s) {
    const auto [a1, a2] = eprb_arrangement(thetas[i]);
    return sample_eprb(a1, a2, o.n, o.theta ? o.seed : s, sign,
                       ExperimentConditions("eprb", {{"correlation_sign", sign_label}}));
  });
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const fs::path sub = o.theta ? dir : dir / slot_name(i);
    for (const auto& f : io::save_pair_log(logs[i], sub)) res.files.push_back(relative_to(f, dir));
    const auto r = correlation_report(logs[i]);
    out << "theta=" << fmt(thetas[i]) << " <xy>=" << fmt(r.xy_mean) << " <x>=" << fmt(r.x_mean)
        << " <y>=" << fmt(r.y_mean) << "\n";
  }
  return res;
}

inline double expected_correlation(const PairEventLog& log) {
  const auto& p = log.conditions.parameters();
  const auto it = p.find("correlation_sign");
  const auto sign = it != p.end() && it->second == "+" ? CorrelationSign::plus : CorrelationSign::singlet;
  return correlation_for(log.a1, log.a2, sign);
}

inline Outputs eprb_report_cmd(const Options& o, const fs::path& dir, std::ostream& out) {
  std::string csv = "theta,n,mean_xy,stderr_xy,expected_xy,sigma_xy,mean_x,mean_y,sigma_x,sigma_y\n";
  std::size_t rows = 0;
  for (const auto& p : find_logs(o.log_path, "pairs")) {
    const auto log = io::load_pair_log(p);
    const auto r = correlation_report(log);
    const double expected = expected_correlation(log);
    const auto c = compliance_test(log.counts(), expected);
    const double root_n = std::sqrt(static_cast<double>(r.n));
    csv += fmt(log.theta) + "," + std::to_string(r.n) + "," + fmt(r.xy_mean) + "," + fmt(r.stderr_xy) + "," +
           fmt(expected) + "," + fmt(c.sigma) + "," + fmt(r.x_mean) + "," + fmt(r.y_mean) + "," +
           fmt(std::abs(r.x_mean) * root_n) + "," + fmt(std::abs(r.y_mean) * root_n) + "\n";
    ++rows;
  }
  io::write_file(dir / "report.csv", csv);
  out << "wrote correlation report for " << rows << " logs\n";
  return {{"report.csv"}, {}};
}

/// Returns the compliance result; the caller turns a failure into exit 3.
inline Outputs eprb_test_cmd(const Options& o, const fs::path& dir, std::ostream& out, bool& passed) {
  PairEventLog log;
  if (!o.a1.empty() || !o.a2.empty())
    log = io::load_external_pairs(o.log_path, vector_option(o.a1, "--a1"), vector_option(o.a2, "--a2"));
  else
    log = io::load_pair_log(o.log_path);
  const double expected = o.expected_xy ? *o.expected_xy : expected_correlation(log);
  const auto c = compliance_test(log.counts(), expected);
  const auto m = marginal_uniformity_test(log);
  const auto r = correlation_report(log);
  const json report = {{"n", r.n},           {"mean_xy", r.xy_mean},  {"expected_xy", expected},
                       {"sigma", c.sigma},   {"pass", c.pass_5sigma}, {"marginal_sigma_x", m.sigma_x},
                       {"marginal_sigma_y", m.sigma_y}};
  io::write_file(dir / "compliance.json", report.dump(2) + "\n");
  out << (c.pass_5sigma ? "PASS" : "FAIL") << " <xy>=" << fmt(r.xy_mean) << " expected=" << fmt(expected)
      << " deviation=" << fmt(c.sigma) << " sigma\n";
  passed = c.pass_5sigma;
  return {{"compliance.json"}, {}};
}

inline std::string status_name(SeparationStatus s) {
  switch (s) {
    case SeparationStatus::separable: return "separable";
    case SeparationStatus::non_separable: return "non_separable";
    case SeparationStatus::trivial_signal: return "trivial_signal";
  }
  return "unknown";
}

inline Outputs separate_sg_cmd(const Options& o, const fs::path& dir, std::ostream& out, SeparationStatus& status) {
  Outputs res;
  std::vector<SgObservation> obs;
  if (!o.input.empty()) {
    obs = io::load_sg_correlations(o.input);
  } else {
    const UnitVector3 m = UnitVector3::polar(0.7, 0.4);
    FrequencyFunction f = robust_sg_frequency;
    if (o.synthetic == "squared")
      f = [](Outcome x, const UnitVector3& a, const UnitVector3& mm) {
        const double c = cos_angle(a, mm);
        return 0.5 * (1.0 + x.value() * c * c);
      };
    const auto design = sg_design(m);
    obs = tabulate(f, design);
    io::write_file(dir / "correlations.csv", io::sg_correlations_csv(obs));
    res.files.emplace_back("correlations.csv");
  }
  const auto sep = separate_sg(obs, {o.noise_floor});
  json sources = json::array();
  for (const auto& s : sep.sources) {
    json j = {{"source", io::to_json(s.source.vec())}, {"rho", io::to_json(s.rho)}, {"u0", s.u0}};
    if (s.m) {
      j["m"] = io::to_json(s.m->vec());
      j["density_matrix"] = io::operator_to_json(build_sg_operators(*s.m, *s.m).rho);
    }
    sources.push_back(j);
  }
  const json report = {{"status", status_name(sep.status)}, {"residual", sep.residual}, {"sources", sources}};
  io::write_file(dir / "separation.json", report.dump(2) + "\n");
  res.files.emplace_back("separation.json");
  out << "status=" << status_name(sep.status) << " residual=" << fmt(sep.residual) << "\n";
  status = sep.status;
  return res;
}

inline Outputs separate_eprb_cmd(const Options& o, const fs::path& dir, std::ostream& out, SeparationStatus& status) {
  Outputs res;
  std::vector<EprbObservation> obs;
  if (!o.input.empty()) {
    obs = io::load_eprb_correlations(o.input);
  } else {
    const auto design = eprb_design();
    obs = singlet_observations(design);
    io::write_file(dir / "correlations.csv", io::eprb_correlations_csv(obs));
    res.files.emplace_back("correlations.csv");
  }
  const auto sep = separate_eprb(obs, {o.noise_floor});
  json report = {{"status", status_name(sep.status)}, {"residual", sep.residual}};
  try {
    const auto rho = sep.rho();
    report["density_matrix"] = io::operator_to_json(rho);
    try {
      const auto v = rho_to_state(rho);
      json amp = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) amp.push_back({v(i).real(), v(i).imag()});
      report["state"] = amp;
    } catch (const Error&) {
      report["state"] = nullptr;
    }
  } catch (const Error&) {
    report["density_matrix"] = nullptr;
  }
  io::write_file(dir / "separation.json", report.dump(2) + "\n");
  res.files.emplace_back("separation.json");
  out << "status=" << status_name(sep.status) << " residual=" << fmt(sep.residual) << "\n";
  status = sep.status;
  return res;
}

inline PhysicalParams physical_params(const Options& o) {
  PhysicalParams p{o.mass, o.lambda};
  if (o.potential == "harmonic") {
    p = PhysicalParams::harmonic(o.omega, o.mass, o.lambda);
  } else if (o.potential == "free") {
    p = PhysicalParams::free_particle(o.mass, o.lambda);
  } else if (o.potential.rfind("file:", 0) == 0) {
    const auto table = io::detail::read_table(o.potential.substr(5));
    std::vector<std::pair<double, double>> pts;
    for (std::size_t r = 0; r < table.rows.size(); ++r) pts.emplace_back(table.get(r, "x"), table.get(r, "V"));
    std::sort(pts.begin(), pts.end());
    require(pts.size() >= 2, ErrorCode::InvalidArgument, "potential table needs at least two rows");
    p.potential = [pts](double x, double) {
      if (x <= pts.front().first) return pts.front().second;
      if (x >= pts.back().first) return pts.back().second;
      const auto hi = std::upper_bound(pts.begin(), pts.end(), std::make_pair(x, -HUGE_VAL));
      const auto lo = hi - 1;
      const double f = (x - lo->first) / (hi->first - lo->first);
      return (1.0 - f) * lo->second + f * hi->second;
    };
  } else {
    fail(ErrorCode::InvalidArgument, "unknown potential '" + o.potential + "'");
  }
  p.validate();
  return p;
}

inline Outputs evolve_cmd(const Options& o, const fs::path& dir, std::ostream& out) {
  const auto params = physical_params(o);
  const SpatialGrid grid{o.half_extent, o.nx, o.dt, o.steps};
  grid.validate();
  const double hbar = params.hbar();
  const double sigma =
      o.sigma ? *o.sigma : (o.potential == "harmonic" ? std::sqrt(hbar / (2.0 * o.mass * o.omega)) : 1.0);
  const auto psi0 = gaussian_packet(grid, o.x0, o.p0, sigma, hbar);
  const auto traj = evolve_tdse(psi0, params, grid, {.stride = o.stride});

  Outputs res{{}, {}};
  std::string obs = "t,norm,mean_x,var_x,energy\n";
  for (std::size_t k = 0; k < traj.psi.n_t(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshots/psi_%05zu.csv", k);
    const auto psi = traj.psi.slice(k);
    io::write_file(dir / name, io::snapshot_csv(psi, grid, params.lambda));
    res.files.emplace_back(name);
    obs += fmt(traj.times[k]) + "," + fmt(norm_squared(psi, grid.dx())) + "," + fmt(position_mean(psi, grid)) + "," +
           fmt(position_variance(psi, grid)) + "," + fmt(energy_expectation(psi, params, grid, traj.times[k])) + "\n";
  }
  io::write_file(dir / "observables.csv", obs);
  res.files.emplace_back("observables.csv");

  if (o.detectors >= 0) {
    RealField P(traj.psi.n_t(), grid.n_x);
    for (std::size_t k = 0; k < P.n_t(); ++k)
      for (std::size_t i = 0; i < grid.n_x; ++i) P(k, i) = std::norm(traj.psi(k, i));
    const auto data = simulate_detector_clicks(P, grid, o.detectors, o.clicks, o.seed);
    for (const auto& f : io::save_detector_data(data, dir)) res.files.push_back(relative_to(f, dir));
    res.seeds.push_back(o.seed);
  }

  const json diag = {{"norm_drift", traj.norm_drift},
                     {"max_boundary_mass", traj.max_boundary_mass},
                     {"energy_initial", energy_expectation(traj.psi.slice(0), params, grid, traj.times.front())},
                     {"energy_final", energy_expectation(traj.final_state(), params, grid, traj.times.back())},
                     {"hbar", hbar},
                     {"snapshots", traj.psi.n_t()}};
  io::write_file(dir / "diagnostics.json", diag.dump(2) + "\n");
  res.files.emplace_back("diagnostics.json");
  out << "evolved " << o.steps << " steps, norm drift " << fmt(traj.norm_drift) << ", " << traj.psi.n_t()
      << " snapshots\n";
  return res;
}

inline Outputs check_fq_cmd(const Options& o, const fs::path& dir, std::ostream& out, bool& passed) {
  require(o.trials >= 1, ErrorCode::InvalidArgument, "--trials must be positive");
  const SpatialGrid grid{12.0, o.check_nx, 0.01, o.check_nt};
  grid.validate();
  const auto opts = DiscretizationOptions::high_order(grid.n_t);
  const auto params = PhysicalParams::harmonic(1.0);
  Rng rng(o.seed);
  double worst = 0.0, worst_imag = 0.0;
  for (std::size_t t = 0; t < o.trials; ++t) {
    const auto fields = random_smooth_fields(grid, rng);
    const double F = functional_F(fields, params, grid, opts);
    const auto Q = functional_Q_complex(polar_to_wave(fields, params.lambda), params, grid, opts);
    worst = std::max(worst, std::abs(F - Q.real()) / (std::abs(F) + std::abs(Q.real())));
    worst_imag = std::max(worst_imag, std::abs(Q.imag()));
  }
  passed = worst < 1e-8;
  const json report = {{"trials", o.trials}, {"max_relative_difference", worst}, {"max_imaginary_part", worst_imag},
                       {"pass", passed}};
  io::write_file(dir / "check_fq.json", report.dump(2) + "\n");
  out << (passed ? "PASS" : "FAIL") << " max |F-Q|/(|F|+|Q|) = " << fmt(worst) << " over " << o.trials
      << " trials\n";
  return {{"check_fq.json"}, {o.seed}};
}

inline Outputs check_fisher_cmd(const Options&, const fs::path& dir, std::ostream& out, bool& passed) {
  double worst_k = 0.0;
  for (int k = 1; k <= 3; ++k) {
    const auto model = DichotomicModel::robust(k, 0.0);
    for (int i = 0; i < 1000; ++i) {
      const double theta = 0.001 + (std::numbers::pi - 0.002) * i / 999.0;
      if (std::abs(model.expectation(theta)) > 1.0 - 1e-9) continue;
      worst_k = std::max(worst_k, std::abs(fisher_dichotomic(model, theta) - k * k));
    }
  }
  const SpatialGrid grid{10.0, 512, 1.0, 1};
  const double sigma = 1.0;
  RealField P(1, grid.n_x);
  for (std::size_t i = 0; i < grid.n_x; ++i)
    P(0, i) = std::exp(-0.5 * grid.x(i) * grid.x(i)) / std::sqrt(2.0 * std::numbers::pi);
  const double gaussian = fisher_continuum(P, grid);
  const double gaussian_error = std::abs(gaussian * sigma * sigma - 1.0);
  passed = worst_k < 1e-9 && gaussian_error < 1e-2;
  const json report = {{"max_winding_deviation", worst_k}, {"gaussian_relative_error", gaussian_error}, {"pass", passed}};
  io::write_file(dir / "check_fisher.json", report.dump(2) + "\n");
  out << (passed ? "PASS" : "FAIL") << " max |I_F - K^2| = " << fmt(worst_k)
      << ", Gaussian 1/sigma^2 relative error = " << fmt(gaussian_error) << "\n";
  return {{"check_fisher.json"}, {}};
}

inline Outputs check_madelung_cmd(const Options&, const fs::path& dir, std::ostream& out, bool& passed) {
  json levels = json::array();
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
    levels.push_back({{"n_x", grid.n_x}, {"dt", grid.dt}, {"continuity_rms", rep.continuity_rms},
                      {"hamilton_jacobi_rms", rep.hamilton_jacobi_rms}});
  }
  const double order_c = std::log2(cont[1] / cont[2]);
  const double order_h = std::log2(hj[1] / hj[2]);
  passed = order_c > 1.5 && order_h > 1.5;
  const json report = {{"levels", levels}, {"continuity_order", order_c}, {"hamilton_jacobi_order", order_h},
                       {"pass", passed}};
  io::write_file(dir / "check_madelung.json", report.dump(2) + "\n");
  out << (passed ? "PASS" : "FAIL") << " observed orders: continuity " << fmt(order_c) << ", Hamilton-Jacobi "
      << fmt(order_h) << "\n";
  return {{"check_madelung.json"}, {}};
}

inline int report_cmd(const Options& o, std::ostream& out, std::ostream& err) {
  const fs::path dir = o.log_path;
  const auto manifest = io::RunManifest::from_json(io::read_json(dir / io::kManifestName));
  const auto bad = io::verify_manifest(dir);
  out << "manifest: version " << manifest.version << ", " << manifest.digests.size() << " outputs, created "
      << manifest.timestamp << "\n";
  for (const auto& b : bad)
    err << (b.actual.empty() ? "missing: " : "digest mismatch: ") << b.path << "\n";
  if (!bad.empty()) return kExitValidation;
  out << "all digests verified\n";
  return kExitOk;
}

}  // namespace detail

/// Runs one li-qt invocation; `args` excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  using namespace detail;
  Options o;
  CLI::App app{"li-qt: logical-inference derivation of quantum theory, simulated and checked", "li-qt"};
  app.set_config("--config", "", "Read options from a TOML or INI file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kVersion));

  auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "Output directory")->capture_default_str(); };
  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Random seed")->envname("LI_QT_SEED")->capture_default_str();
  };
  auto add_thetas = [&](CLI::App* c) {
    auto* t = c->add_option("--theta", o.theta, "Single angle between the directions, radians");
    c->add_option("--theta-grid", o.theta_grid, "Number of uniformly spaced angles on [0, pi]")->excludes(t);
    c->add_option("--n", o.n, "Events per angle")->capture_default_str();
  };

  auto* sg = app.add_subcommand("sg", "Stern-Gerlach experiment");
  sg->require_subcommand(1);
  auto* sg_run = sg->add_subcommand("run", "Simulate event logs");
  add_thetas(sg_run);
  add_seed(sg_run);
  add_out(sg_run);
  sg_run->add_option("--sign", o.sign, "Detector labeling, + or -")
      ->check(CLI::IsMember({"+", "-"}))
      ->capture_default_str();
  auto* sg_fit = sg->add_subcommand("fit", "Fit cos(K theta + phi) to saved logs");
  sg_fit->add_option("logdir", o.log_path, "Directory of event logs")->required()->check(CLI::ExistingPath);
  sg_fit->add_option("--k-max", o.k_max, "Largest winding number tried")->capture_default_str();
  add_out(sg_fit);

  auto* eprb = app.add_subcommand("eprb", "Einstein-Podolsky-Rosen-Bohm experiment");
  eprb->require_subcommand(1);
  auto* eprb_run = eprb->add_subcommand("run", "Simulate pair logs");
  add_thetas(eprb_run);
  add_seed(eprb_run);
  add_out(eprb_run);
  eprb_run->add_option("--correlation-sign", o.correlation_sign, "- for <xy> = -a1.a2 (singlet), + for +a1.a2")
      ->check(CLI::IsMember({"+", "-", "singlet", "plus"}))
      ->capture_default_str();
  auto* eprb_report = eprb->add_subcommand("report", "Correlation report for saved pair logs");
  eprb_report->add_option("logdir", o.log_path, "Directory of pair logs")->required()->check(CLI::ExistingPath);
  add_out(eprb_report);
  auto* eprb_test = eprb->add_subcommand("test", "5-sigma compliance test of one pair log");
  eprb_test->add_option("log", o.log_path, "Pair log directory or CSV file")->required()->check(CLI::ExistingPath);
  eprb_test->add_option("--a1", o.a1, "First magnet direction x,y,z (external CSV)")->expected(3)->delimiter(',');
  eprb_test->add_option("--a2", o.a2, "Second magnet direction x,y,z (external CSV)")->expected(3)->delimiter(',');
  eprb_test->add_option("--expected-xy", o.expected_xy, "Predicted <xy>; defaults to the log's sign convention");
  add_out(eprb_test);

  auto* sep = app.add_subcommand("separate", "Separate frequencies into source and instrument operators");
  sep->require_subcommand(1);
  std::vector<CLI::App*> sep_cmds;
  for (const char* kind : {"sg", "eprb"}) {
    auto* c = sep->add_subcommand(kind, std::string("Separation for ") + kind + " correlations");
    auto* in = c->add_option("--input", o.input, "Correlation CSV")->check(CLI::ExistingFile);
    c->add_option("--synthetic", o.synthetic, "Exact synthetic data instead of --input")
        ->check(std::string(kind) == "sg" ? CLI::IsMember({"robust", "squared"}) : CLI::IsMember({"singlet"}))
        ->excludes(in);
    c->add_flag("--assert-separable", o.assert_separable, "Exit 3 unless the data separate");
    c->add_option("--noise-floor", o.noise_floor, "Statistical noise floor of the averages (0: from std_error)")
        ->check(CLI::NonNegativeNumber);
    add_out(c);
    sep_cmds.push_back(c);
  }

  auto* evolve = app.add_subcommand("evolve", "Crank-Nicolson evolution of a Gaussian packet");
  evolve->add_option("--potential", o.potential, "harmonic, free or file:<csv with x,V>")->capture_default_str();
  evolve->add_option("--lambda", o.lambda, "lambda = 4/hbar^2")->check(CLI::PositiveNumber)->capture_default_str();
  evolve->add_option("--mass", o.mass, "Particle mass")->check(CLI::PositiveNumber)->capture_default_str();
  evolve->add_option("--omega", o.omega, "Oscillator frequency")->check(CLI::PositiveNumber)->capture_default_str();
  evolve->add_option("--half-extent", o.half_extent, "Grid covers [-L, L]")->check(CLI::PositiveNumber)->capture_default_str();
  evolve->add_option("--nx", o.nx, "Grid points")->capture_default_str();
  evolve->add_option("--dt", o.dt, "Time step")->check(CLI::PositiveNumber)->capture_default_str();
  evolve->add_option("--steps", o.steps, "Number of steps")->capture_default_str();
  evolve->add_option("--stride", o.stride, "Steps between snapshots")->check(CLI::PositiveNumber)->capture_default_str();
  evolve->add_option("--x0", o.x0, "Initial packet centre")->capture_default_str();
  evolve->add_option("--p0", o.p0, "Initial momentum")->capture_default_str();
  evolve->add_option("--sigma", o.sigma, "Initial width (default: oscillator ground state, or 1)");
  evolve->add_option("--detectors", o.detectors, "Detector half-count K; -1 disables click simulation")
      ->capture_default_str();
  evolve->add_option("--clicks", o.clicks, "Clicks per snapshot")->capture_default_str();
  add_seed(evolve);
  add_out(evolve);

  auto* check = app.add_subcommand("check", "Numerical property checks");
  check->require_subcommand(1);
  auto* check_fq = check->add_subcommand("fq", "F(P, S) against Q(psi) on random smooth fields");
  check_fq->add_option("--trials", o.trials, "Random field pairs")->capture_default_str();
  check_fq->add_option("--nx", o.check_nx, "Grid points")->capture_default_str();
  check_fq->add_option("--nt", o.check_nt, "Time slices")->capture_default_str();
  add_seed(check_fq);
  auto* check_fisher = check->add_subcommand("fisher", "Fisher information identities");
  auto* check_madelung = check->add_subcommand("madelung", "Convergence of the Madelung residuals");
  for (auto* c : {check_fq, check_fisher, check_madelung}) add_out(c);

  auto* report = app.add_subcommand("report", "Verify the digests of a run manifest");
  report->add_option("rundir", o.log_path, "Run directory")->required()->check(CLI::ExistingDirectory);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (report->parsed()) return report_cmd(o, out, err);

    const fs::path dir = o.out;
    bool passed = true;
    auto separation_ok = [&](SeparationStatus st) {
      return !o.assert_separable || st == SeparationStatus::separable;
    };
    Outputs res;
    std::string command;
    if (sg_run->parsed()) {
      command = "sg run";
      res = sg_run_cmd(o, dir, out);
    } else if (sg_fit->parsed()) {
      command = "sg fit";
      res = sg_fit_cmd(o, dir, out);
    } else if (eprb_run->parsed()) {
      command = "eprb run";
      res = eprb_run_cmd(o, dir, out);
    } else if (eprb_report->parsed()) {
      command = "eprb report";
      res = eprb_report_cmd(o, dir, out);
    } else if (eprb_test->parsed()) {
      command = "eprb test";
      res = eprb_test_cmd(o, dir, out, passed);
    } else if (sep_cmds[0]->parsed() || sep_cmds[1]->parsed()) {
      const bool is_sg = sep_cmds[0]->parsed();
      require(!o.input.empty() || !o.synthetic.empty(), ErrorCode::InvalidArgument,
              "give --input or --synthetic");
      command = is_sg ? "separate sg" : "separate eprb";
      SeparationStatus st{};
      res = is_sg ? separate_sg_cmd(o, dir, out, st) : separate_eprb_cmd(o, dir, out, st);
      passed = separation_ok(st);
      if (!passed) err << "li-qt: NonSeparable: data do not separate into source and instrument operators\n";
    } else if (evolve->parsed()) {
      command = "evolve";
      res = evolve_cmd(o, dir, out);
    } else if (check_fq->parsed()) {
      command = "check fq";
      res = check_fq_cmd(o, dir, out, passed);
    } else if (check_fisher->parsed()) {
      command = "check fisher";
      res = check_fisher_cmd(o, dir, out, passed);
    } else {
      command = "check madelung";
      res = check_madelung_cmd(o, dir, out, passed);
    }

    // The resolved options of the command that ran, replayable with
    // `li-qt --config config.toml <command>`.
    const CLI::App* leaf = &app;
    std::string section;
    while (!leaf->get_subcommands().empty()) {
      leaf = leaf->get_subcommands().front();
      section += (section.empty() ? "" : ".") + leaf->get_name();
    }
    std::string config = "[" + section + "]\n";
    std::istringstream resolved(leaf->config_to_str(true, false));
    for (std::string line; std::getline(resolved, line);)
      if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) config += line + "\n";
    io::write_file(dir / "config.toml", config);
    io::json cfg = {{"command", command}, {"arguments", args}, {"resolved", config}};
    res.files.emplace_back("config.toml");
    io::write_manifest(dir, std::move(cfg), res.seeds, res.files);
    return passed ? kExitOk : kExitContract;
  } catch (const Error& e) {
    err << "li-qt: " << e.what() << "\n";
    return is_contract_failure(e.code()) ? kExitContract : kExitValidation;
  } catch (const std::exception& e) {
    err << "li-qt: " << e.what() << "\n";
    return kExitValidation;
  }
}

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  return run_command(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace liqt::cli

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

// Separation of frequency data into a source part (density matrix rho) and an
// instrument part (X, Y) in the Pauli basis.
//
// Two-spin operators use the row index [x, y] = (1 - x)/2 + (1 - y): the
// first spin (outcome x) is the low bit. With the Kronecker product A (x) B
// indexing rows as 2 * row(A) + row(B), the first-spin operators are
// 1 (x) sigma_k and the second-spin operators are sigma_k (x) 1.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "liqt/eprb.hpp"
#include "liqt/error.hpp"
#include "liqt/inference.hpp"
#include "liqt/vec3.hpp"

namespace liqt {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kPurityTolerance = 1e-10;

class HermitianOperator {
 public:
  HermitianOperator() : m_(ComplexMatrix::Zero(2, 2)) {}

  explicit HermitianOperator(ComplexMatrix m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols() && (m_.rows() == 2 || m_.rows() == 4), ErrorCode::MismatchedDimensions,
            "operator must be 2x2 or 4x4");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance * scale)
      fail(ErrorCode::NotHermitian, "matrix differs from its conjugate transpose");
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }
  double trace() const { return m_.trace().real(); }

  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
  }

  /// max |rho^2 - rho|.
  double projector_defect() const { return (m_ * m_ - m_).cwiseAbs().maxCoeff(); }

 private:
  ComplexMatrix m_;
};

/// Real part of Tr(A B ...); the imaginary part vanishes for the products used here.
inline double trace_product(const ComplexMatrix& a, const ComplexMatrix& b) { return (a * b).trace().real(); }
inline double trace_product(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& c) {
  return (a * b * c).trace().real();
}

namespace pauli {

/// k = 0 is the identity, k = 1, 2, 3 are sigma^x, sigma^y, sigma^z.
inline ComplexMatrix sigma(int k) {
  ComplexMatrix s(2, 2);
  const Complex i(0.0, 1.0);
  switch (k) {
    case 0: s << 1, 0, 0, 1; break;
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -i, i, 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: fail(ErrorCode::InvalidArgument, "Pauli index must be 0..3");
  }
  return s;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// v . sigma.
inline ComplexMatrix dot_sigma(Vec3 v) { return v.x * sigma(1) + v.y * sigma(2) + v.z * sigma(3); }

/// sigma_k acting on the first spin (outcome x) of a pair.
inline ComplexMatrix first(int k) { return kron(sigma(0), sigma(k)); }
/// sigma_k acting on the second spin (outcome y) of a pair.
inline ComplexMatrix second(int k) { return kron(sigma(k), sigma(0)); }

inline ComplexMatrix first(Vec3 v) { return kron(sigma(0), dot_sigma(v)); }
inline ComplexMatrix second(Vec3 v) { return kron(dot_sigma(v), sigma(0)); }

}  // namespace pauli

struct PauliCoefficients2 {
  double c0 = 0.0;
  Vec3 c;

  HermitianOperator reconstruct() const { return HermitianOperator(c0 * pauli::sigma(0) + pauli::dot_sigma(c)); }
};

/// rho = rho0 1 + rho1.sigma_1 + rho2.sigma_2 + sum_kl rho12[k][l] sigma_1^k sigma_2^l.
struct PauliCoefficients4 {
  double rho0 = 0.0;
  Vec3 rho1;
  Vec3 rho2;
  std::array<std::array<double, 3>, 3> rho12{};

  HermitianOperator reconstruct() const {
    ComplexMatrix m = rho0 * ComplexMatrix::Identity(4, 4) + pauli::first(rho1) + pauli::second(rho2);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) m += rho12[k][l] * pauli::first(k + 1) * pauli::second(l + 1);
    return HermitianOperator(m);
  }
};

/// c0 = Tr(op)/2, c_k = Tr(sigma_k op)/2.
inline PauliCoefficients2 pauli_decompose(const HermitianOperator& op) {
  require(op.dim() == 2, ErrorCode::MismatchedDimensions, "2x2 operator expected");
  const auto& m = op.matrix();
  return {0.5 * m.trace().real(),
          {0.5 * trace_product(pauli::sigma(1), m), 0.5 * trace_product(pauli::sigma(2), m),
           0.5 * trace_product(pauli::sigma(3), m)}};
}

inline PauliCoefficients4 pauli_decompose4(const HermitianOperator& op) {
  require(op.dim() == 4, ErrorCode::MismatchedDimensions, "4x4 operator expected");
  const auto& m = op.matrix();
  PauliCoefficients4 c;
  c.rho0 = 0.25 * m.trace().real();
  c.rho1 = {0.25 * trace_product(pauli::first(1), m), 0.25 * trace_product(pauli::first(2), m),
            0.25 * trace_product(pauli::first(3), m)};
  c.rho2 = {0.25 * trace_product(pauli::second(1), m), 0.25 * trace_product(pauli::second(2), m),
            0.25 * trace_product(pauli::second(3), m)};
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) c.rho12[k][l] = 0.25 * trace_product(pauli::first(k + 1) * pauli::second(l + 1), m);
  return c;
}

// Data rearranged as diagonal matrices: Tr(F X) = <x>.

struct SgDataOperators {
  HermitianOperator f;
  HermitianOperator x;
};

/// F = diag(f(+1), f(-1)), X = diag(+1, -1).
inline SgDataOperators sg_data_operators(double f_plus, double f_minus) {
  ComplexMatrix f = ComplexMatrix::Zero(2, 2), x = ComplexMatrix::Zero(2, 2);
  f(0, 0) = f_plus;
  f(1, 1) = f_minus;
  x(0, 0) = 1.0;
  x(1, 1) = -1.0;
  return {HermitianOperator(f), HermitianOperator(x)};
}

struct EprbDataOperators {
  HermitianOperator f;
  HermitianOperator x;
  HermitianOperator y;
};

/// Diagonal 4x4 F, X, Y over the [x, y] row index.
inline EprbDataOperators eprb_data_operators(std::span<const double, 4> frequencies) {
  ComplexMatrix f = ComplexMatrix::Zero(4, 4), x = f, y = f;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto p = pair_from_index(i);
    const auto r = static_cast<Eigen::Index>(i);
    f(r, r) = frequencies[i];
    x(r, r) = p.x.value();
    y(r, r) = p.y.value();
  }
  return {HermitianOperator(f), HermitianOperator(x), HermitianOperator(y)};
}

struct SgOperators {
  HermitianOperator rho;
  HermitianOperator xhat;
};

/// rho = (1 + M.sigma)/2, X = a.sigma.
inline SgOperators build_sg_operators(const UnitVector3& a, const UnitVector3& m) {
  return {HermitianOperator(0.5 * (pauli::sigma(0) + pauli::dot_sigma(m))), HermitianOperator(pauli::dot_sigma(a))};
}

/// Tr(rho (1 + x a.sigma)/2).
inline double born_probability(const HermitianOperator& rho, Outcome x, const UnitVector3& a) {
  require(rho.dim() == 2, ErrorCode::MismatchedDimensions, "2x2 density matrix expected");
  return trace_product(rho.matrix(), 0.5 * (pauli::sigma(0) + x.value() * pauli::dot_sigma(a)));
}

struct EprbOperators {
  HermitianOperator rho;
  HermitianOperator xhat;
  HermitianOperator yhat;
};

/// rho = (1 - sigma_1.sigma_2)/4, X = a1.sigma_1, Y = a2.sigma_2.
inline EprbOperators build_eprb_operators(const UnitVector3& a1, const UnitVector3& a2) {
  ComplexMatrix rho = 0.25 * ComplexMatrix::Identity(4, 4);
  for (int k = 1; k <= 3; ++k) rho -= 0.25 * pauli::first(k) * pauli::second(k);
  return {HermitianOperator(rho), HermitianOperator(pauli::first(a1.vec())), HermitianOperator(pauli::second(a2.vec()))};
}

/// Unit eigenvector of a rank-one projector, phase fixed so that the first
/// nonzero amplitude is real and positive. Throws NotPure otherwise.
inline Eigen::VectorXcd rho_to_state(const HermitianOperator& rho) {
  if (rho.projector_defect() > kPurityTolerance || std::abs(rho.trace() - 1.0) > kPurityTolerance)
    fail(ErrorCode::NotPure, "density matrix is not a rank-one projector");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho.matrix());
  Eigen::VectorXcd v = solver.eigenvectors().col(rho.dim() - 1);
  v.normalize();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      break;
    }
  }
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) <= 1e-15) v(i) = 0.0;
  return v;
}

// ---------------------------------------------------------------------------
// Separation from data.

enum class SeparationStatus { separable, non_separable, trivial_signal };

struct SeparationOptions {
  /// Statistical noise floor of the input averages; 0 for exact input.
  double noise_floor = 0.0;

  /// Residual above which the data is declared non-separable.
  double threshold() const { return noise_floor > 0.0 ? 10.0 * noise_floor : 1e-8; }
};

/// f(x | a, M): frequency of outcome x for magnet a and source M.
using FrequencyFunction = std::function<double(Outcome, const UnitVector3&, const UnitVector3&)>;

struct SgConfiguration {
  UnitVector3 a;
  UnitVector3 m;
};

/// Average <x> measured in one configuration.
struct SgObservation {
  UnitVector3 a;
  UnitVector3 m;
  double mean_x = 0.0;
  double std_error = 0.0;
};

struct SourceEstimate {
  UnitVector3 source;            ///< design label of the source
  Vec3 rho;                      ///< fitted Bloch vector
  double u0 = 0.0;               ///< fitted identity part of the instrument operator
  std::optional<UnitVector3> m;  ///< rho / |rho| when rho is not negligible
};

struct SgSeparation {
  SeparationStatus status = SeparationStatus::separable;
  std::vector<SourceEstimate> sources;
  double residual = 0.0;  ///< RMS of fitted minus observed <x>

  /// Estimate for the first (usually only) source.
  const SourceEstimate& primary() const { return sources.at(0); }
};

inline std::vector<SgObservation> tabulate(const FrequencyFunction& f, std::span<const SgConfiguration> design) {
  std::vector<SgObservation> out;
  out.reserve(design.size());
  for (const auto& c : design) {
    const double fp = f(Outcome::plus(), c.a, c.m);
    const double fm = f(Outcome::minus(), c.a, c.m);
    require(std::abs(fp + fm - 1.0) <= 1e-12, ErrorCode::InvalidArgument, "frequencies must sum to 1");
    out.push_back({c.a, c.m, fp - fm, 0.0});
  }
  return out;
}

/// One source probed by n magnet directions spread over the sphere.
inline std::vector<SgConfiguration> sg_design(const UnitVector3& m, std::size_t n = 20) {
  std::vector<SgConfiguration> design;
  for (const auto& a : fibonacci_directions(n)) design.push_back({a, m});
  return design;
}

/// Frequencies of the robust solution, f(x | a, M) = (1 + x a.M)/2.
inline double robust_sg_frequency(Outcome x, const UnitVector3& a, const UnitVector3& m) {
  return 0.5 * (1.0 + x.value() * cos_angle(a, m));
}

namespace detail {

inline double rank_tolerance() { return 1e-9; }

inline Eigen::Index matrix_rank(const Eigen::MatrixXd& a) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(rank_tolerance());
  return qr.rank();
}

}  // namespace detail

/// Fits <x> = u0 + rho(M).a for every source M in the observations, with the
/// instrument operator X = u0 + a.sigma fixed by the magnet direction.
/// Throws InsufficientDesign unless every source is probed by magnet
/// directions spanning 3D with at least 6 configurations overall.
inline SgSeparation separate_sg(std::span<const SgObservation> observations, SeparationOptions options = {}) {
  if (observations.size() < 6) fail(ErrorCode::InsufficientDesign, "need at least 6 configurations");

  std::vector<UnitVector3> sources;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    std::size_t g = 0;
    while (g < sources.size() && !(sources[g] == observations[i].m)) ++g;
    if (g == sources.size()) {
      sources.push_back(observations[i].m);
      groups.emplace_back();
    }
    groups[g].push_back(i);
  }

  if (options.noise_floor == 0.0) {
    double ss = 0.0;
    for (const auto& o : observations) ss += o.std_error * o.std_error;
    options.noise_floor = std::sqrt(ss / static_cast<double>(observations.size()));
  }

  SgSeparation result;
  double ss = 0.0;
  for (std::size_t g = 0; g < sources.size(); ++g) {
    const auto& idx = groups[g];
    Eigen::MatrixXd design(idx.size(), 4);
    Eigen::VectorXd rhs(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto& o = observations[idx[r]];
      design.row(static_cast<Eigen::Index>(r)) << 1.0, o.a.x(), o.a.y(), o.a.z();
      rhs(static_cast<Eigen::Index>(r)) = o.mean_x;
    }
    if (idx.size() < 4 || detail::matrix_rank(design) < 4)
      fail(ErrorCode::InsufficientDesign, "magnet directions for a source do not span three dimensions");
    const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
    ss += (design * sol - rhs).squaredNorm();
    SourceEstimate est;
    est.source = sources[g];
    est.u0 = sol(0);
    est.rho = {sol(1), sol(2), sol(3)};
    if (norm(est.rho) > options.threshold()) est.m = UnitVector3(est.rho);
    result.sources.push_back(est);
  }
  result.residual = std::sqrt(ss / static_cast<double>(observations.size()));

  if (result.residual > options.threshold()) {
    result.status = SeparationStatus::non_separable;
  } else {
    bool trivial = true;
    for (const auto& s : result.sources) trivial = trivial && !s.m.has_value();
    result.status = trivial ? SeparationStatus::trivial_signal : SeparationStatus::separable;
  }
  return result;
}

inline SgSeparation separate_sg(const FrequencyFunction& f, std::span<const SgConfiguration> design,
                                SeparationOptions options = {}) {
  const auto obs = tabulate(f, design);
  return separate_sg(std::span<const SgObservation>(obs), options);
}

/// All ordered pairs from n spread directions for each station (n >= 3
/// spans the nine a1 (x) a2 products).
inline std::vector<std::pair<UnitVector3, UnitVector3>> eprb_design(std::size_t n = 4) {
  const auto dirs = fibonacci_directions(n);
  std::vector<std::pair<UnitVector3, UnitVector3>> design;
  for (const auto& a1 : dirs)
    for (const auto& a2 : dirs) design.emplace_back(a1, a2);
  return design;
}

/// Averages measured for one pair of magnet directions.
struct EprbObservation {
  UnitVector3 a1;
  UnitVector3 a2;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double mean_xy = 0.0;
  double std_error = 0.0;
};

struct EprbSeparation {
  SeparationStatus status = SeparationStatus::separable;
  PauliCoefficients4 coefficients;
  double residual = 0.0;  ///< RMS over the <x>, <y>, <xy> equations

  HermitianOperator rho() const { return coefficients.reconstruct(); }
};

/// Exact singlet averages <x> = <y> = 0, <xy> = -a1.a2 over a design.
inline std::vector<EprbObservation> singlet_observations(
    std::span<const std::pair<UnitVector3, UnitVector3>> design) {
  std::vector<EprbObservation> out;
  for (const auto& [a1, a2] : design) out.push_back({a1, a2, 0.0, 0.0, -cos_angle(a1, a2), 0.0});
  return out;
}

/// Solves Tr rho = 1, Tr rho X = <x>, Tr rho Y = <y>, Tr rho X Y = <xy> in the
/// least-squares sense for the Pauli coefficients of rho, with X = a1.sigma_1
/// and Y = a2.sigma_2:
///   rho0 = 1/4,  <x> = 4 rho1.a1,  <y> = 4 rho2.a2,  <xy> = 4 a1^T rho12 a2.
inline EprbSeparation separate_eprb(std::span<const EprbObservation> observations, SeparationOptions options = {}) {
  const auto n = static_cast<Eigen::Index>(observations.size());
  if (n < 9) fail(ErrorCode::InsufficientDesign, "need at least 9 orientation pairs");

  Eigen::MatrixXd d1(n, 3), d2(n, 3), d12(n, 9);
  Eigen::VectorXd bx(n), by(n), bxy(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& o = observations[static_cast<std::size_t>(r)];
    const Vec3 a1 = o.a1.vec(), a2 = o.a2.vec();
    for (int k = 0; k < 3; ++k) {
      d1(r, k) = 4.0 * a1[k];
      d2(r, k) = 4.0 * a2[k];
      for (int l = 0; l < 3; ++l) d12(r, 3 * k + l) = 4.0 * a1[k] * a2[l];
    }
    bx(r) = o.mean_x;
    by(r) = o.mean_y;
    bxy(r) = o.mean_xy;
  }
  if (detail::matrix_rank(d1) < 3 || detail::matrix_rank(d2) < 3 || detail::matrix_rank(d12) < 9)
    fail(ErrorCode::InsufficientDesign, "orientation pairs do not determine all Pauli coefficients");

  const Eigen::VectorXd s1 = d1.colPivHouseholderQr().solve(bx);
  const Eigen::VectorXd s2 = d2.colPivHouseholderQr().solve(by);
  const Eigen::VectorXd s12 = d12.colPivHouseholderQr().solve(bxy);

  EprbSeparation result;
  auto& c = result.coefficients;
  c.rho0 = 0.25;
  c.rho1 = {s1(0), s1(1), s1(2)};
  c.rho2 = {s2(0), s2(1), s2(2)};
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) c.rho12[k][l] = s12(3 * k + l);

  const double ss = (d1 * s1 - bx).squaredNorm() + (d2 * s2 - by).squaredNorm() + (d12 * s12 - bxy).squaredNorm();
  result.residual = std::sqrt(ss / static_cast<double>(3 * n));

  if (options.noise_floor == 0.0) {
    double se = 0.0;
    for (const auto& o : observations) se += o.std_error * o.std_error;
    options.noise_floor = std::sqrt(se / static_cast<double>(n));
  }
  result.status =
      result.residual > options.threshold() ? SeparationStatus::non_separable : SeparationStatus::separable;
  return result;
}

}  // namespace liqt

#pragma once

// Hopping operators and Bloch Hamiltonians of the multicomponent square
// lattice,
//
//   H(k) = -2 t_x cos(k_x) T_x - 2 t_y cos(k_y) T_y + O,
//
// with T_x, T_y tridiagonal in the internal index and O a constant on-site
// matrix. Units: hbar = 1, lattice spacing a = 1.
//
// Convention: an on-site term O = h.sigma on a spin-1/2 block gives
// H(k) = -(g_k - h).sigma with g_k = (2 t_x cos k_x, 2 t_y cos k_y, 0), so the
// spectrum is +-|g_k - h| and nodes sit where 2 t cos k = h. The mass-basis
// blocks in flavour_mixing.hpp are written as +(g_k - h).sigma; the two forms
// differ by an overall sign (k -> k + (pi, pi) together with h -> -h).

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conelab/errors.hpp"
#include "conelab/linalg.hpp"

namespace conelab {

/// Off-diagonal hopping amplitudes rho_1..rho_{n-1}. Any finite real values
/// are allowed, including zero and negative entries.
class RhoVector {
 public:
  explicit RhoVector(std::vector<double> entries) : entries_(std::move(entries)) {
    if (entries_.empty())
      fail(ErrorKind::InvalidDimension, "rho vector needs at least one entry (n >= 2)");
    for (double e : entries_)
      if (!std::isfinite(e)) fail(ErrorKind::ContractViolation, "rho vector entries must be finite");
  }

  int n() const { return static_cast<int>(entries_.size()) + 1; }
  std::span<const double> entries() const { return entries_; }
  double operator[](std::size_t j) const { return entries_[j]; }

  double norm() const {
    double s = 0.0;
    for (double e : entries_) s += e * e;
    return std::sqrt(s);
  }

 private:
  std::vector<double> entries_;
};

/// rho_j = sqrt(j (n - j)): the spin-s representation with n = 2s + 1.
inline RhoVector su2_rho(int n) {
  if (n < 2) fail(ErrorKind::InvalidDimension, "su2_rho: n must be >= 2, got " + std::to_string(n));
  std::vector<double> e;
  e.reserve(static_cast<std::size_t>(n - 1));
  for (int j = 1; j < n; ++j) e.push_back(std::sqrt(static_cast<double>(j) * (n - j)));
  return RhoVector(std::move(e));
}

/// (1, 0, 1, 0, ..., 1): `layers` decoupled spin-1/2 cones stacked at the same
/// Dirac point (n = 2 * layers).
inline RhoVector layered_rho(int layers) {
  if (layers < 1) fail(ErrorKind::InvalidDimension, "layered_rho: need at least one layer");
  std::vector<double> e(static_cast<std::size_t>(2 * layers - 1), 0.0);
  for (std::size_t j = 0; j < e.size(); j += 2) e[j] = 1.0;
  return RhoVector(std::move(e));
}

/// Double-layer (n = 4) parametrization rho * (sin t sin p, sin t cos p, cos t).
/// With this ordering the eigenvalues of T_x are +-double_layer_eps(rho, t, p).
inline RhoVector double_layer_rho(double rho_norm, double theta, double phi) {
  return RhoVector({rho_norm * std::sin(theta) * std::sin(phi),
                    rho_norm * std::sin(theta) * std::cos(phi),
                    rho_norm * std::cos(theta)});
}

/// Tridiagonal, zero-diagonal, Hermitian hopping matrix.
struct HoppingOperator {
  CMatrix matrix;

  int n() const { return static_cast<int>(matrix.rows()); }
};

/// T_x = {superdiag rho, subdiag rho}, T_y = {superdiag -i rho, subdiag +i rho}.
inline std::pair<HoppingOperator, HoppingOperator> hopping_pair(const RhoVector& rho) {
  const int n = rho.n();
  CMatrix tx = CMatrix::Zero(n, n);
  CMatrix ty = CMatrix::Zero(n, n);
  for (int j = 0; j + 1 < n; ++j) {
    const double r = rho[static_cast<std::size_t>(j)];
    tx(j, j + 1) = r;
    tx(j + 1, j) = r;
    ty(j, j + 1) = -kI * r;
    ty(j + 1, j) = kI * r;
  }
  return {HoppingOperator{std::move(tx)}, HoppingOperator{std::move(ty)}};
}

class BlochModel {
 public:
  explicit BlochModel(RhoVector rho, double t_x = 1.0, double t_y = 1.0)
      : BlochModel(std::move(rho), t_x, t_y, CMatrix()) {}

  BlochModel(RhoVector rho, double t_x, double t_y, CMatrix onsite)
      : rho_(std::move(rho)), t_x_(t_x), t_y_(t_y), onsite_(std::move(onsite)) {
    const int n = rho_.n();
    if (onsite_.size() == 0) onsite_ = CMatrix::Zero(n, n);
    if (!std::isfinite(t_x_) || !std::isfinite(t_y_))
      fail(ErrorKind::ContractViolation, "hopping energies must be finite");
    if (onsite_.rows() != n || onsite_.cols() != n)
      fail(ErrorKind::InvalidDimension, "onsite matrix must be n x n with n = " + std::to_string(n));
    if (!onsite_.allFinite()) fail(ErrorKind::ContractViolation, "onsite matrix must be finite");
    if (hermiticity_defect(onsite_) > 1e-12 * std::max(1.0, onsite_.norm()))
      fail(ErrorKind::ContractViolation, "onsite matrix must be Hermitian");
    auto [tx, ty] = hopping_pair(rho_);
    tx_ = std::move(tx);
    ty_ = std::move(ty);
  }

  const RhoVector& rho() const { return rho_; }
  int n() const { return rho_.n(); }
  double t_x() const { return t_x_; }
  double t_y() const { return t_y_; }
  const CMatrix& onsite() const { return onsite_; }
  const HoppingOperator& hop_x() const { return tx_; }
  const HoppingOperator& hop_y() const { return ty_; }
  bool has_onsite() const { return onsite_.norm() != 0.0; }

  BlochModel with_onsite(CMatrix onsite) const { return BlochModel(rho_, t_x_, t_y_, std::move(onsite)); }
  BlochModel with_hopping(double t_x, double t_y) const { return BlochModel(rho_, t_x, t_y, onsite_); }

 private:
  RhoVector rho_;
  double t_x_;
  double t_y_;
  CMatrix onsite_;
  HoppingOperator tx_;
  HoppingOperator ty_;
};

/// g_k = (2 t_x cos k_x, 2 t_y cos k_y, 0).
inline Vec3 g_vector(double t_x, double t_y, const Vec2& k) {
  return {2.0 * t_x * std::cos(k.x()), 2.0 * t_y * std::cos(k.y()), 0.0};
}

inline CMatrix bloch_hamiltonian(const BlochModel& model, const Vec2& k) {
  return -2.0 * model.t_x() * std::cos(k.x()) * model.hop_x().matrix -
         2.0 * model.t_y() * std::cos(k.y()) * model.hop_y().matrix + model.onsite();
}

inline Spectrum bloch_spectrum(const BlochModel& model, const Vec2& k) {
  return eigh(bloch_hamiltonian(model, k));
}

/// Spectrum eps_i |g_k| with eps_i the eigenvalues of T_x. Only valid without
/// an on-site term, where T_x and T_y are related by a diagonal phase gauge.
inline RVector analytic_spectrum(const BlochModel& model, const Vec2& k) {
  if (model.has_onsite())
    fail(ErrorKind::Precondition, "analytic_spectrum requires a model without on-site term");
  const double g = g_vector(model.t_x(), model.t_y(), k).norm();
  RVector e = eigvalsh(model.hop_x().matrix) * g;
  std::sort(e.data(), e.data() + e.size());
  return e;
}

/// The two non-negative eigenvalues of the double-layer T_x:
/// rho sqrt(1 +- chi/2) / sqrt(2), chi = sqrt(3 + cos2p + cos4t - cos2p cos4t).
/// Returned as (larger, smaller).
inline std::pair<double, double> double_layer_eps(double rho_norm, double theta, double phi) {
  const double c2p = std::cos(2.0 * phi);
  const double c4t = std::cos(4.0 * theta);
  const double chi = std::sqrt(std::max(0.0, 3.0 + c2p + c4t - c2p * c4t));
  const double upper = rho_norm * std::sqrt(1.0 + 0.5 * chi) / std::sqrt(2.0);
  // 1 - chi/2 cancels near chi = 2; use upper * lower = rho^2 |sin p sin 2t| / 2
  const double lower = upper > 0.0
                           ? rho_norm * rho_norm * std::abs(std::sin(phi) * std::sin(2.0 * theta)) / (2.0 * upper)
                           : 0.0;
  return {upper, lower};
}

/// Block-diagonal on-site matrix with blocks h^i.sigma.
inline CMatrix block_onsite(std::span<const Vec3> h_vectors) {
  const auto blocks = static_cast<Eigen::Index>(h_vectors.size());
  CMatrix o = CMatrix::Zero(2 * blocks, 2 * blocks);
  for (Eigen::Index i = 0; i < blocks; ++i)
    o.block(2 * i, 2 * i, 2, 2) = pauli::dot(h_vectors[static_cast<std::size_t>(i)]);
  return o;
}

/// Stacked spin-1/2 cones (rho = (1,0,1,...,1)) with on-site h^i.sigma on
/// block i: H(k) = (+)_i -(g_k - h^i).sigma.
inline BlochModel layered_block_model(std::span<const Vec3> h_vectors, double t_x = 1.0, double t_y = 1.0) {
  return BlochModel(layered_rho(static_cast<int>(h_vectors.size())), t_x, t_y, block_onsite(h_vectors));
}

}  // namespace conelab

#pragma once

// Three-species mixing near the Dirac point K = (pi/2, pi/2).
//
// Basis ordering is flavour (x) spinor everywhere: component 2*a + s holds
// species a in {0,1,2} = (e, mu, tau) and spinor s in {0,1} = (up, down).
//
//   mass basis:    H_m(k) = diag_i (g_k - h^i).sigma
//   flavour basis: H_f(k) = (U^dag (x) I2) H_m(k) (U (x) I2)
//
// For h^1 = 0, h^2 = h = -h^3 this equals I3 (x) g_k.sigma + M (x) h.sigma with
// M = U^dag diag(0, -1, 1) U.

#include <array>
#include <cmath>
#include <string>

#include "conelab/errors.hpp"
#include "conelab/linalg.hpp"
#include "conelab/spectral_core.hpp"

namespace conelab {

/// Mixing angles and CP phase, radians.
struct PmnsParams {
  double theta12 = 0.0;
  double theta13 = 0.0;
  double theta23 = 0.0;
  double delta = 0.0;

  void validate() const {
    if (!std::isfinite(theta12) || !std::isfinite(theta13) || !std::isfinite(theta23) || !std::isfinite(delta))
      fail(ErrorKind::ContractViolation, "PMNS parameters must be finite");
  }
};

struct MixingSpec {
  PmnsParams pmns;
  std::array<Vec3, 3> h_vectors{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  double t_x = 1.0;
  double t_y = 1.0;

  /// h^1 = 0, h^2 = h, h^3 = -h.
  static MixingSpec symmetric(const PmnsParams& p, const Vec3& h, double t_x = 1.0, double t_y = 1.0) {
    MixingSpec s{p, {Vec3::Zero(), h, Vec3(-h)}, t_x, t_y};
    s.validate();
    return s;
  }

  bool is_symmetric_pattern() const {
    return h_vectors[0].isZero(0.0) && (h_vectors[1] + h_vectors[2]).isZero(0.0);
  }

  /// Effective speed of light of the unperturbed cones, c_l = 2 t_x.
  double light_speed() const { return 2.0 * t_x; }

  void validate() const {
    pmns.validate();
    for (const auto& h : h_vectors)
      if (!h.allFinite()) fail(ErrorKind::ContractViolation, "splitting vectors must be finite");
    if (!std::isfinite(t_x) || !std::isfinite(t_y)) fail(ErrorKind::ContractViolation, "t_x, t_y must be finite");
  }
};

/// Dirac point used as the origin of p = k - K.
inline Vec2 dirac_point_k() { return {kPi / 2.0, kPi / 2.0}; }

/// U = R23 * U13(delta) * R12 (PDG ordering); U(0,2) = sin(theta13) e^{-i delta}.
inline CMatrix pmns_matrix(const PmnsParams& p) {
  p.validate();
  const double c12 = std::cos(p.theta12), s12 = std::sin(p.theta12);
  const double c13 = std::cos(p.theta13), s13 = std::sin(p.theta13);
  const double c23 = std::cos(p.theta23), s23 = std::sin(p.theta23);
  const Complex e_minus = std::polar(1.0, -p.delta);

  CMatrix r23 = CMatrix::Identity(3, 3);
  r23(1, 1) = c23;
  r23(1, 2) = s23;
  r23(2, 1) = -s23;
  r23(2, 2) = c23;

  CMatrix u13 = CMatrix::Identity(3, 3);
  u13(0, 0) = c13;
  u13(0, 2) = s13 * e_minus;
  u13(2, 0) = -s13 * std::conj(e_minus);
  u13(2, 2) = c13;

  CMatrix r12 = CMatrix::Identity(3, 3);
  r12(0, 0) = c12;
  r12(0, 1) = s12;
  r12(1, 0) = -s12;
  r12(1, 1) = c12;

  return r23 * u13 * r12;
}

/// Flavour-by-mass amplitude matrix for the H_f convention above: flavour
/// state alpha has mass-basis amplitudes U(j, alpha), so W = U^T.
inline CMatrix flavour_mass_matrix(const CMatrix& u) { return u.transpose(); }

namespace detail {
inline void require_unitary(const CMatrix& u, const char* who) {
  if (u.rows() != 3 || u.cols() != 3) fail(ErrorKind::ContractViolation, std::string(who) + ": U must be 3x3");
  if (unitarity_defect(u) > 1e-10) fail(ErrorKind::ContractViolation, std::string(who) + ": U is not unitary");
}
}  // namespace detail

/// M = U^dag diag(0, -1, 1) U.
inline CMatrix m_matrix(const CMatrix& u) {
  detail::require_unitary(u, "m_matrix");
  CMatrix d = CMatrix::Zero(3, 3);
  d(1, 1) = -1.0;
  d(2, 2) = 1.0;
  return u.adjoint() * d * u;
}

/// Same matrix from the entrywise form M_ij = U_3j U*_3i - U_2j U*_2i.
inline CMatrix m_matrix_entrywise(const CMatrix& u) {
  detail::require_unitary(u, "m_matrix_entrywise");
  CMatrix m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = u(2, j) * std::conj(u(2, i)) - u(1, j) * std::conj(u(1, i));
  return m;
}

inline Vec3 mixing_g(const MixingSpec& spec, const Vec2& k) { return g_vector(spec.t_x, spec.t_y, k); }

/// Block-diagonal mass-basis Hamiltonian, blocks (g_k - h^i).sigma.
inline CMatrix mass_basis_hamiltonian(const MixingSpec& spec, const Vec2& k) {
  const Vec3 g = mixing_g(spec, k);
  CMatrix h = CMatrix::Zero(6, 6);
  for (int i = 0; i < 3; ++i) h.block(2 * i, 2 * i, 2, 2) = pauli::dot(g - spec.h_vectors[i]);
  return h;
}

/// Flavour-basis Hamiltonian by direct conjugation of the mass basis (valid
/// for any h^i).
inline CMatrix flavour_hamiltonian(const MixingSpec& spec, const Vec2& k) {
  const CMatrix w = kron(pmns_matrix(spec.pmns), pauli::identity());
  CMatrix h = w.adjoint() * mass_basis_hamiltonian(spec, k) * w;
  return 0.5 * (h + h.adjoint());
}

/// I3 (x) g_k.sigma + M (x) h.sigma; requires the symmetric h pattern.
inline CMatrix flavour_hamiltonian_symmetric(const MixingSpec& spec, const Vec2& k) {
  if (!spec.is_symmetric_pattern())
    fail(ErrorKind::Precondition, "flavour_hamiltonian_symmetric: needs h1 = 0 and h2 = -h3");
  const CMatrix m = m_matrix(pmns_matrix(spec.pmns));
  return kron(CMatrix::Identity(3, 3), pauli::dot(mixing_g(spec, k))) + kron(m, pauli::dot(spec.h_vectors[1]));
}

}  // namespace conelab

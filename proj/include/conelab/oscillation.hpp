#pragma once

// Quasi-neutrino flavour oscillations on the lattice: exact evolution under
// H_f(k) by eigendecomposition, the continuum two-level-per-species oracle,
// the T-asymmetry and the direction / CP-phase sweeps.
//
// Momenta are measured from the node: k = K + p with K = (pi/2, pi/2). Then
// g_k ~ -c_l p with c_l = 2t and |g_k - h^i| ~ c_l |p| + p_unit.h^i.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "conelab/errors.hpp"
#include "conelab/flavour_mixing.hpp"
#include "conelab/linalg.hpp"
#include "conelab/parallel.hpp"

namespace conelab {

enum class Flavour { E = 0, Mu = 1, Tau = 2 };
enum class Branch { Negative, Positive };

inline constexpr std::array<Flavour, 3> kFlavours{Flavour::E, Flavour::Mu, Flavour::Tau};

inline const char* to_string(Flavour f) {
  switch (f) {
    case Flavour::E: return "e";
    case Flavour::Mu: return "mu";
    case Flavour::Tau: return "tau";
  }
  return "?";
}

inline int index(Flavour f) { return static_cast<int>(f); }

inline Vec2 momentum_near_node(double p_mag, double angle) {
  return dirac_point_k() + p_mag * Vec2(std::cos(angle), std::sin(angle));
}

struct WavePacketState {
  Vec2 k;
  CVector amplitudes;  // 6 components, flavour (x) spinor
  Flavour flavour = Flavour::E;
  Branch branch = Branch::Negative;

  double norm() const { return amplitudes.norm(); }
};

/// Unit eigenvector of g.sigma with eigenvalue +-|g|, phase fixed so the first
/// nonzero component is real and positive.
inline CVector helicity_spinor(const Vec3& g, Branch branch) {
  const double mag = g.norm();
  if (mag < 1e-12) fail(ErrorKind::UndefinedHelicity, "helicity undefined at g_k = 0");
  const Spectrum s = eigh(pauli::dot(g));
  CVector u = s.vectors.col(branch == Branch::Negative ? 0 : 1);
  const Eigen::Index lead = std::abs(u(0)) > 1e-14 ? 0 : 1;
  u *= std::abs(u(lead)) / u(lead);
  return u / u.norm();
}

/// e_flavour (x) u_branch(k).
inline WavePacketState prepare_flavour_state(const MixingSpec& spec, const Vec2& k, Flavour flavour,
                                             Branch branch = Branch::Negative) {
  CVector e = CVector::Zero(3);
  e(index(flavour)) = 1.0;
  return {k, kron(e, helicity_spinor(mixing_g(spec, k), branch)), flavour, branch};
}

namespace detail {
inline double checked_probability(double p) {
  if (!(p >= -1e-12 && p <= 1.0 + 1e-12))
    fail(ErrorKind::ContractViolation, "probability outside [0, 1]: " + std::to_string(p));
  return std::clamp(p, 0.0, 1.0);
}
}  // namespace detail

/// exp(-i H_f(k) t) applied through one cached eigendecomposition.
class FlavourPropagator {
 public:
  FlavourPropagator(const MixingSpec& spec, const Vec2& k) : k_(k), spectrum_(eigh(flavour_hamiltonian(spec, k))) {}

  CVector apply(const CVector& psi0, double t) const {
    CVector c = spectrum_.vectors.adjoint() * psi0;
    for (Eigen::Index j = 0; j < c.size(); ++j) c(j) *= std::polar(1.0, -spectrum_.values(j) * t);
    return spectrum_.vectors * c;
  }

  /// P(beta) = sum over spinor of |<beta, s|psi>|^2.
  static std::array<double, 3> flavour_probabilities(const CVector& psi) {
    std::array<double, 3> p{};
    for (int b = 0; b < 3; ++b) p[b] = detail::checked_probability(psi.segment(2 * b, 2).squaredNorm());
    return p;
  }

  const Vec2& k() const { return k_; }
  const Spectrum& spectrum() const { return spectrum_; }

 private:
  Vec2 k_;
  Spectrum spectrum_;
};

inline WavePacketState evolve_state(const MixingSpec& spec, const WavePacketState& state, double t) {
  WavePacketState out = state;
  out.amplitudes = FlavourPropagator(spec, state.k).apply(state.amplitudes, t);
  return out;
}

/// P(from -> beta)(t) for the three final flavours.
struct OscillationTrace {
  std::vector<double> times;
  Flavour from = Flavour::E;
  Branch branch = Branch::Negative;
  Vec2 k;
  std::array<std::vector<double>, 3> to;

  const std::vector<double>& probability(Flavour beta) const { return to[index(beta)]; }
};

inline OscillationTrace evolve(const MixingSpec& spec, const WavePacketState& state, std::span<const double> times) {
  if (std::abs(state.norm() - 1.0) > 1e-12) fail(ErrorKind::Precondition, "evolve: state is not normalized");
  const FlavourPropagator prop(spec, state.k);
  OscillationTrace tr;
  tr.times.assign(times.begin(), times.end());
  tr.from = state.flavour;
  tr.branch = state.branch;
  tr.k = state.k;
  for (auto& v : tr.to) v.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto p = FlavourPropagator::flavour_probabilities(prop.apply(state.amplitudes, times[i]));
    for (int b = 0; b < 3; ++b) tr.to[b][i] = p[b];
  }
  return tr;
}

inline std::array<OscillationTrace, 3> evolve_all(const MixingSpec& spec, const Vec2& k, std::span<const double> times,
                                                  Branch branch = Branch::Negative) {
  std::array<OscillationTrace, 3> out;
  for (Flavour a : kFlavours) out[index(a)] = evolve(spec, prepare_flavour_state(spec, k, a, branch), times);
  return out;
}

// ---------------------------------------------------------------------------
// Continuum oracle

/// |sum_j W(a, j) W*(b, j) exp(-i E_j t)|^2 with W the flavour-by-mass matrix.
inline double continuum_probability(const CMatrix& w, std::span<const double> energies, Flavour alpha, Flavour beta,
                                    double t) {
  Complex amp{};
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    amp += w(index(alpha), j) * std::conj(w(index(beta), j)) * std::polar(1.0, -energies[static_cast<std::size_t>(j)] * t);
  return detail::checked_probability(std::norm(amp));
}

enum class EnergyMode { Degenerate, Anisotropic, Mass };

struct ContinuumEnergies {
  std::array<double, 3> energies{};
  EnergyMode mode = EnergyMode::Degenerate;
  bool outside_regime = false;  // max |h| / (c_l p) > 0.1
};

/// Ultrarelativistic energies of the three species:
///   in-plane h (anisotropic): E_i = c_l |p| + p_unit . h^i
///   pure-z h (mass-like):     E_i = c_l |p| + (h_z^i)^2 / (2 c_l |p|)
inline ContinuumEnergies anisotropic_energies(std::span<const Vec3> h_vectors, const Vec2& p_hat, double p_mag,
                                              double c_l) {
  if (h_vectors.size() != 3) fail(ErrorKind::Precondition, "anisotropic_energies: need three h vectors");
  if (std::abs(p_hat.norm() - 1.0) > 1e-12) fail(ErrorKind::Precondition, "anisotropic_energies: p_hat must be unit");
  if (!(p_mag > 0.0) || !(c_l > 0.0)) fail(ErrorKind::Precondition, "anisotropic_energies: p_mag, c_l must be > 0");
  bool in_plane = false, along_z = false;
  double hmax = 0.0;
  for (const auto& h : h_vectors) {
    in_plane = in_plane || h.x() != 0.0 || h.y() != 0.0;
    along_z = along_z || h.z() != 0.0;
    hmax = std::max(hmax, h.norm());
  }
  if (in_plane && along_z)
    fail(ErrorKind::ModeAmbiguity, "anisotropic_energies: h mixes in-plane and z components; use exact |g - h|");
  ContinuumEnergies out;
  out.mode = in_plane ? EnergyMode::Anisotropic : along_z ? EnergyMode::Mass : EnergyMode::Degenerate;
  out.outside_regime = hmax > 0.1 * c_l * p_mag;
  const double e0 = c_l * p_mag;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& h = h_vectors[i];
    out.energies[i] = out.mode == EnergyMode::Mass ? e0 + h.z() * h.z() / (2.0 * e0) : e0 + p_hat.dot(h.head<2>());
  }
  return out;
}

/// Continuum prediction matching a lattice run at k = K + p_mag (cos a, sin a)
/// on the given helicity branch (the negative branch reverses all phases).
inline std::vector<double> continuum_transition(const MixingSpec& spec, double p_mag, double angle, Branch branch,
                                                Flavour alpha, Flavour beta, std::span<const double> times) {
  const Vec2 p_hat(std::cos(angle), std::sin(angle));
  auto ce = anisotropic_energies(spec.h_vectors, p_hat, p_mag, spec.light_speed());
  if (branch == Branch::Negative)
    for (auto& e : ce.energies) e = -e;
  const CMatrix w = flavour_mass_matrix(pmns_matrix(spec.pmns));
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = continuum_probability(w, ce.energies, alpha, beta, times[i]);
  return out;
}

// ---------------------------------------------------------------------------
// T-asymmetry

struct TAsymmetry {
  std::vector<double> times;
  std::vector<double> e_to_mu;
  std::vector<double> mu_to_e;
  std::vector<double> values;
  std::vector<bool> undefined;  // denominator <= 1e-14, value reported as 0
};

inline TAsymmetry t_asymmetry(const MixingSpec& spec, const Vec2& k, std::span<const double> times,
                              Branch branch = Branch::Negative) {
  const auto fwd = evolve(spec, prepare_flavour_state(spec, k, Flavour::E, branch), times);
  const auto bwd = evolve(spec, prepare_flavour_state(spec, k, Flavour::Mu, branch), times);
  TAsymmetry out;
  out.times.assign(times.begin(), times.end());
  out.e_to_mu = fwd.probability(Flavour::Mu);
  out.mu_to_e = bwd.probability(Flavour::E);
  out.values.resize(times.size());
  out.undefined.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double den = out.e_to_mu[i] + out.mu_to_e[i];
    out.undefined[i] = den <= 1e-14;
    out.values[i] = out.undefined[i] ? 0.0 : (out.e_to_mu[i] - out.mu_to_e[i]) / den;
  }
  return out;
}

/// One T-asymmetry run per CP phase, all other parameters fixed.
inline std::vector<TAsymmetry> delta_sweep(const MixingSpec& spec, std::span<const double> deltas, const Vec2& k,
                                           std::span<const double> times, Branch branch = Branch::Negative,
                                           unsigned threads = 1) {
  std::vector<TAsymmetry> out(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t i) {
    MixingSpec s = spec;
    s.pmns.delta = deltas[i];
    out[i] = t_asymmetry(s, k, times, branch);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Direction sweep

/// Half the fundamental oscillation period from the continuum splittings:
/// pi / min nonzero |E_i - E_j| at the direction of largest splitting.
inline double default_probe_time(const MixingSpec& spec, double p_mag) {
  double omega = std::numeric_limits<double>::infinity();
  bool in_plane = false, along_z = false;
  for (const auto& h : spec.h_vectors) {
    in_plane = in_plane || h.x() != 0.0 || h.y() != 0.0;
    along_z = along_z || h.z() != 0.0;
  }
  if (in_plane && along_z) fail(ErrorKind::ModeAmbiguity, "default_probe_time: mixed in-plane and z splittings");
  const double e0 = spec.light_speed() * p_mag;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const auto& a = spec.h_vectors[i];
      const auto& b = spec.h_vectors[j];
      const double w = in_plane ? (a - b).head<2>().norm() : std::abs(a.z() * a.z() - b.z() * b.z()) / (2.0 * e0);
      if (w > 1e-15) omega = std::min(omega, w);
    }
  if (!std::isfinite(omega)) fail(ErrorKind::Precondition, "default_probe_time: no splitting; give t_probe explicitly");
  return kPi / omega;
}

struct DirectionSweep {
  double p_mag = 0.0;
  double t_probe = 0.0;
  std::vector<double> angles;          // p_hat = (cos a, sin a), a = 2 pi j / n
  std::vector<double> e_to_mu;         // lattice
  std::vector<double> e_to_mu_continuum;  // empty when the oracle does not apply
};

inline DirectionSweep direction_sweep(const MixingSpec& spec, double p_mag, int n_dirs, double t_probe,
                                      Branch branch = Branch::Negative, unsigned threads = 1) {
  if (n_dirs < 16) fail(ErrorKind::Precondition, "direction_sweep: n_dirs must be >= 16");
  if (!(p_mag > 0.0)) fail(ErrorKind::Precondition, "direction_sweep: p_mag must be > 0");
  DirectionSweep out;
  out.p_mag = p_mag;
  out.t_probe = t_probe;
  out.angles.resize(static_cast<std::size_t>(n_dirs));
  out.e_to_mu.resize(out.angles.size());
  for (int j = 0; j < n_dirs; ++j) out.angles[j] = 2.0 * kPi * j / n_dirs;
  const double t[] = {t_probe};
  parallel_for(out.angles.size(), threads, [&](std::size_t j) {
    const Vec2 k = momentum_near_node(p_mag, out.angles[j]);
    out.e_to_mu[j] = evolve(spec, prepare_flavour_state(spec, k, Flavour::E, branch), t).to[index(Flavour::Mu)][0];
  });
  if (spec.t_x == spec.t_y) {
    try {
      out.e_to_mu_continuum.resize(out.angles.size());
      for (std::size_t j = 0; j < out.angles.size(); ++j)
        out.e_to_mu_continuum[j] =
            continuum_transition(spec, p_mag, out.angles[j], branch, Flavour::E, Flavour::Mu, t)[0];
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ModeAmbiguity) throw;
      out.e_to_mu_continuum.clear();
    }
  }
  return out;
}

}  // namespace conelab

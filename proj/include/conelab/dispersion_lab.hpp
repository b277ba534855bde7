#pragma once

// Dirac-point-preserving mixing of N spin-1/2 species,
//
//   H(p) = { superdiag g sigma+, diag c_l p.sigma, subdiag g sigma- },
//
// whose lowest branch disperses as E ~ p^N near p = 0.

#include <cmath>
#include <limits>
#include <vector>

#include "conelab/errors.hpp"
#include "conelab/linalg.hpp"

namespace conelab {

struct LadderMixModel {
  int species = 1;  // N
  double coupling = 1.0;  // g
  double light_speed = 1.0;  // c_l

  void validate() const {
    if (species < 1) fail(ErrorKind::InvalidDimension, "ladder model needs N >= 1");
    if (!(coupling > 0.0)) fail(ErrorKind::Precondition, "ladder model needs g > 0");
    if (!std::isfinite(light_speed) || light_speed == 0.0)
      fail(ErrorKind::Precondition, "ladder model needs a finite nonzero c_l");
  }
};

inline CMatrix ladder_hamiltonian(const LadderMixModel& model, const Vec2& p) {
  model.validate();
  const int n = model.species;
  const CMatrix diag = model.light_speed * (p.x() * pauli::x() + p.y() * pauli::y());
  const CMatrix up = model.coupling * pauli::plus();
  CMatrix h = CMatrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    h.block(2 * i, 2 * i, 2, 2) = diag;
    if (i + 1 < n) {
      h.block(2 * i, 2 * i + 2, 2, 2) = up;
      h.block(2 * i + 2, 2 * i, 2, 2) = up.adjoint();
    }
  }
  return h;
}

/// Lowest positive energy of the ladder Hamiltonian.
///
/// H is chiral: in the (all up, all down) ordering H = [[0, Q], [Q^dag, 0]]
/// with Q = c_l (p_x - i p_y) I + g J (J the upper shift), so E = +-sigma(Q).
/// The smallest singular value is taken as 1 / sigma_max(Q^-1), with Q^-1
/// formed exactly by back substitution; this keeps full relative accuracy even
/// when E ~ p^N / g^(N-1) is far below eps * ||H||.
inline double ladder_lowest_energy(const LadderMixModel& model, const Vec2& p) {
  model.validate();
  const int n = model.species;
  const Complex a = model.light_speed * Complex(p.x(), -p.y());
  if (std::abs(a) == 0.0) return 0.0;
  CMatrix inv = CMatrix::Zero(n, n);
  // (Q^-1)_{ij} = (-g)^{j-i} / a^{j-i+1} for j >= i
  Complex term = 1.0 / a;
  for (int d = 0; d < n; ++d) {
    for (int i = 0; i + d < n; ++i) inv(i, i + d) = term;
    term *= -model.coupling / a;
  }
  const RVector s2 = eigvalsh(inv * inv.adjoint());
  const double largest = s2(s2.size() - 1);
  if (!(largest > 0.0) || !std::isfinite(largest))
    fail(ErrorKind::Underflow, "ladder_lowest_energy: singular value out of range; shrink the window");
  return 1.0 / std::sqrt(largest);
}

struct DispersionFit {
  int species = 0;
  double coupling = 0.0;
  double light_speed = 0.0;
  double exponent = 0.0;
  double r_squared = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double angle = 0.0;
  std::vector<double> momenta;
  std::vector<double> energies;
};

/// Default fitting window p in [1e-4, 1e-3] g / c_l.
inline std::pair<double, double> default_dispersion_window(const LadderMixModel& m) {
  const double unit = m.coupling / std::abs(m.light_speed);
  return {1e-4 * unit, 1e-3 * unit};
}

/// Least-squares slope of log E_min against log p on n_samples log-uniform
/// momenta along (cos angle, sin angle).
inline DispersionFit fit_dispersion_exponent(const LadderMixModel& model, double p_min, double p_max, int n_samples,
                                             double angle = 0.0) {
  model.validate();
  if (n_samples < 8) fail(ErrorKind::Precondition, "fit_dispersion_exponent: n_samples must be >= 8");
  if (!(p_min > 0.0) || !(p_max > p_min)) fail(ErrorKind::Precondition, "fit_dispersion_exponent: need 0 < p_min < p_max");
  if (p_max > 1e-2 * model.coupling / std::abs(model.light_speed) * (1.0 + 1e-12))
    fail(ErrorKind::Precondition, "fit_dispersion_exponent: p_max must be <= 1e-2 g / c_l");

  DispersionFit fit;
  fit.species = model.species;
  fit.coupling = model.coupling;
  fit.light_speed = model.light_speed;
  fit.p_min = p_min;
  fit.p_max = p_max;
  fit.angle = angle;
  const Vec2 dir(std::cos(angle), std::sin(angle));
  const double lmin = std::log(p_min), lmax = std::log(p_max);
  std::vector<double> xs, ys;
  for (int i = 0; i < n_samples; ++i) {
    const double p = std::exp(lmin + (lmax - lmin) * i / (n_samples - 1));
    const double e = ladder_lowest_energy(model, p * dir);
    if (!(e > 1e-300)) fail(ErrorKind::Underflow, "fit_dispersion_exponent: energy below 1e-300; shrink the window");
    fit.momenta.push_back(p);
    fit.energies.push_back(e);
    xs.push_back(std::log(p));
    ys.push_back(std::log(e));
  }
  const double n = static_cast<double>(n_samples);
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.exponent = sxy / sxx;
  double ss_res = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double r = ys[i] - (my + fit.exponent * (xs[i] - mx));
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace conelab

#pragma once

// Brillouin-zone sampling, Dirac-point location, Fermi velocities, gaps and
// topological charges of BlochModel spectra.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "conelab/csv.hpp"
#include "conelab/errors.hpp"
#include "conelab/linalg.hpp"
#include "conelab/parallel.hpp"
#include "conelab/spectral_core.hpp"

namespace conelab {

/// Eigenvalues on an nk x nk grid. Axis values are k_i = -pi + 2 pi (i+1)/nk,
/// covering (-pi, pi] once; for nk divisible by 4 the grid contains +-pi/2.
struct BandGrid {
  int nk = 0;
  int n = 0;
  std::vector<double> axis;
  std::vector<double> energies;  // [(ix * nk + iy) * n + band]

  double energy(int ix, int iy, int band) const {
    return energies[(static_cast<std::size_t>(ix) * nk + iy) * n + band];
  }
  Vec2 k(int ix, int iy) const { return {axis[ix], axis[iy]}; }
};

inline std::vector<double> bz_axis(int nk) {
  std::vector<double> axis(static_cast<std::size_t>(nk));
  for (int i = 0; i < nk; ++i) axis[i] = -kPi + 2.0 * kPi * (i + 1) / nk;
  return axis;
}

inline BandGrid sample_bands(const BlochModel& model, int nk, unsigned threads = 1) {
  if (nk < 4) fail(ErrorKind::Precondition, "sample_bands: nk must be >= 4");
  BandGrid grid;
  grid.nk = nk;
  grid.n = model.n();
  grid.axis = bz_axis(nk);
  grid.energies.assign(static_cast<std::size_t>(nk) * nk * grid.n, 0.0);
  parallel_for(static_cast<std::size_t>(nk) * nk, threads, [&](std::size_t idx) {
    const int ix = static_cast<int>(idx / nk);
    const int iy = static_cast<int>(idx % nk);
    const RVector e = eigvalsh(bloch_hamiltonian(model, grid.k(ix, iy)));
    std::copy(e.data(), e.data() + e.size(), grid.energies.begin() + static_cast<std::ptrdiff_t>(idx * grid.n));
  });
  return grid;
}

/// CSV columns: kx, ky, E_1..E_n.
inline void write_csv(std::ostream& os, const BandGrid& grid) {
  std::vector<std::string> header{"kx", "ky"};
  for (int b = 1; b <= grid.n; ++b) header.push_back("E_" + std::to_string(b));
  csv::write_header(os, header);
  std::vector<double> row(static_cast<std::size_t>(grid.n) + 2);
  for (int ix = 0; ix < grid.nk; ++ix)
    for (int iy = 0; iy < grid.nk; ++iy) {
      row[0] = grid.axis[ix];
      row[1] = grid.axis[iy];
      for (int b = 0; b < grid.n; ++b) row[b + 2] = grid.energy(ix, iy, b);
      csv::write_row(os, row);
    }
}

// ---------------------------------------------------------------------------
// Analytic Dirac points of a split spin-1/2 block

enum class DiracStatus { Regular, Marginal, Annihilated };

inline const char* to_string(DiracStatus s) {
  switch (s) {
    case DiracStatus::Regular: return "regular";
    case DiracStatus::Marginal: return "marginal";
    case DiracStatus::Annihilated: return "annihilated";
  }
  return "?";
}

struct AnalyticDiracPoints {
  DiracStatus status = DiracStatus::Regular;
  std::vector<Vec2> points;
};

namespace detail {

// Solutions of 2 t cos k = h in (-pi, pi]; one value when |h| = 2|t|.
inline std::vector<double> cos_roots(double two_t, double h, bool& marginal, bool& annihilated) {
  const double ratio = h / two_t;
  const double excess = std::abs(ratio) - 1.0;
  if (excess > 1e-14) {
    annihilated = true;
    return {};
  }
  if (std::abs(excess) <= 1e-14) {
    marginal = true;
    return {ratio > 0 ? 0.0 : kPi};
  }
  const double k = std::acos(ratio);
  return {k, -k};
}

}  // namespace detail

/// Nodes of (g_k - h).sigma with in-plane h: (+-acos(h_x/2t_x), +-acos(h_y/2t_y)).
/// Points are ordered (kx desc, ky desc) as produced by the +/- enumeration.
inline AnalyticDiracPoints dirac_points_analytic(double t_x, double t_y, const Vec3& h) {
  if (h.z() != 0.0)
    fail(ErrorKind::Precondition, "dirac_points_analytic: h_z must be 0 (gapped otherwise)");
  if (t_x == 0.0 || t_y == 0.0) fail(ErrorKind::Precondition, "dirac_points_analytic: t_x, t_y must be nonzero");
  bool marginal = false;
  bool annihilated = false;
  const auto kxs = detail::cos_roots(2.0 * t_x, h.x(), marginal, annihilated);
  const auto kys = detail::cos_roots(2.0 * t_y, h.y(), marginal, annihilated);
  AnalyticDiracPoints out;
  if (annihilated) {
    out.status = DiracStatus::Annihilated;
    return out;
  }
  out.status = marginal ? DiracStatus::Marginal : DiracStatus::Regular;
  for (double kx : kxs)
    for (double ky : kys) out.points.emplace_back(kx, ky);
  return out;
}

// ---------------------------------------------------------------------------
// Gaps

/// Half-filling gap of a sorted spectrum: E[n/2] - E[n/2-1] for even n, and
/// the smaller gap around the middle band for odd n.
inline double half_filling_gap(const RVector& e) {
  const auto n = e.size();
  if (n < 2) return 0.0;
  if (n % 2 == 0) return e(n / 2) - e(n / 2 - 1);
  const auto m = n / 2;
  return std::min(e(m + 1) - e(m), e(m) - e(m - 1));
}

inline double gap_at(const BlochModel& model, const Vec2& k) {
  return half_filling_gap(eigvalsh(bloch_hamiltonian(model, k)));
}

struct GapMinimum {
  Vec2 k;
  double gap = 0.0;
};

namespace detail {

template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline double periodic_distance(const Vec2& a, const Vec2& b) {
  return std::hypot(wrap_angle(a.x() - b.x()), wrap_angle(a.y() - b.y()));
}

inline Vec2 wrap_bz(const Vec2& k) { return {wrap_angle(k.x()), wrap_angle(k.y())}; }

}  // namespace detail

/// Coordinate-wise golden-section refinement of the gap inside the box
/// k0 +- half_width.
inline GapMinimum refine_gap_minimum(const BlochModel& model, const Vec2& k0, double half_width,
                                     double tol = 1e-9) {
  Vec2 k = k0;
  for (int sweep = 0; sweep < 60; ++sweep) {
    const Vec2 prev = k;
    k.x() = detail::golden_section([&](double x) { return gap_at(model, {x, k.y()}); }, k.x() - half_width,
                                   k.x() + half_width, tol);
    k.y() = detail::golden_section([&](double y) { return gap_at(model, {k.x(), y}); }, k.y() - half_width,
                                   k.y() + half_width, tol);
    if ((k - prev).norm() < 1e-11) break;
  }
  const Vec2 kw = detail::wrap_bz(k);
  return {kw, gap_at(model, kw)};
}

/// All local minima of the gap on an nk x nk grid, each refined to 1e-9 in k.
/// Sorted by gap, then kx, then ky.
inline std::vector<GapMinimum> gap_minima(const BlochModel& model, int nk, unsigned threads = 1,
                                          std::size_t max_minima = 64) {
  if (nk < 8) fail(ErrorKind::Precondition, "gap_minima: nk must be >= 8");
  const auto axis = bz_axis(nk);
  std::vector<double> gaps(static_cast<std::size_t>(nk) * nk);
  parallel_for(gaps.size(), threads, [&](std::size_t idx) {
    gaps[idx] = gap_at(model, {axis[idx / nk], axis[idx % nk]});
  });
  auto at = [&](int ix, int iy) {
    ix = (ix % nk + nk) % nk;
    iy = (iy % nk + nk) % nk;
    return gaps[static_cast<std::size_t>(ix) * nk + iy];
  };
  std::vector<std::pair<double, std::size_t>> candidates;
  for (int ix = 0; ix < nk; ++ix)
    for (int iy = 0; iy < nk; ++iy) {
      const double g = at(ix, iy);
      bool is_min = true;
      for (int dx = -1; dx <= 1 && is_min; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          if ((dx || dy) && at(ix + dx, iy + dy) < g) {
            is_min = false;
            break;
          }
      if (is_min) candidates.emplace_back(g, static_cast<std::size_t>(ix) * nk + iy);
    }
  std::sort(candidates.begin(), candidates.end());
  if (candidates.size() > max_minima) candidates.resize(max_minima);

  const double spacing = 2.0 * kPi / nk;
  std::vector<GapMinimum> refined(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    const auto idx = candidates[i].second;
    refined[i] = refine_gap_minimum(model, {axis[idx / nk], axis[idx % nk]}, spacing);
  });

  std::vector<GapMinimum> unique;
  for (const auto& m : refined) {
    bool dup = false;
    for (auto& u : unique)
      if (detail::periodic_distance(u.k, m.k) < 1e-5) {
        if (m.gap < u.gap) u = m;
        dup = true;
        break;
      }
    if (!dup) unique.push_back(m);
  }
  std::sort(unique.begin(), unique.end(), [](const GapMinimum& a, const GapMinimum& b) {
    if (a.gap != b.gap) return a.gap < b.gap;
    if (a.k.x() != b.k.x()) return a.k.x() < b.k.x();
    return a.k.y() < b.k.y();
  });
  return unique;
}

/// Minimum over the BZ of the half-filling gap (grid scan plus refinement).
inline double band_gap(const BlochModel& model, int nk = 64, unsigned threads = 1) {
  if (nk < 64) fail(ErrorKind::Precondition, "band_gap: nk must be >= 64");
  const auto minima = gap_minima(model, nk, threads);
  return minima.empty() ? 0.0 : std::max(0.0, minima.front().gap);
}

// ---------------------------------------------------------------------------
// Fermi velocities

inline constexpr double kTouchTolerance = 1e-6;

/// Slopes of the cone branches through a band-touching point k_star, sorted
/// ascending. For each upper-half band touching at k_star the branch is
/// continued through the node, so the central difference is
/// (E_i(k*+d) + E_i(k*-d) - 2 E_0) / (2 delta) with E_0 the touching energy.
inline std::vector<double> fermi_velocities(const BlochModel& model, const Vec2& k_star, const Vec2& direction,
                                            double delta = 1e-4) {
  if (delta < 1e-6 || delta > 1e-2) fail(ErrorKind::Precondition, "fermi_velocities: delta must lie in [1e-6, 1e-2]");
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    fail(ErrorKind::Precondition, "fermi_velocities: direction must be a unit vector");
  const RVector e0 = eigvalsh(bloch_hamiltonian(model, k_star));
  const auto n = e0.size();
  const double scale = std::max(1.0, e0.cwiseAbs().maxCoeff());
  if (half_filling_gap(e0) > kTouchTolerance * scale)
    fail(ErrorKind::Precondition, "fermi_velocities: k_star is not a band-touching point");
  const auto first_upper = (n + 1) / 2;
  const double e_mid = (n % 2 == 0) ? 0.5 * (e0(n / 2 - 1) + e0(n / 2)) : e0(n / 2);

  const RVector ep = eigvalsh(bloch_hamiltonian(model, k_star + delta * direction));
  const RVector em = eigvalsh(bloch_hamiltonian(model, k_star - delta * direction));
  std::vector<double> v;
  for (auto i = first_upper; i < n; ++i) {
    if (std::abs(e0(i) - e_mid) > kTouchTolerance * scale) continue;
    v.push_back(std::abs(ep(i) + em(i) - 2.0 * e_mid) / (2.0 * delta));
  }
  std::sort(v.begin(), v.end());
  return v;
}

// ---------------------------------------------------------------------------
// Topological charge

namespace detail {

inline void require_chiral_grading(const BlochModel& model) {
  if (model.n() % 2 != 0)
    fail(ErrorKind::UnsupportedDimension, "chiral_winding: n must be even (odd n has a flat band)");
  const auto& o = model.onsite();
  for (Eigen::Index i = 0; i < o.rows(); ++i)
    for (Eigen::Index j = 0; j < o.cols(); ++j)
      if ((i + j) % 2 == 0 && std::abs(o(i, j)) > 1e-12)
        fail(ErrorKind::Precondition, "chiral_winding: on-site term breaks the even/odd chiral grading");
}

/// Off-diagonal block q = H[even, odd].
inline CMatrix chiral_block(const CMatrix& h) {
  const Eigen::Index m = h.rows() / 2;
  CMatrix q(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) q(a, b) = h(2 * a, 2 * b + 1);
  return q;
}

inline Vec2 loop_point(const Vec2& centre, double radius, int j, int n_loop) {
  const double phi = 2.0 * kPi * j / n_loop;
  return centre + radius * Vec2(std::cos(phi), std::sin(phi));
}

}  // namespace detail

/// Unrounded winding (1/2pi) sum Delta arg det q around a counterclockwise
/// circle of `loop_radius` about k_star.
inline double chiral_winding_raw(const BlochModel& model, const Vec2& k_star, double loop_radius = 0.1,
                                 int n_loop = 128) {
  detail::require_chiral_grading(model);
  if (n_loop < 64) fail(ErrorKind::Precondition, "chiral_winding: n_loop must be >= 64");
  if (!(loop_radius > 0.0)) fail(ErrorKind::Precondition, "chiral_winding: loop_radius must be positive");
  double total = 0.0;
  Complex prev{};
  for (int j = 0; j <= n_loop; ++j) {
    const CMatrix h = bloch_hamiltonian(model, detail::loop_point(k_star, loop_radius, j, n_loop));
    if (j < n_loop) {
      const RVector e = eigvalsh(h);
      if (e.cwiseAbs().minCoeff() < 1e-9 * std::max(1.0, h.norm()))
        fail(ErrorKind::LoopThroughNode, "chiral_winding: spectrum closes on the loop");
    }
    const Complex d = det(detail::chiral_block(h));
    if (j > 0) total += std::arg(d / prev);
    prev = d;
  }
  return total / (2.0 * kPi);
}

/// Signed integer topological charge (counterclockwise loop). |N| counts the
/// cone layers meeting at k_star.
inline int chiral_winding(const BlochModel& model, const Vec2& k_star, double loop_radius = 0.1,
                          int n_loop = 128) {
  const double w = chiral_winding_raw(model, k_star, loop_radius, n_loop);
  const double r = std::round(w);
  if (std::abs(w - r) >= 1e-3)
    fail(ErrorKind::ContractViolation, "chiral_winding: winding is not integer; increase n_loop");
  return static_cast<int>(r);
}

/// -arg prod_j <u_j|u_{j+1}> over a closed sequence of states (the last state
/// connects back to the first). Independent of the phase of each state.
inline double wilson_loop_phase(std::span<const CVector> states) {
  Complex prod{1.0, 0.0};
  for (std::size_t j = 0; j < states.size(); ++j) {
    const auto& next = states[(j + 1) % states.size()];
    prod *= states[j].dot(next);  // Eigen's dot conjugates the left operand
  }
  return wrap_angle(-std::arg(prod));
}

/// Discretized Berry phase of band `band_index` around a circle about k_star.
inline double berry_phase_loop(const BlochModel& model, int band_index, const Vec2& k_star,
                               double loop_radius = 0.1, int n_loop = 128) {
  if (band_index < 0 || band_index >= model.n()) fail(ErrorKind::Precondition, "berry_phase_loop: band out of range");
  if (n_loop < 8) fail(ErrorKind::Precondition, "berry_phase_loop: n_loop must be >= 8");
  std::vector<CVector> states;
  states.reserve(static_cast<std::size_t>(n_loop));
  for (int j = 0; j < n_loop; ++j) {
    const CMatrix h = bloch_hamiltonian(model, detail::loop_point(k_star, loop_radius, j, n_loop));
    const Spectrum s = eigh(h);
    const double tol = 1e-9 * std::max(1.0, h.norm());
    if ((band_index > 0 && s.values(band_index) - s.values(band_index - 1) < tol) ||
        (band_index + 1 < model.n() && s.values(band_index + 1) - s.values(band_index) < tol))
      fail(ErrorKind::DegenerateBand, "berry_phase_loop: band is degenerate on the loop");
    states.push_back(s.vectors.col(band_index));
  }
  return wilson_loop_phase(states);
}

// ---------------------------------------------------------------------------

struct DiracPointReport {
  Vec2 position;
  std::optional<int> block_index;
  std::vector<double> velocities;
  double gap = 0.0;
  std::optional<int> charge;  // empty: undefined (odd n, non-chiral onsite, ...)
};

struct DiracAnalysisOptions {
  Vec2 direction{1.0, 0.0};
  double delta = 1e-4;
  double loop_radius = 0.1;
  int n_loop = 128;
};

/// Gap, velocities (when gapless) and charge (when defined) at k_star.
inline DiracPointReport analyze_dirac_point(const BlochModel& model, const Vec2& k_star,
                                            const DiracAnalysisOptions& opt = {}) {
  DiracPointReport r;
  r.position = k_star;
  const RVector e = eigvalsh(bloch_hamiltonian(model, k_star));
  r.gap = std::max(0.0, half_filling_gap(e));
  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  if (r.gap <= kTouchTolerance * scale) {
    r.gap = r.gap <= 1e-12 * scale ? 0.0 : r.gap;
    r.velocities = fermi_velocities(model, k_star, opt.direction, opt.delta);
    try {
      r.charge = chiral_winding(model, k_star, opt.loop_radius, opt.n_loop);
    } catch (const Error&) {
      r.charge.reset();
    }
  }
  return r;
}

}  // namespace conelab

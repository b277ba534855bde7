#pragma once

// Small dense complex linear algebra: storage comes from Eigen, the Hermitian
// eigensolver is a cyclic Jacobi sweep (exact and deterministic for n <= 32).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

#include "conelab/errors.hpp"

namespace conelab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

namespace pauli {

inline CMatrix identity() { return CMatrix::Identity(2, 2); }

inline CMatrix x() {
  CMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline CMatrix y() {
  CMatrix m(2, 2);
  m << 0.0, -kI, kI, 0.0;
  return m;
}

inline CMatrix z() {
  CMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

/// sigma^+ = (sigma_x + i sigma_y) / 2 = |up><down|
inline CMatrix plus() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

inline CMatrix minus() { return plus().adjoint(); }

/// v . sigma for a real 3-vector.
inline CMatrix dot(const Vec3& v) { return v.x() * x() + v.y() * y() + v.z() * z(); }

}  // namespace pauli

/// Kronecker product a (x) b; index map (i, j) -> i * dim(b) + j.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline double hermiticity_defect(const CMatrix& h) { return (h - h.adjoint()).norm(); }

inline bool is_hermitian(const CMatrix& h, double rel_tol) {
  if (h.rows() != h.cols()) return false;
  return hermiticity_defect(h) <= rel_tol * h.norm();
}

inline double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).norm();
}

/// Eigen-decomposition of a Hermitian matrix. Column j of `vectors` pairs
/// with `values[j]`; values ascending.
struct Spectrum {
  RVector values;
  CMatrix vectors;

  Eigen::Index size() const { return values.size(); }
};

struct JacobiOptions {
  double off_tolerance = 1e-13;  // relative to ||H||_F
  int max_sweeps = 100;
  double hermitian_tolerance = 1e-10;
};

/// Full eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of H(p,q) and then applies the real
/// symmetric Jacobi rotation, so the accumulated eigenvector matrix is a
/// product of exact unitaries and stays orthonormal to rounding, including
/// inside degenerate clusters (whose basis is otherwise arbitrary).
inline Spectrum eigh(const CMatrix& h, const JacobiOptions& opt = {}) {
  if (h.rows() != h.cols())
    fail(ErrorKind::ContractViolation, "eigh: matrix is not square");
  const Eigen::Index n = h.rows();
  const double scale = h.norm();
  if (hermiticity_defect(h) > opt.hermitian_tolerance * scale)
    fail(ErrorKind::ContractViolation, "eigh: matrix is not Hermitian");

  CMatrix a = 0.5 * (h + h.adjoint());
  CMatrix v = CMatrix::Identity(n, n);

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += std::norm(a(i, j));
    return std::sqrt(2.0 * s);
  };

  const double target = opt.off_tolerance * scale;
  int sweep = 0;
  while (off_norm() > target) {
    if (++sweep > opt.max_sweeps)
      fail(ErrorKind::NotConverged, "eigh: Jacobi sweeps did not converge");
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const Complex phase = apq / mag;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on the (p, q) plane.
        const Complex gpp = c;
        const Complex gpq = s;
        const Complex gqp = -s * std::conj(phase);
        const Complex gqq = c * std::conj(phase);

        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });

  Spectrum out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.values(j) = a(src, src).real();
    out.vectors.col(j) = v.col(src);
  }
  return out;
}

inline RVector eigvalsh(const CMatrix& h) { return eigh(h).values; }

/// Determinant by LU with partial pivoting.
inline Complex det(const CMatrix& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::ContractViolation, "det: matrix is not square");
  const Eigen::Index n = m.rows();
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return m.partialPivLu().determinant();
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace conelab

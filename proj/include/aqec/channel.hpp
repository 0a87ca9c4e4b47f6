#pragma once

// Single-qubit unital noise models at the Bloch-matrix / Pauli-rate level.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "aqec/geom3.hpp"

namespace aqec {

/// Normalized per-type error weights of a Pauli channel in its eigenbasis.
struct Eccentricities {
  double k1 = 1.0;
  double k2 = 0.0;
  double k3 = 0.0;

  static Eccentricities make(double k1, double k2, double k3) {
    Eccentricities e{k1, k2, k3};
    e.validate();
    return e;
  }
  void validate() const {
    if (!(k1 >= 0.0 && k2 >= 0.0 && k3 >= 0.0))
      throw std::invalid_argument("eccentricities must be non-negative");
    if (std::abs(k1 + k2 + k3 - 1.0) > 1e-12)
      throw std::invalid_argument("eccentricities must sum to 1");
  }
  constexpr std::array<double, 3> as_array() const { return {k1, k2, k3}; }
  friend constexpr bool operator==(const Eccentricities&, const Eccentricities&) = default;
};

/// Per-qubit, per-cycle Pauli error probabilities.
struct PauliRates {
  double px = 0.0;
  double py = 0.0;
  double pz = 0.0;

  constexpr double total() const { return px + py + pz; }
  void validate() const {
    for (double r : {px, py, pz})
      if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("Pauli rate outside [0, 1]");
    if (total() > 1.0 + 1e-12) throw std::invalid_argument("total Pauli rate exceeds 1");
  }
};

/// Pauli channel D conjugated by an orientation Q:
/// M = (1 - 2p) I + 2p Q^T diag(k1, k2, k3) Q.
struct OrientedPauliChannel {
  double p = 0.0;
  Eccentricities ecc;
  Rotation3 orientation;

  void validate() const {
    if (!(p >= 0.0 && p <= 0.5)) throw std::invalid_argument("oriented Pauli channel needs p in [0, 1/2]");
    ecc.validate();
  }
};

/// Rotated dephasing: twirls to p cos^2(theta0 - theta_hat) X + p sin^2(theta0 - theta_hat) Z.
struct DephasingChannel {
  double p = 0.0;
  double theta0 = 0.0;

  static DephasingChannel make(double p, double theta0) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dephasing channel needs p in [0, 1]");
    return {p, wrap_angle(theta0)};
  }
  static double wrap_angle(double theta) {
    double t = std::fmod(theta, std::numbers::pi);
    if (t < 0.0) t += std::numbers::pi;
    return t >= std::numbers::pi ? 0.0 : t;
  }
};

/// A = Q^T D Q, the trace-one part of the Bloch matrix.
inline SymMat3 contraction(const OrientedPauliChannel& ch) {
  return oriented(ch.orientation, ch.ecc.k1, ch.ecc.k2, ch.ecc.k3);
}

inline SymMat3 bloch_matrix(const OrientedPauliChannel& ch) {
  const SymMat3 a = contraction(ch);
  const double s = 2.0 * ch.p;
  SymMat3 m;
  for (int i = 0; i < 6; ++i) m.u[i] = s * a.u[i];
  m.u[0] += 1.0 - s;
  m.u[3] += 1.0 - s;
  m.u[5] += 1.0 - s;
  return m;
}

/// Rates seen by a code whose frame is counter-rotated by `control`:
/// p * diag(control A control^T) in (x, y, z) order.
inline PauliRates effective_rates(const OrientedPauliChannel& ch, const Rotation3& control) {
  const SymMat3 a = contraction(ch);
  return {ch.p * a.quadratic(control.row(0)), ch.p * a.quadratic(control.row(1)),
          ch.p * a.quadratic(control.row(2))};
}

inline PauliRates twirl_dephasing(const DephasingChannel& ch, double theta_hat) {
  const double c = std::cos(ch.theta0 - theta_hat);
  const double px = ch.p * c * c;
  return {px, 0.0, ch.p - px};
}

/// Counter-rotation that diagonalizes `a` with the largest eigenvalue on x,
/// the middle one on z and the smallest on y.
inline Rotation3 optimal_control(const SymMat3& a) {
  const SymEig eig = sym_eig(a);
  const Vec3 r0 = eig.basis.row(0);
  const Vec3 r1 = eig.basis.row(1);
  const Vec3 r2 = eig.basis.row(2);
  // Swapping rows 1 and 2 flips orientation; negating one row restores it.
  Mat3 q{{r0.x, r0.y, r0.z, -r2.x, -r2.y, -r2.z, r1.x, r1.y, r1.z}};
  return RotationAccess::make(q);
}

/// Singular values <= 1 and, for symmetric m, the Fujiwara-Algoet eigenvalue
/// conditions 1 + l_k >= |l_i + l_j|.
inline bool validate_unital(const Mat3& m, double tol = 1e-12) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  const SymEig gram = sym_eig(SymMat3::from(transpose(m) * m));
  for (double s2 : gram.values)
    if (std::sqrt(std::max(0.0, s2)) > 1.0 + tol) return false;

  const bool symmetric = frobenius_distance(m, transpose(m)) <= tol;
  if (!symmetric) return true;
  const auto l = sym_eig(SymMat3::from(m)).values;
  return 1.0 + l[2] >= std::abs(l[0] + l[1]) - tol && 1.0 + l[1] >= std::abs(l[0] + l[2]) - tol &&
         1.0 + l[0] >= std::abs(l[1] + l[2]) - tol;
}

}  // namespace aqec

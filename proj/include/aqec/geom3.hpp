#pragma once

// Fixed-size 3x3 real linear algebra for Bloch matrices and SO(3) controls.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace aqec {

/// Raised when an iterative numerical routine fails to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Dense 3x3 matrix, row-major.
struct Mat3 {
  std::array<double, 9> a{};

  constexpr double& operator()(int i, int j) { return a[3 * i + j]; }
  constexpr double operator()(int i, int j) const { return a[3 * i + j]; }

  static constexpr Mat3 zero() { return {}; }
  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
  static constexpr Mat3 diagonal(double d0, double d1, double d2) {
    return Mat3{{d0, 0, 0, 0, d1, 0, 0, 0, d2}};
  }

  constexpr Vec3 row(int i) const { return {a[3 * i], a[3 * i + 1], a[3 * i + 2]}; }
  constexpr Vec3 col(int j) const { return {a[j], a[3 + j], a[6 + j]}; }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

inline constexpr Mat3 transpose(const Mat3& m) {
  Mat3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = m(j, i);
  return t;
}

inline constexpr Mat3 operator*(const Mat3& l, const Mat3& r) {
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += l(i, k) * r(k, j);
      out(i, j) = s;
    }
  return out;
}

inline constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {dot(m.row(0), v), dot(m.row(1), v), dot(m.row(2), v)};
}

inline constexpr Mat3 operator+(const Mat3& l, const Mat3& r) {
  Mat3 out;
  for (int i = 0; i < 9; ++i) out.a[i] = l.a[i] + r.a[i];
  return out;
}

inline constexpr Mat3 operator-(const Mat3& l, const Mat3& r) {
  Mat3 out;
  for (int i = 0; i < 9; ++i) out.a[i] = l.a[i] - r.a[i];
  return out;
}

inline constexpr Mat3 operator*(double s, const Mat3& m) {
  Mat3 out;
  for (int i = 0; i < 9; ++i) out.a[i] = s * m.a[i];
  return out;
}

inline constexpr double determinant(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

inline constexpr double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

inline double frobenius_norm(const Mat3& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

inline double frobenius_distance(const Mat3& a, const Mat3& b) { return frobenius_norm(a - b); }

inline Mat3 outer(const Vec3& u, const Vec3& v) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = u[i] * v[j];
  return m;
}

/// Symmetric 3x3 matrix stored as its upper triangle (xx, xy, xz, yy, yz, zz).
struct SymMat3 {
  std::array<double, 6> u{};

  constexpr SymMat3() = default;
  constexpr SymMat3(double xx, double xy, double xz, double yy, double yz, double zz)
      : u{xx, xy, xz, yy, yz, zz} {}

  /// Symmetrizes `m` as (m + m^T) / 2.
  static constexpr SymMat3 from(const Mat3& m) {
    return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(0, 2) + m(2, 0)),
            m(1, 1), 0.5 * (m(1, 2) + m(2, 1)), m(2, 2)};
  }
  static constexpr SymMat3 diagonal(double d0, double d1, double d2) {
    return {d0, 0, 0, d1, 0, d2};
  }

  constexpr double operator()(int i, int j) const {
    if (i > j) std::swap(i, j);
    constexpr int base[3] = {0, 3, 5};
    return u[base[i] + (j - i)];
  }

  constexpr Mat3 full() const {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  constexpr double trace() const { return u[0] + u[3] + u[5]; }
  constexpr Vec3 diag() const { return {u[0], u[3], u[5]}; }

  /// v^T S v.
  constexpr double quadratic(const Vec3& v) const {
    return u[0] * v.x * v.x + u[3] * v.y * v.y + u[5] * v.z * v.z +
           2.0 * (u[1] * v.x * v.y + u[2] * v.x * v.z + u[4] * v.y * v.z);
  }

  friend constexpr bool operator==(const SymMat3&, const SymMat3&) = default;
};

inline double frobenius_distance(const SymMat3& a, const SymMat3& b) {
  const auto& x = a.u;
  const auto& y = b.u;
  auto sq = [](double v) { return v * v; };
  return std::sqrt(sq(x[0] - y[0]) + sq(x[3] - y[3]) + sq(x[5] - y[5]) +
                   2.0 * (sq(x[1] - y[1]) + sq(x[2] - y[2]) + sq(x[4] - y[4])));
}

/// Proper rotation (Q^T Q = I, det Q = +1).
class Rotation3 {
 public:
  static constexpr double kTolerance = 1e-10;

  constexpr Rotation3() : m_(Mat3::identity()) {}

  /// Validates orthogonality and orientation; throws std::invalid_argument.
  static Rotation3 from_matrix(const Mat3& m) {
    if (!is_rotation(m)) throw std::invalid_argument("matrix is not a proper rotation");
    return Rotation3(m);
  }
  static bool is_rotation(const Mat3& m, double tol = kTolerance) {
    return frobenius_distance(transpose(m) * m, Mat3::identity()) <= tol &&
           std::abs(determinant(m) - 1.0) <= tol;
  }

  constexpr const Mat3& matrix() const { return m_; }
  constexpr double operator()(int i, int j) const { return m_(i, j); }
  constexpr Vec3 row(int i) const { return m_.row(i); }
  constexpr Vec3 col(int j) const { return m_.col(j); }
  constexpr Rotation3 transposed() const { return Rotation3(transpose(m_)); }

  friend constexpr Rotation3 operator*(const Rotation3& a, const Rotation3& b) {
    return Rotation3(a.m_ * b.m_);
  }
  friend constexpr bool operator==(const Rotation3&, const Rotation3&) = default;

 private:
  constexpr explicit Rotation3(const Mat3& m) : m_(m) {}
  friend struct RotationAccess;
  Mat3 m_;
};

// Construction path for matrices that are rotations by construction.
struct RotationAccess {
  static constexpr Rotation3 make(const Mat3& m) { return Rotation3(m); }
};

/// R S R^T for a symmetric S.
inline SymMat3 conjugate(const Rotation3& r, const SymMat3& s) {
  return SymMat3::from(r.matrix() * s.full() * transpose(r.matrix()));
}

/// Q^T diag(d) Q.
inline SymMat3 oriented(const Rotation3& q, double d0, double d1, double d2) {
  return conjugate(q.transposed(), SymMat3::diagonal(d0, d1, d2));
}

struct SymEig {
  std::array<double, 3> values;  // descending
  Rotation3 basis;               // rows are eigenvectors: basis * m * basis^T = diag(values)
};

/// Cyclic Jacobi eigendecomposition. Throws NumericalError after 64 sweeps
/// without reaching off-diagonal mass <= 1e-13 * ||m||_F.
inline SymEig sym_eig(const SymMat3& s) {
  Mat3 a = s.full();
  for (double v : a.a)
    if (!std::isfinite(v)) throw NumericalError("sym_eig: non-finite input");
  Mat3 v = Mat3::identity();
  const double scale = frobenius_norm(a);
  const double tol = 1e-13 * std::max(scale, 1e-300);

  auto off = [&a] {
    return std::sqrt(2.0 * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2)));
  };

  int sweep = 0;
  for (; sweep < 64 && off() > tol; ++sweep) {
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        // A <- J^T A J with J the Givens rotation in the (p, q) plane.
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  if (off() > tol) throw NumericalError("sym_eig: Jacobi sweeps did not converge");

  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&a](int i, int j) { return a(i, i) > a(j, j); });

  SymEig out;
  Mat3 basis;
  for (int r = 0; r < 3; ++r) {
    out.values[r] = a(order[r], order[r]);
    for (int k = 0; k < 3; ++k) basis(r, k) = v(k, order[r]);
  }
  if (determinant(basis) < 0.0)
    for (int k = 0; k < 3; ++k) basis(2, k) = -basis(2, k);
  out.basis = RotationAccess::make(basis);
  return out;
}

/// Uniform point on S^2 via (u, sqrt(1-u^2) sin 2pi v, sqrt(1-u^2) cos 2pi v).
template <class Rng>
Vec3 sphere_uniform(Rng& rng) {
  std::uniform_real_distribution<double> uu(-1.0, 1.0);
  std::uniform_real_distribution<double> vv(0.0, 1.0);
  const double u = uu(rng);
  const double phi = 2.0 * std::numbers::pi * vv(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
  return {u, r * std::sin(phi), r * std::cos(phi)};
}

/// Rotation matrix of a unit quaternion (w, x, y, z).
inline Rotation3 rotation_from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Mat3 m{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
          2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
  return RotationAccess::make(m);
}

/// Haar-random rotation: normalized Gaussian quaternion.
template <class Rng>
Rotation3 haar_rotation(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  double w, x, y, z, n2;
  do {
    w = g(rng);
    x = g(rng);
    y = g(rng);
    z = g(rng);
    n2 = w * w + x * x + y * y + z * z;
  } while (n2 < 1e-200);
  return rotation_from_quaternion(w, x, y, z);
}

}  // namespace aqec

#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace dlca {

using cplx = std::complex<double>;

// Dense row-major 2x2 complex matrix. Everything the simulator touches is a
// two-level system, so all arithmetic is inlined and allocation-free.
struct Mat2 {
  std::array<cplx, 4> a{};  // [m00, m01, m10, m11]

  constexpr Mat2() = default;
  constexpr Mat2(cplx m00, cplx m01, cplx m10, cplx m11) : a{m00, m01, m10, m11} {}

  constexpr cplx& operator()(int r, int c) { return a[2 * r + c]; }
  constexpr const cplx& operator()(int r, int c) const { return a[2 * r + c]; }

  static constexpr Mat2 zero() { return {}; }
  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  Mat2& operator+=(const Mat2& o) {
    for (int i = 0; i < 4; ++i) a[i] += o.a[i];
    return *this;
  }
  Mat2& operator-=(const Mat2& o) {
    for (int i = 0; i < 4; ++i) a[i] -= o.a[i];
    return *this;
  }
  Mat2& operator*=(cplx s) {
    for (auto& x : a) x *= s;
    return *this;
  }
  Mat2& operator*=(double s) {
    for (auto& x : a) x *= s;
    return *this;
  }

  friend Mat2 operator+(Mat2 l, const Mat2& r) { return l += r; }
  friend Mat2 operator-(Mat2 l, const Mat2& r) { return l -= r; }
  friend Mat2 operator*(Mat2 m, cplx s) { return m *= s; }
  friend Mat2 operator*(cplx s, Mat2 m) { return m *= s; }
  friend Mat2 operator*(Mat2 m, double s) { return m *= s; }
  friend Mat2 operator*(double s, Mat2 m) { return m *= s; }

  friend Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.a[0] * r.a[0] + l.a[1] * r.a[2], l.a[0] * r.a[1] + l.a[1] * r.a[3],
            l.a[2] * r.a[0] + l.a[3] * r.a[2], l.a[2] * r.a[1] + l.a[3] * r.a[3]};
  }
};

inline Mat2 adjoint(const Mat2& m) {
  return {std::conj(m.a[0]), std::conj(m.a[2]), std::conj(m.a[1]), std::conj(m.a[3])};
}

inline cplx trace(const Mat2& m) { return m.a[0] + m.a[3]; }

inline Mat2 commutator(const Mat2& l, const Mat2& r) { return l * r - r * l; }

inline Mat2 anticommutator(const Mat2& l, const Mat2& r) { return l * r + r * l; }

inline double frobenius_norm(const Mat2& m) {
  double s = 0.0;
  for (const auto& x : m.a) s += std::norm(x);
  return std::sqrt(s);
}

inline double max_abs_entry(const Mat2& m) {
  double s = 0.0;
  for (const auto& x : m.a) s = std::max(s, std::abs(x));
  return s;
}

inline bool all_finite(const Mat2& m) {
  for (const auto& x : m.a)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

inline double hermiticity_defect(const Mat2& m) { return max_abs_entry(m - adjoint(m)); }

// Symmetric part (kills round-off drift away from Hermiticity).
inline Mat2 hermitize(const Mat2& m) {
  Mat2 h = m + adjoint(m);
  h *= 0.5;
  return h;
}

// Eigenvalues of a Hermitian 2x2 by the closed-form quadratic.
inline std::array<double, 2> hermitian_eigenvalues(const Mat2& m) {
  const double mean = 0.5 * (m.a[0].real() + m.a[3].real());
  const double half_gap = 0.5 * (m.a[0].real() - m.a[3].real());
  const double r = std::sqrt(half_gap * half_gap + std::norm(m.a[1]));
  return {mean - r, mean + r};
}

inline Mat2 sigma_x() { return {0.0, 1.0, 1.0, 0.0}; }
inline Mat2 sigma_y() { return {0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0}; }
inline Mat2 sigma_z() { return {1.0, 0.0, 0.0, -1.0}; }

}  // namespace dlca

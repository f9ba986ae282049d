#pragma once

// First-order dual numbers for forward-mode differentiation.
//
// Dual<T> carries a value and a single infinitesimal part. Nesting
// (Dual<Dual<double>>) gives higher derivatives: each level adds one
// independent perturbation, so there is no perturbation confusion as long as
// every derivative pass wraps the previous scalar type in a new layer.
//
//   auto y = f(Dual<double>(x, 1.0));
//   y.real == f(x), y.eps == f'(x)

#include <cmath>
#include <ostream>
#include <type_traits>

namespace phsurgery {

template <typename T>
struct Dual {
  T real{};
  T eps{};

  constexpr Dual() = default;
  constexpr Dual(double r) : real(r), eps(0.0) {}  // NOLINT: implicit lift
  constexpr Dual(const T& r, const T& e) : real(r), eps(e) {}

  template <typename U = T, typename = std::enable_if_t<!std::is_same_v<U, double>>>
  constexpr Dual(const T& r) : real(r), eps(0.0) {}  // NOLINT: implicit lift

  Dual& operator+=(const Dual& o) { real += o.real; eps += o.eps; return *this; }
  Dual& operator-=(const Dual& o) { real -= o.real; eps -= o.eps; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

template <typename T> struct is_dual : std::false_type {};
template <typename T> struct is_dual<Dual<T>> : std::true_type {};
template <typename T> inline constexpr bool is_dual_v = is_dual<T>::value;

/// Innermost real value of a (possibly nested) scalar.
inline constexpr double value(double x) { return x; }
template <typename T>
constexpr double value(const Dual<T>& x) { return value(x.real); }

/// Largest absolute component over all nesting levels; used as an error norm.
inline double max_abs(double x) { return std::abs(x); }
template <typename T>
double max_abs(const Dual<T>& x) {
  const double a = max_abs(x.real);
  const double b = max_abs(x.eps);
  return a > b ? a : b;
}

template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a) { return {-a.real, -a.eps}; }
template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a) { return a; }

template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.real + b.real, a.eps + b.eps}; }
template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.real - b.real, a.eps - b.eps}; }
template <typename T>
constexpr Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.real * b.real, a.real * b.eps + a.eps * b.real};
}
template <typename T>
constexpr Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T q = a.real / b.real;
  return {q, (a.eps - q * b.eps) / b.real};
}

template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a, double b) { return {a.real + b, a.eps}; }
template <typename T>
constexpr Dual<T> operator+(double a, const Dual<T>& b) { return {a + b.real, b.eps}; }
template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a, double b) { return {a.real - b, a.eps}; }
template <typename T>
constexpr Dual<T> operator-(double a, const Dual<T>& b) { return {a - b.real, -b.eps}; }
template <typename T>
constexpr Dual<T> operator*(const Dual<T>& a, double b) { return {a.real * b, a.eps * b}; }
template <typename T>
constexpr Dual<T> operator*(double a, const Dual<T>& b) { return {a * b.real, a * b.eps}; }
template <typename T>
constexpr Dual<T> operator/(const Dual<T>& a, double b) { return {a.real / b, a.eps / b}; }
template <typename T>
constexpr Dual<T> operator/(double a, const Dual<T>& b) {
  const T q = a / b.real;
  return {q, -q * b.eps / b.real};
}

// Comparisons act on the innermost value only.
template <typename T> constexpr bool operator<(const Dual<T>& a, double b) { return value(a) < b; }
template <typename T> constexpr bool operator>(const Dual<T>& a, double b) { return value(a) > b; }
template <typename T> constexpr bool operator<=(const Dual<T>& a, double b) { return value(a) <= b; }
template <typename T> constexpr bool operator>=(const Dual<T>& a, double b) { return value(a) >= b; }
template <typename T> constexpr bool operator<(const Dual<T>& a, const Dual<T>& b) { return value(a) < value(b); }
template <typename T> constexpr bool operator>(const Dual<T>& a, const Dual<T>& b) { return value(a) > value(b); }

template <typename T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.real);
  return {e, e * a.eps};
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.real), a.eps / a.real};
}

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const T s = sqrt(a.real);
  return {s, a.eps / (2.0 * s)};
}

template <typename T>
Dual<T> pow(const Dual<T>& a, double p) {
  using std::pow;
  const T base = pow(a.real, p - 1.0);
  return {base * a.real, p * base * a.eps};
}

template <typename T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {sin(a.real), cos(a.real) * a.eps};
}

template <typename T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {cos(a.real), -(sin(a.real) * a.eps)};
}

template <typename T>
Dual<T> abs(const Dual<T>& a) {
  return value(a) < 0.0 ? -a : a;
}

template <typename T>
std::ostream& operator<<(std::ostream& os, const Dual<T>& a) {
  return os << "(" << a.real << " + " << a.eps << "ε)";
}

/// Lift x to Dual<S> with infinitesimal part `seed`.
template <typename S>
constexpr Dual<S> seeded(const S& x, double seed) { return Dual<S>(x, S(seed)); }

}  // namespace phsurgery

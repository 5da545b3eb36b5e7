#pragma once

#include <cmath>

namespace recip {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Forward-mode dual number. Nesting Dual<Dual<double>> yields mixed second
// derivatives.
template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit from constants
  constexpr Dual(T value, T deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
};

template <class T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }

template <class T> Dual<T> operator+(Dual<T> a, double b) { return a += Dual<T>(b); }
template <class T> Dual<T> operator+(double a, Dual<T> b) { return b += Dual<T>(a); }
template <class T> Dual<T> operator-(Dual<T> a, double b) { return a -= Dual<T>(b); }
template <class T> Dual<T> operator-(double a, const Dual<T>& b) { return Dual<T>(a) - b; }
template <class T> Dual<T> operator*(Dual<T> a, double b) { a.v *= b; a.d *= b; return a; }
template <class T> Dual<T> operator*(double a, Dual<T> b) { return b * a; }
template <class T> Dual<T> operator/(Dual<T> a, double b) { a.v /= b; a.d /= b; return a; }

template <class T> Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return {e, a.d * e};
}

template <class T> Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.v), a.d / a.v};
}

template <class T> Dual<T> sigmoid(const Dual<T>& a) {
  const T s = sigmoid(a.v);
  return {s, a.d * s * (1.0 - s)};
}

inline double value_of(double x) { return x; }
template <class T> double value_of(const Dual<T>& a) { return value_of(a.v); }

}  // namespace recip

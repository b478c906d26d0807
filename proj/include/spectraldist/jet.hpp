#pragma once

#include <array>
#include <cmath>

namespace spectraldist {

// Truncated Taylor expansion f(t0 + e) = sum c[k] e^k, k < N.
template <int N>
struct Jet {
  std::array<double, N> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double t0, double slope = 1.0) {
    Jet j;
    j.c[0] = t0;
    if constexpr (N > 1) j.c[1] = slope;
    return j;
  }

  bool is_zero() const {
    for (double v : c)
      if (v != 0.0) return false;
    return true;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < N; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (int k = 0; k < N; ++k) c[k] *= s;
    return *this;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) {
    for (int k = 0; k < N; ++k) a.c[k] -= b.c[k];
    return a;
  }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int i = 0; i < N; ++i) {
      if (a.c[i] == 0.0) continue;
      for (int j = 0; i + j < N; ++j) r.c[i + j] += a.c[i] * b.c[j];
    }
    return r;
  }
};

template <int N>
Jet<N> reciprocal(const Jet<N>& f) {
  Jet<N> r;
  r.c[0] = 1.0 / f.c[0];
  for (int n = 1; n < N; ++n) {
    double s = 0.0;
    for (int k = 1; k <= n; ++k) s += f.c[k] * r.c[n - k];
    r.c[n] = -s * r.c[0];
  }
  return r;
}

template <int N>
Jet<N> exp(const Jet<N>& f) {
  Jet<N> e;
  e.c[0] = std::exp(f.c[0]);
  if (e.c[0] == 0.0) return e;
  for (int n = 1; n < N; ++n) {
    double s = 0.0;
    for (int k = 1; k <= n; ++k) s += k * f.c[k] * e.c[n - k];
    e.c[n] = s / n;
  }
  return e;
}

}  // namespace spectraldist

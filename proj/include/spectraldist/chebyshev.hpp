#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "quadrature.hpp"

namespace spectraldist {

// Chebyshev series on [a, b]; zero outside.
struct Chebyshev {
  double a = 0.0, b = 0.0;
  std::vector<cplx> c;

  cplx operator()(double x) const {
    if (c.empty() || x < a || x > b) return 0.0;
    double t = (2.0 * x - a - b) / (b - a);
    cplx b1 = 0.0, b2 = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) {
      cplx tmp = 2.0 * t * b1 - b2 + c[k];
      b2 = b1;
      b1 = tmp;
    }
    return t * b1 - b2 + c[0];
  }
  Fn1 fn() const {
    return Fn1{[s = *this](double x) { return s(x); }, std::nextafter(a, -1e300), std::nextafter(b, 1e300)};
  }
};

inline std::vector<double> lobatto_points(int n) {
  std::vector<double> t(n + 1);
  for (int j = 0; j <= n; ++j) t[j] = std::cos(std::numbers::pi * j / n);
  return t;
}

// coefficients from samples at cos(pi j / n), j = 0..n
inline std::vector<cplx> lobatto_coefficients(const std::vector<cplx>& f) {
  const int n = static_cast<int>(f.size()) - 1;
  std::vector<cplx> c(n + 1);
  for (int k = 0; k <= n; ++k) {
    cplx s = 0.5 * (f[0] + f[n] * (k % 2 ? -1.0 : 1.0));
    for (int j = 1; j < n; ++j) s += f[j] * std::cos(std::numbers::pi * double(j) * k / n);
    c[k] = s * (2.0 / n);
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return c;
}

struct ChebyshevOptions {
  double tol = 1e-11;
  int n_min = 16, n_max = 1024;
};

// Fits m functions at once; f(x) returns std::vector<cplx> of size m.
template <class F>
std::vector<Chebyshev> chebyshev_fit(F&& f, double a, double b, int m, const ChebyshevOptions& opt = {}) {
  auto map = [&](double t) { return 0.5 * (a + b) + 0.5 * (b - a) * t; };
  int n = opt.n_min;
  std::vector<std::vector<cplx>> vals(m, std::vector<cplx>(n + 1));
  auto t0 = lobatto_points(n);
  for (int j = 0; j <= n; ++j) {
    auto v = f(map(t0[j]));
    for (int i = 0; i < m; ++i) vals[i][j] = v[i];
  }
  std::vector<Chebyshev> out(m);
  while (true) {
    bool done = true;
    for (int i = 0; i < m; ++i) {
      auto c = lobatto_coefficients(vals[i]);
      double scale = 0.0;
      for (const auto& v : vals[i]) scale = std::max(scale, std::abs(v));
      double tail = 0.0;
      for (int k = n - 4; k <= n; ++k) tail = std::max(tail, std::abs(c[k]));
      if (tail > opt.tol * std::max(scale, 1e-300) && scale > 0.0) done = false;
      out[i] = {a, b, c};
    }
    if (done || n >= opt.n_max) break;
    int n2 = 2 * n;
    auto t2 = lobatto_points(n2);
    std::vector<std::vector<cplx>> nv(m, std::vector<cplx>(n2 + 1));
    for (int j = 0; j <= n2; ++j) {
      if (j % 2 == 0) {
        for (int i = 0; i < m; ++i) nv[i][j] = vals[i][j / 2];
        continue;
      }
      auto v = f(map(t2[j]));
      for (int i = 0; i < m; ++i) nv[i][j] = v[i];
    }
    vals = std::move(nv);
    n = n2;
  }
  for (auto& ch : out) {
    double mx = 0.0;
    for (const auto& v : ch.c) mx = std::max(mx, std::abs(v));
    while (ch.c.size() > 1 && std::abs(ch.c.back()) <= 1e-3 * opt.tol * mx) ch.c.pop_back();
  }
  return out;
}

template <class F>
Chebyshev chebyshev_fit1(F&& f, double a, double b, const ChebyshevOptions& opt = {}) {
  return chebyshev_fit([&](double x) { return std::vector<cplx>{cplx(f(x))}; }, a, b, 1, opt)[0];
}

}  // namespace spectraldist

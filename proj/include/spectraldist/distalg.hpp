#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "quadrature.hpp"

namespace spectraldist {

struct Rect {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

  bool contains(cplx z) const { return z.real() >= x0 && z.real() <= x1 && z.imag() >= y0 && z.imag() <= y1; }
  bool empty() const { return !(x0 < x1 && y0 < y1); }
  Rect hull(const Rect& o) const {
    if (empty()) return o;
    if (o.empty()) return *this;
    return {std::min(x0, o.x0), std::max(x1, o.x1), std::min(y0, o.y0), std::max(y1, o.y1)};
  }
};

// phi(x + iy) = sum coef * fx(x) * fy(y)
class TestFunction2D {
 public:
  struct Term {
    cplx coef = 1.0;
    TestFunction1D fx, fy;
  };

  TestFunction2D() = default;
  TestFunction2D(TestFunction1D fx, TestFunction1D fy, cplx coef = 1.0) {
    terms_.push_back({coef, std::move(fx), std::move(fy)});
  }

  const std::vector<Term>& terms() const { return terms_; }

  Rect support() const {
    Rect r;
    for (const auto& t : terms_) {
      if (t.fx.empty() || t.fy.empty()) continue;
      r = r.hull(Rect{t.fx.lo(), t.fx.hi(), t.fy.lo(), t.fy.hi()});
    }
    return r;
  }

  cplx operator()(cplx z) const {
    cplx s = 0.0;
    for (const auto& t : terms_) {
      double a = t.fx(z.real());
      if (a == 0.0) continue;
      s += t.coef * a * t.fy(z.imag());
    }
    return s;
  }

  // d^k phi with d = (d_x - i d_y) / 2
  cplx dz(int k, cplx z) const { return mixed(k, z, cplx(0.0, -1.0)); }
  cplx dzbar(int k, cplx z) const { return mixed(k, z, cplx(0.0, 1.0)); }
  cplx dbar(cplx z) const { return dzbar(1, z); }

  TestFunction2D times_z() const {
    TestFunction2D r;
    for (const auto& t : terms_) {
      r.terms_.push_back({t.coef, t.fx.times_t(), t.fy});
      r.terms_.push_back({t.coef * cplx(0.0, 1.0), t.fx, t.fy.times_t()});
    }
    return r;
  }

  TestFunction2D& operator+=(const TestFunction2D& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  friend TestFunction2D operator+(TestFunction2D a, const TestFunction2D& b) { return a += b; }
  friend TestFunction2D operator*(cplx s, TestFunction2D f) {
    for (auto& t : f.terms_) t.coef *= s;
    return f;
  }
  friend TestFunction2D operator*(const TestFunction2D& f, const TestFunction2D& g) {
    TestFunction2D r;
    for (const auto& a : f.terms_)
      for (const auto& b : g.terms_) {
        Term t{a.coef * b.coef, a.fx * b.fx, a.fy * b.fy};
        if (t.fx.empty() || t.fy.empty()) continue;
        r.terms_.push_back(std::move(t));
      }
    return r;
  }

 private:
  cplx mixed(int k, cplx z, cplx iy) const {
    if (k < 0 || k > kMaxDerivative)
      throw CapabilityError("derivative order " + std::to_string(k) + " exceeds supported order 6");
    cplx s = 0.0;
    for (const auto& t : terms_) {
      Jet8 jx = t.fx.jet(z.real());
      if (jx.is_zero()) continue;
      Jet8 jy = t.fy.jet(z.imag());
      if (jy.is_zero()) continue;
      cplx acc = 0.0;
      for (int j = 0; j <= k; ++j)
        acc += binomial(k, j) * std::pow(iy, k - j) * factorial(j) * jx.c[j] * factorial(k - j) * jy.c[k - j];
      s += t.coef * acc / std::pow(2.0, k);
    }
    return s;
  }

  std::vector<Term> terms_;
};

inline TestFunction2D make_product_bump(cplx center, double rx, double ry) {
  return TestFunction2D(make_bump(center.real(), rx), make_bump(center.imag(), ry));
}

inline cplx dbar(const TestFunction2D& phi, cplx z) { return phi.dbar(z); }

struct PolarGrid {
  int rho_panels = 6;
  int rho_order = 16;
  int theta_points = 128;

  PolarGrid refined() const { return {rho_panels * 2, rho_order, theta_points * 2}; }
};

// Integrals of fn(z) / (z - z0)^(k+1), k = 0..kmax, over the plane minus a
// vanishing disc around z0, in polar coordinates about z0. After the angular
// integral the radial integrand is regular at rho = 0, so no explicit epsilon
// is needed. abs_sum receives the sum of |terms| for k = kmax.
template <class F>
std::vector<cplx> polar_moments(F&& fn, cplx z0, int kmax, const Rect& supp, const PolarGrid& g = {},
                                double* abs_sum = nullptr) {
  std::vector<cplx> total(kmax + 1, 0.0);
  if (abs_sum) *abs_sum = 0.0;
  if (supp.empty()) return total;
  double dx = std::max({supp.x0 - z0.real(), 0.0, z0.real() - supp.x1});
  double dy = std::max({supp.y0 - z0.imag(), 0.0, z0.imag() - supp.y1});
  double dmin = std::hypot(dx, dy);
  const std::array<cplx, 4> corners{cplx(supp.x0, supp.y0), cplx(supp.x1, supp.y0), cplx(supp.x1, supp.y1),
                                    cplx(supp.x0, supp.y1)};
  double dmax = 0.0;
  for (cplx c : corners) dmax = std::max(dmax, std::abs(c - z0));

  std::vector<double> th, thw;
  if (dmin == 0.0) {
    int n = g.theta_points;
    for (int j = 0; j < n; ++j) {
      th.push_back(2.0 * std::numbers::pi * j / n);
      thw.push_back(2.0 * std::numbers::pi / n);
    }
  } else {
    cplx mid(0.5 * (supp.x0 + supp.x1), 0.5 * (supp.y0 + supp.y1));
    double ac = std::arg(mid - z0), lo = 0.0, hi = 0.0;
    for (cplx c : corners) {
      double d = std::remainder(std::arg(c - z0) - ac, 2.0 * std::numbers::pi);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const QuadratureRule& r16 = gauss_legendre(16);
    int panels = std::max(1, g.theta_points / 16);
    double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      QuadratureRule m = r16.mapped(ac + lo + p * h, ac + lo + (p + 1) * h);
      th.insert(th.end(), m.nodes.begin(), m.nodes.end());
      thw.insert(thw.end(), m.weights.begin(), m.weights.end());
    }
  }
  std::size_t nt = th.size();
  std::vector<cplx> ei(nt), fv(nt);
  std::vector<std::vector<cplx>> kernel(kmax + 1, std::vector<cplx>(nt));
  for (std::size_t j = 0; j < nt; ++j) {
    ei[j] = std::polar(1.0, th[j]);
    for (int k = 0; k <= kmax; ++k) kernel[k][j] = thw[j] * std::polar(1.0, -(k + 1) * th[j]);
  }
  const QuadratureRule& rr = gauss_legendre(g.rho_order);
  double h = (dmax - dmin) / g.rho_panels;
  for (int p = 0; p < g.rho_panels; ++p) {
    QuadratureRule m = rr.mapped(dmin + p * h, dmin + (p + 1) * h);
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      double rho = m.nodes[i];
      for (std::size_t j = 0; j < nt; ++j) fv[j] = cplx(fn(z0 + rho * ei[j]));
      for (int k = 0; k <= kmax; ++k) {
        cplx ang = 0.0;
        double mag = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
          cplx v = kernel[k][j] * fv[j];
          ang += v;
          if (k == kmax) mag += std::abs(v);
        }
        double wr = m.weights[i] * std::pow(rho, -k);
        total[k] += wr * ang;
        if (k == kmax && abs_sum) *abs_sum += wr * mag;
      }
    }
  }
  return total;
}

template <class F>
cplx polar_moment(F&& fn, cplx z0, int k, const Rect& supp, const PolarGrid& g = {}) {
  return polar_moments(fn, z0, k, supp, g).back();
}

struct PolarOptions {
  PolarGrid grid{};
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int max_levels = 3;
};

template <class F>
std::vector<Estimate<cplx>> polar_moments_adaptive(F&& fn, cplx z0, int kmax, const Rect& supp,
                                                   const PolarOptions& opt = {}) {
  PolarGrid g = opt.grid;
  std::vector<cplx> prev = polar_moments(fn, z0, kmax, supp, g);
  for (int level = 0; level < opt.max_levels; ++level) {
    g = g.refined();
    double mag = 0.0;
    std::vector<cplx> cur = polar_moments(fn, z0, kmax, supp, g, &mag);
    double floor = 64.0 * std::numeric_limits<double>::epsilon() * mag;
    bool ok = true;
    std::vector<Estimate<cplx>> out;
    for (int k = 0; k <= kmax; ++k) {
      double err = std::abs(cur[k] - prev[k]);
      ok = ok && err <= std::max({opt.abs_tol, opt.rel_tol * std::abs(cur[k]), floor});
      out.push_back({cur[k], err});
    }
    if (ok) return out;
    prev = cur;
  }
  throw AccuracyError("polar quadrature did not converge", prev.back(), 0.0);
}

template <class F>
Estimate<cplx> polar_moment_adaptive(F&& fn, cplx z0, int k, const Rect& supp, const PolarOptions& opt = {}) {
  return polar_moments_adaptive(fn, z0, k, supp, opt).back();
}

// (r * phi)(z) = integral of phi(w) / (z - w) d^2 w
inline cplx cauchy_transform(const TestFunction2D& phi, cplx z, const PolarOptions& opt = {}) {
  return -polar_moment_adaptive(phi, z, 0, phi.support(), opt).value;
}

inline cplx cauchy_transform_fixed(const TestFunction2D& phi, cplx z, const PolarGrid& g) {
  return -polar_moment(phi, z, 0, phi.support(), g);
}

struct DistAtom {
  enum class Kind { DeltaDeriv, PVPower, Density2D };
  Kind kind = Kind::DeltaDeriv;
  cplx point = 0.0;
  int order = 0;
  cplx coefficient = 1.0;
  std::function<cplx(cplx)> density;
  Rect rect;
};

inline DistAtom delta_deriv(int k, cplx z0, cplx coef = 1.0) { return {DistAtom::Kind::DeltaDeriv, z0, k, coef, {}, {}}; }
inline DistAtom pv_power(int k, cplx z0, cplx coef = 1.0) { return {DistAtom::Kind::PVPower, z0, k, coef, {}, {}}; }

template <class F>
cplx pv_power_apply(int k, cplx z0, F&& fn, const Rect& supp, const PolarOptions& opt = {}) {
  if (k < 0 || k > kMaxDerivative) throw CapabilityError("PV power order exceeds supported order 6");
  return polar_moment_adaptive(fn, z0, k, supp, opt).value;
}

// Tensor Gauss-Legendre over a rectangle with one refinement comparison.
template <class F>
Estimate<cplx> integrate_rect(F&& fn, const Rect& r, int panels = 8, double rel_tol = 1e-9, int max_levels = 3) {
  if (r.empty()) return {0.0, 0.0};
  const QuadratureRule& g = gauss_legendre(16);
  auto run = [&](int n) {
    double hx = (r.x1 - r.x0) / n, hy = (r.y1 - r.y0) / n;
    cplx s = 0.0;
    for (int px = 0; px < n; ++px) {
      QuadratureRule mx = g.mapped(r.x0 + px * hx, r.x0 + (px + 1) * hx);
      for (int py = 0; py < n; ++py) {
        QuadratureRule my = g.mapped(r.y0 + py * hy, r.y0 + (py + 1) * hy);
        for (std::size_t i = 0; i < mx.nodes.size(); ++i)
          for (std::size_t j = 0; j < my.nodes.size(); ++j)
            s += mx.weights[i] * my.weights[j] * cplx(fn(cplx(mx.nodes[i], my.nodes[j])));
      }
    }
    return s;
  };
  cplx prev = run(panels);
  double err = 0.0;
  for (int level = 0; level < max_levels; ++level) {
    panels *= 2;
    cplx cur = run(panels);
    err = std::abs(cur - prev);
    if (err <= std::max(1e-13, rel_tol * std::abs(cur))) return {cur, err};
    prev = cur;
  }
  throw AccuracyError("rectangle quadrature did not converge", prev, err);
}

inline cplx atom_apply(const DistAtom& atom, const TestFunction2D& phi, const PolarOptions& opt = {}) {
  if (atom.order < 0 || atom.order > kMaxDerivative) throw CapabilityError("atom order exceeds supported order 6");
  switch (atom.kind) {
    case DistAtom::Kind::DeltaDeriv:
      return atom.coefficient * ((atom.order % 2) ? -1.0 : 1.0) * phi.dz(atom.order, atom.point);
    case DistAtom::Kind::PVPower:
      return atom.coefficient * pv_power_apply(atom.order, atom.point, phi, phi.support(), opt);
    case DistAtom::Kind::Density2D: {
      Rect s = phi.support(), r = atom.rect;
      Rect in{std::max(s.x0, r.x0), std::min(s.x1, r.x1), std::max(s.y0, r.y0), std::min(s.y1, r.y1)};
      auto f = [&](cplx z) { return atom.density(z) * phi(z); };
      return atom.coefficient * integrate_rect(f, in).value;
    }
  }
  return 0.0;
}

// Integral of d^k phi / (z - z0), divided by k!. This is the closed form the
// annulus limit of PVPower(k) reduces to after k integrations by parts.
inline cplx pv_power_by_parts(int k, cplx z0, const TestFunction2D& phi, const PolarOptions& opt = {}) {
  auto f = [&](cplx z) { return phi.dz(k, z); };
  return pv_power_apply(0, z0, f, phi.support(), opt) / factorial(k);
}

struct PVProductResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_error = 0.0;
};

// Smeared form of P/(x-w) P/(y-w) = (P/(x-w) - P/(y-w)) / (y-x) + pi^2 d(x-w) d(y-w).
// The left side uses the product of the two eps-regularized principal values
// (x-w)/((x-w)^2+eps^2), extrapolated to eps = 0.
inline PVProductResult pv_product_check(const TestFunction1D& f, const TestFunction1D& g, const TestFunction1D& h,
                                        const std::vector<double>& ladder = default_epsilon_ladder()) {
  IntegrateOptions inner;
  inner.rel_tol = 1e-11;
  IntegrateOptions outer;
  outer.rel_tol = 1e-10;
  auto cauchy = [&](const TestFunction1D& u, double w, double eps) {
    std::vector<double> br{u.lo(), u.hi()};
    for (double k : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
      double t = w + k * eps;
      if (t > u.lo() && t < u.hi()) br.push_back(t);
    }
    cplx s(0.0, eps);
    return integrate_estimate([&](double x) { return cplx(u(x)) / (x - w + s); }, br, inner).value;
  };
  std::vector<cplx> vals;
  for (double eps : ladder) {
    auto integrand = [&](double w) { return h(w) * cauchy(f, w, eps).real() * cauchy(g, w, eps).real(); };
    vals.push_back(integrate_estimate(integrand, {h.lo(), h.hi()}, outer).value);
  }
  Estimate<cplx> lhs = richardson_zero(ladder, vals);

  IntegrateOptions pvo;
  pvo.rel_tol = 1e-11;
  TestFunction1D hh = h;
  auto hilbert = [&](double x) { return pv_integrate(hh, x, hh.lo(), hh.hi(), pvo).value.real(); };
  auto hilbert_d = [&](double x) {
    return pv_integrate([&](double w) { return hh.deriv(1, w); }, x, hh.lo(), hh.hi(), pvo).value.real();
  };
  auto tensor = [&](int panels) {
    const QuadratureRule& r = gauss_legendre(16);
    auto nodes = [&](const TestFunction1D& u) {
      QuadratureRule all;
      double step = (u.hi() - u.lo()) / panels;
      for (int p = 0; p < panels; ++p) {
        QuadratureRule m = r.mapped(u.lo() + p * step, u.lo() + (p + 1) * step);
        all.nodes.insert(all.nodes.end(), m.nodes.begin(), m.nodes.end());
        all.weights.insert(all.weights.end(), m.weights.begin(), m.weights.end());
      }
      return all;
    };
    QuadratureRule nx = nodes(f), ny = nodes(g);
    std::vector<double> hx, hy, fx, gy;
    for (double x : nx.nodes) {
      hx.push_back(hilbert(x));
      fx.push_back(f(x));
    }
    for (double y : ny.nodes) {
      hy.push_back(hilbert(y));
      gy.push_back(g(y));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < nx.nodes.size(); ++i) {
      if (fx[i] == 0.0) continue;
      for (std::size_t j = 0; j < ny.nodes.size(); ++j) {
        if (gy[j] == 0.0) continue;
        double x = nx.nodes[i], y = ny.nodes[j];
        double q = std::abs(x - y) < 1e-7 ? -hilbert_d(0.5 * (x + y)) : (hx[i] - hy[j]) / (y - x);
        s += nx.weights[i] * ny.weights[j] * fx[i] * gy[j] * q;
      }
    }
    return s;
  };
  double lo = std::max({f.lo(), g.lo(), h.lo()}), hi = std::min({f.hi(), g.hi(), h.hi()});
  double delta = 0.0;
  if (lo < hi) delta = integrate([&](double x) { return f(x) * g(x) * h(x); }, lo, hi);
  double rhs = tensor(16) + std::numbers::pi * std::numbers::pi * delta;
  return {lhs.value.real(), rhs, lhs.error};
}

}  // namespace spectraldist

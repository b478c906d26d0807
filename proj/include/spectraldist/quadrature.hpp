#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <queue>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"
#include "jet.hpp"

namespace spectraldist {

using cplx = std::complex<double>;

inline constexpr int kMaxDerivative = 6;
inline constexpr int kJetSize = 8;
using Jet8 = Jet<kJetSize>;

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// One smooth factor: a bump exp(-1/(1-s^2)) on [a,b], or a plateau equal to 1
// on [a,b] with smooth ramps of width w on both sides.
struct Factor {
  enum class Kind { Bump, Plateau };
  Kind kind = Kind::Bump;
  double a = -1.0, b = 1.0, w = 0.0;

  double lo() const { return kind == Kind::Bump ? a : a - w; }
  double hi() const { return kind == Kind::Bump ? b : b + w; }

  double value(double t) const {
    if (t <= lo() || t >= hi()) return 0.0;
    if (kind == Kind::Bump) {
      double s = (2.0 * t - a - b) / (b - a);
      return std::exp(-1.0 / (1.0 - s * s));
    }
    if (t >= a && t <= b) return 1.0;
    double x = t < a ? (t - (a - w)) / w : ((b + w) - t) / w;
    double q = 1.0 / x - 1.0 / (1.0 - x);
    if (q > 700.0) return 0.0;
    return 1.0 / (1.0 + std::exp(q));
  }

  Jet8 jet(double t) const {
    if (t <= lo() || t >= hi()) return Jet8{};
    if (kind == Kind::Bump) {
      double r = 0.5 * (b - a);
      Jet8 s = Jet8::variable((t - 0.5 * (a + b)) / r, 1.0 / r);
      Jet8 u = Jet8::constant(1.0) - s * s;
      return exp(reciprocal(u) * -1.0);
    }
    if (t >= a && t <= b) return Jet8::constant(1.0);
    Jet8 x = t < a ? Jet8::variable((t - (a - w)) / w, 1.0 / w)
                   : Jet8::variable(((b + w) - t) / w, -1.0 / w);
    Jet8 q = reciprocal(x) - reciprocal(Jet8::constant(1.0) - x);
    if (q.c[0] > 700.0) return Jet8{};
    return reciprocal(Jet8::constant(1.0) + exp(q));
  }
};

// Finite sum of coefficient * polynomial(t) * product of factors.
class TestFunction1D {
 public:
  struct Term {
    double coef = 1.0;
    std::vector<double> poly{1.0};
    std::vector<Factor> factors;
    double lo = 0.0, hi = 0.0;
  };

  TestFunction1D() = default;
  explicit TestFunction1D(const Factor& f) {
    Term t;
    t.factors.push_back(f);
    t.lo = f.lo();
    t.hi = f.hi();
    terms_.push_back(std::move(t));
  }

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double lo() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& t : terms_) v = std::min(v, t.lo);
    return terms_.empty() ? 0.0 : v;
  }
  double hi() const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms_) v = std::max(v, t.hi);
    return terms_.empty() ? 0.0 : v;
  }
  double center() const { return 0.5 * (lo() + hi()); }
  double radius() const { return 0.5 * (hi() - lo()); }

  double operator()(double t) const {
    double sum = 0.0;
    for (const auto& term : terms_) {
      if (t <= term.lo || t >= term.hi) continue;
      double p = 0.0;
      for (auto it = term.poly.rbegin(); it != term.poly.rend(); ++it) p = p * t + *it;
      double v = term.coef * p;
      for (const auto& f : term.factors) v *= f.value(t);
      sum += v;
    }
    return sum;
  }

  Jet8 jet(double t) const {
    Jet8 sum;
    for (const auto& term : terms_) {
      if (t <= term.lo || t >= term.hi) continue;
      Jet8 x = Jet8::variable(t);
      Jet8 p;
      for (auto it = term.poly.rbegin(); it != term.poly.rend(); ++it) p = p * x + Jet8::constant(*it);
      Jet8 v = p * term.coef;
      for (const auto& f : term.factors) {
        v = v * f.jet(t);
        if (v.is_zero()) break;
      }
      sum += v;
    }
    return sum;
  }

  double deriv(int k, double t) const {
    if (k < 0 || k > kMaxDerivative)
      throw CapabilityError("derivative order " + std::to_string(k) + " exceeds supported order 6");
    return factorial(k) * jet(t).c[k];
  }

  TestFunction1D times_t() const {
    TestFunction1D r = *this;
    for (auto& term : r.terms_) term.poly.insert(term.poly.begin(), 0.0);
    return r;
  }

  TestFunction1D reflected() const {
    TestFunction1D r = *this;
    for (auto& term : r.terms_) {
      for (std::size_t k = 1; k < term.poly.size(); k += 2) term.poly[k] = -term.poly[k];
      for (auto& f : term.factors) {
        double a = f.a;
        f.a = -f.b;
        f.b = -a;
      }
      double lo = term.lo;
      term.lo = -term.hi;
      term.hi = -lo;
    }
    return r;
  }

  TestFunction1D& operator+=(const TestFunction1D& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  friend TestFunction1D operator+(TestFunction1D a, const TestFunction1D& b) { return a += b; }
  friend TestFunction1D operator*(double s, TestFunction1D f) {
    for (auto& t : f.terms_) t.coef *= s;
    return f;
  }
  friend TestFunction1D operator*(const TestFunction1D& f, const TestFunction1D& g) {
    TestFunction1D r;
    for (const auto& a : f.terms_)
      for (const auto& b : g.terms_) {
        Term t;
        t.lo = std::max(a.lo, b.lo);
        t.hi = std::min(a.hi, b.hi);
        if (!(t.lo < t.hi)) continue;
        t.coef = a.coef * b.coef;
        t.poly.assign(a.poly.size() + b.poly.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.poly.size(); ++i)
          for (std::size_t j = 0; j < b.poly.size(); ++j) t.poly[i + j] += a.poly[i] * b.poly[j];
        t.factors = a.factors;
        t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
        r.terms_.push_back(std::move(t));
      }
    return r;
  }

 private:
  std::vector<Term> terms_;
};

inline TestFunction1D make_bump(double center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius) || !std::isfinite(center))
    throw DomainError("bump radius must be positive and finite");
  return TestFunction1D(Factor{Factor::Kind::Bump, center - radius, center + radius, 0.0});
}

inline TestFunction1D make_plateau(double a, double b, double ramp) {
  if (!(b >= a) || !(ramp > 0.0)) throw DomainError("plateau needs a <= b and a positive ramp width");
  return TestFunction1D(Factor{Factor::Kind::Plateau, a, b, ramp});
}

inline double deriv(const TestFunction1D& f, int k, double t) { return f.deriv(k, t); }

// Complex-valued function of one real variable with a support hull [lo, hi].
struct Fn1 {
  std::function<cplx(double)> f;
  double lo = 0.0, hi = 0.0;

  cplx operator()(double t) const { return (t > lo && t < hi) ? f(t) : cplx(0.0); }
  bool empty() const { return !f || !(lo < hi); }
};

inline Fn1 as_fn(const TestFunction1D& g) {
  if (g.empty()) return {};
  return Fn1{[g](double t) { return cplx(g(t)); }, g.lo(), g.hi()};
}

inline Fn1 conj_fn(const Fn1& a) {
  if (a.empty()) return {};
  return Fn1{[f = a.f](double t) { return std::conj(f(t)); }, a.lo, a.hi};
}

inline Fn1 product(const Fn1& a, const Fn1& b) {
  double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
  if (a.empty() || b.empty() || !(lo < hi)) return {};
  return Fn1{[fa = a.f, fb = b.f](double t) { return fa(t) * fb(t); }, lo, hi};
}

inline Fn1 sum(const Fn1& a, const Fn1& b, cplx sb = 1.0) {
  if (b.empty()) return a;
  if (a.empty()) return Fn1{[fb = b.f, sb](double t) { return sb * fb(t); }, b.lo, b.hi};
  return Fn1{[a, b, sb](double t) { return a(t) + sb * b(t); }, std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  QuadratureRule mapped(double a, double b) const {
    QuadratureRule r;
    r.order = order;
    double h = 0.5 * (b - a), m = 0.5 * (a + b);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      r.nodes.push_back(m + h * nodes[i]);
      r.weights.push_back(h * weights[i]);
    }
    return r;
  }
};

inline QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  r.order = 2 * n - 1;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

inline const QuadratureRule& gauss_legendre(int n) {
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(compute_gauss_legendre(n));
  return *slot;
}

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const cplx& v) { return std::abs(v); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

template <class T>
cplx leading_scalar(const T& v) {
  if constexpr (std::is_convertible_v<T, cplx>)
    return cplx(v);
  else
    return cplx(v(0));
}

template <class T>
T zero_like(const T& probe) {
  if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, cplx>)
    return T(0);
  else
    return T::Zero(probe.rows(), probe.cols());
}

template <class T>
struct Estimate {
  T value;
  double error = 0.0;
};

struct IntegrateOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  int order = 16;
  int max_panels = 4000;
};

// Adaptive composite Gauss-Legendre. Each panel is compared against its two
// halves; the panel with the largest disagreement is split until the summed
// disagreement meets the tolerance.
template <class F>
auto integrate_estimate(F&& f, std::vector<double> breaks, const IntegrateOptions& opt = {})
    -> Estimate<std::decay_t<decltype(f(0.0))>> {
  using T = std::decay_t<decltype(f(0.0))>;
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const QuadratureRule& rule = gauss_legendre(opt.order);
  auto eval = [&](double l, double r) {
    double h = 0.5 * (r - l), m = 0.5 * (l + r);
    T s = f(m + h * rule.nodes[0]) * rule.weights[0];
    for (std::size_t i = 1; i < rule.nodes.size(); ++i) s = s + f(m + h * rule.nodes[i]) * rule.weights[i];
    return T(s * h);
  };
  struct Panel {
    double l, r;
    T left, right;
    double err;
  };
  std::vector<Panel> panels;
  auto make = [&](double l, double r, const T& whole) {
    double m = 0.5 * (l + r);
    Panel p{l, r, eval(l, m), eval(m, r), 0.0};
    p.err = magnitude(T(p.left + p.right - whole));
    return p;
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i] < breaks[i + 1])) continue;
    panels.push_back(make(breaks[i], breaks[i + 1], eval(breaks[i], breaks[i + 1])));
  }
  if (panels.empty()) return {zero_like(f(breaks.empty() ? 0.0 : breaks.front())), 0.0};
  auto cmp = [&](std::size_t x, std::size_t y) { return panels[x].err < panels[y].err; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < panels.size(); ++i) heap.push(i);

  auto totals = [&](T& total, double& err, double& absum) {
    total = zero_like(panels[0].left);
    err = 0.0;
    absum = 0.0;
    for (const auto& p : panels) {
      total = total + p.left + p.right;
      err += p.err;
      absum += magnitude(p.left) + magnitude(p.right);
    }
  };
  T total;
  double err, absum;
  totals(total, err, absum);
  const double eps = std::numeric_limits<double>::epsilon();
  while (true) {
    double tol = std::max({opt.abs_tol, opt.rel_tol * magnitude(total), 64.0 * eps * absum});
    if (err <= tol) break;
    if (static_cast<int>(panels.size()) >= opt.max_panels)
      throw AccuracyError("integration did not converge", leading_scalar(total), err);
    std::size_t i = heap.top();
    heap.pop();
    Panel old = panels[i];
    double m = 0.5 * (old.l + old.r);
    panels[i] = make(old.l, m, old.left);
    panels.push_back(make(m, old.r, old.right));
    heap.push(i);
    heap.push(panels.size() - 1);
    totals(total, err, absum);
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.l < y.l; });
  totals(total, err, absum);
  return {total, err};
}

template <class F>
auto integrate(F&& f, double a, double b, const IntegrateOptions& opt = {}) {
  if (!(a < b)) throw DomainError("integrate requires a < b");
  return integrate_estimate(std::forward<F>(f), std::vector<double>{a, b}, opt).value;
}

struct PVResult {
  cplx value;
  double estimated_error = 0.0;
};

inline IntegrateOptions pv_defaults() {
  IntegrateOptions o;
  o.rel_tol = 1e-8;
  return o;
}

// PV of the integral of density(w)/(pole - w) over [a,b] by singularity subtraction.
template <class F>
PVResult pv_integrate(F&& density, double pole, double a, double b, const IntegrateOptions& opt = pv_defaults()) {
  if (!(a < b)) throw DomainError("pv_integrate requires a < b");
  if (!(a < pole && pole < b)) {
    auto e = integrate_estimate([&](double w) { return cplx(density(w)) / (pole - w); }, {a, b}, opt);
    return {e.value, e.error};
  }
  cplx d0 = density(pole);
  auto e = integrate_estimate([&](double w) { return (cplx(density(w)) - d0) / (pole - w); }, {a, pole, b}, opt);
  return {e.value + d0 * std::log((pole - a) / (b - pole)), e.error};
}

enum class Side { Plus, Minus };

inline double side_sign(Side s) { return s == Side::Plus ? 1.0 : -1.0; }

// Boundary value of the Cauchy-type integral at x + i0 (Plus) or x - i0 (Minus).
template <class F>
cplx plemelj_bracket(F&& density, double x, Side side, double a, double b, const IntegrateOptions& opt = pv_defaults()) {
  if (!(a < x && x < b)) throw BoundaryError("boundary value requested at a point that is not interior to the interval");
  PVResult pv = pv_integrate(density, x, a, b, opt);
  return pv.value - side_sign(side) * cplx(0.0, std::numbers::pi) * cplx(density(x));
}

// Neville extrapolation of samples y(h_i) to h = 0.
inline Estimate<cplx> richardson_zero(const std::vector<double>& h, const std::vector<cplx>& y) {
  std::size_t n = h.size();
  std::vector<cplx> p(y);
  cplx prev = y.back();
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
    if (m + 1 == n) break;
    prev = p[n - m - 1];
  }
  return {p[0], std::abs(p[0] - prev)};
}

inline const std::vector<double>& default_epsilon_ladder() {
  static const std::vector<double> ladder{1e-2, 1e-3, 1e-4};
  return ladder;
}

// lim over eps of the integral of density(w)/(x +- i eps - w), extrapolated in eps.
template <class F>
Estimate<cplx> boundary_limit(F&& density, double x, Side side, double a, double b,
                              const std::vector<double>& ladder = default_epsilon_ladder(),
                              const IntegrateOptions& opt = {}) {
  std::vector<cplx> vals;
  for (double eps : ladder) {
    cplx zz(x, side_sign(side) * eps);
    std::vector<double> br{a, b};
    for (double k : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
      double t = x + k * eps;
      if (t > a && t < b) br.push_back(t);
    }
    vals.push_back(integrate_estimate([&](double w) { return cplx(density(w)) / (zz - w); }, br, opt).value);
  }
  return richardson_zero(ladder, vals);
}

}  // namespace spectraldist

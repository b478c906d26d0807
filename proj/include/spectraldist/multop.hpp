#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "distalg.hpp"

namespace spectraldist {

struct Interval {
  double a = 0.0, b = 0.0;
};

struct DomainG {
  std::vector<Interval> intervals;
};

inline void validate(const DomainG& G) {
  if (G.intervals.empty()) throw DomainError("domain needs at least one interval");
  std::vector<Interval> s = G.intervals;
  std::sort(s.begin(), s.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i].a) || !std::isfinite(s[i].b) || !(s[i].a < s[i].b))
      throw DomainError("interval endpoints must be finite with a < b");
    if (i > 0 && s[i].a < s[i - 1].b) throw DomainError("domain intervals overlap");
  }
}

// Polynomial profile P(y) = sum c_k y^k.
struct ProfileP {
  std::vector<double> coeffs{0.0, 1.0};

  static ProfileP identity() { return {}; }

  double operator()(double y) const {
    double v = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * y + *it;
    return v;
  }
  double deriv(double y) const {
    double v = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) v = v * y + k * coeffs[k];
    return v;
  }
  // (P(u) - P(v)) / (u - v), exact for u == v as well
  double divided_difference(double u, double v) const {
    double s = 0.0;
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
      double t = 0.0, up = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        t += up * std::pow(v, double(k - 1 - j));
        up *= u;
      }
      s += coeffs[k] * t;
    }
    return s;
  }
};

struct Piece {
  double a = 0.0, b = 0.0;
  double pa = 0.0, pb = 0.0;
  double lo() const { return std::min(pa, pb); }
  double hi() const { return std::max(pa, pb); }
};

struct MultOpModel {
  DomainG G;
  ProfileP P;
  std::vector<Piece> pieces;
  double min_abs_dP = 0.0;
  IntegrateOptions quad{1e-11, 1e-14, 16, 4000};
  IntegrateOptions pv{1e-10, 1e-14, 16, 4000};
};

inline MultOpModel make_model(const DomainG& G, const ProfileP& P) {
  validate(G);
  MultOpModel m;
  m.G = G;
  m.P = P;
  std::sort(m.G.intervals.begin(), m.G.intervals.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
  m.min_abs_dP = std::numeric_limits<double>::infinity();
  const int samples = 2048;
  for (const auto& iv : m.G.intervals) {
    double h = (iv.b - iv.a) / samples;
    double prev_y = iv.a + 0.5 * h, prev = P.deriv(prev_y);
    for (int i = 0; i < samples; ++i) {
      double y = iv.a + (i + 0.5) * h, d = P.deriv(y);
      m.min_abs_dP = std::min(m.min_abs_dP, std::abs(d));
      if (d == 0.0 || (d > 0) != (prev > 0)) {
        double lo = prev_y, hi = y;
        while (hi - lo > 1e-12) {
          double mid = 0.5 * (lo + hi);
          if ((P.deriv(mid) > 0) == (prev > 0)) lo = mid; else hi = mid;
        }
        std::ostringstream os;
        os.precision(17);
        os << "profile derivative vanishes in the domain near y = " << 0.5 * (lo + hi);
        throw DomainError(os.str());
      }
      prev = d;
      prev_y = y;
    }
    m.pieces.push_back({iv.a, iv.b, P(iv.a), P(iv.b)});
  }
  return m;
}

struct LevelPoint {
  double y = 0.0;
  double weight = 0.0;
  std::size_t piece = 0;
};

struct LevelSet {
  double x = 0.0;
  std::vector<LevelPoint> points;
};

inline double root_in_piece(const MultOpModel& m, const Piece& pc, double x) {
  double lo = pc.a, hi = pc.b;
  bool inc = pc.pb > pc.pa;
  double y = lo + (hi - lo) * (x - pc.pa) / (pc.pb - pc.pa);
  for (int it = 0; it < 200; ++it) {
    double f = m.P(y) - x;
    if (f == 0.0) break;
    if ((f < 0) == inc) lo = y; else hi = y;
    double yn = y - f / m.P.deriv(y);
    if (!(yn >= lo && yn <= hi)) yn = 0.5 * (lo + hi);
    double step = std::abs(yn - y);
    y = yn;
    if (step <= 1e-12 * std::max(1.0, std::abs(y))) break;
  }
  return y;
}

inline LevelSet level_set(const MultOpModel& m, double x) {
  LevelSet L;
  L.x = x;
  for (std::size_t i = 0; i < m.pieces.size(); ++i) {
    const Piece& pc = m.pieces[i];
    if (!(x > pc.lo() && x < pc.hi())) continue;
    double y = root_in_piece(m, pc, x);
    L.points.push_back({y, 1.0 / std::abs(m.P.deriv(y)), i});
  }
  return L;
}

// Bilinear pairings. The left function is used as given; the bracket_* wrappers
// below conjugate the left state, so brackets are conjugate-linear in the first slot.
inline cplx pair_fn(const MultOpModel& m, const Fn1& l, const Fn1& r) {
  Fn1 w = product(l, r);
  if (w.empty()) return 0.0;
  cplx s = 0.0;
  for (const auto& pc : m.pieces) {
    double lo = std::max(pc.a, w.lo), hi = std::min(pc.b, w.hi);
    if (lo < hi) s += integrate_estimate(w, {lo, hi}, m.quad).value;
  }
  return s;
}

inline cplx delta_fn(const MultOpModel& m, const Fn1& l, const Fn1& r, double x) {
  cplx s = 0.0;
  for (const auto& p : level_set(m, x).points) s += l(p.y) * r(p.y) * p.weight;
  return s;
}

inline cplx pv_fn(const MultOpModel& m, const Fn1& l, const Fn1& r, double x) {
  Fn1 w = product(l, r);
  if (w.empty()) return 0.0;
  cplx s = 0.0;
  for (const auto& pc : m.pieces) {
    double lo = std::max(pc.a, w.lo), hi = std::min(pc.b, w.hi);
    if (!(lo < hi)) continue;
    if (x > pc.lo() && x < pc.hi()) {
      double ys = root_in_piece(m, pc, x);
      if (ys > lo && ys < hi) {
        auto d = [&](double y) { return w(y) / m.P.divided_difference(ys, y); };
        s += pv_integrate(d, ys, lo, hi, m.pv).value;
        continue;
      }
    }
    s += integrate_estimate([&](double y) { return w(y) / (x - m.P(y)); }, {lo, hi}, m.quad).value;
  }
  return s;
}

// Breakpoints on [lo, hi] within piece pc that resolve the near-singularity of 1/(z - P(y)).
inline std::vector<double> resolvent_breaks(const MultOpModel& m, const Piece& pc, double lo, double hi, cplx z) {
  std::vector<double> br{lo, hi};
  if (std::abs(z.imag()) < 0.1 * (hi - lo) && z.real() > pc.lo() && z.real() < pc.hi()) {
    double ys = root_in_piece(m, pc, z.real());
    double s = std::abs(z.imag()) / std::max(std::abs(m.P.deriv(ys)), 1e-300);
    for (double k : {-30.0, -3.0, 0.0, 3.0, 30.0}) {
      double t = ys + k * s;
      if (t > lo && t < hi) br.push_back(t);
    }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
  }
  return br;
}

// integral of l r / (z - P)^power for z off the real support of l r
inline cplx resolvent_fn(const MultOpModel& m, const Fn1& l, const Fn1& r, cplx z, int power = 1) {
  Fn1 w = product(l, r);
  if (w.empty()) return 0.0;
  cplx s = 0.0;
  for (const auto& pc : m.pieces) {
    double lo = std::max(pc.a, w.lo), hi = std::min(pc.b, w.hi);
    if (!(lo < hi)) continue;
    auto br = resolvent_breaks(m, pc, lo, hi, z);
    s += integrate_estimate([&](double y) { return w(y) / std::pow(z - m.P(y), power); }, br, m.quad).value;
  }
  return s;
}

inline cplx bracket_delta(const MultOpModel& m, const Fn1& f1, const Fn1& f2, double x) {
  return delta_fn(m, conj_fn(f1), f2, x);
}
inline cplx bracket_pv(const MultOpModel& m, const Fn1& f1, const Fn1& f2, double x) {
  return pv_fn(m, conj_fn(f1), f2, x);
}
inline cplx bracket(const MultOpModel& m, const Fn1& f1, const Fn1& f2) { return pair_fn(m, conj_fn(f1), f2); }
inline cplx bracket_resolvent(const MultOpModel& m, const Fn1& f1, const Fn1& f2, cplx z) {
  return resolvent_fn(m, conj_fn(f1), f2, z);
}

inline Fn1 pushforward(const MultOpModel& m, const Fn1& w) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& pc : m.pieces) {
    lo = std::min(lo, pc.lo());
    hi = std::max(hi, pc.hi());
  }
  return Fn1{[m, w](double x) {
               cplx s = 0.0;
               for (const auto& p : level_set(m, x).points) s += w(p.y) * p.weight;
               return s;
             },
             lo, hi};
}

inline std::vector<double> range_breaks(const MultOpModel& m, const Fn1& w) {
  std::vector<double> br;
  for (const auto& pc : m.pieces) {
    br.push_back(pc.pa);
    br.push_back(pc.pb);
    for (double y : {w.lo, w.hi})
      if (y > pc.a && y < pc.b) br.push_back(m.P(y));
  }
  std::sort(br.begin(), br.end());
  return br;
}

inline double coarea_residual(const MultOpModel& m, const Fn1& w) {
  if (w.empty()) return 0.0;
  cplx lhs = 0.0;
  for (const auto& pc : m.pieces) {
    double lo = std::max(pc.a, w.lo), hi = std::min(pc.b, w.hi);
    if (lo < hi) lhs += integrate_estimate(w, {lo, hi}, m.quad).value;
  }
  Fn1 pf = pushforward(m, w);
  cplx rhs = integrate_estimate(pf, range_breaks(m, w), m.quad).value;
  return std::abs(lhs - rhs);
}

inline Fn1 mult_spectral_apply(const MultOpModel& m, const TestFunction1D& phi, const Fn1& f) {
  if (f.empty()) return {};
  return Fn1{[P = m.P, phi, g = f.f](double y) { return phi(P(y)) * g(y); }, f.lo, f.hi};
}

inline Fn1 mult_spectral_apply(const MultOpModel& m, const TestFunction2D& phi, const Fn1& f) {
  if (f.empty()) return {};
  return Fn1{[P = m.P, phi, g = f.f](double y) { return phi(cplx(P(y), 0.0)) * g(y); }, f.lo, f.hi};
}

// Uniform grid of cell midpoints over the union of the ranges P(piece).
inline std::vector<double> x_grid(const MultOpModel& m, int n) {
  std::vector<Interval> r;
  for (const auto& pc : m.pieces) r.push_back({pc.lo(), pc.hi()});
  std::sort(r.begin(), r.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
  std::vector<Interval> u;
  for (const auto& iv : r) {
    if (!u.empty() && iv.a <= u.back().b) u.back().b = std::max(u.back().b, iv.b);
    else u.push_back(iv);
  }
  double total = 0.0;
  for (const auto& iv : u) total += iv.b - iv.a;
  std::vector<double> xs;
  int used = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    int k = (i + 1 == u.size()) ? n - used : static_cast<int>(std::lround(n * (u[i].b - u[i].a) / total));
    used += k;
    for (int j = 0; j < k; ++j) xs.push_back(u[i].a + (j + 0.5) * (u[i].b - u[i].a) / k);
  }
  return xs;
}

}  // namespace spectraldist

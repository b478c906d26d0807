#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "multop.hpp"

namespace spectraldist {

struct Perturbation {
  TestFunction1D g, h;
};

struct SupportInterval {
  double a = 0.0, b = 0.0;
  std::size_t piece = 0;
};

struct KreinModel {
  MultOpModel op;
  Perturbation pert;
  Fn1 g, h;
  std::vector<SupportInterval> gh_support;
  std::vector<Interval> slit;
  // C(z) = c0 + z m2 - z^2 tail(z) for |z| < zero_radius
  double zero_radius = 0.0;
  cplx c0 = 1.0, m2 = 0.0;
};

inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!(iv.a < iv.b)) continue;
    if (!out.empty() && iv.a <= out.back().b) out.back().b = std::max(out.back().b, iv.b);
    else out.push_back(iv);
  }
  return out;
}

inline std::vector<Interval> support_intervals(const TestFunction1D& f) {
  std::vector<Interval> v;
  for (const auto& t : f.terms()) v.push_back({t.lo, t.hi});
  return merge_intervals(v);
}

inline std::string format_point(cplx z) {
  std::ostringstream os;
  os.precision(17);
  if (z.imag() == 0.0) os << "x = " << z.real();
  else os << "z = " << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

template <class F>
cplx support_integral(const KreinModel& K, F&& f, cplx z_near = cplx(0.0, 1e300)) {
  cplx s = 0.0;
  for (const auto& iv : K.gh_support) {
    const Piece& pc = K.op.pieces[iv.piece];
    auto br = resolvent_breaks(K.op, pc, iv.a, iv.b, z_near);
    s += integrate_estimate(f, br, K.op.quad).value;
  }
  return s;
}

inline KreinModel make_krein(const MultOpModel& op, const Perturbation& pert) {
  KreinModel K;
  K.op = op;
  K.pert = pert;
  auto inside = [&](const TestFunction1D& f, const char* name) {
    for (const auto& iv : support_intervals(f)) {
      bool ok = false;
      for (const auto& pc : op.pieces) ok = ok || (iv.a >= pc.a && iv.b <= pc.b);
      if (!ok) throw DomainError(std::string("support of ") + name + " must lie inside the domain");
    }
  };
  inside(pert.g, "g");
  inside(pert.h, "h");
  K.g = as_fn(pert.g);
  K.h = as_fn(pert.h);
  std::vector<Interval> gi = support_intervals(pert.g), hi = support_intervals(pert.h), both;
  for (const auto& x : gi)
    for (const auto& y : hi) both.push_back({std::max(x.a, y.a), std::min(x.b, y.b)});
  std::vector<Interval> images;
  for (const auto& iv : merge_intervals(both)) {
    for (std::size_t p = 0; p < op.pieces.size(); ++p) {
      const Piece& pc = op.pieces[p];
      double lo = std::max(iv.a, pc.a), hi2 = std::min(iv.b, pc.b);
      if (!(lo < hi2)) continue;
      K.gh_support.push_back({lo, hi2, p});
      double pa = op.P(lo), pb = op.P(hi2);
      images.push_back({std::min(pa, pb), std::max(pa, pb)});
    }
  }
  K.slit = merge_intervals(images);

  double dist0 = std::numeric_limits<double>::infinity();
  for (const auto& s : K.slit) {
    if (s.a <= 0.0 && s.b >= 0.0) dist0 = 0.0;
    else dist0 = std::min(dist0, std::min(std::abs(s.a), std::abs(s.b)));
  }
  if (K.gh_support.empty()) dist0 = std::numeric_limits<double>::infinity();
  if (dist0 > 0.0) {
    K.zero_radius = std::isfinite(dist0) ? 0.25 * dist0 : 1.0;
    auto w = [&](double y) { return K.h(y) * K.g(y); };
    K.c0 = 1.0 + support_integral(K, [&](double y) { return cplx(w(y) / op.P(y)); });
    K.m2 = support_integral(K, [&](double y) { return cplx(w(y) / (op.P(y) * op.P(y))); });
  }
  return K;
}

inline bool on_slit(const KreinModel& K, double x) {
  for (const auto& s : K.slit)
    if (x >= s.a && x <= s.b) return true;
  return false;
}

inline double slit_distance(const KreinModel& K, cplx z) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : K.slit) {
    double dx = z.real() < s.a ? s.a - z.real() : (z.real() > s.b ? z.real() - s.b : 0.0);
    d = std::min(d, std::hypot(dx, z.imag()));
  }
  return d;
}

inline cplx c_value(const KreinModel& K, cplx z) {
  if (z.imag() == 0.0 && on_slit(K, z.real()))
    throw DomainError("C(z) is discontinuous on the slit at " + format_point(z) + "; use c_boundary");
  const auto& P = K.op.P;
  auto w = [&](double y) { return K.h(y) * K.g(y); };
  if (std::abs(z) < K.zero_radius) {
    cplx tail = support_integral(K, [&](double y) {
      double p = P(y);
      return w(y) / (p * p * (z - p));
    });
    return K.c0 + z * K.m2 - z * z * tail;
  }
  return 1.0 - support_integral(K, [&](double y) { return w(y) / (z - P(y)); }, z);
}

// C'(z) = <h|(z - Omega)^-2|g>
inline cplx c_prime(const KreinModel& K, cplx z) {
  if (z.imag() == 0.0 && on_slit(K, z.real())) throw DomainError("C'(z) is undefined on the slit at " + format_point(z));
  const auto& P = K.op.P;
  return support_integral(K, [&](double y) {
    cplx d = z - P(y);
    return K.h(y) * K.g(y) / (d * d);
  }, z);
}

struct CBoundary {
  double x = 0.0;
  double C1 = 1.0, C2 = 0.0;
  double abs_plus = 1.0, abs_minus = 1.0;  // |C1 + i pi C2|, |C1 - i pi C2|
};

inline CBoundary c_boundary(const KreinModel& K, double x) {
  CBoundary b;
  b.x = x;
  b.C1 = 1.0 - pv_fn(K.op, K.h, K.g, x).real();
  b.C2 = delta_fn(K.op, K.h, K.g, x).real();
  b.abs_plus = std::abs(cplx(b.C1, std::numbers::pi * b.C2));
  b.abs_minus = b.abs_plus;
  return b;
}

// C(x + i0) = C1 + i pi C2, C(x - i0) = C1 - i pi C2
inline cplx c_side(const CBoundary& b, Side s) { return cplx(b.C1, side_sign(s) * std::numbers::pi * b.C2); }

// <f1| R(z) |f2> with R(z) = R_Omega + R_Omega|g><h|R_Omega / C(z)
inline cplx krein_resolvent_bracket(const KreinModel& K, cplx z, const Fn1& f1, const Fn1& f2) {
  cplx C = c_value(K, z);
  if (std::abs(C) < 1e-12) throw DomainError("resolvent is evaluated at a pole, " + format_point(z));
  Fn1 l = conj_fn(f1);
  cplx base = resolvent_fn(K.op, l, f2, z);
  cplx left = resolvent_fn(K.op, l, K.g, z);
  cplx right = resolvent_fn(K.op, K.h, f2, z);
  return base + left * right / C;
}

// (R(z) f)(y) as a function of y
inline Fn1 resolvent_apply(const KreinModel& K, cplx z, const Fn1& f) {
  cplx C = c_value(K, z);
  if (std::abs(C) < 1e-12) throw DomainError("resolvent is evaluated at a pole, " + format_point(z));
  cplx s = resolvent_fn(K.op, K.h, f, z) / C;
  Fn1 gs = K.g;
  double lo = f.empty() ? gs.lo : std::min(f.lo, gs.lo), hi = f.empty() ? gs.hi : std::max(f.hi, gs.hi);
  if (gs.empty()) lo = f.lo, hi = f.hi;
  return Fn1{[P = K.op.P, f, gs, s, z](double y) { return (f(y) + s * gs(y)) / (z - P(y)); }, lo, hi};
}

// coef |ket><bra|; bra acts bilinearly
struct DyadTerm {
  cplx coef = 1.0;
  Fn1 ket, bra;
};

struct DyadSum {
  std::vector<DyadTerm> terms;

  cplx bracket(const MultOpModel& m, const Fn1& f1, const Fn1& f2) const {
    cplx s = 0.0;
    Fn1 l = conj_fn(f1);
    for (const auto& t : terms) s += t.coef * pair_fn(m, l, t.ket) * pair_fn(m, t.bra, f2);
    return s;
  }
  // bilinear pairing with a bra on the left, as an operator acting to the left
  DyadSum compose(const MultOpModel& m, const DyadSum& rhs) const {
    DyadSum out;
    for (const auto& x : terms)
      for (const auto& y : rhs.terms) out.terms.push_back({x.coef * y.coef * pair_fn(m, x.bra, y.ket), x.ket, y.bra});
    return out;
  }
};

inline Fn1 divided_state(const KreinModel& K, const Fn1& f, cplx z0, int power, double sign) {
  return Fn1{[P = K.op.P, f, z0, power, sign](double y) { return f(y) / std::pow(sign * (z0 - P(y)), power); }, f.lo, f.hi};
}

struct PointSpectrumEntry {
  enum class Kind { SimplePole, DoubleZeroJordan };
  cplx z0 = 0.0;
  Kind kind = Kind::SimplePole;
  DyadSum residue;
  DyadSum p0, a;
  cplx c_at = 0.0, c_prime_at = 0.0;
};

inline DyadSum residue(const KreinModel& K, cplx z0) {
  cplx cp = c_prime(K, z0);
  if (std::abs(cp) < 1e-8) throw DegeneracyError("C'(z0) vanishes at " + format_point(z0) + "; use jordan_pair");
  DyadSum r;
  r.terms.push_back({1.0 / cp, divided_state(K, K.g, z0, 1, 1.0), divided_state(K, K.h, z0, 1, 1.0)});
  return r;
}

// (1/2 pi i) \oint <f1|R(z)|f2> dz on a circle, trapezoid rule
inline cplx residue_contour(const KreinModel& K, cplx z0, double radius, const Fn1& f1, const Fn1& f2, int n = 64) {
  cplx s = 0.0;
  for (int j = 0; j < n; ++j) {
    cplx d = std::polar(radius, 2.0 * std::numbers::pi * (j + 0.5) / n);
    s += krein_resolvent_bracket(K, z0 + d, f1, f2) * d;
  }
  return s / double(n);
}

struct JordanPair {
  cplx z0 = 0.0;
  DyadSum p0, a;
  std::array<cplx, 5> moments{};  // m_k = <h|(Omega - z0)^-k|g>
};

inline JordanPair jordan_pair(const KreinModel& K, cplx z0 = 0.0) {
  JordanPair J;
  J.z0 = z0;
  const auto& P = K.op.P;
  for (int k = 1; k <= 4; ++k)
    J.moments[k] = support_integral(K, [&](double y) { return K.h(y) * K.g(y) / std::pow(cplx(P(y)) - z0, k); });
  if (std::abs(1.0 + J.moments[1]) > 1e-8 || std::abs(J.moments[2]) > 1e-8)
    throw DegeneracyError("C does not have a double zero at " + format_point(z0));
  cplx m3 = J.moments[3], m4 = J.moments[4];
  if (std::abs(m3) < 1e-12) throw DegeneracyError("third moment vanishes; zero of C is of order higher than two");
  Fn1 u1 = divided_state(K, K.g, z0, 1, -1.0), u2 = divided_state(K, K.g, z0, 2, -1.0);
  Fn1 v1 = divided_state(K, K.h, z0, 1, -1.0), v2 = divided_state(K, K.h, z0, 2, -1.0);
  J.a.terms.push_back({1.0 / m3, u1, v1});
  J.p0.terms.push_back({1.0 / m3, u2, v1});
  J.p0.terms.push_back({1.0 / m3, u1, v2});
  J.p0.terms.push_back({-m4 / (m3 * m3), u1, v1});
  return J;
}

struct SearchOptions {
  int edge_points = 128;
  int max_depth = 40;
  double newton_tol = 1e-12;
  double double_zero_tol = 1e-8;
};

namespace detail {

struct ContourMoments {
  cplx s0 = 0.0, s1 = 0.0, s2 = 0.0;
};

inline ContourMoments box_moments(const KreinModel& K, const Rect& r, int n) {
  const auto& rule = gauss_legendre(n);
  std::array<cplx, 5> corners{cplx(r.x0, r.y0), cplx(r.x1, r.y0), cplx(r.x1, r.y1), cplx(r.x0, r.y1), cplx(r.x0, r.y0)};
  ContourMoments m;
  for (int e = 0; e < 4; ++e) {
    cplx a = corners[e], b = corners[e + 1], half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      cplx z = mid + half * rule.nodes[i];
      cplx q = c_prime(K, z) / c_value(K, z) * half * rule.weights[i];
      m.s0 += q;
      m.s1 += z * q;
      m.s2 += z * z * q;
    }
  }
  cplx f = 1.0 / cplx(0.0, 2.0 * std::numbers::pi);
  m.s0 *= f;
  m.s1 *= f;
  m.s2 *= f;
  return m;
}

inline bool newton(const KreinModel& K, cplx& z, double tol) {
  for (int it = 0; it < 60; ++it) {
    cplx dz = c_value(K, z) / c_prime(K, z);
    z -= dz;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    if (std::abs(dz) <= tol * std::max(1.0, std::abs(z))) return true;
  }
  return false;
}

inline bool in_box(const Rect& r, cplx z, double margin) {
  return z.real() >= r.x0 - margin && z.real() <= r.x1 + margin && z.imag() >= r.y0 - margin && z.imag() <= r.y1 + margin;
}

}  // namespace detail

inline PointSpectrumEntry make_simple_entry(const KreinModel& K, cplx z0) {
  PointSpectrumEntry e;
  e.z0 = z0;
  e.kind = PointSpectrumEntry::Kind::SimplePole;
  e.c_at = c_value(K, z0);
  e.c_prime_at = c_prime(K, z0);
  e.residue = residue(K, z0);
  return e;
}

inline std::vector<PointSpectrumEntry> find_point_spectrum(const KreinModel& K, const Rect& region, const SearchOptions& opt = {}) {
  if (region.empty()) throw DomainError("search region is empty");
  for (const auto& s : K.slit)
    if (region.y0 <= 0.0 && region.y1 >= 0.0 && region.x0 < s.b && region.x1 > s.a)
      throw DomainError("search region intersects the slit");
  static const double jitter[] = {0.5371, 0.4629, 0.5183, 0.4817};
  std::vector<PointSpectrumEntry> out;
  struct Job {
    Rect r;
    int depth;
  };
  std::vector<Job> stack{{region, 0}};
  while (!stack.empty()) {
    Job job = stack.back();
    stack.pop_back();
    const Rect& r = job.r;
    auto split = [&]() {
      if (job.depth >= opt.max_depth) throw SearchError("zero search did not resolve a box near " + format_point(cplx(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1))));
      double fx = jitter[job.depth % 4], fy = jitter[(job.depth + 1) % 4];
      double xm = r.x0 + fx * (r.x1 - r.x0), ym = r.y0 + fy * (r.y1 - r.y0);
      stack.push_back({{r.x0, xm, r.y0, ym}, job.depth + 1});
      stack.push_back({{xm, r.x1, r.y0, ym}, job.depth + 1});
      stack.push_back({{r.x0, xm, ym, r.y1}, job.depth + 1});
      stack.push_back({{xm, r.x1, ym, r.y1}, job.depth + 1});
    };
    detail::ContourMoments m;
    try {
      m = detail::box_moments(K, r, opt.edge_points);
    } catch (const DomainError&) {
      split();
      continue;
    }
    double cnt = m.s0.real();
    long n = std::lround(cnt);
    if (std::abs(cnt - n) > 0.05 || std::abs(m.s0.imag()) > 0.05 || n < 0) {
      split();
      continue;
    }
    if (n == 0) continue;
    double size = std::max(r.x1 - r.x0, r.y1 - r.y0);
    if (n == 1) {
      cplx z = m.s1;
      if (detail::newton(K, z, opt.newton_tol) && detail::in_box(r, z, 1e-9 * size)) out.push_back(make_simple_entry(K, z));
      else split();
      continue;
    }
    if (n == 2) {
      cplx disc = std::sqrt(2.0 * m.s2 - m.s1 * m.s1);
      cplx za = 0.5 * (m.s1 + disc), zb = 0.5 * (m.s1 - disc);
      if (std::abs(za - zb) < 1e-4 * std::max(1.0, std::abs(m.s1))) {
        cplx mid = 0.5 * m.s1;
        if (std::abs(mid) < 1e-12) mid = 0.0;
        cplx cv = c_value(K, mid), cp = c_prime(K, mid);
        if (std::abs(cv) < opt.double_zero_tol && std::abs(cp) < opt.double_zero_tol) {
          PointSpectrumEntry e;
          e.z0 = mid;
          e.kind = PointSpectrumEntry::Kind::DoubleZeroJordan;
          e.c_at = cv;
          e.c_prime_at = cp;
          auto J = jordan_pair(K, mid);
          e.p0 = J.p0;
          e.a = J.a;
          out.push_back(e);
          continue;
        }
      }
      bool oka = detail::newton(K, za, opt.newton_tol), okb = detail::newton(K, zb, opt.newton_tol);
      if (oka && okb && std::abs(za - zb) > 1e-6 * std::max(1.0, std::abs(za)) && detail::in_box(r, za, 1e-9 * size) &&
          detail::in_box(r, zb, 1e-9 * size)) {
        out.push_back(make_simple_entry(K, za));
        out.push_back(make_simple_entry(K, zb));
        continue;
      }
    }
    split();
  }
  std::sort(out.begin(), out.end(), [](const PointSpectrumEntry& a, const PointSpectrumEntry& b) {
    double tol = 1e-9 * std::max({1.0, std::abs(a.z0), std::abs(b.z0)});
    if (std::abs(a.z0.real() - b.z0.real()) > tol) return a.z0.real() < b.z0.real();
    return a.z0.imag() < b.z0.imag();
  });
  return out;
}

// 0.3 times the distance from z0 to the nearest other singularity of R
inline double residue_radius(const KreinModel& K, cplx z0, const std::vector<PointSpectrumEntry>& spectrum) {
  double d = slit_distance(K, z0);
  for (const auto& e : spectrum)
    if (e.z0 != z0) d = std::min(d, std::abs(e.z0 - z0));
  return 0.3 * d;
}

struct KappaComponents {
  double x = 0.0;
  double C1 = 1.0, C2 = 0.0, D = 1.0;
  cplx a = 0.0, ap = 0.0, b = 0.0, bp = 0.0, delta = 0.0;
  cplx Nsq = 0.0;
  bool has_Nsq = false;
};

inline KappaComponents kappa_components(const KreinModel& K, double x, const Fn1& f1, const Fn1& f2) {
  KappaComponents k;
  k.x = x;
  CBoundary cb = c_boundary(K, x);
  k.C1 = cb.C1;
  k.C2 = cb.C2;
  k.D = cb.C1 * cb.C1 + std::numbers::pi * std::numbers::pi * cb.C2 * cb.C2;
  if (std::sqrt(k.D) < 1e-10) throw RegimeError("C(x +- i0) vanishes: spectral singularity at " + format_point(x), x);
  Fn1 l = conj_fn(f1);
  k.a = pv_fn(K.op, l, K.g, x);
  k.ap = pv_fn(K.op, K.h, f2, x);
  k.b = delta_fn(K.op, l, K.g, x);
  k.bp = delta_fn(K.op, K.h, f2, x);
  k.delta = delta_fn(K.op, l, f2, x);
  if (k.C2 != 0.0) {
    k.Nsq = 1.0 / (k.D * k.C2);
    k.has_Nsq = true;
  }
  return k;
}

inline bool level_set_touches(const KreinModel& K, const Fn1& f, double x) {
  for (const auto& p : level_set(K.op, x).points)
    if (f(p.y) != 0.0) return true;
  return false;
}

inline cplx kappa_value(const KappaComponents& k) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return k.delta + (k.a * k.C2 * k.ap + k.a * k.C1 * k.bp + k.b * k.C1 * k.ap - pi2 * k.b * k.C2 * k.bp) / k.D;
}

inline cplx kappa_bracket(const KreinModel& K, double x, const Fn1& f1, const Fn1& f2) {
  return kappa_value(kappa_components(K, x, f1, f2));
}

// (1/2 pi i)(<R(x - i eps)> - <R(x + i eps)>) extrapolated to eps = 0
inline Estimate<cplx> kappa_boundary_oracle(const KreinModel& K, double x, const Fn1& f1, const Fn1& f2,
                                            const std::vector<double>& ladder = default_epsilon_ladder()) {
  std::vector<cplx> v;
  for (double e : ladder)
    v.push_back((krein_resolvent_bracket(K, cplx(x, -e), f1, f2) - krein_resolvent_bracket(K, cplx(x, e), f1, f2)) /
                cplx(0.0, 2.0 * std::numbers::pi));
  return richardson_zero(ladder, v);
}

// kappa(x) = p(x) + Nsq |ket><bra| with ket = C1 B + C2 A, bra = C1 B' + C2 A'
struct AlphaDyad {
  KappaComponents k;
  cplx ket() const { return k.C1 * k.b + k.C2 * k.a; }
  cplx bra() const { return k.C1 * k.bp + k.C2 * k.ap; }
  cplx coefficient() const { return k.Nsq; }
  cplx p() const { return k.delta - k.b * k.bp / k.C2; }
};

inline AlphaDyad alpha_dyad(const KreinModel& K, double x, const Fn1& f1, const Fn1& f2) {
  AlphaDyad d{kappa_components(K, x, f1, f2)};
  if (d.k.C2 == 0.0) throw RegimeError("C2 vanishes at " + format_point(x) + "; kappa reduces to delta(x - Omega)", x);
  return d;
}

struct StripReport {
  double min_abs = std::numeric_limits<double>::infinity();
  double argmin = 0.0;
  bool ok = true;
};

// |C(x +- i0)| along xs; fails where it drops below threshold
inline StripReport strip_check(const KreinModel& K, const std::vector<double>& xs, double threshold = 1e-6) {
  StripReport r;
  for (double x : xs) {
    double v = c_boundary(K, x).abs_plus;
    if (v < r.min_abs) {
      r.min_abs = v;
      r.argmin = x;
    }
  }
  r.ok = r.min_abs > threshold;
  return r;
}

struct SmearOptions {
  int x_panels = 4, y_panels = 4, order = 16, strip_order = 4;
  std::vector<double> ladder = default_epsilon_ladder();
};

namespace detail {

template <class F>
cplx tensor_gl(F&& f, double x0, double x1, double y0, double y1, int nx, int ny, int order, int y_order = 0) {
  const auto& rx = gauss_legendre(order);
  const auto& ry = gauss_legendre(y_order > 0 ? y_order : order);
  cplx s = 0.0;
  double hx = (x1 - x0) / nx, hy = (y1 - y0) / ny;
  for (int i = 0; i < nx; ++i)
    for (std::size_t a = 0; a < rx.nodes.size(); ++a) {
      double x = x0 + hx * (i + 0.5 * (1.0 + rx.nodes[a]));
      double wx = 0.5 * hx * rx.weights[a];
      for (int j = 0; j < ny; ++j)
        for (std::size_t b = 0; b < ry.nodes.size(); ++b) {
          double y = y0 + hy * (j + 0.5 * (1.0 + ry.nodes[b]));
          s += wx * 0.5 * hy * ry.weights[b] * f(cplx(x, y));
        }
    }
  return s;
}

}  // namespace detail

// \int <f1|R(w)|f2> psi(w) d^2w with |Im w| < eps excluded and eps -> 0 by extrapolation
template <class F>
Estimate<cplx> resolvent_smear(const KreinModel& K, F&& psi, const Rect& supp, const Fn1& f1, const Fn1& f2,
                               const SmearOptions& opt = {}) {
  auto kern = [&](cplx w) {
    cplx p = psi(w);
    return p == 0.0 ? cplx(0.0) : p * krein_resolvent_bracket(K, w, f1, f2);
  };
  if (supp.empty()) return {0.0, 0.0};
  if (supp.y0 >= 0.0 || supp.y1 <= 0.0)
    return {detail::tensor_gl(kern, supp.x0, supp.x1, supp.y0, supp.y1, opt.x_panels, opt.y_panels, opt.order), 0.0};
  cplx upper = detail::tensor_gl(kern, supp.x0, supp.x1, 0.0, supp.y1, opt.x_panels, opt.y_panels, opt.order);
  cplx lower = detail::tensor_gl(kern, supp.x0, supp.x1, supp.y0, 0.0, opt.x_panels, opt.y_panels, opt.order);
  std::vector<cplx> v;
  for (double e : opt.ladder) {
    cplx strip = detail::tensor_gl(kern, supp.x0, supp.x1, 0.0, e, opt.x_panels, 1, opt.order, opt.strip_order) +
                 detail::tensor_gl(kern, supp.x0, supp.x1, -e, 0.0, opt.x_panels, 1, opt.order, opt.strip_order);
    v.push_back(upper + lower - strip);
  }
  return richardson_zero(opt.ladder, v);
}

inline Estimate<cplx> resolvent_smear(const KreinModel& K, const TestFunction2D& phi, const Fn1& f1, const Fn1& f2,
                                      const SmearOptions& opt = {}) {
  return resolvent_smear(K, phi, phi.support(), f1, f2, opt);
}

// The two-slit model: G = (-c,-1) u (1,c), P = identity, g even, h = -g on (1,c) and g on (-c,-1).
struct BumpShape {
  double center = 1.5, radius = 0.45;
};

enum class Regime { ImaginaryPair, RealPair, JordanAtZero, Undetermined };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::ImaginaryPair: return "ImaginaryPair";
    case Regime::RealPair: return "RealPair";
    case Regime::JordanAtZero: return "JordanAtZero";
    default: return "Undetermined";
  }
}

struct Example2 {
  KreinModel model;
  double c = 2.0, amplitude = 0.0;
  BumpShape shape;
  double c0 = 1.0, c1 = 1.0;
  Regime regime = Regime::Undetermined;
};

inline Example2 example2_build(double c, double amplitude, BumpShape shape = {}) {
  if (!(c > 1.0)) throw DomainError("two-slit model needs c > 1");
  if (!(shape.radius > 0.0) || shape.center - shape.radius <= 1.0 || shape.center + shape.radius >= c)
    throw DomainError("bump support must lie inside (1, c)");
  Example2 e;
  e.c = c;
  e.amplitude = amplitude;
  e.shape = shape;
  auto right = make_bump(shape.center, shape.radius), left = make_bump(-shape.center, shape.radius);
  Perturbation p{amplitude * (right + left), amplitude * (left + (-1.0) * right)};
  auto op = make_model(DomainG{{{-c, -1.0}, {1.0, c}}}, ProfileP::identity());
  e.model = make_krein(op, p);
  e.c0 = c_value(e.model, 0.0).real();
  e.c1 = c_value(e.model, 1.0).real();
  if (std::abs(e.c0) <= 1e-8) e.regime = Regime::JordanAtZero;
  else if (e.c0 < 0.0) e.regime = Regime::ImaginaryPair;
  else if (e.c1 < 0.0) e.regime = Regime::RealPair;
  else e.regime = Regime::Undetermined;
  return e;
}

// amplitude with C(0) = target, by bisection on the decreasing map amplitude -> C(0)
inline double example2_amplitude(double c, double target_c0, BumpShape shape = {}) {
  if (!(target_c0 < 1.0)) throw DomainError("C(0) can only be lowered below 1 by the perturbation");
  auto f = [&](double A) { return example2_build(c, A, shape).c0 - target_c0; };
  double lo = 0.0, hi = 1.0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e8) throw SearchError("amplitude bracket not found");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return std::abs(f(lo)) < std::abs(f(hi)) ? lo : hi;
}

inline Rect example2_scan_region(const Example2& e) {
  double slit_lo = e.shape.center - e.shape.radius;
  double re = 1.0 + 0.5 * (slit_lo - 1.0);
  double mass = support_integral(e.model, [&](double y) { return cplx(2.0 * std::abs(y) * e.model.g(y) * e.model.g(y)); }).real();
  double im = 1.5 * std::sqrt(0.5 * mass) + 0.5;
  return {-re, re, -im, im};
}

}  // namespace spectraldist

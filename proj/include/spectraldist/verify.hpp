#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "chebyshev.hpp"
#include "krein.hpp"
#include "matspec.hpp"

namespace spectraldist {

struct CheckReport {
  std::string name;
  MatrixC lhs, rhs;
  double abs_err = 0.0, rel_err = 0.0, tolerance = 0.0;
  bool passed = false;
};

inline CheckReport make_report(std::string name, const MatrixC& lhs, const MatrixC& rhs, double tol) {
  CheckReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tol;
  r.abs_err = (lhs - rhs).norm();
  double scale = std::max(lhs.norm(), rhs.norm());
  r.rel_err = scale > 0.0 ? r.abs_err / scale : 0.0;
  r.passed = std::isfinite(r.abs_err) && (r.abs_err <= tol || r.rel_err <= tol);
  return r;
}

inline MatrixC scalar_matrix(cplx v) {
  MatrixC m(1, 1);
  m(0, 0) = v;
  return m;
}

inline MatrixC column(const std::vector<cplx>& v) {
  MatrixC m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

inline CheckReport make_report(std::string name, cplx lhs, cplx rhs, double tol) {
  return make_report(std::move(name), scalar_matrix(lhs), scalar_matrix(rhs), tol);
}

inline CheckReport make_report(std::string name, const std::vector<cplx>& lhs, const std::vector<cplx>& rhs, double tol) {
  return make_report(std::move(name), column(lhs), column(rhs), tol);
}

// ---- seeded probes

// uniform in [0, 1) from the raw 64-bit output, identical on every platform
inline double unit_draw(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

struct ProbeState {
  struct Bump {
    cplx coef;
    double center, radius;
  };
  std::vector<Bump> bumps;

  Fn1 fn() const {
    Fn1 f;
    for (const auto& b : bumps) {
      auto t = make_bump(b.center, b.radius);
      f = sum(f, Fn1{[t](double x) { return cplx(t(x)); }, t.lo(), t.hi()}, b.coef);
    }
    return f;
  }
};

// Bumps placed inside the given intervals (usually the intervals of G).
inline std::vector<ProbeState> make_probes(const std::vector<Interval>& where, std::uint64_t seed, int count, int bumps_per = 2) {
  if (where.empty()) throw DomainError("probe placement needs at least one interval");
  std::mt19937_64 rng(seed);
  std::vector<ProbeState> out(count);
  for (auto& p : out) {
    for (int k = 0; k < bumps_per; ++k) {
      const Interval& iv = where[std::min<std::size_t>(where.size() - 1, std::size_t(unit_draw(rng) * where.size()))];
      double len = iv.b - iv.a;
      double r = (0.15 + 0.3 * unit_draw(rng)) * 0.5 * len;
      double margin = 1e-3 * len;
      double c = iv.a + r + margin + unit_draw(rng) * (len - 2.0 * (r + margin));
      double re = 2.0 * unit_draw(rng) - 1.0, im = 2.0 * unit_draw(rng) - 1.0;
      p.bumps.push_back({cplx(re, im), c, r});
    }
  }
  return out;
}

using ProbePairs = std::vector<std::pair<Fn1, Fn1>>;

inline ProbePairs probe_pairs(const std::vector<ProbeState>& probes) {
  ProbePairs v;
  for (std::size_t i = 0; i + 1 < probes.size(); i += 2) v.push_back({probes[i].fn(), probes[i + 1].fn()});
  return v;
}

// ---- distributions on C

inline CheckReport check_delta_identity(const TestFunction2D& phi, double tol = 1e-6) {
  PolarOptions o;
  auto m = polar_moment_adaptive([&](cplx z) { return phi.dbar(z); }, cplx(0.0), 0, phi.support(), o);
  return make_report("dbar_inverse_z", -m.value / std::numbers::pi, phi(cplx(0.0)), tol);
}

inline CheckReport check_pv_product(const TestFunction1D& f, const TestFunction1D& g, const TestFunction1D& h, double tol = 1e-4) {
  auto r = pv_product_check(f, g, h);
  return make_report("pv_product", r.lhs, r.rhs, tol);
}

// ---- matrices

inline CheckReport check_multiplicative(const JordanForm& J, const TestFunction2D& phi1, const TestFunction2D& phi2, double tol = 1e-7) {
  return make_report("multiplicative", mat_spectral_apply(J, phi1) * mat_spectral_apply(J, phi2), mat_spectral_apply(J, phi1 * phi2), tol);
}

inline CheckReport check_completeness(const JordanForm& J, const TestFunction2D& one, double tol = 1e-8) {
  return make_report("completeness", mat_spectral_apply(J, one), MatrixC::Identity(J.dimension, J.dimension), tol);
}

inline CheckReport check_intertwining(const MatrixC& A, const JordanForm& J, const TestFunction2D& phi, double tol = 1e-7) {
  return make_report("intertwining", A * mat_spectral_apply(J, phi), mat_spectral_apply(J, phi.times_z()), tol);
}

inline CheckReport check_unitary(const MatrixC& U, const TestFunction2D& phi, int L = 64, double tol = 1e-6) {
  auto r = unitary_spectral_apply(U, phi, L);
  return make_report("unitary_fourier", r.value, mat_spectral_apply(jordan_decompose(U), phi), tol);
}

// R(phi1) R(phi2) = -R((r*phi1) phi2 + phi1 (r*phi2)); the combined test function is
// evaluated on the polar nodes about each eigenvalue with fixed-grid Cauchy transforms
inline CheckReport check_resolvent_equation(const JordanForm& J, const TestFunction2D& phi1, const TestFunction2D& phi2,
                                            double tol = 1e-5, const PolarGrid& grid = {}) {
  check_derivative_cap(J);
  PolarOptions opt;
  MatrixC lhs = mat_resolvent_apply(J, phi1, opt) * mat_resolvent_apply(J, phi2, opt);
  auto chi = [&](cplx z) {
    cplx a = phi2(z), b = phi1(z), s = 0.0;
    if (a != 0.0) s += cauchy_transform_fixed(phi1, z, grid) * a;
    if (b != 0.0) s += b * cauchy_transform_fixed(phi2, z, grid);
    return s;
  };
  Rect hull = phi1.support().hull(phi2.support());
  MatrixC rhs = MatrixC::Zero(J.dimension, J.dimension);
  for (std::size_t i = 0; i < J.eigenvalues.size(); ++i) {
    auto m = polar_moments(chi, J.eigenvalues[i], J.nilpotency[i] - 1, hull, grid);
    MatrixC ak = J.projectors[i];
    for (int k = 0; k < J.nilpotency[i]; ++k) {
      rhs -= ak * m[k];
      ak = ak * J.nilpotents[i];
    }
  }
  return make_report("resolvent_equation", lhs, rhs, tol);
}

// ---- multiplication operator

inline CheckReport check_coarea(const MultOpModel& m, const Fn1& w, double tol = 1e-8) {
  return make_report("coarea", cplx(coarea_residual(m, w)), cplx(0.0), tol);
}

inline CheckReport check_plemelj(const MultOpModel& m, const Fn1& f1, const Fn1& f2, const std::vector<double>& xs,
                                 const std::vector<double>& ladder = default_epsilon_ladder(), double tol = 1e-6) {
  std::vector<cplx> lhs, rhs;
  for (double x : xs)
    for (double s : {1.0, -1.0}) {
      std::vector<cplx> v;
      for (double e : ladder) v.push_back(bracket_resolvent(m, f1, f2, cplx(x, s * e)));
      lhs.push_back(richardson_zero(ladder, v).value);
      rhs.push_back(bracket_pv(m, f1, f2, x) - s * cplx(0.0, std::numbers::pi) * bracket_delta(m, f1, f2, x));
    }
  return make_report("plemelj", lhs, rhs, tol);
}

inline CheckReport check_multiplicative(const MultOpModel& m, const TestFunction1D& phi1, const TestFunction1D& phi2,
                                        const ProbePairs& pairs, double tol = 1e-12) {
  std::vector<cplx> lhs, rhs;
  for (const auto& [f1, f2] : pairs) {
    lhs.push_back(bracket(m, f1, mult_spectral_apply(m, phi1, mult_spectral_apply(m, phi2, f2))));
    rhs.push_back(bracket(m, f1, mult_spectral_apply(m, phi1 * phi2, f2)));
  }
  return make_report("multiplicative", lhs, rhs, tol);
}

// ---- rank-one perturbation

struct KreinSpectrum {
  const KreinModel* model = nullptr;
  std::vector<PointSpectrumEntry> points;
  bool searched = false;
};

inline KreinSpectrum krein_spectrum(const KreinModel& K, const Rect& region, const SearchOptions& opt = {}) {
  return {&K, find_point_spectrum(K, region, opt), true};
}

struct MuOptions {
  IntegrateOptions x_quad{1e-9, 1e-13, 16, 4000};
  ChebyshevOptions cheb{1e-10, 16, 1024};
  bool points = true;
};

inline std::vector<Interval> p_ranges(const MultOpModel& m) {
  std::vector<Interval> r;
  for (const auto& pc : m.pieces) r.push_back({pc.lo(), pc.hi()});
  return merge_intervals(r);
}

inline std::vector<Interval> intersect(const std::vector<Interval>& a, double lo, double hi) {
  std::vector<Interval> out;
  for (const auto& iv : a) {
    double l = std::max(iv.a, lo), h = std::min(iv.b, hi);
    if (l < h) out.push_back({l, h});
  }
  return out;
}

// real slice of phi meets the real axis on these parts of P(G)
inline std::vector<Interval> continuous_range(const KreinModel& K, const TestFunction2D& phi) {
  Rect s = phi.support();
  if (phi.terms().empty() || !(s.y0 < 0.0 && s.y1 > 0.0)) return {};
  return intersect(p_ranges(K.op), s.x0, s.x1);
}

inline std::vector<Interval> state_images(const KreinModel& K, const TestFunction1D& f) {
  std::vector<Interval> out;
  for (const auto& iv : support_intervals(f))
    for (const auto& pc : K.op.pieces) {
      double lo = std::max(iv.a, pc.a), hi = std::min(iv.b, pc.b);
      if (lo < hi) out.push_back({std::min(K.op.P(lo), K.op.P(hi)), std::max(K.op.P(lo), K.op.P(hi))});
    }
  return merge_intervals(out);
}

inline std::vector<double> kappa_breaks(const KreinModel& K, const Interval& iv) {
  std::vector<double> br{iv.a, iv.b};
  for (const auto& s : K.slit)
    for (double t : {s.a, s.b})
      if (t > iv.a && t < iv.b) br.push_back(t);
  std::sort(br.begin(), br.end());
  return br;
}

inline cplx point_bracket(const KreinSpectrum& S, const TestFunction2D& phi, const Fn1& f1, const Fn1& f2) {
  cplx s = 0.0;
  const auto& m = S.model->op;
  for (const auto& e : S.points) {
    if (e.kind == PointSpectrumEntry::Kind::SimplePole) {
      cplx p = phi(e.z0);
      if (p != 0.0) s += p * e.residue.bracket(m, f1, f2);
    } else {
      cplx p = phi(e.z0), d = phi.dz(1, e.z0);
      if (p != 0.0) s += p * e.p0.bracket(m, f1, f2);
      if (d != 0.0) s += d * e.a.bracket(m, f1, f2);
    }
  }
  return s;
}

// <f1| mu(phi) |f2> = point part + \int phi(x + i0) kappa(x) dx
inline cplx mu_bracket(const KreinSpectrum& S, const TestFunction2D& phi, const Fn1& f1, const Fn1& f2, const MuOptions& opt = {}) {
  const KreinModel& K = *S.model;
  cplx s = opt.points ? point_bracket(S, phi, f1, f2) : cplx(0.0);
  for (const auto& iv : continuous_range(K, phi))
    s += integrate_estimate([&](double x) {
      cplx p = phi(cplx(x, 0.0));
      return p == 0.0 ? cplx(0.0) : p * kappa_bracket(K, x, f1, f2);
    }, kappa_breaks(K, iv), opt.x_quad).value;
  return s;
}

// x -> -PV \int w(x') / (x - x') dx' summed over pieces, plus the local term
struct HilbertPieces {
  std::vector<Chebyshev> pv_density, local;
  cplx operator()(double x) const {
    cplx s = 0.0;
    for (const auto& w : pv_density) s -= pv_integrate([&](double t) { return w(t); }, x, w.a, w.b).value;
    for (const auto& w : local) s += w(x);
    return s;
  }
};

// state y -> g(y) k(P(y)) with k fitted on the images of supp g
inline Fn1 lift_through_g(const KreinModel& K, const HilbertPieces& hp, const ChebyshevOptions& copt) {
  std::vector<Chebyshev> k;
  for (const auto& iv : state_images(K, K.pert.g)) k.push_back(chebyshev_fit1(hp, iv.a, iv.b, copt));
  if (K.g.empty()) return {};
  return Fn1{[k, g = K.g, P = K.op.P](double y) {
               cplx gy = g(y);
               if (gy == 0.0) return cplx(0.0);
               double x = P(y);
               for (const auto& c : k)
                 if (x >= c.a && x <= c.b) return gy * c(x);
               return cplx(0.0);
             },
             K.g.lo, K.g.hi};
}

// mu(phi)|f2> as an L2 function on G
inline Fn1 mu_apply(const KreinSpectrum& S, const TestFunction2D& phi, const Fn1& f2, const MuOptions& opt = {}) {
  const KreinModel& K = *S.model;
  const auto& m = K.op;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  Fn1 out;
  if (opt.points)
    for (const auto& e : S.points) {
      auto add = [&](const DyadSum& d, cplx w) {
        if (w == 0.0) return;
        for (const auto& t : d.terms) out = sum(out, t.ket, w * t.coef * pair_fn(m, t.bra, f2));
      };
      if (e.kind == PointSpectrumEntry::Kind::SimplePole) add(e.residue, phi(e.z0));
      else {
        add(e.p0, phi(e.z0));
        add(e.a, phi.dz(1, e.z0));
      }
    }
  auto range = continuous_range(K, phi);
  if (range.empty()) return out;
  auto P = m.P;
  out = sum(out, Fn1{[phi, f2, P](double y) { return phi(cplx(P(y), 0.0)) * f2(y); }, f2.lo, f2.hi});
  HilbertPieces hp;
  for (const auto& r : range)
    for (const auto& s : intersect(K.slit, r.a, r.b)) {
      auto fits = chebyshev_fit([&](double x) {
        cplx p = phi(cplx(x, 0.0));
        if (p == 0.0) return std::vector<cplx>{0.0, 0.0};
        CBoundary cb = c_boundary(K, x);
        double D = cb.C1 * cb.C1 + pi2 * cb.C2 * cb.C2;
        if (std::sqrt(D) < 1e-10) throw RegimeError("spectral singularity at " + format_point(x), x);
        cplx ap = pv_fn(m, K.h, f2, x), bp = delta_fn(m, K.h, f2, x);
        return std::vector<cplx>{p * (cb.C2 * ap + cb.C1 * bp) / D, p * (cb.C1 * ap - pi2 * cb.C2 * bp) / D};
      }, s.a, s.b, 2, opt.cheb);
      hp.pv_density.push_back(fits[0]);
      hp.local.push_back(fits[1]);
    }
  if (hp.pv_density.empty()) return out;
  return sum(out, lift_through_g(K, hp, opt.cheb));
}

inline Fn1 apply_H(const KreinModel& K, const Fn1& f) {
  cplx s = pair_fn(K.op, K.h, f);
  double lo = K.g.empty() ? f.lo : std::min(f.lo, K.g.lo), hi = K.g.empty() ? f.hi : std::max(f.hi, K.g.hi);
  return Fn1{[f, g = K.g, s, P = K.op.P](double y) { return P(y) * f(y) + s * g(y); }, lo, hi};
}

inline Fn1 apply_H_adjoint(const KreinModel& K, const Fn1& f) {
  cplx s = pair_fn(K.op, K.g, f);
  double lo = K.h.empty() ? f.lo : std::min(f.lo, K.h.lo), hi = K.h.empty() ? f.hi : std::max(f.hi, K.h.hi);
  return Fn1{[f, h = K.h, s, P = K.op.P](double y) { return P(y) * f(y) + s * h(y); }, lo, hi};
}

inline CheckReport check_multiplicative(const KreinSpectrum& S, const TestFunction2D& phi1, const TestFunction2D& phi2,
                                        const ProbePairs& pairs, double tol = 1e-4) {
  MuOptions opt;
  opt.x_quad.abs_tol = 1e-3 * tol;
  std::vector<cplx> lhs, rhs;
  auto prod = phi1 * phi2;
  for (const auto& [f1, f2] : pairs) {
    lhs.push_back(mu_bracket(S, phi1, f1, mu_apply(S, phi2, f2, opt), opt));
    rhs.push_back(mu_bracket(S, prod, f1, f2, opt));
  }
  return make_report("multiplicative", lhs, rhs, tol);
}

// M(phi_pole) M(phi_slit) = 0 and M(phi_slit) M(phi_pole) = 0
inline CheckReport check_cross_component(const KreinSpectrum& S, const TestFunction2D& pole, const TestFunction2D& slit,
                                         const ProbePairs& pairs, double tol = 1e-6) {
  MuOptions opt;
  opt.x_quad.abs_tol = 1e-3 * tol;
  std::vector<cplx> lhs, rhs;
  for (const auto& [f1, f2] : pairs) {
    lhs.push_back(mu_bracket(S, pole, f1, mu_apply(S, slit, f2, opt), opt));
    lhs.push_back(mu_bracket(S, slit, f1, mu_apply(S, pole, f2, opt), opt));
    rhs.push_back(0.0);
    rhs.push_back(0.0);
  }
  return make_report("cross_component", lhs, rhs, tol);
}

inline std::vector<CheckReport> check_orthogonality(const KreinSpectrum& S, const TestFunction2D& phi1, const TestFunction2D& phi2,
                                                    const Fn1& f1, const Fn1& f2, double tol = 1e-4) {
  const KreinModel& K = *S.model;
  const auto& m = K.op;
  MuOptions opt;
  opt.points = false;
  opt.x_quad.abs_tol = 1e-3 * tol;
  auto r1 = continuous_range(K, phi1), r2 = continuous_range(K, phi2);
  auto inside_slit = [&](const std::vector<Interval>& r, const TestFunction2D& phi) {
    for (const auto& iv : r)
      for (int j = 0; j <= 256; ++j) {
        double x = iv.a + (iv.b - iv.a) * j / 256.0;
        if (phi(cplx(x, 0.0)) != 0.0 && !on_slit(K, x)) throw RegimeError("test function leaves the slit at " + format_point(x), x);
      }
  };
  if (!K.slit.empty()) {
    inside_slit(r1, phi1);
    inside_slit(r2, phi2);
  }

  std::vector<CheckReport> out;
  out.push_back(make_report("orthogonality_kappa", mu_bracket(S, phi1, f1, mu_apply(S, phi2, f2, opt), opt),
                            mu_bracket(S, phi1 * phi2, f1, f2, opt), tol));
  if (K.slit.empty()) return out;

  // smeared ket x' -> C1 B + C2 A against phi2
  HilbertPieces hp;
  for (const auto& r : r2)
    for (const auto& s : intersect(K.slit, r.a, r.b)) {
      auto fits = chebyshev_fit([&](double x) {
        cplx p = phi2(cplx(x, 0.0));
        if (p == 0.0) return std::vector<cplx>{0.0, 0.0};
        CBoundary cb = c_boundary(K, x);
        return std::vector<cplx>{p * cb.C2, p * cb.C1};
      }, s.a, s.b, 2, ChebyshevOptions{1e-10, 16, 1024});
      hp.pv_density.push_back(fits[0]);
      hp.local.push_back(fits[1]);
    }
  Fn1 ket = hp.pv_density.empty() ? Fn1{} : lift_through_g(K, hp, ChebyshevOptions{1e-10, 16, 1024});

  IntegrateOptions q{1e-9, 1e-3 * tol, 16, 4000};
  cplx lhs_alpha = 0.0, rhs_alpha = 0.0, lhs_p = 0.0;
  Fn1 l1 = conj_fn(f1);
  for (const auto& iv : r1) {
    auto br = kappa_breaks(K, iv);
    lhs_alpha += integrate_estimate([&](double x) {
      cplx p = phi1(cplx(x, 0.0));
      if (p == 0.0 || ket.empty()) return cplx(0.0);
      CBoundary cb = c_boundary(K, x);
      return p * (cb.C1 * delta_fn(m, K.h, ket, x) + cb.C2 * pv_fn(m, K.h, ket, x));
    }, br, q).value;
    rhs_alpha += integrate_estimate([&](double x) {
      cplx p = phi1(cplx(x, 0.0)) * phi2(cplx(x, 0.0));
      if (p == 0.0) return cplx(0.0);
      CBoundary cb = c_boundary(K, x);
      double D = cb.C1 * cb.C1 + std::numbers::pi * std::numbers::pi * cb.C2 * cb.C2;
      return p * D * cb.C2;
    }, br, q).value;
    lhs_p += integrate_estimate([&](double x) {
      cplx p = phi1(cplx(x, 0.0));
      if (p == 0.0 || ket.empty()) return cplx(0.0);
      CBoundary cb = c_boundary(K, x);
      return p * (delta_fn(m, l1, ket, x) - delta_fn(m, l1, K.g, x) * delta_fn(m, K.h, ket, x) / cb.C2);
    }, br, q).value;
  }
  out.push_back(make_report("orthogonality_alpha", lhs_alpha, rhs_alpha, tol));
  out.push_back(make_report("orthogonality_p_alpha", lhs_p, cplx(0.0), tol));
  return out;
}

inline std::vector<CheckReport> check_eigenrelation(const KreinSpectrum& S, const TestFunction2D& phi, const Fn1& f1, const Fn1& f2,
                                                    double tol = 1e-4) {
  const KreinModel& K = *S.model;
  MuOptions opt;
  opt.x_quad.abs_tol = 1e-3 * tol;
  cplx rhs = mu_bracket(S, phi.times_z(), f1, f2, opt);
  return {make_report("eigenrelation_kappa_H", mu_bracket(S, phi, f1, apply_H(K, f2), opt), rhs, tol),
          make_report("eigenrelation_H_kappa", mu_bracket(S, phi, apply_H_adjoint(K, f1), f2, opt), rhs, tol)};
}

inline CheckReport check_eigenrelation_discrete(const KreinSpectrum& S, double tol = 1e-7) {
  const KreinModel& K = *S.model;
  std::vector<cplx> lhs, rhs;
  for (const auto& e : S.points) {
    if (e.kind != PointSpectrumEntry::Kind::SimplePole) continue;
    Fn1 alpha = divided_state(K, K.g, e.z0, 1, 1.0);
    Fn1 res = sum(apply_H(K, alpha), alpha, -e.z0);
    double num = std::sqrt(std::abs(pair_fn(K.op, conj_fn(res), res)));
    double den = std::sqrt(std::abs(pair_fn(K.op, conj_fn(alpha), alpha)));
    lhs.push_back(num / den);
    rhs.push_back(0.0);
  }
  return make_report("eigenrelation_discrete", lhs, rhs, tol);
}

inline CheckReport check_completeness(const KreinSpectrum& S, const ProbePairs& pairs, double tol = 1e-4) {
  if (!S.searched) throw DomainError("completeness needs the point spectrum; run find_point_spectrum first");
  const KreinModel& K = *S.model;
  IntegrateOptions q{1e-9, 1e-3 * tol, 16, 4000};
  std::vector<cplx> lhs, rhs;
  for (const auto& [f1, f2] : pairs) {
    cplx s = 0.0;
    for (const auto& e : S.points)
      s += e.kind == PointSpectrumEntry::Kind::SimplePole ? e.residue.bracket(K.op, f1, f2) : e.p0.bracket(K.op, f1, f2);
    for (const auto& iv : p_ranges(K.op))
      s += integrate_estimate([&](double x) { return kappa_bracket(K, x, f1, f2); }, kappa_breaks(K, iv), q).value;
    lhs.push_back(s);
    rhs.push_back(bracket(K.op, f1, f2));
  }
  return make_report("completeness", lhs, rhs, tol);
}

inline CheckReport check_residues(const KreinSpectrum& S, const ProbePairs& pairs, double tol = 1e-7) {
  const KreinModel& K = *S.model;
  std::vector<cplx> lhs, rhs;
  for (const auto& e : S.points) {
    if (e.kind != PointSpectrumEntry::Kind::SimplePole) continue;
    double rad = residue_radius(K, e.z0, S.points);
    for (const auto& [f1, f2] : pairs) {
      lhs.push_back(e.residue.bracket(K.op, f1, f2));
      rhs.push_back(residue_contour(K, e.z0, rad, f1, f2));
    }
  }
  return make_report("residue_contour", lhs, rhs, tol);
}

inline std::vector<CheckReport> check_jordan_relations(const KreinSpectrum& S, const ProbePairs& pairs, double tol = 1e-6) {
  const auto& m = S.model->op;
  std::vector<CheckReport> out;
  for (const auto& e : S.points) {
    if (e.kind != PointSpectrumEntry::Kind::DoubleZeroJordan) continue;
    auto aa = e.a.compose(m, e.a), pp = e.p0.compose(m, e.p0), ap = e.a.compose(m, e.p0), pa = e.p0.compose(m, e.a);
    std::vector<cplx> vaa, vpp, vap, vpa, za, zp, zz;
    for (const auto& [f1, f2] : pairs) {
      cplx a = e.a.bracket(m, f1, f2), p = e.p0.bracket(m, f1, f2);
      vaa.push_back(aa.bracket(m, f1, f2));
      vpp.push_back(pp.bracket(m, f1, f2));
      vap.push_back(ap.bracket(m, f1, f2));
      vpa.push_back(pa.bracket(m, f1, f2));
      za.push_back(a);
      zp.push_back(p);
      zz.push_back(0.0);
    }
    out.push_back(make_report("jordan_a_squared", vaa, zz, tol));
    out.push_back(make_report("jordan_p0_squared", vpp, zp, tol));
    out.push_back(make_report("jordan_a_p0", vap, za, tol));
    out.push_back(make_report("jordan_p0_a", vpa, za, tol));
  }
  return out;
}

// z^2 <f1|R(z)|f2> at z = i 10^-k, k = 2..4, extrapolated to 0, against <f1|a|f2>
inline CheckReport check_laurent(const KreinSpectrum& S, const ProbePairs& pairs, double tol = 1e-5) {
  const KreinModel& K = *S.model;
  std::vector<cplx> lhs, rhs;
  for (const auto& e : S.points) {
    if (e.kind != PointSpectrumEntry::Kind::DoubleZeroJordan) continue;
    for (const auto& [f1, f2] : pairs) {
      std::vector<double> t{1e-2, 1e-3, 1e-4};
      std::vector<cplx> v;
      for (double s : t) {
        cplx w(0.0, s);
        v.push_back(w * w * krein_resolvent_bracket(K, e.z0 + w, f1, f2));
      }
      lhs.push_back(richardson_zero(t, v).value);
      rhs.push_back(e.a.bracket(K.op, f1, f2));
    }
  }
  return make_report("jordan_laurent", lhs, rhs, tol);
}

struct ResolventGrid {
  int z_panels = 2, z_order = 16;
  int y_panels = 8, y_order = 16;
};

// Both sides with fixed tensor grids; test functions must stay off the real axis.
inline CheckReport check_resolvent_equation(const KreinModel& K, const TestFunction2D& phi1, const TestFunction2D& phi2,
                                            const Fn1& f1, const Fn1& f2, double tol = 1e-4, const ResolventGrid& grid = {}) {
  Rect s1 = phi1.support(), s2 = phi2.support();
  for (const Rect& s : {s1, s2})
    if (s.y0 <= 0.0 && s.y1 >= 0.0)
      throw CapabilityError("resolvent equation for the perturbed operator needs test functions supported off the real axis");
  const auto& m = K.op;
  const auto& ry = gauss_legendre(grid.y_order);
  std::vector<double> ys, wy;
  std::vector<Interval> spans;
  for (const Fn1* f : {&f1, &f2, &K.g, &K.h})
    if (!f->empty()) spans.push_back({f->lo, f->hi});
  for (const auto& sp : merge_intervals(spans))
    for (const auto& pc : m.pieces) {
      double lo = std::max(sp.a, pc.a), hi = std::min(sp.b, pc.b);
      if (!(lo < hi)) continue;
      double h = (hi - lo) / grid.y_panels;
      for (int i = 0; i < grid.y_panels; ++i)
        for (std::size_t a = 0; a < ry.nodes.size(); ++a) {
          ys.push_back(lo + h * (i + 0.5 * (1.0 + ry.nodes[a])));
          wy.push_back(0.5 * h * ry.weights[a]);
        }
    }
  const std::size_t ny = ys.size();
  std::vector<double> Py(ny);
  std::vector<cplx> F1(ny), F2(ny), G(ny), H(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    Py[j] = m.P(ys[j]);
    F1[j] = std::conj(f1(ys[j]));
    F2[j] = f2(ys[j]);
    G[j] = K.g(ys[j]);
    H[j] = K.h(ys[j]);
  }
  auto pairing = [&](const std::vector<cplx>& l, const std::vector<cplx>& r, cplx z) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < ny; ++j) s += wy[j] * l[j] * r[j] / (z - Py[j]);
    return s;
  };
  auto R = [&](cplx z, const std::vector<cplx>& right) {
    return pairing(F1, right, z) + pairing(F1, G, z) * pairing(H, right, z) / c_value(K, z);
  };
  struct Node {
    cplx z;
    cplx w;
  };
  auto nodes = [&](const Rect& s) {
    const auto& rz = gauss_legendre(grid.z_order);
    std::vector<Node> out;
    double hx = (s.x1 - s.x0) / grid.z_panels, hy = (s.y1 - s.y0) / grid.z_panels;
    for (int i = 0; i < grid.z_panels; ++i)
      for (std::size_t a = 0; a < rz.nodes.size(); ++a)
        for (int j = 0; j < grid.z_panels; ++j)
          for (std::size_t b = 0; b < rz.nodes.size(); ++b)
            out.push_back({cplx(s.x0 + hx * (i + 0.5 * (1.0 + rz.nodes[a])), s.y0 + hy * (j + 0.5 * (1.0 + rz.nodes[b]))),
                           0.25 * hx * hy * rz.weights[a] * rz.weights[b]});
    return out;
  };
  auto n1 = nodes(s1), n2 = nodes(s2);

  // psi = R(phi2) f2 on the y grid
  std::vector<cplx> psi(ny, 0.0);
  for (const auto& nd : n2) {
    cplx p = phi2(nd.z);
    if (p == 0.0) continue;
    cplx c = pairing(H, F2, nd.z) / c_value(K, nd.z);
    for (std::size_t j = 0; j < ny; ++j) psi[j] += nd.w * p * (F2[j] + G[j] * c) / (nd.z - Py[j]);
  }
  cplx lhs = 0.0;
  for (const auto& nd : n1) {
    cplx p = phi1(nd.z);
    if (p != 0.0) lhs += nd.w * p * R(nd.z, psi);
  }
  PolarGrid pg;
  cplx rhs = 0.0;
  for (const auto& nd : n2) {
    cplx p = phi2(nd.z);
    if (p != 0.0) rhs -= nd.w * p * cauchy_transform_fixed(phi1, nd.z, pg) * R(nd.z, F2);
  }
  for (const auto& nd : n1) {
    cplx p = phi1(nd.z);
    if (p != 0.0) rhs -= nd.w * p * cauchy_transform_fixed(phi2, nd.z, pg) * R(nd.z, F2);
  }
  return make_report("resolvent_equation", lhs, rhs, tol);
}

}  // namespace spectraldist

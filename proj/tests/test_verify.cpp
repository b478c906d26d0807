#include <gtest/gtest.h>

#include <numbers>

#include "spectraldist/verify.hpp"

namespace sd = spectraldist;
using sd::cplx;

namespace {

const sd::Example2& regime(double c0) {
  static std::map<double, sd::Example2> cache;
  auto it = cache.find(c0);
  if (it == cache.end()) it = cache.emplace(c0, sd::example2_build(2.0, sd::example2_amplitude(2.0, c0))).first;
  return it->second;
}

const sd::KreinSpectrum& spectrum(double c0) {
  static std::map<double, sd::KreinSpectrum> cache;
  auto it = cache.find(c0);
  if (it == cache.end()) {
    const auto& e = regime(c0);
    it = cache.emplace(c0, sd::krein_spectrum(e.model, sd::example2_scan_region(e))).first;
  }
  return it->second;
}

sd::ProbePairs pairs(const sd::KreinModel& K, std::uint64_t seed, int n = 4) {
  return sd::probe_pairs(sd::make_probes(K.op.G.intervals, seed, 2 * n));
}

sd::TestFunction2D slit_bump(double x, double r) { return sd::make_product_bump(cplx(x, 0.0), r, 0.4); }

}  // namespace

TEST(Report, PassesOnEitherBound) {
  auto r = sd::make_report("x", cplx(1.0), cplx(1.0 + 1e-9), 1e-8);
  EXPECT_TRUE(r.passed);
  auto z = sd::make_report("z", cplx(1e-9), cplx(0.0), 1e-8);
  EXPECT_TRUE(z.passed);
  EXPECT_DOUBLE_EQ(z.rel_err, 1.0);
  auto f = sd::make_report("f", cplx(2.0), cplx(1.0), 1e-3);
  EXPECT_FALSE(f.passed);
  EXPECT_DOUBLE_EQ(f.abs_err, 1.0);
  EXPECT_DOUBLE_EQ(f.rel_err, 0.5);
}

TEST(Probes, SeededAndInsideDomain) {
  std::vector<sd::Interval> G{{-2.0, -1.0}, {1.0, 2.0}};
  auto a = sd::make_probes(G, 7, 6), b = sd::make_probes(G, 7, 6), c = sd::make_probes(G, 8, 6);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].bumps.size(); ++k) {
      const auto& x = a[i].bumps[k];
      EXPECT_EQ(x.center, b[i].bumps[k].center);
      EXPECT_EQ(x.coef, b[i].bumps[k].coef);
      bool inside = false;
      for (const auto& iv : G) inside |= x.center - x.radius > iv.a && x.center + x.radius < iv.b;
      EXPECT_TRUE(inside);
    }
  EXPECT_NE(a[0].bumps[0].center, c[0].bumps[0].center);
}

TEST(Chebyshev, FitsSmoothFunctionAndTrims) {
  auto ch = sd::chebyshev_fit1([](double x) { return cplx(std::exp(x), std::sin(3.0 * x)); }, -1.0, 2.0);
  EXPECT_LT(ch.c.size(), 64u);
  for (double x : {-1.0, -0.3, 0.5, 1.7, 2.0}) EXPECT_LT(std::abs(ch(x) - cplx(std::exp(x), std::sin(3.0 * x))), 1e-10);
  EXPECT_EQ(ch(2.5), cplx(0.0));
}

TEST(Distributions, DeltaIdentity) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 3; ++i) {
    double cx = 0.4 * sd::unit_draw(rng) - 0.2, cy = 0.4 * sd::unit_draw(rng) - 0.2;
    auto r = sd::check_delta_identity(sd::make_product_bump(cplx(cx, cy), 0.5 + 0.3 * sd::unit_draw(rng), 0.6));
    EXPECT_TRUE(r.passed) << r.abs_err;
  }
}

TEST(Matrix, DiagonalMultiplicativeAndResolvent) {
  sd::MatrixC A = sd::MatrixC::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 2.0;
  auto J = sd::jordan_decompose(A);
  auto p1 = sd::make_product_bump(cplx(1.0, 0.1), 0.6, 0.5), p2 = sd::make_product_bump(cplx(1.3, -0.1), 0.8, 0.6);
  auto m = sd::check_multiplicative(J, p1, p2, 1e-9);
  EXPECT_TRUE(m.passed) << m.abs_err;
  auto off1 = sd::make_product_bump(cplx(1.5, 1.0), 0.6, 0.3), off2 = sd::make_product_bump(cplx(1.2, 0.8), 0.5, 0.4);
  auto r = sd::check_resolvent_equation(J, off1, off2, 1e-6);
  EXPECT_TRUE(r.passed) << r.abs_err << " " << r.rel_err;
}

TEST(Matrix, JordanBlockResolventEquation) {
  sd::MatrixC A = sd::MatrixC::Zero(2, 2);
  A(0, 0) = A(1, 1) = 0.5;
  A(0, 1) = 1.0;
  auto J = sd::jordan_decompose(A);
  auto p1 = sd::make_product_bump(cplx(0.6, 0.1), 0.8, 0.6), p2 = sd::make_product_bump(cplx(0.7, 0.2), 0.6, 0.5);
  auto r = sd::check_resolvent_equation(J, p1, p2);
  EXPECT_TRUE(r.passed) << r.abs_err << " " << r.rel_err;
  EXPECT_LT(r.rel_err, 1e-5);
  EXPECT_GT(r.lhs.norm(), 1e-2);
}

TEST(MultOp, PlemeljAndCoarea) {
  auto m = sd::make_model({{{-1.0, 0.5}, {1.0, 2.0}}}, sd::ProfileP{{0.0, 1.0, 0.3}});
  auto probes = sd::make_probes(m.G.intervals, 3, 2);
  auto xs = sd::x_grid(m, 4);
  auto p = sd::check_plemelj(m, probes[0].fn(), probes[1].fn(), xs);
  EXPECT_TRUE(p.passed) << p.abs_err;
  auto c = sd::check_coarea(m, probes[0].fn());
  EXPECT_TRUE(c.passed) << c.abs_err;
  auto mul = sd::check_multiplicative(m, sd::make_bump(0.5, 0.7), sd::make_bump(1.0, 1.0), sd::probe_pairs(probes));
  EXPECT_TRUE(mul.passed);
}

TEST(Krein, UnperturbedChecksReduceToCoarea) {
  auto op = sd::make_model({{{1.0, 2.0}}}, sd::ProfileP::identity());
  auto K = sd::make_krein(op, {sd::make_bump(1.5, 0.4), {}});
  sd::KreinSpectrum S{&K, {}, true};
  auto pp = pairs(K, 5, 2);
  auto c = sd::check_completeness(S, pp, 1e-8);
  EXPECT_TRUE(c.passed) << c.abs_err;
  auto o = sd::check_orthogonality(S, slit_bump(1.5, 0.3), slit_bump(1.4, 0.25), pp[0].first, pp[0].second, 1e-8);
  EXPECT_TRUE(o[0].passed) << o[0].abs_err;
}

TEST(Krein, CompletenessNeedsPointSpectrum) {
  const auto& e = regime(-0.5);
  sd::KreinSpectrum S{&e.model, {}, false};
  EXPECT_THROW(sd::check_completeness(S, pairs(e.model, 1, 1)), sd::DomainError);
}

TEST(Krein, ImaginaryPairCompletenessAndResidues) {
  const auto& S = spectrum(-0.5);
  ASSERT_EQ(S.points.size(), 2u);
  auto pp = pairs(*S.model, 21);
  auto c = sd::check_completeness(S, pp);
  EXPECT_TRUE(c.passed) << c.abs_err << " " << c.rel_err;
  auto r = sd::check_residues(S, pp);
  EXPECT_TRUE(r.passed) << r.abs_err;
  auto d = sd::check_eigenrelation_discrete(S);
  EXPECT_TRUE(d.passed) << d.abs_err;
}

TEST(Krein, RealPairCompleteness) {
  const auto& S = spectrum(0.3);
  ASSERT_EQ(S.points.size(), 2u);
  auto c = sd::check_completeness(S, pairs(*S.model, 22));
  EXPECT_TRUE(c.passed) << c.abs_err << " " << c.rel_err;
}

TEST(Krein, JordanCompletenessAndRelations) {
  const auto& S = spectrum(0.0);
  ASSERT_EQ(S.points.size(), 1u);
  auto pp = pairs(*S.model, 23);
  auto c = sd::check_completeness(S, pp);
  EXPECT_TRUE(c.passed) << c.abs_err;
  for (const auto& r : sd::check_jordan_relations(S, pp)) EXPECT_TRUE(r.passed) << r.name << " " << r.abs_err;
  auto l = sd::check_laurent(S, pp);
  EXPECT_TRUE(l.passed) << l.abs_err << " " << l.rel_err;
}

TEST(Krein, MultiplicativeOnSlit) {
  const auto& S = spectrum(-0.5);
  auto r = sd::check_multiplicative(S, slit_bump(1.5, 0.35), slit_bump(1.6, 0.3), pairs(*S.model, 31, 2));
  EXPECT_TRUE(r.passed) << r.abs_err << " " << r.rel_err;
}

TEST(Krein, CrossComponent) {
  const auto& S = spectrum(-0.5);
  cplx z0 = S.points[1].z0;
  auto pole = sd::make_product_bump(z0, 0.3, 0.3 * std::abs(z0.imag()));
  auto r = sd::check_cross_component(S, pole, slit_bump(1.5, 0.35), pairs(*S.model, 32, 2));
  EXPECT_TRUE(r.passed) << r.abs_err;
}

TEST(Krein, OrthogonalityFamilies) {
  const auto& S = spectrum(-0.5);
  auto pp = pairs(*S.model, 41, 1);
  auto same = sd::check_orthogonality(S, slit_bump(1.5, 0.3), slit_bump(1.5, 0.3), pp[0].first, pp[0].second);
  ASSERT_EQ(same.size(), 3u);
  for (const auto& r : same) EXPECT_TRUE(r.passed) << r.name << " " << r.abs_err << " " << r.rel_err;
  auto apart = sd::check_orthogonality(S, slit_bump(1.25, 0.15), slit_bump(1.7, 0.15), pp[0].first, pp[0].second, 1e-5);
  for (const auto& r : apart) {
    EXPECT_LT(r.abs_err, 1e-5) << r.name;
    EXPECT_LT(std::abs(r.lhs(0, 0)), 1e-5) << r.name;
  }
}

TEST(Krein, OrthogonalityRejectsTestFunctionLeavingSlit) {
  const auto& S = spectrum(-0.5);
  auto pp = pairs(*S.model, 42, 1);
  EXPECT_THROW(sd::check_orthogonality(S, slit_bump(1.5, 0.6), slit_bump(1.5, 0.3), pp[0].first, pp[0].second),
               sd::RegimeError);
}

TEST(Krein, ContinuousEigenrelation) {
  const auto& S = spectrum(-0.5);
  auto pp = pairs(*S.model, 51, 1);
  for (const auto& r : sd::check_eigenrelation(S, slit_bump(1.5, 0.4), pp[0].first, pp[0].second))
    EXPECT_TRUE(r.passed) << r.name << " " << r.abs_err << " " << r.rel_err;
  sd::TestFunction2D zero;
  for (const auto& r : sd::check_eigenrelation(S, zero, pp[0].first, pp[0].second)) {
    EXPECT_EQ(r.abs_err, 0.0);
    EXPECT_TRUE(r.passed);
  }
}

TEST(Krein, ResolventEquationOffAxis) {
  const auto& e = regime(-0.5);
  auto pp = pairs(e.model, 61, 1);
  auto p1 = sd::make_product_bump(cplx(1.4, 0.5), 0.5, 0.3), p2 = sd::make_product_bump(cplx(1.6, 0.6), 0.4, 0.3);
  auto r = sd::check_resolvent_equation(e.model, p1, p2, pp[0].first, pp[0].second);
  EXPECT_TRUE(r.passed) << r.abs_err << " " << r.rel_err;
  EXPECT_THROW(sd::check_resolvent_equation(e.model, slit_bump(1.5, 0.3), p2, pp[0].first, pp[0].second), sd::CapabilityError);
}

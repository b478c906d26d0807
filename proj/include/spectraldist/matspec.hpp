#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distalg.hpp"

namespace spectraldist {

using MatrixC = Eigen::MatrixXcd;

struct JordanForm {
  std::vector<cplx> eigenvalues;
  std::vector<MatrixC> projectors;
  std::vector<MatrixC> nilpotents;
  std::vector<int> multiplicities;
  std::vector<int> nilpotency;  // smallest q with a^q = 0
  int dimension = 0;
};

inline JordanForm jordan_decompose(const MatrixC& A, double cluster_tol = 1e-6) {
  const int n = static_cast<int>(A.rows());
  if (n == 0 || A.cols() != n) throw DomainError("jordan_decompose needs a non-empty square matrix");
  if (n > 8) throw DomainError("jordan_decompose is limited to 8x8 matrices");
  if (!A.allFinite()) throw DomainError("matrix has non-finite entries");

  Eigen::ComplexEigenSolver<MatrixC> es(A, false);
  Eigen::VectorXcd ev = es.eigenvalues();

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(ev(i) - ev(j)) <= cluster_tol) parent[find(i)] = find(j);

  struct Cluster {
    cplx mean;
    int count;
  };
  std::vector<Cluster> clusters;
  std::vector<int> roots;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    auto it = std::find(roots.begin(), roots.end(), r);
    if (it == roots.end()) {
      roots.push_back(r);
      clusters.push_back({ev(i), 1});
    } else {
      auto& c = clusters[it - roots.begin()];
      c.mean += ev(i);
      c.count += 1;
    }
  }
  for (auto& c : clusters) c.mean /= double(c.count);
  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    if (a.mean.real() != b.mean.real()) return a.mean.real() < b.mean.real();
    return a.mean.imag() < b.mean.imag();
  });

  const MatrixC I = MatrixC::Identity(n, n);
  MatrixC V(n, n);
  int col = 0;
  for (const auto& c : clusters) {
    MatrixC N = I;
    for (int q = 0; q < c.count; ++q) N = N * (A - c.mean * I);
    Eigen::JacobiSVD<MatrixC> svd(N, Eigen::ComputeFullV);
    V.middleCols(col, c.count) = svd.matrixV().rightCols(c.count);
    col += c.count;
  }
  Eigen::JacobiSVD<MatrixC> vs(V);
  double cond = vs.singularValues()(0) / vs.singularValues()(n - 1);
  if (!(cond < 1e10)) throw ConditioningError("generalized eigenvector basis is ill-conditioned", cond);
  MatrixC W = V.inverse();

  JordanForm J;
  J.dimension = n;
  col = 0;
  for (const auto& c : clusters) {
    MatrixC p = V.middleCols(col, c.count) * W.middleRows(col, c.count);
    MatrixC a = (A - c.mean * I) * p;
    col += c.count;
    double scale = std::max(1.0, A.norm());
    int q = c.count;
    MatrixC ak = a;
    for (int k = 1; k <= c.count; ++k) {
      if (ak.norm() <= 1e-8 * std::pow(scale, k)) {
        q = k;
        break;
      }
      ak = ak * a;
    }
    J.eigenvalues.push_back(c.mean);
    J.projectors.push_back(p);
    J.nilpotents.push_back(q == 1 ? MatrixC::Zero(n, n) : a);
    J.multiplicities.push_back(c.count);
    J.nilpotency.push_back(q);
  }

  MatrixC sum_p = MatrixC::Zero(n, n), recon = MatrixC::Zero(n, n);
  double pdefect = 0.0;
  for (std::size_t i = 0; i < J.eigenvalues.size(); ++i) {
    sum_p += J.projectors[i];
    recon += J.eigenvalues[i] * J.projectors[i] + J.nilpotents[i];
    for (std::size_t j = 0; j < J.eigenvalues.size(); ++j) {
      MatrixC pp = J.projectors[i] * J.projectors[j];
      if (i == j) pp -= J.projectors[i];
      pdefect = std::max(pdefect, pp.norm());
    }
  }
  pdefect = std::max(pdefect, (sum_p - I).norm());
  double rdefect = (recon - A).norm() / std::max(1.0, A.norm());
  double allowed = 1e-10 * std::max(1.0, cond);
  if (pdefect > allowed) throw ConditioningError("eigenprojectors fail p_i p_j = delta_ij p_i", pdefect);
  if (rdefect > 1e-8) throw ConditioningError("Jordan data do not reconstruct the matrix", rdefect);
  return J;
}

inline void check_derivative_cap(const JordanForm& J) {
  for (int q : J.nilpotency)
    if (q - 1 > kMaxDerivative) throw CapabilityError("Jordan block needs derivatives beyond order 6");
}

// M(phi) = sum_i p_i sum_k a_i^k (d^k phi)(lambda_i) / k!
inline MatrixC mat_spectral_apply(const JordanForm& J, const TestFunction2D& phi) {
  check_derivative_cap(J);
  const int n = J.dimension;
  MatrixC M = MatrixC::Zero(n, n);
  for (std::size_t i = 0; i < J.eigenvalues.size(); ++i) {
    MatrixC ak = J.projectors[i];
    for (int k = 0; k < J.nilpotency[i]; ++k) {
      M += ak * (phi.dz(k, J.eigenvalues[i]) / factorial(k));
      ak = ak * J.nilpotents[i];
    }
  }
  return M;
}

// R(psi) = sum_i sum_k p_i a_i^k PVPower(k, lambda_i)(psi), psi any function with bounded support.
template <class F>
MatrixC mat_resolvent_apply(const JordanForm& J, F&& psi, const Rect& supp, const PolarOptions& opt = {}) {
  check_derivative_cap(J);
  const int n = J.dimension;
  MatrixC R = MatrixC::Zero(n, n);
  for (std::size_t i = 0; i < J.eigenvalues.size(); ++i) {
    auto m = polar_moments_adaptive(psi, J.eigenvalues[i], J.nilpotency[i] - 1, supp, opt);
    MatrixC ak = J.projectors[i];
    for (int k = 0; k < J.nilpotency[i]; ++k) {
      R += ak * m[k].value;
      ak = ak * J.nilpotents[i];
    }
  }
  return R;
}

inline MatrixC mat_resolvent_apply(const JordanForm& J, const TestFunction2D& phi, const PolarOptions& opt = {}) {
  return mat_resolvent_apply(J, phi, phi.support(), opt);
}

struct UnitaryResult {
  MatrixC value;
  double tail = 0.0;
};

// M(phi) = sum_{|l| <= L} U^l (1/2pi) int exp(-i theta l) phi(exp(i theta)) d theta
inline UnitaryResult unitary_spectral_apply(const MatrixC& U, const TestFunction2D& phi, int L) {
  const int n = static_cast<int>(U.rows());
  if (n == 0 || U.cols() != n || n > 8) throw DomainError("unitary input must be square and at most 8x8");
  if (L < 1) throw DomainError("truncation L must be at least 1");
  if ((U.adjoint() * U - MatrixC::Identity(n, n)).norm() >= 1e-10) throw DomainError("matrix is not unitary");
  const int N = std::max(4096, 16 * L);
  std::vector<cplx> samples(N);
  for (int j = 0; j < N; ++j) samples[j] = phi(std::polar(1.0, 2.0 * std::numbers::pi * j / N));
  auto coef = [&](int l) {
    cplx s = 0.0;
    for (int j = 0; j < N; ++j) s += samples[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(l) * j / N);
    return s / double(N);
  };
  UnitaryResult r;
  r.value = coef(0) * MatrixC::Identity(n, n);
  MatrixC up = MatrixC::Identity(n, n), down = MatrixC::Identity(n, n);
  MatrixC Ua = U.adjoint();
  for (int l = 1; l <= L; ++l) {
    up = up * U;
    down = down * Ua;
    cplx cp = coef(l), cm = coef(-l);
    r.value += cp * up + cm * down;
    if (l > L - 4) r.tail += std::abs(cp) + std::abs(cm);
  }
  return r;
}

}  // namespace spectraldist

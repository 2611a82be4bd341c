#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library's propagation code.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using C = std::complex<double>;
using M2 = Eigen::Matrix2cd;
constexpr double pi = 3.14159265358979323846;

inline M2 sx() { M2 m; m << 0, 1, 1, 0; return m; }
inline M2 sy() { M2 m; m << 0, C(0, -1), C(0, 1), 0; return m; }
inline M2 sz() { M2 m; m << 1, 0, 0, -1; return m; }

/// H in MHz with spin-1/2 operators.
inline M2 hamiltonian(double detuning, double rabi, double phase) {
  return 0.5 * detuning * sz() + 0.5 * rabi * (std::cos(phase) * sx() + std::sin(phase) * sy());
}

/// exp(-i 2 pi H t) by eigendecomposition.
inline M2 propagator(const M2& h, double t) {
  Eigen::SelfAdjointEigenSolver<M2> es(h);
  M2 d = M2::Zero();
  for (int k = 0; k < 2; ++k) d(k, k) = std::exp(C(0, -2.0 * pi * es.eigenvalues()(k) * t));
  return es.eigenvectors() * d * es.eigenvectors().adjoint();
}

struct Seg {
  double duration, rabi, phase;
};

/// Product of segment propagators, first segment applied first.
inline M2 sequence(const std::vector<Seg>& segs, double detuning) {
  M2 u = M2::Identity();
  for (const auto& s : segs) u = propagator(hamiltonian(detuning, s.rabi, s.phase), s.duration) * u;
  return u;
}

/// 1 - |Tr(A^dag B)| / 2
inline double infidelity(const M2& a, const M2& b) { return 1.0 - std::abs((a.adjoint() * b).trace()) / 2.0; }

inline M2 rotation(double angle, double phase) {
  return (std::cos(angle / 2) * M2::Identity() -
          C(0, 1) * std::sin(angle / 2) * (std::cos(phase) * sx() + std::sin(phase) * sy()));
}

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle

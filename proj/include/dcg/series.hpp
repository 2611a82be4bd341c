#pragma once

// Truncated power series in one real variable (coefficients c_0..c_K).
// Used to push the detuning dependence of a pulse sequence through the
// propagator exactly, order by order.

#include <complex>
#include <vector>

namespace dcg::series {

using Real = std::vector<double>;
using Cplx = std::vector<std::complex<double>>;

template <class T>
std::vector<T> zeros(int order) {
  return std::vector<T>(static_cast<std::size_t>(order + 1), T{});
}

template <class A, class B>
auto mul(const std::vector<A>& a, const std::vector<B>& b) {
  using T = decltype(A{} * B{});
  const std::size_t n = a.size();
  std::vector<T> out(n, T{});
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == A{}) continue;
    for (std::size_t j = 0; i + j < n; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

/// Multiply by the variable: shifts coefficients up one order.
template <class T>
std::vector<T> shift(const std::vector<T>& a) {
  std::vector<T> out(a.size(), T{});
  for (std::size_t i = 1; i < a.size(); ++i) out[i] = a[i - 1];
  return out;
}

/// sqrt of a series with a_0 > 0.
Real sqrt(const Real& a);
/// 1 / a for a_0 != 0.
Real reciprocal(const Real& a);
/// sin and cos of a series, computed together.
void sin_cos(const Real& u, Real& s, Real& c);
/// exp(i k x) for a real constant k.
Cplx exp_i_linear(double k, int order);

}  // namespace dcg::series

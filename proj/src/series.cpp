#include "dcg/series.hpp"

#include "dcg/errors.hpp"

#include <cmath>

namespace dcg::series {

Real sqrt(const Real& a) {
  if (a.empty() || !(a[0] > 0.0)) throw InvalidArgument("series::sqrt: constant term must be > 0");
  Real y(a.size(), 0.0);
  y[0] = std::sqrt(a[0]);
  for (std::size_t k = 1; k < a.size(); ++k) {
    double acc = a[k];
    for (std::size_t j = 1; j < k; ++j) acc -= y[j] * y[k - j];
    y[k] = acc / (2.0 * y[0]);
  }
  return y;
}

Real reciprocal(const Real& a) {
  if (a.empty() || a[0] == 0.0) throw InvalidArgument("series::reciprocal: zero constant term");
  Real r(a.size(), 0.0);
  r[0] = 1.0 / a[0];
  for (std::size_t k = 1; k < a.size(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) acc += a[j] * r[k - j];
    r[k] = -acc / a[0];
  }
  return r;
}

void sin_cos(const Real& u, Real& s, Real& c) {
  const std::size_t n = u.size();
  s.assign(n, 0.0);
  c.assign(n, 0.0);
  if (n == 0) return;
  s[0] = std::sin(u[0]);
  c[0] = std::cos(u[0]);
  for (std::size_t k = 1; k < n; ++k) {
    double as = 0.0, ac = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double ju = static_cast<double>(j) * u[j];
      as += ju * c[k - j];
      ac -= ju * s[k - j];
    }
    s[k] = as / static_cast<double>(k);
    c[k] = ac / static_cast<double>(k);
  }
}

Cplx exp_i_linear(double k, int order) {
  Cplx out(static_cast<std::size_t>(order + 1));
  std::complex<double> term{1.0, 0.0};
  const std::complex<double> ik{0.0, k};
  for (int j = 0; j <= order; ++j) {
    out[static_cast<std::size_t>(j)] = term;
    term *= ik / static_cast<double>(j + 1);
  }
  return out;
}

}  // namespace dcg::series

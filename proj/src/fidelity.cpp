#include "dcg/fidelity.hpp"

#include "dcg/errors.hpp"
#include "dcg/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace dcg {

double gate_fidelity(const Unitary2& ideal, const Unitary2& actual) {
  return 1.0 - gate_infidelity(ideal, actual);
}

double gate_fidelity(const Mat2& ideal, const Mat2& actual) {
  return gate_fidelity(Unitary2::from_matrix(ideal), Unitary2::from_matrix(actual));
}

double gate_infidelity(const Unitary2& ideal, const Unitary2& actual) {
  const Unitary2 v = ideal * actual.adjoint();
  const double w = std::abs(v.a().real());
  const double vv = v.a().imag() * v.a().imag() + std::norm(v.b());
  return vv / (1.0 + w);
}

double state_fidelity(int target_index, const DensityMatrix2& rho) {
  if (target_index != 0 && target_index != 1) {
    throw InvalidArgument("state_fidelity: target index must be 0 or 1");
  }
  const double p = rho(target_index, target_index).real();
  if (p < -1e-10) throw NumericalFailure("state_fidelity: negative population " + std::to_string(p));
  return std::sqrt(std::clamp(p, 0.0, 1.0));
}

// ---------------------------------------------------------------------------

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InvalidArgument("log_grid: need 0 < lo < hi, n >= 2");
  std::vector<double> g(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

ScalingFit fit_scaling(const std::function<double(double)>& infidelity, std::span<const double> grid) {
  if (grid.size() < 8) throw InvalidArgument("fit_scaling: need at least 8 grid points");
  for (double e : grid) {
    if (!(e >= 1e-3 * (1 - 1e-12)) || !(e <= 3e-2 * (1 + 1e-12))) {
      throw InvalidArgument("fit_scaling: grid must lie inside [1e-3, 3e-2]");
    }
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd lx(n), ly(n), d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = grid[static_cast<std::size_t>(i)];
    d[i] = infidelity(e);
    if (!(d[i] > 0.0)) {
      throw DegenerateFit("fit_scaling: infidelity <= 0 at delta/omega1 = " + std::to_string(e) +
                          "; order undefined");
    }
    lx[i] = std::log(e);
    ly[i] = std::log(d[i]);
  }
  const double mx = lx.mean(), my = ly.mean();
  const double slope = ((lx.array() - mx) * (ly.array() - my)).sum() / (lx.array() - mx).square().sum();
  const double intercept = my - slope * mx;

  ScalingFit fit;
  fit.order = slope;
  const double k = std::round(slope);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += d[i] / std::pow(grid[static_cast<std::size_t>(i)], k);
  fit.coefficient = acc / static_cast<double>(n);
  fit.range_lo = *std::min_element(grid.begin(), grid.end());
  fit.range_hi = *std::max_element(grid.begin(), grid.end());
  fit.residual = std::sqrt((ly.array() - (intercept + slope * lx.array())).square().mean());
  return fit;
}

// ---------------------------------------------------------------------------

const char* to_string(DecayModel m) {
  switch (m) {
    case DecayModel::exponential_cos: return "exponential_cos";
    case DecayModel::gaussian_cos: return "gaussian_cos";
    case DecayModel::exponential: return "exponential";
  }
  return "unknown";
}

const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::ok: return "ok";
    case FitStatus::uncertain: return "uncertain";
    case FitStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

double decay_model_value(DecayModel model, double t, double rate, double frequency, double phase) {
  switch (model) {
    case DecayModel::exponential_cos:
      return 0.5 + 0.5 * std::exp(-rate * t) * std::cos(kTwoPi * frequency * t + phase);
    case DecayModel::gaussian_cos:
      return 0.5 - 0.5 * std::exp(-(rate * t) * (rate * t)) * std::cos(kTwoPi * frequency * t + phase);
    case DecayModel::exponential:
      return 0.5 + 0.5 * std::exp(-rate * t);
  }
  return 0.0;
}

namespace {

struct Spectrum {
  double frequency = 0.0;
  double phase = 0.0;
};

// Dominant frequency of y - 1/2 via a direct DFT scan, refined by a parabola
// through the peak bin and its neighbours.
Spectrum dominant_frequency(std::span<const double> t, std::span<const double> y, double sign) {
  const std::size_t n = t.size();
  const double span = t.back() - t.front();
  double min_dt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) min_dt = std::min(min_dt, t[i] - t[i - 1]);
  const double nyquist = 0.5 / min_dt;
  const double df = 1.0 / (4.0 * span);
  const auto bins = static_cast<std::size_t>(std::ceil(nyquist / df));

  auto power = [&](double f) {
    std::complex<double> acc{};
    for (std::size_t i = 0; i < n; ++i) {
      acc += (y[i] - 0.5) * std::polar(1.0, -kTwoPi * f * t[i]);
    }
    return acc;
  };
  std::vector<double> p(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) p[k] = std::norm(power(static_cast<double>(k) * df));
  const auto peak = static_cast<std::size_t>(std::max_element(p.begin() + 1, p.end()) - p.begin());
  double f = static_cast<double>(peak) * df;
  if (peak + 1 < p.size()) {
    const double a = p[peak - 1], b = p[peak], c = p[peak + 1];
    const double denom = a - 2 * b + c;
    if (denom < 0.0) f += 0.5 * (a - c) / denom * df;
  }
  Spectrum s;
  s.frequency = f;
  s.phase = std::arg(sign * power(f));
  return s;
}

// Rate from a regression of log |y - 1/2| on the extrema of the oscillation.
double envelope_rate(std::span<const double> t, std::span<const double> y, DecayModel model) {
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double a = std::abs(y[i] - 0.5);
    const bool left = i == 0 || a >= std::abs(y[i - 1] - 0.5);
    const bool right = i + 1 == t.size() || a >= std::abs(y[i + 1] - 0.5);
    if (left && right && a > 1e-6) {
      xs.push_back(model == DecayModel::gaussian_cos ? t[i] * t[i] : t[i]);
      ls.push_back(std::log(2.0 * a));
    }
  }
  const double span = t.back() - t.front();
  if (xs.size() < 2) return 1.0 / span;
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / static_cast<double>(ls.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ls[i] - ml);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (!(slope < 0.0)) return 0.1 / span;
  return model == DecayModel::gaussian_cos ? std::sqrt(-slope) : -slope;
}

}  // namespace

DecayFit fit_decay(std::span<const double> times, std::span<const double> signal, DecayModel model,
                   const DecayFitOptions& opts) {
  if (times.size() != signal.size()) throw InvalidArgument("fit_decay: times and signal differ in length");
  if (times.size() < 10) throw InvalidArgument("fit_decay: need at least 10 points");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(signal[i])) {
      throw InvalidArgument("fit_decay: non-finite data");
    }
    if (i > 0 && !(times[i] > times[i - 1])) throw InvalidArgument("fit_decay: times must increase");
  }
  const double span = times.back() - times.front();
  const bool oscillating = model != DecayModel::exponential;
  const double sign = model == DecayModel::gaussian_cos ? -1.0 : 1.0;

  double rate0 = envelope_rate(times, signal, model);
  Spectrum spec;
  if (oscillating) spec = dominant_frequency(times, signal, sign);

  // parameters: rate, [frequency, [phase]]
  const int np = oscillating ? (opts.free_phase ? 3 : 2) : 1;
  auto unpack = [&](const Eigen::VectorXd& p, double& rate, double& f, double& phi) {
    rate = p[0];
    f = np > 1 ? p[1] : 0.0;
    phi = np > 2 ? p[2] : 0.0;
  };
  const auto m = static_cast<Eigen::Index>(times.size());
  const ResidualFunction residual = [&](const Eigen::VectorXd& p) {
    double rate, f, phi;
    unpack(p, rate, f, phi);
    Eigen::VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      r[i] = decay_model_value(model, times[k], rate, f, phi) - signal[k];
    }
    return r;
  };

  LevenbergMarquardtOptions lm;
  lm.max_iterations = opts.max_iterations;
  lm.step_tol = 1e-13;
  lm.fd_step = 1e-7;
  LeastSquaresResult best;
  bool have_best = false;
  for (double factor : {1.0, 0.5, 2.0, 0.2}) {
    Eigen::VectorXd p0(np);
    p0[0] = rate0 * factor;
    if (np > 1) p0[1] = spec.frequency;
    if (np > 2) p0[2] = spec.phase;
    LeastSquaresResult r;
    try {
      r = levenberg_marquardt(residual, p0, lm);
    } catch (const NumericalFailure&) {
      continue;
    }
    if (!r.x.allFinite()) continue;
    if (!have_best || r.value < best.value) {
      best = r;
      have_best = true;
    }
    // a clean fit from the first start is good enough
    if (std::sqrt(2.0 * best.value / static_cast<double>(m)) < 1e-6) break;
  }
  if (!have_best) throw FitFailure("fit_decay: no start converged");

  DecayFit fit;
  fit.model = model;
  fit.iterations = best.iterations;
  double rate, f, phi;
  unpack(best.x, rate, f, phi);
  if (model == DecayModel::gaussian_cos) rate = std::abs(rate);
  fit.rate = rate;
  fit.frequency = f;
  fit.phase = phi;
  fit.rms_residual = std::sqrt(2.0 * best.value / static_cast<double>(m));

  const Eigen::MatrixXd jtj = best.jacobian.transpose() * best.jacobian;
  const double dof = std::max<double>(1.0, static_cast<double>(m - np));
  const double s2 = 2.0 * best.value / dof;
  Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse() * s2;
  const double rate_sigma = std::sqrt(std::max(0.0, cov(0, 0)));
  if (np > 1) fit.frequency_uncertainty = std::sqrt(std::max(0.0, cov(1, 1)));
  if (!std::isfinite(rate) || !std::isfinite(rate_sigma)) {
    throw FitFailure("fit_decay: fit diverged (rate " + std::to_string(rate) + ")");
  }

  if (rate * span < 1e-3) {
    fit.status = FitStatus::unbounded;
    fit.decay_time = std::numeric_limits<double>::infinity();
    fit.uncertainty = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.decay_time = 1.0 / rate;
  fit.uncertainty = rate_sigma / (rate * rate);
  fit.status = fit.uncertainty > fit.decay_time ? FitStatus::uncertain : FitStatus::ok;
  return fit;
}

}  // namespace dcg

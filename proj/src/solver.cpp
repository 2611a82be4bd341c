#include "dcg/solver.hpp"

#include "dcg/errors.hpp"
#include "dcg/fidelity.hpp"
#include "dcg/optimize.hpp"
#include "dcg/series.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dcg {

// ---------------------------------------------------------------------------
// Ansatz

namespace {

Ansatz make_ansatz(std::string name, std::vector<double> amps, std::vector<int> slot, double angle) {
  Ansatz a;
  a.name = std::move(name);
  a.piece_count = static_cast<int>(amps.size());
  a.amplitude_pattern = std::move(amps);
  a.slot = std::move(slot);
  a.slot_scale.assign(a.slot.size(), 1.0);
  a.free_params = *std::max_element(a.slot.begin(), a.slot.end()) + 1;
  a.target_angle = angle;
  return a;
}

}  // namespace

Ansatz Ansatz::plain(double angle) { return make_ansatz("plain", {1.0}, {0}, angle); }

Ansatz Ansatz::three_piece(double angle) {
  return make_ansatz("supcode3", {1.0, 0.5, 1.0}, {0, 1, 0}, angle);
}

Ansatz Ansatz::five_piece(double angle) {
  return make_ansatz("supcode5", {0, 1, 0, 1, 0}, {0, 1, 2, 1, 0}, angle);
}

// w p1 v p2 u p2 v p1 w with the outer waits tied to w = u/2. For a pi target
// about an equatorial axis the outer waits only conjugate the error and leave
// the infidelity unchanged, so they cannot serve as a free parameter.
Ansatz Ansatz::nine_piece(double angle) {
  Ansatz a = make_ansatz("supcode9", {0, 1, 0, 1, 0, 1, 0, 1, 0}, {3, 0, 1, 2, 3, 2, 1, 0, 3}, angle);
  a.slot_scale = {0.5, 1, 1, 1, 1, 1, 1, 1, 0.5};
  return a;
}

Ansatz Ansatz::from_pieces(int pieces, double angle) {
  switch (pieces) {
    case 3: return three_piece(angle);
    case 5: return five_piece(angle);
    case 9: return nine_piece(angle);
    default: throw InvalidArgument("Ansatz: supported piece counts are 3, 5 and 9");
  }
}

void Ansatz::validate() const {
  if (static_cast<int>(amplitude_pattern.size()) != piece_count || slot.size() != amplitude_pattern.size() ||
      slot_scale.size() != slot.size()) {
    throw InvalidArgument("Ansatz: amplitude pattern length must equal piece count");
  }
  std::vector<int> distinct = slot;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (free_params > static_cast<int>(distinct.size())) {
    throw InvalidArgument("Ansatz: more free parameters than distinct durations");
  }
  if (symmetric) {
    for (std::size_t i = 0; i < slot.size(); ++i) {
      const std::size_t j = slot.size() - 1 - i;
      if (slot[i] != slot[j] || amplitude_pattern[i] != amplitude_pattern[j] ||
          slot_scale[i] != slot_scale[j]) {
        throw InvalidArgument("Ansatz: declared symmetric but layout is not a palindrome");
      }
    }
  }
}

PulseSequence Ansatz::build(std::span<const double> tau, double omega1) const {
  if (!(omega1 > 0.0)) throw InvalidArgument("Ansatz::build: omega1 must be > 0");
  if (static_cast<int>(tau.size()) != free_params) throw InvalidArgument("Ansatz::build: wrong number of durations");
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < slot.size(); ++i) {
    segs.push_back({slot_scale[i] * tau[static_cast<std::size_t>(slot[i])] / omega1,
                    amplitude_pattern[i] * omega1, target_phase});
  }
  return PulseSequence(std::move(segs), name);
}

double Ansatz::total_tau(std::span<const double> tau) const {
  double t = 0.0;
  for (std::size_t i = 0; i < slot.size(); ++i) t += slot_scale[i] * tau[static_cast<std::size_t>(slot[i])];
  return t;
}

// ---------------------------------------------------------------------------
// ErrorSpectrum

double ErrorSpectrum::coefficient(int order) const {
  if (order <= 0 || order % 2 != 0) throw InvalidArgument("ErrorSpectrum: order must be even and > 0");
  const auto i = static_cast<std::size_t>(order / 2 - 1);
  return i < coefficients.size() ? coefficients[i] : 0.0;
}

int ErrorSpectrum::leading_order(double threshold) const {
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if (std::abs(coefficients[i]) > threshold) return 2 * static_cast<int>(i + 1);
  }
  return 0;
}

double ErrorSpectrum::leading_coefficient(double threshold) const {
  const int k = leading_order(threshold);
  return k == 0 ? 0.0 : coefficient(k);
}

// ---------------------------------------------------------------------------
// Grid route

std::function<double(double)> infidelity_curve(const PulseSequence& seq, const Unitary2& target,
                                               double omega_ref) {
  return [seq, target, omega_ref](double eps) {
    return gate_infidelity(target, sequence_propagator(seq, eps * omega_ref));
  };
}

namespace {

std::vector<double> grid_fit(const std::function<double(double)>& f, int degree, double h) {
  const int unknowns = degree / 2 + 1;
  const int k_max = unknowns + 2;
  const double scale = k_max * h;
  Eigen::MatrixXd a(2 * k_max, unknowns);
  Eigen::VectorXd y(2 * k_max);
  for (int k = 1; k <= k_max; ++k) {
    const double x = static_cast<double>(k * k) / static_cast<double>(k_max * k_max);
    for (int side = 0; side < 2; ++side) {
      const int row = 2 * (k - 1) + side;
      const double eps = (side == 0 ? 1.0 : -1.0) * k * h;
      y[row] = f(eps);
      double p = 1.0;
      for (int j = 0; j < unknowns; ++j, p *= x) a(row, j) = p;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!std::isfinite(cond) || cond > 1e12) {
    std::ostringstream msg;
    msg << "taylor_infidelity: ill-conditioned fit (condition number " << cond << ", h " << h << ")";
    throw NumericalFailure(msg.str());
  }
  const Eigen::VectorXd sol = svd.solve(y);
  std::vector<double> c(static_cast<std::size_t>(unknowns));
  for (int j = 0; j < unknowns; ++j) c[static_cast<std::size_t>(j)] = sol[j] / std::pow(scale, 2 * j);
  return c;
}

ErrorSpectrum to_spectrum(const std::vector<double>& c, int max_order) {
  ErrorSpectrum s;
  s.constant = c[0];
  for (int k = 1; k <= max_order / 2; ++k) s.coefficients.push_back(c[static_cast<std::size_t>(k)]);
  return s;
}

}  // namespace

ErrorSpectrum taylor_infidelity(const std::function<double(double)>& infidelity, int max_order, double h0) {
  if (max_order < 2 || max_order > 10 || max_order % 2 != 0) {
    throw InvalidArgument("taylor_infidelity: max_order must be even and in [2, 10]");
  }
  if (!(h0 > 0.0)) throw InvalidArgument("taylor_infidelity: h0 must be > 0");
  // Two extra even orders soak up truncation error from the tail of the series.
  const int degree = max_order + 4;
  ErrorSpectrum prev = to_spectrum(grid_fit(infidelity, degree, h0), max_order);
  double h = h0;
  for (int halving = 0; halving < 10; ++halving) {
    h *= 0.5;
    ErrorSpectrum cur = to_spectrum(grid_fit(infidelity, degree, h), max_order);
    const int lead = cur.leading_order();
    if (lead == 0 && prev.leading_order() == 0) return cur;
    if (lead != 0) {
      const double a = cur.coefficient(lead), b = prev.coefficient(lead);
      if (std::abs(a - b) <= 1e-3 * std::abs(a)) return cur;
    }
    prev = std::move(cur);
  }
  throw NumericalFailure("taylor_infidelity: leading coefficient did not stabilise under h -> h/2");
}

// ---------------------------------------------------------------------------
// Exact series route

namespace {

using CS = series::Cplx;
using Mat2S = std::array<CS, 4>;  // row-major 00, 01, 10, 11

Mat2S segment_series(const Segment& seg, double omega_ref, int order) {
  constexpr std::complex<double> I{0.0, 1.0};
  Mat2S u;
  const double t = seg.duration;
  if (seg.is_wait() || t == 0.0) {
    u[0] = series::exp_i_linear(-kPi * t * omega_ref, order);
    u[3] = series::exp_i_linear(kPi * t * omega_ref, order);
    u[1] = u[2] = series::zeros<std::complex<double>>(order);
    return u;
  }
  const double a = seg.amplitude;
  const double r = omega_ref / a;
  series::Real x = series::zeros<double>(order);
  x[0] = 1.0;
  if (order >= 2) x[2] = r * r;
  const series::Real q = series::sqrt(x);
  series::Real theta(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) theta[i] = kPi * t * a * q[i];
  series::Real s, c;
  series::sin_cos(theta, s, c);
  series::Real sinc = series::mul(s, series::reciprocal(q));
  for (auto& v : sinc) v /= a;  // sin(theta) / Omega
  const series::Real es = series::shift(sinc);
  const std::complex<double> off_m = -I * a * std::polar(1.0, -seg.phase);
  const std::complex<double> off_p = -I * a * std::polar(1.0, seg.phase);
  for (auto& m : u) m.assign(q.size(), {});
  for (std::size_t i = 0; i < q.size(); ++i) {
    u[0][i] = c[i] - I * omega_ref * es[i];
    u[3][i] = c[i] + I * omega_ref * es[i];
    u[1][i] = off_m * sinc[i];
    u[2][i] = off_p * sinc[i];
  }
  return u;
}

Mat2S mat_mul(const Mat2S& a, const Mat2S& b) {
  auto add = [](CS x, const CS& y) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    return x;
  };
  return {add(series::mul(a[0], b[0]), series::mul(a[1], b[2])),
          add(series::mul(a[0], b[1]), series::mul(a[1], b[3])),
          add(series::mul(a[2], b[0]), series::mul(a[3], b[2])),
          add(series::mul(a[2], b[1]), series::mul(a[3], b[3]))};
}

struct QuaternionSeries {
  std::vector<double> w;
  std::vector<Eigen::Vector3d> b;
};

QuaternionSeries quaternion_series(const PulseSequence& seq, const Unitary2& target, double omega_ref,
                                   int order) {
  if (!(omega_ref > 0.0)) throw InvalidArgument("series: omega_ref must be > 0");
  Mat2S total;
  for (auto& m : total) m = series::zeros<std::complex<double>>(order);
  total[0][0] = total[3][0] = 1.0;
  for (const auto& seg : seq.segments()) total = mat_mul(segment_series(seg, omega_ref, order), total);

  // V = A B^dag with A constant.
  Mat2S bdag;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CS e = total[static_cast<std::size_t>(2 * j + i)];
      for (auto& v : e) v = std::conj(v);
      bdag[static_cast<std::size_t>(2 * i + j)] = e;
    }
  }
  const Mat2 am = target.matrix();
  Mat2S v;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CS e = series::zeros<std::complex<double>>(order);
      for (int k = 0; k < 2; ++k) {
        const auto& col = bdag[static_cast<std::size_t>(2 * k + j)];
        for (std::size_t n = 0; n < e.size(); ++n) e[n] += am(i, k) * col[n];
      }
      v[static_cast<std::size_t>(2 * i + j)] = e;
    }
  }
  QuaternionSeries qs;
  for (int n = 0; n <= order; ++n) {
    const auto k = static_cast<std::size_t>(n);
    qs.w.push_back(0.5 * (v[0][k] + v[3][k]).real());
    qs.b.emplace_back(-0.5 * (v[1][k] + v[2][k]).imag(), 0.5 * (v[2][k] - v[1][k]).real(),
                      0.5 * (v[3][k] - v[0][k]).imag());
  }
  return qs;
}

ErrorSpectrum spectrum_from(const QuaternionSeries& qs, int max_order) {
  ErrorSpectrum s;
  const double w0 = qs.w[0];
  const double sign = w0 < 0.0 ? -1.0 : 1.0;
  s.constant = qs.b[0].squaredNorm() / (1.0 + std::abs(w0));
  for (int k = 2; k <= max_order; k += 2) s.coefficients.push_back(-sign * qs.w[static_cast<std::size_t>(k)]);
  return s;
}

}  // namespace

ErrorSpectrum series_spectrum(const PulseSequence& seq, const Unitary2& target, double omega_ref,
                              int max_order) {
  if (max_order < 2 || max_order % 2 != 0) throw InvalidArgument("series_spectrum: max_order must be even");
  return spectrum_from(quaternion_series(seq, target, omega_ref, max_order), max_order);
}

std::vector<Eigen::Vector3d> error_vector_series(const PulseSequence& seq, const Unitary2& target,
                                                 double omega_ref, int max_order) {
  return quaternion_series(seq, target, omega_ref, max_order).b;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

struct Candidate {
  std::vector<double> tau;
  double merit = 0.0;
};

int cancelled_depth(const std::vector<int>& orders) {
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] != 2 * static_cast<int>(i + 1)) {
      throw InvalidArgument("solve_supcode: orders_to_cancel must be {2, 4, ..., 2J}");
    }
  }
  return static_cast<int>(orders.size());
}

std::vector<double> exp_vec(const Eigen::VectorXd& u) {
  std::vector<double> t(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) t[static_cast<std::size_t>(i)] = std::exp(u[i]);
  return t;
}

}  // namespace

SolveResult solve_supcode(const Ansatz& ansatz, const std::vector<int>& orders_to_cancel,
                          const std::optional<std::vector<double>>& initial_guess,
                          const SolverOptions& opts) {
  ansatz.validate();
  const int depth = cancelled_depth(orders_to_cancel);
  if (1 + depth > ansatz.free_params + 1) {
    throw InvalidArgument("solve_supcode: more conditions than free parameters + 1");
  }
  if (!(opts.omega1 > 0.0)) throw InvalidArgument("solve_supcode: omega1 must be > 0");

  SolveResult result;
  result.params.omega1 = opts.omega1;
  result.params.target_angle = ansatz.target_angle;
  result.params.target_phase = ansatz.target_phase;

  if (std::remainder(ansatz.target_angle, kTwoPi) == 0.0) {
    result.identity = true;
    result.params.tau.assign(static_cast<std::size_t>(ansatz.free_params), 0.0);
    result.spectrum.coefficients.assign(static_cast<std::size_t>(opts.spectrum_order / 2), 0.0);
    return result;
  }

  const Unitary2 target = ansatz.target();
  const int order = 2 * depth;
  auto merit = [&](const std::vector<double>& tau) {
    for (double t : tau) {
      if (!(t > 0.0) || !std::isfinite(t)) return std::numeric_limits<double>::infinity();
    }
    const QuaternionSeries qs = quaternion_series(ansatz.build(tau, opts.omega1), target, opts.omega1,
                                                  std::max(order, 2));
    const ErrorSpectrum s = spectrum_from(qs, std::max(order, 2));
    double m = s.constant;
    for (int k = 1; k <= depth; ++k) m += std::abs(s.coefficient(2 * k));
    return m;
  };
  const ResidualFunction residual = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd r(3 * (depth + 1));
    if (!(u.maxCoeff() < 20.0)) return Eigen::VectorXd(r.setConstant(std::nan("")));
    const auto qs = quaternion_series(ansatz.build(exp_vec(u), opts.omega1), target, opts.omega1,
                                      std::max(depth, 1));
    for (int k = 0; k <= depth; ++k) r.segment<3>(3 * k) = qs.b[static_cast<std::size_t>(k)];
    return r;
  };

  // Stage 1: screen the grid (or take the caller's guess).
  std::vector<Candidate> starts;
  if (initial_guess) {
    if (static_cast<int>(initial_guess->size()) != ansatz.free_params) {
      throw InvalidArgument("solve_supcode: initial guess has the wrong length");
    }
    starts.push_back({*initial_guess, merit(*initial_guess)});
  } else {
    const auto g = opts.grid.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(ansatz.free_params), 0);
    while (true) {
      std::vector<double> tau(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) tau[i] = opts.grid[idx[i]];
      starts.push_back({tau, merit(tau)});
      std::size_t p = 0;
      while (p < idx.size() && ++idx[p] == g) idx[p++] = 0;
      if (p == idx.size()) break;
    }
    std::stable_sort(starts.begin(), starts.end(),
                     [](const Candidate& a, const Candidate& b) { return a.merit < b.merit; });
    if (static_cast<int>(starts.size()) > opts.refine_starts) starts.resize(static_cast<std::size_t>(opts.refine_starts));
  }

  // Stage 2: simplex on the scalar merit, then Levenberg-Marquardt on the error-vector series.
  struct Root {
    std::vector<double> tau;
    double total;
    std::vector<double> history;
  };
  std::vector<Root> roots;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    Eigen::VectorXd u(ansatz.free_params);
    for (int i = 0; i < ansatz.free_params; ++i) u[i] = std::log(start.tau[static_cast<std::size_t>(i)]);
    NelderMeadOptions nm;
    nm.max_iterations = 600;
    nm.initial_step = 0.05;
    const OptimizeResult coarse = nelder_mead([&](const Eigen::VectorXd& v) { return merit(exp_vec(v)); }, u, nm);
    LevenbergMarquardtOptions lm;
    lm.max_iterations = 100;
    lm.cost_tol = 1e-30;
    lm.fd_step = 1e-7;
    LeastSquaresResult fine;
    try {
      fine = levenberg_marquardt(residual, coarse.x, lm);
    } catch (const NumericalFailure&) {
      continue;
    }
    const std::vector<double> tau = exp_vec(fine.x);
    if (std::any_of(tau.begin(), tau.end(), [](double t) { return !std::isfinite(t) || t > 1e3; })) continue;
    const double m = merit(tau);
    best_residual = std::min(best_residual, m);
    const ErrorSpectrum s = series_spectrum(ansatz.build(tau, opts.omega1), target, opts.omega1, std::max(order, 2));
    bool ok = s.constant <= opts.rotation_tol;
    for (int k = 1; k <= depth; ++k) ok = ok && std::abs(s.coefficient(2 * k)) <= opts.coefficient_tol;
    if (!ok) continue;
    const double total = ansatz.total_tau(tau);
    const bool seen = std::any_of(roots.begin(), roots.end(), [&](const Root& r) {
      for (std::size_t i = 0; i < tau.size(); ++i) {
        if (std::abs(r.tau[i] - tau[i]) > 1e-6 * std::max(1.0, tau[i])) return false;
      }
      return true;
    });
    if (!seen) roots.push_back({tau, total, fine.history});
  }

  if (roots.empty()) {
    std::ostringstream msg;
    msg << "solve_supcode: no root for " << ansatz.name << " (best merit " << best_residual << ")";
    throw NoSolution(msg.str(), best_residual);
  }
  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
    if (std::abs(a.total - b.total) > 1e-9) return a.total < b.total;
    return a.tau < b.tau;
  });

  const Root& win = roots.front();
  result.params.tau = win.tau;
  result.total_tau = win.total;
  result.merit_history = win.history;
  for (const auto& r : roots) result.roots.push_back(r.tau);
  const PulseSequence seq = ansatz.build(win.tau, opts.omega1);
  result.spectrum = series_spectrum(seq, target, opts.omega1, opts.spectrum_order);
  result.rotation_infidelity = result.spectrum.constant;
  return result;
}

NinePieceOutcome solve_nine_piece(double reference_c8, double tolerance, const SolverOptions& opts) {
  NinePieceOutcome out;
  const Ansatz ansatz = Ansatz::nine_piece(kPi);
  SolverOptions o = opts;
  // The coarse default grid misses every basin of this ansatz.
  if (o.grid == SolverOptions{}.grid) {
    o.grid.clear();
    for (int k = 1; k <= 24; ++k) o.grid.push_back(0.125 * k);
  }
  SolveResult res;
  try {
    res = solve_supcode(ansatz, {2, 4, 6}, std::nullopt, o);
  } catch (const NoSolution& e) {
    out.note = e.what();
    return out;
  }
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& tau : res.roots) {
    const ErrorSpectrum s =
        series_spectrum(ansatz.build(tau, o.omega1), ansatz.target(), o.omega1, o.spectrum_order);
    const double c8 = s.coefficient(8);
    out.c8_values.push_back(c8);
    const double gap = std::abs(c8 - reference_c8) / reference_c8;
    if (gap < best_gap) {
      best_gap = gap;
      SolveResult copy = res;
      copy.params.tau = tau;
      copy.total_tau = ansatz.total_tau(tau);
      copy.spectrum = s;
      copy.rotation_infidelity = s.constant;
      out.closest = copy;
    }
  }
  out.resolved = best_gap <= tolerance;
  std::ostringstream note;
  note << out.c8_values.size() << " distinct root(s); closest c8 differs from reference by "
       << 100.0 * best_gap << "%";
  out.note = note.str();
  return out;
}

// ---------------------------------------------------------------------------
// Verification

long double precise_infidelity(const PulseSequence& seq, const Unitary2& target, double omega_ref,
                               long double eps) {
  using C = std::complex<long double>;
  const long double pi = 3.141592653589793238462643383279502884L;
  C a{1.0L, 0.0L}, b{0.0L, 0.0L};
  const long double delta = eps * static_cast<long double>(omega_ref);
  for (const auto& seg : seq.segments()) {
    const long double amp = seg.amplitude;
    const long double hx = amp * std::cos(static_cast<long double>(seg.phase));
    const long double hy = amp * std::sin(static_cast<long double>(seg.phase));
    const long double hz = delta;
    const long double omega = std::sqrt(hx * hx + hy * hy + hz * hz);
    const long double theta = pi * omega * static_cast<long double>(seg.duration);
    const long double so = omega > 0.0L ? std::sin(theta) / omega : pi * static_cast<long double>(seg.duration);
    const C sa{std::cos(theta), -so * hz};
    const C sb{so * hy, -so * hx};
    const C na = sa * a - std::conj(sb) * b;
    const C nb = sb * a + std::conj(sa) * b;
    a = na;
    b = nb;
  }
  // V = A B^dag in quaternion components
  const C ta{static_cast<long double>(target.a().real()), static_cast<long double>(target.a().imag())};
  const C tb{static_cast<long double>(target.b().real()), static_cast<long double>(target.b().imag())};
  const C ba = std::conj(a), bb = -b;  // adjoint of (a, b)
  const C va = ta * ba - std::conj(tb) * bb;
  const C vb = tb * ba + std::conj(ta) * bb;
  const long double norm = std::norm(va) + std::norm(vb);
  const long double w = std::abs(va.real()) / std::sqrt(norm);
  const long double v2 = (va.imag() * va.imag() + std::norm(vb)) / norm;
  return v2 / (1.0L + w);
}

VerificationReport verify_solution(const PulseSequence& seq, const Unitary2& target, double omega_ref,
                                   const ErrorSpectrum& expected) {
  constexpr int nodes = 12;
  constexpr long double x_max = 1e-4L;  // eps^2, well inside the radius of convergence
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const long double pi = 3.141592653589793238462643383279502884L;
  MatL vand(nodes, nodes);
  VecL vals(nodes);
  for (int j = 0; j < nodes; ++j) {
    const long double t = 0.5L * (1.0L + std::cos((2.0L * j + 1.0L) * pi / (2.0L * nodes)));
    vals[j] = precise_infidelity(seq, target, omega_ref, std::sqrt(t * x_max));
    long double p = 1.0L;
    for (int k = 0; k < nodes; ++k, p *= t) vand(j, k) = p;
  }
  const VecL mono = vand.fullPivLu().solve(vals);

  VerificationReport rep;
  const int lead = expected.leading_order();
  rep.leading_order = lead;
  const int last = std::min(expected.max_order(), 2 * (nodes - 1));
  std::ostringstream problems;
  for (int order = 2; order <= last; order += 2) {
    CoefficientCheck c;
    c.order = order;
    c.expected = expected.coefficient(order);
    c.recomputed = static_cast<double>(mono[order / 2] / std::pow(x_max, order / 2));
    if (lead == 0 || order < lead) {
      c.ok = std::abs(c.recomputed) <= 1e-6;
      if (!c.ok) problems << " c" << order << "=" << c.recomputed << " should vanish;";
    } else if (order == lead) {
      rep.leading_relative_error = std::abs(c.recomputed - c.expected) / std::abs(c.expected);
      c.ok = rep.leading_relative_error <= 0.01;
      if (!c.ok) problems << " leading c" << order << " " << c.recomputed << " vs " << c.expected << ";";
    }
    rep.checks.push_back(c);
  }
  if (!problems.str().empty()) throw VerificationFailure("verify_solution:" + problems.str());
  return rep;
}

VerificationReport verify_solution(const Ansatz& ansatz, const SupcodeParams& params,
                                   const ErrorSpectrum& expected) {
  return verify_solution(ansatz.build(params.tau, params.omega1), ansatz.target(), params.omega1, expected);
}

}  // namespace dcg

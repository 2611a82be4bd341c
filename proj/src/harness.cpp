#include "dcg/harness.hpp"

#include "dcg/errors.hpp"
#include "dcg/solver.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#ifndef DCG_VERSION
#define DCG_VERSION "unknown"
#endif

namespace dcg {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kInvE = std::exp(-1.0);

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_json(const DecayFit& f) {
  return {{"model", to_string(f.model)},          {"decay_time_us", num(f.decay_time)},
          {"uncertainty_us", num(f.uncertainty)}, {"frequency_MHz", num(f.frequency)},
          {"frequency_uncertainty_MHz", num(f.frequency_uncertainty)},
          {"phase_rad", num(f.phase)},            {"rms_residual", num(f.rms_residual)},
          {"status", to_string(f.status)},        {"iterations", f.iterations}};
}

json scaling_json(const ScalingFit& f) {
  return {{"order", f.order},
          {"coefficient", f.coefficient},
          {"range", {f.range_lo, f.range_hi}},
          {"log_rms_residual", f.residual}};
}

json channels_json(std::span<const RelaxationChannel> ch) {
  json out = json::array();
  for (const auto& c : ch) out.push_back({{"kind", to_string(c.kind)}, {"rate_MHz", c.rate}});
  return out;
}

Check failed_check(std::string name, std::string note) {
  Check c;
  c.name = std::move(name);
  c.value = std::numeric_limits<double>::quiet_NaN();
  c.passed = false;
  c.note = std::move(note);
  return c;
}

Check informational(Check c, std::string note = {}) {
  c.informational = true;
  if (!note.empty()) c.note = std::move(note);
  return c;
}

BlochVector z_up() { return BlochVector::UnitZ(); }

const SolveResult& five_piece_solution() {
  static const SolveResult r = solve_supcode(Ansatz::five_piece(kPi / 2), {2, 4});
  return r;
}

const SolveResult& three_piece_solution() {
  static const SolveResult r = solve_supcode(Ansatz::three_piece(kPi), {2});
  return r;
}

double stderr_along_mean(const SampleMatrix& s, Eigen::Index cx, Eigen::Index cy, double mx, double my) {
  const double norm = std::hypot(mx, my);
  if (!(norm > 0.0)) return 0.0;
  const double ux = mx / norm, uy = my / norm;
  const auto n = s.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = s(i, cx) * ux + s(i, cy) * uy - norm;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace

// ---------------------------------------------------------------------------

json ScenarioConfig::to_json() const {
  return {{"seed", seed},
          {"shots", shots ? json(*shots) : json(nullptr)},
          {"samples", samples},
          {"t2star_us", t2star},
          {"t1rho_us", t1rho},
          {"hahn_t2_us", hahn_t2},
          {"rabi_t2_us", rabi_t2},
          {"correlation_time_us", correlation_time},
          {"off_resonance_MHz", off_resonance},
          {"axis", std::string(1, axis)},
          {"amplitude_relative_sigma", amplitude_sigma ? json(*amplitude_sigma) : json(nullptr)},
          {"ou_sigma_MHz", ou_sigma ? json(*ou_sigma) : json(nullptr)},
          {"static_enabled", static_enabled},
          {"ou_enabled", ou_enabled},
          {"relaxation_enabled", relaxation_enabled}};
}

Check check_range(std::string name, double value, double lo, double hi, double expected) {
  if (!(hi >= lo)) throw InvalidArgument("check_range: empty tolerance window for " + name);
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.expected = expected;
  c.lo = lo;
  c.hi = hi;
  c.passed = value >= lo && value <= hi;
  return c;
}

Check check_relative(std::string name, double value, double expected, double rel_tol) {
  if (!(rel_tol > 0.0)) throw InvalidArgument("check_relative: tolerance must be > 0");
  const double w = rel_tol * std::abs(expected);
  return check_range(std::move(name), value, expected - w, expected + w, expected);
}

Check check_absolute(std::string name, double value, double expected, double abs_tol) {
  if (!(abs_tol > 0.0)) throw InvalidArgument("check_absolute: tolerance must be > 0");
  return check_range(std::move(name), value, expected - abs_tol, expected + abs_tol, expected);
}

void Scenario::validate() const {
  if (name.empty()) throw InvalidArgument("Scenario: empty name");
  if (grid.empty()) throw InvalidArgument("Scenario " + name + ": empty sweep grid");
  if (shots && *shots < 1) throw InvalidArgument("Scenario " + name + ": shots must be >= 1");
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed || c.informational; });
}

const Dataset& RunResult::table(std::string_view name) const {
  for (const auto& [n, d] : tables) {
    if (n == name) return d;
  }
  throw InvalidArgument("RunResult: no table named " + std::string(name));
}

const Check& RunResult::check(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw InvalidArgument("RunResult: no check named " + std::string(name));
}

json RunResult::checks_json() const {
  json out = json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name},
                   {"value", num(c.value)},
                   {"expected", num(c.expected)},
                   {"lo", num(c.lo)},
                   {"hi", num(c.hi)},
                   {"passed", c.passed},
                   {"informational", c.informational},
                   {"note", c.note}});
  }
  return out;
}

SupcodeParams five_piece_halfpi(double omega1, double phase) {
  SupcodeParams p = five_piece_solution().params;
  p.omega1 = omega1;
  p.target_phase = phase;
  p.validate();
  return p;
}

// --- table 1 ---------------------------------------------------------------

RunResult repro_table1(const ScenarioConfig& cfg) {
  RunResult out;
  const std::vector<double> grid = log_grid(1e-3, 3e-2, 24);
  out.scenario = {"table1", "plain, three-piece, five-piece and nine-piece pi gates at omega1 = 1 MHz",
                  json::object(), "delta/omega1", grid, std::nullopt, cfg.seed};
  const Unitary2 target = target_rotation(kPi, 0.0);

  struct Row {
    std::string key;
    std::optional<PulseSequence> seq;
    double order, coefficient, rel_tol;
    std::vector<double> tau;
    double total_tau = 0.0;
  };
  std::vector<Row> rows;
  rows.push_back({"plain", build_plain(kPi, 0.0, 1.0), reference::kPlainOrder, reference::kPlainCoefficient,
                  0.05, {1.0 / 2.0}, 0.5});
  try {
    const SolveResult& r = three_piece_solution();
    rows.push_back({"three_piece", Ansatz::three_piece(kPi).build(r.params.tau, 1.0), reference::kThreeOrder,
                    reference::kThreeCoefficient, 0.15, r.params.tau, r.total_tau});
  } catch (const NoSolution& e) {
    rows.push_back({"three_piece", std::nullopt, reference::kThreeOrder, reference::kThreeCoefficient, 0.15, {}, 0});
    out.checks.push_back(failed_check("three_piece_solve", e.what()));
  }
  try {
    const SolveResult& r = five_piece_solution();
    rows.push_back({"five_piece", build_supcode5_pi(five_piece_halfpi(1.0, 0.0)), reference::kFiveOrder,
                    reference::kFiveCoefficient, 0.10, r.params.tau, 2.0 * r.total_tau});
  } catch (const NoSolution& e) {
    rows.push_back({"five_piece", std::nullopt, reference::kFiveOrder, reference::kFiveCoefficient, 0.10, {}, 0});
    out.checks.push_back(failed_check("five_piece_solve", e.what()));
  }

  NinePieceOutcome nine;
  try {
    nine = solve_nine_piece(reference::kNineCoefficient, 0.2);
  } catch (const NoSolution& e) {
    nine.note = e.what();
  }
  if (nine.closest) {
    rows.push_back({"nine_piece", Ansatz::nine_piece(kPi).build(nine.closest->params.tau, 1.0),
                    reference::kNineOrder, reference::kNineCoefficient, 0.20, nine.closest->params.tau,
                    nine.closest->total_tau});
  } else {
    rows.push_back({"nine_piece", std::nullopt, reference::kNineOrder, reference::kNineCoefficient, 0.2, {}, 0});
  }

  Dataset data({"eps", "plain", "three_piece", "five_piece", "nine_piece"});
  std::vector<std::function<double(double)>> curves;
  for (const auto& row : rows) {
    if (row.seq) curves.push_back(infidelity_curve(*row.seq, target, 1.0));
    else curves.push_back([](double) { return std::numeric_limits<double>::quiet_NaN(); });
  }
  for (double e : grid) {
    std::vector<double> r{e};
    for (const auto& f : curves) r.push_back(f(e));
    data.add_row(std::move(r));
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    json entry = {{"tau_over_tau0", row.tau}, {"total_tau_over_tau0", row.total_tau}};
    const bool is_nine = row.key == "nine_piece";
    if (!row.seq) {
      entry["status"] = is_nine ? "unresolved" : "no_solution";
      if (is_nine) entry["note"] = nine.note;
      out.fits[row.key] = entry;
      if (is_nine) {
        out.checks.push_back(informational(failed_check("nine_piece_c8", nine.note)));
      }
      continue;
    }
    const ErrorSpectrum s = series_spectrum(*row.seq, target, 1.0, 10);
    json series = json::object();
    for (int k = 2; k <= s.max_order(); k += 2) series["c" + std::to_string(k)] = s.coefficient(k);
    entry["series_coefficients"] = series;
    entry["rotation_infidelity"] = s.constant;
    try {
      const ScalingFit fit = fit_scaling(curves[i], grid);
      entry["fit"] = scaling_json(fit);
      Check co = check_absolute(row.key + "_order", fit.order, row.order, 0.1);
      Check cc = check_relative(row.key + "_coefficient", fit.coefficient, row.coefficient, row.rel_tol);
      if (is_nine && !nine.resolved) {
        co = informational(co, "nine-piece unresolved");
        cc = informational(cc, "nine-piece unresolved");
      }
      out.checks.push_back(co);
      out.checks.push_back(cc);
    } catch (const FitFailure& e) {
      entry["fit_error"] = e.what();
      Check c = failed_check(row.key + "_fit", e.what());
      if (is_nine && !nine.resolved) c = informational(c);
      out.checks.push_back(c);
    }
    if (is_nine) {
      entry["status"] = nine.resolved ? "resolved" : "unresolved";
      entry["note"] = nine.note;
      entry["c8_all_roots"] = nine.c8_values;
      Check c8 = check_relative("nine_piece_c8", s.coefficient(8), reference::kNineCoefficient, 0.2);
      if (!nine.resolved) c8 = informational(c8, nine.note);
      out.checks.push_back(c8);
    }
    out.fits[row.key] = entry;
  }
  out.tables.emplace_back("data", std::move(data));
  return out;
}

// --- fig 1d: free induction decay -------------------------------------------

RunResult repro_fig1d(const ScenarioConfig& cfg) {
  RunResult out;
  const double omega1 = 20.0;
  const double sigma = cfg.static_enabled ? sigma_from_t2star(cfg.t2star) : 0.0;
  const std::size_t n = cfg.samples ? cfg.samples : 10000;
  std::vector<double> times;
  for (int k = 0; k <= 400; ++k) times.push_back(0.05 * k);
  out.scenario = {"fig1d", "ramsey: pi/2_x - wait(t) - pi/2_x at omega1 = 20 MHz",
                  {{"static_sigma_MHz", sigma}, {"off_resonance_MHz", cfg.off_resonance}},
                  "t_us", times, std::nullopt, cfg.seed};

  const Segment half{0.25 / omega1, omega1, 0.0};
  const std::size_t width = times.size();
  const SampleMatrix s = sample_ensemble(
      n, width, cfg.seed,
      [&](std::size_t, std::mt19937_64& rng, std::span<double> row) {
        std::normal_distribution<double> gauss;
        const double delta = sigma * gauss(rng);
        const double f = delta + cfg.off_resonance;
        const Unitary2 p = segment_propagator(ControlFrame{delta, omega1, 0.0, cfg.off_resonance}, half.duration);
        for (std::size_t j = 0; j < width; ++j) {
          const Unitary2 w = Unitary2::rotation(kTwoPi * f * times[j], Eigen::Vector3d::UnitZ());
          const Unitary2 u = p * w * p;
          row[j] = std::norm(u.a());
        }
      },
      cfg.execution);
  const auto est = column_estimates(s);

  Dataset data({"t_us", "p0_mean", "p0_stderr", "p0_ideal"});
  std::vector<double> mean;
  for (std::size_t j = 0; j < width; ++j) {
    const double t = times[j];
    const double ideal = 0.5 - 0.5 * std::exp(-std::pow(t / cfg.t2star, 2)) * std::cos(kTwoPi * cfg.off_resonance * t);
    data.add_row({t, est[j].mean, est[j].std_error, ideal});
    mean.push_back(est[j].mean);
  }
  out.tables.emplace_back("data", std::move(data));

  try {
    const DecayFit fit = fit_decay(times, mean, DecayModel::gaussian_cos, {.free_phase = true});
    out.fits["fid"] = fit_json(fit);
    out.checks.push_back(check_relative("t2star", fit.decay_time, cfg.t2star, 0.02));
    out.checks.push_back(check_relative("frequency", fit.frequency, std::abs(cfg.off_resonance), 0.01));
  } catch (const FitFailure& e) {
    out.fits["fid"] = {{"error", e.what()}};
    out.checks.push_back(failed_check("t2star", e.what()));
  }
  out.fits["samples"] = n;
  return out;
}

// --- fig 2b: state infidelity sweep -----------------------------------------

RunResult repro_fig2b(const ScenarioConfig& cfg) {
  RunResult out;
  const double omega1 = 20.0;
  std::vector<double> eps;
  for (int k = 0; k <= 30; ++k) eps.push_back(0.005 * k);
  out.scenario = {"fig2b", "pi gates applied to |0>, omega1 = 20 MHz, delta from 0 to 3 MHz", json::object(),
                  "delta/omega1", eps, static_cast<std::uint64_t>(reference::kPhotonShots), cfg.seed};

  const PulseSequence plain = build_plain(kPi, 0.0, omega1);
  const PulseSequence three = Ansatz::three_piece(kPi).build(three_piece_solution().params.tau, omega1);
  const PulseSequence five = build_supcode5_pi(five_piece_halfpi(omega1, 0.0));
  auto state_infidelity = [](const PulseSequence& seq, double delta) {
    const Unitary2 u = sequence_propagator(seq, delta);
    // U|0> = (a, b); the destination is |1>
    return 1.0 - std::abs(u.b());
  };
  const double floor = 1.0 / std::sqrt(reference::kPhotonShots);

  Dataset data({"eps", "plain", "three_piece", "five_piece", "plain_closed_form", "shot_noise_floor"});
  double zero_max = 0.0, closed_max = 0.0, order_ratio = 0.0;
  for (double e : eps) {
    const double d = e * omega1;
    const double p = state_infidelity(plain, d), t = state_infidelity(three, d), f = state_infidelity(five, d);
    const double om = std::sqrt(1.0 + e * e);
    const double closed = 1.0 - std::sin(kPi * om / 2.0) / om;
    data.add_row({e, p, t, f, closed, floor});
    if (e == 0.0) zero_max = std::max({std::abs(p), std::abs(t), std::abs(f)});
    closed_max = std::max(closed_max, std::abs(p - closed));
    if (e > 0.0 && e <= 0.05 + 1e-12) order_ratio = std::max({order_ratio, f / t, t / p});
  }
  const auto& last = data.rows.back();
  out.checks.push_back(check_range("zero_detuning_infidelity", zero_max, 0.0, 1e-12, 0.0));
  out.checks.push_back(check_range("plain_vs_closed_form", closed_max, 0.0, 1e-12, 0.0));
  out.checks.push_back(check_range("ordering_small_eps", order_ratio, 0.0, 1.0, 0.0));
  out.checks.push_back(informational(check_relative("plain_at_0.15_leading_term", last[1], 0.5 * 0.15 * 0.15, 0.05),
                                     "leading term only; exact value in data"));
  out.checks.push_back(informational(
      check_relative("five_piece_at_0.15_leading_term", last[3], reference::kFiveCoefficient * std::pow(0.15, 6), 0.5),
      "higher orders dominate at eps = 0.15"));
  out.fits["shot_noise_floor"] = floor;
  out.fits["at_eps_0.15"] = {{"plain", last[1]}, {"three_piece", last[2]}, {"five_piece", last[3]}};
  out.tables.emplace_back("data", std::move(data));
  return out;
}

// --- fig 3: quadrature detection --------------------------------------------

RunResult repro_fig3(const ScenarioConfig& cfg) {
  if (cfg.axis != 'x' && cfg.axis != 'y') throw InvalidArgument("repro_fig3: axis must be x or y");
  RunResult out;
  const double omega1 = 1.0;
  const double gate_phase = cfg.axis == 'x' ? 0.0 : kPi / 2;
  std::vector<double> grid;
  for (int k = 0; k <= 24; ++k) grid.push_back(k);
  out.scenario = {"fig3", std::string("N five-piece pi/2 gates about ") + cfg.axis + ", then pi/2 detection at phase 0 or pi/2",
                  json::object(), "N", grid, std::nullopt, cfg.seed};

  const PulseSequence gate = build_supcode5_halfpi(five_piece_halfpi(omega1, gate_phase));
  const Eigen::Matrix3d g = sequence_propagator(gate, 0.0).rotation_matrix();
  const Eigen::Matrix3d d0 = sequence_propagator(build_plain(kPi / 2, 0.0, omega1), 0.0).rotation_matrix();
  const Eigen::Matrix3d d90 = sequence_propagator(build_plain(kPi / 2, kPi / 2, omega1), 0.0).rotation_matrix();

  Dataset data({"N", "p0_detect_phase0", "p0_detect_phase90", "x", "y", "z"});
  BlochVector r = z_up();
  double lo = 1, hi = 0, flat = 0;
  for (int k = 0; k <= 24; ++k) {
    if (k > 0) r = g * r;
    const double p0 = ground_population(d0 * r), p90 = ground_population(d90 * r);
    data.add_row({static_cast<double>(k), p0, p90, r.x(), r.y(), r.z()});
    const double in_plane = cfg.axis == 'x' ? p0 : p90;
    const double ortho = cfg.axis == 'x' ? p90 : p0;
    lo = std::min(lo, in_plane);
    hi = std::max(hi, in_plane);
    flat = std::max(flat, std::abs(ortho - 0.5));
  }
  out.checks.push_back(check_range("orthogonal_quadrature_deviation", flat, 0.0, 1e-9, 0.0));
  out.checks.push_back(check_range("in_plane_contrast", hi - lo, 0.999, 1.0 + 1e-12, 1.0));
  out.fits["axis"] = std::string(1, cfg.axis);
  out.fits["in_plane_contrast"] = hi - lo;
  out.fits["orthogonal_max_deviation"] = flat;
  out.tables.emplace_back("data", std::move(data));
  return out;
}

// --- T1rho calibration ---------------------------------------------------------

T1rhoCalibration calibrate_t1rho(double target, double omega1) {
  if (!(target > 0.0) || !std::isfinite(target)) throw InvalidArgument("calibrate_t1rho: target must be > 0");
  std::vector<double> times;
  for (int k = 0; k <= 100; ++k) times.push_back(target * 0.04 * k);
  T1rhoCalibration cal;
  cal.rate = 1.0 / (4.0 * target);
  for (int it = 1; it <= 30; ++it) {
    const RelaxationChannel ch{ChannelKind::rotating_frame_relaxation, cal.rate};
    std::vector<double> p0;
    for (double t : times) {
      const BlochMap m = sequence_bloch_map(build_spinlock(t, omega1), 0.0, std::span(&ch, 1));
      p0.push_back(ground_population(m.apply(z_up())));
    }
    const DecayFit fit = fit_decay(times, p0, DecayModel::exponential);
    cal.fitted_t1rho = fit.decay_time;
    cal.iterations = it;
    if (!std::isfinite(fit.decay_time)) break;
    if (std::abs(fit.decay_time / target - 1.0) < 1e-3) return cal;
    cal.rate *= fit.decay_time / target;
  }
  throw NumericalFailure("calibrate_t1rho: spin-lock calibration did not converge (last fit " +
                         std::to_string(cal.fitted_t1rho) + " us)");
}

// --- fig 4a: DCG vs plain drive --------------------------------------------------

RunResult repro_fig4a(const ScenarioConfig& cfg) {
  RunResult out;
  const double omega1 = 1.0;
  const double sigma = cfg.static_enabled ? sigma_from_t2star(cfg.t2star) : 0.0;
  const std::size_t n = cfg.samples ? cfg.samples : 2000;

  std::vector<RelaxationChannel> ch;
  if (cfg.relaxation_enabled) {
    const T1rhoCalibration cal = calibrate_t1rho(cfg.t1rho, omega1);
    ch.push_back({ChannelKind::rotating_frame_relaxation, cal.rate});
    out.fits["t1rho_calibration"] = {{"rate_MHz", cal.rate}, {"fitted_t1rho_us", cal.fitted_t1rho},
                                     {"iterations", cal.iterations}};
  }

  const PulseSequence gate = build_supcode5_halfpi(five_piece_halfpi(omega1, 0.0));
  const double tg = gate.total_duration();
  const int m_max = static_cast<int>(std::ceil(2000.0 / tg));
  std::vector<double> t_dcg;
  for (int m = 0; m <= m_max; ++m) t_dcg.push_back(m * tg);
  const double dt = 0.1;
  const int steps = 4000;
  std::vector<double> t_plain;
  for (int k = 0; k <= steps; ++k) t_plain.push_back(k * dt);

  out.scenario = {"fig4a", "successive five-piece pi/2 gates vs continuous plain drive, omega1 = 1 MHz",
                  {{"static_sigma_MHz", sigma}, {"channels", channels_json(ch)}}, "M", t_dcg, std::nullopt,
                  cfg.seed};

  // DCG train
  const SampleMatrix sd = sample_ensemble(
      n, t_dcg.size(), derive_seed(cfg.seed, 1),
      [&](std::size_t, std::mt19937_64& rng, std::span<double> row) {
        std::normal_distribution<double> gauss;
        const BlochMap map = sequence_bloch_map(gate, sigma * gauss(rng), ch);
        BlochVector r = z_up();
        row[0] = ground_population(r);
        for (std::size_t m = 1; m < row.size(); ++m) {
          r = map.apply(r);
          row[m] = ground_population(r);
        }
      },
      cfg.execution);
  const auto est_dcg = column_estimates(sd);

  // Plain drive; the second normal draw scales the amplitude.
  auto simulate_plain = [&](double amp_sigma) {
    const SampleMatrix sp = sample_ensemble(
        n, t_plain.size(), derive_seed(cfg.seed, 2),
        [&](std::size_t, std::mt19937_64& rng, std::span<double> row) {
          std::normal_distribution<double> gauss;
          const double delta = sigma * gauss(rng);
          const double scale = 1.0 + amp_sigma * gauss(rng);
          const BlochMap step = segment_bloch_map(ControlFrame{delta, omega1 * std::abs(scale), 0.0, 0.0}, dt, ch);
          BlochVector r = z_up();
          row[0] = ground_population(r);
          for (std::size_t k = 1; k < row.size(); ++k) {
            r = step.apply(r);
            row[k] = ground_population(r);
          }
        },
        cfg.execution);
    return column_estimates(sp);
  };
  auto fit_plain = [&](const std::vector<Estimate>& est) {
    std::vector<double> y;
    for (const auto& e : est) y.push_back(e.mean);
    return fit_decay(t_plain, y, DecayModel::exponential_cos);
  };

  double amp_sigma = 0.0;
  std::vector<Estimate> est_plain;
  json amp_cal = json::object();
  try {
    if (cfg.amplitude_sigma) {
      amp_sigma = *cfg.amplitude_sigma;
      est_plain = simulate_plain(amp_sigma);
    } else {
      // secant on log(sigma_a) vs log(fitted T2')
      double x0 = std::log(std::sqrt(2.0) / (kTwoPi * cfg.rabi_t2)), x1 = x0 + 0.2;
      est_plain = simulate_plain(std::exp(x0));
      double y0 = std::log(fit_plain(est_plain).decay_time / cfg.rabi_t2);
      double y1 = y0;
      int it = 0;
      for (it = 1; it <= 15; ++it) {
        est_plain = simulate_plain(std::exp(x1));
        y1 = std::log(fit_plain(est_plain).decay_time / cfg.rabi_t2);
        if (std::abs(y1) < 2e-3 || !std::isfinite(y1)) break;
        const double slope = (y1 - y0) / (x1 - x0);
        const double x2 = x1 - y1 / (slope < -0.05 ? slope : -1.0);
        x0 = x1;
        y0 = y1;
        x1 = x2;
      }
      amp_sigma = std::exp(x1);
      amp_cal = {{"iterations", it}, {"log_mismatch", y1}};
    }
  } catch (const FitFailure& e) {
    out.checks.push_back(failed_check("plain_fit", e.what()));
    if (est_plain.empty()) est_plain = simulate_plain(amp_sigma);
  }
  amp_cal["amplitude_relative_sigma"] = amp_sigma;
  amp_cal["calibrated"] = !cfg.amplitude_sigma.has_value();
  out.fits["amplitude_noise"] = amp_cal;

  Dataset data({"M", "T_us", "p0_mean", "p0_stderr"});
  std::vector<double> y_dcg;
  for (std::size_t m = 0; m < t_dcg.size(); ++m) {
    data.add_row({static_cast<double>(m), t_dcg[m], est_dcg[m].mean, est_dcg[m].std_error});
    y_dcg.push_back(est_dcg[m].mean);
  }
  Dataset plain({"T_us", "p0_mean", "p0_stderr"});
  for (std::size_t k = 0; k < t_plain.size(); ++k) plain.add_row({t_plain[k], est_plain[k].mean, est_plain[k].std_error});
  out.tables.emplace_back("data", std::move(data));
  out.tables.emplace_back("plain", std::move(plain));

  double t_dcg_fit = kInf;
  try {
    const DecayFit f = fit_decay(t_dcg, y_dcg, DecayModel::exponential_cos);
    out.fits["dcg"] = fit_json(f);
    t_dcg_fit = f.decay_time;
    out.checks.push_back(check_relative("t_dcg_vs_t1rho", f.decay_time, cfg.t1rho, 0.10));
    out.checks.push_back(informational(check_absolute("t_dcg_vs_reference", f.decay_time, reference::kDcgDecay, 40.0)));
  } catch (const FitFailure& e) {
    out.fits["dcg"] = {{"error", e.what()}};
    out.checks.push_back(failed_check("t_dcg_vs_t1rho", e.what()));
  }
  try {
    const DecayFit f = fit_plain(est_plain);
    out.fits["plain"] = fit_json(f);
    out.checks.push_back(check_range("t2prime_below_third_of_t_dcg", f.decay_time, 0.0, t_dcg_fit / 3.0, cfg.rabi_t2));
    out.checks.push_back(informational(check_absolute("t2prime_calibration", f.decay_time, cfg.rabi_t2, 10.0)));
  } catch (const FitFailure& e) {
    out.fits["plain"] = {{"error", e.what()}};
    out.checks.push_back(failed_check("t2prime_below_third_of_t_dcg", e.what()));
  }
  out.fits["gate_duration_us"] = tg;
  out.fits["samples"] = n;
  return out;
}

// --- fig 4b: QPT of repeated gates ------------------------------------------------

RunResult repro_fig4b(const ScenarioConfig& cfg) {
  RunResult out;
  const double omega1 = 1.0;
  const double sigma = cfg.static_enabled ? sigma_from_t2star(cfg.t2star) : 0.0;
  const std::uint64_t shots = cfg.shots ? *cfg.shots : static_cast<std::uint64_t>(reference::kPhotonShots);
  std::vector<double> grid(std::begin(reference::kQptRepeats), std::end(reference::kQptRepeats));

  std::vector<RelaxationChannel> ch;
  if (cfg.relaxation_enabled) {
    const T1rhoCalibration cal = calibrate_t1rho(cfg.t1rho, omega1);
    ch.push_back({ChannelKind::rotating_frame_relaxation, cal.rate});
    out.fits["t1rho_calibration"] = {{"rate_MHz", cal.rate}, {"fitted_t1rho_us", cal.fitted_t1rho},
                                     {"iterations", cal.iterations}};
  }
  out.scenario = {"fig4b", "M successive five-piece pi/2 gates about x, process tomography",
                  {{"static_sigma_MHz", sigma}, {"channels", channels_json(ch)}}, "M", grid, shots, cfg.seed};

  const PulseSequence gate = build_supcode5_halfpi(five_piece_halfpi(omega1, 0.0));
  const double tg = gate.total_duration();
  // Static detuning enters through a Gauss-Hermite average of the M-fold map.
  const QuadratureRule rule = sigma > 0.0 ? gauss_hermite(31) : QuadratureRule{{0.0}, {1.0}};
  std::vector<BlochMap> maps;
  for (double x : rule.nodes) maps.push_back(sequence_bloch_map(gate, sigma * x, ch));
  const Unitary2 ideal_gate = target_rotation(kPi / 2, 0.0);

  Dataset data({"M", "T_us", "fidelity_exact", "fidelity_shots", "envelope"});
  double sxy = 0.0, sxx = 0.0, sxy_shots = 0.0;
  double worst_exact = 0.0, worst_shots = 0.0, m0 = std::numeric_limits<double>::quiet_NaN();
  ChiMatrix last_chi;
  json per_m = json::array();
  for (int m : reference::kQptRepeats) {
    BlochMap avg;
    avg.linear.setZero();
    for (std::size_t i = 0; i < maps.size(); ++i) {
      BlochMap p;
      for (int k = 0; k < m; ++k) p = p.followed_by(maps[i]);
      avg.linear += rule.weights[i] * p.linear;
      avg.offset += rule.weights[i] * p.offset;
    }
    Unitary2 ideal;
    for (int k = 0; k < m; ++k) ideal = ideal_gate * ideal;
    const Channel channel = bloch_map_channel(avg);
    const ChiMatrix chi = reconstruct_chi(run_process(channel));
    const double f_exact = average_gate_fidelity(chi, ideal);
    TomographyOptions topt;
    topt.shots = shots;
    topt.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(m));
    const ChiMatrix chi_shots = reconstruct_chi(run_process(channel, topt));
    const double f_shots = average_gate_fidelity(chi_shots, ideal);
    const double env = 0.5 + 0.5 * std::exp(-m * tg / cfg.t1rho);
    data.add_row({static_cast<double>(m), m * tg, f_exact, f_shots, env});
    worst_exact = std::max(worst_exact, std::abs(f_exact / env - 1.0));
    worst_shots = std::max(worst_shots, std::abs(f_shots / env - 1.0));
    if (m == 0) m0 = f_exact;
    if (m > 0) {
      sxx += double(m) * m;
      sxy += m * std::log(2.0 * f_exact - 1.0);
      sxy_shots += m * std::log(2.0 * f_shots - 1.0);
    }
    per_m.push_back({{"M", m},
                     {"trace_preservation_error", chi.trace_preservation_error()},
                     {"min_eigenvalue_exact", chi.min_eigenvalue()},
                     {"min_eigenvalue_shots", chi_shots.min_eigenvalue()}});
    last_chi = chi;
  }
  const double p = std::exp(sxy / sxx), p_shots = std::exp(sxy_shots / sxx);
  const double f_gate = 0.5 + 0.5 * p, f_gate_shots = 0.5 + 0.5 * p_shots;

  out.checks.push_back(check_absolute("fidelity_at_m0", m0, 1.0, 1e-12));
  out.checks.push_back(check_range("envelope_match_exact", worst_exact, 0.0, 0.02, 0.0));
  out.checks.push_back(check_range("envelope_match_shots", worst_shots, 0.0, 0.02, 0.0));
  out.checks.push_back(check_absolute("per_gate_fidelity", f_gate, reference::kGateFidelity, 1e-3));
  out.checks.push_back(check_absolute("per_gate_fidelity_shots", f_gate_shots, reference::kGateFidelity, 1e-3));
  out.fits["per_gate_fidelity"] = f_gate;
  out.fits["per_gate_fidelity_shots"] = f_gate_shots;
  out.fits["depolarization_per_gate"] = p;
  out.fits["gate_duration_us"] = tg;
  out.fits["shots"] = shots;
  out.fits["chi_diagnostics"] = per_m;

  Dataset chi({"m", "n", "re", "im"});
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) chi.add_row({double(a), double(b), last_chi(a, b).real(), last_chi(a, b).imag()});
  }
  out.tables.emplace_back("data", std::move(data));
  out.tables.emplace_back("chi_m135", std::move(chi));
  return out;
}

// --- fig 4c: CPMG ------------------------------------------------------------------

double cpmg_phase_variance(int n_pulses, double free_time, double pi_time, double tc) {
  if (n_pulses < 1 || !(free_time >= 0.0) || !(pi_time >= 0.0) || !(tc > 0.0)) {
    throw InvalidArgument("cpmg_phase_variance: bad arguments");
  }
  const double s = free_time / n_pulses;
  const std::size_t k = static_cast<std::size_t>(n_pulses) + 1;
  std::vector<double> start(k), len(k), sign(k);
  double t = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    len[i] = (i == 0 || i + 1 == k) ? s / 2 : s;
    start[i] = t;
    sign[i] = (i % 2 == 0) ? 1.0 : -1.0;
    t += len[i] + pi_time;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double xi = len[i] / tc;
    acc += 2.0 * tc * tc * (xi + std::expm1(-xi));
    const double ei = -std::expm1(-xi);
    for (std::size_t j = i + 1; j < k; ++j) {
      const double gap = start[j] - (start[i] + len[i]);
      acc += 2.0 * sign[i] * sign[j] * tc * tc * ei * -std::expm1(-len[j] / tc) * std::exp(-gap / tc);
    }
  }
  return kTwoPi * kTwoPi * acc;
}

double cpmg_coherence(int n_pulses, double free_time, double pi_time, double ou_sigma, double tc,
                      double relax_rate) {
  const double var = ou_sigma > 0.0 ? ou_sigma * ou_sigma * cpmg_phase_variance(n_pulses, free_time, pi_time, tc) : 0.0;
  return std::exp(-0.5 * var - 4.0 * relax_rate * (free_time + n_pulses * pi_time));
}

double cpmg_t2(int n_pulses, double pi_time, double ou_sigma, double tc, double relax_rate) {
  auto c = [&](double t) { return cpmg_coherence(n_pulses, t, pi_time, ou_sigma, tc, relax_rate); };
  double lo = 0.0, hi = 1.0;
  if (c(lo) < kInvE) return 0.0;
  while (c(hi) >= kInvE) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9) return kInf;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (c(mid) >= kInvE ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double calibrate_ou_sigma(double hahn_t2, double pi_time, double tc, double relax_rate) {
  const double budget = 1.0 - 4.0 * relax_rate * (hahn_t2 + pi_time);
  if (!(budget > 0.0)) throw InvalidArgument("calibrate_ou_sigma: relaxation alone already exceeds the Hahn T2");
  return std::sqrt(2.0 * budget / cpmg_phase_variance(1, hahn_t2, pi_time, tc));
}

double one_over_e_time(std::span<const double> t, std::span<const double> c) {
  if (t.size() != c.size() || t.empty()) throw InvalidArgument("one_over_e_time: size mismatch");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] >= kInvE) continue;
    if (i == 0) return t[0];
    const double c0 = c[i - 1], c1 = c[i];
    if (c0 < 1.0 && c1 > 0.0 && t[i - 1] > 0.0) {
      const double u0 = std::log(-std::log(c0)), u1 = std::log(-std::log(c1));
      const double x0 = std::log(t[i - 1]), x1 = std::log(t[i]);
      return std::exp(x0 + (0.0 - u0) * (x1 - x0) / (u1 - u0));
    }
    return t[i - 1] + (kInvE - c0) * (t[i] - t[i - 1]) / (c1 - c0);
  }
  return kInf;
}

RunResult repro_fig4c(const ScenarioConfig& cfg) {
  RunResult out;
  const double omega_pulse = 10.0;
  const double t_pi = 0.5 / omega_pulse;
  const double sigma = cfg.static_enabled ? sigma_from_t2star(cfg.t2star) : 0.0;
  const std::size_t n = cfg.samples ? cfg.samples : 2000;
  const std::vector<int> ns = {1, 2, 4, 8, 16, 32, 64, 128};
  const std::vector<double> grid = log_grid(20.0, 2000.0, 40);

  double rate = 0.0;
  std::vector<RelaxationChannel> ch;
  if (cfg.relaxation_enabled) {
    const T1rhoCalibration cal = calibrate_t1rho(cfg.t1rho, 1.0);
    rate = cal.rate;
    ch.push_back({ChannelKind::rotating_frame_relaxation, rate});
    out.fits["t1rho_calibration"] = {{"rate_MHz", cal.rate}, {"fitted_t1rho_us", cal.fitted_t1rho},
                                     {"iterations", cal.iterations}};
  }
  double ou_sigma = 0.0;
  if (cfg.ou_enabled) {
    ou_sigma = cfg.ou_sigma ? *cfg.ou_sigma : calibrate_ou_sigma(cfg.hahn_t2, t_pi, cfg.correlation_time, rate);
  }
  NoiseModel model;
  if (sigma > 0.0) model.add(StaticGaussianDetuning{sigma});
  if (ou_sigma > 0.0) model.add(OrnsteinUhlenbeckDetuning{ou_sigma, cfg.correlation_time});

  out.scenario = {"fig4c", "CPMG with hard pi_y pulses at 10 MHz, start along -y, N in {1..128}",
                  {{"static_sigma_MHz", sigma},
                   {"ou_sigma_MHz", ou_sigma},
                   {"correlation_time_us", cfg.correlation_time},
                   {"channels", channels_json(ch)}},
                  "free_time_us", grid, std::nullopt, cfg.seed};

  PropagationOptions popt;
  popt.hard_pulses = true;
  const BlochVector start(0.0, -1.0, 0.0);
  Dataset data({"N", "free_time_us", "coherence", "coherence_stderr", "coherence_analytic"});
  Dataset t2tab({"N", "t2_us", "t2_analytic_us"});
  std::vector<double> t2s;
  json per_n = json::array();
  for (int np : ns) {
    std::vector<PulseSequence> seqs;
    for (double t : grid) seqs.push_back(build_cpmg(np, t / np, omega_pulse));
    const SampleMatrix s = sample_ensemble(
        n, 2 * grid.size(), derive_seed(cfg.seed, static_cast<std::uint64_t>(np)),
        [&](std::size_t, std::mt19937_64& rng, std::span<double> row) {
          const double d0 = draw_static(model, rng).detuning;
          for (std::size_t j = 0; j < seqs.size(); ++j) {
            const std::vector<double> det = sample_segment_detunings(seqs[j], model, d0, rng);
            const BlochVector r = sequence_bloch_map(seqs[j], det, ch, popt).apply(start);
            row[2 * j] = r.x();
            row[2 * j + 1] = r.y();
          }
        },
        cfg.execution);
    const auto est = column_estimates(s);
    std::vector<double> coh;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double mx = est[2 * j].mean, my = est[2 * j + 1].mean;
      const double c = std::hypot(mx, my);
      coh.push_back(c);
      const double se = stderr_along_mean(s, Eigen::Index(2 * j), Eigen::Index(2 * j + 1), mx, my);
      data.add_row({double(np), grid[j], c, se,
                    cpmg_coherence(np, grid[j], t_pi, ou_sigma, cfg.correlation_time, rate)});
    }
    const double t2 = one_over_e_time(grid, coh);
    const double t2a = cpmg_t2(np, t_pi, ou_sigma, cfg.correlation_time, rate);
    t2s.push_back(t2);
    t2tab.add_row({double(np), t2, t2a});
    per_n.push_back({{"N", np}, {"t2_us", num(t2)}, {"t2_analytic_us", num(t2a)},
                     {"status", std::isfinite(t2) ? "ok" : "unbounded"}});
  }
  out.fits["t2"] = per_n;
  out.fits["ou_sigma_MHz"] = ou_sigma;
  out.fits["pi_time_us"] = t_pi;
  out.fits["samples"] = n;

  const bool bounded = std::all_of(t2s.begin(), t2s.end(), [](double v) { return std::isfinite(v); });
  out.fits["all_bounded"] = bounded;
  if (!bounded) {
    out.checks.push_back(failed_check("t2_bounded", "coherence never fell below 1/e for some N (no dynamic noise?)"));
  }
  out.checks.push_back(check_relative("hahn_t2", t2s.front(), cfg.hahn_t2, 0.10));
  double min_ratio = kInf;
  for (std::size_t i = 1; i < t2s.size(); ++i) min_ratio = std::min(min_ratio, t2s[i] / t2s[i - 1]);
  out.checks.push_back(check_range("t2_monotone", min_ratio, 1.0, kInf, 1.0));

  // power law on the pre-saturation range
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(t2s[i] < cfg.t1rho / 2)) continue;
    const double x = std::log(ns[i]), y = std::log(t2s[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  const double exponent = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : std::numeric_limits<double>::quiet_NaN();
  out.fits["power_law_exponent"] = num(exponent);
  out.fits["power_law_points"] = cnt;
  out.checks.push_back(check_range("power_law_exponent", exponent, 0.2, 0.5, reference::kCpmgExponent));
  out.checks.push_back(check_relative("t2_saturation", t2s.back(), cfg.t1rho, 0.15));
  out.checks.push_back(check_range("t2_above_t2star", t2s.front(), cfg.t2star, kInf, cfg.hahn_t2));

  out.tables.emplace_back("data", std::move(data));
  out.tables.emplace_back("t2", std::move(t2tab));
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids = {"table1", "fig1d", "fig2b", "fig3", "fig4a", "fig4b", "fig4c"};
  return ids;
}

RunResult run_scenario(std::string_view id, const ScenarioConfig& cfg) {
  RunResult r;
  if (id == "table1") r = repro_table1(cfg);
  else if (id == "fig1d") r = repro_fig1d(cfg);
  else if (id == "fig2b") r = repro_fig2b(cfg);
  else if (id == "fig3") r = repro_fig3(cfg);
  else if (id == "fig4a") r = repro_fig4a(cfg);
  else if (id == "fig4b") r = repro_fig4b(cfg);
  else if (id == "fig4c") r = repro_fig4c(cfg);
  else throw InvalidArgument("unknown scenario id: " + std::string(id));
  r.scenario.validate();
  const json hashed = {{"scenario", std::string(id)}, {"config", cfg.to_json()}};
  r.provenance = {{"seed", cfg.seed},
                  {"config_hash", config_hash(hashed)},
                  {"config", cfg.to_json()},
                  {"version", DCG_VERSION},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)}};
  return r;
}

void write_run(const RunResult& r, const std::filesystem::path& dir, int precision) {
  std::filesystem::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < r.tables.size(); ++i) {
    const std::string name = i == 0 ? "data.csv" : "data_" + r.tables[i].first + ".csv";
    write_atomic(dir / name, to_csv(r.tables[i].second, precision));
    files.push_back(name);
  }
  const json fits = {{"scenario", r.scenario.name}, {"fits", r.fits}, {"checks", r.checks_json()}};
  write_atomic(dir / "fits.json", fits.dump(2) + "\n");
  files.push_back("fits.json");
  const json manifest = {{"scenario",
                          {{"name", r.scenario.name},
                           {"sequence", r.scenario.sequence},
                           {"noise", r.scenario.noise},
                           {"sweep_variable", r.scenario.sweep_variable},
                           {"grid_points", r.scenario.grid.size()},
                           {"grid_range", {r.scenario.grid.front(), r.scenario.grid.back()}},
                           {"shots", r.scenario.shots ? json(*r.scenario.shots) : json(nullptr)}}},
                         {"provenance", r.provenance},
                         {"passed", r.passed()},
                         {"failed_checks", [&] {
                            json f = json::array();
                            for (const auto& c : r.checks) {
                              if (!c.passed && !c.informational) f.push_back(c.name);
                            }
                            return f;
                          }()},
                         {"files", files}};
  write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace dcg

#include "dcg/errors.hpp"
#include "dcg/harness.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace dcg;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Brute-force (2 pi)^2 int int f(t) f(s) exp(-|t - s| / tc) for the CPMG filter with pulses of width tp.
double variance_oracle(int n, double free_time, double tp, double tc) {
  const double s = free_time / n;
  std::vector<std::pair<double, double>> windows;  // [start, end) with sign alternating
  double t = 0;
  for (int i = 0; i <= n; ++i) {
    const double len = (i == 0 || i == n) ? s / 2 : s;
    windows.emplace_back(t, t + len);
    t += len + tp;
  }
  const int m = 3000;
  const double h = t / m;
  std::vector<double> f(m), x(m);
  for (int k = 0; k < m; ++k) {
    x[k] = (k + 0.5) * h;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      if (x[k] >= windows[w].first && x[k] < windows[w].second) f[k] = (w % 2 == 0) ? 1.0 : -1.0;
    }
  }
  double acc = 0;
  for (int a = 0; a < m; ++a) {
    if (f[a] == 0) continue;
    for (int b = 0; b < m; ++b) acc += f[a] * f[b] * std::exp(-std::abs(x[a] - x[b]) / tc);
  }
  return 4 * oracle::pi * oracle::pi * acc * h * h;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("check helpers") {
  const Check a = check_relative("a", 1.04, 1.0, 0.05);
  CHECK(a.passed);
  CHECK(a.lo == doctest::Approx(0.95));
  CHECK_FALSE(check_absolute("b", 1.2, 1.0, 0.1).passed);
  CHECK_FALSE(check_range("c", std::nan(""), 0.0, 1.0, 0.5).passed);
  CHECK_THROWS_AS(check_relative("d", 1.0, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("CPMG phase variance matches a brute-force double integral") {
  for (int n : {1, 2, 4}) {
    for (double tp : {0.0, 0.5}) {
      CAPTURE(n);
      CAPTURE(tp);
      const double want = variance_oracle(n, 12.0, tp, 3.0);
      CHECK(cpmg_phase_variance(n, 12.0, tp, 3.0) == doctest::Approx(want).epsilon(2e-3));
    }
  }
  CHECK_THROWS_AS(cpmg_phase_variance(0, 1.0, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("CPMG T2 and sigma calibration are mutually consistent") {
  const double rate = 1.0 / (4 * 660.0), tp = 0.05;
  const double s = calibrate_ou_sigma(123.2, tp, 10.0, rate);
  CHECK(cpmg_t2(1, tp, s, 10.0, rate) == doctest::Approx(123.2).epsilon(1e-9));
  for (int n : {2, 8, 64}) {
    const double t2 = cpmg_t2(n, tp, s, 10.0, rate);
    CHECK(cpmg_coherence(n, t2, tp, s, 10.0, rate) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  }
  CHECK(std::isinf(cpmg_t2(4, tp, 0.0, 10.0, 0.0)));
  CHECK_THROWS_AS(calibrate_ou_sigma(1000.0, tp, 10.0, 1e-3), InvalidArgument);
}

TEST_CASE("1/e crossing interpolation is exact for stretched exponentials") {
  const auto t = log_grid(1.0, 100.0, 30);
  std::vector<double> c;
  for (double x : t) c.push_back(std::exp(-std::pow(x / 17.3, 3)));
  CHECK(one_over_e_time(t, c) == doctest::Approx(17.3).epsilon(1e-10));
  std::vector<double> flat(t.size(), 0.9);
  CHECK(std::isinf(one_over_e_time(t, flat)));
  std::vector<double> low(t.size(), 0.1);
  CHECK(one_over_e_time(t, low) == t[0]);
}

TEST_CASE("T1rho calibration hits its target") {
  const T1rhoCalibration cal = calibrate_t1rho(reference::kT1rho);
  CHECK(cal.fitted_t1rho == doctest::Approx(reference::kT1rho).epsilon(1e-3));
  // isotropic decay at 4 gamma, up to the short spin-lock preparation pulses
  CHECK(4 * cal.rate * reference::kT1rho == doctest::Approx(1.0).epsilon(0.01));
  CHECK_THROWS_AS(calibrate_t1rho(-1.0), InvalidArgument);
}

TEST_CASE("fig2b ordering and closed form") {
  const RunResult r = repro_fig2b();
  CHECK(r.passed());
  const Dataset& d = r.table("data");
  const auto eps = d.column("eps"), plain = d.column("plain"), five = d.column("five_piece");
  for (std::size_t i = 1; i < eps.size(); ++i) {
    const double w = std::hypot(1.0, eps[i]);
    // plain pi pulse fidelity (1/W) sin(pi W / 2) on the gate output
    CHECK(plain[i] == doctest::Approx(1.0 - std::sin(oracle::pi * w / 2) / w).epsilon(1e-6));
    if (eps[i] < 0.1) CHECK(five[i] < plain[i]);
  }
}

TEST_CASE("fig3 x and y are mirror images") {
  ScenarioConfig cx, cy;
  cy.axis = 'y';
  const RunResult x = repro_fig3(cx), y = repro_fig3(cy);
  CHECK(x.passed());
  CHECK(y.passed());
  const auto a = x.table("data").column("p0_detect_phase0"), b = y.table("data").column("p0_detect_phase90");
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("fig4c without dynamic noise is flagged unbounded") {
  ScenarioConfig c;
  c.ou_enabled = false;
  c.relaxation_enabled = false;
  c.samples = 20;
  const RunResult r = repro_fig4c(c);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.check("t2_bounded").passed);
  CHECK(r.fits["all_bounded"] == false);
}

TEST_CASE("fig4a with all noise off reports no decay") {
  ScenarioConfig c;
  c.static_enabled = false;
  c.relaxation_enabled = false;
  c.amplitude_sigma = 0.0;
  c.samples = 20;
  const RunResult r = repro_fig4a(c);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.check("t_dcg_vs_t1rho").passed);
}

TEST_CASE("runs are deterministic and serial equals parallel") {
  ScenarioConfig c;
  c.samples = 300;
  c.seed = 42;
  const auto base = std::filesystem::temp_directory_path() / "dcg_harness_test";
  std::filesystem::remove_all(base);
  write_run(run_scenario("fig1d", c), base / "a");
  write_run(run_scenario("fig1d", c), base / "b");
  c.execution = Execution::serial;
  write_run(run_scenario("fig1d", c), base / "c");
  for (const char* f : {"data.csv", "fits.json", "manifest.json"}) {
    CAPTURE(f);
    const std::string a = slurp(base / "a" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(base / "b" / f));
    CHECK(a == slurp(base / "c" / f));
  }
  c.seed = 43;
  write_run(run_scenario("fig1d", c), base / "d");
  CHECK(slurp(base / "a" / "data.csv") != slurp(base / "d" / "data.csv"));
  std::filesystem::remove_all(base);
}

TEST_CASE("provenance and dispatch") {
  const RunResult r = run_scenario("fig3");
  CHECK(r.provenance["seed"] == 20130917);
  CHECK(r.provenance["config_hash"].get<std::string>().size() == 16);
  CHECK_THROWS_AS(run_scenario("fig9"), InvalidArgument);
  CHECK(scenario_ids().size() == 7);
}

}

#include "dcg/errors.hpp"
#include "dcg/noise.hpp"
#include "dcg/parallel.hpp"
#include "dcg/sequences.hpp"
#include "dcg/solver.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace dcg;

TEST_SUITE("noise") {

TEST_CASE("sigma from T2*: ensemble Ramsey envelope is exp(-(t/T2*)^2)") {
  const double t2 = 6.56, s = sigma_from_t2star(t2);
  // E[cos(2 pi delta t)] = exp(-(2 pi s t)^2 / 2)
  for (double t : {1.0, 6.56, 10.0}) {
    CHECK(std::exp(-0.5 * std::pow(2 * kPi * s * t, 2)) == doctest::Approx(std::exp(-std::pow(t / t2, 2))));
  }
  CHECK_THROWS_AS(sigma_from_t2star(0.0), InvalidArgument);
}

TEST_CASE("static samples have the requested moments") {
  const auto v = sample_static(StaticGaussianDetuning{0.3}, 200000, 9);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size() - 1;
  CHECK(std::abs(mean) < 4 * 0.3 / std::sqrt(200000.0));
  CHECK(std::sqrt(var) == doctest::Approx(0.3).epsilon(0.01));
  CHECK(sample_static(StaticGaussianDetuning{0.3}, 10, 9) == sample_static(StaticGaussianDetuning{0.3}, 10, 9));
}

TEST_CASE("OU trajectory autocorrelation is sigma^2 exp(-lag/tau)") {
  const double sigma = 0.5, tau = 2.0, dt = 0.1;
  const OuTrajectory tr = sample_ou_trajectory({sigma, tau}, 40000.0, dt, 3);
  const auto& x = tr.values;
  for (int lag : {0, 10, 20, 40}) {
    double acc = 0.0;
    const std::size_t n = x.size() - static_cast<std::size_t>(lag);
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i + static_cast<std::size_t>(lag)];
    acc /= static_cast<double>(n);
    CAPTURE(lag);
    CHECK(acc == doctest::Approx(sigma * sigma * std::exp(-lag * dt / tau)).epsilon(0.05));
  }
}

TEST_CASE("OU segment means have the exact integrated variance") {
  // Var(mean over T) = 2 s^2 tau^2 (T/tau - 1 + exp(-T/tau)) / T^2
  const double sigma = 0.2, tau = 1.5, T = 2.0;
  NoiseModel m;
  m.add(OrnsteinUhlenbeckDetuning{sigma, tau});
  const PulseSequence seq({{T, 0.0, 0.0}, {T, 0.0, 0.0}}, "two_waits");
  std::mt19937_64 rng(4);
  const int n = 100000;
  double v0 = 0, c01 = 0;
  for (int i = 0; i < n; ++i) {
    const auto d = sample_segment_detunings(seq, m, 0.0, rng);
    v0 += d[0] * d[0];
    c01 += d[0] * d[1];
  }
  v0 /= n;
  c01 /= n;
  const double x = T / tau;
  const double var = 2 * sigma * sigma * tau * tau * (x - 1 + std::exp(-x)) / (T * T);
  const double cov = sigma * sigma * tau * tau * std::pow(1 - std::exp(-x), 2) / (T * T);
  CHECK(v0 == doctest::Approx(var).epsilon(0.02));
  CHECK(c01 == doctest::Approx(cov).epsilon(0.05));
}

TEST_CASE("infinite correlation time reduces OU to a static draw") {
  NoiseModel m;
  m.add(OrnsteinUhlenbeckDetuning{0.3, std::numeric_limits<double>::infinity()});
  const PulseSequence seq({{1.0, 0.0, 0.0}, {5.0, 0.0, 0.0}, {0.1, 0.0, 0.0}}, "waits");
  std::mt19937_64 rng(2);
  const auto d = sample_segment_detunings(seq, m, 0.0, rng);
  CHECK(d[0] == doctest::Approx(d[1]).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(d[2]).epsilon(1e-12));
}

TEST_CASE("noise model validation") {
  NoiseModel m;
  CHECK_THROWS_AS(m.add(StaticGaussianDetuning{-1.0}), InvalidArgument);
  CHECK_THROWS_AS(m.add(OrnsteinUhlenbeckDetuning{0.1, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(m.add(AmplitudeNoise{-0.1}), InvalidArgument);
  CHECK(m.is_noiseless());
  m.add(StaticGaussianDetuning{0.3}).add(StaticGaussianDetuning{0.4});
  CHECK(m.static_sigma() == doctest::Approx(0.5));
}

TEST_CASE("Gauss-Hermite rule: known nodes and exact moments") {
  const QuadratureRule r3 = gauss_hermite(3);
  REQUIRE(r3.nodes.size() == 3);
  CHECK(r3.nodes[0] == doctest::Approx(-std::sqrt(3.0)));
  CHECK(r3.nodes[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(r3.weights[0] == doctest::Approx(1.0 / 6));
  CHECK(r3.weights[1] == doctest::Approx(2.0 / 3));
  const QuadratureRule r = gauss_hermite(20);
  // E[Z^(2k)] = (2k - 1)!!
  double m4 = 0, m8 = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    m4 += r.weights[i] * std::pow(r.nodes[i], 4);
    m8 += r.weights[i] * std::pow(r.nodes[i], 8);
  }
  CHECK(m4 == doctest::Approx(3.0));
  CHECK(m8 == doctest::Approx(105.0));
  CHECK_THROWS_AS(gauss_hermite(0), InvalidArgument);
}

TEST_CASE("Gauss-Hermite and Monte Carlo agree within 3 sigma for the pi gates") {
  const double w1 = 20.0;
  const SolveResult five = solve_supcode(Ansatz::five_piece(kPi / 2), {2, 4});
  SupcodeParams p = five.params;
  p.omega1 = w1;
  const SolveResult three = solve_supcode(Ansatz::three_piece(kPi), {2});
  const std::vector<PulseSequence> gates = {build_plain(kPi, 0.0, w1), Ansatz::three_piece(kPi).build(three.params.tau, w1),
                                            build_supcode5_pi(p)};
  const Observable p1 = [](const BlochVector& r) { return 0.5 * (1 - r.z()); };
  for (double s : {0.5, 1.5, 3.0}) {
    NoiseModel m;
    m.add(StaticGaussianDetuning{s});
    for (const auto& g : gates) {
      CAPTURE(g.label());
      CAPTURE(s);
      const double q = quadrature_average(g, m, p1, 41);
      const Estimate e = ensemble_average(g, m, p1, 4000, 17);
      CHECK(std::abs(q - e.mean) <= 3 * e.std_error + 1e-12);
    }
  }
}

TEST_CASE("quadrature rejects OU noise") {
  NoiseModel m;
  m.add(OrnsteinUhlenbeckDetuning{0.1, 1.0});
  CHECK_THROWS_AS(quadrature_average(build_plain(kPi, 0, 1), m, ground_population), InvalidArgument);
}

TEST_CASE("serial and parallel ensembles are bit-identical") {
  NoiseModel m;
  m.add(StaticGaussianDetuning{0.05});
  m.add(OrnsteinUhlenbeckDetuning{0.01, 10.0});
  m.add(RelaxationChannel{ChannelKind::rotating_frame_relaxation, 1e-3});
  const PulseSequence c = build_cpmg(8, 4.0, 10.0);
  EnsembleOptions serial, parallel;
  serial.execution = Execution::serial;
  parallel.execution = Execution::parallel;
  const Estimate a = ensemble_average(c, m, ground_population, 500, 99, serial);
  const Estimate b = ensemble_average(c, m, ground_population, 500, 99, parallel);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);

  const SampleFn fn = [](std::size_t i, std::mt19937_64& rng, std::span<double> row) {
    std::normal_distribution<double> g;
    row[0] = g(rng) + static_cast<double>(i);
    row[1] = g(rng);
  };
  CHECK(sample_ensemble(257, 2, 5, fn, Execution::parallel) == sample_ensemble_serial(257, 2, 5, fn));
}

TEST_CASE("derive_seed is stable and index-sensitive") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("ensemble exceptions surface from worker threads") {
  const SampleFn bad = [](std::size_t i, std::mt19937_64&, std::span<double>) {
    if (i == 7) throw NumericalFailure("boom");
  };
  CHECK_THROWS_AS(sample_ensemble(32, 1, 1, bad, Execution::parallel), NumericalFailure);
}

}

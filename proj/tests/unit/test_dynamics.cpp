#include "dcg/dynamics.hpp"
#include "dcg/errors.hpp"
#include "dcg/fidelity.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace dcg;

TEST_SUITE("dynamics") {

TEST_CASE("segment propagator matches eigendecomposition exponential") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double det = u(rng), rabi = std::abs(u(rng)), phase = u(rng), off = 0.3 * u(rng), t = std::abs(u(rng));
    const Unitary2 got = segment_propagator(ControlFrame{det, rabi, phase, off}, t);
    const oracle::M2 want = oracle::propagator(oracle::hamiltonian(det + off, rabi, phase), t);
    CHECK((got.matrix() - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("tiny field uses the series branch without losing accuracy") {
  const ControlFrame f{1e-10, 0.0, 0.0, 0.0};
  const Unitary2 got = segment_propagator(f, 2.0);
  const oracle::M2 want = oracle::propagator(oracle::hamiltonian(1e-10, 0.0, 0.0), 2.0);
  CHECK((got.matrix() - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("unitarity and composition invariants") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Unitary2> segs;
  oracle::M2 prod = oracle::M2::Identity();
  for (int i = 0; i < 50; ++i) {
    const ControlFrame f{u(rng), std::abs(u(rng)), u(rng), 0.0};
    const double t = std::abs(u(rng));
    segs.push_back(segment_propagator(f, t));
    prod = segs.back().matrix() * prod;
  }
  const Unitary2 total = compose(segs);
  const Mat2 m = total.matrix();
  CHECK((m.adjoint() * m - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(m.determinant() - 1.0) < 1e-12);
  CHECK((m - prod).cwiseAbs().maxCoeff() < 1e-11);
  CHECK_THROWS_AS(compose({}), InvalidArgument);
}

TEST_CASE("from_matrix rejects non-SU(2) input") {
  Mat2 m;
  m << 1, 0, 0, 2;
  CHECK_THROWS_AS(Unitary2::from_matrix(m), InvalidArgument);
  m << 0, 1, 1, 0;  // unitary but det = -1
  CHECK_THROWS_AS(Unitary2::from_matrix(m), InvalidArgument);
  CHECK_THROWS_AS(Unitary2::rotation(1.0, Eigen::Vector3d::Zero()), InvalidArgument);
}

TEST_CASE("rotation matrix agrees with the adjoint action on Pauli operators") {
  const Unitary2 u = segment_propagator(ControlFrame{0.3, 1.1, 0.7, 0.0}, 0.37);
  const Eigen::Matrix3d r = u.rotation_matrix();
  const oracle::M2 m = u.matrix();
  const oracle::M2 p[3] = {oracle::sx(), oracle::sy(), oracle::sz()};
  for (int j = 0; j < 3; ++j) {
    const oracle::M2 img = m * p[j] * m.adjoint();
    for (int i = 0; i < 3; ++i) CHECK(r(i, j) == doctest::Approx(0.5 * (p[i] * img).trace().real()).epsilon(1e-12));
  }
}

TEST_CASE("closed-form Rabi fidelity for the plain pi pulse") {
  // F = (w1 / W) sin(pi W / (2 w1)) with W = sqrt(w1^2 + delta^2)
  const double w1 = 20.0, t = 1.0 / (2 * w1);
  const Unitary2 target = Unitary2::rotation(kPi, Eigen::Vector3d::UnitX());
  for (int i = 0; i < 100; ++i) {
    const double delta = -3.0 + 6.0 * i / 99.0;
    const double om = std::hypot(w1, delta);
    const double closed = (w1 / om) * std::sin(kPi * om / (2 * w1));
    CHECK(std::abs(gate_fidelity(target, segment_propagator(ControlFrame{delta, w1, 0.0, 0.0}, t)) - closed) < 1e-10);
  }
}

TEST_CASE("density matrix validation") {
  CHECK_NOTHROW(DensityMatrix2::from_bloch({0.6, 0.0, 0.8}));
  CHECK_THROWS_AS(DensityMatrix2::from_bloch({1.0, 1.0, 0.0}), InvalidArgument);
  Mat2 m;
  m << 0.7, 0.0, 0.0, 0.4;  // trace 1.1
  CHECK_THROWS_AS(DensityMatrix2{m}, InvalidArgument);
  m << 0.5, 0.6, 0.6, 0.5;  // eigenvalue -0.1
  CHECK_THROWS_AS(DensityMatrix2{m}, InvalidArgument);
  CHECK_THROWS_AS(DensityMatrix2::unchecked(m).validate(), InvalidArgument);
}

TEST_CASE("lab dephasing decays coherence as exp(-2 gamma t)") {
  const double gamma = 0.05, t = 7.0;
  const RelaxationChannel ch{ChannelKind::lab_dephasing, gamma};
  const DensityMatrix2 rho0 = DensityMatrix2::from_bloch({1, 0, 0});
  const ControlFrame f{};
  // default step: 10 RK4 steps of h = 0.7, local error (2 gamma h)^5 / 120 each
  const DensityMatrix2 coarse = evolve_density(rho0, f, t, std::span(&ch, 1), default_lindblad_step(f, t));
  CHECK(bloch_vector(coarse).x() == doctest::Approx(std::exp(-2 * gamma * t)).epsilon(2e-7));
  const DensityMatrix2 fine = evolve_density(rho0, f, t, std::span(&ch, 1), 1e-2);
  CHECK(bloch_vector(fine).x() == doctest::Approx(std::exp(-2 * gamma * t)).epsilon(1e-12));
  const BlochVector r = segment_bloch_map(f, t, std::span(&ch, 1)).apply({1, 0, 0});
  CHECK(r.x() == doctest::Approx(std::exp(-2 * gamma * t)).epsilon(1e-12));
}

TEST_CASE("lab relaxation pulls toward |0> with transverse rate gamma/2") {
  const double gamma = 0.2, t = 3.0;
  const RelaxationChannel ch{ChannelKind::lab_relaxation, gamma};
  const BlochVector r = segment_bloch_map(ControlFrame{}, t, std::span(&ch, 1)).apply({0.6, 0.0, -0.8});
  CHECK(r.z() == doctest::Approx(1.0 - 1.8 * std::exp(-gamma * t)).epsilon(1e-12));
  CHECK(r.x() == doctest::Approx(0.6 * std::exp(-0.5 * gamma * t)).epsilon(1e-12));
}

TEST_CASE("drive-axis dephasing: 1/e envelope at 660 us for gamma = 1/1320") {
  const double gamma = 1.0 / (2 * 660.0);
  const RelaxationChannel ch{ChannelKind::drive_axis_dephasing, gamma};
  // spin-locked along x survives; the y-z plane dephases
  const ControlFrame lock{0.0, 1.0, 0.0, 0.0};
  const BlochMap m = segment_bloch_map(lock, 660.0, std::span(&ch, 1));
  CHECK(m.apply({1, 0, 0}).x() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m.apply({0, 0, 1}).norm() == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("rotating-frame relaxation shrinks every component at 4 gamma") {
  const double gamma = 1e-3;
  const RelaxationChannel ch{ChannelKind::rotating_frame_relaxation, gamma};
  const ControlFrame f{0.2, 1.0, 0.4, 0.0};
  const BlochVector r = segment_bloch_map(f, 50.0, std::span(&ch, 1)).apply({0, 0, 1});
  CHECK(r.norm() == doctest::Approx(std::exp(-4 * gamma * 50.0)).epsilon(1e-12));
}

TEST_CASE("Bloch maps agree with RK4 Lindblad integration for every channel") {
  const ControlFrame f{0.35, 0.8, 0.6, 0.1};
  const double t = 2.3;
  for (ChannelKind k : {ChannelKind::lab_dephasing, ChannelKind::lab_relaxation, ChannelKind::drive_axis_dephasing,
                        ChannelKind::rotating_frame_relaxation}) {
    CAPTURE(std::string(to_string(k)));
    const RelaxationChannel ch{k, 0.07};
    const DensityMatrix2 rho0 = DensityMatrix2::from_bloch({0.3, -0.5, 0.6});
    const DensityMatrix2 rho = evolve_density(rho0, f, t, std::span(&ch, 1), 1e-3);
    const BlochVector r = segment_bloch_map(f, t, std::span(&ch, 1)).apply(bloch_vector(rho0));
    CHECK((r - bloch_vector(rho)).norm() < 1e-9);
    CHECK(rho.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("channel parsing") {
  CHECK(channel_kind_from_string("rotating_frame_relaxation") == ChannelKind::rotating_frame_relaxation);
  CHECK_THROWS_AS(channel_kind_from_string("t3"), InvalidArgument);
  CHECK_THROWS_AS(RelaxationChannel({ChannelKind::lab_dephasing, -1.0}).validate(), InvalidArgument);
}

}

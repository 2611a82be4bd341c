#include "dcg/errors.hpp"
#include "dcg/fidelity.hpp"
#include "dcg/optimize.hpp"
#include "dcg/sequences.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace dcg;

TEST_SUITE("fidelity") {

TEST_CASE("gate fidelity: identity, global phase and oracle agreement") {
  const Unitary2 u = segment_propagator(ControlFrame{0.4, 1.0, 0.2, 0.0}, 0.3);
  CHECK(gate_fidelity(u, u) == doctest::Approx(1.0));
  CHECK(gate_infidelity(u, u) == doctest::Approx(0.0).epsilon(1e-16));
  Mat2 neg = -u.matrix();
  CHECK(gate_fidelity(u.matrix(), neg) == doctest::Approx(1.0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const Unitary2 v = segment_propagator(ControlFrame{d(rng), 1.0 + d(rng), d(rng), 0.0}, 0.5 + 0.4 * d(rng));
    CHECK(gate_infidelity(u, v) == doctest::Approx(oracle::infidelity(u.matrix(), v.matrix())).epsilon(1e-9));
  }
  Mat2 bad;
  bad << 1, 0, 0, 0.5;
  CHECK_THROWS_AS(gate_fidelity(u.matrix(), bad), InvalidArgument);
}

TEST_CASE("precise infidelity keeps relative accuracy for tiny errors") {
  const Unitary2 a = Unitary2::rotation(kPi, Eigen::Vector3d::UnitX());
  const Unitary2 b = a * Unitary2::rotation(2e-7, Eigen::Vector3d::UnitZ());
  // 1 - cos(1e-7) = 5e-15
  CHECK(gate_infidelity(a, b) == doctest::Approx(1.0 - std::cos(1e-7)).epsilon(1e-6));
}

TEST_CASE("state fidelity") {
  CHECK(state_fidelity(1, DensityMatrix2::excited()) == doctest::Approx(1.0));
  CHECK(state_fidelity(1, DensityMatrix2::from_bloch({1, 0, 0})) == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(state_fidelity(2, DensityMatrix2{}), InvalidArgument);
}

TEST_CASE("scaling fit recovers synthetic power laws") {
  const auto grid = log_grid(1e-3, 3e-2, 20);
  const ScalingFit f = fit_scaling([](double e) { return 64.1 * std::pow(e, 6) + 900 * std::pow(e, 8); }, grid);
  CHECK(f.order == doctest::Approx(6.0).epsilon(0.01));
  CHECK(f.coefficient == doctest::Approx(64.1).epsilon(0.05));
  const ScalingFit p = fit_scaling([](double e) { return 0.5 * e * e; }, grid);
  CHECK(p.order == doctest::Approx(2.0));
  CHECK(p.coefficient == doctest::Approx(0.5));
  CHECK_THROWS_AS(fit_scaling([](double) { return 0.0; }, grid), DegenerateFit);
  CHECK_THROWS_AS(fit_scaling([](double e) { return e; }, log_grid(1e-3, 1e-1, 20)), InvalidArgument);
  CHECK_THROWS_AS(fit_scaling([](double e) { return e; }, log_grid(1e-3, 3e-2, 5)), InvalidArgument);
}

TEST_CASE("decay fits recover injected parameters") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.002);
  std::vector<double> t, y1, y2, y3;
  for (int k = 0; k <= 400; ++k) {
    const double x = 0.05 * k;
    t.push_back(x);
    y1.push_back(decay_model_value(DecayModel::gaussian_cos, x, 1.0 / 6.56, 0.5, 0.1) + noise(rng));
  }
  const DecayFit g = fit_decay(t, y1, DecayModel::gaussian_cos, {.free_phase = true});
  CHECK(g.decay_time == doctest::Approx(6.56).epsilon(0.01));
  CHECK(g.frequency == doctest::Approx(0.5).epsilon(0.002));
  CHECK(g.status == FitStatus::ok);

  std::vector<double> t2;
  for (int k = 0; k <= 400; ++k) {
    const double x = 5.0 * k;
    t2.push_back(x);
    y2.push_back(decay_model_value(DecayModel::exponential_cos, x, 1.0 / 660, 0.0494, 0.0) + noise(rng));
    y3.push_back(decay_model_value(DecayModel::exponential, x, 1.0 / 300, 0.0, 0.0) + noise(rng));
  }
  const DecayFit e = fit_decay(t2, y2, DecayModel::exponential_cos);
  CHECK(e.decay_time == doctest::Approx(660).epsilon(0.02));
  CHECK(e.uncertainty > 0.0);
  const DecayFit x = fit_decay(t2, y3, DecayModel::exponential);
  CHECK(x.decay_time == doctest::Approx(300).epsilon(0.01));
}

TEST_CASE("flat oscillation is flagged unbounded") {
  std::vector<double> t, y;
  for (int k = 0; k <= 300; ++k) {
    t.push_back(0.5 * k);
    y.push_back(0.5 + 0.5 * std::cos(kTwoPi * 0.1 * t.back()));
  }
  const DecayFit f = fit_decay(t, y, DecayModel::exponential_cos);
  CHECK(f.status == FitStatus::unbounded);
  CHECK(std::isinf(f.decay_time));
}

TEST_CASE("decay fit input validation") {
  std::vector<double> t = {0, 1, 2}, y = {1, 0.5, 0.4};
  CHECK_THROWS_AS(fit_decay(t, y, DecayModel::exponential), InvalidArgument);
}

}

TEST_SUITE("optimize") {

TEST_CASE("Nelder-Mead finds the Rosenbrock minimum") {
  const ScalarObjective f = [](const Eigen::VectorXd& x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  NelderMeadOptions o;
  o.max_iterations = 10000;
  o.f_tol = 1e-16;
  o.x_tol = 1e-10;
  const OptimizeResult r = nelder_mead(f, Eigen::Vector2d(-1.2, 1.0), o);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
}

TEST_CASE("Levenberg-Marquardt solves a nonlinear least-squares problem") {
  // y = a exp(-b t) with a = 2, b = 0.3
  std::vector<double> t, y;
  for (int k = 0; k < 30; ++k) {
    t.push_back(0.5 * k);
    y.push_back(2.0 * std::exp(-0.3 * t.back()));
  }
  const ResidualFunction r = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) out[static_cast<Eigen::Index>(i)] = p[0] * std::exp(-p[1] * t[i]) - y[i];
    return out;
  };
  const LeastSquaresResult res = levenberg_marquardt(r, Eigen::Vector2d(1.0, 1.0));
  CHECK(res.x[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(res.x[1] == doctest::Approx(0.3).epsilon(1e-8));
  for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i] <= res.history[i - 1]);
}

TEST_CASE("numeric jacobian matches the analytic one") {
  const ResidualFunction r = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd o(2);
    o << std::sin(p[0]) * p[1], p[0] * p[0];
    return o;
  };
  const Eigen::Vector2d x(0.7, 1.3);
  const Eigen::MatrixXd j = numeric_jacobian(r, x, 1e-6);
  CHECK(j(0, 0) == doctest::Approx(std::cos(0.7) * 1.3).epsilon(1e-7));
  CHECK(j(0, 1) == doctest::Approx(std::sin(0.7)).epsilon(1e-7));
  CHECK(j(1, 0) == doctest::Approx(1.4).epsilon(1e-7));
}

}

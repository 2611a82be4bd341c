#include "dcg/noise.hpp"

#include "dcg/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace dcg {

NoiseModel::NoiseModel(std::vector<NoiseComponent> components) {
  for (auto& c : components) add(std::move(c));
}

NoiseModel& NoiseModel::add(NoiseComponent c) {
  validate_and_index(c);
  components_.push_back(std::move(c));
  return *this;
}

void NoiseModel::validate_and_index(const NoiseComponent& c) {
  std::visit(
      [this](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StaticGaussianDetuning>) {
          if (!std::isfinite(v.sigma) || v.sigma < 0.0) {
            throw InvalidArgument("StaticGaussianDetuning: sigma must be >= 0");
          }
          static_var_ += v.sigma * v.sigma;
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeckDetuning>) {
          if (!std::isfinite(v.sigma) || v.sigma < 0.0) {
            throw InvalidArgument("OrnsteinUhlenbeckDetuning: sigma must be >= 0");
          }
          if (!(v.correlation_time > 0.0)) {
            throw InvalidArgument("OrnsteinUhlenbeckDetuning: correlation_time must be > 0");
          }
          ou_.push_back(v);
        } else if constexpr (std::is_same_v<T, AmplitudeNoise>) {
          if (!std::isfinite(v.relative_sigma) || v.relative_sigma < 0.0) {
            throw InvalidArgument("AmplitudeNoise: relative_sigma must be >= 0");
          }
          amp_var_ += v.relative_sigma * v.relative_sigma;
        } else {
          v.validate();
          channels_.push_back(v);
        }
      },
      c);
}

double NoiseModel::static_sigma() const { return std::sqrt(static_var_); }
double NoiseModel::amplitude_sigma() const { return std::sqrt(amp_var_); }

bool NoiseModel::has_ou() const {
  for (const auto& o : ou_) {
    if (o.sigma > 0.0) return true;
  }
  return false;
}

bool NoiseModel::is_noiseless() const {
  bool quiet_channels = true;
  for (const auto& ch : channels_) quiet_channels = quiet_channels && ch.rate == 0.0;
  return static_var_ == 0.0 && amp_var_ == 0.0 && !has_ou() && quiet_channels;
}

double sigma_from_t2star(double t2star) {
  if (!(t2star > 0.0)) throw InvalidArgument("sigma_from_t2star: T2* must be > 0");
  if (std::isinf(t2star)) return 0.0;
  // <cos(2 pi delta t)> = exp(-2 pi^2 sigma^2 t^2) = exp(-(t/T2*)^2)
  return 1.0 / (std::sqrt(2.0) * kPi * t2star);
}

std::vector<double> sample_static(const StaticGaussianDetuning& model, std::size_t count,
                                  std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("sample_static: count must be >= 1");
  if (!std::isfinite(model.sigma) || model.sigma < 0.0) {
    throw InvalidArgument("sample_static: sigma must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> out(count);
  for (auto& v : out) v = model.sigma * normal(rng);
  return out;
}

OuTrajectory sample_ou_trajectory(const OrnsteinUhlenbeckDetuning& model, double duration, double dt,
                                  std::uint64_t seed) {
  if (!(dt > 0.0) || !(duration > 0.0)) {
    throw InvalidArgument("sample_ou_trajectory: need dt > 0 and duration > 0");
  }
  NoiseModel{}.add(model);  // validates
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-12));
  const double decay = std::isinf(model.correlation_time) ? 1.0 : std::exp(-dt / model.correlation_time);
  const double kick = model.sigma * std::sqrt(std::max(0.0, 1.0 - decay * decay));

  OuTrajectory tr;
  tr.times.resize(steps + 1);
  tr.values.resize(steps + 1);
  double x = model.sigma * normal(rng);
  for (std::size_t k = 0; k <= steps; ++k) {
    tr.times[k] = static_cast<double>(k) * dt;
    tr.values[k] = x;
    if (kick > 0.0) {
      x = x * decay + kick * normal(rng);
    } else {
      x *= decay;
    }
  }
  return tr;
}

StaticDraw draw_static(const NoiseModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  StaticDraw d;
  const double s = model.static_sigma();
  const double a = model.amplitude_sigma();
  if (s > 0.0) d.detuning = s * normal(rng);
  if (a > 0.0) d.amplitude_scale = 1.0 + a * normal(rng);
  return d;
}

namespace {

// Advance one OU process over `h` and return the time average over the step.
double ou_step_mean(const OrnsteinUhlenbeckDetuning& ou, double& x, double h,
                    std::normal_distribution<double>& normal, std::mt19937_64& rng) {
  if (h <= 0.0) return x;
  if (std::isinf(ou.correlation_time)) return x;
  const double tau = ou.correlation_time;
  const double th = h / tau;
  const double e = std::exp(-th);
  const double s2 = ou.sigma * ou.sigma;
  const double var_x = s2 * -std::expm1(-2.0 * th);
  const double var_i = th < 1e-3
                           ? s2 * tau * tau * (2.0 * th * th * th / 3.0 - th * th * th * th / 2.0 +
                                               7.0 * std::pow(th, 5) / 30.0)
                           : s2 * tau * tau * (2.0 * th - 3.0 + 4.0 * e - e * e);
  const double cov = s2 * tau * std::expm1(-th) * std::expm1(-th);
  const double mean_i = x * tau * -std::expm1(-th);

  const double z1 = normal(rng);
  const double z2 = normal(rng);
  const double sx = std::sqrt(std::max(var_x, 0.0));
  const double next = x * e + sx * z1;
  double integral = mean_i;
  if (sx > 0.0) {
    const double beta = cov / sx;
    integral += beta * z1 + std::sqrt(std::max(var_i - beta * beta, 0.0)) * z2;
  }
  x = next;
  return integral / h;
}

}  // namespace

std::vector<double> sample_segment_detunings(const PulseSequence& seq, const NoiseModel& model,
                                             double static_detuning, std::mt19937_64& rng) {
  std::vector<double> out(seq.size(), static_detuning);
  std::normal_distribution<double> normal;
  for (const auto& ou : model.ou_terms()) {
    if (ou.sigma == 0.0) continue;
    double x = ou.sigma * normal(rng);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      out[i] += ou_step_mean(ou, x, seq.segments()[i].duration, normal, rng);
    }
  }
  return out;
}

double ground_population(const BlochVector& r) { return 0.5 * (1.0 + r.z()); }

BlochVector run_realization(const PulseSequence& seq, const NoiseModel& model,
                            const BlochVector& initial, std::mt19937_64& rng,
                            const PropagationOptions& opts) {
  const StaticDraw draw = draw_static(model, rng);
  PropagationOptions o = opts;
  o.amplitude_scale *= draw.amplitude_scale;
  const std::vector<double> det = sample_segment_detunings(seq, model, draw.detuning, rng);
  bool dissipative = false;
  for (const auto& ch : model.channels()) dissipative = dissipative || ch.rate > 0.0;
  if (!dissipative) {
    return sequence_propagator(seq, det, o).rotation_matrix() * initial;
  }
  return sequence_bloch_map(seq, det, model.channels(), o).apply(initial);
}

Estimate ensemble_average(const PulseSequence& seq, const NoiseModel& model,
                          const Observable& observable, std::size_t n_samples, std::uint64_t seed,
                          const EnsembleOptions& opts) {
  if (n_samples < 2) throw InvalidArgument("ensemble_average: need at least 2 samples");
  const SampleMatrix samples = sample_ensemble(
      n_samples, 1, seed,
      [&](std::size_t, std::mt19937_64& rng, std::span<double> row) {
        row[0] = observable(run_realization(seq, model, opts.initial, rng, opts.propagation));
      },
      opts.execution);
  return column_estimates(samples).front();
}

QuadratureRule gauss_hermite(int order) {
  if (order < 1) throw InvalidArgument("gauss_hermite: order must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  return rule;
}

double quadrature_average(const PulseSequence& seq, const NoiseModel& model,
                          const Observable& observable, int order, const EnsembleOptions& opts) {
  if (model.has_ou()) throw InvalidArgument("quadrature_average: OU noise needs Monte Carlo");
  const QuadratureRule rule = gauss_hermite(order);
  const double s = model.static_sigma();
  const double a = model.amplitude_sigma();
  const QuadratureRule point{{0.0}, {1.0}};
  const QuadratureRule& det_rule = s > 0.0 ? rule : point;
  const QuadratureRule& amp_rule = a > 0.0 ? rule : point;

  double total = 0.0;
  for (std::size_t i = 0; i < det_rule.nodes.size(); ++i) {
    for (std::size_t j = 0; j < amp_rule.nodes.size(); ++j) {
      PropagationOptions o = opts.propagation;
      o.amplitude_scale *= 1.0 + a * amp_rule.nodes[j];
      const double delta = s * det_rule.nodes[i];
      const BlochMap map = sequence_bloch_map(seq, delta, model.channels(), o);
      total += det_rule.weights[i] * amp_rule.weights[j] * observable(map.apply(opts.initial));
    }
  }
  return total;
}

}  // namespace dcg

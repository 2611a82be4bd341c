#pragma once

// Classical noise on the qubit: quasi-static Gaussian detuning, Ornstein-Uhlenbeck
// detuning, static relative amplitude error, plus Lindblad relaxation channels.

#include "dcg/dynamics.hpp"
#include "dcg/parallel.hpp"
#include "dcg/sequences.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <variant>
#include <vector>

namespace dcg {

struct StaticGaussianDetuning {
  double sigma = 0.0;  // MHz
};

struct OrnsteinUhlenbeckDetuning {
  double sigma = 0.0;             // MHz
  double correlation_time = 1.0;  // us, +inf gives the static limit
};

struct AmplitudeNoise {
  double relative_sigma = 0.0;
};

using NoiseComponent =
    std::variant<StaticGaussianDetuning, OrnsteinUhlenbeckDetuning, AmplitudeNoise, RelaxationChannel>;

class NoiseModel {
 public:
  NoiseModel() = default;
  explicit NoiseModel(std::vector<NoiseComponent> components);

  NoiseModel& add(NoiseComponent c);

  const std::vector<NoiseComponent>& components() const { return components_; }

  /// Combined standard deviation of all static detuning terms.
  double static_sigma() const;
  double amplitude_sigma() const;
  bool has_ou() const;
  const std::vector<OrnsteinUhlenbeckDetuning>& ou_terms() const { return ou_; }
  const std::vector<RelaxationChannel>& channels() const { return channels_; }
  bool is_noiseless() const;

 private:
  void validate_and_index(const NoiseComponent& c);

  std::vector<NoiseComponent> components_;
  std::vector<OrnsteinUhlenbeckDetuning> ou_;
  std::vector<RelaxationChannel> channels_;
  double static_var_ = 0.0;
  double amp_var_ = 0.0;
};

/// Width of the static Gaussian whose ensemble Ramsey envelope is exp(-(t/T2*)^2).
double sigma_from_t2star(double t2star);

std::vector<double> sample_static(const StaticGaussianDetuning& model, std::size_t count,
                                  std::uint64_t seed);

struct OuTrajectory {
  std::vector<double> times;
  std::vector<double> values;
};

/// Exact discretisation on a uniform grid starting from a stationary draw.
OuTrajectory sample_ou_trajectory(const OrnsteinUhlenbeckDetuning& model, double duration, double dt,
                                  std::uint64_t seed);

/// Quasi-static part of one noise realization.
struct StaticDraw {
  double detuning = 0.0;         // MHz
  double amplitude_scale = 1.0;  // 1 + relative error
};

StaticDraw draw_static(const NoiseModel& model, std::mt19937_64& rng);

/// Mean detuning over every segment: the static draw plus exactly sampled OU
/// segment averages (joint Gaussian of endpoint and integral).
std::vector<double> sample_segment_detunings(const PulseSequence& seq, const NoiseModel& model,
                                             double static_detuning, std::mt19937_64& rng);

using Observable = std::function<double(const BlochVector&)>;

/// Population of |0>, (1 + z) / 2.
double ground_population(const BlochVector& r);

/// Final Bloch vector of one noise realization.
BlochVector run_realization(const PulseSequence& seq, const NoiseModel& model,
                            const BlochVector& initial, std::mt19937_64& rng,
                            const PropagationOptions& opts = {});

struct EnsembleOptions {
  PropagationOptions propagation;
  BlochVector initial = BlochVector::UnitZ();
  Execution execution = Execution::parallel;
};

Estimate ensemble_average(const PulseSequence& seq, const NoiseModel& model,
                          const Observable& observable, std::size_t n_samples, std::uint64_t seed,
                          const EnsembleOptions& opts = {});

/// Probabilists' Gauss-Hermite rule: nodes x_i and weights w_i with sum w_i f(x_i) ~ E[f(Z)].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_hermite(int order);

/// Deterministic average over static detuning and amplitude noise (tensor rule).
/// OU components are not supported here.
double quadrature_average(const PulseSequence& seq, const NoiseModel& model,
                          const Observable& observable, int order = 31,
                          const EnsembleOptions& opts = {});

}  // namespace dcg

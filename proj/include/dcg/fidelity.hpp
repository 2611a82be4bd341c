#pragma once

// Gate/state fidelities, infidelity scaling fits and decay-envelope fits.

#include "dcg/dynamics.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dcg {

/// |Tr(A B^dag)| / 2, insensitive to the SU(2) sign.
double gate_fidelity(const Unitary2& ideal, const Unitary2& actual);
/// Validating overload; non-unitary input raises InvalidArgument.
double gate_fidelity(const Mat2& ideal, const Mat2& actual);

/// 1 - F evaluated without cancellation: |v|^2 / (1 + |w|) for A B^dag = w I - i v.sigma.
double gate_infidelity(const Unitary2& ideal, const Unitary2& actual);

/// sqrt(<k|rho|k>).
double state_fidelity(int target_index, const DensityMatrix2& rho);

struct ScalingFit {
  double order = 0.0;
  double coefficient = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  double residual = 0.0;  // rms of log residuals
};

/// `infidelity(eps)` is evaluated at every grid point (eps = delta / omega1).
ScalingFit fit_scaling(const std::function<double(double)>& infidelity, std::span<const double> grid);

/// n log-spaced points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

enum class DecayModel {
  exponential_cos,  // 0.5 + 0.5 exp(-t/T) cos(2 pi f t + phi)
  gaussian_cos,     // 0.5 - 0.5 exp(-(t/T)^2) cos(2 pi f t + phi)
  exponential,      // 0.5 + 0.5 exp(-t/T)
};

const char* to_string(DecayModel m);

enum class FitStatus {
  ok,
  uncertain,  // one-sigma uncertainty exceeds the decay time
  unbounded,  // no measurable decay over the data span
};

const char* to_string(FitStatus s);

struct DecayFit {
  double decay_time = 0.0;  // us, +inf when unbounded
  double frequency = 0.0;   // MHz
  double phase = 0.0;       // rad
  double uncertainty = 0.0; // us, one sigma on decay_time
  double frequency_uncertainty = 0.0;
  double rate = 0.0;        // 1 / decay_time
  double rms_residual = 0.0;
  DecayModel model = DecayModel::exponential_cos;
  FitStatus status = FitStatus::ok;
  int iterations = 0;
};

struct DecayFitOptions {
  bool free_phase = false;
  int max_iterations = 300;
};

DecayFit fit_decay(std::span<const double> times, std::span<const double> signal, DecayModel model,
                   const DecayFitOptions& opts = {});

/// Model value for given parameters; exposed for residual plots and tests.
double decay_model_value(DecayModel model, double t, double rate, double frequency, double phase);

}  // namespace dcg

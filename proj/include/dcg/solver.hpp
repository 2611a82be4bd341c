#pragma once

// SUPCODE timing solver: choose segment durations so the noiseless sequence hits
// the target rotation and the leading even Taylor coefficients of the
// infidelity in eps = delta/omega1 vanish.

#include "dcg/dynamics.hpp"
#include "dcg/sequences.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dcg {

struct Ansatz {
  int piece_count = 0;
  std::vector<double> amplitude_pattern;  // multiples of omega1, 0 = wait
  std::vector<int> slot;                  // segment -> free duration index
  std::vector<double> slot_scale;         // segment duration = slot_scale[i] * tau[slot[i]]
  bool symmetric = true;
  int free_params = 0;
  double target_angle = 0.0;
  double target_phase = 0.0;
  std::string name;

  static Ansatz plain(double angle);
  static Ansatz three_piece(double angle);
  static Ansatz five_piece(double angle);
  static Ansatz nine_piece(double angle);
  /// 3, 5 or 9.
  static Ansatz from_pieces(int pieces, double angle);

  void validate() const;
  PulseSequence build(std::span<const double> tau, double omega1) const;
  /// Total duration in units of tau0.
  double total_tau(std::span<const double> tau) const;
  Unitary2 target() const { return target_rotation(target_angle, target_phase); }
};

/// Even Taylor coefficients of the infidelity: coefficients[i] multiplies eps^(2i+2).
struct ErrorSpectrum {
  std::vector<double> coefficients;
  double constant = 0.0;  // infidelity at eps = 0

  double coefficient(int order) const;
  int max_order() const { return 2 * static_cast<int>(coefficients.size()); }
  /// First order whose coefficient exceeds `threshold` in magnitude; 0 if none.
  int leading_order(double threshold = 1e-6) const;
  double leading_coefficient(double threshold = 1e-6) const;
};

/// Infidelity of a sequence against a target as a function of eps = delta / omega_ref.
std::function<double(double)> infidelity_curve(const PulseSequence& seq, const Unitary2& target,
                                               double omega_ref);

/// Grid route: least-squares even polynomial through infidelity samples at eps = +-k h,
/// halving h from h0 until the leading coefficient is stable to 1e-3 relative.
ErrorSpectrum taylor_infidelity(const std::function<double(double)>& infidelity, int max_order,
                                double h0 = 1e-2);

/// Exact route: propagates truncated power series through every segment.
ErrorSpectrum series_spectrum(const PulseSequence& seq, const Unitary2& target, double omega_ref,
                              int max_order);

/// Coefficient vectors of the error axis b(eps) (A B^dag = w I - i b.sigma), orders 0..max_order.
std::vector<Eigen::Vector3d> error_vector_series(const PulseSequence& seq, const Unitary2& target,
                                                 double omega_ref, int max_order);

struct SolverOptions {
  double omega1 = 1.0;             // MHz
  std::vector<double> grid = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5};
  int refine_starts = 24;
  double rotation_tol = 1e-10;     // infidelity at eps = 0
  double coefficient_tol = 1e-6;   // |c_k| for cancelled orders
  int spectrum_order = 10;
};

struct SolveResult {
  SupcodeParams params;
  ErrorSpectrum spectrum;            // orders 2..spectrum_order
  double rotation_infidelity = 0.0;
  double total_tau = 0.0;
  std::vector<double> merit_history; // best merit after each accepted step of the winning branch
  std::vector<std::vector<double>> roots;  // all distinct accepted roots, sorted
  bool identity = false;
};

/// Throws NoSolution (carrying the best residual) when no start converges.
SolveResult solve_supcode(const Ansatz& ansatz, const std::vector<int>& orders_to_cancel,
                          const std::optional<std::vector<double>>& initial_guess = std::nullopt,
                          const SolverOptions& opts = {});

struct NinePieceOutcome {
  bool resolved = false;
  std::optional<SolveResult> closest;  // root whose c8 is nearest the reference
  std::vector<double> c8_values;       // c8 of every distinct root found
  std::string note;
};

/// Cancels c2, c4 and c6 with the nine-piece ansatz and compares c8 against `reference_c8`.
NinePieceOutcome solve_nine_piece(double reference_c8, double tolerance, const SolverOptions& opts = {});

struct CoefficientCheck {
  int order = 0;
  double expected = 0.0;
  double recomputed = 0.0;
  bool ok = true;
};

struct VerificationReport {
  std::vector<CoefficientCheck> checks;
  int leading_order = 0;
  double leading_relative_error = 0.0;
};

/// Independent long-double evaluation at 12 Chebyshev nodes in eps^2 followed by
/// polynomial interpolation. Throws VerificationFailure when the leading
/// coefficient disagrees by more than 1% or a cancelled order reappears.
VerificationReport verify_solution(const PulseSequence& seq, const Unitary2& target, double omega_ref,
                                   const ErrorSpectrum& expected);
VerificationReport verify_solution(const Ansatz& ansatz, const SupcodeParams& params,
                                   const ErrorSpectrum& expected);

/// Long-double infidelity at a single eps; exposed for the verification tests.
long double precise_infidelity(const PulseSequence& seq, const Unitary2& target, double omega_ref,
                               long double eps);

}  // namespace dcg

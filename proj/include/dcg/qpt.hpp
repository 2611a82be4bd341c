#pragma once

// Single-qubit process tomography: simulated preparations/measurements, linear
// inversion to the chi matrix, and the average gate fidelity.

#include "dcg/dynamics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace dcg {

using Channel = std::function<DensityMatrix2(const DensityMatrix2&)>;

/// Preparations in order: |0>, |1>, |+>, |+i>.
enum class Preparation { zero = 0, one = 1, plus = 2, plus_i = 3 };
/// Measured Pauli expectation.
enum class Axis { x = 0, y = 1, z = 2 };

DensityMatrix2 preparation_state(Preparation p);

struct TomographyRecord {
  Preparation preparation = Preparation::zero;
  Axis axis = Axis::z;
  std::optional<std::uint64_t> shots;  // empty = exact expectation
  double mean = 0.0;                   // observed <sigma_axis>, includes readout contrast
  double contrast = 1.0;
};

struct TomographyOptions {
  std::optional<std::uint64_t> shots;
  std::uint64_t seed = 0;
  double contrast = 1.0;  // readout contrast in (0, 1]
};

/// Throws ChannelContractError when the channel returns an invalid state.
std::vector<TomographyRecord> run_process(const Channel& channel, const TomographyOptions& opts = {});

/// Process matrix in the {I, sx, sy, sz} basis: eps(rho) = sum chi_mn A_m rho A_n^dag.
class ChiMatrix {
 public:
  ChiMatrix() : m_(Eigen::Matrix4cd::Zero()) {}
  explicit ChiMatrix(const Eigen::Matrix4cd& m) : m_(m) {}

  const Eigen::Matrix4cd& matrix() const { return m_; }
  std::complex<double> operator()(int m, int n) const { return m_(m, n); }

  Mat2 apply(const Mat2& rho) const;
  /// Max deviation of sum chi_mn A_n^dag A_m from I.
  double trace_preservation_error() const;
  double min_eigenvalue() const;
  /// Clip negative eigenvalues and rescale to unit trace.
  ChiMatrix projected_psd() const;

 private:
  Eigen::Matrix4cd m_;
};

/// Pauli operator A_k, k = 0..3 -> I, sx, sy, sz.
Mat2 pauli_basis(int k);

/// Linear inversion. Throws InvalidArgument unless every preparation x axis pair is present.
ChiMatrix reconstruct_chi(const std::vector<TomographyRecord>& records, bool project_psd = false);

/// 1/2 + 1/12 sum_j Tr[U s_j U^dag eps(s_j)].
double average_gate_fidelity(const ChiMatrix& chi, const Unitary2& ideal);
double average_gate_fidelity(const Channel& channel, const Unitary2& ideal);

Channel unitary_channel(const Unitary2& u);
Channel depolarizing_channel(double p);
Channel bloch_map_channel(const BlochMap& map);

/// Extend a channel defined on states to arbitrary 2x2 operators by linearity.
Mat2 apply_linear(const Channel& channel, const Mat2& op);

}  // namespace dcg

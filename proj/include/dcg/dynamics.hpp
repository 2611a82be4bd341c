#pragma once

// Single-qubit propagation under piecewise-constant control.
//
// Units: frequencies in MHz, times in us. The rotating-frame Hamiltonian is
//   H = (delta + off_resonance) Sz + omega1 (cos(phase) Sx + sin(phase) Sy),  S = sigma / 2
// and a segment of length t evolves with exp(-i 2 pi H t). With this convention
// omega1 * t = 1/2 is a pi rotation.

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace dcg {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using BlochVector = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Element of SU(2), stored in Cayley-Klein form [[a, -conj(b)], [b, conj(a)]].
///
/// The representation makes det = 1 structural; construction normalises
/// |a|^2 + |b|^2 to one. No sign canonicalisation is applied implicitly, so a
/// 2 pi rotation is -I. Use canonical() when comparing matrices directly.
class Unitary2 {
 public:
  Unitary2() = default;

  /// Checks unitarity and unit determinant to 1e-9 before accepting.
  static Unitary2 from_matrix(const Mat2& m);
  static Unitary2 from_cayley_klein(Complex a, Complex b);
  /// exp(-i angle/2 n.sigma) for a unit axis n.
  static Unitary2 rotation(double angle, const Eigen::Vector3d& axis);

  Complex a() const { return a_; }
  Complex b() const { return b_; }

  Mat2 matrix() const;
  Unitary2 adjoint() const { return from_raw(std::conj(a_), -b_); }
  /// Global sign chosen so that Re(U00) >= 0 (ties broken on Im, then on b).
  Unitary2 canonical() const;
  /// Rotation of the Bloch sphere induced by U rho U^dagger.
  Eigen::Matrix3d rotation_matrix() const;

  Unitary2 operator*(const Unitary2& rhs) const;

  double max_entry_distance(const Unitary2& other) const;

 private:
  static Unitary2 from_raw(Complex a, Complex b) {
    Unitary2 u;
    u.a_ = a;
    u.b_ = b;
    return u;
  }

  Complex a_{1.0, 0.0};
  Complex b_{0.0, 0.0};
};

/// 2x2 Hermitian, unit-trace, positive-semidefinite state.
class DensityMatrix2 {
 public:
  DensityMatrix2();  // |0><0|

  /// Validates the state invariants (Hermitian 1e-12, trace 1e-12, eigenvalues >= -1e-10).
  explicit DensityMatrix2(const Mat2& m);
  /// Skips validation; pair with validate() when the source is not trusted.
  static DensityMatrix2 unchecked(const Mat2& m);
  static DensityMatrix2 from_bloch(const BlochVector& r);
  static DensityMatrix2 ground() { return DensityMatrix2{}; }
  static DensityMatrix2 excited();

  const Mat2& matrix() const { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }

  /// Throws InvalidArgument describing the first violated invariant.
  void validate() const;

 private:
  struct Unchecked {};
  DensityMatrix2(const Mat2& m, Unchecked) : m_(m) {}

  Mat2 m_;
};

struct ControlFrame {
  double detuning = 0.0;        // MHz
  double rabi_amplitude = 0.0;  // MHz
  double phase = 0.0;           // rad
  double off_resonance = 0.0;   // MHz

  /// Field vector h with H = h . S.
  Eigen::Vector3d field() const;
  void validate() const;
};

enum class ChannelKind {
  lab_dephasing,          // L = sigma_z
  lab_relaxation,         // L = |0><1|
  drive_axis_dephasing,   // L = cos(phase) sigma_x + sin(phase) sigma_y
  rotating_frame_relaxation,  // L in {sigma_x, sigma_y, sigma_z}, each at `rate`
};

/// Lindblad channel; `rate` is the coefficient multiplying the dissipator, in MHz.
struct RelaxationChannel {
  ChannelKind kind = ChannelKind::lab_dephasing;
  double rate = 0.0;

  void validate() const;
};

const char* to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& name);

/// Closed-form propagator exp(-i 2 pi H t) of a constant frame.
Unitary2 segment_propagator(const ControlFrame& frame, double duration);

/// Time-ordered product; the last element is applied last (leftmost).
Unitary2 compose(std::span<const Unitary2> segments);

/// Fixed-step RK4 integration of the Lindblad equation
///   d rho/dt = -i 2 pi [H, rho] + sum_k rate_k (L rho L^dag - 1/2 {L^dag L, rho}).
DensityMatrix2 evolve_density(const DensityMatrix2& rho, const ControlFrame& frame, double duration,
                              std::span<const RelaxationChannel> channels, double dt);

/// Step size used when callers do not choose one: 50 steps per fastest cycle, at least 10 steps.
double default_lindblad_step(const ControlFrame& frame, double duration);

BlochVector bloch_vector(const DensityMatrix2& rho);

/// Affine map r -> linear * r + offset acting on Bloch vectors.
struct BlochMap {
  Eigen::Matrix3d linear = Eigen::Matrix3d::Identity();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();

  BlochVector apply(const BlochVector& r) const { return linear * r + offset; }
  /// `then` applied after *this.
  BlochMap followed_by(const BlochMap& then) const;
};

/// Exact solution of the Bloch equations for one constant segment with channels.
BlochMap segment_bloch_map(const ControlFrame& frame, double duration,
                           std::span<const RelaxationChannel> channels);

}  // namespace dcg

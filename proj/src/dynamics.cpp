#include "dcg/dynamics.hpp"

#include "dcg/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace dcg {

namespace {

constexpr Complex kI{0.0, 1.0};

Mat2 pauli(int k) {
  Mat2 m;
  switch (k) {
    case 0: m << 0, 1, 1, 0; break;
    case 1: m << 0, -kI, kI, 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

bool all_finite(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// Collapse operators of one channel for a frame with the given drive phase.
std::vector<Mat2> collapse_operators(const RelaxationChannel& ch, double phase) {
  switch (ch.kind) {
    case ChannelKind::lab_dephasing:
      return {pauli(2)};
    case ChannelKind::lab_relaxation: {
      Mat2 lower;
      lower << 0, 1, 0, 0;
      return {lower};
    }
    case ChannelKind::drive_axis_dephasing:
      return {std::cos(phase) * pauli(0) + std::sin(phase) * pauli(1)};
    case ChannelKind::rotating_frame_relaxation:
      return {pauli(0), pauli(1), pauli(2)};
  }
  return {};
}

Mat2 hamiltonian(const ControlFrame& frame) {
  const Eigen::Vector3d h = frame.field();
  return 0.5 * (h.x() * pauli(0) + h.y() * pauli(1) + h.z() * pauli(2));
}

}  // namespace

// ---------------------------------------------------------------------------
// Unitary2

Unitary2 Unitary2::from_cayley_klein(Complex a, Complex b) {
  const double norm = std::sqrt(std::norm(a) + std::norm(b));
  if (!std::isfinite(norm) || norm == 0.0) {
    throw InvalidArgument("Unitary2: Cayley-Klein parameters must be finite and nonzero");
  }
  return from_raw(a / norm, b / norm);
}

Unitary2 Unitary2::from_matrix(const Mat2& m) {
  constexpr double tol = 1e-9;
  if (!m.allFinite()) throw InvalidArgument("Unitary2: non-finite entries");
  const double unitarity = (m.adjoint() * m - Mat2::Identity()).cwiseAbs().maxCoeff();
  if (unitarity > tol) {
    throw InvalidArgument("Unitary2: matrix is not unitary (max |U^dag U - I| = " +
                          std::to_string(unitarity) + ")");
  }
  if (std::abs(m.determinant() - 1.0) > tol) {
    throw InvalidArgument("Unitary2: determinant differs from 1");
  }
  return from_cayley_klein(m(0, 0), m(1, 0));
}

Unitary2 Unitary2::rotation(double angle, const Eigen::Vector3d& axis) {
  const double n = axis.norm();
  if (!std::isfinite(angle) || !std::isfinite(n) || n == 0.0) {
    throw InvalidArgument("Unitary2::rotation: need finite angle and nonzero axis");
  }
  const Eigen::Vector3d u = axis / n;
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  // w I - i (x sx + y sy + z sz)  ->  a = w - i z, b = y - i x
  return from_raw(Complex(c, -s * u.z()), Complex(s * u.y(), -s * u.x()));
}

Mat2 Unitary2::matrix() const {
  Mat2 m;
  m << a_, -std::conj(b_), b_, std::conj(a_);
  return m;
}

Unitary2 Unitary2::canonical() const {
  auto negative = [](Complex z) {
    if (z.real() != 0.0) return z.real() < 0.0;
    return z.imag() < 0.0;
  };
  const bool flip = (a_ != Complex{}) ? negative(a_) : negative(b_);
  return flip ? from_raw(-a_, -b_) : *this;
}

Eigen::Matrix3d Unitary2::rotation_matrix() const {
  const double w = a_.real();
  const double z = -a_.imag();
  const double y = b_.real();
  const double x = -b_.imag();
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

Unitary2 Unitary2::operator*(const Unitary2& rhs) const {
  const Complex a = a_ * rhs.a_ - std::conj(b_) * rhs.b_;
  const Complex b = b_ * rhs.a_ + std::conj(a_) * rhs.b_;
  return from_raw(a, b);
}

double Unitary2::max_entry_distance(const Unitary2& other) const {
  return (matrix() - other.matrix()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// DensityMatrix2

DensityMatrix2::DensityMatrix2() : m_(Mat2::Zero()) { m_(0, 0) = 1.0; }

DensityMatrix2::DensityMatrix2(const Mat2& m) : m_(m) { validate(); }

DensityMatrix2 DensityMatrix2::unchecked(const Mat2& m) { return DensityMatrix2(m, Unchecked{}); }

DensityMatrix2 DensityMatrix2::from_bloch(const BlochVector& r) {
  Mat2 m;
  m << 0.5 * (1.0 + r.z()), 0.5 * Complex(r.x(), -r.y()), 0.5 * Complex(r.x(), r.y()),
      0.5 * (1.0 - r.z());
  return DensityMatrix2(m);
}

DensityMatrix2 DensityMatrix2::excited() {
  Mat2 m = Mat2::Zero();
  m(1, 1) = 1.0;
  return DensityMatrix2(m);
}

void DensityMatrix2::validate() const {
  if (!m_.allFinite()) throw InvalidArgument("DensityMatrix2: non-finite entries");
  const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-12) {
    throw InvalidArgument("DensityMatrix2: not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  const Complex tr = m_.trace();
  if (std::abs(tr - 1.0) > 1e-12) {
    throw InvalidArgument("DensityMatrix2: trace " + std::to_string(tr.real()) + " != 1");
  }
  // For a Hermitian 2x2 with unit trace the eigenvalues are (1 +- |r|)/2.
  const double p = m_(0, 0).real();
  const double r2 = (2 * p - 1) * (2 * p - 1) + 4 * std::norm(m_(1, 0));
  const double lowest = 0.5 * (1.0 - std::sqrt(r2));
  if (lowest < -1e-10) {
    throw InvalidArgument("DensityMatrix2: negative eigenvalue " + std::to_string(lowest));
  }
}

// ---------------------------------------------------------------------------
// Frames and channels

Eigen::Vector3d ControlFrame::field() const {
  return {rabi_amplitude * std::cos(phase), rabi_amplitude * std::sin(phase),
          detuning + off_resonance};
}

void ControlFrame::validate() const {
  if (!all_finite({detuning, rabi_amplitude, phase, off_resonance})) {
    throw InvalidArgument("ControlFrame: non-finite field");
  }
  if (rabi_amplitude < 0.0) throw InvalidArgument("ControlFrame: rabi_amplitude must be >= 0");
}

void RelaxationChannel::validate() const {
  if (!std::isfinite(rate) || rate < 0.0) {
    throw InvalidArgument("RelaxationChannel: rate must be finite and >= 0");
  }
}

const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::lab_dephasing: return "lab_dephasing";
    case ChannelKind::lab_relaxation: return "lab_relaxation";
    case ChannelKind::drive_axis_dephasing: return "drive_axis_dephasing";
    case ChannelKind::rotating_frame_relaxation: return "rotating_frame_relaxation";
  }
  return "unknown";
}

ChannelKind channel_kind_from_string(const std::string& name) {
  for (auto kind : {ChannelKind::lab_dephasing, ChannelKind::lab_relaxation,
                    ChannelKind::drive_axis_dephasing, ChannelKind::rotating_frame_relaxation}) {
    if (name == to_string(kind)) return kind;
  }
  throw InvalidArgument("unknown relaxation channel kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Propagation

Unitary2 segment_propagator(const ControlFrame& frame, double duration) {
  frame.validate();
  if (!std::isfinite(duration) || duration < 0.0) {
    throw InvalidArgument("segment_propagator: duration must be finite and >= 0");
  }
  const Eigen::Vector3d h = frame.field();
  const double omega = h.norm();
  const double theta = kPi * omega * duration;
  // sin(theta) / omega without dividing by a vanishing field.
  const double s_over_omega = theta > 1e-8 ? std::sin(theta) / omega
                                           : kPi * duration * (1.0 - theta * theta / 6.0);
  const Eigen::Vector3d v = s_over_omega * h;
  return Unitary2::from_cayley_klein(Complex(std::cos(theta), -v.z()), Complex(v.y(), -v.x()));
}

Unitary2 compose(std::span<const Unitary2> segments) {
  if (segments.empty()) throw InvalidArgument("compose: empty segment list");
  Unitary2 total = segments.front();
  for (std::size_t i = 1; i < segments.size(); ++i) total = segments[i] * total;
  // Re-project onto SU(2) to keep rounding drift out of long products.
  return Unitary2::from_cayley_klein(total.a(), total.b());
}

double default_lindblad_step(const ControlFrame& frame, double duration) {
  const double fastest = std::max(frame.rabi_amplitude, std::abs(frame.detuning + frame.off_resonance));
  double dt = duration / 10.0;
  if (fastest > 0.0) dt = std::min(dt, 1.0 / (50.0 * fastest));
  return dt > 0.0 ? dt : 1.0;
}

DensityMatrix2 evolve_density(const DensityMatrix2& rho, const ControlFrame& frame, double duration,
                              std::span<const RelaxationChannel> channels, double dt) {
  frame.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("evolve_density: dt must be > 0");
  if (!std::isfinite(duration) || duration < 0.0) {
    throw InvalidArgument("evolve_density: duration must be >= 0");
  }
  for (const auto& ch : channels) ch.validate();
  if (duration == 0.0) return rho;

  const Mat2 minus_i_h = -kI * kTwoPi * hamiltonian(frame);
  struct Term {
    Mat2 l, l_dag, half_ldl;
    double rate;
  };
  std::vector<Term> terms;
  for (const auto& ch : channels) {
    for (const Mat2& l : collapse_operators(ch, frame.phase)) {
      terms.push_back({l, l.adjoint(), 0.5 * l.adjoint() * l, ch.rate});
    }
  }
  auto rhs = [&](const Mat2& r) {
    Mat2 d = minus_i_h * r + r * minus_i_h.adjoint();
    for (const auto& t : terms) {
      d += t.rate * (t.l * r * t.l_dag - t.half_ldl * r - r * t.half_ldl);
    }
    return d;
  };

  const auto steps = static_cast<long>(std::ceil(duration / dt - 1e-12));
  const double h = duration / static_cast<double>(steps);
  Mat2 r = rho.matrix();
  for (long s = 0; s < steps; ++s) {
    const Mat2 k1 = rhs(r);
    const Mat2 k2 = rhs(r + 0.5 * h * k1);
    const Mat2 k3 = rhs(r + 0.5 * h * k2);
    const Mat2 k4 = rhs(r + h * k3);
    r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Complex tr = r.trace();
    if (std::abs(tr - 1.0) > 1e-6) {
      std::ostringstream msg;
      msg << "evolve_density: trace drift " << std::abs(tr - 1.0) << " at step " << s;
      throw NumericalFailure(msg.str());
    }
    r /= tr.real();
    r = 0.5 * (r + r.adjoint()).eval();
  }
  return DensityMatrix2::unchecked(r);
}

BlochVector bloch_vector(const DensityMatrix2& rho) {
  const Mat2& m = rho.matrix();
  return {2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), (m(0, 0) - m(1, 1)).real()};
}

BlochMap BlochMap::followed_by(const BlochMap& then) const {
  return {then.linear * linear, then.linear * offset + then.offset};
}

BlochMap segment_bloch_map(const ControlFrame& frame, double duration,
                           std::span<const RelaxationChannel> channels) {
  const Eigen::Matrix3d rot = segment_propagator(frame, duration).rotation_matrix();
  bool isotropic_only = true;
  double isotropic_rate = 0.0;
  for (const auto& ch : channels) {
    ch.validate();
    if (ch.rate == 0.0) continue;
    if (ch.kind == ChannelKind::rotating_frame_relaxation) {
      isotropic_rate += ch.rate;
    } else {
      isotropic_only = false;
    }
  }
  // Isotropic damping commutes with every rotation.
  if (isotropic_only) {
    BlochMap map;
    map.linear = rot * std::exp(-4.0 * isotropic_rate * duration);
    return map;
  }

  // dr/dt = G r + c with G = 2 pi [h]_x + D
  const Eigen::Vector3d h = kTwoPi * frame.field();
  Eigen::Matrix4d gen = Eigen::Matrix4d::Zero();
  gen.topLeftCorner<3, 3>() << 0, -h.z(), h.y(), h.z(), 0, -h.x(), -h.y(), h.x(), 0;
  for (const auto& ch : channels) {
    const double g = ch.rate;
    auto dephase_about = [&](const Eigen::Vector3d& axis) {
      gen.topLeftCorner<3, 3>() -= 2.0 * g * (Eigen::Matrix3d::Identity() - axis * axis.transpose());
    };
    switch (ch.kind) {
      case ChannelKind::lab_dephasing: dephase_about(Eigen::Vector3d::UnitZ()); break;
      case ChannelKind::drive_axis_dephasing:
        dephase_about({std::cos(frame.phase), std::sin(frame.phase), 0.0});
        break;
      case ChannelKind::rotating_frame_relaxation:
        gen.topLeftCorner<3, 3>() -= 4.0 * g * Eigen::Matrix3d::Identity();
        break;
      case ChannelKind::lab_relaxation:
        gen(0, 0) -= 0.5 * g;
        gen(1, 1) -= 0.5 * g;
        gen(2, 2) -= g;
        gen(2, 3) += g;
        break;
    }
  }
  const Eigen::Matrix4d prop = (gen * duration).exp();
  BlochMap map;
  map.linear = prop.topLeftCorner<3, 3>();
  map.offset = prop.topRightCorner<3, 1>();
  return map;
}

}  // namespace dcg

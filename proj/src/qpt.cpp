#include "dcg/qpt.hpp"

#include "dcg/errors.hpp"
#include "dcg/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace dcg {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

}  // namespace

Mat2 pauli_basis(int k) {
  Mat2 m;
  switch (k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -kI, kI, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw InvalidArgument("pauli_basis: index must be 0..3");
  }
  return m;
}

DensityMatrix2 preparation_state(Preparation p) {
  switch (p) {
    case Preparation::zero: return DensityMatrix2::from_bloch({0, 0, 1});
    case Preparation::one: return DensityMatrix2::from_bloch({0, 0, -1});
    case Preparation::plus: return DensityMatrix2::from_bloch({1, 0, 0});
    case Preparation::plus_i: return DensityMatrix2::from_bloch({0, 1, 0});
  }
  throw InvalidArgument("preparation_state: unknown preparation");
}

std::vector<TomographyRecord> run_process(const Channel& channel, const TomographyOptions& opts) {
  if (!(opts.contrast > 0.0) || opts.contrast > 1.0) {
    throw InvalidArgument("run_process: contrast must be in (0, 1]");
  }
  if (opts.shots && *opts.shots < 1) throw InvalidArgument("run_process: shots must be >= 1");
  std::vector<TomographyRecord> records;
  for (int p = 0; p < 4; ++p) {
    const auto prep = static_cast<Preparation>(p);
    const DensityMatrix2 out = channel(preparation_state(prep));
    try {
      out.validate();
    } catch (const InvalidArgument& e) {
      throw ChannelContractError(std::string("run_process: channel output violates state invariants: ") +
                                 e.what());
    }
    const BlochVector r = bloch_vector(out);
    for (int a = 0; a < 3; ++a) {
      TomographyRecord rec;
      rec.preparation = prep;
      rec.axis = static_cast<Axis>(a);
      rec.shots = opts.shots;
      rec.contrast = opts.contrast;
      const double m = opts.contrast * std::clamp(r[a], -1.0, 1.0);
      if (opts.shots) {
        std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(3 * p + a)));
        std::binomial_distribution<std::uint64_t> bin(*opts.shots, 0.5 * (1.0 + m));
        const auto up = bin(rng);
        rec.mean = 2.0 * static_cast<double>(up) / static_cast<double>(*opts.shots) - 1.0;
      } else {
        rec.mean = m;
      }
      records.push_back(rec);
    }
  }
  return records;
}

// ---------------------------------------------------------------------------

Mat2 ChiMatrix::apply(const Mat2& rho) const {
  Mat2 out = Mat2::Zero();
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) {
      if (m_(m, n) == 0.0) continue;
      out += m_(m, n) * pauli_basis(m) * rho * pauli_basis(n).adjoint();
    }
  }
  return out;
}

double ChiMatrix::trace_preservation_error() const {
  Mat2 s = Mat2::Zero();
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) s += m_(m, n) * pauli_basis(n).adjoint() * pauli_basis(m);
  }
  return (s - Mat2::Identity()).cwiseAbs().maxCoeff();
}

double ChiMatrix::min_eigenvalue() const {
  const Eigen::Matrix4cd h = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(h);
  return eig.eigenvalues().minCoeff();
}

ChiMatrix ChiMatrix::projected_psd() const {
  const Eigen::Matrix4cd h = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(h);
  Eigen::Vector4d ev = eig.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0.0)) throw NumericalFailure("ChiMatrix::projected_psd: no positive spectrum left");
  ev /= tr;
  const Eigen::Matrix4cd v = eig.eigenvectors();
  return ChiMatrix(v * ev.cast<std::complex<double>>().asDiagonal() * v.adjoint());
}

ChiMatrix reconstruct_chi(const std::vector<TomographyRecord>& records, bool project_psd) {
  std::array<std::array<bool, 3>, 4> seen{};
  std::array<BlochVector, 4> out;
  for (auto& v : out) v.setZero();
  for (const auto& r : records) {
    const int p = static_cast<int>(r.preparation), a = static_cast<int>(r.axis);
    if (p < 0 || p > 3 || a < 0 || a > 2) throw InvalidArgument("reconstruct_chi: bad record index");
    if (!(r.contrast > 0.0)) throw InvalidArgument("reconstruct_chi: contrast must be > 0");
    if (std::abs(r.mean) > 1.0) throw InvalidArgument("reconstruct_chi: |mean| > 1");
    out[static_cast<std::size_t>(p)][a] = r.mean / r.contrast;
    seen[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)] = true;
  }
  for (const auto& row : seen) {
    for (bool s : row) {
      if (!s) throw InvalidArgument("reconstruct_chi: records must cover 4 preparations x 3 axes");
    }
  }
  auto rho = [&](int p) {
    const BlochVector& r = out[static_cast<std::size_t>(p)];
    Mat2 m;
    m << 0.5 * (1 + r.z()), 0.5 * std::complex<double>(r.x(), -r.y()),
        0.5 * std::complex<double>(r.x(), r.y()), 0.5 * (1 - r.z());
    return m;
  };
  // images of the Pauli basis
  std::array<Mat2, 4> img;
  img[0] = rho(0) + rho(1);
  img[3] = rho(0) - rho(1);
  img[1] = 2.0 * rho(2) - img[0];
  img[2] = 2.0 * rho(3) - img[0];

  Eigen::Matrix<std::complex<double>, 16, 16> sys;
  Eigen::Matrix<std::complex<double>, 16, 1> rhs;
  for (int j = 0; j < 4; ++j) {
    for (int m = 0; m < 4; ++m) {
      for (int n = 0; n < 4; ++n) {
        const Mat2 t = pauli_basis(m) * pauli_basis(j) * pauli_basis(n).adjoint();
        for (int e = 0; e < 4; ++e) sys(4 * j + e, 4 * m + n) = t(e / 2, e % 2);
      }
    }
    for (int e = 0; e < 4; ++e) rhs(4 * j + e) = img[static_cast<std::size_t>(j)](e / 2, e % 2);
  }
  const Eigen::Matrix<std::complex<double>, 16, 1> x = sys.fullPivLu().solve(rhs);
  Eigen::Matrix4cd chi;
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) chi(m, n) = x(4 * m + n);
  }
  ChiMatrix result(0.5 * (chi + chi.adjoint()));
  return project_psd ? result.projected_psd() : result;
}

// ---------------------------------------------------------------------------

Mat2 apply_linear(const Channel& channel, const Mat2& op) {
  // Decompose op on the preparation operators, which span all 2x2 matrices.
  const std::complex<double> c0 = op(0, 0), c3 = op(1, 1);
  const std::complex<double> x = 0.5 * (op(0, 1) + op(1, 0));
  const std::complex<double> y = 0.5 * kI * (op(0, 1) - op(1, 0));
  // op = a0 |0><0| + a1 |1><1| + x sx + y sy, with sx = 2|+><+| - I, sy = 2|+i><+i| - I
  const Mat2 r0 = channel(preparation_state(Preparation::zero)).matrix();
  const Mat2 r1 = channel(preparation_state(Preparation::one)).matrix();
  const Mat2 rp = channel(preparation_state(Preparation::plus)).matrix();
  const Mat2 ri = channel(preparation_state(Preparation::plus_i)).matrix();
  const Mat2 e_id = r0 + r1;
  return c0 * r0 + c3 * r1 + x * (2.0 * rp - e_id) + y * (2.0 * ri - e_id);
}

double average_gate_fidelity(const ChiMatrix& chi, const Unitary2& ideal) {
  const Mat2 u = ideal.matrix();
  double acc = 0.0;
  for (int j = 1; j <= 3; ++j) {
    const Mat2 s = pauli_basis(j);
    acc += (u * s * u.adjoint() * chi.apply(s)).trace().real();
  }
  return 0.5 + acc / 12.0;
}

double average_gate_fidelity(const Channel& channel, const Unitary2& ideal) {
  const Mat2 u = ideal.matrix();
  double acc = 0.0;
  for (int j = 1; j <= 3; ++j) {
    const Mat2 s = pauli_basis(j);
    acc += (u * s * u.adjoint() * apply_linear(channel, s)).trace().real();
  }
  return 0.5 + acc / 12.0;
}

Channel unitary_channel(const Unitary2& u) {
  const Mat2 m = u.matrix();
  return [m](const DensityMatrix2& rho) { return DensityMatrix2::unchecked(m * rho.matrix() * m.adjoint()); };
}

Channel depolarizing_channel(double p) {
  if (!(p >= 0.0 && p <= 4.0 / 3.0)) throw InvalidArgument("depolarizing_channel: p must be in [0, 4/3]");
  return [p](const DensityMatrix2& rho) {
    return DensityMatrix2::unchecked((1.0 - p) * rho.matrix() + 0.5 * p * Mat2::Identity());
  };
}

Channel bloch_map_channel(const BlochMap& map) {
  return [map](const DensityMatrix2& rho) {
    const BlochVector r = map.apply(bloch_vector(rho));
    Mat2 m;
    m << 0.5 * (1 + r.z()), 0.5 * std::complex<double>(r.x(), -r.y()),
        0.5 * std::complex<double>(r.x(), r.y()), 0.5 * (1 - r.z());
    return DensityMatrix2::unchecked(m);
  };
}

}  // namespace dcg

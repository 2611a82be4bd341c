#include "dcg/sequences.hpp"

#include "dcg/errors.hpp"

#include <cmath>
#include <numeric>

namespace dcg {

void Segment::validate() const {
  if (!std::isfinite(duration) || duration < 0.0) {
    throw InvalidArgument("Segment: duration must be finite and >= 0");
  }
  if (!std::isfinite(amplitude) || amplitude < 0.0) {
    throw InvalidArgument("Segment: amplitude must be finite and >= 0");
  }
  if (!std::isfinite(phase)) throw InvalidArgument("Segment: phase must be finite");
}

PulseSequence::PulseSequence(std::vector<Segment> segments, std::string label)
    : segments_(std::move(segments)), label_(std::move(label)) {
  for (const auto& s : segments_) s.validate();
}

double PulseSequence::total_duration() const {
  return std::accumulate(segments_.begin(), segments_.end(), 0.0,
                         [](double acc, const Segment& s) { return acc + s.duration; });
}

double PulseSequence::peak_amplitude() const {
  double peak = 0.0;
  for (const auto& s : segments_) peak = std::max(peak, s.amplitude);
  return peak;
}

PulseSequence PulseSequence::then(const PulseSequence& next) const {
  std::vector<Segment> all = segments_;
  all.insert(all.end(), next.segments_.begin(), next.segments_.end());
  return PulseSequence(std::move(all), label_ + "+" + next.label_);
}

PulseSequence PulseSequence::repeated(int times) const {
  if (times < 0) throw InvalidArgument("PulseSequence::repeated: negative count");
  std::vector<Segment> all;
  all.reserve(segments_.size() * static_cast<std::size_t>(times));
  for (int i = 0; i < times; ++i) all.insert(all.end(), segments_.begin(), segments_.end());
  return PulseSequence(std::move(all), label_ + "^" + std::to_string(times));
}

PulseSequence PulseSequence::relabeled(std::string label) const {
  PulseSequence copy = *this;
  copy.label_ = std::move(label);
  return copy;
}

void SupcodeParams::validate() const {
  if (!std::isfinite(omega1) || omega1 <= 0.0) {
    throw InvalidArgument("SupcodeParams: omega1 must be > 0");
  }
  if (!std::isfinite(target_angle) || !std::isfinite(target_phase)) {
    throw InvalidArgument("SupcodeParams: non-finite target");
  }
  for (double t : tau) {
    if (!std::isfinite(t) || t <= 0.0) throw InvalidArgument("SupcodeParams: every tau must be > 0");
  }
}

// ---------------------------------------------------------------------------

namespace {

void require_omega(double omega1, const char* who) {
  if (!std::isfinite(omega1) || omega1 <= 0.0) {
    throw InvalidArgument(std::string(who) + ": omega1 must be > 0");
  }
}

void require_tau_count(const SupcodeParams& p, std::size_t n, const char* who) {
  p.validate();
  if (p.tau.size() != n) {
    throw InvalidArgument(std::string(who) + ": expected " + std::to_string(n) + " durations");
  }
}

Segment pulse(double angle, double phase, double omega1) {
  return {angle / (kTwoPi * omega1), omega1, phase};
}

}  // namespace

PulseSequence build_plain(double angle, double phase, double omega1) {
  require_omega(omega1, "build_plain");
  if (!std::isfinite(angle) || angle < 0.0) throw InvalidArgument("build_plain: angle must be >= 0");
  return PulseSequence({pulse(angle, phase, omega1)}, "plain");
}

PulseSequence build_piecewise(std::span<const double> amplitude_pattern, std::span<const int> slot,
                              std::span<const double> tau, double omega1, double phase,
                              std::string label) {
  require_omega(omega1, "build_piecewise");
  if (amplitude_pattern.size() != slot.size()) {
    throw InvalidArgument("build_piecewise: pattern and slot map differ in length");
  }
  std::vector<Segment> segs;
  segs.reserve(slot.size());
  for (std::size_t i = 0; i < slot.size(); ++i) {
    if (slot[i] < 0 || static_cast<std::size_t>(slot[i]) >= tau.size()) {
      throw InvalidArgument("build_piecewise: slot index out of range");
    }
    segs.push_back({tau[slot[i]] / omega1, amplitude_pattern[i] * omega1, phase});
  }
  return PulseSequence(std::move(segs), std::move(label));
}

PulseSequence build_supcode5_halfpi(const SupcodeParams& p) {
  require_tau_count(p, 3, "build_supcode5_halfpi");
  static constexpr double amp[] = {0, 1, 0, 1, 0};
  static constexpr int slot[] = {0, 1, 2, 1, 0};
  return build_piecewise(amp, slot, p.tau, p.omega1, p.target_phase, "supcode5");
}

PulseSequence build_supcode5_pi(const SupcodeParams& halfpi) {
  const PulseSequence half = build_supcode5_halfpi(halfpi);
  return half.repeated(2).relabeled("supcode5_pi");
}

PulseSequence build_supcode3_pi(const SupcodeParams& p) {
  require_tau_count(p, 2, "build_supcode3_pi");
  static constexpr double amp[] = {1, 0.5, 1};
  static constexpr int slot[] = {0, 1, 0};
  return build_piecewise(amp, slot, p.tau, p.omega1, p.target_phase, "supcode3");
}

PulseSequence build_supcode9_pi(const SupcodeParams& p) {
  require_tau_count(p, 4, "build_supcode9_pi");
  static constexpr double amp[] = {0, 1, 0, 1, 0, 1, 0, 1, 0};
  static constexpr int slot[] = {3, 0, 1, 2, 3, 2, 1, 0, 3};
  PulseSequence seq = build_piecewise(amp, slot, p.tau, p.omega1, p.target_phase, "supcode9");
  std::vector<Segment> segs = seq.segments();
  segs.front().duration *= 0.5;
  segs.back().duration *= 0.5;
  return PulseSequence(std::move(segs), "supcode9");
}

PulseSequence build_cpmg(int n_pulses, double spacing, double omega1) {
  require_omega(omega1, "build_cpmg");
  if (n_pulses < 1) throw InvalidArgument("build_cpmg: need at least one pulse");
  if (!std::isfinite(spacing) || spacing < 0.0) throw InvalidArgument("build_cpmg: spacing must be >= 0");
  const Segment pi_y = pulse(kPi, kPi / 2, omega1);
  std::vector<Segment> segs;
  segs.reserve(2 * static_cast<std::size_t>(n_pulses) + 1);
  segs.push_back({spacing / 2, 0.0, 0.0});
  for (int k = 0; k < n_pulses; ++k) {
    segs.push_back(pi_y);
    segs.push_back({k + 1 < n_pulses ? spacing : spacing / 2, 0.0, 0.0});
  }
  return PulseSequence(std::move(segs), "cpmg" + std::to_string(n_pulses));
}

PulseSequence build_hahn_echo(double free_time, double omega1) {
  return build_cpmg(1, free_time, omega1).relabeled("hahn");
}

PulseSequence build_ramsey(double free_time, double detection_phase, double omega1) {
  require_omega(omega1, "build_ramsey");
  if (!std::isfinite(free_time) || free_time < 0.0) {
    throw InvalidArgument("build_ramsey: free_time must be >= 0");
  }
  return PulseSequence({pulse(kPi / 2, 0.0, omega1), {free_time, 0.0, 0.0},
                        pulse(kPi / 2, detection_phase, omega1)},
                       "ramsey");
}

PulseSequence build_spinlock(double lock_time, double omega1) {
  require_omega(omega1, "build_spinlock");
  if (!std::isfinite(lock_time) || lock_time < 0.0) {
    throw InvalidArgument("build_spinlock: lock_time must be >= 0");
  }
  return PulseSequence({pulse(kPi / 2, kPi / 2, omega1), {lock_time, omega1, 0.0},
                        pulse(kPi / 2, -kPi / 2, omega1)},
                       "spinlock");
}

// ---------------------------------------------------------------------------

ControlFrame segment_frame(const Segment& seg, double detuning, const PropagationOptions& opts) {
  ControlFrame f;
  f.rabi_amplitude = seg.amplitude * opts.amplitude_scale;
  f.phase = seg.phase;
  const bool driven = !seg.is_wait();
  f.detuning = (driven && opts.hard_pulses) ? 0.0 : detuning;
  f.off_resonance = (driven && opts.hard_pulses) ? 0.0 : opts.off_resonance;
  return f;
}

Unitary2 sequence_propagator(const PulseSequence& seq, double detuning, const PropagationOptions& opts) {
  Unitary2 total;
  for (const auto& s : seq.segments()) {
    total = segment_propagator(segment_frame(s, detuning, opts), s.duration) * total;
  }
  return Unitary2::from_cayley_klein(total.a(), total.b());
}

Unitary2 sequence_propagator(const PulseSequence& seq, std::span<const double> segment_detunings,
                             const PropagationOptions& opts) {
  if (segment_detunings.size() != seq.size()) {
    throw InvalidArgument("sequence_propagator: one detuning per segment required");
  }
  Unitary2 total;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Segment& s = seq.segments()[i];
    total = segment_propagator(segment_frame(s, segment_detunings[i], opts), s.duration) * total;
  }
  return Unitary2::from_cayley_klein(total.a(), total.b());
}

BlochMap sequence_bloch_map(const PulseSequence& seq, std::span<const double> segment_detunings,
                            std::span<const RelaxationChannel> channels,
                            const PropagationOptions& opts) {
  if (segment_detunings.size() != seq.size()) {
    throw InvalidArgument("sequence_bloch_map: one detuning per segment required");
  }
  BlochMap total;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Segment& s = seq.segments()[i];
    total = total.followed_by(
        segment_bloch_map(segment_frame(s, segment_detunings[i], opts), s.duration, channels));
  }
  return total;
}

BlochMap sequence_bloch_map(const PulseSequence& seq, double detuning,
                            std::span<const RelaxationChannel> channels,
                            const PropagationOptions& opts) {
  const std::vector<double> d(seq.size(), detuning);
  return sequence_bloch_map(seq, d, channels, opts);
}

Unitary2 target_rotation(double angle, double phase) {
  return Unitary2::rotation(angle, {std::cos(phase), std::sin(phase), 0.0});
}

}  // namespace dcg

#pragma once

// Piecewise-constant pulse sequences and the builders for every construction
// the toolkit uses: plain rectangles, SUPCODE (three/five/nine pieces), CPMG,
// Ramsey and spin-locking.

#include "dcg/dynamics.hpp"

#include <span>
#include <string>
#include <vector>

namespace dcg {

struct Segment {
  double duration = 0.0;   // us
  double amplitude = 0.0;  // MHz, 0 means free evolution
  double phase = 0.0;      // rad

  bool is_wait() const { return amplitude == 0.0; }
  void validate() const;
};

class PulseSequence {
 public:
  PulseSequence() = default;
  PulseSequence(std::vector<Segment> segments, std::string label);

  const std::vector<Segment>& segments() const { return segments_; }
  const std::string& label() const { return label_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }

  double total_duration() const;
  /// Largest drive amplitude in the sequence (0 for pure free evolution).
  double peak_amplitude() const;

  PulseSequence then(const PulseSequence& next) const;
  PulseSequence repeated(int times) const;
  PulseSequence relabeled(std::string label) const;

 private:
  std::vector<Segment> segments_;
  std::string label_;
};

/// Durations are in units of tau0 = 1/omega1.
struct SupcodeParams {
  std::vector<double> tau;
  double omega1 = 1.0;         // MHz
  double target_angle = 0.0;   // rad
  double target_phase = 0.0;   // rad

  void validate() const;
  double tau0() const { return 1.0 / omega1; }
};

/// Knobs applied when turning a sequence into propagators.
struct PropagationOptions {
  double off_resonance = 0.0;    // MHz, added to every segment
  double amplitude_scale = 1.0;  // multiplies every drive amplitude
  /// Driven segments ignore detuning (ideal hard pulses); waits still see it.
  bool hard_pulses = false;
};

// --- builders --------------------------------------------------------------

PulseSequence build_plain(double angle, double phase, double omega1);

/// Generic symmetric SUPCODE layout: segment i has amplitude amplitude_pattern[i] * omega1
/// and duration tau[slot[i]] / omega1.
PulseSequence build_piecewise(std::span<const double> amplitude_pattern, std::span<const int> slot,
                              std::span<const double> tau, double omega1, double phase,
                              std::string label);

/// wait(t1) - pulse(t2) - wait(t3) - pulse(t2) - wait(t1); tau = {t1, t2, t3}.
PulseSequence build_supcode5_halfpi(const SupcodeParams& params);
/// Two five-piece pi/2 gates back to back.
PulseSequence build_supcode5_pi(const SupcodeParams& halfpi_params);
/// pulse(ta, w1) - pulse(tb, w1/2) - pulse(ta, w1); tau = {ta, tb}.
PulseSequence build_supcode3_pi(const SupcodeParams& params);
/// Nine pieces, tau = {p1, v, p2, u}, layout u/2 p1 v p2 u p2 v p1 u/2.
PulseSequence build_supcode9_pi(const SupcodeParams& params);

/// wait(s/2) [pi_y wait(s)]^(N-1) pi_y wait(s/2), plain pi pulses at omega1.
/// Total free evolution is n_pulses * spacing.
PulseSequence build_cpmg(int n_pulses, double spacing, double omega1);
PulseSequence build_hahn_echo(double free_time, double omega1);

/// pi/2(x) - wait(t) - pi/2(detection_phase).
PulseSequence build_ramsey(double free_time, double detection_phase, double omega1);
/// pi/2(y) - drive along x for lock_time - pi/2(-y).
PulseSequence build_spinlock(double lock_time, double omega1);

// --- propagation -------------------------------------------------------------

/// Frame seen by one segment for a given detuning.
ControlFrame segment_frame(const Segment& seg, double detuning, const PropagationOptions& opts);

Unitary2 sequence_propagator(const PulseSequence& seq, double detuning,
                             const PropagationOptions& opts = {});
/// One detuning value per segment (e.g. segment means of a fluctuating path).
Unitary2 sequence_propagator(const PulseSequence& seq, std::span<const double> segment_detunings,
                             const PropagationOptions& opts = {});

BlochMap sequence_bloch_map(const PulseSequence& seq, std::span<const double> segment_detunings,
                            std::span<const RelaxationChannel> channels,
                            const PropagationOptions& opts = {});
BlochMap sequence_bloch_map(const PulseSequence& seq, double detuning,
                            std::span<const RelaxationChannel> channels,
                            const PropagationOptions& opts = {});

/// The rotation a builder is meant to realise: exp(-i angle/2 (cos phase sx + sin phase sy)).
Unitary2 target_rotation(double angle, double phase);

}  // namespace dcg

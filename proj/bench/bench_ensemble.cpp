// Serial reference loop vs the OpenMP ensemble on a CPMG + OU workload.

#include "dcg/harness.hpp"
#include "dcg/noise.hpp"
#include "dcg/parallel.hpp"
#include "dcg/sequences.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace dcg;

struct Workload {
  NoiseModel model;
  std::vector<PulseSequence> seqs;
  std::vector<RelaxationChannel> channels;
  PropagationOptions opts;
  SampleFn fn;

  explicit Workload(int n_pulses) {
    model.add(StaticGaussianDetuning{sigma_from_t2star(reference::kT2Star)});
    model.add(OrnsteinUhlenbeckDetuning{0.0047, 10.0});
    channels.push_back({ChannelKind::rotating_frame_relaxation, 1.0 / (4 * reference::kT1rho)});
    opts.hard_pulses = true;
    for (double t : log_grid(20.0, 2000.0, 8)) seqs.push_back(build_cpmg(n_pulses, t / n_pulses, 10.0));
    fn = [this](std::size_t, std::mt19937_64& rng, std::span<double> row) {
      const double d0 = draw_static(model, rng).detuning;
      for (std::size_t j = 0; j < seqs.size(); ++j) {
        const auto det = sample_segment_detunings(seqs[j], model, d0, rng);
        const BlochVector r = sequence_bloch_map(seqs[j], det, channels, opts).apply(BlochVector(0, -1, 0));
        row[2 * j] = r.x();
        row[2 * j + 1] = r.y();
      }
    };
  }
};

void BM_EnsembleSerial(benchmark::State& state) {
  const Workload w(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_ensemble_serial(512, 2 * w.seqs.size(), 7, w.fn));
  }
  state.SetItemsProcessed(state.iterations() * 512);
}

void BM_EnsembleParallel(benchmark::State& state) {
  const Workload w(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_ensemble(512, 2 * w.seqs.size(), 7, w.fn, Execution::parallel));
  }
  state.SetItemsProcessed(state.iterations() * 512);
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EnsembleParallel)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

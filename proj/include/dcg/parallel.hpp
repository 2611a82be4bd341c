#pragma once

// Monte Carlo ensemble kernel. Every sample gets its own generator seeded from
// (base seed, sample index), and reductions run serially in index order, so the
// OpenMP and serial paths produce bit-identical results.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace dcg {

enum class Execution { serial, parallel };

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Fills `row` (length = ensemble width) for sample `index`.
using SampleFn = std::function<void(std::size_t index, std::mt19937_64& rng, std::span<double> row)>;

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// SplitMix64 mix of (base, index); stable across platforms and thread counts.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Thread cap: DCG_FORGE_THREADS if set and positive, otherwise the OpenMP default.
int thread_limit();

SampleMatrix sample_ensemble(std::size_t n_samples, std::size_t width, std::uint64_t seed,
                             const SampleFn& fn, Execution exec = Execution::parallel);

/// The original single-threaded loop, kept as the reference for tests and benchmarks.
SampleMatrix sample_ensemble_serial(std::size_t n_samples, std::size_t width, std::uint64_t seed,
                                    const SampleFn& fn);

std::vector<Estimate> column_estimates(const SampleMatrix& samples);

}  // namespace dcg

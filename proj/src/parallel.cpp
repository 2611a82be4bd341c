#include "dcg/parallel.hpp"

#include "dcg/errors.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>

namespace dcg {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int thread_limit() {
  if (const char* env = std::getenv("DCG_FORGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

SampleMatrix sample_ensemble_serial(std::size_t n_samples, std::size_t width, std::uint64_t seed,
                                    const SampleFn& fn) {
  SampleMatrix out(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    fn(i, rng, std::span<double>(out.row(static_cast<Eigen::Index>(i)).data(), width));
  }
  return out;
}

SampleMatrix sample_ensemble(std::size_t n_samples, std::size_t width, std::uint64_t seed,
                             const SampleFn& fn, Execution exec) {
  if (exec == Execution::serial) return sample_ensemble_serial(n_samples, width, seed, fn);

  SampleMatrix out(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(width));
  std::exception_ptr failure;
  const auto n = static_cast<long long>(n_samples);
#pragma omp parallel for schedule(dynamic, 16) num_threads(thread_limit())
  for (long long i = 0; i < n; ++i) {
    try {
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      fn(static_cast<std::size_t>(i), rng, std::span<double>(out.row(i).data(), width));
    } catch (...) {
#pragma omp critical(dcg_ensemble_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Estimate> column_estimates(const SampleMatrix& samples) {
  const auto n = samples.rows();
  if (n < 1) throw InvalidArgument("column_estimates: empty sample matrix");
  std::vector<Estimate> est(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) mean += samples(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double d = samples(r, c) - mean;
      ss += d * d;
    }
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    est[static_cast<std::size_t>(c)] = {mean, std::sqrt(var / static_cast<double>(n)),
                                        static_cast<std::size_t>(n)};
  }
  return est;
}

}  // namespace dcg

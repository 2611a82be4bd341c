#pragma once

#include <stdexcept>
#include <string>

namespace dcg {

// Error taxonomy shared by all modules. Everything derives from std::runtime_error
// except InvalidArgument, so callers can catch precondition violations separately.

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scaling fit on a grid where the gate is exact (some infidelity <= 0).
class DegenerateFit : public FitFailure {
 public:
  using FitFailure::FitFailure;
};

class NoSolution : public std::runtime_error {
 public:
  NoSolution(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChannelContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace dcg

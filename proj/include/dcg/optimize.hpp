#pragma once

// Small derivative-free and least-squares optimisers shared by the solver and the fits.
// Both keep a history of the best objective value after each iteration; it is
// non-increasing by construction.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace dcg {

using ScalarObjective = std::function<double(const Eigen::VectorXd&)>;
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;  // objective, or 0.5 |r|^2 for least squares
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

struct NelderMeadOptions {
  int max_iterations = 4000;
  double initial_step = 0.1;
  double f_tol = 1e-15;  // spread of simplex values
  double x_tol = 1e-12;  // simplex diameter
};

OptimizeResult nelder_mead(const ScalarObjective& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& opts = {});

struct LevenbergMarquardtOptions {
  int max_iterations = 200;
  double lambda0 = 1e-3;
  double step_tol = 1e-14;      // relative parameter change
  double gradient_tol = 1e-16;  // max |J^T r|
  double cost_tol = 0.0;        // stop once 0.5 |r|^2 falls below this
  double fd_step = 1e-7;        // relative central-difference step
};

struct LeastSquaresResult : OptimizeResult {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
};

Eigen::MatrixXd numeric_jacobian(const ResidualFunction& r, const Eigen::VectorXd& x, double rel_step);

LeastSquaresResult levenberg_marquardt(const ResidualFunction& r, const Eigen::VectorXd& x0,
                                       const LevenbergMarquardtOptions& opts = {});

}  // namespace dcg

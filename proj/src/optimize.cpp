#include "dcg/optimize.hpp"

#include "dcg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcg {

OptimizeResult nelder_mead(const ScalarObjective& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  if (n == 0) throw InvalidArgument("nelder_mead: empty parameter vector");
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double step = x0[i] != 0.0 ? opts.initial_step * std::abs(x0[i]) : opts.initial_step;
    pts[static_cast<std::size_t>(i + 1)][i] += step;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  OptimizeResult res;
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    res.history.push_back(vals[best]);
    res.iterations = it;

    double diameter = 0.0;
    for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).cwiseAbs().maxCoeff());
    if (vals[worst] - vals[best] <= opts.f_tol && diameter <= opts.x_tol) {
      res.converged = true;
      break;
    }
    if (diameter <= opts.x_tol * 1e-3) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < vals[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded, vals[worst] = fe;
      } else {
        pts[worst] = reflected, vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected, vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = contracted, vals[worst] = fc;
      continue;
    }
    // shrink towards the best vertex
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  res.x = pts[best];
  res.value = vals[best];
  if (res.history.empty() || res.history.back() > res.value) res.history.push_back(res.value);
  return res;
}

Eigen::MatrixXd numeric_jacobian(const ResidualFunction& r, const Eigen::VectorXd& x, double rel_step) {
  const Eigen::VectorXd r0 = r(x);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (r(xp) - r(xm)) / (2.0 * h);
  }
  return jac;
}

LeastSquaresResult levenberg_marquardt(const ResidualFunction& r, const Eigen::VectorXd& x0,
                                       const LevenbergMarquardtOptions& opts) {
  LeastSquaresResult res;
  res.x = x0;
  res.residual = r(x0);
  if (!res.residual.allFinite()) throw NumericalFailure("levenberg_marquardt: non-finite initial residual");
  double cost = 0.5 * res.residual.squaredNorm();
  double lambda = opts.lambda0;
  res.history.push_back(cost);

  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;
    if (cost <= opts.cost_tol) {
      res.converged = true;
      break;
    }
    res.jacobian = numeric_jacobian(r, res.x, opts.fd_step);
    const Eigen::MatrixXd jtj = res.jacobian.transpose() * res.jacobian;
    const Eigen::VectorXd g = res.jacobian.transpose() * res.residual;
    if (g.cwiseAbs().maxCoeff() <= opts.gradient_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-30);

    bool accepted = false;
    double step_norm = 0.0;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * scale;
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = res.x + step;
      const Eigen::VectorXd rt = r(trial);
      const double ct = rt.allFinite() ? 0.5 * rt.squaredNorm() : std::numeric_limits<double>::infinity();
      if (ct < cost) {
        step_norm = step.norm() / std::max(1e-30, res.x.norm());
        res.x = trial;
        res.residual = rt;
        cost = ct;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 4.0;
      }
    }
    res.history.push_back(cost);
    if (!accepted || step_norm <= opts.step_tol) {
      res.converged = true;
      break;
    }
  }
  res.value = cost;
  res.jacobian = numeric_jacobian(r, res.x, opts.fd_step);
  return res;
}

}  // namespace dcg

#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace parity_gate {

/// Returns f(x) and writes the gradient into grad.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int max_iters = 2000;
  int history = 10;
  double grad_tolerance = 1e-9;       // infinity norm
  double rel_cost_tolerance = 1e-12;  // |f_k - f_{k+1}| <= tol * max(|f_k|, tiny)
  int max_linesearch = 40;
  double c1 = 1e-4;
  double c2 = 0.9;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string reason;
  std::vector<double> f_history;  // cost after every accepted iteration
};

/// Limited-memory BFGS with a strong-Wolfe line search (cubic interpolation).
LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options = {});

}  // namespace parity_gate

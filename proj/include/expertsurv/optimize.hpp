#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace expertsurv::optim {

/// Objective to minimize. May return +inf (or NaN) for infeasible points.
using Objective = std::function<double(std::span<const double>)>;

struct Result {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // BFGS only
  std::string message;
};

struct NelderMeadOptions {
  int max_iterations = 20000;
  /// Converged when the simplex spread in f is below f_abs_tol + f_rel_tol*|f|
  /// and its diameter below x_tol*(1+|x|).
  double f_abs_tol = 1e-22;
  double f_rel_tol = 1e-10;
  double x_tol = 1e-9;
  double initial_step = 0.25;
  int restarts = 3;
};

Result nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options = {});

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-6;
  int polish_steps = 25;
};

/// Quasi-Newton minimization with numerical gradients, finished by Newton
/// steps on a finite-difference Hessian. `converged` means the Euclidean
/// gradient norm dropped below `gradient_tol`.
Result bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options = {});

/// Ridders-extrapolated central differences.
std::vector<double> gradient(const Objective& f, std::span<const double> x);

/// Symmetric Hessian from central differences of `gradient`.
Eigen::MatrixXd hessian(const Objective& f, std::span<const double> x);

}  // namespace expertsurv::optim

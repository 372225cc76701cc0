#pragma once

#include <Eigen/Core>
#include <functional>

namespace babo::optim {

/// Objective for minimization. Must return f(x); when `grad` is non-null it
/// must also fill the gradient.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BoxOptions {
  int max_iterations = 200;
  int memory = 8;
  double projected_gradient_tol = 1e-8;
  double relative_f_tol = 1e-12;
};

struct BoxResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;  ///< f(project(x0))
  int iterations = 0;
  int evaluations = 0;
};

/// Projected limited-memory BFGS over the box [lower, upper].
///
/// The search direction comes from the usual two-loop recursion restricted to
/// the free variables (those not pinned at a bound by the gradient); the step
/// is a backtracking Armijo search along the projected path. The returned
/// value never exceeds f(project(x0)).
BoxResult minimize_box(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, const BoxOptions& options = {});

/// Central-difference gradient that stays inside the box.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper, double step = 1e-6);

}  // namespace babo::optim

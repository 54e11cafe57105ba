#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace vcr {

// Smooth NLP in already-normalised variables:
//   min f(x)  s.t.  c_eq(x) = 0,  c_in(x) >= 0.
// eval returns false where the model is undefined; the line search backs off.
struct NlpProblem {
  int n = 0, n_eq = 0, n_in = 0;
  std::function<bool(const Eigen::VectorXd&, double&, Eigen::VectorXd&, Eigen::VectorXd&)> eval;
  Eigen::VectorXd max_step;  // per-variable trust box on the step
};

struct SqpOptions {
  int max_iter = 80;
  double tol_step = 1e-7;
  double tol_con = 1e-7;
  double fd_rel = 1e-6;
  double elastic_weight = 1e3;
  // Optional per-iteration trace: iteration, x, f, violation, step length.
  std::function<void(int, const Eigen::VectorXd&, double, double, double)> trace;
};

struct SqpResult {
  Eigen::VectorXd x;
  double f = 0;
  Eigen::VectorXd c_eq, c_in;
  Eigen::VectorXd y_eq, y_in;
  double violation = 0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

// SQP with damped BFGS, l1 merit line search and an elastic QP subproblem.
SqpResult sqp_solve(const NlpProblem& prob, const Eigen::VectorXd& x0, const SqpOptions& opt = {});

}  // namespace vcr

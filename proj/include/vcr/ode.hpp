#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace vcr {

struct OdeOptions {
  double rtol = 1e-6;
  Eigen::VectorXd atol;  // per component; empty means rtol * 1e-3
  double h0 = 0;         // initial step, 0 picks one
  double h_max = 0;      // 0 means unbounded
  double h_min = 1e-10;
  int max_steps = 200000;
  int max_rejects = 60;  // consecutive rejections before giving up
  // Fixed steps of h0 (the last one shortened) without error control; results
  // then depend smoothly on the initial state, which finite differences need.
  bool adaptive = true;
};

struct OdeStats {
  int accepted = 0, rejected = 0, failed_evals = 0, rhs_evals = 0;
  double last_h = 0;
};

// Right-hand side; throws on states where the model is undefined, which the
// integrator treats as a rejected step.
using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// Dormand-Prince 5(4) from t0 to t1. Values at the requested output times
// (ascending, inside [t0, t1]) come from cubic Hermite interpolation over the
// accepted steps. Returns the state at t1.
Eigen::VectorXd integrate(const OdeRhs& f, double t0, const Eigen::VectorXd& x0, double t1,
                          const OdeOptions& opt, const std::vector<double>& t_out = {},
                          std::vector<Eigen::VectorXd>* x_out = nullptr, OdeStats* stats = nullptr);

// Cubic Hermite value at t in [ta, tb].
Eigen::VectorXd hermite(double ta, const Eigen::VectorXd& xa, const Eigen::VectorXd& fa, double tb,
                        const Eigen::VectorXd& xb, const Eigen::VectorXd& fb, double t);

}  // namespace vcr

#pragma once

#include <Eigen/Dense>

namespace vcr {

// min 0.5 x'Hx + g'x  s.t.  Aeq x = beq,  Ain x >= bin.  H must be positive definite.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;
};

enum class QpStatus { optimal, infeasible, max_iter };

const char* to_string(QpStatus s);

struct QpResult {
  QpStatus status = QpStatus::infeasible;
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;  // multipliers, H x + g = Aeq' y_eq + Ain' y_in
  Eigen::VectorXd y_in;  // >= 0
  double objective = 0;
  int active_set_size = 0;
  int iterations = 0;
};

// Dual active-set method (Goldfarb-Idnani) with Givens-updated factors.
QpResult solve_qp(const QpProblem& qp, int max_iter = 500);

// Max KKT residual (stationarity, primal, dual, complementarity), for checks.
double kkt_residual(const QpProblem& qp, const QpResult& r);

}  // namespace vcr

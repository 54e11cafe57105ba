#include "vcr/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "vcr/errors.hpp"

namespace vcr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iter: return "max_iter";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Append d to the active factorisation; J is rotated so d(iq+1:) = 0.
bool add_constraint(MatrixXd& R, MatrixXd& J, VectorXd& d, int& iq, double& R_norm) {
  const int n = static_cast<int>(J.rows());
  for (int j = n - 1; j >= iq + 1; --j) {
    double cc = d(j - 1), ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j - 1), t2 = J(k, j);
      J(k, j - 1) = t1 * cc + t2 * ss;
      J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
    }
  }
  ++iq;
  R.col(iq - 1).head(iq) = d.head(iq);
  if (std::abs(d(iq - 1)) <= kEps * R_norm) return false;
  R_norm = std::max(R_norm, std::abs(d(iq - 1)));
  return true;
}

void delete_constraint(MatrixXd& R, MatrixXd& J, std::vector<int>& A, VectorXd& u, int p,
                       int& iq, int l) {
  const int n = static_cast<int>(J.rows());
  int qq = -1;
  for (int i = p; i < iq; ++i)
    if (A[i] == l) {
      qq = i;
      break;
    }
  if (qq < 0) return;
  for (int i = qq; i < iq - 1; ++i) {
    A[i] = A[i + 1];
    u(i) = u(i + 1);
    R.col(i) = R.col(i + 1);
  }
  A[iq - 1] = A[iq];
  u(iq - 1) = u(iq);
  A[iq] = 0;
  u(iq) = 0.0;
  R.col(iq - 1).head(iq).setZero();
  --iq;
  if (iq == 0) return;
  for (int j = qq; j < iq; ++j) {
    double cc = R(j, j), ss = R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq; ++k) {
      const double t1 = R(j, k), t2 = R(j + 1, k);
      R(j, k) = t1 * cc + t2 * ss;
      R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j), t2 = J(k, j + 1);
      J(k, j) = t1 * cc + t2 * ss;
      J(k, j + 1) = xny * (J(k, j) + t1) - t2;
    }
  }
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, int max_iter) {
  const int n = static_cast<int>(qp.H.rows());
  const int p = static_cast<int>(qp.Aeq.rows());
  const int m = static_cast<int>(qp.Ain.rows());
  if (qp.H.cols() != n || qp.g.size() != n || (p > 0 && qp.Aeq.cols() != n) ||
      (m > 0 && qp.Ain.cols() != n) || qp.beq.size() != p || qp.bin.size() != m)
    throw DomainError("solve_qp: inconsistent dimensions");

  QpResult res;
  res.y_eq = VectorXd::Zero(p);
  res.y_in = VectorXd::Zero(m);

  Eigen::LLT<MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success) throw DomainError("solve_qp: Hessian not positive definite");
  MatrixXd J = llt.matrixU().solve(MatrixXd::Identity(n, n));  // L^-T
  MatrixXd R = MatrixXd::Zero(n, n);
  double R_norm = 1.0;
  const double c1 = qp.H.trace();
  const double c2 = J.trace();

  VectorXd x = llt.solve(-qp.g);
  double f = 0.5 * qp.g.dot(x);

  std::vector<int> A(n + m + p + 1, 0), A_old(n + m + p + 1, 0);
  VectorXd u = VectorXd::Zero(n + p + 1), u_old(n + p + 1);
  VectorXd d(n), z(n), r(n), np(n), x_old(n);
  int iq = 0;

  auto compute_z_r = [&]() {
    d = J.transpose() * np;
    z = J.rightCols(n - iq) * d.tail(n - iq);
    if (iq > 0)
      r.head(iq) = R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));
  };

  // Equalities first, all kept active.
  for (int i = 0; i < p; ++i) {
    np = qp.Aeq.row(i).transpose();
    compute_z_r();
    double t2 = 0.0;
    const double zn = z.dot(np);
    if (std::abs(zn) > kEps) t2 = (qp.beq(i) - np.dot(x)) / zn;
    x += t2 * z;
    u(iq) = t2;
    if (iq > 0) u.head(iq) -= t2 * r.head(iq);
    f += 0.5 * t2 * t2 * zn;
    A[i] = -i - 1;
    if (!add_constraint(R, J, d, iq, R_norm)) {
      res.status = QpStatus::infeasible;
      res.x = x;
      return res;
    }
  }

  std::vector<int> iai(m);
  std::vector<char> iaexcl(m);
  for (int i = 0; i < m; ++i) iai[i] = i;

  VectorXd s(m);
  int ip = -1;
  int iter = 0;
  while (true) {
    // Step 1: choose a violated constraint.
    if (++iter > max_iter) {
      res.status = QpStatus::max_iter;
      break;
    }
    for (int i = p; i < iq; ++i) iai[A[i]] = -1;
    double psi = 0.0;
    for (int i = 0; i < m; ++i) {
      iaexcl[i] = 1;
      s(i) = qp.Ain.row(i).dot(x) - qp.bin(i);
      psi += std::min(0.0, s(i));
    }
    if (std::abs(psi) <= m * kEps * c1 * c2 * 100.0) {
      res.status = QpStatus::optimal;
      break;
    }
    u_old.head(iq) = u.head(iq);
    for (int i = 0; i < iq; ++i) A_old[i] = A[i];
    x_old = x;

    bool found = false;
    while (true) {  // pick the most violated admissible constraint
      double ss = 0.0;
      ip = -1;
      for (int i = 0; i < m; ++i)
        if (s(i) < ss && iai[i] != -1 && iaexcl[i]) {
          ss = s(i);
          ip = i;
        }
      if (ss >= 0.0) break;
      np = qp.Ain.row(ip).transpose();
      u(iq) = 0.0;
      A[iq] = ip;

      bool restart = false;
      while (true) {  // Step 2: primal/dual step
        if (++iter > max_iter) break;
        compute_z_r();
        double t1 = kInf;
        int l = -1;
        for (int k = p; k < iq; ++k)
          if (r(k) > 0.0 && u(k) / r(k) < t1) {
            t1 = u(k) / r(k);
            l = A[k];
          }
        const double zn = z.dot(np);
        const double t2 = std::abs(z.norm()) > kEps ? -s(ip) / zn : kInf;
        const double t = std::min(t1, t2);
        if (t >= kInf) {
          res.status = QpStatus::infeasible;
          res.x = x;
          res.iterations = iter;
          return res;
        }
        if (t2 >= kInf) {  // dual step only
          u.head(iq) -= t * r.head(iq);
          u(iq) += t;
          iai[l] = l;
          delete_constraint(R, J, A, u, p, iq, l);
          continue;
        }
        x += t * z;
        f += t * zn * (0.5 * t + u(iq));
        u.head(iq) -= t * r.head(iq);
        u(iq) += t;
        if (t == t2) {  // full step, constraint becomes active
          if (!add_constraint(R, J, d, iq, R_norm)) {
            // Linearly dependent: drop it and restore the previous point.
            iaexcl[ip] = 0;
            delete_constraint(R, J, A, u, p, iq, ip);
            for (int i = 0; i < m; ++i) iai[i] = i;
            for (int i = p; i < iq; ++i) {
              A[i] = A_old[i];
              u(i) = u_old(i);
              iai[A[i]] = -1;
            }
            x = x_old;
            restart = true;  // try another violated constraint
            break;
          }
          iai[ip] = -1;
          found = true;
          break;
        }
        // Partial step: a blocking constraint leaves the active set.
        iai[l] = l;
        delete_constraint(R, J, A, u, p, iq, l);
        s(ip) = qp.Ain.row(ip).dot(x) - qp.bin(ip);
      }
      if (found || !restart) break;
    }
    if (iter > max_iter) {
      res.status = QpStatus::max_iter;
      break;
    }
    if (!found) {
      // Remaining violated constraints are dependent on the active set.
      double viol = 0.0;
      for (int i = 0; i < m; ++i) viol = std::max(viol, qp.bin(i) - qp.Ain.row(i).dot(x));
      res.status = viol <= 1e-9 * std::max(1.0, qp.bin.cwiseAbs().maxCoeff())
                       ? QpStatus::optimal
                       : QpStatus::infeasible;
      break;
    }
  }

  res.x = x;
  res.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
  res.iterations = iter;
  for (int i = 0; i < iq; ++i) {
    if (A[i] < 0)
      res.y_eq(-A[i] - 1) = u(i);
    else
      res.y_in(A[i]) = u(i);
  }
  res.active_set_size = iq - p;
  return res;
}

double kkt_residual(const QpProblem& qp, const QpResult& r) {
  VectorXd grad = qp.H * r.x + qp.g;
  if (qp.Aeq.rows() > 0) grad -= qp.Aeq.transpose() * r.y_eq;
  if (qp.Ain.rows() > 0) grad -= qp.Ain.transpose() * r.y_in;
  double res = grad.cwiseAbs().maxCoeff();
  if (qp.Aeq.rows() > 0) res = std::max(res, (qp.Aeq * r.x - qp.beq).cwiseAbs().maxCoeff());
  for (int i = 0; i < qp.Ain.rows(); ++i) {
    const double si = qp.Ain.row(i).dot(r.x) - qp.bin(i);
    res = std::max(res, std::max(0.0, -si));
    res = std::max(res, std::max(0.0, -r.y_in(i)));
    res = std::max(res, std::abs(r.y_in(i) * si));
  }
  return res;
}

}  // namespace vcr

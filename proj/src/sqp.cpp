#include "vcr/sqp.hpp"

#include <cmath>

#include "vcr/qp.hpp"

namespace vcr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Point {
  VectorXd x;
  double f = 0;
  VectorXd ceq, cin;
  VectorXd gf;
  MatrixXd Jeq, Jin;
};

double violation(const VectorXd& ceq, const VectorXd& cin) {
  double v = ceq.cwiseAbs().sum();
  for (int i = 0; i < cin.size(); ++i) v += std::max(0.0, -cin(i));
  return v;
}

}  // namespace

SqpResult sqp_solve(const NlpProblem& prob, const VectorXd& x0, const SqpOptions& opt) {
  const int n = prob.n, ne = prob.n_eq, ni = prob.n_in;
  SqpResult res;
  int evals = 0;

  auto eval = [&](const VectorXd& x, double& f, VectorXd& ce, VectorXd& ci) {
    ++evals;
    ce.resize(ne);
    ci.resize(ni);
    bool ok = false;
    try {
      ok = prob.eval(x, f, ce, ci);
    } catch (const std::exception&) {
      ok = false;
    }
    return ok && std::isfinite(f) && ce.allFinite() && ci.allFinite();
  };

  // Forward differences, falling back to backward ones at the model edge.
  auto gradients = [&](Point& p) {
    p.gf.resize(n);
    p.Jeq.resize(ne, n);
    p.Jin.resize(ni, n);
    for (int j = 0; j < n; ++j) {
      const double h = opt.fd_rel * std::max(1.0, std::abs(p.x(j)));
      VectorXd xp = p.x;
      double f;
      VectorXd ce, ci;
      xp(j) += h;
      double sgn = 1.0;
      if (!eval(xp, f, ce, ci)) {
        xp(j) = p.x(j) - h;
        sgn = -1.0;
        if (!eval(xp, f, ce, ci)) return false;
      }
      p.gf(j) = sgn * (f - p.f) / h;
      p.Jeq.col(j) = sgn * (ce - p.ceq) / h;
      p.Jin.col(j) = sgn * (ci - p.cin) / h;
    }
    return true;
  };

  Point cur;
  cur.x = x0;
  if (!eval(cur.x, cur.f, cur.ceq, cur.cin) || !gradients(cur)) {
    res.x = x0;
    res.message = "model undefined at the starting point";
    res.evaluations = evals;
    return res;
  }

  MatrixXd B = MatrixXd::Identity(n, n);
  double mu = 1.0;
  VectorXd y_eq = VectorXd::Zero(ne), y_in = VectorXd::Zero(ni);
  const int nv = n + 2 * ne + ni;
  VectorXd max_step = prob.max_step.size() == n ? prob.max_step : VectorXd::Constant(n, 1.0);

  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (Eigen::LLT<MatrixXd>(B).info() != Eigen::Success) B = MatrixXd::Identity(n, n);
    // Elastic QP in [d, t_eq+, t_eq-, t_in]; ce, ci are the constant terms of
    // the linearised constraints.
    auto subproblem = [&](const VectorXd& ce, const VectorXd& ci) {
      QpProblem qp;
      qp.H = MatrixXd::Identity(nv, nv) * 1e-3;
      qp.H.topLeftCorner(n, n) = B;
      qp.g = VectorXd::Constant(nv, opt.elastic_weight);
      qp.g.head(n) = cur.gf;
      qp.Aeq = MatrixXd::Zero(ne, nv);
      qp.beq = -ce;
      if (ne > 0) {
        qp.Aeq.leftCols(n) = cur.Jeq;
        qp.Aeq.block(0, n, ne, ne) = -MatrixXd::Identity(ne, ne);
        qp.Aeq.block(0, n + ne, ne, ne) = MatrixXd::Identity(ne, ne);
      }
      const int nrow = ni + (nv - n) + 2 * n;
      qp.Ain = MatrixXd::Zero(nrow, nv);
      qp.bin = VectorXd::Zero(nrow);
      int r = 0;
      for (int i = 0; i < ni; ++i, ++r) {
        qp.Ain.row(r).head(n) = cur.Jin.row(i);
        qp.Ain(r, n + 2 * ne + i) = 1.0;
        qp.bin(r) = -ci(i);
      }
      for (int k = n; k < nv; ++k, ++r) qp.Ain(r, k) = 1.0;
      for (int j = 0; j < n; ++j) {
        qp.Ain(r, j) = 1.0;
        qp.bin(r++) = -max_step(j);
        qp.Ain(r, j) = -1.0;
        qp.bin(r++) = -max_step(j);
      }
      return solve_qp(qp);
    };
    QpResult q = subproblem(cur.ceq, cur.cin);
    if (q.status != QpStatus::optimal) {
      res.message = std::string("QP subproblem ") + to_string(q.status);
      break;
    }
    const VectorXd d = q.x.head(n);
    y_eq = q.y_eq;
    y_in = q.y_in.head(ni);

    const double viol0 = violation(cur.ceq, cur.cin);
    if (d.cwiseAbs().maxCoeff() <= opt.tol_step * (1.0 + cur.x.cwiseAbs().maxCoeff()) &&
        viol0 <= opt.tol_con) {
      res.converged = true;
      res.message = "converged";
      break;
    }

    double ymax = 0.0;
    if (ne > 0) ymax = std::max(ymax, y_eq.cwiseAbs().maxCoeff());
    if (ni > 0) ymax = std::max(ymax, y_in.cwiseAbs().maxCoeff());
    mu = std::max(mu, 1.5 * ymax);

    const VectorXd ceq_lin = cur.ceq + cur.Jeq * d;
    const VectorXd cin_lin = cur.cin + cur.Jin * d;
    const double D = cur.gf.dot(d) - mu * (viol0 - violation(ceq_lin, cin_lin));
    const double phi0 = cur.f + mu * viol0;

    Point nxt;
    double alpha = 1.0;
    bool accepted = false;
    auto acceptable = [&](const Point& pt, double a) {
      const double phi = pt.f + mu * violation(pt.ceq, pt.cin);
      return phi <= phi0 + 1e-4 * a * std::min(D, 0.0) && (D < 0 || phi < phi0);
    };
    nxt.x = cur.x + d;
    const bool full_ok = eval(nxt.x, nxt.f, nxt.ceq, nxt.cin);
    if (full_ok && acceptable(nxt, 1.0)) {
      accepted = true;
    } else if (full_ok && violation(nxt.ceq, nxt.cin) > viol0) {
      // Second-order corrections against constraint curvature.
      Point trial = nxt;
      VectorXd dt = d;
      for (int k = 0; k < 3 && !accepted; ++k) {
        const QpResult qc = subproblem(trial.ceq - cur.Jeq * dt, trial.cin - cur.Jin * dt);
        if (qc.status != QpStatus::optimal) break;
        dt = qc.x.head(n);
        trial.x = cur.x + dt;
        if (!eval(trial.x, trial.f, trial.ceq, trial.cin)) break;
        if (acceptable(trial, 1.0)) {
          nxt = trial;
          accepted = true;
        }
      }
    }
    for (int ls = 1; !accepted && ls < 30; ++ls) {
      alpha *= 0.5;
      nxt.x = cur.x + alpha * d;
      if (!eval(nxt.x, nxt.f, nxt.ceq, nxt.cin)) continue;
      accepted = acceptable(nxt, alpha);
    }
    if (!accepted) {
      res.converged = viol0 <= opt.tol_con;
      res.message = "line search stalled";
      break;
    }
    if (!gradients(nxt)) {
      res.message = "gradient undefined";
      cur = nxt;
      break;
    }

    // Damped BFGS on the Lagrangian gradient.
    const VectorXd s = nxt.x - cur.x;
    VectorXd gl_new = nxt.gf, gl_old = cur.gf;
    if (ne > 0) {
      gl_new -= nxt.Jeq.transpose() * y_eq;
      gl_old -= cur.Jeq.transpose() * y_eq;
    }
    if (ni > 0) {
      gl_new -= nxt.Jin.transpose() * y_in;
      gl_old -= cur.Jin.transpose() * y_in;
    }
    VectorXd y = gl_new - gl_old;
    const VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    double sy = s.dot(y);
    if (sBs > 0) {
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        y = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(y);
      }
      if (sy > 0) B += y * y.transpose() / sy - Bs * Bs.transpose() / sBs;
    }
    cur = nxt;
    if (opt.trace) opt.trace(it, cur.x, cur.f, violation(cur.ceq, cur.cin), alpha);

    if (s.cwiseAbs().maxCoeff() <= opt.tol_step * (1.0 + cur.x.cwiseAbs().maxCoeff()) &&
        violation(cur.ceq, cur.cin) <= opt.tol_con) {
      res.converged = true;
      res.message = "converged (step)";
      ++it;
      break;
    }
  }
  if (it >= opt.max_iter) res.message = "iteration limit";

  res.x = cur.x;
  res.f = cur.f;
  res.c_eq = cur.ceq;
  res.c_in = cur.cin;
  res.y_eq = y_eq;
  res.y_in = y_in;
  res.violation = violation(cur.ceq, cur.cin);
  res.iterations = it;
  res.evaluations = evals;
  return res;
}

}  // namespace vcr

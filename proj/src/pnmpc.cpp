#include "vcr/pnmpc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "vcr/errors.hpp"

namespace vcr {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

CycleModel::CycleModel(std::shared_ptr<const Fluid> fl, PlantParams p, Disturbances d,
                       SimOptions o)
    : fl_(std::move(fl)), p_(p), d_(d), o_(o) {
  if (!fl_) throw DomainError("cycle model: no fluid");
}

VectorXd CycleModel::step(const VectorXd& x, const Vector2d& u, double dt) const {
  return advance(*fl_, CondenserState::from(x), {u(0), u(1)}, d_, p_, dt, o_).vec();
}

Vector3d CycleModel::output(const VectorXd& x, const Vector2d& u) const {
  const CondenserState xs = CondenserState::from(x);
  const Coupling c = couple(*fl_, xs, {u(0), u(1)}, d_, p_);
  return {c.P_e, xs.P_c, c.evap.T_e_sec_out};
}

LinearModel::LinearModel(MatrixXd A, MatrixXd B, MatrixXd C, MatrixXd D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
  const auto n = A_.rows();
  if (A_.cols() != n || B_.rows() != n || B_.cols() != 2 || C_.rows() != 3 || C_.cols() != n ||
      D_.rows() != 3 || D_.cols() != 2)
    throw DomainError("linear model: inconsistent dimensions");
}

VectorXd LinearModel::step(const VectorXd& x, const Vector2d& u, double) const {
  return A_ * x + B_ * u;
}

Vector3d LinearModel::output(const VectorXd& x, const Vector2d& u) const {
  return C_ * x + D_ * u;
}

void PnmpcConfig::validate() const {
  if (N_p < 1 || N_c < 1 || N_c > N_p) throw ConfigError("pnmpc: need 1 <= N_c <= N_p");
  if (!(dt > 0)) throw ConfigError("pnmpc: dt must be positive");
  if (!Q.isApprox(Q.transpose()) || Q.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() < 0)
    throw ConfigError("pnmpc: Q must be symmetric positive semidefinite");
  if (!R.isApprox(R.transpose()) || R.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() <= 0)
    throw ConfigError("pnmpc: R must be symmetric positive definite");
  if ((du_max.array() <= 0).any()) throw ConfigError("pnmpc: du_max must be positive");
  if ((u_min.array() >= u_max.array()).any()) throw ConfigError("pnmpc: u_min must be below u_max");
  if ((phi_min.array() >= phi_max.array()).any())
    throw ConfigError("pnmpc: phi_min must be below phi_max");
  if (!(fd_delta > 0)) throw ConfigError("pnmpc: fd_delta must be positive");
  if ((u_scale.array() <= 0).any()) throw ConfigError("pnmpc: u_scale must be positive");
}

namespace {

// Input over interval k given the increment blocks.
Vector2d input_at(const Vector2d& u_past, const VectorXd& du, int k) {
  Vector2d u = u_past;
  const int nc = static_cast<int>(du.size() / 2);
  for (int l = 0; l <= std::min(k, nc - 1); ++l) u += du.segment<2>(2 * l);
  return u;
}

}  // namespace

MatrixXd predict(const PredictionModel& m, const VectorXd& x0, const Vector2d& u_past,
                 const VectorXd& du, int N_p, double dt) {
  MatrixXd y(N_p, 3);
  VectorXd x = x0;
  for (int k = 0; k < N_p; ++k) {
    const Vector2d u = du.size() ? input_at(u_past, du, k) : u_past;
    try {
      x = m.step(x, u, dt);
      y.row(k) = m.output(x, u).transpose();
    } catch (const ModelError& e) {
      throw NoConvergence(fmt::format("prediction step {}: {}", k + 1, e.what()));
    }
  }
  return y;
}

MatrixXd free_response(const PredictionModel& m, const VectorXd& x, const Vector2d& u_past,
                       int N_p, double dt) {
  return predict(m, x, u_past, VectorXd(), N_p, dt);
}

MatrixXd jacobian(const PredictionModel& m, const VectorXd& x, const Vector2d& u_past, int N_p,
                  int N_c, double dt, double delta, bool central, const MatrixXd* y_fr) {
  if (!(delta > 0)) throw DomainError("jacobian: perturbation must be positive");
  MatrixXd base;
  if (!central) base = y_fr ? *y_fr : free_response(m, x, u_past, N_p, dt);
  auto stack = [&](const MatrixXd& y) {
    VectorXd v(3 * N_p);
    for (int k = 0; k < N_p; ++k) v.segment<3>(3 * k) = y.row(k).transpose();
    return v;
  };
  MatrixXd G(3 * N_p, 2 * N_c);
  for (int j = 0; j < 2 * N_c; ++j) {
    VectorXd du = VectorXd::Zero(2 * N_c);
    du(j) = delta;
    const VectorXd yp = stack(predict(m, x, u_past, du, N_p, dt));
    if (central) {
      du(j) = -delta;
      G.col(j) = (yp - stack(predict(m, x, u_past, du, N_p, dt))) / (2 * delta);
    } else {
      G.col(j) = (yp - stack(base)) / delta;
    }
  }
  return G;
}

Vector3d output_scale(const Vector3d& ref, const Disturbances& d) {
  return {std::abs(ref(0)), std::abs(ref(1)), std::max(d.T_e_sec_in - ref(2), 0.1)};
}

StepSolution solve_step(const PredictionBundle& b, const Vector3d& ref, const Vector2d& u_past,
                        const PnmpcConfig& c) {
  const int Np = static_cast<int>(b.y_fr.rows()), Nc = static_cast<int>(b.G.cols() / 2);
  if (b.G.rows() != 3 * Np || b.G.cols() != 2 * Nc || b.y_fr.cols() != 3)
    throw DomainError("pnmpc: prediction bundle dimensions disagree");
  if (!b.y_fr.allFinite() || !b.G.allFinite()) throw DomainError("pnmpc: non-finite QP data");
  Vector3d sy;
  for (int i = 0; i < 3; ++i) sy(i) = c.y_scale(i) > 0 ? c.y_scale(i) : std::abs(ref(i));
  if ((sy.array() == 0).any()) throw DomainError("pnmpc: zero output scale");
  sy = sy.cwiseInverse();
  VectorXd su(2 * Nc);
  for (int k = 0; k < Nc; ++k) su.segment<2>(2 * k) = c.u_scale.cwiseInverse();
  VectorXd e(3 * Np);
  MatrixXd Gn(3 * Np, 2 * Nc);
  for (int k = 0; k < Np; ++k) {
    const Vector3d yk = b.y_fr.row(k).transpose() + b.correction;
    e.segment<3>(3 * k) = sy.cwiseProduct(ref - yk);
    Gn.middleRows<3>(3 * k) = sy.asDiagonal() * b.G.middleRows<3>(3 * k);
  }
  Gn = Gn * su.asDiagonal().inverse();  // columns per unit relative increment
  MatrixXd Qb = MatrixXd::Zero(3 * Np, 3 * Np), Rb = MatrixXd::Zero(2 * Nc, 2 * Nc);
  for (int k = 0; k < Np; ++k) Qb.block<3, 3>(3 * k, 3 * k) = c.Q;
  for (int k = 0; k < Nc; ++k) Rb.block<2, 2>(2 * k, 2 * k) = c.R;

  const int nu = 2 * Nc, ns = c.output_constraints ? 3 : 0, nz = nu + ns;
  QpProblem qp;
  qp.H = MatrixXd::Zero(nz, nz);
  qp.g = VectorXd::Zero(nz);
  qp.H.topLeftCorner(nu, nu) = 2 * (Gn.transpose() * Qb * Gn + Rb);
  qp.g.head(nu) = -2 * Gn.transpose() * Qb * e;
  if (ns) {
    qp.H.bottomRightCorner(ns, ns) = 1e-6 * MatrixXd::Identity(ns, ns);
    qp.g.tail(ns).setConstant(c.slack_weight);
  }
  qp.Aeq.resize(0, nz);
  qp.beq.resize(0);

  // Rows: increment bounds, cumulative input bounds, output bounds, slack >= 0.
  const int rows = 4 * Nc + 4 * Nc + (ns ? 2 * 3 * Np + ns : 0);
  qp.Ain = MatrixXd::Zero(rows, nz);
  qp.bin = VectorXd::Zero(rows);
  int r = 0;
  for (int k = 0; k < Nc; ++k)
    for (int i = 0; i < 2; ++i) {
      const int j = 2 * k + i;
      const double s = c.u_scale(i);
      qp.Ain(r, j) = 1, qp.bin(r++) = -c.du_max(i) / s;
      qp.Ain(r, j) = -1, qp.bin(r++) = -c.du_max(i) / s;
      for (int l = 0; l <= k; ++l) {
        qp.Ain(r, 2 * l + i) = 1;
        qp.Ain(r + 1, 2 * l + i) = -1;
      }
      // An input outside its box only has to be back by the time the rate
      // limit allows, which keeps the QP feasible on recovery.
      const double reach = (k + 1) * c.du_max(i);
      qp.bin(r++) = std::min(c.u_min(i) - u_past(i), reach) / s;
      qp.bin(r++) = -std::max(c.u_max(i) - u_past(i), -reach) / s;
    }
  if (ns) {
    for (int k = 0; k < Np; ++k) {
      const Vector3d yk = b.y_fr.row(k).transpose() + b.correction;
      for (int i = 0; i < 3; ++i) {
        const auto gi = Gn.row(3 * k + i);
        qp.Ain.row(r).head(nu) = gi, qp.Ain(r, nu + i) = 1;
        qp.bin(r++) = sy(i) * (c.phi_min(i) - yk(i));
        qp.Ain.row(r).head(nu) = -gi, qp.Ain(r, nu + i) = 1;
        qp.bin(r++) = -sy(i) * (c.phi_max(i) - yk(i));
      }
    }
    for (int i = 0; i < ns; ++i) qp.Ain(r, nu + i) = 1, qp.bin(r++) = 0;
  }

  StepSolution out;
  QpResult res = solve_qp(qp);
  out.status = res.status;
  if (res.status != QpStatus::optimal) {
    // Fallback: the move that brings the input back inside its bounds as fast
    // as the rate limits allow, zero when it already is.
    out.fallback = true;
    out.du = VectorXd::Zero(nu);
    const Vector2d target = u_past.cwiseMax(c.u_min).cwiseMin(c.u_max);
    out.du.head<2>() = (target - u_past).cwiseMax(-c.du_max).cwiseMin(c.du_max);
    out.du_now = out.du.head<2>();
    return out;
  }
  const VectorXd dun = res.x.head(nu);
  out.du = su.asDiagonal().inverse() * dun;
  out.du_now = out.du.head<2>();
  const VectorXd err = e - Gn * dun;
  out.cost = err.dot(Qb * err) + dun.dot(Rb * dun);
  out.active_set_size = res.active_set_size;
  return out;
}

PnmpcController::PnmpcController(std::shared_ptr<const PredictionModel> model, PnmpcConfig c,
                                 Vector3d ref)
    : m_(std::move(model)), c_(std::move(c)), ref_(ref) {
  if (!m_) throw DomainError("pnmpc: no prediction model");
  c_.validate();
}

Vector2d PnmpcController::step(double t, const VectorXd& x, const Vector3d& y,
                               const Vector2d& u_prev, ControlLog& log) {
  log.t = t;
  log.ref = ref_;
  log.y = y;
  try {
    b_.y_fr = free_response(*m_, x, u_prev, c_.N_p, c_.dt);
    b_.G = jacobian(*m_, x, u_prev, c_.N_p, c_.N_c, c_.dt, c_.fd_delta, false, &b_.y_fr);
    // Offset-free correction: measured minus modelled output now.
    b_.correction = y - m_->output(x, u_prev);
    const StepSolution s = solve_step(b_, ref_, u_prev, c_);
    const Vector2d u = saturate_input(u_prev + s.du_now, u_prev, c_.u_min, c_.u_max, c_.du_max);
    log.u = u;
    log.du = u - u_prev;
    log.J = s.cost;
    log.qp_status = s.fallback ? std::string("fallback") : to_string(s.status);
    log.active_set_size = s.active_set_size;
    return u;
  } catch (const ModelError& e) {
    // Fail-safe: hold the previous input.
    log.u = u_prev;
    log.du.setZero();
    log.J = NAN;
    log.qp_status = "hold";
    log.active_set_size = 0;
    return u_prev;
  }
}

Vector2d saturate_input(const Vector2d& u_req, const Vector2d& u_prev, const Vector2d& u_min,
                        const Vector2d& u_max, const Vector2d& du_max) {
  Vector2d u;
  for (int i = 0; i < 2; ++i) {
    const double lo = std::max(u_min(i), u_prev(i) - du_max(i));
    const double hi = std::min(u_max(i), u_prev(i) + du_max(i));
    if (lo <= hi)
      u(i) = std::clamp(u_req(i), lo, hi);
    else  // previous input already outside the bounds: head back at the rate limit
      u(i) = u_prev(i) > u_max(i) ? u_prev(i) - du_max(i) : u_prev(i) + du_max(i);
  }
  return u;
}

void write_control_log_csv(const std::string& path, const std::vector<ControlLog>& log) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << "t,ref_P_e,ref_P_c,ref_T_e_sec_out,P_e,P_c,T_e_sec_out,N,A_v,dN,dA_v,J,qp_status,"
        "active_set_size\n";
  for (const auto& l : log)
    os << fmt::format("{:.6g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                      "{:.10g},{:.10g},{:.10g},{},{}\n",
                      l.t, l.ref(0), l.ref(1), l.ref(2), l.y(0), l.y(1), l.y(2), l.u(0), l.u(1),
                      l.du(0), l.du(1), l.J, l.qp_status, l.active_set_size);
}

}  // namespace vcr

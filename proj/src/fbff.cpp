#include "vcr/fbff.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "vcr/errors.hpp"

namespace vcr {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

Vector2d projected(const Fluid& fl, const CondenserState& x, const Actuators& u,
                   const Disturbances& d, const PlantParams& p,
                   const Eigen::Matrix<double, 2, 3>& Lambda) {
  const Coupling c = couple(fl, x, u, d, p);
  return Lambda * Eigen::Vector3d(c.P_e, x.P_c, c.evap.T_e_sec_out);
}

}  // namespace

IdentifiedModel identify_linear_model(const Fluid& fl, const CondenserState& x0,
                                      const Actuators& u0, const Disturbances& d,
                                      const PlantParams& p,
                                      const Eigen::Matrix<double, 2, 3>& Lambda,
                                      const Excitation& ex) {
  if (ex.samples < 20) throw DomainError("identification: need at least 20 samples");
  if (ex.min_hold < 1 || ex.max_hold < ex.min_hold)
    throw DomainError("identification: bad PRBS hold lengths");
  IdentifiedModel m;
  m.dt = ex.dt;
  m.u0 << u0.N, u0.A_v;
  m.y0 = projected(fl, x0, u0, d, p, Lambda);
  for (int i = 0; i < 2; ++i)
    m.y_scale(i) = ex.y_scale(i) > 0 ? ex.y_scale(i) : std::abs(m.y0(i));
  const Vector2d ys = m.y_scale;

  // Independent PRBS per input with random hold lengths.
  std::mt19937 rng(ex.seed);
  std::uniform_int_distribution<int> hold(ex.min_hold, ex.max_hold);
  std::vector<Vector2d> un(ex.samples), yn(ex.samples + 1);
  for (int i = 0; i < 2; ++i) {
    double level = 1;
    for (int k = 0; k < ex.samples;) {
      const int h = hold(rng);
      for (int j = 0; j < h && k < ex.samples; ++j, ++k) un[k](i) = level;
      level = -level;
    }
  }
  CondenserState x = x0;
  yn[0].setZero();
  for (int k = 0; k < ex.samples; ++k) {
    un[k] = un[k].cwiseProduct(ex.amplitude).cwiseQuotient(m.u0);
    const Vector2d u = m.u0 + un[k].cwiseProduct(m.u0);
    const Actuators a{u(0), u(1)};
    x = advance(fl, x, a, d, p, ex.dt);
    yn[k + 1] = (projected(fl, x, a, d, p, Lambda) - m.y0).cwiseQuotient(ys);
  }

  // y(k+1) = A y(k) + B u(k), both outputs at once.
  MatrixXd Phi(ex.samples, 4), Y(ex.samples, 2);
  for (int k = 0; k < ex.samples; ++k) {
    Phi.row(k) << yn[k].transpose(), un[k].transpose();
    Y.row(k) = yn[k + 1].transpose();
  }
  const MatrixXd theta = Phi.colPivHouseholderQr().solve(Y);  // 4 x 2
  m.A = theta.topRows(2).transpose();
  m.B = theta.bottomRows(2).transpose();

  // Free-run simulation of the fit against the data.
  Vector2d ym = Vector2d::Zero();
  Vector2d num = Vector2d::Zero(), den = Vector2d::Zero(), mean = Vector2d::Zero();
  for (int k = 1; k <= ex.samples; ++k) mean += yn[k];
  mean /= ex.samples;
  for (int k = 0; k < ex.samples; ++k) {
    ym = m.A * ym + m.B * un[k];
    num += (yn[k + 1] - ym).cwiseAbs2();
    den += (yn[k + 1] - mean).cwiseAbs2();
  }
  m.nrmse = (num.cwiseQuotient(den)).cwiseSqrt().maxCoeff();
  if (!(m.nrmse <= 0.2))
    throw PoorFit(fmt::format("identification: NRMSE {:.3f} above 0.2", m.nrmse));
  return m;
}

MatrixXd identified_step(const IdentifiedModel& m, int input, int samples) {
  if (input < 0 || input > 1) throw DomainError("identified_step: input index 0 or 1");
  MatrixXd y(samples, 2);
  Vector2d x = Vector2d::Zero(), u = Vector2d::Zero();
  u(input) = 1;
  for (int k = 0; k < samples; ++k) {
    x = m.A * x + m.B * u;
    y.row(k) = (m.C * x).transpose();
  }
  return y;
}

MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                    double tol, int max_iter) {
  MatrixXd P = Q;
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXd S = R + B.transpose() * P * B;
    const MatrixXd Pn =
        Q + A.transpose() * P * A -
        A.transpose() * P * B * S.ldlt().solve(B.transpose() * P * A);
    if (!Pn.allFinite()) break;
    // Max-abs norms: a squared norm overflows first and fakes convergence.
    const double scale = Pn.cwiseAbs().maxCoeff();
    if (!(scale < 1e150)) break;
    const double res = (Pn - P).cwiseAbs().maxCoeff() / std::max(1.0, scale);
    P = 0.5 * (Pn + Pn.transpose());
    if (res < tol) return P;
  }
  throw RiccatiDivergence("Riccati iteration did not converge");
}

LqrDesign design_lqr(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                     const MatrixXd& R) {
  const MatrixXd P = solve_dare(A, B, Q, R);
  LqrDesign d;
  d.A_aug = A;
  d.B_aug = B;
  d.K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
  const Eigen::VectorXcd ev = (A - B * d.K).eigenvalues();
  d.spectral_radius = ev.cwiseAbs().maxCoeff();
  if (!(d.spectral_radius < 1))
    throw RiccatiDivergence(
        fmt::format("closed loop not stable, spectral radius {:.4f}", d.spectral_radius));
  return d;
}

LqrDesign design_lqr(const IdentifiedModel& m, const MatrixXd& Q_aug, const MatrixXd& R) {
  MatrixXd Aa = MatrixXd::Zero(4, 4), Ba = MatrixXd::Zero(4, 2);
  Aa.topLeftCorner(2, 2) = m.A;
  Aa.bottomLeftCorner(2, 2) = -m.C;
  Aa.bottomRightCorner(2, 2) = Matrix2d::Identity();
  Ba.topRows(2) = m.B;
  return design_lqr(Aa, Ba, Q_aug, R);
}

Matrix2d kalman_gain(const IdentifiedModel& m, double process, double measurement) {
  // Dual Riccati for the predicted covariance, then the filter-form gain.
  const MatrixXd P = solve_dare(m.A.transpose(), m.C.transpose(),
                                process * MatrixXd::Identity(2, 2),
                                measurement * MatrixXd::Identity(2, 2));
  const Matrix2d S = m.C * P * m.C.transpose() + measurement * Matrix2d::Identity();
  return P * m.C.transpose() * S.inverse();
}

void FbffConfig::validate() const {
  if (K.rows() != 2 || K.cols() != 4 || !K.allFinite())
    throw ConfigError("fbff: K must be a finite 2x4 matrix");
  Eigen::FullPivLU<Eigen::Matrix<double, 2, 3>> lu(Lambda);
  if (lu.rank() < 2) throw ConfigError("fbff: Lambda rows must be independent");
  if (!(awu_gain >= 0)) throw ConfigError("fbff: awu_gain must be non-negative");
  if ((du_max.array() <= 0).any() || (u_min.array() >= u_max.array()).any())
    throw ConfigError("fbff: bad input bounds");
}

FbffController::FbffController(IdentifiedModel m, FbffConfig c, Eigen::Vector3d phi_ref)
    : m_(std::move(m)), c_(std::move(c)), phi_ref_(phi_ref) {
  c_.validate();
  r_n_ = (c_.Lambda * phi_ref_ - m_.y0).cwiseQuotient(m_.y_scale);
}

Vector2d FbffController::step(double t, const VectorXd&, const Eigen::Vector3d& y,
                              const Vector2d& u_prev, ControlLog& log) {
  const Vector2d yn = (c_.Lambda * y - m_.y0).cwiseQuotient(m_.y_scale);
  const Vector2d un_prev = (u_prev - m_.u0).cwiseQuotient(m_.u0);
  // Observer: predict with the last applied input, then correct.
  if (!started_) {
    xhat_ = yn;
    started_ = true;
  } else {
    const Vector2d pred = m_.A * xhat_ + m_.B * un_prev;
    xhat_ = pred + c_.L_obs * (yn - m_.C * pred);
  }
  q_ += r_n_ - yn;

  Eigen::Vector4d z;
  z << xhat_, q_;
  const Vector2d u_fb_n = -c_.K * z;
  const Vector2d u_req = c_.u_ff + u_fb_n.cwiseProduct(m_.u0);
  const Vector2d u = saturate_input(u_req, u_prev, c_.u_min, c_.u_max, c_.du_max);

  // Back-calculation: shift the integrators so the unsaturated law would have
  // produced the applied input.
  if (c_.awu_gain > 0) {
    const Vector2d gap = (u - u_req).cwiseQuotient(m_.u0);
    if (gap.cwiseAbs().maxCoeff() > 0) {
      const Matrix2d Kq = c_.K.rightCols(2);
      q_ -= c_.awu_gain * Kq.completeOrthogonalDecomposition().solve(gap);
    }
  }

  log.t = t;
  log.ref = phi_ref_;
  log.y = y;
  log.u = u;
  log.du = u - u_prev;
  log.J = (r_n_ - yn).squaredNorm();
  log.qp_status = "n/a";
  log.active_set_size = 0;
  return u;
}

}  // namespace vcr

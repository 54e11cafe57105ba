#pragma once

#include <memory>

#include <Eigen/Dense>

#include "vcr/pnmpc.hpp"

namespace vcr {

// Selection keeping P_e and T_e,sec,out; the condenser pressure is left free.
inline Eigen::Matrix<double, 2, 3> default_lambda() {
  Eigen::Matrix<double, 2, 3> L;
  L << 1, 0, 0, 0, 0, 1;
  return L;
}

// Gain reported for the original identified model; kept for reference only,
// the operative gain always comes from design_lqr on the local model.
inline Eigen::Matrix<double, 2, 4> reference_gain() {
  Eigen::Matrix<double, 2, 4> K;
  K << -8.73e-5, -1.1493, -7.08e-6, -0.0562, -1.01e-5, -4.3996, -8.18e-6, -0.6346;
  return K;
}

inline Eigen::Vector2d project_outputs(const Eigen::Vector3d& phi,
                                       const Eigen::Matrix<double, 2, 3>& Lambda) {
  return Lambda * phi;
}

// Discrete model in normalised deviations: y_n = (y - y0) / y_scale, u_n = (u - u0) / u0,
// x+ = A x + B u, y = C x with C = I (the projected outputs are the state).
struct IdentifiedModel {
  Eigen::Matrix2d A, B, C = Eigen::Matrix2d::Identity();
  Eigen::Vector2d y0, u0, y_scale;
  double dt = 5.0;
  double nrmse = 0;  // worst output, free-run simulation over the excitation data
};

struct Excitation {
  Eigen::Vector2d amplitude{1.0, 1.0};  // Hz, %
  int samples = 240;
  int min_hold = 2, max_hold = 8;       // PRBS hold lengths in samples
  unsigned seed = 1;
  double dt = 5.0;
  Eigen::Vector2d y_scale = Eigen::Vector2d::Zero();  // non-positive entries use |y0|
};

// Least-squares fit around an equilibrium (x0, u0) from a PRBS response of the
// nonlinear model. Throws PoorFit above 20% NRMSE.
IdentifiedModel identify_linear_model(const Fluid& fl, const CondenserState& x0,
                                      const Actuators& u0, const Disturbances& d,
                                      const PlantParams& p,
                                      const Eigen::Matrix<double, 2, 3>& Lambda,
                                      const Excitation& ex = {});

// Step response of the identified model, for checks.
Eigen::MatrixXd identified_step(const IdentifiedModel& m, int input, int samples);

// Discrete algebraic Riccati equation by fixed-point iteration.
// Throws RiccatiDivergence if the relative residual does not reach tol.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           double tol = 1e-10, int max_iter = 200000);

struct LqrDesign {
  Eigen::MatrixXd K;  // u = -K z
  Eigen::MatrixXd A_aug, B_aug;
  double spectral_radius = 0;
};

// Gain for the model augmented with tracking-error integrators q+ = q + r - C x.
LqrDesign design_lqr(const IdentifiedModel& m, const Eigen::MatrixXd& Q_aug,
                     const Eigen::MatrixXd& R);
// Generic discrete LQR for a given pair.
LqrDesign design_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

struct FbffConfig {
  Eigen::Matrix<double, 2, 3> Lambda = default_lambda();
  Eigen::MatrixXd K;  // 2 x 4
  Eigen::Vector2d u_ff = Eigen::Vector2d::Zero();
  double awu_gain = 1.0;  // 0 disables anti-windup
  Eigen::Vector2d du_max{2.0, 1.0};
  Eigen::Vector2d u_min{30.0, 10.0}, u_max{50.0, 100.0};
  Eigen::Matrix2d L_obs = Eigen::Matrix2d::Identity();  // observer gain

  void validate() const;
};

// Steady-state Kalman gain (filter form) for the identified model.
Eigen::Matrix2d kalman_gain(const IdentifiedModel& m, double process = 1.0,
                            double measurement = 1e-2);

class FbffController final : public Controller {
 public:
  // phi_ref: optimal (P_e, P_c, T_e,sec,out); the model supplies the scaling.
  FbffController(IdentifiedModel m, FbffConfig c, Eigen::Vector3d phi_ref);
  Eigen::Vector2d step(double t, const Eigen::VectorXd& x, const Eigen::Vector3d& y,
                       const Eigen::Vector2d& u_prev, ControlLog& log) override;
  const char* name() const override { return "fbff"; }
  const Eigen::Vector2d& integrators() const { return q_; }
  const Eigen::Vector2d& estimate() const { return xhat_; }

 private:
  IdentifiedModel m_;
  FbffConfig c_;
  Eigen::Vector3d phi_ref_;
  Eigen::Vector2d r_n_;
  Eigen::Vector2d xhat_ = Eigen::Vector2d::Zero(), q_ = Eigen::Vector2d::Zero();
  bool started_ = false;
};

}  // namespace vcr

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vcr/dynmodel.hpp"
#include "vcr/qp.hpp"

namespace vcr {

// Discrete-time predictor with two inputs and three outputs. The output may
// depend on the input held over the interval that produced the state.
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::Vector2d& u,
                               double dt) const = 0;
  virtual Eigen::Vector3d output(const Eigen::VectorXd& x, const Eigen::Vector2d& u) const = 0;
};

// The reduced cycle model; state is the condenser vector, outputs are
// (P_e, P_c, T_e,sec,out). Disturbances are held at the last measured values.
class CycleModel final : public PredictionModel {
 public:
  CycleModel(std::shared_ptr<const Fluid> fl, PlantParams p, Disturbances d,
             SimOptions o = fixed_stepping());
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::Vector2d& u,
                       double dt) const override;
  Eigen::Vector3d output(const Eigen::VectorXd& x, const Eigen::Vector2d& u) const override;
  void set_disturbances(const Disturbances& d) { d_ = d; }
  const Disturbances& disturbances() const { return d_; }
  const PlantParams& params() const { return p_; }
  const Fluid& fluid() const { return *fl_; }

  static SimOptions fixed_stepping() {
    SimOptions o;
    o.fixed_step = 1.0;
    return o;
  }

 private:
  std::shared_ptr<const Fluid> fl_;
  PlantParams p_;
  Disturbances d_;
  SimOptions o_;
};

// x+ = A x + B u, y = C x + D u.
class LinearModel final : public PredictionModel {
 public:
  LinearModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C, Eigen::MatrixXd D);
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::Vector2d& u,
                       double dt) const override;
  Eigen::Vector3d output(const Eigen::VectorXd& x, const Eigen::Vector2d& u) const override;

 private:
  Eigen::MatrixXd A_, B_, C_, D_;
};

struct PnmpcConfig {
  int N_p = 10, N_c = 3;
  Eigen::Matrix3d Q = 2 * Eigen::Matrix3d::Identity();
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
  double dt = 5.0;  // s
  Eigen::Vector2d du_max{2.0, 1.0};
  Eigen::Vector2d u_min{30.0, 10.0}, u_max{50.0, 100.0};
  Eigen::Vector3d phi_min{0.8e5, 14e5, 248.15}, phi_max{2e5, 25e5, 253.15};
  double slack_weight = 1e4;  // l1 penalty on normalised output-bound violation
  double fd_delta = 1e-3;     // Hz and %
  // Increments are weighted relative to these input magnitudes, matching the
  // relative output errors; normally the optimizer's N and A_v.
  Eigen::Vector2d u_scale{30.0, 50.0};
  // Output error scales; a non-positive entry falls back to |reference|.
  Eigen::Vector3d y_scale = Eigen::Vector3d::Zero();
  bool output_constraints = true;

  void validate() const;
};

struct PredictionBundle {
  Eigen::MatrixXd y_fr;        // N_p x 3
  Eigen::MatrixXd G;           // 3 N_p x 2 N_c, rows stacked by step
  Eigen::Vector3d correction = Eigen::Vector3d::Zero();
};

// Outputs over the horizon holding the last input. Row k is the output after
// k + 1 intervals.
Eigen::MatrixXd free_response(const PredictionModel& m, const Eigen::VectorXd& x,
                              const Eigen::Vector2d& u_past, int N_p, double dt);

// Outputs for an explicit increment sequence (2 N_c entries, block per step).
Eigen::MatrixXd predict(const PredictionModel& m, const Eigen::VectorXd& x,
                        const Eigen::Vector2d& u_past, const Eigen::VectorXd& du, int N_p,
                        double dt);

// Finite-difference sensitivity of the stacked prediction to the increments at
// du = 0. One-sided unless central is set.
Eigen::MatrixXd jacobian(const PredictionModel& m, const Eigen::VectorXd& x,
                         const Eigen::Vector2d& u_past, int N_p, int N_c, double dt,
                         double delta, bool central = false,
                         const Eigen::MatrixXd* y_fr = nullptr);

struct StepSolution {
  Eigen::VectorXd du;           // all N_c blocks
  Eigen::Vector2d du_now = Eigen::Vector2d::Zero();
  double cost = 0;              // predicted tracking plus move cost
  QpStatus status = QpStatus::optimal;
  bool fallback = false;        // QP failed and the violation-minimising move was used
  int active_set_size = 0;
};

// Pressures relative to their references; the secondary outlet temperature
// relative to the temperature drop the evaporator can produce.
Eigen::Vector3d output_scale(const Eigen::Vector3d& ref, const Disturbances& d);

// Errors are divided by c.y_scale, so Q weights relative deviations.
StepSolution solve_step(const PredictionBundle& b, const Eigen::Vector3d& ref,
                        const Eigen::Vector2d& u_past, const PnmpcConfig& c);

struct ControlLog {
  double t = 0;
  Eigen::Vector3d ref = Eigen::Vector3d::Zero(), y = Eigen::Vector3d::Zero();
  Eigen::Vector2d u = Eigen::Vector2d::Zero(), du = Eigen::Vector2d::Zero();
  double J = 0;
  std::string qp_status = "open";
  int active_set_size = 0;
};

// Common shape of the two closed-loop controllers.
class Controller {
 public:
  virtual ~Controller() = default;
  // x: plant condenser state, y: measured outputs, u_prev: input applied over
  // the last interval. Returns the input for the next interval.
  virtual Eigen::Vector2d step(double t, const Eigen::VectorXd& x, const Eigen::Vector3d& y,
                               const Eigen::Vector2d& u_prev, ControlLog& log) = 0;
  virtual const char* name() const = 0;
};

class PnmpcController final : public Controller {
 public:
  PnmpcController(std::shared_ptr<const PredictionModel> model, PnmpcConfig c,
                  Eigen::Vector3d ref);
  Eigen::Vector2d step(double t, const Eigen::VectorXd& x, const Eigen::Vector3d& y,
                       const Eigen::Vector2d& u_prev, ControlLog& log) override;
  const char* name() const override { return "pnmpc"; }
  const PnmpcConfig& config() const { return c_; }
  // Last prediction bundle, for inspection.
  const PredictionBundle& bundle() const { return b_; }

 private:
  std::shared_ptr<const PredictionModel> m_;
  PnmpcConfig c_;
  Eigen::Vector3d ref_;
  PredictionBundle b_;
};

// Saturate a requested input against absolute bounds and rate limits.
Eigen::Vector2d saturate_input(const Eigen::Vector2d& u_req, const Eigen::Vector2d& u_prev,
                               const Eigen::Vector2d& u_min, const Eigen::Vector2d& u_max,
                               const Eigen::Vector2d& du_max);

void write_control_log_csv(const std::string& path, const std::vector<ControlLog>& log);

}  // namespace vcr

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "vcr/cycle.hpp"
#include "vcr/dynmodel.hpp"
#include "vcr/fbff.hpp"
#include "vcr/pnmpc.hpp"

namespace vcr {

// Perturbed starting cycle: absolute compressor speed, valve opening and
// condenser outlet enthalpy relative to the optimum.
struct InitialOffset {
  double N = 38;         // Hz
  double dA_v = 0;       // %
  double dh_c_out = 0;   // J/kg
};
inline constexpr InitialOffset kIp1{38.0, -3.0, -510.0};
inline constexpr InitialOffset kIp2{38.0, 6.0, 2500.0};

// Static closure meeting the offset; Newton over (demand, P_e) at the fixed
// h_c,out. Its condenser state is an ODE equilibrium.
CycleOperatingPoint initial_point(const Fluid& fl, const CycleOperatingPoint& opt,
                                  const InitialOffset& off, const Disturbances& d,
                                  const PlantParams& p);

struct ClosedLoopConfig {
  double t_end = 1800;   // s
  double t_close = 300;  // loop closes here; open loop before
  double dt = 5;         // controller period, also the reporting period
  SimOptions plant;      // adaptive by default
};

struct ClosedLoopResult {
  std::vector<ControlLog> log;
  std::vector<CycleSimState> traj;
  int holds = 0;  // controller failures that held the input
};

// Shared scheduler for both controllers: the plant runs at constant input over
// each period, the controller sees the state at the period start.
// on_disturbance is told the disturbances before each controller call.
ClosedLoopResult run_closed_loop(const Fluid& fl, const PlantParams& p, const DistProfile& d,
                                 const CondenserState& x0, const Actuators& u0,
                                 Controller* ctrl, const Eigen::Vector3d& ref,
                                 const ClosedLoopConfig& cfg,
                                 const std::function<void(const Disturbances&)>& on_disturbance = {});

// Samples whose applied input leaves the box or moves faster than the rate
// limit from one period to the next.
int count_input_violations(const std::vector<ControlLog>& log, const Eigen::Vector2d& u_min,
                           const Eigen::Vector2d& u_max, const Eigen::Vector2d& du_max);

enum class ControllerKind { pnmpc, fbff };
ControllerKind controller_kind(const std::string& name);  // throws ConfigError

// Tunings Q1, Q2, Q3 of the tuning study, by index 1..3.
Eigen::Matrix3d tuning_q(int index);

// One paired-experiment run: optimum at the demand, perturbed start,
// controller built around the optimum, shared scheduler.
struct Experiment {
  double demand = 600;  // W
  InitialOffset start = kIp1;
  bool start_at_optimum = false;
  ControllerKind controller = ControllerKind::pnmpc;
  ClosedLoopConfig loop;
  PnmpcConfig pnmpc;      // u_scale and y_scale are filled from the optimum
  Excitation excitation;  // seed and y_scale are filled in
  double awu_gain = 1.0;
  unsigned seed = 1;
};

struct ExperimentResult {
  CycleOperatingPoint opt, start;
  ClosedLoopResult run;
  Eigen::Vector3d ref = Eigen::Vector3d::Zero();
  std::optional<IdentifiedModel> identified;
  Eigen::MatrixXd K;  // FB+FF gain when used
};

ExperimentResult run_experiment(std::shared_ptr<const Fluid> fl, const PlantParams& p,
                                const Disturbances& d, const CycleOperatingPoint& opt,
                                const Experiment& e);

}  // namespace vcr

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vcr/components.hpp"
#include "vcr/ode.hpp"
#include "vcr/refprops.hpp"

namespace vcr {

struct CycleOperatingPoint;

// Condenser state: pressure, subcooled length fraction, subcooled enthalpy.
// The subcooled enthalpy doubles as the valve inlet enthalpy.
struct CondenserState {
  double P_c = 0;        // Pa
  double zeta_c_sc = 0;  // -
  double h_c_sc = 0;     // J/kg

  Eigen::Vector3d vec() const { return {P_c, zeta_c_sc, h_c_sc}; }
  static CondenserState from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
  // Throws DomainError when outside the mode-1 box.
  void validate(const Fluid& fl) const;
};

struct Actuators {
  double N = 0;    // Hz
  double A_v = 0;  // %
};

// Exogenous condenser inputs.
struct CondenserInputs {
  double mdot_c_sec = 0, T_c_sec_in = 0, mdot = 0, h_c_in = 0;
};

// Static valve, evaporator and compressor solved at a condenser state.
struct Coupling {
  double P_e = 0;
  double mdot = 0;
  EvapSolution evap;
  CompressorResult comp;
};

// Finds P_e where the valve and compressor flows agree. A guess narrows the
// bracket search; without one the full pressure range is scanned.
Coupling couple(const Fluid& fl, const CondenserState& x, const Actuators& u,
                const Disturbances& d, const PlantParams& p,
                std::optional<double> P_e_guess = {});

struct CondenserMatrices {
  Eigen::Matrix3d Z;
  Eigen::Vector3d f;
  double zeta_sh = 0, zeta_tp = 0;
  double rho_sc = 0, rho_tp = 0, rho_sh = 0;
  double Q_sc = 0, Q_tp = 0;  // heat into the refrigerant, W
};

// Mode-1 matrices. Section heat flows enter f with the refrigerant-gain sign,
// i.e. the negative of the static condenser's removed heat.
CondenserMatrices condenser_matrices(const Fluid& fl, const CondenserState& x,
                                     const CondenserInputs& w, const PlantParams& p);

struct Transformed {
  Eigen::Matrix3d Z_hat;
  Eigen::Vector3d f_hat;  // third entry exactly zero
};
// rho_ratio = rho_tp / rho_sc.
Transformed transform_underactuated(const Eigen::Matrix3d& Z, const Eigen::Vector3d& f,
                                    double rho_ratio);

struct StateDerivative {
  Eigen::Vector3d xdot;
  Eigen::Matrix<double, 3, 2> B_c;  // xdot = B_c * [f1, f2]
  Eigen::Vector2d v;                // virtual inputs f1, f2
  double cond = 0;                  // scaled condition number of Z_hat
};

// Condition number limit beyond which the state is treated as leaving mode 1.
inline constexpr double kMaxCondition = 1e12;

StateDerivative state_derivative(const Fluid& fl, const CondenserState& x,
                                 const CondenserInputs& w, const PlantParams& p);

// Everything reported at one instant.
struct CycleSimState {
  double t = 0;
  CondenserState x;
  Actuators u;
  Disturbances d;
  double P_e = 0, mdot = 0, h_e_out = 0, h_c_in = 0;
  double Q_e = 0, W_comp = 0, COP = 0;
  double T_e_sec_out = 0, T_SH = 0;
  double zeta_sh = 0, zeta_tp = 0;
  double cond = 0;
  Eigen::Vector3d xdot = Eigen::Vector3d::Zero();

  // Measured outputs (P_e, P_c, T_e,sec,out).
  Eigen::Vector3d phi() const { return {P_e, x.P_c, T_e_sec_out}; }
};

CycleSimState evaluate_state(const Fluid& fl, const CondenserState& x, const Actuators& u,
                             const Disturbances& d, const PlantParams& p,
                             std::optional<double> P_e_guess = {});

// Piecewise-constant schedules; value i holds from times[i] until times[i+1].
struct InputProfile {
  std::vector<double> times{0.0};
  std::vector<Actuators> values;
  Actuators at(double t) const;
  static InputProfile constant(Actuators u) { return {{0.0}, {u}}; }
};
struct DistProfile {
  std::vector<double> times{0.0};
  std::vector<Disturbances> values;
  Disturbances at(double t) const;
  static DistProfile constant(Disturbances d) { return {{0.0}, {d}}; }
};

struct SimOptions {
  double rtol = 1e-6;
  Eigen::Vector3d atol{0.1, 1e-8, 1e-3};
  double h_max = 0;
  double fixed_step = 0;  // s; > 0 switches off error control
};

struct Trajectory {
  std::vector<CycleSimState> samples;
  OdeStats stats;
  double max_cond = 0;
};

// Integrates over [0, t_end] and reports every dt; segments between profile
// breakpoints are integrated separately so steps never straddle a jump.
Trajectory simulate(const Fluid& fl, const CondenserState& x0, const InputProfile& u,
                    const DistProfile& d, const PlantParams& p, double t_end, double dt,
                    const SimOptions& o = {});

// One interval at constant inputs; returns the state at t + dt.
CondenserState advance(const Fluid& fl, const CondenserState& x, const Actuators& u,
                       const Disturbances& d, const PlantParams& p, double dt,
                       const SimOptions& o = {});

// Condenser state and actuators matching a closed static cycle.
CondenserState condenser_state_of(const CycleOperatingPoint& pt);
Actuators actuators_of(const CycleOperatingPoint& pt);

void write_trajectory_csv(const std::string& path, const std::vector<CycleSimState>& traj);

}  // namespace vcr

#pragma once

#include <string>

#include "vcr/refprops.hpp"

namespace vcr {

struct PlantParams {
  double c_eev = 2.33e-9;      // m2 per % opening
  double a = 60.0;             // W
  double b = 1.15;             // -
  double c = 1.0e-6;           // m3
  double S_t = 4.2e-5;         // m3
  double UA_comp = 2.5;        // W/K
  double A_e_trnsf = 0.5;      // m
  double A_c_trnsf = 1.83;     // m
  double L_e = 1.0;            // m
  double L_c = 2.0;            // m
  double alpha_e_sh = 10.0;    // W/(m2 K)
  double alpha_e_tp = 66.0;
  double alpha_c_sh = 4.0;
  double alpha_c_tp = 100.0;
  double alpha_c_sc = 13.4;
  double V_R = 2.0e-3;         // m3
  double cp_e_sec = 3450.0;    // J/(kg K), glycol brine
  double cp_c_sec = 1006.0;    // J/(kg K), air
  double gamma_bar = 0.8;      // mean condenser void fraction

  // Throws ConfigError naming the first bad field.
  void validate(double cr_max = 25.0, double cv_cp = 0.9) const;
};

struct Disturbances {
  double mdot_e_sec = 0.058;   // kg/s
  double mdot_c_sec = 0.5;     // kg/s
  double T_e_sec_in = 253.75;  // K
  double T_c_sec_in = 297.15;  // K
  double T_surr = 297.15;      // K

  void validate() const;
};

// Key-value files, one `key = value` per line, '#' comments.
PlantParams load_params(const std::string& path);
void apply_param(PlantParams& p, const std::string& key, double value);
void apply_disturbance(Disturbances& d, const std::string& key, double value);
std::string to_text(const PlantParams& p);

// Heat-exchanger effectiveness for counter-flow; C = Cmin/Cmax.
double effectiveness(double NTU, double C);

double valve_opening(const Fluid& fl, double P_e, double P_c, double mdot, double h_c_out,
                     const PlantParams& p);
double valve_flow(const Fluid& fl, double A_v, double P_e, double P_c, double h_c_out,
                  const PlantParams& p);

struct CompressorResult {
  double h_c_in = 0;   // J/kg, after shell loss
  double N = 0;        // Hz
  double W_comp = 0;   // W
  double h_is = 0;     // isentropic discharge enthalpy
  double T_is = 0;     // isentropic discharge temperature
  double v_e_out = 0;  // suction specific volume
  double denom = 0;    // displacement term, m3
};

CompressorResult compressor_eval(const Fluid& fl, double P_e, double P_c, double mdot,
                                 double h_e_out, double T_surr, const PlantParams& p);
// Mass flow delivered at speed N.
double compressor_flow(const Fluid& fl, double N, double P_e, double P_c, double h_e_out,
                       const PlantParams& p);

struct EvapSolution {
  double h_e_in = 0;
  double h_e_out = 0;
  double T_SH = 0;
  double T_e_sec_out = 0;
  double zeta_e_tp = 0;
  double Q_sh = 0;
  double Q_tp = 0;
  int iterations = 0;
};

struct CondSolution {
  double h_c_in_prime = 0;
  double T_SC = 0;
  double T_c_sec_out = 0;
  double zeta_c_sh = 0, zeta_c_tp = 0, zeta_c_sc = 0;
  double Q_sh = 0, Q_tp = 0, Q_sc = 0;  // heat removed from refrigerant, W
  int iterations = 0;
};

EvapSolution evaporator_eval(const Fluid& fl, double P_e, double mdot, double h_e_out,
                             const Disturbances& d, const PlantParams& p);
// Inverse direction used by the dynamic model: inlet enthalpy given, outlet
// found. A flooded outlet (no superheat section) returns zeta_e_tp = 1.
EvapSolution evaporator_forward(const Fluid& fl, double P_e, double mdot, double h_e_in,
                                const Disturbances& d, const PlantParams& p);
CondSolution condenser_eval(const Fluid& fl, double P_c, double mdot, double h_c_out,
                            const Disturbances& d, const PlantParams& p);

// Section heat-rate kernels, exposed for the dynamic model and for tests.
namespace section {
// Heat picked up by the superheated evaporator section of length 1 - zeta_tp.
double evap_sh(const SaturationPoint& sp, double mdot, double zeta_tp, const Disturbances& d,
               const PlantParams& p);
// Two-phase evaporator section of length zeta_tp fed at secondary temperature T_mid.
double evap_tp(const SaturationPoint& sp, double zeta_tp, double T_mid, const Disturbances& d,
               const PlantParams& p);
// Condenser sections, heat removed from the refrigerant.
double cond_sc(const SaturationPoint& sp, double mdot, double zeta_sc, const Disturbances& d,
               const PlantParams& p);
double cond_tp(const SaturationPoint& sp, double zeta_tp, const Disturbances& d,
               const PlantParams& p);
// Superheated condenser section fed at h_in; the refrigerant capacity uses the
// section-mean cp between h_g and h_in.
double cond_sh(const Fluid& fl, const SaturationPoint& sp, double mdot, double h_in,
               double zeta_sh, const Disturbances& d, const PlantParams& p);
}  // namespace section

}  // namespace vcr

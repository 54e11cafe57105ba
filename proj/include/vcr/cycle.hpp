#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vcr/components.hpp"
#include "vcr/refprops.hpp"
#include "vcr/sqp.hpp"

namespace vcr {

// Decision triple.
struct Chi {
  double h_e_out = 0;  // J/kg
  double h_c_out = 0;  // J/kg
  double mdot = 0;     // kg/s
};

struct OptConstraints {
  double N_min = 30, N_max = 50;         // Hz
  double A_v_min = 10, A_v_max = 100;    // %
  double T_SH_min = 2, T_SH_max = 30;    // K
  double P_e_max = 2.0e5;                // Pa
  double P_c_min = 14.0e5;               // Pa
  double CR_min = 2, CR_max = 25;
  double zeta_sh_min = 0.01;             // keeps the condenser in mode 1

  void validate() const;
};

struct CycleOperatingPoint {
  Chi chi;
  double P_e = 0, P_c = 0;
  double T_e_sec_out = 0;  // third measurable besides the pressures
  double N = 0, A_v = 0;
  double Q_e = 0, W_comp = 0, COP = 0;
  double h_c_in = 0;
  double T_SH = 0, T_SC = 0;
  EvapSolution evap;
  CondSolution cond;
  CompressorResult comp;
  std::vector<std::string> active;  // active inequality names at an optimum
};

struct CycleEval {
  CycleOperatingPoint point;
  double e_h_e_in = 0;  // h_e,in - h_c,out
  double e_h_c_in = 0;  // h'_c,in - h_c,in
};

// Performance identities that only need enthalpies and flow.
struct Performance {
  double Q_e = 0, W_comp = 0, COP = 0;
};
Performance performance(double h_e_out, double h_c_out, double mdot, double h_c_in);
// Discharge enthalpy implied by a COP when compressor work is mdot*(h_c,in - h_e,out).
double implied_h_c_in(double h_e_out, double h_c_out, double COP);

// Valve, compressor, evaporator, condenser, in that order; never closes.
CycleEval evaluate_cycle(const Fluid& fl, const Chi& chi, double P_e, double P_c,
                         const Disturbances& d, const PlantParams& p);

struct CloseInfo {
  int newton_iterations = 0;
  bool used_bracketing = false;
};

// Drive both residuals to zero over (P_e, P_c); Newton from the guess with a
// bracketing fallback. Guess may be omitted.
CycleOperatingPoint close_cycle(const Fluid& fl, const Chi& chi, const Disturbances& d,
                                const PlantParams& p, std::optional<double> P_e0 = {},
                                std::optional<double> P_c0 = {}, CloseInfo* info = nullptr);

// Normalised constraint values (>= 0 feasible) and their names.
std::vector<double> constraint_values(const Fluid& fl, const CycleOperatingPoint& pt,
                                      const OptConstraints& c);
const std::vector<std::string>& constraint_names();
double max_violation(const Fluid& fl, const CycleOperatingPoint& pt, const OptConstraints& c);

struct OptimizeOptions {
  int scan = 16;            // coarse reduced-space grid per side for starting points
  int starts = 3;           // SQP runs from the best scan points
  unsigned seed = 0;        // > 0 adds random feasible starts instead
  int random_starts = 0;
  std::vector<CycleOperatingPoint> warm;  // extra starting points
  SqpOptions sqp;
};

struct OptimizeReport {
  CycleOperatingPoint best;
  int sqp_runs = 0;
  int sqp_converged = 0;
  std::vector<double> start_cops;  // COP reached from each start
};

// Reduced two-dof space at fixed demand, (P_e, h_c,out). The demand pins h_e,out
// to a narrow band for each P_e, so P_e is the better-conditioned coordinate.
struct ReducedBox {
  double Pe_lo, Pe_hi, hc_lo, hc_hi;
};
ReducedBox reduced_box(const Fluid& fl, const Disturbances& d, const OptConstraints& c);

// Closed point for a reduced pair at a demand: h_e,out makes the evaporator duty
// equal the demand, then P_c closes the condenser. Throws if either stage fails.
CycleOperatingPoint reduced_point(const Fluid& fl, double Q_e, double P_e, double h_c_out,
                                  const Disturbances& d, const PlantParams& p);

CycleOperatingPoint optimize_cycle(const Fluid& fl, double Q_e, const Disturbances& d,
                                   const PlantParams& p, const OptConstraints& c,
                                   const OptimizeOptions& o = {}, OptimizeReport* rep = nullptr);

struct SweepEntry {
  double demand = 0;
  bool ok = false;
  std::string error;
  CycleOperatingPoint point;
};

std::vector<SweepEntry> sweep_demand(const Fluid& fl, const std::vector<double>& demands,
                                     const Disturbances& d, const PlantParams& p,
                                     const OptConstraints& c, const OptimizeOptions& o = {});

}  // namespace vcr

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vcr/cycle.hpp"
#include "vcr/dynmodel.hpp"

namespace vcr {

struct LinearControllability {
  Eigen::Matrix<double, 3, 2> B_c;
  Eigen::Vector2d singular_values;  // of the row-scaled B_c
  int rank = 0;
  int controllability_rank = 0;  // of [B, AB, A^2 B] with A = 0
};

// Rank is taken on B_c with rows in (bar, -, 10 kJ/kg) so the relative
// singular-value threshold is not dominated by units.
LinearControllability linear_controllability(const Fluid& fl, const CondenserState& x,
                                             const CondenserInputs& w, const PlantParams& p,
                                             double rel_threshold = 1e-10);

// Numerical rank by singular values above rel * sigma_max.
int numerical_rank(const Eigen::MatrixXd& A, double rel);

// Error state relative to the optimal condenser state.
struct ErrorState {
  Eigen::Vector3d psi;
  CondenserState reference;
  static ErrorState of(const CondenserState& x, const CondenserState& ref) {
    return {x.vec() - ref.vec(), ref};
  }
};

// Which error component the first virtual input is spent on holding still.
enum class HeldState { pressure = 0, zeta = 1, enthalpy = 2 };

struct ReducedDirections {
  Eigen::Matrix<double, 3, 2> n;
  HeldState held = HeldState::enthalpy;
  double d1 = 0, d2 = 0;  // free components, in state order
  double f_c1 = 0, f_c2 = 0;
  double slope() const { return d2 / d1; }
};

// Directions from an n matrix and a chosen f_c,2; f_c,1 keeps the held
// component stationary. Throws DegenerateDirection when the held row has no
// f_c,1 authority.
ReducedDirections reduce_with(const Eigen::Matrix<double, 3, 2>& n, double f_c2,
                              HeldState held = HeldState::enthalpy);

// Same with n and f_c,2 taken from the model at (x, w). n is expressed in
// normalised units (bar, -, J/kg) so slopes read directly on the phase plane.
ReducedDirections reduce_holding(const Fluid& fl, const CondenserState& x,
                                 const CondenserInputs& w, const PlantParams& p,
                                 HeldState held = HeldState::enthalpy);

// Determinant psi1*d2 - psi2*d1 of a point against a direction.
inline double subspace_determinant(double psi1, double psi2, double d1, double d2) {
  return psi1 * d2 - psi2 * d1;
}

struct SlopeStats {
  int start_id = 0;
  Eigen::Vector3d psi = Eigen::Vector3d::Zero();  // normalised (bar, -, J/kg)
  double mean = 0, stddev = 0;
  int samples = 0, failures = 0;
  double rel_std() const { return mean != 0 ? stddev / std::abs(mean) : INFINITY; }
};

struct SlopeStudyConfig {
  int samples = 15;                    // compressor speeds per start point
  double N_window = 2.0;               // Hz either side of the start's speed; <= 0 spans all
  double N_min = 30, N_max = 50;       // Hz
  double A_v_min = 10, A_v_max = 100;  // %
  HeldState held = HeldState::enthalpy;
};

// An equilibrium start point together with the actuators that hold it.
struct StartPoint {
  CondenserState x;
  Actuators u;
};

// Equilibria sharing the optimum's subcooled enthalpy, built by closing the
// static cycle at shifted demand and evaporator pressure (relative offsets).
std::vector<StartPoint> equilibrium_starts(const Fluid& fl, const CycleOperatingPoint& opt,
                                           const std::vector<double>& demand_offsets,
                                           const std::vector<double>& pressure_offsets,
                                           const Disturbances& d, const PlantParams& p);

// Valve opening that keeps the held component stationary at speed N, found
// near A_v_guess. Throws NoConvergence when none exists inside the bounds.
double holding_valve(const Fluid& fl, const CondenserState& x, double N, double A_v_guess,
                     const Disturbances& d, const PlantParams& p, const SlopeStudyConfig& c);

// For each start point, compressor speeds are sampled over the window and the
// valve is solved so the held component stays still; each (N, A_v) maps to
// a candidate (mdot, h_c,in) through the static coupling. Pairs leaving mode 1
// count as failures.
std::vector<SlopeStats> subspace_slope_study(const Fluid& fl,
                                             const std::vector<StartPoint>& starts,
                                             const CondenserState& reference,
                                             const Disturbances& d, const PlantParams& p,
                                             const SlopeStudyConfig& c = {});

// Line segments of half-length `span` (in psi1 bar units) through each start point.
void write_phase_portrait_csv(const std::string& path, const std::vector<SlopeStats>& stats,
                              double span = 0.5);

}  // namespace vcr

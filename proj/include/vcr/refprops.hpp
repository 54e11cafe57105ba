#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vcr {

enum class Region { subcooled, two_phase, superheated };

struct ThermoState {
  double P = 0;    // Pa
  double h = 0;    // J/kg
  double T = 0;    // K
  double rho = 0;  // kg/m3
  double s = 0;    // J/(kg K)
  double v = 0;    // m3/kg
  double q = -1;   // quality, -1 outside the dome
  Region region = Region::superheated;

  bool in_dome() const { return region == Region::two_phase; }
};

// Saturation quantities at one pressure plus their pressure derivatives.
struct SaturationPoint {
  double P = 0;
  double T = 0, h_f = 0, h_g = 0, rho_f = 0, rho_g = 0, s_f = 0, s_g = 0;
  double cp_f = 0, cp_g = 0, cv_g = 0;
  double dT_dP = 0, dh_f_dP = 0, dh_g_dP = 0, drho_f_dP = 0, drho_g_dP = 0;
  double ds_f_dP = 0, ds_g_dP = 0, dcp_f_dP = 0, dcp_g_dP = 0;
};

// Property interface every model consumes.
class Fluid {
 public:
  virtual ~Fluid() = default;

  virtual double P_min() const = 0;
  virtual double P_max() const = 0;

  virtual SaturationPoint sat(double P) const = 0;
  virtual ThermoState state_Ph(double P, double h) const = 0;
  virtual ThermoState state_Ps(double P, double s) const = 0;

  // Partial derivatives of density, used by the condenser matrices.
  virtual double drho_dP(double P, double h) const = 0;  // at constant h
  virtual double drho_dh(double P, double h) const = 0;  // at constant P

  double T_sat(double P) const { return sat(P).T; }
  double h_f(double P) const { return sat(P).h_f; }
  double h_g(double P) const { return sat(P).h_g; }
  double T(double P, double h) const { return state_Ph(P, h).T; }
  double rho(double P, double h) const { return state_Ph(P, h).rho; }
  double s(double P, double h) const { return state_Ph(P, h).s; }
  double h_Ps(double P, double s) const { return state_Ps(P, s).h; }
};

// Built-in R404A-class correlation set.
//
// Saturation curves are polynomials in u = (ln P - mid)/half. Single-phase
// states extend the dome edges with pressure-dependent effective heat
// capacities; the superheated vapour is ideal-gas-like in density, the
// subcooled liquid slightly compressible in enthalpy.
class CorrelationFluid final : public Fluid {
 public:
  struct Coefficients {
    double P_min = 0.5e5, P_max = 30e5;
    double mid = 0, half = 1;
    std::vector<double> T_sat, h_f, h_g, s_f, ln_rho_f, ln_rho_g, cp_f, cp_g, cv_g;
    double beta = 2.4e-6;        // kg/J, liquid density sensitivity to h
    double T_floor = 190.0;      // K, lowest subcooled temperature accepted
    double superheat_max = 150;  // K above T_sat accepted
  };

  CorrelationFluid();  // built-in R404A fit
  explicit CorrelationFluid(Coefficients c);

  // Key-value text: `T_sat = c0 c1 ...`, `mid = ...`, scalars as above.
  // Keys absent from the file keep their built-in values.
  static CorrelationFluid from_file(const std::string& path);
  static Coefficients builtin();

  const Coefficients& coefficients() const { return c_; }

  double P_min() const override { return c_.P_min; }
  double P_max() const override { return c_.P_max; }
  SaturationPoint sat(double P) const override;
  ThermoState state_Ph(double P, double h) const override;
  ThermoState state_Ps(double P, double s) const override;
  double drho_dP(double P, double h) const override;
  double drho_dh(double P, double h) const override;

 private:
  void check_P(double P) const;
  Coefficients c_;
};

std::shared_ptr<const Fluid> default_fluid();

}  // namespace vcr

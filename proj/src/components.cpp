#include "vcr/components.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "roots.hpp"
#include "vcr/errors.hpp"

namespace vcr {

using detail::bracket_root;

double effectiveness(double NTU, double C) {
  if (!(NTU >= 0) || !(C >= 0) || C > 1)
    throw DomainError(fmt::format("effectiveness: NTU={} C={} outside domain", NTU, C));
  if (NTU == 0) return 0.0;
  if (C == 0) return -std::expm1(-NTU);
  if (1.0 - C < 1e-9) return NTU / (1.0 + NTU);
  const double e = std::exp(-NTU * (1.0 - C));
  return (1.0 - e) / (1.0 - C * e);
}

double valve_opening(const Fluid& fl, double P_e, double P_c, double mdot, double h_c_out,
                     const PlantParams& p) {
  if (!(P_c > P_e)) throw DomainError("valve: condenser pressure must exceed evaporator pressure");
  const double rho = fl.rho(P_c, h_c_out);
  return mdot / (p.c_eev * std::sqrt(2.0 * rho * (P_c - P_e)));
}

double valve_flow(const Fluid& fl, double A_v, double P_e, double P_c, double h_c_out,
                  const PlantParams& p) {
  if (!(P_c > P_e)) throw DomainError("valve: condenser pressure must exceed evaporator pressure");
  const double rho = fl.rho(P_c, h_c_out);
  return A_v * p.c_eev * std::sqrt(2.0 * rho * (P_c - P_e));
}

namespace {

double displacement(const Fluid& fl, double P_e, double P_c, const PlantParams& p) {
  if (!(P_c >= P_e)) throw DomainError("compressor: pressure ratio below 1");
  const SaturationPoint se = fl.sat(P_e);
  const double k = se.cv_g / se.cp_g;
  const double den = p.S_t - p.c * (std::pow(P_c / P_e, k) - 1.0);
  if (!(den > 0)) throw DomainError("compressor: non-positive displacement term");
  return den;
}

}  // namespace

CompressorResult compressor_eval(const Fluid& fl, double P_e, double P_c, double mdot,
                                 double h_e_out, double T_surr, const PlantParams& p) {
  CompressorResult r;
  r.denom = displacement(fl, P_e, P_c, p);
  const ThermoState in = fl.state_Ph(P_e, h_e_out);
  r.v_e_out = in.v;
  r.N = mdot * in.v / r.denom;
  const ThermoState is = fl.state_Ps(P_c, in.s);
  r.h_is = is.h;
  r.T_is = is.T;
  r.W_comp = p.a + p.b * mdot * (r.h_is - h_e_out);
  // Shell loss to the surroundings lowers the discharge enthalpy.
  r.h_c_in = mdot > 0 ? h_e_out + (r.W_comp - p.UA_comp * (r.T_is - T_surr)) / mdot : r.h_is;
  return r;
}

double compressor_flow(const Fluid& fl, double N, double P_e, double P_c, double h_e_out,
                       const PlantParams& p) {
  const double den = displacement(fl, P_e, P_c, p);
  return N * den / fl.state_Ph(P_e, h_e_out).v;
}

namespace section {

double evap_sh(const SaturationPoint& sp, double mdot, double zeta_tp, const Disturbances& d,
               const PlantParams& p) {
  const double C_sec = d.mdot_e_sec * p.cp_e_sec;
  const double C_ref = mdot * sp.cp_g;
  const double Cmin = std::min(C_ref, C_sec), Cmax = std::max(C_ref, C_sec);
  const double len = std::max(0.0, 1.0 - zeta_tp);
  if (Cmin <= 0 || len == 0) return 0.0;
  const double NTU = p.alpha_e_sh * p.A_e_trnsf * p.L_e * len / Cmin;
  return effectiveness(NTU, Cmin / Cmax) * Cmin * (d.T_e_sec_in - sp.T);
}

double evap_tp(const SaturationPoint& sp, double zeta_tp, double T_mid, const Disturbances& d,
               const PlantParams& p) {
  const double C_sec = d.mdot_e_sec * p.cp_e_sec;
  const double NTU = p.alpha_e_tp * p.A_e_trnsf * p.L_e * std::max(0.0, zeta_tp) / C_sec;
  return effectiveness(NTU, 0.0) * C_sec * (T_mid - sp.T);
}

double cond_sc(const SaturationPoint& sp, double mdot, double zeta_sc, const Disturbances& d,
               const PlantParams& p) {
  const double C_sec = zeta_sc * d.mdot_c_sec * p.cp_c_sec;
  const double C_ref = mdot * sp.cp_f;
  const double Cmin = std::min(C_ref, C_sec), Cmax = std::max(C_ref, C_sec);
  if (Cmin <= 0) return 0.0;
  const double NTU = p.alpha_c_sc * p.A_c_trnsf * p.L_c * zeta_sc / Cmin;
  return effectiveness(NTU, Cmin / Cmax) * Cmin * (sp.T - d.T_c_sec_in);
}

double cond_tp(const SaturationPoint& sp, double zeta_tp, const Disturbances& d,
               const PlantParams& p) {
  const double C_sec = zeta_tp * d.mdot_c_sec * p.cp_c_sec;
  if (C_sec <= 0) return 0.0;
  const double NTU = p.alpha_c_tp * p.A_c_trnsf * p.L_c * zeta_tp / C_sec;
  return effectiveness(NTU, 0.0) * C_sec * (sp.T - d.T_c_sec_in);
}

double cond_sh(const Fluid& fl, const SaturationPoint& sp, double mdot, double h_in,
               double zeta_sh, const Disturbances& d, const PlantParams& p) {
  const double T_in = fl.T(sp.P, h_in);
  const double dT = T_in - sp.T;
  const double cp = dT > 1e-9 ? (h_in - sp.h_g) / dT : sp.cp_g;
  const double C_sec = zeta_sh * d.mdot_c_sec * p.cp_c_sec;
  const double C_ref = mdot * cp;
  const double Cmin = std::min(C_ref, C_sec), Cmax = std::max(C_ref, C_sec);
  if (Cmin <= 0) return 0.0;
  const double NTU = p.alpha_c_sh * p.A_c_trnsf * p.L_c * zeta_sh / Cmin;
  return effectiveness(NTU, Cmin / Cmax) * Cmin * (T_in - d.T_c_sec_in);
}

}  // namespace section

namespace {

constexpr double kHeatTol = 1e-8;

void check_residual(double r, double scale, const char* what) {
  if (std::abs(r) > kHeatTol * std::max(1.0, std::abs(scale)))
    throw NoConvergence(fmt::format("{}: residual {:.3e} above tolerance", what, r));
}

}  // namespace

EvapSolution evaporator_eval(const Fluid& fl, double P_e, double mdot, double h_e_out,
                             const Disturbances& d, const PlantParams& p) {
  const SaturationPoint sp = fl.sat(P_e);
  if (h_e_out < sp.h_g - 1e-9 * std::abs(sp.h_g))
    throw Infeasible("evaporator: outlet below saturated vapour");
  if (!(mdot > 0)) throw DomainError("evaporator: mass flow must be positive");
  const double C_sec = d.mdot_e_sec * p.cp_e_sec;
  EvapSolution s;
  s.h_e_out = h_e_out;
  s.Q_sh = mdot * std::max(0.0, h_e_out - sp.h_g);
  if (s.Q_sh == 0) {
    s.zeta_e_tp = 1.0;
  } else {
    auto r = [&](double z) {
      ++s.iterations;
      return section::evap_sh(sp, mdot, z, d, p) - s.Q_sh;
    };
    const double r0 = r(0.0);
    if (r0 < 0) throw Infeasible("evaporator: superheat exceeds section capacity");
    s.zeta_e_tp = bracket_root(r, 0.0, 1.0, r0, -s.Q_sh, "evaporator zeta_tp");
    check_residual(r(s.zeta_e_tp), s.Q_sh, "evaporator zeta_tp");
  }
  const double T_mid = d.T_e_sec_in - s.Q_sh / C_sec;
  if (T_mid <= sp.T) throw Infeasible("evaporator: secondary colder than refrigerant");
  s.Q_tp = section::evap_tp(sp, s.zeta_e_tp, T_mid, d, p);
  s.h_e_in = sp.h_g - s.Q_tp / mdot;
  s.T_e_sec_out = T_mid - s.Q_tp / C_sec;
  s.T_SH = fl.T(P_e, h_e_out) - sp.T;
  return s;
}

EvapSolution evaporator_forward(const Fluid& fl, double P_e, double mdot, double h_e_in,
                                const Disturbances& d, const PlantParams& p) {
  const SaturationPoint sp = fl.sat(P_e);
  if (!(mdot > 0)) throw DomainError("evaporator: mass flow must be positive");
  const double C_sec = d.mdot_e_sec * p.cp_e_sec;
  const double need = mdot * (sp.h_g - h_e_in);
  if (!(need > 0)) throw Infeasible("evaporator: inlet already superheated");
  EvapSolution s;
  s.h_e_in = h_e_in;
  auto tp_heat = [&](double z, double& Qsh) {
    Qsh = section::evap_sh(sp, mdot, z, d, p);
    return section::evap_tp(sp, z, d.T_e_sec_in - Qsh / C_sec, d, p);
  };
  double Qsh1;
  const double Qtp1 = tp_heat(1.0, Qsh1);
  if (Qtp1 <= need) {
    // Flooded: the whole length boils and the outlet stays wet.
    s.zeta_e_tp = 1.0;
    s.Q_sh = 0;
    s.Q_tp = Qtp1;
    s.h_e_out = h_e_in + Qtp1 / mdot;
  } else {
    double Qsh;
    auto g = [&](double z) {
      ++s.iterations;
      return tp_heat(z, Qsh) - need;
    };
    s.zeta_e_tp = bracket_root(g, 0.0, 1.0, g(0.0), Qtp1 - need, "evaporator forward");
    s.Q_tp = tp_heat(s.zeta_e_tp, Qsh);
    s.Q_sh = Qsh;
    s.h_e_out = sp.h_g + Qsh / mdot;
  }
  s.T_e_sec_out = d.T_e_sec_in - (s.Q_sh + s.Q_tp) / C_sec;
  s.T_SH = fl.T(P_e, s.h_e_out) - sp.T;
  return s;
}

CondSolution condenser_eval(const Fluid& fl, double P_c, double mdot, double h_c_out,
                            const Disturbances& d, const PlantParams& p) {
  const SaturationPoint sp = fl.sat(P_c);
  if (h_c_out > sp.h_f + 1e-9 * std::abs(sp.h_f))
    throw Infeasible("condenser: outlet above saturated liquid");
  if (!(mdot > 0)) throw DomainError("condenser: mass flow must be positive");
  if (!(sp.T > d.T_c_sec_in)) throw Infeasible("condenser: saturation below secondary inlet");
  CondSolution s;

  // Subcooled section.
  s.Q_sc = mdot * std::max(0.0, sp.h_f - h_c_out);
  if (s.Q_sc > 0) {
    auto r = [&](double z) {
      ++s.iterations;
      return section::cond_sc(sp, mdot, z, d, p) - s.Q_sc;
    };
    const double r1 = r(1.0);
    if (r1 < 0) throw Infeasible("condenser: subcooling exceeds exchanger capacity");
    s.zeta_c_sc = bracket_root(r, 0.0, 1.0, -s.Q_sc, r1, "condenser zeta_sc");
    check_residual(r(s.zeta_c_sc), s.Q_sc, "condenser zeta_sc");
  }

  // Two-phase section.
  s.Q_tp = mdot * (sp.h_g - sp.h_f);
  {
    auto r = [&](double z) {
      ++s.iterations;
      return section::cond_tp(sp, z, d, p) - s.Q_tp;
    };
    const double r1 = r(1.0);
    if (r1 < 0) throw Infeasible("condenser: condensation exceeds exchanger capacity");
    s.zeta_c_tp = bracket_root(r, 0.0, 1.0, -s.Q_tp, r1, "condenser zeta_tp");
    check_residual(r(s.zeta_c_tp), s.Q_tp, "condenser zeta_tp");
  }

  s.zeta_c_sh = 1.0 - s.zeta_c_sc - s.zeta_c_tp;
  if (s.zeta_c_sh < 0) throw Infeasible("condenser: section lengths exceed the exchanger");

  // Inlet enthalpy consistent with the superheated section. The capacity uses
  // the mean cp over the section, so the balance reduces to
  // (T' - T_c) = eps (T' - T_sec,in) and always has a root while eps < 1.
  if (s.zeta_c_sh <= 0) {
    s.h_c_in_prime = sp.h_g;
  } else {
    auto r = [&](double h) {
      ++s.iterations;
      return mdot * (h - sp.h_g) - section::cond_sh(fl, sp, mdot, h, s.zeta_c_sh, d, p);
    };
    const double h_lo = sp.h_g, r_lo = r(h_lo);
    double hi = sp.h_g + sp.cp_g * 20.0, rhi = 0;
    for (;;) {
      try {
        rhi = r(hi);
      } catch (const OutOfRange&) {
        throw DischargeOverflow("condenser: superheated inlet beyond the property range");
      }
      if (rhi >= 0) break;
      hi = sp.h_g + (hi - sp.h_g) * 1.6;
    }
    s.h_c_in_prime = bracket_root(r, h_lo, hi, r_lo, rhi, "condenser h_in");
    check_residual(r(s.h_c_in_prime), mdot * (s.h_c_in_prime - sp.h_g), "condenser h_in");
  }
  s.Q_sh = mdot * (s.h_c_in_prime - sp.h_g);
  s.T_SC = sp.T - fl.T(P_c, h_c_out);
  // Length-weighted mix of the three section outlets.
  s.T_c_sec_out = d.T_c_sec_in + (s.Q_sh + s.Q_tp + s.Q_sc) / (d.mdot_c_sec * p.cp_c_sec);
  return s;
}

}  // namespace vcr

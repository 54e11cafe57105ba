#include "vcr/dynmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "roots.hpp"
#include "vcr/cycle.hpp"
#include "vcr/errors.hpp"

namespace vcr {

using detail::bracket_root;
using Eigen::Matrix3d;
using Eigen::Vector3d;

void CondenserState::validate(const Fluid& fl) const {
  if (!(P_c > fl.P_min() && P_c < fl.P_max()))
    throw DomainError(fmt::format("condenser state: P_c {} Pa outside property range", P_c));
  if (!(zeta_c_sc > 0 && zeta_c_sc < 1))
    throw DomainError(fmt::format("condenser state: zeta_sc {} outside (0, 1)", zeta_c_sc));
  if (!(h_c_sc < fl.h_f(P_c)))
    throw DomainError("condenser state: subcooled enthalpy above saturated liquid");
}

Coupling couple(const Fluid& fl, const CondenserState& x, const Actuators& u,
                const Disturbances& d, const PlantParams& p, std::optional<double> P_e_guess) {
  x.validate(fl);
  Coupling c;
  auto resid = [&](double pe) {
    const double mv = valve_flow(fl, u.A_v, pe, x.P_c, x.h_c_sc, p);
    const EvapSolution ev = evaporator_forward(fl, pe, mv, x.h_c_sc, d, p);
    return mv - compressor_flow(fl, u.N, pe, x.P_c, ev.h_e_out, p);
  };
  auto safe = [&](double pe, double& r) {
    try {
      r = resid(pe);
      return std::isfinite(r);
    } catch (const ModelError&) {
      return false;
    }
  };
  const double lo_lim = fl.P_min() * 1.01, hi_lim = x.P_c * 0.999;
  if (!(hi_lim > lo_lim)) throw Infeasible("coupling: condenser pressure too low");

  double a = 0, b = 0, ra = 0, rb = 0;
  bool found = false;
  if (P_e_guess && *P_e_guess > lo_lim && *P_e_guess < hi_lim) {
    // Widen a log-symmetric bracket around the guess.
    double w = 0.01;
    for (int k = 0; k < 14 && !found; ++k, w *= 1.8) {
      a = std::max(lo_lim, *P_e_guess / (1 + w));
      b = std::min(hi_lim, *P_e_guess * (1 + w));
      if (safe(a, ra) && safe(b, rb) && (ra > 0) != (rb > 0)) found = true;
    }
  }
  if (!found) {
    // Valve flow falls and compressor flow rises with P_e, so the residual goes
    // from positive to negative; take the first sign change on a log grid.
    constexpr int n = 48;
    double prev_p = 0, prev_r = 0;
    bool have_prev = false;
    for (int i = 0; i < n && !found; ++i) {
      const double pe = lo_lim * std::pow(hi_lim / lo_lim, double(i) / (n - 1));
      double r;
      if (!safe(pe, r)) {
        have_prev = false;
        continue;
      }
      if (have_prev && (prev_r > 0) != (r > 0)) {
        a = prev_p, ra = prev_r, b = pe, rb = r;
        found = true;
      }
      prev_p = pe, prev_r = r, have_prev = true;
    }
  }
  if (!found) throw NoConvergence("coupling: no evaporator pressure balances the flows");
  c.P_e = bracket_root(resid, a, b, ra, rb, "coupling P_e", 200, 52);
  c.mdot = valve_flow(fl, u.A_v, c.P_e, x.P_c, x.h_c_sc, p);
  c.evap = evaporator_forward(fl, c.P_e, c.mdot, x.h_c_sc, d, p);
  c.comp = compressor_eval(fl, c.P_e, x.P_c, c.mdot, c.evap.h_e_out, d.T_surr, p);
  return c;
}

CondenserMatrices condenser_matrices(const Fluid& fl, const CondenserState& x,
                                     const CondenserInputs& w, const PlantParams& p) {
  x.validate(fl);
  const SaturationPoint sp = fl.sat(x.P_c);
  const double m = w.mdot;
  if (!(m > 0)) throw DomainError("condenser matrices: mass flow must be positive");
  if (!(w.h_c_in > sp.h_g)) throw SingularConfiguration("condenser inlet not superheated");
  Disturbances d;
  d.mdot_c_sec = w.mdot_c_sec;
  d.T_c_sec_in = w.T_c_sec_in;

  CondenserMatrices out;
  // Superheated length from its heat balance, capped by the room the
  // subcooled section leaves.
  const double Q_sh = m * (w.h_c_in - sp.h_g);
  const double room = 1.0 - x.zeta_c_sc;
  auto g = [&](double z) { return section::cond_sh(fl, sp, m, w.h_c_in, z, d, p) - Q_sh; };
  const double g_hi = g(room);
  if (g_hi <= 0) throw SingularConfiguration("condenser: no two-phase section left");
  out.zeta_sh = bracket_root(g, 0.0, room, -Q_sh, g_hi, "condenser zeta_sh", 200, 52);
  out.zeta_tp = room - out.zeta_sh;
  constexpr double kMinLen = 1e-6;
  if (out.zeta_sh < kMinLen || out.zeta_tp < kMinLen || x.zeta_c_sc < kMinLen)
    throw SingularConfiguration("condenser: a section length underflows");

  const double zsh = out.zeta_sh, ztp = out.zeta_tp, zsc = x.zeta_c_sc;
  const double gam = p.gamma_bar;
  const double hf = sp.h_f, hg = sp.h_g, rf = sp.rho_f, rg = sp.rho_g;
  const double rtp = gam * rg + (1 - gam) * rf;
  const double htp = (gam * rg * hg + (1 - gam) * rf * hf) / rtp;
  const double hsh = 0.5 * (w.h_c_in + hg);
  const double rsh = fl.rho(x.P_c, hsh), rsc = fl.rho(x.P_c, x.h_c_sc);

  const double dhg = sp.dh_g_dP;
  const double drtp = gam * sp.drho_g_dP + (1 - gam) * sp.drho_f_dP;
  const double dhtp = (gam * (sp.drho_g_dP * hg + rg * dhg) +
                       (1 - gam) * (sp.drho_f_dP * hf + rf * sp.dh_f_dP) - htp * drtp) /
                      rtp;
  const double drsh_dP = fl.drho_dP(x.P_c, hsh), drsh_dh = fl.drho_dh(x.P_c, hsh);
  const double drsc_dh = fl.drho_dh(x.P_c, x.h_c_sc);
  const double Dsc = hf - x.h_c_sc, Dsh = hg - hsh;

  Matrix3d& Z = out.Z;
  Z(0, 0) = 0.5 * dhg * (zsh / rsh * drsh_dh - zsh / Dsh) + zsh / rsh * drsh_dP +
            zsh / (rsh * Dsh) + ztp / rtp * drtp - zsh / (rtp * Dsh) - zsc / (rtp * Dsc) +
            0.5 * dhg * rsh / rtp * zsh / Dsh;
  Z(0, 1) = -1;
  Z(0, 2) = rsc / rtp * zsc / Dsc;
  Z(1, 0) = dhtp - 1 / rtp - zsh / ztp / rtp * (hg - htp) / Dsh -
            zsc / ztp / rtp * (hf - htp) / Dsc +
            0.5 * dhg * zsh / ztp * rsh / rtp * (hg - htp) / Dsh;
  Z(1, 1) = 0;
  Z(1, 2) = zsc / ztp * rsc / rtp * (hf - htp) / Dsc;
  Z(2, 0) = -zsc / rsc / Dsc;
  Z(2, 1) = -1;
  Z(2, 2) = -zsc / rsc * drsc_dh + zsc / Dsc;

  // Heat into the refrigerant is negative while condensing.
  out.Q_sc = -section::cond_sc(sp, m, zsc, d, p);
  out.Q_tp = -section::cond_tp(sp, ztp, d, p);
  const double V = p.V_R;
  const double sc_gain = out.Q_sc + m * Dsc;
  out.f(0) = sc_gain / (rtp * V * Dsc);
  out.f(1) = (out.Q_tp + m * (hg - htp) + (hf - htp) / Dsc * out.Q_sc) / (rtp * ztp * V);
  out.f(2) = sc_gain / (rsc * V * Dsc);
  out.rho_sc = rsc;
  out.rho_tp = rtp;
  out.rho_sh = rsh;
  return out;
}

Transformed transform_underactuated(const Matrix3d& Z, const Vector3d& f, double rho_ratio) {
  if (!(rho_ratio > 0) || !std::isfinite(rho_ratio))
    throw DomainError("transform: density ratio must be positive");
  Transformed t;
  t.Z_hat = Z;
  t.Z_hat.row(2) = Z.row(2) - rho_ratio * Z.row(0);
  t.f_hat << f(0), f(1), 0.0;
  return t;
}

namespace {

// Pressure in bar, enthalpy in 10 kJ/kg, so the columns are comparable.
const Vector3d kStateScale{1e5, 1.0, 1e4};

double scaled_condition(const Matrix3d& A) {
  Matrix3d S = A * kStateScale.asDiagonal();
  for (int i = 0; i < 3; ++i) {
    const double r = S.row(i).cwiseAbs().maxCoeff();
    if (r > 0) S.row(i) /= r;
  }
  Eigen::JacobiSVD<Matrix3d> svd(S);
  const auto& s = svd.singularValues();
  return s(2) > 0 ? s(0) / s(2) : INFINITY;
}

}  // namespace

StateDerivative state_derivative(const Fluid& fl, const CondenserState& x,
                                 const CondenserInputs& w, const PlantParams& p) {
  const CondenserMatrices cm = condenser_matrices(fl, x, w, p);
  const Transformed tr = transform_underactuated(cm.Z, cm.f, cm.rho_tp / cm.rho_sc);
  StateDerivative s;
  s.cond = scaled_condition(tr.Z_hat);
  if (!(s.cond < kMaxCondition))
    throw SingularMatrix(fmt::format("condenser matrix condition {:.3e} too large", s.cond));
  Eigen::PartialPivLU<Matrix3d> lu(tr.Z_hat);
  const Matrix3d inv = lu.inverse();
  s.B_c = inv.leftCols<2>();
  s.v << tr.f_hat(0), tr.f_hat(1);
  s.xdot = s.B_c * s.v;
  return s;
}

CycleSimState evaluate_state(const Fluid& fl, const CondenserState& x, const Actuators& u,
                             const Disturbances& d, const PlantParams& p,
                             std::optional<double> P_e_guess) {
  const Coupling c = couple(fl, x, u, d, p, P_e_guess);
  const StateDerivative sd =
      state_derivative(fl, x, {d.mdot_c_sec, d.T_c_sec_in, c.mdot, c.comp.h_c_in}, p);
  const CondenserMatrices cm =
      condenser_matrices(fl, x, {d.mdot_c_sec, d.T_c_sec_in, c.mdot, c.comp.h_c_in}, p);
  CycleSimState s;
  s.x = x;
  s.u = u;
  s.d = d;
  s.P_e = c.P_e;
  s.mdot = c.mdot;
  s.h_e_out = c.evap.h_e_out;
  s.h_c_in = c.comp.h_c_in;
  s.Q_e = c.mdot * (c.evap.h_e_out - x.h_c_sc);
  s.W_comp = c.comp.W_comp;
  s.COP = s.W_comp > 0 ? s.Q_e / s.W_comp : 0.0;
  s.T_e_sec_out = c.evap.T_e_sec_out;
  s.T_SH = c.evap.T_SH;
  s.zeta_sh = cm.zeta_sh;
  s.zeta_tp = cm.zeta_tp;
  s.cond = sd.cond;
  s.xdot = sd.xdot;
  return s;
}

Actuators InputProfile::at(double t) const {
  if (values.empty() || values.size() != times.size())
    throw DomainError("input profile: times and values differ in length");
  std::size_t i = std::upper_bound(times.begin(), times.end(), t) - times.begin();
  return values[i == 0 ? 0 : i - 1];
}

Disturbances DistProfile::at(double t) const {
  if (values.empty() || values.size() != times.size())
    throw DomainError("disturbance profile: times and values differ in length");
  std::size_t i = std::upper_bound(times.begin(), times.end(), t) - times.begin();
  return values[i == 0 ? 0 : i - 1];
}

namespace {

struct Segment {
  double t0, t1;
  Actuators u;
  Disturbances d;
};

OdeOptions ode_options(const SimOptions& o) {
  OdeOptions oo;
  oo.rtol = o.rtol;
  oo.atol = o.atol;
  oo.h_max = o.h_max;
  if (o.fixed_step > 0) {
    oo.adaptive = false;
    oo.h0 = o.fixed_step;
  }
  return oo;
}

}  // namespace

Trajectory simulate(const Fluid& fl, const CondenserState& x0, const InputProfile& up,
                    const DistProfile& dp, const PlantParams& p, double t_end, double dt,
                    const SimOptions& o) {
  if (!(t_end > 0) || !(dt > 0)) throw DomainError("simulate: t_end and dt must be positive");
  x0.validate(fl);
  // Segment boundaries: every breakpoint of either profile inside (0, t_end).
  std::vector<double> cuts{0.0, t_end};
  for (double t : up.times)
    if (t > 0 && t < t_end) cuts.push_back(t);
  for (double t : dp.times)
    if (t > 0 && t < t_end) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const int n_out = static_cast<int>(std::floor(t_end / dt + 1e-9)) + 1;
  std::vector<double> grid(n_out);
  for (int k = 0; k < n_out; ++k) grid[k] = k * dt;

  Trajectory tr;
  Eigen::VectorXd x = x0.vec();
  double pe_guess = 0;
  std::size_t k = 0;
  const OdeOptions oo = ode_options(o);
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double t0 = cuts[s], t1 = cuts[s + 1];
    const Actuators u = up.at(t0);
    const Disturbances d = dp.at(t0);
    auto rhs = [&](double, const Eigen::VectorXd& xv) -> Eigen::VectorXd {
      const CondenserState xs = CondenserState::from(xv);
      const Coupling c = couple(fl, xs, u, d, p,
                                pe_guess > 0 ? std::optional<double>(pe_guess) : std::nullopt);
      pe_guess = c.P_e;
      return state_derivative(fl, xs, {d.mdot_c_sec, d.T_c_sec_in, c.mdot, c.comp.h_c_in}, p)
          .xdot;
    };
    // Output times owned by this segment; the last segment also owns t_end.
    std::vector<double> t_out;
    const bool last = s + 2 == cuts.size();
    while (k < grid.size() && (grid[k] < t1 || (last && grid[k] <= t1 + 1e-9))) {
      t_out.push_back(std::min(grid[k], t1));
      ++k;
    }
    std::vector<Eigen::VectorXd> xs;
    OdeStats st;
    try {
      x = integrate(rhs, t0, x, t1, oo, t_out, &xs, &st);
    } catch (const ModelError& e) {
      throw NoConvergence(fmt::format("simulate: {} (segment from t={} s)", e.what(), t0));
    }
    tr.stats.accepted += st.accepted;
    tr.stats.rejected += st.rejected;
    tr.stats.failed_evals += st.failed_evals;
    tr.stats.rhs_evals += st.rhs_evals;
    tr.stats.last_h = st.last_h;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CycleSimState cs = evaluate_state(fl, CondenserState::from(xs[i]), u, d, p,
                                        pe_guess > 0 ? std::optional<double>(pe_guess)
                                                     : std::nullopt);
      cs.t = t_out[i];
      tr.max_cond = std::max(tr.max_cond, cs.cond);
      tr.samples.push_back(cs);
    }
  }
  return tr;
}

CondenserState advance(const Fluid& fl, const CondenserState& x, const Actuators& u,
                       const Disturbances& d, const PlantParams& p, double dt,
                       const SimOptions& o) {
  if (!(dt > 0)) throw DomainError("advance: dt must be positive");
  double pe_guess = 0;
  auto rhs = [&](double, const Eigen::VectorXd& xv) -> Eigen::VectorXd {
    const CondenserState xs = CondenserState::from(xv);
    const Coupling c = couple(fl, xs, u, d, p,
                              pe_guess > 0 ? std::optional<double>(pe_guess) : std::nullopt);
    pe_guess = c.P_e;
    return state_derivative(fl, xs, {d.mdot_c_sec, d.T_c_sec_in, c.mdot, c.comp.h_c_in}, p)
        .xdot;
  };
  return CondenserState::from(integrate(rhs, 0.0, x.vec(), dt, ode_options(o)));
}

CondenserState condenser_state_of(const CycleOperatingPoint& pt) {
  return {pt.P_c, pt.cond.zeta_c_sc, pt.chi.h_c_out};
}

Actuators actuators_of(const CycleOperatingPoint& pt) { return {pt.N, pt.A_v}; }

void write_trajectory_csv(const std::string& path, const std::vector<CycleSimState>& traj) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << "t,P_c,zeta_c_sc,h_c_sc,P_e,T_e_sec_out,T_SH,mdot,N,A_v,Q_e,W_comp,COP\n";
  for (const auto& s : traj)
    os << fmt::format("{:.6g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                      "{:.10g},{:.10g},{:.10g},{:.10g}\n",
                      s.t, s.x.P_c, s.x.zeta_c_sc, s.x.h_c_sc, s.P_e, s.T_e_sec_out, s.T_SH,
                      s.mdot, s.u.N, s.u.A_v, s.Q_e, s.W_comp, s.COP);
}

}  // namespace vcr

#include "vcr/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "roots.hpp"
#include "vcr/errors.hpp"
#include "vcr/sqp.hpp"

namespace vcr {

using detail::bracket_root;

void OptConstraints::validate() const {
  auto pair = [](double lo, double hi, const char* name) {
    if (!(lo <= hi)) throw ConfigError(fmt::format("constraint pair '{}' has min > max", name));
  };
  pair(N_min, N_max, "N");
  pair(A_v_min, A_v_max, "A_v");
  pair(T_SH_min, T_SH_max, "T_SH");
  pair(CR_min, CR_max, "CR");
  if (!(P_e_max > 0 && P_c_min > 0)) throw ConfigError("pressure limits must be positive");
}

Performance performance(double h_e_out, double h_c_out, double mdot, double h_c_in) {
  Performance r;
  r.Q_e = mdot * (h_e_out - h_c_out);
  r.W_comp = mdot * (h_c_in - h_e_out);
  r.COP = r.Q_e / r.W_comp;
  return r;
}

double implied_h_c_in(double h_e_out, double h_c_out, double COP) {
  return h_e_out + (h_e_out - h_c_out) / COP;
}

CycleEval evaluate_cycle(const Fluid& fl, const Chi& chi, double P_e, double P_c,
                         const Disturbances& d, const PlantParams& p) {
  CycleEval ev;
  auto& pt = ev.point;
  pt.chi = chi;
  pt.P_e = P_e;
  pt.P_c = P_c;
  pt.A_v = valve_opening(fl, P_e, P_c, chi.mdot, chi.h_c_out, p);
  pt.comp = compressor_eval(fl, P_e, P_c, chi.mdot, chi.h_e_out, d.T_surr, p);
  pt.evap = evaporator_eval(fl, P_e, chi.mdot, chi.h_e_out, d, p);
  pt.cond = condenser_eval(fl, P_c, chi.mdot, chi.h_c_out, d, p);
  pt.N = pt.comp.N;
  pt.W_comp = pt.comp.W_comp;
  pt.h_c_in = pt.comp.h_c_in;
  pt.Q_e = chi.mdot * (chi.h_e_out - chi.h_c_out);
  pt.COP = pt.Q_e / pt.W_comp;
  pt.T_e_sec_out = pt.evap.T_e_sec_out;
  pt.T_SH = pt.evap.T_SH;
  pt.T_SC = pt.cond.T_SC;
  ev.e_h_e_in = pt.evap.h_e_in - chi.h_c_out;
  ev.e_h_c_in = pt.cond.h_c_in_prime - pt.comp.h_c_in;
  return ev;
}

namespace {

constexpr double kCloseTol = 1e-4;  // J/kg

bool try_eval(const Fluid& fl, const Chi& chi, double Pe, double Pc, const Disturbances& d,
              const PlantParams& p, CycleEval& out) {
  try {
    out = evaluate_cycle(fl, chi, Pe, Pc, d, p);
    return std::isfinite(out.e_h_e_in) && std::isfinite(out.e_h_c_in);
  } catch (const ModelError&) {
    return false;
  }
}

// First sign change (low to high) of f along xs, skipping undefined points.
// When the first defined point is already positive, the lower end is pulled
// to the feasibility edge by bisection against the previous grid point.
template <class F>
bool scan_bracket(F&& f, const std::vector<double>& xs, double& lo, double& hi, double& flo,
                  double& fhi) {
  int prev_bad = -1;
  bool have = false;
  double xp = 0, fp = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double fi;
    try {
      fi = f(xs[i]);
    } catch (const ModelError&) {
      if (!have) prev_bad = static_cast<int>(i);
      continue;
    }
    if (!std::isfinite(fi)) continue;
    if (!have) {
      have = true;
      if (fi > 0 && prev_bad >= 0) {
        double a = xs[prev_bad], b = xs[i], fb = fi;
        for (int k = 0; k < 60; ++k) {
          const double m = 0.5 * (a + b);
          try {
            const double fm = f(m);
            b = m;
            fb = fm;
          } catch (const ModelError&) {
            a = m;
          }
        }
        if (fb < 0) {
          lo = b;
          flo = fb;
          hi = xs[i];
          fhi = fi;
          return true;
        }
      }
    } else if ((fp < 0) != (fi < 0) || fi == 0) {
      lo = xp;
      flo = fp;
      hi = xs[i];
      fhi = fi;
      return true;
    }
    xp = xs[i];
    fp = fi;
  }
  return false;
}

std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
  return xs;
}

// Condenser pressure for a fixed evaporator pressure.
CycleOperatingPoint close_condenser(const Fluid& fl, const Chi& chi, double Pe,
                                    const Disturbances& d, const PlantParams& p) {
  // e2 only exists in a window of P_c whose lower edge removes the superheated
  // section and whose upper edge overflows the discharge temperature; below the
  // root everything is "low", above it everything is "high". Bisect on that.
  auto side = [&](double Pc, double& r) {
    try {
      r = evaluate_cycle(fl, chi, Pe, Pc, d, p).e_h_c_in;
      return r >= 0 ? 1 : -1;
    } catch (const DischargeOverflow&) {
      r = NAN;
      return 1;
    } catch (const ModelError&) {
      r = NAN;
      return -1;
    }
  };
  double a = std::max(Pe * 1.02, fl.P_min());
  double b = fl.P_max() * 0.98;
  double fa, fb;
  if (side(a, fa) > 0 || side(b, fb) < 0)
    throw Infeasible("closure: no condenser pressure balances the discharge enthalpy");
  for (int k = 0; k < 80 && !(std::isfinite(fa) && std::isfinite(fb)); ++k) {
    const double m = 0.5 * (a + b);
    double fm;
    if (side(m, fm) > 0) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
    if (b - a <= 1e-9 * b) break;
  }
  if (!(std::isfinite(fa) && std::isfinite(fb)))
    throw Infeasible("closure: condenser balance has no root inside its feasible window");
  const double Pc = bracket_root(
      [&](double x) { return evaluate_cycle(fl, chi, Pe, x, d, p).e_h_c_in; }, a, b, fa, fb,
      "closure P_c");
  return evaluate_cycle(fl, chi, Pe, Pc, d, p).point;
}

CycleOperatingPoint close_bracketing(const Fluid& fl, const Chi& chi, const Disturbances& d,
                                     const PlantParams& p) {
  auto e1 = [&](double Pe) {
    return evaporator_eval(fl, Pe, chi.mdot, chi.h_e_out, d, p).h_e_in - chi.h_c_out;
  };
  double lo, hi, flo, fhi;
  const double Pe_top = std::min(fl.P_max() * 0.5, fl.P_max());
  if (!scan_bracket(e1, log_grid(fl.P_min() * 1.02, Pe_top, 48), lo, hi, flo, fhi))
    throw Infeasible("closure: no evaporator pressure matches the inlet enthalpy");
  const double Pe = bracket_root(
      [&](double x) {
        try {
          return e1(x);
        } catch (const ModelError&) {
          return x < 0.5 * (lo + hi) ? flo : fhi;
        }
      },
      lo, hi, flo, fhi, "closure P_e");

  return close_condenser(fl, chi, Pe, d, p);
}

}  // namespace

CycleOperatingPoint close_cycle(const Fluid& fl, const Chi& chi, const Disturbances& d,
                                const PlantParams& p, std::optional<double> P_e0,
                                std::optional<double> P_c0, CloseInfo* info) {
  if (!(chi.mdot > 0) || !(chi.h_e_out > chi.h_c_out))
    throw DomainError("closure: need mdot > 0 and h_e,out > h_c,out");
  if (P_e0 && P_c0) {
    // Newton in bar against residuals in kJ/kg.
    Eigen::Vector2d x(*P_e0 / 1e5, *P_c0 / 1e5);
    CycleEval ev;
    bool ok = try_eval(fl, chi, x(0) * 1e5, x(1) * 1e5, d, p, ev);
    for (int k = 0; ok && k < 40; ++k) {
      Eigen::Vector2d r(ev.e_h_e_in / 1e3, ev.e_h_c_in / 1e3);
      if (r.cwiseAbs().maxCoeff() * 1e3 <= kCloseTol) {
        if (info) info->newton_iterations = k;
        return ev.point;
      }
      Eigen::Matrix2d J;
      bool jac_ok = true;
      for (int j = 0; j < 2 && jac_ok; ++j) {
        const double h = 1e-6 * std::max(1.0, x(j));
        Eigen::Vector2d xp = x;
        CycleEval ep;
        xp(j) += h;
        double sgn = 1;
        if (!try_eval(fl, chi, xp(0) * 1e5, xp(1) * 1e5, d, p, ep)) {
          xp(j) = x(j) - h;
          sgn = -1;
          jac_ok = try_eval(fl, chi, xp(0) * 1e5, xp(1) * 1e5, d, p, ep);
        }
        J.col(j) = sgn * (Eigen::Vector2d(ep.e_h_e_in, ep.e_h_c_in) / 1e3 - r) / h;
      }
      if (!jac_ok || std::abs(J.determinant()) < 1e-14) break;
      Eigen::Vector2d dx = -J.partialPivLu().solve(r);
      const double lim_e = 0.3, lim_c = 3.0;
      const double sc = std::max({1.0, std::abs(dx(0)) / lim_e, std::abs(dx(1)) / lim_c});
      dx /= sc;
      bool stepped = false;
      for (double a = 1.0; a > 1e-4; a *= 0.5) {
        CycleEval en;
        const Eigen::Vector2d xn = x + a * dx;
        if (!try_eval(fl, chi, xn(0) * 1e5, xn(1) * 1e5, d, p, en)) continue;
        const double rn =
            std::max(std::abs(en.e_h_e_in), std::abs(en.e_h_c_in)) / 1e3;
        if (rn < r.cwiseAbs().maxCoeff() || a < 1e-3) {
          x = xn;
          ev = en;
          stepped = true;
          break;
        }
      }
      if (!stepped) break;
    }
  }
  if (info) info->used_bracketing = true;
  CycleOperatingPoint pt = close_bracketing(fl, chi, d, p);
  CycleEval ev = evaluate_cycle(fl, chi, pt.P_e, pt.P_c, d, p);
  if (std::abs(ev.e_h_e_in) > 1.0 || std::abs(ev.e_h_c_in) > 1.0)
    throw NoConvergence("closure: residuals above 1 J/kg");
  return pt;
}

const std::vector<std::string>& constraint_names() {
  static const std::vector<std::string> n = {"N_min",    "N_max",   "A_v_min", "A_v_max",
                                             "T_SH_min", "T_SH_max", "P_e_max", "P_c_min",
                                             "CR_min",   "CR_max",  "T_SC_min", "zeta_sh_min"};
  return n;
}

std::vector<double> constraint_values(const Fluid&, const CycleOperatingPoint& pt,
                                      const OptConstraints& c) {
  const double CR = pt.P_c / pt.P_e;
  return {(pt.N - c.N_min) / 10.0,
          (c.N_max - pt.N) / 10.0,
          (pt.A_v - c.A_v_min) / 10.0,
          (c.A_v_max - pt.A_v) / 10.0,
          pt.T_SH - c.T_SH_min,
          c.T_SH_max - pt.T_SH,
          (c.P_e_max - pt.P_e) / 1e5,
          (pt.P_c - c.P_c_min) / 1e5,
          CR - c.CR_min,
          c.CR_max - CR,
          pt.T_SC,
          10.0 * (pt.cond.zeta_c_sh - c.zeta_sh_min)};
}

double max_violation(const Fluid& fl, const CycleOperatingPoint& pt, const OptConstraints& c) {
  double v = 0;
  for (double g : constraint_values(fl, pt, c)) v = std::max(v, -g);
  return v;
}

ReducedBox reduced_box(const Fluid& fl, const Disturbances& d, const OptConstraints& c) {
  const SaturationPoint sc_lo = fl.sat(std::max(c.P_c_min, fl.P_min()));
  const double Pc_hi = std::min(fl.P_max() * 0.9, c.CR_max * c.P_e_max);
  ReducedBox b;
  b.Pe_lo = std::max(fl.P_min() * 1.1, c.P_c_min / c.CR_max);
  b.Pe_hi = std::min(c.P_e_max, fl.P_max());
  b.hc_lo = sc_lo.h_f - sc_lo.cp_f * std::max(1.0, sc_lo.T - d.T_c_sec_in);
  b.hc_hi = fl.sat(Pc_hi).h_f;
  return b;
}

CycleOperatingPoint reduced_point(const Fluid& fl, double Q_e, double P_e, double h_c_out,
                                  const Disturbances& d, const PlantParams& p) {
  if (!(Q_e > 0)) throw DomainError("reduced point: demand must be positive");
  const SaturationPoint se = fl.sat(P_e);
  if (!(h_c_out < se.h_g)) throw DomainError("reduced point: h_c,out above saturated vapour");
  // Duty mismatch as a fraction of demand; negative while the evaporator over-delivers.
  auto g = [&](double he) {
    const double m = Q_e / (he - h_c_out);
    return (evaporator_eval(fl, P_e, m, he, d, p).h_e_in - h_c_out) / (he - h_c_out);
  };
  std::vector<double> hs(40);
  for (int i = 0; i < 40; ++i) hs[i] = se.h_g + se.cp_g * 60.0 * std::pow(i / 39.0, 2) + 1.0;
  double lo, hi, flo, fhi;
  if (!scan_bracket(g, hs, lo, hi, flo, fhi))
    throw Infeasible("reduced point: evaporator cannot deliver the demand at this pressure");
  const double he = bracket_root(
      [&](double x) {
        try {
          return g(x);
        } catch (const ModelError&) {
          return x < 0.5 * (lo + hi) ? flo : fhi;
        }
      },
      lo, hi, flo, fhi, "reduced point h_e,out");
  const Chi chi{he, h_c_out, Q_e / (he - h_c_out)};
  CycleOperatingPoint pt = close_condenser(fl, chi, P_e, d, p);
  // Tighten with the 2-D closure from the staged pressures.
  return close_cycle(fl, pt.chi, d, p, pt.P_e, pt.P_c);
}

namespace {

struct Candidate {
  CycleOperatingPoint pt;
  double viol;
};

bool better(const Candidate& a, const Candidate& b) {
  const bool fa = a.viol <= 1e-9, fb = b.viol <= 1e-9;
  if (fa != fb) return fa;
  if (fa) return a.pt.COP > b.pt.COP;
  return a.viol < b.viol;
}

std::optional<CycleOperatingPoint> run_sqp(const Fluid& fl, double Q_e, const Disturbances& d,
                                           const PlantParams& p, const OptConstraints& c,
                                           const CycleOperatingPoint& start, const SqpOptions& so,
                                           bool& converged) {
  NlpProblem prob;
  prob.n = 5;
  prob.n_eq = 3;
  prob.n_in = static_cast<int>(constraint_names().size());
  prob.max_step = (Eigen::VectorXd(5) << 3.0, 3.0, 0.5, 0.1, 1.0).finished();
  prob.eval = [&](const Eigen::VectorXd& x, double& f, Eigen::VectorXd& ce, Eigen::VectorXd& ci) {
    const Chi chi{x(0) * 1e3, x(1) * 1e3, x(2) * 1e-3};
    CycleEval ev = evaluate_cycle(fl, chi, x(3) * 1e5, x(4) * 1e5, d, p);
    f = -ev.point.COP;
    ce(0) = ev.e_h_e_in / 1e3;
    ce(1) = ev.e_h_c_in / 1e3;
    ce(2) = (ev.point.Q_e - Q_e) / 100.0;
    const auto g = constraint_values(fl, ev.point, c);
    for (std::size_t i = 0; i < g.size(); ++i) ci(static_cast<int>(i)) = g[i];
    return true;
  };
  Eigen::VectorXd x0(5);
  x0 << start.chi.h_e_out / 1e3, start.chi.h_c_out / 1e3, start.chi.mdot * 1e3, start.P_e / 1e5,
      start.P_c / 1e5;
  SqpResult r = sqp_solve(prob, x0, so);
  converged = r.converged;
  // Polish: enforce the demand exactly and close the pressures tightly.
  try {
    Chi chi{r.x(0) * 1e3, r.x(1) * 1e3, 0};
    chi.mdot = Q_e / (chi.h_e_out - chi.h_c_out);
    return close_cycle(fl, chi, d, p, r.x(3) * 1e5, r.x(4) * 1e5);
  } catch (const ModelError&) {
    return std::nullopt;
  }
}

}  // namespace

CycleOperatingPoint optimize_cycle(const Fluid& fl, double Q_e, const Disturbances& d,
                                   const PlantParams& p, const OptConstraints& c,
                                   const OptimizeOptions& o, OptimizeReport* rep) {
  c.validate();
  if (!(Q_e > 0)) throw DomainError("demand must be positive");
  const ReducedBox box = reduced_box(fl, d, c);

  std::vector<Candidate> starts;
  auto consider = [&](double Pe, double hc) {
    try {
      CycleOperatingPoint pt = reduced_point(fl, Q_e, Pe, hc, d, p);
      starts.push_back({pt, max_violation(fl, pt, c)});
    } catch (const ModelError&) {
    }
  };

  if (o.random_starts > 0) {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> ue(box.Pe_lo, box.Pe_hi), uc(box.hc_lo, box.hc_hi);
    for (int tries = 0; tries < 4000 && static_cast<int>(starts.size()) < o.random_starts;
         ++tries) {
      const std::size_t before = starts.size();
      consider(ue(rng), uc(rng));
      if (starts.size() > before && starts.back().viol > 1e-9) starts.pop_back();
    }
  } else {
    for (int i = 0; i < o.scan; ++i)
      for (int j = 0; j < o.scan; ++j)
        consider(box.Pe_lo + (box.Pe_hi - box.Pe_lo) * (i + 0.5) / o.scan,
                 box.hc_lo + (box.hc_hi - box.hc_lo) * (j + 0.5) / o.scan);
    std::sort(starts.begin(), starts.end(), better);
    if (static_cast<int>(starts.size()) > o.starts) starts.resize(o.starts);
  }
  for (const auto& w : o.warm) starts.push_back({w, max_violation(fl, w, c)});
  if (starts.empty())
    throw InfeasibleDemand(fmt::format("no feasible cycle is able to meet {:.1f} W", Q_e));

  std::vector<Candidate> results;
  OptimizeReport report;
  for (const auto& s : starts) {
    bool conv = false;
    auto r = run_sqp(fl, Q_e, d, p, c, s.pt, o.sqp, conv);
    ++report.sqp_runs;
    if (conv) ++report.sqp_converged;
    if (r) {
      results.push_back({*r, max_violation(fl, *r, c)});
      report.start_cops.push_back(r->COP);
    } else {
      report.start_cops.push_back(std::nan(""));
    }
    // A feasible start is itself a candidate, guarding against a poor SQP exit.
    results.push_back(s);
  }
  std::sort(results.begin(), results.end(), better);
  if (results.empty() || results.front().viol > 1e-6)
    throw InfeasibleDemand(fmt::format("no feasible cycle is able to meet {:.1f} W", Q_e));

  CycleOperatingPoint best = results.front().pt;
  const auto g = constraint_values(fl, best, c);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] < 1e-4) best.active.push_back(constraint_names()[i]);
  report.best = best;
  if (rep) *rep = report;
  return best;
}

std::vector<SweepEntry> sweep_demand(const Fluid& fl, const std::vector<double>& demands,
                                     const Disturbances& d, const PlantParams& p,
                                     const OptConstraints& c, const OptimizeOptions& o) {
  if (!std::is_sorted(demands.begin(), demands.end()))
    throw DomainError("sweep: demand grid must be ascending");
  std::vector<SweepEntry> out;
  std::optional<CycleOperatingPoint> prev;
  for (double Q : demands) {
    SweepEntry e;
    e.demand = Q;
    OptimizeOptions oo = o;
    if (prev) {
      // Rescale the previous optimum's flow to the new demand as a warm start.
      try {
        oo.warm.push_back(reduced_point(fl, Q, prev->P_e, prev->chi.h_c_out, d, p));
      } catch (const ModelError&) {
      }
    }
    try {
      e.point = optimize_cycle(fl, Q, d, p, c, oo);
      e.ok = true;
      prev = e.point;
    } catch (const ModelError& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace vcr

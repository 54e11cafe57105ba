#include "vcr/controllability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "roots.hpp"
#include "vcr/errors.hpp"

namespace vcr {

namespace {

// Rows of B_c in bar, -, 10 kJ/kg.
const Eigen::Vector3d kRankScale{1e-5, 1.0, 1e-4};
// Phase-plane units: bar, -, J/kg.
const Eigen::Vector3d kPlaneScale{1e-5, 1.0, 1.0};

}  // namespace

int numerical_rank(const Eigen::MatrixXd& A, double rel) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

LinearControllability linear_controllability(const Fluid& fl, const CondenserState& x,
                                             const CondenserInputs& w, const PlantParams& p,
                                             double rel_threshold) {
  const StateDerivative sd = state_derivative(fl, x, w, p);
  LinearControllability out;
  out.B_c = sd.B_c;
  const Eigen::Matrix<double, 3, 2> Bs = kRankScale.asDiagonal() * sd.B_c;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Bs);
  out.singular_values = svd.singularValues();
  out.rank = numerical_rank(Bs, rel_threshold);
  // A = 0: the controllability matrix is [B, 0, 0].
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3, 6);
  C.leftCols(2) = Bs;
  out.controllability_rank = numerical_rank(C, rel_threshold);
  return out;
}

ReducedDirections reduce_with(const Eigen::Matrix<double, 3, 2>& n, double f_c2,
                              HeldState held) {
  const int k = static_cast<int>(held);
  const double nk1 = n(k, 0), nk2 = n(k, 1);
  const double scale = std::max(n.col(0).cwiseAbs().maxCoeff(), 1e-300);
  if (std::abs(nk1) < 1e-14 * scale)
    throw DegenerateDirection("held component has no authority from the first virtual input");
  ReducedDirections r;
  r.n = n;
  r.held = held;
  r.f_c2 = f_c2;
  r.f_c1 = -nk2 / nk1 * f_c2;
  double dd[2];
  for (int i = 0, j = 0; i < 3; ++i)
    if (i != k) dd[j++] = n(i, 1) - nk2 / nk1 * n(i, 0);
  r.d1 = dd[0];
  r.d2 = dd[1];
  return r;
}

ReducedDirections reduce_holding(const Fluid& fl, const CondenserState& x,
                                 const CondenserInputs& w, const PlantParams& p,
                                 HeldState held) {
  const StateDerivative sd = state_derivative(fl, x, w, p);
  const Eigen::Matrix<double, 3, 2> n = kPlaneScale.asDiagonal() * sd.B_c;
  return reduce_with(n, sd.v(1), held);
}

std::vector<StartPoint> equilibrium_starts(const Fluid& fl, const CycleOperatingPoint& opt,
                                           const std::vector<double>& demand_offsets,
                                           const std::vector<double>& pressure_offsets,
                                           const Disturbances& d, const PlantParams& p) {
  std::vector<StartPoint> out;
  for (double a : demand_offsets)
    for (double b : pressure_offsets) {
      try {
        const CycleOperatingPoint q =
            reduced_point(fl, opt.Q_e * (1 + a), opt.P_e * (1 + b), opt.chi.h_c_out, d, p);
        out.push_back({condenser_state_of(q), actuators_of(q)});
      } catch (const ModelError&) {
        // Offsets outside the closable region are skipped.
      }
    }
  return out;
}

double holding_valve(const Fluid& fl, const CondenserState& x, double N, double A_v_guess,
                     const Disturbances& d, const PlantParams& p, const SlopeStudyConfig& c) {
  const int k = static_cast<int>(c.held);
  auto rate = [&](double A_v) {
    const Coupling cp = couple(fl, x, {N, A_v}, d, p);
    return state_derivative(fl, x, {d.mdot_c_sec, d.T_c_sec_in, cp.mdot, cp.comp.h_c_in}, p)
        .xdot(k);
  };
  auto safe = [&](double A_v, double& r) {
    try {
      r = rate(A_v);
      return std::isfinite(r);
    } catch (const ModelError&) {
      return false;
    }
  };
  // Walk outwards from the guess in both directions until the sign flips.
  const double g = std::clamp(A_v_guess, c.A_v_min, c.A_v_max);
  double r0;
  if (!safe(g, r0)) throw NoConvergence("holding valve: model fails at the guess");
  if (r0 == 0) return g;
  for (double step = 0.25; step < c.A_v_max - c.A_v_min; step *= 1.6) {
    for (int sgn : {-1, 1}) {
      const double a = std::clamp(g + sgn * step, c.A_v_min, c.A_v_max);
      double ra;
      if (a == g || !safe(a, ra)) continue;
      if ((ra > 0) != (r0 > 0))
        return detail::bracket_root(rate, std::min(a, g), std::max(a, g), a < g ? ra : r0,
                                    a < g ? r0 : ra, "holding valve", 200, 52);
    }
  }
  throw NoConvergence(fmt::format("holding valve: no opening holds the state at N={}", N));
}

std::vector<SlopeStats> subspace_slope_study(const Fluid& fl,
                                             const std::vector<StartPoint>& starts,
                                             const CondenserState& reference,
                                             const Disturbances& d, const PlantParams& p,
                                             const SlopeStudyConfig& c) {
  if (c.samples < 2) throw DomainError("slope study: need at least 2 samples per start point");
  std::vector<SlopeStats> out;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const StartPoint& sp = starts[s];
    SlopeStats st;
    st.start_id = static_cast<int>(s);
    st.psi = kPlaneScale.cwiseProduct(sp.x.vec() - reference.vec());
    double lo = c.N_min, hi = c.N_max;
    if (c.N_window > 0) {
      lo = std::max(c.N_min, sp.u.N - c.N_window);
      hi = std::min(c.N_max, sp.u.N + c.N_window);
    }
    if (lo > hi) {
      // The start needs a speed outside the actuator range.
      st.failures = c.samples;
      out.push_back(st);
      continue;
    }
    std::vector<double> slopes;
    double A_v = sp.u.A_v;
    for (int i = 0; i < c.samples; ++i) {
      const double N = lo + (hi - lo) * i / (c.samples - 1);
      try {
        A_v = holding_valve(fl, sp.x, N, A_v, d, p, c);
        const Coupling cp = couple(fl, sp.x, {N, A_v}, d, p);
        const ReducedDirections r = reduce_holding(
            fl, sp.x, {d.mdot_c_sec, d.T_c_sec_in, cp.mdot, cp.comp.h_c_in}, p, c.held);
        const double sl = r.slope();
        if (!std::isfinite(sl)) throw DegenerateDirection("infinite slope");
        slopes.push_back(sl);
      } catch (const ModelError&) {
        ++st.failures;
        A_v = sp.u.A_v;
      }
    }
    st.samples = static_cast<int>(slopes.size());
    if (!slopes.empty()) {
      double m = 0;
      for (double v : slopes) m += v;
      m /= slopes.size();
      double v2 = 0;
      for (double v : slopes) v2 += (v - m) * (v - m);
      st.mean = m;
      st.stddev = std::sqrt(v2 / slopes.size());
    }
    out.push_back(st);
  }
  return out;
}

void write_phase_portrait_csv(const std::string& path, const std::vector<SlopeStats>& stats,
                              double span) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << "start_id,psi1,psi2,slope,direction\n";
  for (const auto& s : stats) {
    // Start point, then the two ends of its line.
    os << fmt::format("{},{:.10g},{:.10g},{:.10g},0\n", s.start_id, s.psi(0), s.psi(1), s.mean);
    for (int dir : {-1, 1})
      os << fmt::format("{},{:.10g},{:.10g},{:.10g},{}\n", s.start_id, s.psi(0) + dir * span,
                        s.psi(1) + dir * span * s.mean, s.mean, dir);
  }
}

}  // namespace vcr

#include "vcr/refprops.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vcr/errors.hpp"

namespace vcr {

namespace {

// Value and d/du of a power series in u.
inline void poly(const std::vector<double>& c, double u, double& y, double& dy) {
  y = 0;
  dy = 0;
  for (std::size_t k = c.size(); k-- > 0;) {
    dy = dy * u + y;
    y = y * u + c[k];
  }
}

}  // namespace

CorrelationFluid::Coefficients CorrelationFluid::builtin() {
  // Least-squares fit to a reference R404A equation of state over
  // 0.5..30 bar, degree 8; regenerate with tools/fit_r404a.py.
  Coefficients c;
  c.T_sat = {259.53947846383647, 57.965195464147861, 14.319880818637296, 3.0398541013924438, 0.33461674153884613, 0.026552911400108178, 0.041155480331917203, -0.16688761612337877, -0.13956709855289767};
  c.h_f = {181453.41239771462, 77514.142085214291, 24478.855628805359, 9635.3460418480499, 5128.8974573127125, -1786.2901384527279, -3450.4297786022021, 3977.5880243058637, 4035.3355485526718};
  c.h_g = {358995.36088887847, 31564.318551864257, 3273.6646261207306, -5296.1041432380498, -6599.1717450680144, 3433.3033975323106, 5949.3724182806664, -6973.3460218873033, -7026.5671438137479};
  c.s_f = {931.07040729675009, 296.20057637753342, 58.645372178597171, 19.566896171355722, 11.264913113603368, -5.99193992534933, -10.015054238202845, 10.970687161628238, 11.25087014104979};
  c.ln_rho_f = {7.0897565663287292, -0.16815839015212553, -0.07836446224709849, -0.066107833224072682, -0.062341330301116216, 0.039478442088257716, 0.064062481348050399, -0.06880325426652277, -0.070957228131921193};
  c.ln_rho_g = {2.9824620284780052, 1.9981245232326561, 0.10026739661913671, 0.1092428026599262, 0.099395748163913222, -0.057981660678497533, -0.095984409857819461, 0.10463997682113588, 0.10746820075144763};
  c.cp_f = {1320.4846149927675, 167.97069852424184, 104.12532593682161, 205.12479459856834, 276.32838086729697, -287.48441006823242, -421.39246645849846, 379.38286268312788, 412.28713317431766};
  c.cp_g = {899.36715927071396, 240.2340967765723, 124.19382639711675, 156.2076864308288, 174.1017792920363, -142.7080704669014, -211.42179658877765, 226.34160282132893, 232.21159396635366};
  c.cv_g = {766.01384715502923, 172.95624466515096, 64.170734060398459, 37.90892200792986, 28.096054576322004, -22.433937506561932, -32.055672364552841, 34.922582154764605, 35.546839921605844};
  c.mid = 12.866950565521334;
  c.half = 2.0471722811110507;
  return c;
}

CorrelationFluid::CorrelationFluid() : CorrelationFluid(builtin()) {}

CorrelationFluid::CorrelationFluid(Coefficients c) : c_(std::move(c)) {
  if (!(c_.P_min > 0 && c_.P_max > c_.P_min))
    throw ConfigError("fluid: need 0 < P_min < P_max");
  if (!(c_.half > 0)) throw ConfigError("fluid: half must be positive");
  for (auto* v : {&c_.T_sat, &c_.h_f, &c_.h_g, &c_.s_f, &c_.ln_rho_f, &c_.ln_rho_g,
                  &c_.cp_f, &c_.cp_g, &c_.cv_g})
    if (v->empty()) throw ConfigError("fluid: empty coefficient list");
}

void CorrelationFluid::check_P(double P) const {
  if (!(P >= c_.P_min && P <= c_.P_max))
    throw OutOfRange(fmt::format("pressure {:.6g} Pa outside [{:.6g}, {:.6g}]", P,
                                 c_.P_min, c_.P_max));
}

SaturationPoint CorrelationFluid::sat(double P) const {
  check_P(P);
  const double u = (std::log(P) - c_.mid) / c_.half;
  const double du = 1.0 / (c_.half * P);
  SaturationPoint s;
  s.P = P;
  double d;
  poly(c_.T_sat, u, s.T, d);
  s.dT_dP = d * du;
  poly(c_.h_f, u, s.h_f, d);
  s.dh_f_dP = d * du;
  poly(c_.h_g, u, s.h_g, d);
  s.dh_g_dP = d * du;
  poly(c_.s_f, u, s.s_f, d);
  s.ds_f_dP = d * du;
  double l;
  poly(c_.ln_rho_f, u, l, d);
  s.rho_f = std::exp(l);
  s.drho_f_dP = s.rho_f * d * du;
  poly(c_.ln_rho_g, u, l, d);
  s.rho_g = std::exp(l);
  s.drho_g_dP = s.rho_g * d * du;
  poly(c_.cp_f, u, s.cp_f, d);
  s.dcp_f_dP = d * du;
  poly(c_.cp_g, u, s.cp_g, d);
  s.dcp_g_dP = d * du;
  poly(c_.cv_g, u, s.cv_g, d);

  // Vapour entropy from the Clapeyron-consistent latent term.
  const double L = s.h_g - s.h_f;
  s.s_g = s.s_f + L / s.T;
  s.ds_g_dP = s.ds_f_dP + (s.dh_g_dP - s.dh_f_dP) / s.T - L * s.dT_dP / (s.T * s.T);
  return s;
}

ThermoState CorrelationFluid::state_Ph(double P, double h) const {
  const SaturationPoint sp = sat(P);
  if (!std::isfinite(h)) throw NonPhysical("non-finite enthalpy");
  ThermoState st;
  st.P = P;
  st.h = h;
  if (h > sp.h_g) {
    const double T = sp.T + (h - sp.h_g) / sp.cp_g;
    if (T - sp.T > c_.superheat_max)
      throw OutOfRange(fmt::format("enthalpy {:.6g} J/kg above superheat window at {:.6g} Pa", h, P));
    st.region = Region::superheated;
    st.T = T;
    st.rho = sp.rho_g * sp.T / T;
    st.s = sp.s_g + sp.cp_g * std::log(T / sp.T);
  } else if (h < sp.h_f) {
    const double T = sp.T + (h - sp.h_f) / sp.cp_f;
    if (T < c_.T_floor)
      throw NonPhysical(fmt::format("enthalpy {:.6g} J/kg below subcooled floor at {:.6g} Pa", h, P));
    st.region = Region::subcooled;
    st.T = T;
    st.rho = sp.rho_f * std::exp(c_.beta * (sp.h_f - h));
    st.s = sp.s_f + sp.cp_f * std::log(T / sp.T);
  } else {
    st.region = Region::two_phase;
    st.q = (h - sp.h_f) / (sp.h_g - sp.h_f);
    st.T = sp.T;
    const double v = (1.0 - st.q) / sp.rho_f + st.q / sp.rho_g;
    st.rho = 1.0 / v;
    st.s = sp.s_f + st.q * (sp.s_g - sp.s_f);
  }
  st.v = 1.0 / st.rho;
  return st;
}

ThermoState CorrelationFluid::state_Ps(double P, double s) const {
  const SaturationPoint sp = sat(P);
  if (!std::isfinite(s)) throw NonPhysical("non-finite entropy");
  double h;
  if (s > sp.s_g) {
    const double T = sp.T * std::exp((s - sp.s_g) / sp.cp_g);
    h = sp.h_g + sp.cp_g * (T - sp.T);
  } else if (s < sp.s_f) {
    const double T = sp.T * std::exp((s - sp.s_f) / sp.cp_f);
    h = sp.h_f + sp.cp_f * (T - sp.T);
  } else {
    const double q = (s - sp.s_f) / (sp.s_g - sp.s_f);
    h = sp.h_f + q * (sp.h_g - sp.h_f);
  }
  return state_Ph(P, h);
}

double CorrelationFluid::drho_dh(double P, double h) const {
  const SaturationPoint sp = sat(P);
  const ThermoState st = state_Ph(P, h);
  switch (st.region) {
    case Region::superheated:
      return -st.rho / (st.T * sp.cp_g);
    case Region::subcooled:
      return -c_.beta * st.rho;
    case Region::two_phase:
    default: {
      const double dv_dh = (1.0 / sp.rho_g - 1.0 / sp.rho_f) / (sp.h_g - sp.h_f);
      return -st.rho * st.rho * dv_dh;
    }
  }
}

double CorrelationFluid::drho_dP(double P, double h) const {
  const SaturationPoint sp = sat(P);
  const ThermoState st = state_Ph(P, h);
  switch (st.region) {
    case Region::superheated: {
      const double dT = sp.dT_dP - sp.dh_g_dP / sp.cp_g -
                        (h - sp.h_g) * sp.dcp_g_dP / (sp.cp_g * sp.cp_g);
      return (sp.drho_g_dP * sp.T + sp.rho_g * sp.dT_dP) / st.T - st.rho * dT / st.T;
    }
    case Region::subcooled:
      return st.rho * (sp.drho_f_dP / sp.rho_f + c_.beta * sp.dh_f_dP);
    case Region::two_phase:
    default: {
      const double L = sp.h_g - sp.h_f;
      const double dq = (-sp.dh_f_dP * L - (h - sp.h_f) * (sp.dh_g_dP - sp.dh_f_dP)) / (L * L);
      const double vf = 1.0 / sp.rho_f, vg = 1.0 / sp.rho_g;
      const double dvf = -sp.drho_f_dP * vf * vf, dvg = -sp.drho_g_dP * vg * vg;
      const double dv = dvf + dq * (vg - vf) + st.q * (dvg - dvf);
      return -st.rho * st.rho * dv;
    }
  }
}

CorrelationFluid CorrelationFluid::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fluid file: " + path);
  Coefficients c = builtin();
  std::map<std::string, std::vector<double>*> lists = {
      {"T_sat", &c.T_sat}, {"h_f", &c.h_f},         {"h_g", &c.h_g},
      {"s_f", &c.s_f},     {"ln_rho_f", &c.ln_rho_f}, {"ln_rho_g", &c.ln_rho_g},
      {"cp_f", &c.cp_f},   {"cp_g", &c.cp_g},       {"cv_g", &c.cv_g}};
  std::map<std::string, double*> scalars = {
      {"P_min", &c.P_min}, {"P_max", &c.P_max},   {"mid", &c.mid},
      {"half", &c.half},   {"beta", &c.beta},     {"T_floor", &c.T_floor},
      {"superheat_max", &c.superheat_max}};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto p = line.find('#'); p != std::string::npos) line.erase(p);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError(fmt::format("{}:{}: expected key = value", path, lineno));
      continue;
    }
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t\r") + 1);
    std::istringstream vals(line.substr(eq + 1));
    std::vector<double> xs;
    double x;
    while (vals >> x) xs.push_back(x);
    if (!vals.eof()) throw ConfigError(fmt::format("{}:{}: bad number for key '{}'", path, lineno, key));
    if (auto it = lists.find(key); it != lists.end()) {
      if (xs.empty()) throw ConfigError(fmt::format("{}: key '{}' has no coefficients", path, key));
      *it->second = xs;
    } else if (auto is = scalars.find(key); is != scalars.end()) {
      if (xs.size() != 1) throw ConfigError(fmt::format("{}: key '{}' needs one value", path, key));
      *is->second = xs[0];
    } else {
      throw ConfigError(fmt::format("{}: unknown key '{}'", path, key));
    }
  }
  return CorrelationFluid(std::move(c));
}

std::shared_ptr<const Fluid> default_fluid() {
  static const auto f = std::make_shared<const CorrelationFluid>();
  return f;
}

}  // namespace vcr

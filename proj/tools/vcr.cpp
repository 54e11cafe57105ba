// Scenario-driven front end. Every run writes CSV artifacts plus manifest.json
// into the output directory; exit 0 ok, 2 configuration error, 3 model failure.
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "vcr/closedloop.hpp"
#include "vcr/controllability.hpp"
#include "vcr/cycle.hpp"
#include "vcr/dynmodel.hpp"
#include "vcr/errors.hpp"
#include "vcr/metrics.hpp"

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using json = nlohmann::json;
using namespace vcr;

namespace {

constexpr const char* kVersion = "1.0.0";

const std::vector<std::string> kKinds = {"props",          "steady",         "optimize", "sweep",
                                         "simulate", "controllability", "closedloop"};

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, in.gcount());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  EVP_DigestFinal_ex(ctx, md, &n);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned i = 0; i < n; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Typed access to the INI tree; every failure names section.key.
class Config {
 public:
  Config() = default;
  explicit Config(pt::ptree t) : t_(std::move(t)) {}

  bool has(const std::string& key) const { return t_.get_optional<std::string>(key).has_value(); }

  std::string str(const std::string& key, const std::string& def) const {
    return t_.get<std::string>(key, def);
  }
  std::string str(const std::string& key) const {
    auto v = t_.get_optional<std::string>(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  }

  double num(const std::string& key, double def) const { return has(key) ? num(key) : def; }
  double num(const std::string& key) const { return parse(key, str(key)); }

  int integer(const std::string& key, int def) const {
    const double v = num(key, def);
    if (v != static_cast<int>(v)) throw ConfigError("key '" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  std::vector<double> list(const std::string& key, std::vector<double> def = {}) const {
    if (!has(key)) return def;
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string tok;
    while (ss >> tok) out.push_back(parse(key, tok));
    return out;
  }

  std::vector<std::string> words(const std::string& key, std::vector<std::string> def = {}) const {
    if (!has(key)) return def;
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }

  const pt::ptree& tree() const { return t_; }
  pt::ptree& tree() { return t_; }

 private:
  static double parse(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size())
      throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    return x;
  }
  pt::ptree t_;
};

struct Scenario {
  std::string kind;
  std::string source;  // scenario file, may be empty
  fs::path base = ".";
  std::string params, fluid;
  std::string out = "out";
  unsigned seed = 1;
  Config cfg;
};

Scenario load_scenario(const std::string& path) {
  Scenario s;
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigError("scenario file not found: " + path);
    pt::ptree t;
    try {
      pt::read_ini(path, t);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(std::string("scenario: ") + e.what());
    }
    s.cfg = Config(t);
    s.source = path;
    s.base = fs::path(path).parent_path();
  }
  s.kind = s.cfg.str("scenario.kind", "");
  auto rel = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (s.base / p).lexically_normal().string();
  };
  s.params = rel(s.cfg.str("scenario.params", ""));
  s.fluid = rel(s.cfg.str("scenario.fluid", ""));
  s.out = s.cfg.str("scenario.out", s.out);
  s.seed = static_cast<unsigned>(s.cfg.integer("scenario.seed", 1));
  return s;
}

struct Context {
  std::shared_ptr<const Fluid> fl;
  PlantParams p;
  Disturbances d;
  OptConstraints c;
  fs::path out;
  unsigned seed = 1;
  std::string stage = "setup";
  std::vector<std::string> artifacts;

  std::string file(const std::string& name) {
    artifacts.push_back(name);
    const fs::path f = out / name;
    fs::create_directories(f.parent_path());
    return f.string();
  }
};

Context make_context(const Scenario& s) {
  Context cx;
  if (!s.params.empty() && !fs::exists(s.params))
    throw ConfigError("scenario.params: file not found: " + s.params);
  if (!s.fluid.empty() && !fs::exists(s.fluid))
    throw ConfigError("scenario.fluid: file not found: " + s.fluid);
  cx.p = s.params.empty() ? PlantParams{} : load_params(s.params);
  cx.fl = s.fluid.empty() ? default_fluid()
                          : std::make_shared<CorrelationFluid>(CorrelationFluid::from_file(s.fluid));
  if (auto sec = s.cfg.tree().get_child_optional("disturbances"))
    for (const auto& [k, v] : *sec) apply_disturbance(cx.d, k, s.cfg.num("disturbances." + k));
  cx.d.validate();
  if (auto sec = s.cfg.tree().get_child_optional("constraints")) {
    const Config& g = s.cfg;
    for (const auto& [k, v] : *sec) {
      const std::string key = "constraints." + k;
      if (k == "N_min") cx.c.N_min = g.num(key);
      else if (k == "N_max") cx.c.N_max = g.num(key);
      else if (k == "A_v_min") cx.c.A_v_min = g.num(key);
      else if (k == "A_v_max") cx.c.A_v_max = g.num(key);
      else if (k == "T_SH_min") cx.c.T_SH_min = g.num(key);
      else if (k == "T_SH_max") cx.c.T_SH_max = g.num(key);
      else if (k == "P_e_max") cx.c.P_e_max = g.num(key);
      else if (k == "P_c_min") cx.c.P_c_min = g.num(key);
      else throw ConfigError("unknown key '" + key + "'");
    }
  }
  cx.c.validate();
  cx.out = s.out;
  cx.seed = s.seed;
  return cx;
}

std::string ref_text(const CycleOperatingPoint& o) {
  return fmt::format("P_e {:.4f} bar, P_c {:.3f} bar, T_e,sec,out {:.2f} C, N {:.2f} Hz, A_v {:.2f} %, COP {:.4f}",
                     o.P_e / 1e5, o.P_c / 1e5, o.T_e_sec_out - 273.15, o.N, o.A_v, o.COP);
}

constexpr const char* kPointHeader =
    "demand,h_e_out,h_c_out,mdot,P_e,P_c,T_e_sec_out,N,A_v,Q_e,W_comp,COP,h_c_in,T_SH,T_SC,active";

std::string point_row(double demand, const CycleOperatingPoint& o) {
  std::string act;
  for (const auto& a : o.active) act += (act.empty() ? "" : ";") + a;
  return fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                     "{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{}",
                     demand, o.chi.h_e_out, o.chi.h_c_out, o.chi.mdot, o.P_e, o.P_c, o.T_e_sec_out,
                     o.N, o.A_v, o.Q_e, o.W_comp, o.COP, o.h_c_in, o.T_SH, o.T_SC, act);
}

OptimizeOptions optimize_options(const Scenario& s, const Context& cx) {
  OptimizeOptions o;
  o.scan = s.cfg.integer("optimize.scan", o.scan);
  o.starts = s.cfg.integer("optimize.starts", o.starts);
  o.random_starts = s.cfg.integer("optimize.random_starts", 0);
  if (o.random_starts > 0) o.seed = cx.seed;
  return o;
}

// ---- kinds ------------------------------------------------------------------

void run_props(const Scenario& s, Context& cx) {
  cx.stage = "props";
  const auto P = s.cfg.list("props.pressures", {1e5, 5e5, 10e5, 15e5, 20e5});
  const auto h = s.cfg.list("props.enthalpies", {});
  std::ofstream sat(cx.file("saturation.csv"));
  sat << "P,T_sat,h_f,h_g,rho_f,rho_g,s_f,s_g\n";
  for (double p : P) {
    const auto sp = cx.fl->sat(p);
    sat << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", p, sp.T,
                       sp.h_f, sp.h_g, sp.rho_f, sp.rho_g, sp.s_f, sp.s_g);
    std::cout << fmt::format("P {:7.3f} bar  T_sat {:7.2f} C  h_f {:7.2f}  h_g {:7.2f} kJ/kg\n",
                             p / 1e5, sp.T - 273.15, sp.h_f / 1e3, sp.h_g / 1e3);
  }
  if (!h.empty()) {
    std::ofstream st(cx.file("states.csv"));
    st << "P,h,T,rho,s,quality,region\n";
    const char* names[] = {"subcooled", "two_phase", "superheated"};
    for (double p : P)
      for (double hh : h) {
        const auto t = cx.fl->state_Ph(p, hh);
        st << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{}\n", p, hh, t.T, t.rho,
                          t.s, t.q, names[static_cast<int>(t.region)]);
      }
  }
}

void run_steady(const Scenario& s, Context& cx) {
  cx.stage = "close_cycle";
  Chi chi{s.cfg.num("steady.h_e_out"), s.cfg.num("steady.h_c_out"), s.cfg.num("steady.mdot")};
  const auto o = close_cycle(*cx.fl, chi, cx.d, cx.p);
  std::ofstream os(cx.file("steady.csv"));
  os << kPointHeader << "\n" << point_row(o.Q_e, o) << "\n";
  std::cout << ref_text(o) << "\n";
}

void run_optimize(const Scenario& s, Context& cx) {
  cx.stage = "optimize";
  const double demand = s.cfg.num("optimize.demand");
  OptimizeReport rep;
  const auto o = optimize_cycle(*cx.fl, demand, cx.d, cx.p, cx.c, optimize_options(s, cx), &rep);
  std::ofstream os(cx.file("optimum.csv"));
  os << kPointHeader << "\n" << point_row(demand, o) << "\n";
  std::cout << fmt::format("{:.1f} W: {} ({} of {} SQP runs converged)\n", demand, ref_text(o),
                           rep.sqp_converged, rep.sqp_runs);
}

void run_sweep(const Scenario& s, Context& cx) {
  cx.stage = "sweep";
  std::vector<double> demands = s.cfg.list("sweep.demands");
  if (demands.empty()) {
    const double lo = s.cfg.num("sweep.demand_min"), hi = s.cfg.num("sweep.demand_max");
    const int n = s.cfg.integer("sweep.count", 20);
    if (n < 2 || !(hi > lo)) throw ConfigError("sweep: need count >= 2 and demand_max > demand_min");
    for (int i = 0; i < n; ++i) demands.push_back(lo + (hi - lo) * i / (n - 1));
  }
  const auto rows = sweep_demand(*cx.fl, demands, cx.d, cx.p, cx.c, optimize_options(s, cx));
  std::ofstream os(cx.file("sweep.csv"));
  os << "demand,ok,COP,T_SH,P_e,P_c,mdot,N,A_v,h_e_out,h_c_out,error\n";
  int ok = 0;
  for (const auto& r : rows) {
    const auto& o = r.point;
    ok += r.ok;
    if (r.ok)
      os << fmt::format("{:.10g},1,{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},\n",
                        r.demand, o.COP, o.T_SH, o.P_e, o.P_c, o.chi.mdot, o.N, o.A_v, o.chi.h_e_out,
                        o.chi.h_c_out);
    else
      os << fmt::format("{:.10g},0,,,,,,,,,,\"{}\"\n", r.demand, r.error);
    std::cout << (r.ok ? fmt::format("{:7.1f} W  COP {:.4f}  N {:5.2f} Hz  A_v {:5.2f} %  T_SH {:5.2f} K\n",
                                     r.demand, o.COP, o.N, o.A_v, o.T_SH)
                       : fmt::format("{:7.1f} W  infeasible: {}\n", r.demand, r.error));
  }
  if (ok == 0) throw InfeasibleDemand("sweep: no demand was feasible");
}

CycleOperatingPoint optimum_for(const Scenario& s, Context& cx, const std::string& section,
                                double def_demand) {
  cx.stage = "optimize";
  const double demand = s.cfg.num(section + ".demand", def_demand);
  return optimize_cycle(*cx.fl, demand, cx.d, cx.p, cx.c, optimize_options(s, cx));
}

void run_simulate(const Scenario& s, Context& cx) {
  const auto opt = optimum_for(s, cx, "simulate", 600);
  const auto times = s.cfg.list("simulate.step_times");
  const auto dN = s.cfg.list("simulate.N_offsets", std::vector<double>(times.size(), 0.0));
  const auto dA = s.cfg.list("simulate.A_v_offsets", std::vector<double>(times.size(), 0.0));
  if (dN.size() != times.size() || dA.size() != times.size())
    throw ConfigError("simulate: step_times, N_offsets and A_v_offsets need equal lengths");
  InputProfile u;
  u.values.push_back(actuators_of(opt));
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > u.times.back())) throw ConfigError("simulate.step_times must increase");
    u.times.push_back(times[i]);
    u.values.push_back({opt.N + dN[i], opt.A_v + dA[i]});
  }
  SimOptions so;
  so.rtol = s.cfg.num("simulate.rtol", so.rtol);
  const double t_end = s.cfg.num("simulate.t_end", 1800), dt = s.cfg.num("simulate.dt", 5);
  cx.stage = "simulate";
  const auto tr = simulate(*cx.fl, condenser_state_of(opt), u, DistProfile::constant(cx.d), cx.p,
                           t_end, dt, so);
  write_trajectory_csv(cx.file("trajectory.csv"), tr.samples);
  const auto& e = tr.samples.back();
  std::cout << fmt::format("start: {}\nend:   P_e {:.4f} bar, P_c {:.3f} bar, COP {:.4f}; {} steps, max cond {:.3g}\n",
                           ref_text(opt), e.P_e / 1e5, e.x.P_c / 1e5, e.COP, tr.stats.accepted,
                           tr.max_cond);
}

HeldState held_state(const std::string& w) {
  if (w == "pressure") return HeldState::pressure;
  if (w == "zeta") return HeldState::zeta;
  if (w == "enthalpy") return HeldState::enthalpy;
  throw ConfigError("controllability.held must be pressure, zeta or enthalpy");
}

void run_controllability(const Scenario& s, Context& cx) {
  const auto opt = optimum_for(s, cx, "controllability", 400);
  cx.stage = "start points";
  const auto starts = equilibrium_starts(
      *cx.fl, opt, s.cfg.list("controllability.demand_offsets", {-0.1, 0, 0.1}),
      s.cfg.list("controllability.pressure_offsets", {-0.04, 0, 0.04}), cx.d, cx.p);
  SlopeStudyConfig sc;
  sc.samples = s.cfg.integer("controllability.samples", sc.samples);
  sc.N_window = s.cfg.num("controllability.N_window", sc.N_window);
  sc.held = held_state(s.cfg.str("controllability.held", "enthalpy"));
  sc.N_min = cx.c.N_min, sc.N_max = cx.c.N_max, sc.A_v_min = cx.c.A_v_min, sc.A_v_max = cx.c.A_v_max;

  cx.stage = "rank";
  std::ofstream rk(cx.file("rank.csv"));
  rk << "start_id,P_c,zeta_c_sc,h_c_sc,sigma_1,sigma_2,rank\n";
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto st = evaluate_state(*cx.fl, starts[i].x, starts[i].u, cx.d, cx.p);
    const CondenserInputs w{cx.d.mdot_c_sec, cx.d.T_c_sec_in, st.mdot, st.h_c_in};
    const auto lc = linear_controllability(*cx.fl, starts[i].x, w, cx.p);
    rk << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.6g},{:.6g},{}\n", i, starts[i].x.P_c,
                      starts[i].x.zeta_c_sc, starts[i].x.h_c_sc, lc.singular_values(0),
                      lc.singular_values(1), lc.rank);
  }

  cx.stage = "slope study";
  const auto stats = subspace_slope_study(*cx.fl, starts, condenser_state_of(opt), cx.d, cx.p, sc);
  std::ofstream sl(cx.file("slopes.csv"));
  sl << "start_id,psi1,psi2,psi3,mean,stddev,rel_std,samples,failures\n";
  for (const auto& st : stats) {
    sl << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.6g},{:.6g},{},{}\n", st.start_id,
                      st.psi(0), st.psi(1), st.psi(2), st.mean, st.stddev, st.rel_std(), st.samples,
                      st.failures);
    std::cout << fmt::format("start {}: slope {:.5g}  rel std {:.3g}  ({} samples, {} failed)\n",
                             st.start_id, st.mean, st.rel_std(), st.samples, st.failures);
  }
  write_phase_portrait_csv(cx.file("phase_portrait.csv"), stats,
                           s.cfg.num("controllability.span", 0.5));
}

void run_closedloop(const Scenario& s, Context& cx) {
  const auto opt = optimum_for(s, cx, "closedloop", 600);
  const auto ctrls = s.cfg.words("closedloop.controller", {"pnmpc"});
  const auto tunings = s.cfg.words("closedloop.tuning", {"q1"});
  const std::string ip = s.cfg.str("closedloop.initial", "ip1");

  Experiment e;
  if (ip == "ip1") e.start = kIp1;
  else if (ip == "ip2") e.start = kIp2;
  else if (ip == "opt") e.start_at_optimum = true;
  else if (ip == "custom")
    e.start = {s.cfg.num("closedloop.N"), s.cfg.num("closedloop.dA_v"), s.cfg.num("closedloop.dh_c_out")};
  else throw ConfigError("closedloop.initial must be ip1, ip2, opt or custom");
  e.loop.t_end = s.cfg.num("closedloop.t_end", e.loop.t_end);
  e.loop.t_close = s.cfg.num("closedloop.t_close", e.loop.t_close);
  e.loop.dt = s.cfg.num("closedloop.dt", e.loop.dt);
  e.pnmpc.dt = e.loop.dt;
  e.pnmpc.N_p = s.cfg.integer("pnmpc.N_p", e.pnmpc.N_p);
  e.pnmpc.N_c = s.cfg.integer("pnmpc.N_c", e.pnmpc.N_c);
  e.pnmpc.slack_weight = s.cfg.num("pnmpc.slack_weight", e.pnmpc.slack_weight);
  e.pnmpc.fd_delta = s.cfg.num("pnmpc.fd_delta", e.pnmpc.fd_delta);
  e.pnmpc.output_constraints = s.cfg.integer("pnmpc.output_constraints", 1) != 0;
  e.pnmpc.u_min = {cx.c.N_min, cx.c.A_v_min};
  e.pnmpc.u_max = {cx.c.N_max, cx.c.A_v_max};
  e.awu_gain = s.cfg.num("fbff.awu_gain", e.awu_gain);
  e.excitation.samples = s.cfg.integer("fbff.excitation_samples", e.excitation.samples);
  e.seed = cx.seed;
  e.demand = opt.Q_e;

  const bool many = ctrls.size() * tunings.size() > 1;
  std::ofstream sm(cx.file("summary.csv"));
  sm << "run,controller,tuning,settle_P_e,settle_P_c,settle_T_e_sec_out,offset_P_e,offset_P_c,"
        "offset_T_e_sec_out,COP,COP_opt,input_violations,holds\n";
  std::cout << "reference: " << ref_text(opt) << "\n";
  for (const auto& cname : ctrls) {
    e.controller = controller_kind(cname);
    for (const auto& tn : tunings) {
      if (tn.size() != 2 || tn[0] != 'q') throw ConfigError("closedloop.tuning entries are q1, q2 or q3");
      e.pnmpc.Q = tuning_q(tn[1] - '0');
      const std::string label = e.controller == ControllerKind::fbff ? cname : cname + "_" + tn;
      cx.stage = "closed loop " + label;
      const auto r = run_experiment(cx.fl, cx.p, cx.d, opt, e);
      const std::string prefix = many ? label + "/" : "";
      write_control_log_csv(cx.file(prefix + "control_log.csv"), r.run.log);
      write_trajectory_csv(cx.file(prefix + "trajectory.csv"), r.run.traj);

      std::vector<double> t;
      std::vector<std::vector<double>> y(3);
      std::vector<double> cop;
      for (std::size_t k = 0; k < r.run.log.size(); ++k) {
        t.push_back(r.run.log[k].t);
        for (int i = 0; i < 3; ++i) y[i].push_back(r.run.log[k].y(i));
        cop.push_back(r.run.traj[k].COP);
      }
      const double win = std::min(300.0, e.loop.t_end - e.loop.t_close);
      Eigen::Vector3d st, off;
      for (int i = 0; i < 3; ++i) {
        st(i) = settling_time(t, y[i], e.loop.t_close);
        off(i) = window_mean(t, y[i], win) - r.ref(i);
      }
      const int viol = count_input_violations(r.run.log, e.pnmpc.u_min, e.pnmpc.u_max, e.pnmpc.du_max);
      sm << fmt::format("{},{},{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.10g},{:.10g},{},{}\n",
                        label, cname, e.controller == ControllerKind::fbff ? "" : tn, st(0), st(1),
                        st(2), off(0), off(1), off(2), window_mean(t, cop, win), opt.COP, viol,
                        r.run.holds);
      std::cout << fmt::format(
          "{:<10} settling P_e {:5.0f} s, P_c {:5.0f} s, T {:5.0f} s | offsets {:+.4f} bar, {:+.4f} bar, "
          "{:+.3f} K | COP {:.4f} | input violations {}\n",
          label, st(0), st(1), st(2), off(0) / 1e5, off(1) / 1e5, off(2), window_mean(t, cop, win), viol);
    }
  }
}

void run_kind(const Scenario& s, Context& cx) {
  if (s.kind == "props") run_props(s, cx);
  else if (s.kind == "steady") run_steady(s, cx);
  else if (s.kind == "optimize") run_optimize(s, cx);
  else if (s.kind == "sweep") run_sweep(s, cx);
  else if (s.kind == "simulate") run_simulate(s, cx);
  else if (s.kind == "controllability") run_controllability(s, cx);
  else if (s.kind == "closedloop") run_closedloop(s, cx);
  else throw ConfigError("scenario.kind must be one of props, steady, optimize, sweep, simulate, "
                         "controllability, closedloop (got '" + s.kind + "')");
}

json config_echo(const pt::ptree& t) {
  json j = json::object();
  for (const auto& [sec, body] : t) {
    if (body.empty()) {
      j[sec] = body.data();
      continue;
    }
    for (const auto& [k, v] : body) j[sec][k] = v.data();
  }
  return j;
}

int execute(Scenario s) {
  const auto t0 = std::chrono::steady_clock::now();
  Context cx;
  json man;
  fs::path man_path;
  auto finish = [&](int code, const std::string& status, const std::string& msg) {
    if (man_path.empty()) return code;
    man["status"] = status;
    man["exit_code"] = code;
    man["stage"] = cx.stage;
    if (!msg.empty()) man["message"] = msg;
    man["finished"] = utc_now();
    man["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json arts = json::array();
    for (const auto& a : cx.artifacts)
      arts.push_back({{"file", a}, {"sha256", sha256_file((cx.out / a).string())}});
    man["artifacts"] = arts;
    std::ofstream(man_path) << man.dump(2) << "\n";
    return code;
  };
  try {
    cx = make_context(s);
    fs::create_directories(cx.out);
    man_path = cx.out / "manifest.json";
    man = {{"tool", "vcr"},
           {"version", kVersion},
           {"compiler", __VERSION__},
           {"kind", s.kind},
           {"seed", s.seed},
           {"started", utc_now()},
           {"status", "running"},
           {"config", config_echo(s.cfg.tree())}};
    json inputs = json::object();
    if (!s.source.empty()) inputs["scenario"] = {{"path", s.source}, {"sha256", sha256_file(s.source)}};
    if (!s.params.empty()) inputs["params"] = {{"path", s.params}, {"sha256", sha256_file(s.params)}};
    if (!s.fluid.empty()) inputs["fluid"] = {{"path", s.fluid}, {"sha256", sha256_file(s.fluid)}};
    man["inputs"] = inputs;
    std::ofstream(man_path) << man.dump(2) << "\n";

    run_kind(s, cx);
    return finish(0, "ok", "");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return finish(2, "config_error", e.what());
  } catch (const pt::ptree_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return finish(2, "config_error", e.what());
  } catch (const ModelError& e) {
    std::cerr << "model failure in stage '" << cx.stage << "': " << e.what() << "\n";
    return finish(3, "model_failure", e.what());
  } catch (const std::exception& e) {
    std::cerr << "failure in stage '" << cx.stage << "': " << e.what() << "\n";
    return finish(3, "failure", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vapour-compression cycle optimisation, simulation and control"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out, params, fluid;
  unsigned seed = 0;
  app.add_option("--out", out, "Output directory (overrides the scenario)");
  app.add_option("--seed", seed, "Seed for identification excitation and random multistart");
  app.add_option("--params", params, "Plant parameter file (overrides the scenario)");
  app.add_option("--fluid", fluid, "Fluid coefficient file (overrides the scenario)");

  std::string scenario_file;
  auto* run = app.add_subcommand("run", "Run a scenario file; its kind selects the study");
  run->add_option("scenario", scenario_file, "Scenario INI file")->required();

  std::vector<std::pair<std::string, CLI::App*>> kinds;
  for (const auto& k : kKinds) {
    auto* sub = app.add_subcommand(k, "Run a " + k + " study from an optional scenario file");
    sub->add_option("scenario", scenario_file, "Scenario INI file");
    kinds.emplace_back(k, sub);
  }

  std::string dir_a, dir_b;
  double t_close = 300, window = 300;
  auto* cmp = app.add_subcommand("compare", "Compare two closed-loop run directories");
  cmp->add_option("a", dir_a)->required();
  cmp->add_option("b", dir_b)->required();
  cmp->add_option("--t-close", t_close, "Loop closing time, s");
  cmp->add_option("--window", window, "Final averaging window, s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*cmp) {
    try {
      const auto rs = compare_runs(dir_a, dir_b, t_close, window);
      std::cout << "run,settle_P_e,settle_P_c,settle_T_e_sec_out,offset_P_e,offset_P_c,offset_T_e_sec_out,COP\n";
      for (const auto& r : rs)
        std::cout << fmt::format("{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.10g}\n", r.dir,
                                 r.settling(0), r.settling(1), r.settling(2), r.offset(0), r.offset(1),
                                 r.offset(2), r.cop);
      std::cout << fmt::format("delta,{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.10g}\n",
                               rs[1].settling(0) - rs[0].settling(0), rs[1].settling(1) - rs[0].settling(1),
                               rs[1].settling(2) - rs[0].settling(2), rs[1].offset(0) - rs[0].offset(0),
                               rs[1].offset(1) - rs[0].offset(1), rs[1].offset(2) - rs[0].offset(2),
                               rs[1].cop - rs[0].cop);
      return 0;
    } catch (const ModelError& e) {
      std::cerr << "compare: " << e.what() << "\n";
      return 3;
    }
  }

  Scenario s;
  try {
    s = load_scenario(scenario_file);
    for (const auto& [k, sub] : kinds)
      if (*sub) {
        if (!s.kind.empty() && s.kind != k)
          throw ConfigError("scenario.kind is '" + s.kind + "' but subcommand is '" + k + "'");
        s.kind = k;
      }
    if (s.kind.empty()) throw ConfigError("missing required key 'scenario.kind'");
    if (!out.empty()) s.out = out;
    if (!params.empty()) s.params = params;
    if (!fluid.empty()) s.fluid = fluid;
    if (app.count("--seed")) s.seed = seed;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pt::ptree_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return execute(std::move(s));
}

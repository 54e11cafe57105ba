#include "vcr/closedloop.hpp"

#include <cmath>

#include <fmt/format.h>

#include "vcr/errors.hpp"

namespace vcr {

CycleOperatingPoint initial_point(const Fluid& fl, const CycleOperatingPoint& opt,
                                  const InitialOffset& off, const Disturbances& d,
                                  const PlantParams& p) {
  const Eigen::Vector2d target(off.N, opt.A_v + off.dA_v);
  const Eigen::Vector2d step(0.5, 50.0);  // W, Pa
  const double h_c_out = opt.chi.h_c_out + off.dh_c_out;
  CycleOperatingPoint pt;
  auto eval = [&](const Eigen::Vector2d& z, Eigen::Vector2d& r) {
    pt = reduced_point(fl, z(0), z(1), h_c_out, d, p);
    r = Eigen::Vector2d(pt.N, pt.A_v) - target;
  };
  Eigen::Vector2d z(opt.Q_e, opt.P_e), r;
  eval(z, r);
  for (int it = 0; it < 40; ++it) {
    if (r.cwiseAbs().maxCoeff() < 1e-7) return pt;
    Eigen::Matrix2d J;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d zj = z, rj;
      zj(j) += step(j);
      eval(zj, rj);
      J.col(j) = (rj - r) / step(j);
    }
    const Eigen::Vector2d dz = -J.fullPivLu().solve(r);
    // Backtrack on the residual norm; closures can fail on a full step.
    double lam = 1;
    bool moved = false;
    for (int k = 0; k < 12 && !moved; ++k, lam *= 0.5) {
      Eigen::Vector2d rn;
      try {
        eval(z + lam * dz, rn);
      } catch (const ModelError&) {
        continue;
      }
      if (rn.norm() < r.norm()) {
        z += lam * dz, r = rn, moved = true;
      }
    }
    if (!moved) break;
  }
  throw NoConvergence(fmt::format("initial point: no closure with N = {:.2f} Hz, A_v = {:.2f} %",
                                  target(0), target(1)));
}

ClosedLoopResult run_closed_loop(const Fluid& fl, const PlantParams& p, const DistProfile& d,
                                 const CondenserState& x0, const Actuators& u0,
                                 Controller* ctrl, const Eigen::Vector3d& ref,
                                 const ClosedLoopConfig& cfg,
                                 const std::function<void(const Disturbances&)>& on_disturbance) {
  if (!(cfg.dt > 0) || !(cfg.t_end > 0)) throw ConfigError("closed loop: dt and t_end must be positive");
  ClosedLoopResult r;
  const int n = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  CondenserState x = x0;
  Eigen::Vector2d u(u0.N, u0.A_v);
  std::optional<double> guess;
  for (int k = 0; k <= n; ++k) {
    const double t = k * cfg.dt;
    const Disturbances dk = d.at(t);
    CycleSimState s = evaluate_state(fl, x, {u(0), u(1)}, dk, p, guess);
    s.t = t;
    guess = s.P_e;

    ControlLog lg;
    lg.t = t;
    lg.ref = ref;
    lg.y = s.phi();
    lg.u = u;
    Eigen::Vector2d u_next = u;
    if (ctrl && t >= cfg.t_close - 1e-9 && k < n) {
      if (on_disturbance) on_disturbance(dk);
      u_next = ctrl->step(t, x.vec(), s.phi(), u, lg);
      if (lg.qp_status == "hold") ++r.holds;
    }
    r.traj.push_back(s);
    r.log.push_back(lg);
    if (k == n) break;
    u = u_next;
    try {
      x = advance(fl, x, {u(0), u(1)}, dk, p, cfg.dt, cfg.plant);
    } catch (const ModelError& e) {
      throw NoConvergence(fmt::format("closed loop: plant failed at t = {:.0f} s: {}", t, e.what()));
    }
  }
  return r;
}

int count_input_violations(const std::vector<ControlLog>& log, const Eigen::Vector2d& u_min,
                           const Eigen::Vector2d& u_max, const Eigen::Vector2d& du_max) {
  constexpr double tol = 1e-9;
  int n = 0;
  for (std::size_t k = 0; k < log.size(); ++k) {
    const Eigen::Vector2d& u = log[k].u;
    bool bad = (u.array() < u_min.array() - tol).any() || (u.array() > u_max.array() + tol).any();
    if (k > 0) bad = bad || ((u - log[k - 1].u).cwiseAbs().array() > du_max.array() + tol).any();
    n += bad;
  }
  return n;
}

ControllerKind controller_kind(const std::string& name) {
  if (name == "pnmpc") return ControllerKind::pnmpc;
  if (name == "fbff") return ControllerKind::fbff;
  throw ConfigError("unknown controller '" + name + "' (pnmpc or fbff)");
}

Eigen::Matrix3d tuning_q(int index) {
  switch (index) {
    case 1: return 2 * Eigen::Matrix3d::Identity();
    case 2: return Eigen::Vector3d(2, 2, 20).asDiagonal();
    case 3: return Eigen::Vector3d(0.2, 20, 200).asDiagonal();
  }
  throw ConfigError(fmt::format("tuning index {} not in 1..3", index));
}

ExperimentResult run_experiment(std::shared_ptr<const Fluid> fl, const PlantParams& p,
                                const Disturbances& d, const CycleOperatingPoint& opt,
                                const Experiment& e) {
  ExperimentResult r;
  r.opt = opt;
  r.ref = Eigen::Vector3d(opt.P_e, opt.P_c, opt.T_e_sec_out);
  r.start = e.start_at_optimum ? opt : initial_point(*fl, opt, e.start, d, p);
  const Eigen::Vector2d u_opt(opt.N, opt.A_v);
  const DistProfile dist = DistProfile::constant(d);

  if (e.controller == ControllerKind::pnmpc) {
    auto model = std::make_shared<CycleModel>(fl, p, d);
    PnmpcConfig pc = e.pnmpc;
    pc.u_scale = u_opt;
    pc.y_scale = output_scale(r.ref, d);
    PnmpcController ctl(model, pc, r.ref);
    r.run = run_closed_loop(*fl, p, dist, condenser_state_of(r.start), actuators_of(r.start), &ctl,
                            r.ref, e.loop,
                            [&](const Disturbances& dk) { model->set_disturbances(dk); });
  } else {
    const Eigen::Matrix<double, 2, 3> L = default_lambda();
    Excitation ex = e.excitation;
    ex.seed = e.seed;
    ex.y_scale = L * output_scale(r.ref, d);
    ex.dt = e.loop.dt;
    r.identified = identify_linear_model(*fl, condenser_state_of(opt), actuators_of(opt), d, p, L, ex);
    const LqrDesign lq = design_lqr(*r.identified, Eigen::MatrixXd::Identity(4, 4),
                                    Eigen::MatrixXd::Identity(2, 2));
    FbffConfig fc;
    fc.Lambda = L;
    fc.K = lq.K;
    fc.u_ff = u_opt;
    fc.awu_gain = e.awu_gain;
    fc.du_max = e.pnmpc.du_max;
    fc.u_min = e.pnmpc.u_min;
    fc.u_max = e.pnmpc.u_max;
    fc.L_obs = kalman_gain(*r.identified);
    r.K = lq.K;
    FbffController ctl(*r.identified, fc, r.ref);
    r.run = run_closed_loop(*fl, p, dist, condenser_state_of(r.start), actuators_of(r.start), &ctl,
                            r.ref, e.loop);
  }
  return r;
}

}  // namespace vcr

#include <cmath>
#include <memory>

#include "doctest.h"
#include "vcr/closedloop.hpp"
#include "vcr/errors.hpp"
#include "vcr/pnmpc.hpp"

using namespace vcr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LinearModel test_plant() {
  MatrixXd A(3, 3), B(3, 2), C(3, 3), D = MatrixXd::Zero(3, 2);
  A << 0.8, 0.1, 0.0, -0.05, 0.7, 0.2, 0.0, 0.1, 0.5;
  B << 1.0, 0.2, 0.0, 0.5, 0.3, -0.4;
  C << 1, 0, 0, 0, 1, 0, 0.2, 0, 1;
  D(2, 1) = 0.1;
  return LinearModel(A, B, C, D);
}

// Unit scales and no binding bounds, so the QP reduces to a ridge solve.
PnmpcConfig unbounded() {
  PnmpcConfig c;
  c.u_scale = {1, 1};
  c.y_scale = {1, 1, 1};
  c.du_max = {1e6, 1e6};
  c.u_min = {-1e6, -1e6};
  c.u_max = {1e6, 1e6};
  c.output_constraints = false;
  return c;
}

}  // namespace

TEST_SUITE("pnmpc") {

TEST_CASE("linear step response is exact") {
  const auto m = test_plant();
  const MatrixXd A = (MatrixXd(3, 3) << 0.8, 0.1, 0.0, -0.05, 0.7, 0.2, 0.0, 0.1, 0.5).finished();
  const MatrixXd B = (MatrixXd(3, 2) << 1.0, 0.2, 0.0, 0.5, 0.3, -0.4).finished();
  const MatrixXd C = (MatrixXd(3, 3) << 1, 0, 0, 0, 1, 0, 0.2, 0, 1).finished();
  MatrixXd D = MatrixXd::Zero(3, 2);
  D(2, 1) = 0.1;
  const int Np = 8, Nc = 3;
  const VectorXd x = (VectorXd(3) << 0.3, -0.1, 0.2).finished();
  const MatrixXd G = jacobian(m, x, {1.0, 2.0}, Np, Nc, 1.0, 1e-3);
  // Step response coefficients S_k = sum_{j<=k} C A^j B + D.
  std::vector<MatrixXd> S(Np);
  MatrixXd Ak = MatrixXd::Identity(3, 3), acc = MatrixXd::Zero(3, 2);
  for (int k = 0; k < Np; ++k) {
    acc += C * Ak * B;
    S[k] = acc + D;
    Ak = A * Ak;
  }
  double err = 0;
  for (int k = 0; k < Np; ++k)
    for (int l = 0; l < Nc; ++l) {
      const MatrixXd want = k >= l ? S[k - l] : MatrixXd::Zero(3, 2);
      err = std::max(err, (G.block(3 * k, 2 * l, 3, 2) - want).cwiseAbs().maxCoeff());
    }
  CHECK(err < 1e-10);
}

TEST_CASE("control horizon shifts the same response down the rows") {
  const auto m = test_plant();
  const MatrixXd G = jacobian(m, VectorXd::Zero(3), {0, 0}, 6, 3, 1.0, 1e-3);
  // Later blocks are the first block delayed, and nothing acts before it is applied.
  CHECK(G.block(0, 2, 3, 2).norm() == 0.0);
  CHECK((G.block(3, 2, 15, 2) - G.block(0, 0, 15, 2)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((G.block(6, 4, 12, 2) - G.block(0, 0, 12, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("unconstrained step is the ridge solution") {
  const auto m = test_plant();
  const auto c = unbounded();
  const VectorXd x = (VectorXd(3) << 0.3, -0.1, 0.2).finished();
  const Eigen::Vector2d u_past(1.0, 2.0);
  PredictionBundle b;
  b.y_fr = free_response(m, x, u_past, c.N_p, c.dt);
  b.G = jacobian(m, x, u_past, c.N_p, c.N_c, c.dt, c.fd_delta, false, &b.y_fr);
  const Eigen::Vector3d ref(2.0, 1.5, -0.5);
  const auto s = solve_step(b, ref, u_past, c);
  REQUIRE(s.status == QpStatus::optimal);

  VectorXd e(3 * c.N_p);
  for (int k = 0; k < c.N_p; ++k) e.segment<3>(3 * k) = ref - b.y_fr.row(k).transpose();
  MatrixXd Qb = MatrixXd::Zero(3 * c.N_p, 3 * c.N_p), Rb = MatrixXd::Zero(2 * c.N_c, 2 * c.N_c);
  for (int k = 0; k < c.N_p; ++k) Qb.block<3, 3>(3 * k, 3 * k) = c.Q;
  for (int k = 0; k < c.N_c; ++k) Rb.block<2, 2>(2 * k, 2 * k) = c.R;
  const VectorXd want = (b.G.transpose() * Qb * b.G + Rb).ldlt().solve(b.G.transpose() * Qb * e);
  CHECK((s.du - want).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("increments respect the rate limits") {
  const auto m = test_plant();
  auto c = unbounded();
  c.du_max = {2.0, 1.0};
  const Eigen::Vector2d u_past(0, 0);
  PredictionBundle b;
  b.y_fr = free_response(m, VectorXd::Zero(3), u_past, c.N_p, c.dt);
  b.G = jacobian(m, VectorXd::Zero(3), u_past, c.N_p, c.N_c, c.dt, c.fd_delta);
  const auto s = solve_step(b, {100, -100, 50}, u_past, c);
  REQUIRE(s.status == QpStatus::optimal);
  for (int k = 0; k < c.N_c; ++k) {
    CHECK(std::abs(s.du(2 * k)) <= 2.0 + 1e-9);
    CHECK(std::abs(s.du(2 * k + 1)) <= 1.0 + 1e-9);
  }
  CHECK(s.du_now.cwiseAbs().maxCoeff() > 0.5);
}

TEST_CASE("input saturation") {
  const Eigen::Vector2d lo(30, 10), hi(50, 100), rate(2, 1);
  CHECK(saturate_input({40, 60}, {39, 59.5}, lo, hi, rate) == Eigen::Vector2d(40, 60));
  CHECK(saturate_input({45, 70}, {39, 59.5}, lo, hi, rate) == Eigen::Vector2d(41, 60.5));
  CHECK(saturate_input({20, 5}, {31, 10.5}, lo, hi, rate) == Eigen::Vector2d(30, 10));
  // Already outside: back towards the box at the rate limit.
  CHECK(saturate_input({20, 50}, {25, 50}, lo, hi, rate) == Eigen::Vector2d(27, 50));
}

TEST_CASE("configuration checks") {
  PnmpcConfig c;
  c.N_c = 20;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  PnmpcConfig r;
  r.R = -Eigen::Matrix2d::Identity();
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("cycle model: one-sided sensitivities match a central difference") {
  const auto fl = default_fluid();
  const Disturbances d;
  const auto o = optimize_cycle(*fl, 600, d, PlantParams{}, OptConstraints{});
  const CycleModel m(fl, PlantParams{}, d);
  const VectorXd x = condenser_state_of(o).vec();
  const Eigen::Vector2d u(o.N + 1, o.A_v);
  const MatrixXd G = jacobian(m, x, u, 10, 3, 5.0, 1e-3);
  const MatrixXd Gc = jacobian(m, x, u, 10, 3, 5.0, 1e-4, true);
  for (int j = 0; j < G.cols(); ++j)
    CHECK((G.col(j) - Gc.col(j)).norm() / Gc.col(j).norm() < 1e-3);
}

TEST_CASE("controller holds an equilibrium") {
  const auto fl = default_fluid();
  const Disturbances d;
  const PlantParams p;
  const auto o = optimize_cycle(*fl, 600, d, p, OptConstraints{});
  const Eigen::Vector3d ref(o.P_e, o.P_c, o.T_e_sec_out);
  PnmpcConfig c;
  c.u_scale = {o.N, o.A_v};
  c.y_scale = output_scale(ref, d);
  PnmpcController ctl(std::make_shared<CycleModel>(fl, p, d), c, ref);
  ClosedLoopConfig cl;
  cl.t_close = 0;
  cl.t_end = 500;
  const auto r = run_closed_loop(*fl, p, DistProfile::constant(d), condenser_state_of(o),
                                 actuators_of(o), &ctl, ref, cl);
  REQUIRE(r.log.size() == 101);
  double drift = 0;
  for (const auto& lg : r.log) drift = std::max(drift, (lg.u - Eigen::Vector2d(o.N, o.A_v)).cwiseAbs().maxCoeff());
  CHECK(drift < 1e-3);
  CHECK(r.holds == 0);
}

}

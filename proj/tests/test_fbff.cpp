#include <cmath>

#include "doctest.h"
#include "vcr/cycle.hpp"
#include "vcr/errors.hpp"
#include "vcr/fbff.hpp"

using namespace vcr;
using Eigen::MatrixXd;

namespace {

IdentifiedModel toy_model() {
  IdentifiedModel m;
  m.A << 0.6, 0.1, 0.0, 0.7;
  m.B << 0.3, 0.05, -0.1, 0.4;
  m.y0 = {1.1e5, 250.0};
  m.u0 = {30.0, 45.0};
  m.y_scale = {1.1e5, 3.0};
  return m;
}

FbffController make_controller(double awu_gain) {
  const auto m = toy_model();
  FbffConfig c;
  c.K = design_lqr(m, MatrixXd::Identity(4, 4), MatrixXd::Identity(2, 2)).K;
  c.u_ff = m.u0;
  c.awu_gain = awu_gain;
  c.L_obs = kalman_gain(m);
  return FbffController(m, c, {1.1e5, 16e5, 250.0});
}

}  // namespace

TEST_SUITE("fbff") {

TEST_CASE("scalar Riccati equation has the golden-ratio solution") {
  const MatrixXd one = MatrixXd::Ones(1, 1);
  const MatrixXd P = solve_dare(one, one, one, one);
  CHECK(P(0, 0) == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-10));
}

TEST_CASE("Riccati residual and closed-loop stability") {
  MatrixXd A(2, 2), B(2, 1), Q = MatrixXd::Identity(2, 2), R = MatrixXd::Identity(1, 1);
  A << 1.1, 0.3, 0.0, 0.9;
  B << 0.0, 1.0;
  const MatrixXd P = solve_dare(A, B, Q, R);
  const MatrixXd S = R + B.transpose() * P * B;
  const MatrixXd res =
      A.transpose() * P * A - P + Q - A.transpose() * P * B * S.ldlt().solve(B.transpose() * P * A);
  CHECK(res.cwiseAbs().maxCoeff() < 1e-8 * P.norm());
  const auto d = design_lqr(A, B, Q, R);
  CHECK(d.spectral_radius < 1);
}

TEST_CASE("uncontrollable unstable pair diverges") {
  MatrixXd A(2, 2), B(2, 1);
  A << 1.2, 0.0, 0.0, 0.5;
  B << 0.0, 1.0;
  CHECK_THROWS_AS(solve_dare(A, B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), 1e-10, 2000),
                  RiccatiDivergence);
}

TEST_CASE("augmented design stabilises the toy model") {
  const auto d = design_lqr(toy_model(), MatrixXd::Identity(4, 4), MatrixXd::Identity(2, 2));
  CHECK(d.K.rows() == 2);
  CHECK(d.K.cols() == 4);
  CHECK(d.spectral_radius < 1);
}

TEST_CASE("identification around the 600 W optimum") {
  const auto fl = default_fluid();
  const Disturbances d;
  const PlantParams p;
  const auto o = optimize_cycle(*fl, 600, d, p, OptConstraints{});
  Excitation ex;
  ex.samples = 120;
  const auto m = identify_linear_model(*fl, condenser_state_of(o), actuators_of(o), d, p,
                                       default_lambda(), ex);
  CHECK(m.nrmse < 0.2);
  CHECK(m.A.eigenvalues().cwiseAbs().maxCoeff() < 1);
  CHECK(m.u0(0) == doctest::Approx(o.N));
  // Compressor speed lowers the evaporator pressure at steady state.
  const auto s = identified_step(m, 0, 60);
  CHECK(s(59, 0) < 0);
}

TEST_CASE("identification is reproducible for a seed") {
  const auto fl = default_fluid();
  const Disturbances d;
  const PlantParams p;
  const auto o = optimize_cycle(*fl, 600, d, p, OptConstraints{});
  Excitation ex;
  ex.samples = 60;
  const auto a = identify_linear_model(*fl, condenser_state_of(o), actuators_of(o), d, p, default_lambda(), ex);
  const auto b = identify_linear_model(*fl, condenser_state_of(o), actuators_of(o), d, p, default_lambda(), ex);
  CHECK(a.A == b.A);
  CHECK(a.B == b.B);
}

TEST_CASE("back-calculation keeps the integrators bounded under saturation") {
  auto with = make_controller(1.0);
  auto without = make_controller(0.0);
  // A measurement far from the reference keeps the inputs on their bounds.
  const Eigen::Vector3d y(1.6e5, 16e5, 245.0);
  Eigen::Vector2d ua(30, 45), ub(30, 45);
  ControlLog lg;
  for (int k = 0; k < 200; ++k) {
    ua = with.step(5.0 * k, Eigen::VectorXd(), y, ua, lg);
    ub = without.step(5.0 * k, Eigen::VectorXd(), y, ub, lg);
    CHECK(lg.u(0) >= 30 - 1e-12);
    CHECK(lg.u(0) <= 50 + 1e-12);
    CHECK(std::abs(lg.du(1)) <= 1 + 1e-12);
  }
  CHECK(with.integrators().norm() < 0.1 * without.integrators().norm());
}

TEST_CASE("configuration checks") {
  FbffConfig c;
  c.K = MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.K = MatrixXd::Zero(2, 4);
  c.Lambda << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

}

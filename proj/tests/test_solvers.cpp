#include <cmath>

#include "doctest.h"
#include "vcr/ode.hpp"
#include "vcr/qp.hpp"
#include "vcr/sqp.hpp"

using namespace vcr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE("solvers") {

TEST_CASE("qp without constraints is a linear solve") {
  QpProblem qp;
  qp.H = (MatrixXd(2, 2) << 4, 1, 1, 3).finished();
  qp.g = (VectorXd(2) << 1, 2).finished();
  qp.Aeq.resize(0, 2), qp.beq.resize(0), qp.Ain.resize(0, 2), qp.bin.resize(0);
  const auto r = solve_qp(qp);
  REQUIRE(r.status == QpStatus::optimal);
  CHECK((r.x - qp.H.ldlt().solve(-qp.g)).norm() < 1e-12);
}

TEST_CASE("qp with box and equality rows satisfies KKT") {
  QpProblem qp;
  qp.H = MatrixXd::Identity(3, 3);
  qp.g = (VectorXd(3) << -2, -2, -2).finished();
  qp.Aeq = (MatrixXd(1, 3) << 1, 1, 1).finished();
  qp.beq = (VectorXd(1) << 2).finished();
  // x0 <= 0.2
  qp.Ain = (MatrixXd(1, 3) << -1, 0, 0).finished();
  qp.bin = (VectorXd(1) << -0.2).finished();
  const auto r = solve_qp(qp);
  REQUIRE(r.status == QpStatus::optimal);
  CHECK(r.x(0) == doctest::Approx(0.2));
  CHECK(r.x(1) == doctest::Approx(0.9));
  CHECK(r.x(2) == doctest::Approx(0.9));
  CHECK(r.y_in(0) > 0);
  CHECK(kkt_residual(qp, r) < 1e-10);
}

TEST_CASE("qp detects contradictory bounds") {
  QpProblem qp;
  qp.H = MatrixXd::Identity(1, 1);
  qp.g = VectorXd::Zero(1);
  qp.Aeq.resize(0, 1), qp.beq.resize(0);
  qp.Ain = (MatrixXd(2, 1) << 1, -1).finished();
  qp.bin = (VectorXd(2) << 1, 0).finished();  // x >= 1 and x <= 0
  CHECK(solve_qp(qp).status == QpStatus::infeasible);
}

TEST_CASE("sqp on a small constrained problem") {
  NlpProblem prob;
  prob.n = 2, prob.n_eq = 1, prob.n_in = 1;
  prob.max_step = VectorXd::Constant(2, 10.0);
  prob.eval = [](const VectorXd& x, double& f, VectorXd& ce, VectorXd& ci) {
    f = std::pow(x(0) - 1, 2) + std::pow(x(1) - 2, 2) + 0.1 * std::pow(x(0) * x(1), 2);
    ce(0) = x(0) + x(1) - 1;
    ci(0) = x(0) - 0.5;
    return true;
  };
  const auto r = sqp_solve(prob, VectorXd::Constant(2, 3.0));
  REQUIRE(r.converged);
  CHECK(r.x(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.violation < 1e-7);
  CHECK(r.y_in(0) > 0);
}

TEST_CASE("ode: decay to tolerance with dense output") {
  const OdeRhs f = [](double, const VectorXd& x) { return VectorXd(-x); };
  OdeOptions o;
  o.rtol = 1e-9;
  o.atol = VectorXd::Constant(1, 1e-12);
  std::vector<VectorXd> xs;
  OdeStats st;
  const auto x1 = integrate(f, 0, VectorXd::Ones(1), 5, o, {0.5, 1.7, 3.3}, &xs, &st);
  CHECK(x1(0) == doctest::Approx(std::exp(-5.0)).epsilon(1e-7));
  REQUIRE(xs.size() == 3);
  CHECK(xs[1](0) == doctest::Approx(std::exp(-1.7)).epsilon(1e-5));
  CHECK(st.accepted > 0);
}

TEST_CASE("ode: oscillator over many periods") {
  const OdeRhs f = [](double, const VectorXd& x) { return (VectorXd(2) << x(1), -x(0)).finished(); };
  OdeOptions o;
  o.rtol = 1e-10;
  o.atol = VectorXd::Constant(2, 1e-12);
  const auto x = integrate(f, 0, (VectorXd(2) << 1, 0).finished(), 20 * M_PI, o);
  CHECK(std::abs(x(0) - 1) < 1e-7);
  CHECK(std::abs(x(1)) < 1e-7);
}

TEST_CASE("ode: fixed steps and rejected regions") {
  int calls = 0;
  const OdeRhs f = [&](double, const VectorXd& x) {
    ++calls;
    if (x(0) < 0) throw std::runtime_error("undefined");
    return VectorXd(-x);
  };
  OdeOptions o;
  o.adaptive = false;
  o.h0 = 0.1;
  const auto x = integrate(f, 0, VectorXd::Ones(1), 1, o);
  CHECK(x(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
  CHECK(calls > 0);
}

TEST_CASE("hermite reproduces a cubic") {
  auto p = [](double t) { return (VectorXd(1) << t * t * t - t).finished(); };
  auto dp = [](double t) { return (VectorXd(1) << 3 * t * t - 1).finished(); };
  CHECK(hermite(0, p(0), dp(0), 2, p(2), dp(2), 1.3)(0) == doctest::Approx(p(1.3)(0)));
}

}

#include "vcr/ode.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vcr/errors.hpp"

namespace vcr {

using Eigen::VectorXd;

VectorXd hermite(double ta, const VectorXd& xa, const VectorXd& fa, double tb, const VectorXd& xb,
                 const VectorXd& fb, double t) {
  const double h = tb - ta;
  if (h == 0) return xa;
  const double s = (t - ta) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * xa + h10 * h * fa + h01 * xb + h11 * h * fb;
}

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// Error weights b - b*.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

VectorXd integrate(const OdeRhs& f, double t0, const VectorXd& x0, double t1,
                   const OdeOptions& opt, const std::vector<double>& t_out,
                   std::vector<VectorXd>* x_out, OdeStats* stats) {
  const int n = static_cast<int>(x0.size());
  if (!(t1 >= t0)) throw DomainError("integrate: t1 < t0");
  if (!std::is_sorted(t_out.begin(), t_out.end()))
    throw DomainError("integrate: output times must be ascending");
  VectorXd atol = opt.atol.size() == n ? opt.atol : VectorXd::Constant(n, opt.rtol * 1e-3);
  OdeStats st;
  auto rhs = [&](double t, const VectorXd& x, VectorXd& out) {
    ++st.rhs_evals;
    try {
      out = f(t, x);
    } catch (const ModelError&) {
      ++st.failed_evals;
      return false;
    }
    return out.allFinite();
  };

  std::size_t k_out = 0;
  if (x_out) x_out->clear();
  auto emit_until = [&](double ta, const VectorXd& xa, const VectorXd& fa, double tb,
                        const VectorXd& xb, const VectorXd& fb) {
    while (x_out && k_out < t_out.size() && t_out[k_out] <= tb) {
      x_out->push_back(hermite(ta, xa, fa, tb, xb, fb, std::max(t_out[k_out], ta)));
      ++k_out;
    }
  };

  double t = t0;
  VectorXd x = x0, fx;
  if (!rhs(t, x, fx)) throw NoConvergence(fmt::format("integrate: model undefined at t={}", t));
  if (t1 == t0) {
    emit_until(t, x, fx, t, x, fx);
    if (stats) *stats = st;
    return x;
  }

  if (!opt.adaptive && !(opt.h0 > 0)) throw DomainError("integrate: fixed stepping needs h0 > 0");
  double h = opt.h0;
  if (h <= 0) {
    const VectorXd sc = atol + opt.rtol * x.cwiseAbs();
    const double d0 = (x.cwiseQuotient(sc)).norm() / std::sqrt(n);
    const double d1 = (fx.cwiseQuotient(sc)).norm() / std::sqrt(n);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-3 : 0.01 * d0 / d1;
    h = std::min(h, t1 - t0);
  }
  if (opt.h_max > 0) h = std::min(h, opt.h_max);

  VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  int rejects_in_row = 0;
  for (int step = 0; t < t1; ++step) {
    if (step >= opt.max_steps)
      throw NoConvergence(fmt::format("integrate: step limit at t={}", t));
    if (t + h > t1 || t1 - (t + h) < 1e-12 * std::abs(t1)) h = t1 - t;
    bool ok = rhs(t + c2 * h, x + h * a21 * fx, k2) &&
              rhs(t + c3 * h, x + h * (a31 * fx + a32 * k2), k3) &&
              rhs(t + c4 * h, x + h * (a41 * fx + a42 * k2 + a43 * k3), k4) &&
              rhs(t + c5 * h, x + h * (a51 * fx + a52 * k2 + a53 * k3 + a54 * k4), k5) &&
              rhs(t + h, x + h * (a61 * fx + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
    VectorXd xn;
    double err = 0;
    if (ok) {
      xn = x + h * (b1 * fx + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      ok = rhs(t + h, xn, k7);
      if (ok) {
        const VectorXd e = h * (e1 * fx + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const VectorXd sc = atol + opt.rtol * x.cwiseAbs().cwiseMax(xn.cwiseAbs());
        err = (e.cwiseQuotient(sc)).norm() / std::sqrt(n);
        ok = std::isfinite(err);
      }
    }
    if (!ok) {
      // A static submodel failed inside the step: shrink hard and retry.
      ++st.rejected;
      if (++rejects_in_row > opt.max_rejects || h < opt.h_min)
        throw NoConvergence(fmt::format("integrate: model fails near t={:.6g}", t));
      h *= 0.25;
      continue;
    }
    if (!opt.adaptive) err = 0;
    if (err > 1.0) {
      ++st.rejected;
      if (++rejects_in_row > opt.max_rejects || h < opt.h_min)
        throw NoConvergence(fmt::format("integrate: step size underflow at t={:.6g}", t));
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }
    rejects_in_row = 0;
    ++st.accepted;
    st.last_h = h;
    emit_until(t, x, fx, t + h, xn, k7);
    t = (t1 - (t + h) < 1e-12 * std::abs(t1)) ? t1 : t + h;
    x = xn;
    fx = k7;
    if (!opt.adaptive) {
      h = opt.h0;
      continue;
    }
    const double fac = err == 0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    h *= fac;
    if (opt.h_max > 0) h = std::min(h, opt.h_max);
  }
  // Output times that sit exactly at t1.
  emit_until(t, x, fx, t, x, fx);
  if (stats) *stats = st;
  return x;
}

}  // namespace vcr

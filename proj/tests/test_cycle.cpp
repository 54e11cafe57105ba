#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "vcr/cycle.hpp"
#include "vcr/errors.hpp"

using namespace vcr;

namespace {
const CycleOperatingPoint& optimum_600() {
  static const CycleOperatingPoint o =
      optimize_cycle(*default_fluid(), 600, Disturbances{}, PlantParams{}, OptConstraints{});
  return o;
}
}  // namespace

TEST_SUITE("cycle") {

TEST_CASE("performance identities") {
  const auto r = performance(350e3, 250e3, 6e-3, 430e3);
  CHECK(r.Q_e == doctest::Approx(600.0));
  CHECK(r.W_comp == doctest::Approx(480.0));
  CHECK(r.COP == doctest::Approx(1.25));
  CHECK(implied_h_c_in(350e3, 250e3, 1.25) == doctest::Approx(430e3));
}

TEST_CASE("optimum at 600 W") {
  const auto& o = optimum_600();
  CHECK(o.Q_e == doctest::Approx(600).epsilon(1e-6));
  CHECK(o.COP == doctest::Approx(1.3949686).epsilon(1e-5));
  CHECK(o.N == doctest::Approx(30).epsilon(1e-6));
  CHECK(std::find(o.active.begin(), o.active.end(), "N_min") != o.active.end());
  CHECK(max_violation(*default_fluid(), o, OptConstraints{}) <= 1e-6);
}

TEST_CASE("closing the optimum's decision triple returns the same pressures") {
  const auto fl = default_fluid();
  const auto& o = optimum_600();
  CloseInfo info;
  const auto c = close_cycle(*fl, o.chi, Disturbances{}, PlantParams{}, {}, {}, &info);
  CHECK(c.P_e == doctest::Approx(o.P_e).epsilon(1e-7));
  CHECK(c.P_c == doctest::Approx(o.P_c).epsilon(1e-7));
  const auto ev = evaluate_cycle(*fl, o.chi, c.P_e, c.P_c, Disturbances{}, PlantParams{});
  CHECK(std::abs(ev.e_h_e_in) < 1.0);
  CHECK(std::abs(ev.e_h_c_in) < 1.0);
}

TEST_CASE("reduced point meets the demand") {
  const auto fl = default_fluid();
  const auto& o = optimum_600();
  const auto q = reduced_point(*fl, 550, o.P_e, o.chi.h_c_out, Disturbances{}, PlantParams{});
  CHECK(q.Q_e == doctest::Approx(550).epsilon(1e-6));
  CHECK(q.P_e == doctest::Approx(o.P_e));
  CHECK(q.chi.h_c_out == doctest::Approx(o.chi.h_c_out));
}

TEST_CASE("constraint vector has one name per entry") {
  const auto g = constraint_values(*default_fluid(), optimum_600(), OptConstraints{});
  CHECK(g.size() == constraint_names().size());
}

TEST_CASE("unreachable demand is reported per sweep point") {
  const auto r = sweep_demand(*default_fluid(), {600, 3000}, Disturbances{}, PlantParams{},
                              OptConstraints{});
  REQUIRE(r.size() == 2);
  CHECK(r[0].ok);
  CHECK_FALSE(r[1].ok);
  CHECK_FALSE(r[1].error.empty());
}

TEST_CASE("constraint validation") {
  OptConstraints c;
  c.N_min = 60;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

}

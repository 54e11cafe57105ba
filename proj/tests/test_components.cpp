#include <cmath>

#include "doctest.h"
#include "vcr/components.hpp"
#include "vcr/errors.hpp"

using namespace vcr;

TEST_SUITE("components") {

TEST_CASE("effectiveness closed forms") {
  CHECK(std::abs(effectiveness(1, 0) - (1 - std::exp(-1.0))) < 1e-12);
  CHECK(std::abs(effectiveness(2, 1) - 2.0 / 3.0) < 1e-12);
  CHECK(effectiveness(0, 0.5) == 0.0);
  for (int i = 0; i <= 500; ++i) {
    const double ntu = 0.1 * i;
    CHECK(std::abs(effectiveness(ntu, 0) + std::expm1(-ntu)) < 1e-12);
  }
}

TEST_CASE("effectiveness is continuous at balanced flow") {
  // The C -> 1 branch switch must not jump.
  for (double ntu : {0.3, 2.0, 8.0})
    CHECK(effectiveness(ntu, 1 - 1e-7) == doctest::Approx(effectiveness(ntu, 1.0)).epsilon(1e-6));
}

TEST_CASE("effectiveness rejects a bad domain") {
  CHECK_THROWS_AS(effectiveness(-1, 0.5), DomainError);
  CHECK_THROWS_AS(effectiveness(1, 1.5), DomainError);
  CHECK_THROWS_AS(effectiveness(NAN, 0.5), DomainError);
}

TEST_CASE("valve opening and valve flow are inverse") {
  const auto fl = default_fluid();
  PlantParams p;
  const double P_e = 1.1e5, P_c = 16.5e5, h = fl->h_f(P_c) - 5e3;
  const double A = valve_opening(*fl, P_e, P_c, 5.6e-3, h, p);
  CHECK(valve_flow(*fl, A, P_e, P_c, h, p) == doctest::Approx(5.6e-3).epsilon(1e-12));
  CHECK_THROWS_AS(valve_opening(*fl, P_c, P_e, 5.6e-3, h, p), DomainError);
}

TEST_CASE("compressor speed and delivered flow are inverse") {
  const auto fl = default_fluid();
  PlantParams p;
  Disturbances d;
  const double P_e = 1.1e5, P_c = 16.5e5, h = fl->h_g(P_e) + 6e3;
  const auto c = compressor_eval(*fl, P_e, P_c, 5.6e-3, h, d.T_surr, p);
  CHECK(c.N > 0);
  CHECK(c.h_c_in > h);
  CHECK(c.W_comp > 0);
  CHECK(compressor_flow(*fl, c.N, P_e, P_c, h, p) == doctest::Approx(5.6e-3).epsilon(1e-10));
}

TEST_CASE("evaporator: inverse and forward solves agree and balance energy") {
  const auto fl = default_fluid();
  PlantParams p;
  Disturbances d;
  const double P_e = 1.1e5, mdot = 5.6e-3, h_out = fl->h_g(P_e) + 5e3;
  const auto inv = evaporator_eval(*fl, P_e, mdot, h_out, d, p);
  CHECK(inv.Q_sh + inv.Q_tp == doctest::Approx(mdot * (h_out - inv.h_e_in)).epsilon(1e-7));
  CHECK(inv.zeta_e_tp > 0);
  CHECK(inv.zeta_e_tp < 1);
  CHECK(inv.T_e_sec_out < d.T_e_sec_in);
  const auto fwd = evaporator_forward(*fl, P_e, mdot, inv.h_e_in, d, p);
  CHECK(fwd.h_e_out == doctest::Approx(h_out).epsilon(1e-7));
  CHECK(fwd.zeta_e_tp == doctest::Approx(inv.zeta_e_tp).epsilon(1e-6));
}

TEST_CASE("condenser balances energy over its three sections") {
  const auto fl = default_fluid();
  PlantParams p;
  Disturbances d;
  const double P_c = 16.5e5, mdot = 5.6e-3, h_out = fl->h_f(P_c) - 8e3;
  const auto c = condenser_eval(*fl, P_c, mdot, h_out, d, p);
  CHECK(c.zeta_c_sh + c.zeta_c_tp + c.zeta_c_sc == doctest::Approx(1.0));
  CHECK(c.Q_sh + c.Q_tp + c.Q_sc == doctest::Approx(mdot * (c.h_c_in_prime - h_out)).epsilon(1e-7));
  CHECK(c.T_SC > 0);
  CHECK(c.T_c_sec_out > d.T_c_sec_in);
}

TEST_CASE("parameter validation names the field") {
  PlantParams p;
  p.V_R = -1;
  try {
    p.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("V_R") != std::string::npos);
  }
  PlantParams q;
  CHECK_THROWS_AS(apply_param(q, "no_such_key", 1.0), ConfigError);
}

}

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "vcr/errors.hpp"

namespace vcr::detail {

// Bracketed scalar root with an iteration cap; f(lo) and f(hi) must differ in sign.
template <class F>
double bracket_root(F&& f, double lo, double hi, double flo, double fhi, const char* what,
                    int max_iter = 200, int bits = 50) {
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw NoConvergence(std::string(what) + ": root not bracketed");
  std::uintmax_t it = max_iter;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                             boost::math::tools::eps_tolerance<double>(bits), it);
  if (it >= static_cast<std::uintmax_t>(max_iter))
    throw NoConvergence(std::string(what) + ": iteration cap hit");
  return 0.5 * (r.first + r.second);
}

template <class F>
double bracket_root(F&& f, double lo, double hi, const char* what, int max_iter = 200,
                    int bits = 50) {
  return bracket_root(f, lo, hi, f(lo), f(hi), what, max_iter, bits);
}

}  // namespace vcr::detail

#!/usr/bin/env python3
"""Regenerate the R404A correlation coefficients as a fluid override file.

Saturation curves are fitted as degree-8 polynomials in
u = (ln P - mid) / half over [P_min, P_max]; densities are fitted in log form.
The single-phase heat capacities are secant values: 0..30 K above the vapour
line and 0..10 K below the liquid line.

Usage: fit_r404a.py [OUT] (default: stdout). Needs CoolProp and numpy.
"""
import sys

import numpy as np
import CoolProp.CoolProp as CP

FLUID = "R404A"
P_MIN, P_MAX = 0.5e5, 30e5
DEGREE = 8


def main():
    lo, hi = np.log(P_MIN), np.log(P_MAX)
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    P = np.exp(np.linspace(lo, hi, 400))
    u = (np.log(P) - mid) / half

    def sat(name, q):
        return np.array([CP.PropsSI(name, "P", p, "Q", q, FLUID) for p in P])

    T = sat("T", 0)
    h_f, h_g = sat("H", 0), sat("H", 1)
    series = {
        "T_sat": (T, False),
        "h_f": (h_f, False),
        "h_g": (h_g, False),
        "s_f": (sat("S", 0), False),
        "ln_rho_f": (sat("D", 0), True),
        "ln_rho_g": (sat("D", 1), True),
        "cp_f": (np.array([(h - CP.PropsSI("H", "P", p, "T", t - 10, FLUID)) / 10
                           for p, t, h in zip(P, T, h_f)]), False),
        "cp_g": (np.array([(CP.PropsSI("H", "P", p, "T", t + 30, FLUID) - h) / 30
                           for p, t, h in zip(P, T, h_g)]), False),
        "cv_g": (sat("O", 1), False),
    }

    lines = [f"# {FLUID} correlation, u = (ln P - mid) / half",
             f"P_min = {P_MIN:.17g}", f"P_max = {P_MAX:.17g}",
             f"mid = {mid:.17g}", f"half = {half:.17g}"]
    for key, (y, log) in series.items():
        c = np.polynomial.polynomial.polyfit(u, np.log(y) if log else y, DEGREE)
        fit = np.polynomial.polynomial.polyval(u, c)
        err = np.max(np.abs((np.exp(fit) if log else fit) / y - 1))
        print(f"{key}: max relative error {err:.2e}", file=sys.stderr)
        lines.append(f"{key} = " + " ".join(f"{x:.17g}" for x in c))

    text = "\n".join(lines) + "\n"
    if len(sys.argv) > 1:
        with open(sys.argv[1], "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()

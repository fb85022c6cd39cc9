#!/usr/bin/env python3
"""Reproduce the electron-resonance level-crossing scan.

Writes figure1_levels.csv and figure1_crossings.csv into --out and prints a
short summary.  Plot with gnuplot: docs/plot_figure1.gp.
"""

import argparse

from parabolic_mr import gbar_critical
from parabolic_mr.cli import figure1_scenario, run


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="figure1_out", help="output directory")
    args = parser.parse_args()

    scenario = figure1_scenario()
    crit = gbar_critical(scenario.system)
    print(
        f"S={scenario.system.spin}, omega={scenario.system.omega:g} rad/s, "
        f"g={scenario.field.g:g} T/m, offset={scenario.system.offset:g} m"
    )
    print(f"dissociation bound gbar_crit = {crit:.6g} T/m^2")
    print(f"scanning gbar in ({scenario.gbar_min:.6g}, {scenario.gbar_max:.6g})")

    code = run(["figure1", "--out", args.out])
    raise SystemExit(code)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Chase the known periodic orbits of the two-line iteration.

Three parameter pairs admit orbits of period 2, 58 and 1410.  The script
confirms each one twice: with the windowed detector inside simulate and
with the low-memory cycle finder.
"""
from drlines import Cycle, ProblemConfig, find_period_brent, simulate

CASES = [
    ((0.748491, 0.772301), (0.101912, 0.189275), 20000),
    ((0.082719, 2.064601), (-0.123641, -0.510395), 20000),
    ((0.703469, 3.138852), (0.392560, -0.351588), 60000),
]


def main() -> None:
    for (t1, t2), x0, max_steps in CASES:
        cfg = ProblemConfig(t1, t2)
        tr = simulate(cfg, x0, max_steps=max_steps, record=False)
        windowed = tr.verdict.period if isinstance(tr.verdict, Cycle) else None
        brent = find_period_brent(cfg, x0, max_steps=4 * max_steps)
        print(f"theta=({t1:.6f}, {t2:.6f})  start=({x0[0]:.6f}, {x0[1]:.6f})"
              f"  windowed: {windowed}  low-memory: {brent}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Scan an angle grid for nonconvergent behaviour.

For every admissible pair the sweep tries several random starts and flags
the pair if any orbit cycles or exhausts its certified step budget.  A
pair whose certificate condition holds must never be flagged; the script
counts both populations and writes the per-pair table as CSV.
"""
from drlines import make_theta_grid, sweep
from drlines.exports import atomic_write_text, sweep_csv

OUT = "sweep.csv"


def main() -> None:
    grid = make_theta_grid(20, 20)
    sg = sweep(grid, samples_per_pair=10, seed=0)
    certified = [q for q in sg.pairs if q.eq26_holds]
    flagged = [q for q in sg.pairs if q.nonconvergent_found]
    both = [q for q in sg.pairs if q.eq26_holds and q.nonconvergent_found]
    print(f"pairs: {len(sg.pairs)}   certified: {len(certified)}   "
          f"nonconvergent: {len(flagged)}   overlap: {len(both)}")
    worst = min(sg.pairs, key=lambda q: q.eq26_margin)
    print(f"most negative margin {worst.eq26_margin:+.4f} at "
          f"({worst.theta1:.4f}, {worst.theta2:.4f})")
    atomic_write_text(OUT, sweep_csv(sg))
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()

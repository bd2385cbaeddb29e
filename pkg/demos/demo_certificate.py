#!/usr/bin/env python3
"""Build decay certificates for a handful of angle pairs and print them.

For each pair the script reports whether the product Lyapunov candidate
V = V_1^alpha * V_2 admits a uniform per-step decay rate gamma < 1, and
spot-checks the decay on random points when it does.
"""
import math

import numpy as np

from drlines import Infeasible, ProblemConfig, certify, decrease_check

PAIRS = [
    (math.pi / 3, 2 * math.pi / 5),
    (0.3, 2.8),
    (math.pi / 2, 2.0),
    (0.7, math.pi / 2),
    (0.748491, 0.772301),
    (0.082719, 2.064601),
]


def main() -> None:
    rng = np.random.default_rng(0)
    for t1, t2 in PAIRS:
        cfg = ProblemConfig(t1, t2)
        result = certify(cfg)
        if isinstance(result, Infeasible):
            print(f"({t1:.6f}, {t2:.6f})  infeasible, "
                  f"margin {result.condition_margin:+.6f}")
            continue
        pts = rng.uniform(-8, 8, size=(2000, 2))
        ok = all(decrease_check(result, cfg, p) for p in pts)
        print(f"({t1:.6f}, {t2:.6f})  alpha {result.alpha:.6f}  "
              f"gamma {result.gamma:.6f}  margin "
              f"{result.condition_margin:+.6f}  "
              f"decrease on 2000 points: {'ok' if ok else 'FAILED'}")


if __name__ == "__main__":
    main()

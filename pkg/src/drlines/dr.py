"""Douglas-Rachford operators for the two-lines/one-line geometry.

For a single line A through p at angle theta and the x-axis B, the DR
operator (I + R_B R_A)/2 collapses to the affine map
x -> p + cos(theta) * M_theta (x - p), where M_theta rotates by -theta in
the usual orientation (M_theta maps (1,0) to (cos theta, -sin theta)).
For the union A1 ∪ A2 the operator acts through whichever line is closer
and is two-valued on the equidistance set D3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Line,
    ProblemConfig,
    Region,
    TIE_TOL,
    classify_region,
    cos_sin,
    reflect,
)


def rotation_matrix(theta: float) -> np.ndarray:
    """The 2x2 matrix [[cos, sin], [-sin, cos]]."""
    c, s = cos_sin(theta)
    return np.array([[c, s], [-s, c]])


@dataclass(frozen=True)
class DrStep:
    """One application of the multi-valued operator.

    ``outputs`` holds one branch value on D1/D2 and two on D3 (the A1
    branch first); ``region`` is the classification that produced them.
    """

    input: tuple[float, float]
    outputs: tuple[tuple[float, float], ...]
    region: Region


def dr_two_lines(p, theta: float, x) -> np.ndarray:
    """Closed-form DR step for the line through p at ``theta`` and the x-axis."""
    if not 0.0 < theta < math.pi:
        raise ValueError(f"theta = {theta} outside ]0, pi[")
    c, s = cos_sin(theta)
    dx = x[0] - p[0]
    dy = x[1] - p[1]
    return np.array([p[0] + c * (c * dx + s * dy),
                     p[1] + c * (-s * dx + c * dy)])


def dr_two_lines_compose(line_a: Line, line_b: Line, x) -> np.ndarray:
    """DR step by its definition: (x + R_B R_A x) / 2."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (x + reflect(line_b, reflect(line_a, x)))


def _branch(cfg: ProblemConfig, index: int, x) -> tuple[float, float]:
    if index == 1:
        out = dr_two_lines(cfg.p1, cfg.theta1, x)
    else:
        out = dr_two_lines(cfg.p2, cfg.theta2, x)
    return (float(out[0]), float(out[1]))


def dr_multivalued(cfg: ProblemConfig, x, tol: float = TIE_TOL) -> DrStep:
    """Apply the operator of A1 ∪ A2 versus the x-axis at x.

    On the tie band both branch values are reported, A1 first; callers that
    iterate pick one via a branch policy.
    """
    x = np.asarray(x, dtype=float)
    region = classify_region(cfg, x, tol)
    pt = (float(x[0]), float(x[1]))
    if region is Region.D1:
        outputs = (_branch(cfg, 1, x),)
    elif region is Region.D2:
        outputs = (_branch(cfg, 2, x),)
    else:
        outputs = (_branch(cfg, 1, x), _branch(cfg, 2, x))
    return DrStep(input=pt, outputs=outputs, region=region)


def dr_reversed(cfg: ProblemConfig, x, tol: float = TIE_TOL) -> DrStep:
    """The reversed-order operator (x + R_A R_B x) / 2.

    The A-branch is resolved by the region of R_B x, so the step is
    conjugate to the forward operator: T_BA = R_B T_AB R_B branch-wise.
    ``region`` reports the classification of R_B x.
    """
    x = np.asarray(x, dtype=float)
    y = reflect(cfg.b, x)
    region = classify_region(cfg, y, tol)
    pt = (float(x[0]), float(x[1]))

    def branch(line: Line) -> tuple[float, float]:
        out = 0.5 * (x + reflect(line, y))
        return (float(out[0]), float(out[1]))

    if region is Region.D1:
        outputs = (branch(cfg.a1),)
    elif region is Region.D2:
        outputs = (branch(cfg.a2),)
    else:
        outputs = (branch(cfg.a1), branch(cfg.a2))
    return DrStep(input=pt, outputs=outputs, region=region)

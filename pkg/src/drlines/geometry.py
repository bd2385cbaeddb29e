"""Planar primitives for the two-lines/one-line feasibility geometry.

The problem lives in the plane: a union of two lines A1, A2 crossing the
x-axis B at the anchors p1 = (-1/2, 0) and p2 = (1/2, 0), with inclination
angles 0 < theta1 <= pi/2 and theta1 < theta2 < pi.  This module owns line
projection/reflection, the closer-line classification into regions D1/D2
and the equidistance set D3, and the closed forms for D3 (the two angle
bisectors through the intersection of A1 and A2).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

# width of the relative tie band around D3; ties never occur exactly in floats
TIE_TOL = 1e-9

# angles this close to pi/2 are treated as exactly vertical
_VERTICAL_SNAP = 1e-9

_HALF_PI = 0.5 * math.pi


def _snap_angle(angle: float) -> float:
    """Snap angles within 1e-9 of pi/2 to exact pi/2."""
    if abs(angle - _HALF_PI) <= _VERTICAL_SNAP:
        return _HALF_PI
    return float(angle)


def cos_sin(angle: float) -> tuple[float, float]:
    """(cos, sin) of a line angle, exact at 0 and at snapped pi/2."""
    if angle == _HALF_PI:
        return 0.0, 1.0
    if angle == 0.0:
        return 1.0, 0.0
    return math.cos(angle), math.sin(angle)


class Region(enum.Enum):
    """Which of the two lines is closer: D1/D2 strictly, D3 the tie band."""

    D1 = 1
    D2 = 2
    D3 = 3


@dataclass(frozen=True)
class Line:
    """A line through ``anchor`` at ``angle`` radians from the positive x-axis.

    ``direction`` is the unit vector (cos angle, sin angle) and ``normal``
    its perpendicular (sin angle, -cos angle); both are derived at
    construction, with exact components when the line is vertical.
    """

    anchor: tuple[float, float]
    angle: float
    direction: tuple[float, float] = field(init=False)
    normal: tuple[float, float] = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.angle <= math.pi:
            raise ValueError(f"line angle {self.angle} outside [0, pi]")
        object.__setattr__(self, "angle", _snap_angle(self.angle))
        c, s = cos_sin(self.angle)
        object.__setattr__(self, "direction", (c, s))
        object.__setattr__(self, "normal", (s, -c))


@dataclass(frozen=True)
class ProblemConfig:
    """The full problem instance: angles plus the derived lines and anchors.

    Raises ValueError unless 0 < theta1 <= pi/2 and theta1 < theta2 < pi.
    Angles within 1e-9 of pi/2 are snapped to exact pi/2 first.
    """

    theta1: float
    theta2: float
    p1: tuple[float, float] = field(init=False, default=(-0.5, 0.0))
    p2: tuple[float, float] = field(init=False, default=(0.5, 0.0))
    a1: Line = field(init=False)
    a2: Line = field(init=False)
    b: Line = field(init=False)

    def __post_init__(self) -> None:
        t1 = _snap_angle(self.theta1)
        t2 = _snap_angle(self.theta2)
        if not 0.0 < t1 <= _HALF_PI:
            raise ValueError(f"theta1 = {t1} violates 0 < theta1 <= pi/2")
        if not t1 < t2 < math.pi:
            raise ValueError(f"theta2 = {t2} violates theta1 < theta2 < pi")
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)
        object.__setattr__(self, "a1", Line(self.p1, t1))
        object.__setattr__(self, "a2", Line(self.p2, t2))
        object.__setattr__(self, "b", Line((0.0, 0.0), 0.0))


@dataclass(frozen=True)
class BisectorData:
    """The equidistance set D3: two perpendicular lines through c.

    ``c`` is the intersection of A1 and A2; ``n1``/``n2`` are unit normals of
    the two bisector lines.
    """

    c: tuple[float, float]
    n1: tuple[float, float]
    n2: tuple[float, float]


def project(line: Line, x) -> np.ndarray:
    """Nearest point on the line."""
    p = np.asarray(x, dtype=float)
    nx, ny = line.normal
    ax, ay = line.anchor
    t = (p[0] - ax) * nx + (p[1] - ay) * ny
    return np.array([p[0] - t * nx, p[1] - t * ny])


def reflect(line: Line, x) -> np.ndarray:
    """Mirror image of x across the line (2*project - identity)."""
    p = np.asarray(x, dtype=float)
    nx, ny = line.normal
    ax, ay = line.anchor
    t = (p[0] - ax) * nx + (p[1] - ay) * ny
    return np.array([p[0] - 2.0 * t * nx, p[1] - 2.0 * t * ny])


def distance_to_line(line: Line, x) -> float:
    """Euclidean distance from x to the line."""
    p = np.asarray(x, dtype=float)
    nx, ny = line.normal
    ax, ay = line.anchor
    return abs((p[0] - ax) * nx + (p[1] - ay) * ny)


def classify_region(cfg: ProblemConfig, x, tol: float = TIE_TOL) -> Region:
    """D1/D2 by strictly closer line; D3 when the distances tie.

    The tie test is relative: |d1 - d2| <= tol * (1 + |x|).
    """
    if tol < 0.0:
        raise ValueError("tie tolerance must be >= 0")
    p = np.asarray(x, dtype=float)
    d1 = distance_to_line(cfg.a1, p)
    d2 = distance_to_line(cfg.a2, p)
    if abs(d1 - d2) <= tol * (1.0 + math.hypot(p[0], p[1])):
        return Region.D3
    return Region.D1 if d1 < d2 else Region.D2


def bisector_data(cfg: ProblemConfig) -> BisectorData:
    """Closed-form description of D3.

    c = (sin(t1+t2) / (2 sin(t2-t1)), sin t1 sin t2 / sin(t2-t1)); the two
    bisector normals are (cos h, sin h) and (sin h, -cos h) with
    h = (t1+t2)/2.
    """
    t1, t2 = cfg.theta1, cfg.theta2
    denom = math.sin(t2 - t1)
    cx = math.sin(t1 + t2) / (2.0 * denom)
    cy = math.sin(t1) * math.sin(t2) / denom
    h = 0.5 * (t1 + t2)
    ch, sh = math.cos(h), math.sin(h)
    return BisectorData(c=(cx, cy), n1=(ch, sh), n2=(sh, -ch))


def distance_to_D3(cfg: ProblemConfig, x) -> float:
    """Distance from x to the equidistance set D3."""
    p = np.asarray(x, dtype=float)
    bd = bisector_data(cfg)
    dx = bd.c[0] - p[0]
    dy = bd.c[1] - p[1]
    return min(abs(dx * bd.n1[0] + dy * bd.n1[1]),
               abs(dx * bd.n2[0] + dy * bd.n2[1]))

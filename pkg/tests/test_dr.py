"""DR operators: closed form vs composition, branches, reversed order."""
import math

import numpy as np
import pytest

from drlines.dr import (
    dr_multivalued,
    dr_reversed,
    dr_two_lines,
    dr_two_lines_compose,
    rotation_matrix,
)
from drlines.geometry import (
    Line,
    ProblemConfig,
    Region,
    bisector_data,
    distance_to_D3,
    reflect,
)

FIG_CFG = ProblemConfig(math.pi / 3, 2 * math.pi / 5)


def test_rotation_matrix_convention():
    rng = np.random.default_rng(3)
    for _ in range(100):
        t = rng.uniform(0, math.pi)
        m = rotation_matrix(t)
        assert abs(np.linalg.det(m) - 1.0) < 1e-12
        assert np.allclose(m @ m.T, np.eye(2), atol=1e-12)
        assert np.allclose(m @ [1.0, 0.0], [math.cos(t), -math.sin(t)], atol=1e-12)


def test_closed_form_trivial_cases():
    p = np.array([-0.5, 0.0])
    # vertical line: every point maps to the anchor, exactly
    for x in [(5.0, 5.0), (-3.0, 2.0), (0.25, -7.0)]:
        out = dr_two_lines(p, math.pi / 2, x)
        assert out[0] == p[0] and out[1] == p[1]
    # the anchor is fixed
    assert np.allclose(dr_two_lines(p, 1.1, p), p, atol=0)
    # frozen: p = 0, theta = pi/4, x = (1,0) -> (1/2, -1/2)
    assert np.allclose(dr_two_lines((0.0, 0.0), math.pi / 4, (1.0, 0.0)),
                       [0.5, -0.5], atol=1e-12)


def test_closed_form_rejects_degenerate_angle():
    with pytest.raises(ValueError):
        dr_two_lines((0.0, 0.0), 0.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        dr_two_lines((0.0, 0.0), math.pi, (1.0, 1.0))


def test_compositional_frozen_value():
    got = dr_two_lines_compose(FIG_CFG.a1, FIG_CFG.b, (1.0, 1.0))
    assert np.allclose(got, [0.3080127018922194, -0.399519052838329], atol=1e-12)


def test_closed_form_equals_composition():
    # the compositional operator is the oracle for the affine formula;
    # the anchor must sit on the axis so the two lines meet there
    rng = np.random.default_rng(7)
    b = Line((0.0, 0.0), 0.0)
    worst = 0.0
    for _ in range(10000):
        t = rng.uniform(0.01, math.pi - 0.01)
        p = (rng.normal() * 2, 0.0)
        x = rng.normal(size=2) * 5
        got = dr_two_lines(p, t, x)
        want = dr_two_lines_compose(Line(p, t), b, x)
        worst = max(worst, float(np.linalg.norm(got - want)))
    assert worst <= 1e-10


def test_multivalued_branch_count_and_order():
    step = dr_multivalued(FIG_CFG, FIG_CFG.p1)
    assert step.region is Region.D1
    assert len(step.outputs) == 1
    assert np.allclose(step.outputs[0], FIG_CFG.p1, atol=0)

    c = bisector_data(FIG_CFG).c
    step = dr_multivalued(FIG_CFG, c)
    assert step.region is Region.D3
    assert len(step.outputs) == 2
    # A1 branch first
    assert np.allclose(step.outputs[0], dr_two_lines(FIG_CFG.p1, FIG_CFG.theta1, c),
                       atol=0)
    assert np.allclose(step.outputs[1], dr_two_lines(FIG_CFG.p2, FIG_CFG.theta2, c),
                       atol=0)


def test_multivalued_frozen_value():
    step = dr_multivalued(FIG_CFG, (0.0, 1.0))
    assert step.region is Region.D1
    assert np.allclose(step.outputs[0],
                       [0.05801270189221941, 0.03349364905389041], atol=1e-12)


def test_fixed_points_are_exactly_the_anchors():
    for p in [FIG_CFG.p1, FIG_CFG.p2]:
        step = dr_multivalued(FIG_CFG, p)
        assert np.allclose(step.outputs[0], p, atol=1e-12)
    rng = np.random.default_rng(13)
    for _ in range(2000):
        x = rng.uniform(-5, 5, size=2)
        if min(np.linalg.norm(x - FIG_CFG.p1), np.linalg.norm(x - FIG_CFG.p2)) < 1e-3:
            continue
        step = dr_multivalued(FIG_CFG, x)
        assert all(np.linalg.norm(np.array(o) - x) > 1e-9 for o in step.outputs)


def test_affine_on_each_region():
    rng = np.random.default_rng(19)
    n_checked = 0
    while n_checked < 2000:
        x = rng.uniform(-5, 5, size=2)
        if distance_to_D3(FIG_CFG, x) < 0.3:
            continue
        y = x + rng.uniform(-0.1, 0.1, size=2)
        lam = rng.uniform(0, 1)
        z = lam * x + (1 - lam) * y
        sx = dr_multivalued(FIG_CFG, x)
        sy = dr_multivalued(FIG_CFG, y)
        sz = dr_multivalued(FIG_CFG, z)
        if not (sx.region is sy.region is sz.region) or sx.region is Region.D3:
            continue
        n_checked += 1
        want = lam * np.array(sx.outputs[0]) + (1 - lam) * np.array(sy.outputs[0])
        assert np.allclose(sz.outputs[0], want, atol=1e-10)


def test_reversed_fixed_point_and_tie():
    step = dr_reversed(FIG_CFG, FIG_CFG.p1)
    assert len(step.outputs) == 1
    assert np.allclose(step.outputs[0], FIG_CFG.p1, atol=1e-12)
    # a point on the axis equidistant from both lines reflects to itself,
    # so the reversed operator ties there
    s1, s2 = math.sin(FIG_CFG.theta1), math.sin(FIG_CFG.theta2)
    xt = 0.5 * (s2 - s1) / (s1 + s2)
    step = dr_reversed(FIG_CFG, (xt, 0.0))
    assert step.region is Region.D3
    assert len(step.outputs) == 2


def test_reversed_conjugacy():
    # R_B T_AB R_B x = T_BA x, branch by branch
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(10000):
        x = rng.uniform(-6, 6, size=2)
        rev = dr_reversed(FIG_CFG, x)
        fwd = dr_multivalued(FIG_CFG, reflect(FIG_CFG.b, x))
        assert rev.region is fwd.region
        assert len(rev.outputs) == len(fwd.outputs)
        for a, b in zip(rev.outputs, fwd.outputs):
            back = reflect(FIG_CFG.b, b)
            worst = max(worst, float(np.linalg.norm(np.array(a) - back)))
    assert worst <= 1e-10


def test_reversed_conjugacy_random_configs():
    rng = np.random.default_rng(27)
    for _ in range(50):
        t1 = rng.uniform(0.05, math.pi / 2)
        t2 = rng.uniform(t1 + 0.05, math.pi - 0.02)
        cfg = ProblemConfig(t1, t2)
        for _ in range(50):
            x = rng.uniform(-4, 4, size=2)
            rev = dr_reversed(cfg, x)
            fwd = dr_multivalued(cfg, reflect(cfg.b, x))
            for a, b in zip(rev.outputs, fwd.outputs):
                assert np.allclose(a, reflect(cfg.b, b), atol=1e-10)

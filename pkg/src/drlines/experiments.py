"""Trace simulation, cycle detection, basin rasters, and parameter sweeps.

A trajectory terminates as soon as it enters one of the open balls
B(p_i, 0.99 * d(p_i, D3)): each ball lies in its own strict region, so from
inside the iteration contracts toward p_i at rate cos^2(theta_i) and never
leaves.  Everything else is bookkeeping around that criterion: branch
policies resolving ties on D3, a sliding-window period detector, and the
two grid drivers (basin raster over starting points, sweep over angle
pairs).  Grid cells are independent work items; every cell derives its PRNG
stream from the root seed and its own index, so results do not depend on
how work is scheduled.
"""
from __future__ import annotations

import functools
import math
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import TIE_TOL, ProblemConfig, cos_sin, distance_to_D3
from .lyapunov import LyapunovCertificate, certify

DEFAULT_WINDOW = 4096
DEFAULT_MATCH_TOL = 1e-8
DEFAULT_CHECK_EVERY = 512
BALL_SAFETY = 0.99


@dataclass(frozen=True)
class FirstBranch:
    """Deterministic tie policy: prefer the A1 branch on D3."""


@dataclass(frozen=True)
class SeededRandom:
    """Fair coin per tie, reproducible from the seed key.

    ``seed`` may be a single integer or a tuple of integers (a derived
    stream key such as (root_seed, cell_index, start_index)).
    """

    seed: Union[int, tuple[int, ...]] = 0


@dataclass(frozen=True)
class EnumerateTree:
    """Bounded exploration of all tie branchings, capped at max_leaves."""

    max_leaves: int = 64

    def __post_init__(self) -> None:
        if self.max_leaves < 1:
            raise ValueError(f"max_leaves must be >= 1, got {self.max_leaves}")


BranchPolicy = Union[FirstBranch, SeededRandom, EnumerateTree]


@dataclass(frozen=True)
class ConvergedTo:
    """Entered the invariant termination ball around p_target."""

    target: int


@dataclass(frozen=True)
class Cycle:
    """The tail repeats with this minimal period (> 1)."""

    period: int


@dataclass(frozen=True)
class Budget:
    """Step budget exhausted without convergence or a detected cycle."""


Verdict = Union[ConvergedTo, Cycle, Budget]


@dataclass(frozen=True)
class Trace:
    """One simulated trajectory.

    With record=False only the final point is kept, so ``points[-1]`` is
    always the state the verdict was pronounced on.
    """

    start: tuple[float, float]
    points: tuple[tuple[float, float], ...]
    verdict: Verdict
    steps_used: int


@dataclass(frozen=True)
class RasterGrid:
    """Per-cell verdicts over a rectangle of starting points.

    ``cells`` and ``steps`` have shape (ny, nx) with row 0 at ymax (image
    orientation); codes are 0 = Budget, 1 = ConvergedTo(p1),
    2 = ConvergedTo(p2), 3 = Cycle.
    """

    bounds: tuple[float, float, float, float]
    resolution: tuple[int, int]
    cells: np.ndarray
    steps: np.ndarray
    seed: int


@dataclass(frozen=True)
class PairOutcome:
    """Sweep result for one (theta1, theta2) pair.

    ``worst_seed`` is the index of the first nonconvergent start within the
    pair's stream, -1 when every sampled start converged.
    """

    theta1: float
    theta2: float
    eq26_holds: bool
    eq26_margin: float
    nonconvergent_found: bool
    worst_seed: int


@dataclass(frozen=True)
class SweepGrid:
    pairs: tuple[PairOutcome, ...]
    samples_per_pair: int
    seed: int
    max_steps: int


def detect_cycle(points_window: Sequence, match_tol: float = DEFAULT_MATCH_TOL
                 ) -> Optional[int]:
    """Smallest period K > 1 such that the last 2K points repeat, or None.

    A pair (x_n, x_{n+K}) matches when |x_{n+K} - x_n| <= tol * (1 + |x_n|).
    Scanning K in ascending order makes the returned period minimal (no
    proper divisor can also match, it would have been found first).  A full
    K = 1 match is a constant tail, which is the convergence criterion's
    business, not a cycle: None.
    """
    w = np.asarray(points_window, dtype=float)
    m = len(w)
    if m < 2:
        return None

    def pair_ok(later: int, earlier: int) -> bool:
        dx = w[later, 0] - w[earlier, 0]
        dy = w[later, 1] - w[earlier, 1]
        lim = match_tol * (1.0 + math.hypot(w[earlier, 0], w[earlier, 1]))
        return math.hypot(dx, dy) <= lim

    if pair_ok(m - 1, m - 2):
        return None
    for k in range(2, m // 2 + 1):
        if not pair_ok(m - 1, m - 1 - k):
            continue
        a = w[m - k:]
        b = w[m - 2 * k:m - k]
        gaps = np.hypot(a[:, 0] - b[:, 0], a[:, 1] - b[:, 1])
        lims = match_tol * (1.0 + np.hypot(b[:, 0], b[:, 1]))
        if np.all(gaps <= lims):
            return k
    return None


def _ball_radii_sq(cfg: ProblemConfig) -> tuple[float, float]:
    r1 = BALL_SAFETY * distance_to_D3(cfg, cfg.p1)
    r2 = BALL_SAFETY * distance_to_D3(cfg, cfg.p2)
    return r1 * r1, r2 * r2


def simulate(cfg: ProblemConfig, x0, policy: BranchPolicy = FirstBranch(),
             max_steps: int = 20000, tol: float = TIE_TOL,
             record: bool = True, window: int = DEFAULT_WINDOW,
             match_tol: float = DEFAULT_MATCH_TOL,
             check_every: int = DEFAULT_CHECK_EVERY) -> Trace:
    """Iterate the operator from x0 until a verdict is reached.

    Termination order per visit: the open balls around p1/p2 first, then a
    cycle check every ``check_every`` steps, then the budget (with a final
    cycle check).  An EnumerateTree policy explores every tie branching and
    this returns the worst leaf: Budget over Cycle over ConvergedTo.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if isinstance(policy, EnumerateTree):
        leaves = simulate_tree(cfg, x0, policy, max_steps=max_steps, tol=tol,
                               record=record, window=window,
                               match_tol=match_tol, check_every=check_every)
        rank = {Budget: 2, Cycle: 1, ConvergedTo: 0}
        return max(leaves, key=lambda t: rank[type(t.verdict)])

    rng = None
    if isinstance(policy, SeededRandom):
        key = policy.seed if isinstance(policy.seed, int) else list(policy.seed)
        rng = np.random.default_rng(np.random.SeedSequence(key))

    c1, s1 = cos_sin(cfg.theta1)
    c2, s2 = cos_sin(cfg.theta2)
    r1sq, r2sq = _ball_radii_sq(cfg)
    x = float(x0[0])
    y = float(x0[1])
    start = (x, y)
    pts = [start]
    win: deque = deque(maxlen=window)
    win.append(start)
    steps = 0
    while True:
        dx1 = x + 0.5
        dx2 = x - 0.5
        if dx1 * dx1 + y * y < r1sq:
            verdict: Verdict = ConvergedTo(1)
            break
        if dx2 * dx2 + y * y < r2sq:
            verdict = ConvergedTo(2)
            break
        if steps and steps % check_every == 0:
            k = detect_cycle(win, match_tol)
            if k is not None:
                verdict = Cycle(k)
                break
        if steps >= max_steps:
            k = detect_cycle(win, match_tol)
            verdict = Cycle(k) if k is not None else Budget()
            break
        d1 = abs(s1 * dx1 - c1 * y)
        d2 = abs(s2 * dx2 - c2 * y)
        gap = d1 - d2
        if abs(gap) <= tol * (1.0 + math.hypot(x, y)):
            use_first = True if rng is None else bool(rng.integers(0, 2) == 0)
        else:
            use_first = gap < 0.0
        if use_first:
            x, y = (-0.5 + c1 * (c1 * dx1 + s1 * y),
                    c1 * (-s1 * dx1 + c1 * y))
        else:
            x, y = (0.5 + c2 * (c2 * dx2 + s2 * y),
                    c2 * (-s2 * dx2 + c2 * y))
        steps += 1
        p = (x, y)
        if record:
            pts.append(p)
        win.append(p)
    if not record:
        pts = [(x, y)]
    return Trace(start=start, points=tuple(pts), verdict=verdict,
                 steps_used=steps)


def simulate_tree(cfg: ProblemConfig, x0,
                  policy: EnumerateTree = EnumerateTree(),
                  max_steps: int = 20000, tol: float = TIE_TOL,
                  record: bool = True, window: int = DEFAULT_WINDOW,
                  match_tol: float = DEFAULT_MATCH_TOL,
                  check_every: int = DEFAULT_CHECK_EVERY) -> tuple[Trace, ...]:
    """Follow every branch choice at ties, up to policy.max_leaves leaves.

    Within the leaf budget each tie forks the trajectory (A1 branch
    explored first); once the budget is committed, further ties fall back
    to the A1 branch.  Returns one terminated Trace per leaf.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    c1, s1 = cos_sin(cfg.theta1)
    c2, s2 = cos_sin(cfg.theta2)
    r1sq, r2sq = _ball_radii_sq(cfg)
    start = (float(x0[0]), float(x0[1]))

    leaves: list[Trace] = []
    # stack entries: (x, y, steps, points, window); A1 continuations are
    # pushed last so they pop first
    stack = [(start[0], start[1], 0, [start], deque([start], maxlen=window))]
    committed = 1
    while stack:
        x, y, steps, pts, win = stack.pop()
        verdict: Optional[Verdict] = None
        while verdict is None:
            dx1 = x + 0.5
            dx2 = x - 0.5
            if dx1 * dx1 + y * y < r1sq:
                verdict = ConvergedTo(1)
                break
            if dx2 * dx2 + y * y < r2sq:
                verdict = ConvergedTo(2)
                break
            if steps and steps % check_every == 0:
                k = detect_cycle(win, match_tol)
                if k is not None:
                    verdict = Cycle(k)
                    break
            if steps >= max_steps:
                k = detect_cycle(win, match_tol)
                verdict = Cycle(k) if k is not None else Budget()
                break
            d1 = abs(s1 * dx1 - c1 * y)
            d2 = abs(s2 * dx2 - c2 * y)
            gap = d1 - d2
            tie = abs(gap) <= tol * (1.0 + math.hypot(x, y))
            if tie and committed < policy.max_leaves:
                committed += 1
                bx = 0.5 + c2 * (c2 * dx2 + s2 * y)
                by = c2 * (-s2 * dx2 + c2 * y)
                bp = (bx, by)
                bw = deque(win, maxlen=window)
                bw.append(bp)
                stack.append((bx, by, steps + 1,
                              pts + [bp] if record else [bp], bw))
            if tie or gap < 0.0:
                x, y = (-0.5 + c1 * (c1 * dx1 + s1 * y),
                        c1 * (-s1 * dx1 + c1 * y))
            else:
                x, y = (0.5 + c2 * (c2 * dx2 + s2 * y),
                        c2 * (-s2 * dx2 + c2 * y))
            steps += 1
            p = (x, y)
            if record:
                pts.append(p)
            else:
                pts = [p]
            win.append(p)
        if not record:
            pts = [(x, y)]
        leaves.append(Trace(start=start, points=tuple(pts), verdict=verdict,
                            steps_used=steps))
    return tuple(leaves)


def find_period_brent(cfg: ProblemConfig, x0, max_steps: int = 200000,
                      match_tol: float = DEFAULT_MATCH_TOL,
                      tol: float = TIE_TOL) -> Optional[int]:
    """Low-memory period search along the deterministic first-branch orbit.

    Brent's teleporting-tortoise scheme with tolerance-based equality: the
    reference point jumps forward at powers of two, which also rides out
    the transient toward the limit cycle.  The meeting distance is then
    reduced to the minimal period by divisor checks.  Returns None when no
    recurrence is found within max_steps.
    """
    c1, s1 = cos_sin(cfg.theta1)
    c2, s2 = cos_sin(cfg.theta2)

    def step(x: float, y: float) -> tuple[float, float]:
        dx1 = x + 0.5
        dx2 = x - 0.5
        d1 = abs(s1 * dx1 - c1 * y)
        d2 = abs(s2 * dx2 - c2 * y)
        if d1 - d2 <= tol * (1.0 + math.hypot(x, y)):
            return (-0.5 + c1 * (c1 * dx1 + s1 * y), c1 * (-s1 * dx1 + c1 * y))
        return (0.5 + c2 * (c2 * dx2 + s2 * y), c2 * (-s2 * dx2 + c2 * y))

    def close(a: tuple[float, float], b: tuple[float, float]) -> bool:
        return (math.hypot(a[0] - b[0], a[1] - b[1])
                <= match_tol * (1.0 + math.hypot(b[0], b[1])))

    tortoise = (float(x0[0]), float(x0[1]))
    hare = step(*tortoise)
    total = 1
    power = 1
    lam = 1
    while not close(hare, tortoise):
        if total >= max_steps:
            return None
        if power == lam:
            tortoise = hare
            power *= 2
            lam = 0
        hare = step(*hare)
        total += 1
        lam += 1
    if lam == 1:
        return None
    # confirm on a fresh 2*lam segment, reject constant tails (those belong
    # to the convergence criterion), then reduce to the minimal period
    seg = []
    p = hare
    for _ in range(2 * lam):
        seg.append(p)
        p = step(*p)

    def shift_ok(d: int) -> bool:
        return all(close(seg[i + d], seg[i]) for i in range(2 * lam - d))

    if not shift_ok(lam) or shift_ok(1):
        return None
    for d in range(2, lam):
        if lam % d == 0 and shift_ok(d):
            return d
    return lam


def _cell_policy(policy: BranchPolicy, seed: int,
                 key: tuple[int, ...]) -> BranchPolicy:
    # grid drivers re-key SeededRandom policies onto per-cell streams
    if isinstance(policy, SeededRandom):
        return SeededRandom((seed,) + key)
    return policy


_VERDICT_CODE = {Budget: 0, Cycle: 3}


def _raster_row(cfg: ProblemConfig, bounds: tuple[float, float, float, float],
                resolution: tuple[int, int], policy: BranchPolicy, seed: int,
                max_steps: int, tol: float, j: int
                ) -> tuple[int, np.ndarray, np.ndarray]:
    nx, ny = resolution
    xmin, xmax, ymin, ymax = bounds
    yc = ymax - (j + 0.5) * (ymax - ymin) / ny
    codes = np.zeros(nx, dtype=np.uint8)
    nsteps = np.zeros(nx, dtype=np.int32)
    for i in range(nx):
        xc = xmin + (i + 0.5) * (xmax - xmin) / nx
        cell = j * nx + i
        tr = simulate(cfg, (xc, yc), _cell_policy(policy, seed, (cell,)),
                      max_steps=max_steps, tol=tol, record=False)
        if isinstance(tr.verdict, ConvergedTo):
            codes[i] = tr.verdict.target
        else:
            codes[i] = _VERDICT_CODE[type(tr.verdict)]
        nsteps[i] = tr.steps_used
    return j, codes, nsteps


def rasterize(cfg: ProblemConfig, bounds: tuple[float, float, float, float],
              resolution: tuple[int, int], policy: BranchPolicy = FirstBranch(),
              max_steps: int = 2000, seed: int = 0, tol: float = TIE_TOL,
              threads: Optional[int] = 1) -> RasterGrid:
    """Verdict raster over cell centers of the bounds rectangle.

    resolution is (nx, ny); row 0 of the result sits at the top (ymax).
    threads > 1 distributes rows over worker processes; cell streams are
    keyed by (seed, cell_index), so the picture is identical at any thread
    count.
    """
    nx, ny = resolution
    if nx < 1 or ny < 1:
        raise ValueError(f"resolution must be >= 1x1, got {nx}x{ny}")
    xmin, xmax, ymin, ymax = bounds
    if not (xmin < xmax and ymin < ymax):
        raise ValueError(f"degenerate bounds {bounds}")
    cells = np.zeros((ny, nx), dtype=np.uint8)
    steps = np.zeros((ny, nx), dtype=np.int32)
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers > 1 and ny > 1:
        work = functools.partial(_raster_row, cfg, bounds, resolution, policy,
                                 seed, max_steps, tol)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for j, codes, nsteps in pool.map(work, range(ny),
                                             chunksize=max(1, ny // (8 * workers))):
                cells[j] = codes
                steps[j] = nsteps
    else:
        for j in range(ny):
            _, codes, nsteps = _raster_row(cfg, bounds, resolution, policy,
                                           seed, max_steps, tol, j)
            cells[j] = codes
            steps[j] = nsteps
    return RasterGrid(bounds=tuple(bounds), resolution=(nx, ny), cells=cells,
                      steps=steps, seed=seed)


def certified_budget(cfg: ProblemConfig, cert: LyapunovCertificate, x0,
                     max_steps: int) -> int:
    """Step budget that provably suffices for a certified configuration.

    V decays by gamma per step and the sandwich converts the V level of the
    termination balls into a step count; 64 slack steps absorb the float
    edges.  The returned budget is never below max_steps.
    """
    r = BALL_SAFETY * min(distance_to_D3(cfg, cfg.p1),
                          distance_to_D3(cfg, cfg.p2))
    e = 2.0 * cert.alpha + 2.0
    w2 = max(math.hypot(x0[0] - cfg.p1[0], x0[1] - cfg.p1[1]),
             math.hypot(x0[0] - cfg.p2[0], x0[1] - cfg.p2[1]))
    if w2 <= BALL_SAFETY * r:
        return max(max_steps, 64)
    need = e * (math.log(BALL_SAFETY * r) - math.log(w2)) / math.log(cert.gamma)
    return max(max_steps, int(math.ceil(need)) + 64)


def _sweep_pair(samples_per_pair: int, max_steps: int, seed: int, tol: float,
                item: tuple[int, float, float]) -> PairOutcome:
    k, t1, t2 = item
    cfg = ProblemConfig(t1, t2)
    res = certify(cfg)
    certified = isinstance(res, LyapunovCertificate)
    margin = res.condition_margin
    starts = np.random.default_rng(
        np.random.SeedSequence([seed, k])).uniform(-2.0, 2.0,
                                                   size=(samples_per_pair, 2))
    worst = -1
    for s_idx in range(samples_per_pair):
        x0 = starts[s_idx]
        budget = (certified_budget(cfg, res, x0, max_steps) if certified
                  else max_steps)
        tr = simulate(cfg, x0, SeededRandom((seed, k, s_idx)),
                      max_steps=budget, tol=tol, record=False)
        if not isinstance(tr.verdict, ConvergedTo):
            worst = s_idx
            break
    return PairOutcome(theta1=cfg.theta1, theta2=cfg.theta2,
                       eq26_holds=certified, eq26_margin=margin,
                       nonconvergent_found=worst >= 0, worst_seed=worst)


def sweep(theta_grid: Sequence[tuple[float, float]],
          samples_per_pair: int = 20, max_steps: int = 20000, seed: int = 0,
          tol: float = TIE_TOL, threads: Optional[int] = 1) -> SweepGrid:
    """Probe every (theta1, theta2) pair for nonconvergent behavior.

    Each pair gets samples_per_pair starts drawn up front from the
    (seed, pair_index) stream, uniform over [-2, 2]^2, simulated under a
    SeededRandom tie policy on the (seed, pair_index, start_index) stream.
    Certified pairs run with the certificate-backed step budget, so a
    nonconvergent verdict there is a genuine counterexample, not a budget
    artifact.
    """
    if samples_per_pair < 1:
        raise ValueError(
            f"samples_per_pair must be >= 1, got {samples_per_pair}")
    items = [(k, float(t1), float(t2))
             for k, (t1, t2) in enumerate(theta_grid)]
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers > 1 and len(items) > 1:
        work = functools.partial(_sweep_pair, samples_per_pair, max_steps,
                                 seed, tol)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, items,
                                     chunksize=max(1, len(items) // (8 * workers))))
    else:
        outcomes = [_sweep_pair(samples_per_pair, max_steps, seed, tol, it)
                    for it in items]
    return SweepGrid(pairs=tuple(outcomes), samples_per_pair=samples_per_pair,
                     seed=seed, max_steps=max_steps)


def make_theta_grid(n1: int = 40, n2: int = 40,
                    margin: float = 0.02) -> tuple[tuple[float, float], ...]:
    """Admissible (theta1, theta2) pairs covering the parameter wedge.

    theta1 runs over [margin, pi/2]; for each theta1, theta2 takes n2
    values strictly inside ]theta1, pi - margin[.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError(f"grid must be >= 1x1, got {n1}x{n2}")
    pairs = []
    for t1 in np.linspace(margin, 0.5 * math.pi, n1):
        top = math.pi - margin
        for k in range(1, n2 + 1):
            t2 = t1 + (top - t1) * k / (n2 + 1)
            pairs.append((float(t1), float(t2)))
    return tuple(pairs)

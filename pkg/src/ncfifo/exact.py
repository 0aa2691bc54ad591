"""Exact backlog-minimizing theta: the first intersection of the upper
envelope of the per-breakpoint distance curves with the foi arrival curve,
computed as the largest of the individual intersections."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .curves import TOL, _dedup_sorted
from .residual import (
    ResidualInput,
    _backlog_bound_arg,
    backlog_bound,
    build_time_sets,
)

INF = math.inf

_FIXPOINT_ROUNDS = 50


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one backlog-bound computation."""

    method: str
    theta: float
    backlog: float
    h_lower: float
    candidates: tuple[tuple[float, float], ...] = ()  # (source time, candidate theta)
    cpu_time: float = 0.0


def intersect_vt_with_alpha1(inp: ResidualInput, t_abs: float) -> float | None:
    """Root of foi(theta) = foi(t) - beta(t) + cross(t - theta) over
    theta in [h, t] (right-limit cross evaluation, so theta = t uses the
    burst).  None when the foi already exceeds the distance curve at h, i.e.
    the intersection lies below the domain; returns t itself when the
    decreasing branch is still above the foi there (the curves meet at the
    branch switch)."""
    h = inp.h_lower
    if t_abs < h - TOL:
        return None
    foi, beta, cross = inp.foi, inp.beta, inp.cross
    const = foi.value_right(t_abs) - beta.value_at(t_abs)

    def gap(theta: float) -> float:
        # increasing side minus decreasing side; root is the intersection
        return foi.value_right(theta) - const - cross.value_right(t_abs - theta)

    g_lo = gap(h)
    if g_lo > TOL:
        return None
    if g_lo >= -TOL:
        return h
    grid = [a for a in foi.knots if h < a < t_abs]
    grid += [t_abs - a for a in cross.knots if h < t_abs - a < t_abs]
    grid = _dedup_sorted([h] + grid + [t_abs])
    lo, f_lo = grid[0], g_lo
    for g in grid[1:]:
        f_g = gap(g)
        if f_g >= 0.0:
            if f_g <= TOL:
                return g
            return lo + (g - lo) * -f_lo / (f_g - f_lo)
        lo, f_lo = g, f_g
    return t_abs


def exact_theta_opt(inp: ResidualInput) -> SolveResult:
    """Backlog-minimizing theta and its bound.

    Candidates: the balance shifts of every relative breakpoint (reused from
    the time-set construction), plus the intersections anchored at the foi's
    own breakpoints and at the service curve's absolute knots.  The optimum is
    the largest candidate, floored at h(cross, beta); the bound is recomputed
    from the residual curve so the theta = h edge case stays uniform.
    """
    start = clock_ns()
    ts = build_time_sets(inp)
    candidates: list[tuple[float, float]] = []
    for t_rel, th in zip(ts.T_rel, ts.theta_rel):
        candidates.append((t_rel + th, th))
    anchor_times = _dedup_sorted(list(ts.A1) + list(ts.B))
    for t_abs in anchor_times:
        c = intersect_vt_with_alpha1(inp, t_abs)
        if c is not None:
            candidates.append((t_abs, c))
    phi = max([inp.h_lower] + [c for _, c in candidates])

    # Guard against hosts created by the closure itself (possible only for
    # multi-segment service curves): lift phi until the bound sits on the foi.
    for _ in range(_FIXPOINT_ROUNDS):
        bound, host = _backlog_bound_arg(inp, phi)
        if phi <= inp.h_lower + TOL or bound <= inp.foi.value_right(phi) + TOL:
            break
        c = intersect_vt_with_alpha1(inp, host)
        if c is None or c <= phi + TOL:
            break
        candidates.append((host, c))
        phi = c
    else:
        bound = backlog_bound(inp, phi)

    return SolveResult(
        method="exact",
        theta=phi,
        backlog=bound,
        h_lower=inp.h_lower,
        candidates=tuple(candidates),
        cpu_time=(clock_ns() - start) / 1e9,
    )

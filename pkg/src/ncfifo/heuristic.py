"""Decomposition heuristic: per-segment closed-form theta via the summed-curve
horizontal deviation, interval adjustment with symbolic open boundaries, and
the foi-breakpoint fallback."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .curves import TOL, ConcaveCurve, ConvexCurve, TokenBucketSegment, add_concave, horizontal_deviation, token_bucket
from .exact import SolveResult, intersect_vt_with_alpha1
from .residual import ResidualInput, backlog_bound

INF = math.inf


class AdjustedTheta(NamedTuple):
    """Interval-adjusted per-segment theta; `open_boundary` marks the value
    a_(i+1) - epsilon with epsilon -> 0 (never equal to any finite theta)."""

    value: float
    open_boundary: bool


@dataclass(frozen=True)
class HeuristicTrace:
    theta_vec: tuple[float, ...]
    theta_adj: tuple[AdjustedTheta, ...]
    diff: tuple[float, ...]
    matched_index: int | None
    fallback_used: bool


def segment_theta(
    segment: TokenBucketSegment, cross: ConcaveCurve, beta: ConvexCurve
) -> float:
    """Backlog-minimizing theta for a single token-bucket foi segment: the
    horizontal deviation of (cross + rate line) from beta.  +inf when the
    segment rate plus the cross long-term rate saturates the server."""
    return horizontal_deviation(add_concave(cross, token_bucket(segment.rate, 0.0)), beta)


def adjust_theta(theta: float, interval_lo: float, interval_hi: float) -> AdjustedTheta:
    """Clamp theta into [interval_lo, interval_hi): values beyond the open
    right end map to the boundary tagged open."""
    if not interval_lo < interval_hi:
        raise ValueError(f"empty interval [{interval_lo}, {interval_hi})")
    if theta < interval_lo:
        return AdjustedTheta(interval_lo, False)
    if theta > interval_hi:
        return AdjustedTheta(interval_hi, True)
    return AdjustedTheta(theta, False)


def heuristic_theta_opt(inp: ResidualInput) -> tuple[SolveResult, HeuristicTrace]:
    """Three-step decomposition: per-segment thetas, interval adjustment, and
    either the uniquely matching segment's theta or the fallback maximum over
    intersections at the foi's own breakpoints.  Always returns a finite bound
    on stable inputs; may be conservative."""
    start = clock_ns()
    foi = inp.foi
    n = len(foi.segments)
    edges = (0.0,) + foi.breakpoints + (INF,)

    theta_vec: list[float] = []
    theta_adj: list[AdjustedTheta] = []
    for i, seg in enumerate(foi.segments):
        th = segment_theta(seg, inp.cross, inp.beta)
        theta_vec.append(th)
        theta_adj.append(adjust_theta(th, edges[i], edges[i + 1]))

    diff = tuple(
        th - adj.value if math.isfinite(th) else INF
        for th, adj in zip(theta_vec, theta_adj)
    )
    matched = None
    for i in range(n):
        if not theta_adj[i].open_boundary and abs(diff[i]) <= TOL:
            matched = i
            break

    if matched is not None:
        theta = theta_vec[matched]
        candidates: tuple[tuple[float, float], ...] = ()
        fallback = False
    else:
        cands = []
        for a in foi.knots:
            c = intersect_vt_with_alpha1(inp, a)
            if c is not None:
                cands.append((a, c))
        theta = max([inp.h_lower] + [c for _, c in cands])
        candidates = tuple(cands)
        fallback = True

    bound = backlog_bound(inp, theta)
    result = SolveResult(
        method="heuristic",
        theta=theta,
        backlog=bound,
        h_lower=inp.h_lower,
        candidates=candidates,
        cpu_time=(clock_ns() - start) / 1e9,
    )
    trace = HeuristicTrace(
        theta_vec=tuple(theta_vec),
        theta_adj=tuple(theta_adj),
        diff=diff,
        matched_index=matched,
        fallback_used=fallback,
    )
    return result, trace

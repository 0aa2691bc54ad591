"""FIFO residual service curve family and its breakpoint machinery: the
theta-parameterized residual curve, per-theta backlog bound, the balance
equation mapping relative breakpoints to absolute candidate times, and the
candidate time sets driving the exact solver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .curves import (
    TOL,
    ConcaveCurve,
    ConvexCurve,
    PiecewiseCurve,
    _dedup_sorted,
    _merge_pieces,
    _vertical_deviation_arg,
    horizontal_deviation,
    lower_nondecreasing_closure,
    vertical_deviation,
)

INF = math.inf


class InstabilityError(ValueError):
    """Aggregate long-term arrival rate is not strictly below the server's
    top service rate; backlog bounds are unbounded."""


@dataclass(frozen=True)
class ResidualInput:
    """Flow of interest, aggregated cross traffic and the aggregate service
    curve of the shared FIFO server."""

    foi: ConcaveCurve
    cross: ConcaveCurve
    beta: ConvexCurve
    h_lower: float = field(init=False)

    def __post_init__(self):
        total = self.foi.long_term_rate + self.cross.long_term_rate
        if not total < self.beta.top_rate - TOL:
            raise InstabilityError(
                f"aggregate long-term rate {total} must be strictly below the "
                f"server's top rate {self.beta.top_rate}"
            )
        h = horizontal_deviation(self.cross, self.beta)
        if not math.isfinite(h):
            raise InstabilityError("cross traffic alone saturates the server")
        object.__setattr__(self, "h_lower", h)


@dataclass(frozen=True)
class TimeSets:
    """Breakpoint candidate sets: A1/A2/B are the knots of foi/cross/beta,
    T_rel the relative set A2 | B, T_abs its image under the balance shift,
    and T = A1 | T_abs the full absolute candidate set."""

    A1: tuple[float, ...]
    A2: tuple[float, ...]
    B: tuple[float, ...]
    T_rel: tuple[float, ...]
    T_abs: tuple[float, ...]
    T: tuple[float, ...]
    t_max: float
    theta_rel: tuple[float, ...]  # theta_t per T_rel entry
    clamped: tuple[bool, ...]  # balance root fell below h and was clamped


def residual_curve(inp: ResidualInput, theta: float) -> PiecewiseCurve:
    """Residual service left to the foi for a given theta:
    [beta(t) - cross(t - theta)]+ capped by the impulse at theta, i.e. 0 for
    t <= theta.  The cross curve is taken in the right-limit sense (its burst
    is active immediately after theta).  May be non-monotone."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    beta, cross = inp.beta, inp.cross
    knots = [theta]
    knots += [theta + a for a in cross.knots if a > 0]
    knots += [s for s in beta.knots if s > theta + TOL]
    knots = _dedup_sorted(knots)

    pieces: list[tuple[float, float, float]] = []
    if theta > TOL:
        pieces.append((0.0, 0.0, 0.0))
    for i, u in enumerate(knots):
        d0 = beta.value_at(u) - cross.value_right(u - theta)
        slope = beta.rate_right(u) - cross.rate_right(u - theta)
        width = knots[i + 1] - u if i + 1 < len(knots) else INF
        if d0 > TOL:
            pieces.append((u, d0, slope))
            if slope < 0:
                x = u + d0 / -slope
                if x < u + width:
                    pieces.append((x, 0.0, 0.0))
        elif d0 < -TOL:
            pieces.append((u, 0.0, 0.0))
            if slope > 0:
                x = u + -d0 / slope
                if x < u + width:
                    pieces.append((x, 0.0, slope))
        else:
            pieces.append((u, max(d0, 0.0), slope if slope > 0 else 0.0))
    return _merge_pieces(pieces)


def backlog_bound(inp: ResidualInput, theta: float) -> float:
    """Vertical deviation of the foi curve from the residual curve at theta
    (through the lower non-decreasing closure); the per-theta backlog bound."""
    v = vertical_deviation(inp.foi, residual_curve(inp, theta))
    if not math.isfinite(v):
        raise InstabilityError(f"backlog bound diverges at theta={theta}")
    return v


def _backlog_bound_arg(inp: ResidualInput, theta: float) -> tuple[float, float]:
    v, host = _vertical_deviation_arg(inp.foi, residual_curve(inp, theta))
    if not math.isfinite(v):
        raise InstabilityError(f"backlog bound diverges at theta={theta}")
    return v, host


def _balance_residual(inp: ResidualInput, t: float, theta: float) -> float:
    """foi(t + theta) - beta(t + theta) + cross(t) - foi(theta), right-limits.
    Strictly decreasing in theta once the service curve is active; the balance
    point is its root."""
    foi, beta, cross = inp.foi, inp.beta, inp.cross
    return (
        foi.value_right(t + theta)
        - beta.value_at(t + theta)
        + cross.value_right(t)
        - foi.value_right(theta)
    )


def solve_balance(inp: ResidualInput, t: float) -> tuple[float, bool]:
    """Root of the balance equation for relative time t, clamped from below
    to h(cross, beta).  Returns (theta_t, clamped)."""
    if t < 0:
        raise ValueError(f"relative time must be >= 0, got {t}")
    h = inp.h_lower
    f0 = _balance_residual(inp, t, 0.0)
    if f0 <= TOL:
        # root at or below 0; clamp up to the domain floor
        return max(h, 0.0), not (h <= TOL and f0 >= -TOL)
    grid = [a - t for a in inp.foi.knots if a > t + TOL]
    grid += [s - t for s in inp.beta.knots if s > t + TOL]
    grid += [a for a in inp.foi.knots if a > TOL]
    grid = _dedup_sorted([g for g in grid if g > TOL])
    lo, f_lo = 0.0, f0
    for g in grid:
        f_g = _balance_residual(inp, t, g)
        if f_g <= 0.0:
            root = lo + (g - lo) * f_lo / (f_lo - f_g)
            return (max(root, h), root < h - TOL)
        lo, f_lo = g, f_g
    # beyond the last grid point the residual is affine with slope -top_rate
    root = lo + f_lo / inp.beta.top_rate
    return (max(root, h), root < h - TOL)


def theta_for_relative_time(inp: ResidualInput, t: float) -> float:
    """The unique theta balancing the backlog trade-off for breakpoint t: the
    vertical gap at absolute time t + theta equals the gap at theta itself.
    Negative roots are clamped up to h(cross, beta)."""
    return solve_balance(inp, t)[0]


def build_time_sets(inp: ResidualInput) -> TimeSets:
    A1 = tuple(inp.foi.knots)
    A2 = tuple(inp.cross.knots)
    B = tuple(inp.beta.knots)
    T_rel = tuple(_dedup_sorted(list(A2) + list(B)))
    thetas = []
    clamped = []
    for t in T_rel:
        th, cl = solve_balance(inp, t)
        thetas.append(th)
        clamped.append(cl)
    T_abs = tuple(t + th for t, th in zip(T_rel, thetas))
    T = tuple(_dedup_sorted(list(A1) + list(T_abs)))
    return TimeSets(
        A1=A1,
        A2=A2,
        B=B,
        T_rel=T_rel,
        T_abs=T_abs,
        T=T,
        t_max=max(T),
        theta_rel=tuple(thetas),
        clamped=tuple(clamped),
    )


def vt_eval(inp: ResidualInput, t_abs: float, theta: float) -> float:
    """Vertical-distance curve for breakpoint t_abs as a function of theta:
    foi(t) - beta(t) + cross(t - theta) while theta < t, foi(theta) after."""
    if theta < inp.h_lower - TOL:
        raise ValueError(
            f"theta={theta} below the curve family domain h={inp.h_lower}"
        )
    if theta < t_abs:
        return (
            inp.foi.value_right(t_abs)
            - inp.beta.value_at(t_abs)
            + inp.cross.value_right(t_abs - theta)
        )
    return inp.foi.value_right(theta)

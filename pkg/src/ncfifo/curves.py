"""Piecewise-linear curve algebra: token-bucket / rate-latency envelopes and
the min-plus primitives (evaluation, sums, pseudo-inverse, deviations, closure)
used by the backlog solvers.

Conventions: concave arrival curves are 0 at t = 0 and jump to their burst
immediately after; sup/inf scans therefore evaluate right-limits at candidate
points.  All comparisons use an absolute tolerance of 1e-9.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

TOL = 1e-9

INF = math.inf


@dataclass(frozen=True)
class TokenBucketSegment:
    """One affine piece b + r*t of a concave arrival curve."""

    rate: float
    burst: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate >= 0.0):
            raise ValueError(f"token bucket rate must be finite and >= 0, got {self.rate}")
        if not (math.isfinite(self.burst) and self.burst >= 0.0):
            raise ValueError(f"token bucket burst must be finite and >= 0, got {self.burst}")

    def value(self, t: float) -> float:
        return self.burst + self.rate * t


@dataclass(frozen=True)
class RateLatencySegment:
    """One piece R*[t - T]+ of a convex service curve."""

    rate: float
    latency: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate >= 0.0):
            raise ValueError(f"rate-latency rate must be finite and >= 0, got {self.rate}")
        if not (math.isfinite(self.latency) and self.latency >= 0.0):
            raise ValueError(f"rate-latency latency must be finite and >= 0, got {self.latency}")

    def value(self, t: float) -> float:
        return self.rate * max(t - self.latency, 0.0)


@dataclass(frozen=True)
class ConcaveCurve:
    """Minimum of token buckets in normal form (strictly decreasing rates,
    strictly increasing bursts).  Value is 0 at t = 0 and min_i(b_i + r_i t)
    for t > 0."""

    segments: tuple[TokenBucketSegment, ...]
    breakpoints: tuple[float, ...]

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise ValueError("concave curve needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            if not a.rate > b.rate + TOL:
                raise ValueError("concave segments must have strictly decreasing rates")
            if not b.burst > a.burst - TOL:
                raise ValueError("concave segments must have strictly increasing bursts")
        if len(self.breakpoints) != len(segs) - 1:
            raise ValueError("breakpoint count must be len(segments) - 1")
        prev = 0.0
        for bp in self.breakpoints:
            if not bp > prev - TOL:
                raise ValueError("concave breakpoints must be strictly increasing and > 0")
            prev = bp

    @property
    def burst(self) -> float:
        return self.segments[0].burst

    @property
    def long_term_rate(self) -> float:
        return self.segments[-1].rate

    @property
    def knots(self) -> tuple[float, ...]:
        """Candidate times: 0 (the burst jump) plus the inter-segment breakpoints."""
        return (0.0,) + self.breakpoints

    def value_right(self, t: float) -> float:
        """lim_{s -> t+} of the curve; equals the burst at t = 0."""
        if t < -TOL:
            raise ValueError(f"negative time {t}")
        t = max(t, 0.0)
        return min(s.burst + s.rate * t for s in self.segments)

    def value_at(self, t: float) -> float:
        """Exact value: 0 at t = 0, min_i(b_i + r_i t) for t > 0."""
        if t < -TOL:
            raise ValueError(f"negative time {t}")
        if t <= 0.0:
            return 0.0
        return min(s.burst + s.rate * t for s in self.segments)

    def segment_index_right(self, t: float) -> int:
        """Index of the segment active immediately after t."""
        return bisect_right(self.breakpoints, t + TOL)

    def rate_right(self, t: float) -> float:
        return self.segments[self.segment_index_right(t)].rate

    def inverse(self, y: float) -> float:
        """Pseudo-inverse inf{t >= 0 : value(t) >= y}; +inf if never reached."""
        if y <= 0.0:
            return 0.0
        t = 0.0
        for s in self.segments:
            if s.burst >= y:
                continue
            if s.rate <= 0.0:
                return INF
            t = max(t, (y - s.burst) / s.rate)
        return t

    def as_arrays(self):
        import numpy as np

        rates = np.array([s.rate for s in self.segments], dtype=np.float64)
        bursts = np.array([s.burst for s in self.segments], dtype=np.float64)
        return rates, bursts


@dataclass(frozen=True)
class ConvexCurve:
    """Maximum of rate-latency curves in normal form (strictly increasing
    rates), i.e. max_i(R_i * [t - T_i]+)."""

    segments: tuple[RateLatencySegment, ...]
    breakpoints: tuple[float, ...]

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise ValueError("convex curve needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            if not b.rate > a.rate + TOL:
                raise ValueError("convex segments must have strictly increasing rates")
        if len(self.breakpoints) != len(segs) - 1:
            raise ValueError("breakpoint count must be len(segments) - 1")
        prev = segs[0].latency
        for bp in self.breakpoints:
            if not bp > prev - TOL:
                raise ValueError("convex breakpoints must be strictly increasing")
            prev = bp

    @property
    def top_rate(self) -> float:
        return self.segments[-1].rate

    @property
    def knots(self) -> tuple[float, ...]:
        """Candidate times: the first latency (the curve's takeoff point, kept
        even when 0) plus the inter-segment breakpoints."""
        first = self.segments[0].latency
        if self.breakpoints and abs(self.breakpoints[0] - first) <= TOL:
            return self.breakpoints
        return (first,) + self.breakpoints

    def value_at(self, t: float) -> float:
        if t < -TOL:
            raise ValueError(f"negative time {t}")
        t = max(t, 0.0)
        return max(0.0, max(s.rate * (t - s.latency) for s in self.segments))

    def value_right(self, t: float) -> float:
        # Continuous, so the right limit is the value itself.
        return self.value_at(t)

    def segment_index_right(self, t: float) -> int:
        """Index of the segment active after t, or -1 in the flat region
        before the first latency (the implicit zero-rate lead-in)."""
        first = self.segments[0].latency
        if t < first - TOL:
            return -1
        return bisect_right(self.breakpoints, t + TOL)

    def rate_right(self, t: float) -> float:
        idx = self.segment_index_right(t)
        return 0.0 if idx < 0 else self.segments[idx].rate

    def inverse(self, y: float) -> float:
        """Pseudo-inverse inf{t >= 0 : value(t) >= y}; +inf if never reached."""
        if y <= 0.0:
            return 0.0
        best = INF
        for s in self.segments:
            if s.rate > 0.0:
                best = min(best, s.latency + y / s.rate)
        return best

    def as_arrays(self):
        import numpy as np

        rates = np.array([s.rate for s in self.segments], dtype=np.float64)
        lats = np.array([s.latency for s in self.segments], dtype=np.float64)
        return rates, lats


Curve = Union[ConcaveCurve, ConvexCurve, "PiecewiseCurve"]


@dataclass(frozen=True)
class PiecewiseCurve:
    """General finite PWL function on [0, inf): piece k covers
    [starts[k], starts[k+1]) with value values[k] + slopes[k]*(t - starts[k]).

    values[k] is the right-limit at the piece start.  At a jump the exact
    function value is taken to be the lower of the two one-sided limits,
    matching the impulse-capped residual construction.
    """

    starts: tuple[float, ...]
    values: tuple[float, ...]
    slopes: tuple[float, ...]

    def __post_init__(self):
        if not self.starts:
            raise ValueError("piecewise curve needs at least one piece")
        if abs(self.starts[0]) > TOL:
            raise ValueError("first piece must start at 0")
        if not (len(self.starts) == len(self.values) == len(self.slopes)):
            raise ValueError("starts/values/slopes must have equal length")
        prev = -INF
        for s in self.starts:
            if not s > prev + TOL / 2 or not math.isfinite(s):
                raise ValueError("piece starts must be strictly increasing and finite")
            prev = s

    @property
    def knots(self) -> tuple[float, ...]:
        return self.starts

    def piece_index_right(self, t: float) -> int:
        return max(bisect_right(self.starts, t + TOL) - 1, 0)

    def eval_right(self, t: float) -> float:
        if t < -TOL:
            raise ValueError(f"negative time {t}")
        t = max(t, 0.0)
        k = self.piece_index_right(t)
        return self.values[k] + self.slopes[k] * (t - self.starts[k])

    def left_limit(self, t: float) -> float:
        """lim_{s -> t-}; for t at or below the first start this is the first value."""
        k = bisect_right(self.starts, t - TOL) - 1
        if k < 0:
            return self.values[0]
        return self.values[k] + self.slopes[k] * (t - self.starts[k])

    def eval_at(self, t: float) -> float:
        """Value at t; at a jump boundary, the lower one-sided limit."""
        right = self.eval_right(t)
        if t <= TOL:
            return right
        return min(right, self.left_limit(t))

    def tail_slope(self) -> float:
        return self.slopes[-1]

    def is_nondecreasing(self) -> bool:
        for k in range(len(self.starts)):
            if self.slopes[k] < -TOL:
                return False
            if k + 1 < len(self.starts):
                end = self.values[k] + self.slopes[k] * (self.starts[k + 1] - self.starts[k])
                if self.values[k + 1] < end - TOL:
                    return False
        return True


def _merge_pieces(pieces: list[tuple[float, float, float]]) -> PiecewiseCurve:
    """Drop zero-length pieces and fuse adjacent colinear ones."""
    merged: list[tuple[float, float, float]] = []
    for start, value, slope in pieces:
        if merged:
            ps, pv, pk = merged[-1]
            if start - ps <= TOL:
                merged[-1] = (ps, value, slope)
                continue
            end_val = pv + pk * (start - ps)
            if abs(end_val - value) <= TOL and abs(pk - slope) <= TOL:
                continue
        merged.append((start, value, slope))
    starts, values, slopes = zip(*merged)
    return PiecewiseCurve(starts, values, slopes)


def concave_to_piecewise(f: ConcaveCurve) -> PiecewiseCurve:
    """Right-continuous PWL view of a concave curve (the burst appears at 0)."""
    pieces = []
    for k, seg in enumerate(f.segments):
        start = 0.0 if k == 0 else f.breakpoints[k - 1]
        pieces.append((start, seg.value(start), seg.rate))
    return _merge_pieces(pieces)


def convex_to_piecewise(g: ConvexCurve) -> PiecewiseCurve:
    pieces = []
    first = g.segments[0].latency
    if first > TOL:
        pieces.append((0.0, 0.0, 0.0))
    for k, seg in enumerate(g.segments):
        start = max(seg.latency, 0.0) if k == 0 else g.breakpoints[k - 1]
        pieces.append((start, seg.value(start), seg.rate))
    return _merge_pieces(pieces)


def as_piecewise(curve: Curve) -> PiecewiseCurve:
    if isinstance(curve, PiecewiseCurve):
        return curve
    if isinstance(curve, ConcaveCurve):
        return concave_to_piecewise(curve)
    if isinstance(curve, ConvexCurve):
        return convex_to_piecewise(curve)
    raise TypeError(f"not a curve: {curve!r}")


def eval_right(curve: Curve, t: float) -> float:
    """Right-limit evaluation, defined for all curve kinds."""
    if isinstance(curve, PiecewiseCurve):
        return curve.eval_right(t)
    return curve.value_right(t)


def eval_at(curve: Curve, t: float) -> float:
    """Exact function value (0 at t = 0 for concave curves)."""
    if isinstance(curve, PiecewiseCurve):
        return curve.eval_at(t)
    return curve.value_at(t)


def normalize_concave(raw: Iterable[TokenBucketSegment]) -> ConcaveCurve:
    """Normal form of min over the given token buckets: sort by decreasing
    rate, drop every segment that is never the strict minimum."""
    segs = list(raw)
    if not segs:
        raise ValueError("cannot normalize an empty segment list")
    segs.sort(key=lambda s: (-s.rate, s.burst))
    dedup: list[TokenBucketSegment] = []
    for s in segs:
        if dedup and abs(dedup[-1].rate - s.rate) <= TOL:
            continue  # equal rate, larger burst is dominated
        dedup.append(s)

    kept: list[TokenBucketSegment] = []
    activation: list[float] = []
    for s in dedup:
        while kept:
            top = kept[-1]
            if s.burst <= top.burst + TOL:
                # lower rate and no larger burst: top is never the strict min
                kept.pop()
                activation.pop()
                continue
            x = (s.burst - top.burst) / (top.rate - s.rate)
            if x <= activation[-1] + TOL:
                kept.pop()
                activation.pop()
                continue
            kept.append(s)
            activation.append(x)
            break
        if not kept:
            kept.append(s)
            activation.append(0.0)
    return ConcaveCurve(tuple(kept), tuple(activation[1:]))


def normalize_convex(raw: Iterable[RateLatencySegment]) -> ConvexCurve:
    """Normal form of max over the given rate-latency curves."""
    segs = list(raw)
    if not segs:
        raise ValueError("cannot normalize an empty segment list")
    segs.sort(key=lambda s: (s.rate, s.latency))
    dedup: list[RateLatencySegment] = []
    for s in segs:
        if dedup and abs(dedup[-1].rate - s.rate) <= TOL:
            continue  # equal rate, smaller latency already kept
        dedup.append(s)
    if len(dedup) > 1:
        # A zero-rate curve is identically 0 and never a strict maximum.
        dedup = [s for s in dedup if s.rate > TOL] or dedup[-1:]

    kept: list[RateLatencySegment] = []
    activation: list[float] = []
    for s in dedup:
        # Work on the affine extensions R*t - R*T; the shared [.]+ floor is
        # handled by the positivity pass below.
        icpt = -s.rate * s.latency
        while kept:
            top = kept[-1]
            top_icpt = -top.rate * top.latency
            if icpt >= top_icpt - TOL:
                kept.pop()
                activation.pop()
                continue
            x = (top_icpt - icpt) / (s.rate - top.rate)
            if x <= activation[-1] + TOL:
                kept.pop()
                activation.pop()
                continue
            kept.append(s)
            activation.append(x)
            break
        if not kept:
            kept.append(s)
            activation.append(0.0)

    # Drop the leading segments whose active interval ends before they turn
    # positive; they never strictly exceed the other [.]+-floored curves.
    drop = 0
    for k in range(len(kept) - 1):
        if activation[k + 1] <= kept[k].latency + TOL:
            drop = k + 1
    kept = kept[drop:]
    activation = activation[drop:]
    bps = tuple(activation[1:])
    return ConvexCurve(tuple(kept), bps)


def add_concave(f: ConcaveCurve, g: ConcaveCurve) -> ConcaveCurve:
    """Pointwise sum for t > 0 (0 at t = 0); breakpoints are the union of the
    operands' breakpoints."""
    grid = sorted(set(f.breakpoints) | set(g.breakpoints))
    grid = _dedup_sorted([0.0] + grid)
    segs = []
    for u in grid:
        sf = f.segments[f.segment_index_right(u)]
        sg = g.segments[g.segment_index_right(u)]
        segs.append(TokenBucketSegment(sf.rate + sg.rate, sf.burst + sg.burst))
    uniq = [segs[0]]
    bps = []
    for u, s in zip(grid[1:], segs[1:]):
        if abs(s.rate - uniq[-1].rate) <= TOL:
            continue
        uniq.append(s)
        bps.append(u)
    return ConcaveCurve(tuple(uniq), tuple(bps))


def sum_concave(curves: Sequence[ConcaveCurve]) -> ConcaveCurve:
    if not curves:
        return zero_curve()
    total = curves[0]
    for c in curves[1:]:
        total = add_concave(total, c)
    return total


def pseudo_inverse(f: Union[ConvexCurve, PiecewiseCurve], x: float) -> float:
    """inf{t >= 0 : f(t) >= x}; +inf if f never reaches x.

    f must be non-decreasing; a decreasing piecewise curve is a contract
    violation.
    """
    if x < 0:
        raise ValueError(f"pseudo-inverse argument must be >= 0, got {x}")
    if isinstance(f, ConvexCurve):
        return f.inverse(x)
    if not f.is_nondecreasing():
        raise ValueError("pseudo-inverse requires a non-decreasing curve")
    if x <= 0.0:
        return 0.0
    n = len(f.starts)
    for k in range(n):
        end = INF if k + 1 == n else f.starts[k + 1]
        v0 = f.values[k]
        if v0 >= x:
            return f.starts[k]
        if f.slopes[k] > 0.0:
            t = f.starts[k] + (x - v0) / f.slopes[k]
            if t < end:
                return t
    return INF


def shift_by_impulse(f: ConcaveCurve, shift: float) -> PiecewiseCurve:
    """Min-plus convolution with the impulse at `shift`: f(t - shift) for
    t >= shift and 0 before."""
    if shift < 0:
        raise ValueError(f"shift must be >= 0, got {shift}")
    base = concave_to_piecewise(f)
    if shift <= TOL:
        return base
    pieces = [(0.0, 0.0, 0.0)]
    for s, v, k in zip(base.starts, base.values, base.slopes):
        pieces.append((s + shift, v, k))
    return _merge_pieces(pieces)


def lower_nondecreasing_closure(g: PiecewiseCurve) -> PiecewiseCurve:
    """Largest non-decreasing function below g: closure(t) = inf_{s >= t} g(s).

    Requires an eventually non-decreasing tail (last slope >= 0).
    """
    if g.slopes[-1] < -TOL:
        raise ValueError("curve decreases forever; no non-decreasing closure exists")
    n = len(g.starts)
    out: list[tuple[float, float, float]] = []
    running = INF  # inf of g over [next start, inf)
    for k in range(n - 1, -1, -1):
        start, v, slope = g.starts[k], g.values[k], g.slopes[k]
        if k + 1 == n:
            out.append((start, v, max(slope, 0.0)))
            running = v
            continue
        width = g.starts[k + 1] - start
        end_val = v + slope * width
        if slope < -TOL:
            level = min(end_val, running)
            out.append((start, level, 0.0))
            running = level
        else:
            if v >= running - TOL:
                out.append((start, running, 0.0))
            elif end_val <= running + TOL:
                out.append((start, v, slope))
            else:
                cross = start + (running - v) / slope if slope > 0 else start
                out.append((cross, running, 0.0))
                out.append((start, v, slope))
            running = min(v, running)
    out.reverse()
    return _merge_pieces(out)


def _dedup_sorted(values: Iterable[float], tol: float = TOL) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v > out[-1] + tol:
            out.append(v)
    return out


def vertical_deviation(f: ConcaveCurve, g: Union[ConvexCurve, PiecewiseCurve]) -> float:
    """sup_{t>=0} {f(t) - g(t)}, computed through the lower non-decreasing
    closure of g and an exact scan of the union breakpoint grid (evaluating
    both one-sided limits at every knot).  Returns +inf when unbounded."""
    return _vertical_deviation_arg(f, g)[0]


def _vertical_deviation_arg(
    f: ConcaveCurve, g: Union[ConvexCurve, PiecewiseCurve]
) -> tuple[float, float]:
    """(deviation, hosting time); the hosting time attains the sup in the
    one-sided-limit sense."""
    gc = lower_nondecreasing_closure(as_piecewise(g))
    f_tail = f.segments[-1].rate
    if f_tail > gc.tail_slope() + TOL:
        return INF, INF
    grid = _dedup_sorted(list(f.knots) + list(gc.starts))
    best = 0.0 - gc.eval_at(0.0)  # exact value at t = 0 (f(0) = 0)
    best_t = 0.0
    for i, u in enumerate(grid):
        d = f.value_right(u) - gc.eval_right(u)
        if d > best:
            best, best_t = d, u
        if i + 1 < len(grid):
            u_next = grid[i + 1]
            d = f.value_right(u_next) - gc.left_limit(u_next)
            if d > best:
                best, best_t = d, u_next
    return best, best_t


def horizontal_deviation(f: ConcaveCurve, g: ConvexCurve) -> float:
    """sup_t inf{d >= 0 : f(t) <= g(t + d)}, scanned exactly over the
    candidate set (f's knots plus the f-preimages of g's knots).  +inf when
    f's long-term rate exceeds g's top rate."""
    if f.long_term_rate > g.top_rate + TOL:
        return INF
    best = 0.0
    for u in _deviation_candidates(f, g):
        gap = g.inverse(f.value_right(u)) - u
        if gap == INF:
            return INF
        if gap > best:
            best = gap
    return best


def _deviation_candidates(f: ConcaveCurve, g: ConvexCurve) -> list[float]:
    cands = list(f.knots)
    for s in g.knots:
        u = f.inverse(g.value_at(s))
        if math.isfinite(u):
            cands.append(u)
    return _dedup_sorted(cands)


def a_star(f: ConcaveCurve, g: ConvexCurve) -> float:
    """First candidate time at which f's (right-limit) rate drops to at most
    g's rate at the mapped time g^{-1}(f(t)); +inf if that never happens."""
    for u in _deviation_candidates(f, g):
        mapped = g.inverse(f.value_right(u))
        if mapped == INF:
            continue
        if f.rate_right(u) <= g.rate_right(mapped) + TOL:
            return u
    return INF


def token_bucket(rate: float, burst: float) -> ConcaveCurve:
    return ConcaveCurve((TokenBucketSegment(rate, burst),), ())


def rate_latency(rate: float, latency: float) -> ConvexCurve:
    return ConvexCurve((RateLatencySegment(rate, latency),), ())


def zero_curve() -> ConcaveCurve:
    return token_bucket(0.0, 0.0)


def curve_to_dict(curve: Union[ConcaveCurve, ConvexCurve]) -> dict:
    if isinstance(curve, ConcaveCurve):
        return {
            "type": "concave",
            "segments": [{"rate": s.rate, "burst": s.burst} for s in curve.segments],
        }
    if isinstance(curve, ConvexCurve):
        return {
            "type": "convex",
            "segments": [{"rate": s.rate, "latency": s.latency} for s in curve.segments],
        }
    raise TypeError(f"not serializable: {curve!r}")


def curve_from_dict(data: dict) -> Union[ConcaveCurve, ConvexCurve]:
    """Parse and normalize a curve from its JSON form; raises ValueError
    naming the offending field on malformed input."""
    if not isinstance(data, dict):
        raise ValueError(f"curve must be an object, got {type(data).__name__}")
    kind = data.get("type")
    if kind not in ("concave", "convex"):
        raise ValueError(f"curve field 'type' must be 'concave' or 'convex', got {kind!r}")
    raw = data.get("segments")
    if not isinstance(raw, list) or not raw:
        raise ValueError("curve field 'segments' must be a non-empty list")
    segs = []
    for i, s in enumerate(raw):
        if not isinstance(s, dict):
            raise ValueError(f"segments[{i}] must be an object")
        try:
            if kind == "concave":
                segs.append(TokenBucketSegment(float(s["rate"]), float(s["burst"])))
            else:
                segs.append(RateLatencySegment(float(s["rate"]), float(s["latency"])))
        except KeyError as exc:
            raise ValueError(f"segments[{i}] is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValueError(f"segments[{i}] is invalid: {exc}") from None
    return normalize_concave(segs) if kind == "concave" else normalize_convex(segs)

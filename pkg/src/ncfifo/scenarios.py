"""Randomized scenario generation for the benchmark harness, the baseline
theta used by existing tooling, aggregate bounds and the segregation penalty.

Scenarios draw, per flow: a packet-size first burst, a sustained rate and a
first breakpoint, all uniform; the peak rate is 8x the sustained rate and
subsequent bursts chain so the curve stays continuous at each breakpoint.
The server rate is sized for 80% utilization against the summed sustained
rates, with latency 1/R.

Streams: flow f of the scenario seeded s draws from PCG64 seeded with
SeedSequence((s, f)), flow 0 being the foi; experiment iteration i at cross
count n uses the scenario seed SeedSequence((master, i, n)).generate_state.
Draws are quantized to multiples of 1e-6 to keep intersections
well-conditioned.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .curves import (
    ConcaveCurve,
    ConvexCurve,
    TokenBucketSegment,
    curve_from_dict,
    curve_to_dict,
    normalize_concave,
    pseudo_inverse,
    rate_latency,
    sum_concave,
    vertical_deviation,
)
from .exact import SolveResult
from .residual import InstabilityError, ResidualInput, backlog_bound


@dataclass(frozen=True)
class ScenarioConfig:
    """Generator parameters; the defaults are the benchmark's."""

    n_cross: int = 2
    foi_segments: int = 2
    seed: int = 0
    packet_size_range: tuple[float, float] = (0.001, 0.05)  # Mbit
    sustained_rate_range: tuple[float, float] = (1.0, 10.0)  # Mbit/s
    first_breakpoint_range: tuple[float, float] = (0.050, 0.500)  # s
    foi_spacing_range: tuple[float, float] = (0.100, 0.500)  # s
    peak_multiplier: float = 8.0
    mid_multipliers: tuple[float, float] = (6.0, 3.0)
    utilization: float = 0.8

    def __post_init__(self):
        if not 2 <= self.n_cross <= 10:
            raise ValueError(f"n_cross must be in [2, 10], got {self.n_cross}")
        if self.foi_segments not in (1, 2, 4):
            raise ValueError(f"foi_segments must be 1, 2 or 4, got {self.foi_segments}")
        for name in ("packet_size_range", "sustained_rate_range", "first_breakpoint_range", "foi_spacing_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if not 0 < self.utilization < 1:
            raise ValueError(f"utilization must be in (0, 1), got {self.utilization}")


@dataclass(frozen=True)
class Scenario:
    foi: ConcaveCurve
    cross_flows: tuple[ConcaveCurve, ...]
    beta: ConvexCurve
    seed: int

    def residual_input(self) -> ResidualInput:
        return ResidualInput(
            foi=self.foi, cross=sum_concave(self.cross_flows), beta=self.beta
        )

    def cross_first_bursts(self) -> list[float]:
        return [c.segments[0].burst for c in self.cross_flows]


def _quantize(x: float) -> float:
    return round(x * 1e6) / 1e6


def _flow_rng(seed: int, flow_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, flow_index))))


def _draw(rng: np.random.Generator, lo: float, hi: float) -> float:
    return _quantize(float(rng.uniform(lo, hi)))


def _chain_segments(rates: list[float], first_burst: float, breakpoints: list[float]) -> ConcaveCurve:
    """Token buckets with the given rates, continuous at each breakpoint:
    b_i = b_(i-1) - (r_i - r_(i-1)) * a_(i-1)."""
    bursts = [first_burst]
    for (r_prev, r_next), a in zip(zip(rates, rates[1:]), breakpoints):
        bursts.append(bursts[-1] - (r_next - r_prev) * a)
    return normalize_concave(
        [TokenBucketSegment(r, b) for r, b in zip(rates, bursts)]
    )


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Deterministic scenario for (config, seed): T-Spec cross flows, a 1/2/4
    segment foi and an 80%-utilization rate-latency server."""
    sustained_rates: list[float] = []

    foi_rng = _flow_rng(cfg.seed, 0)
    packet = _draw(foi_rng, *cfg.packet_size_range)
    rate = _draw(foi_rng, *cfg.sustained_rate_range)
    bp1 = _draw(foi_rng, *cfg.first_breakpoint_range)
    sustained_rates.append(rate)
    if cfg.foi_segments == 1:
        foi = normalize_concave([TokenBucketSegment(rate, packet)])
    elif cfg.foi_segments == 2:
        foi = _chain_segments([cfg.peak_multiplier * rate, rate], packet, [bp1])
    else:
        m1, m2 = cfg.mid_multipliers
        rates = [cfg.peak_multiplier * rate, m1 * rate, m2 * rate, rate]
        bps = [bp1]
        for _ in range(2):
            bps.append(bps[-1] + _draw(foi_rng, *cfg.foi_spacing_range))
        foi = _chain_segments(rates, packet, bps)

    cross_flows = []
    for i in range(1, cfg.n_cross + 1):
        rng = _flow_rng(cfg.seed, i)
        packet = _draw(rng, *cfg.packet_size_range)
        rate = _draw(rng, *cfg.sustained_rate_range)
        bp = _draw(rng, *cfg.first_breakpoint_range)
        sustained_rates.append(rate)
        cross_flows.append(
            _chain_segments([cfg.peak_multiplier * rate, rate], packet, [bp])
        )

    server_rate = sum(sustained_rates) / cfg.utilization
    beta = rate_latency(server_rate, 1.0 / server_rate)
    return Scenario(foi=foi, cross_flows=tuple(cross_flows), beta=beta, seed=cfg.seed)


def scenario_seed(master_seed: int, iteration: int, n_cross: int) -> int:
    """Stable per-(iteration, cross-count) scenario seed."""
    return int(np.random.SeedSequence((master_seed, iteration, n_cross)).generate_state(1)[0])


def theta_disco(inp: ResidualInput, cross_first_bursts: list[float]) -> float:
    """Baseline theta: the service curve's pseudo-inverse at the summed
    first-segment bursts of the cross flows."""
    total = 0.0
    for b in cross_first_bursts:
        if b < 0:
            raise ValueError(f"bursts must be >= 0, got {b}")
        total += b
    return pseudo_inverse(inp.beta, total)


def solve_disco(inp: ResidualInput, cross_first_bursts: list[float]) -> SolveResult:
    """Baseline method packaged like the solvers."""
    start = clock_ns()
    theta = theta_disco(inp, cross_first_bursts)
    bound = backlog_bound(inp, theta)
    return SolveResult(
        method="disco",
        theta=theta,
        backlog=bound,
        h_lower=inp.h_lower,
        candidates=(),
        cpu_time=(clock_ns() - start) / 1e9,
    )


def aggregate_backlog(scenario: Scenario) -> float:
    """Backlog bound for all flows served as one aggregate."""
    total = sum_concave([scenario.foi, *scenario.cross_flows])
    if not total.long_term_rate < scenario.beta.top_rate:
        raise InstabilityError("aggregate rate saturates the server")
    v = vertical_deviation(total, scenario.beta)
    if not math.isfinite(v):
        raise InstabilityError("aggregate backlog bound diverges")
    return v


def segregation_penalty(per_flow_bounds: list[float], q_agg: float) -> float:
    """Percentage excess of summed per-flow bounds over the aggregate bound."""
    if q_agg <= 0:
        raise ValueError(f"aggregate bound must be positive, got {q_agg}")
    penalty = (sum(per_flow_bounds) - q_agg) / q_agg * 100.0
    if penalty < 0:
        warnings.warn(
            f"segregation penalty is negative ({penalty:.3f}%); "
            "per-flow bounds are inconsistent with the aggregate",
            stacklevel=2,
        )
    return penalty


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "seed": scenario.seed,
        "foi": curve_to_dict(scenario.foi),
        "cross": [curve_to_dict(c) for c in scenario.cross_flows],
        "beta": curve_to_dict(scenario.beta),
    }


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ValueError("scenario must be an object")
    for key in ("foi", "cross", "beta"):
        if key not in data:
            raise ValueError(f"scenario is missing field {key!r}")
    foi = curve_from_dict(data["foi"])
    if not isinstance(foi, ConcaveCurve):
        raise ValueError("scenario field 'foi' must be a concave curve")
    raw_cross = data["cross"]
    if not isinstance(raw_cross, list):
        raise ValueError("scenario field 'cross' must be a list of curves")
    cross = []
    for i, c in enumerate(raw_cross):
        parsed = curve_from_dict(c)
        if not isinstance(parsed, ConcaveCurve):
            raise ValueError(f"scenario field 'cross[{i}]' must be a concave curve")
        cross.append(parsed)
    beta = curve_from_dict(data["beta"])
    if not isinstance(beta, ConvexCurve):
        raise ValueError("scenario field 'beta' must be a convex curve")
    return Scenario(
        foi=foi, cross_flows=tuple(cross), beta=beta, seed=int(data.get("seed", 0))
    )

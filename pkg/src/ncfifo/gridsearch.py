"""Brute-force theta grid search: the independent oracle used to validate the
solvers.  Per theta it evaluates the backlog bound directly from the curve
definitions (dense sampling plus every knot and clip crossing), never through
the solver's breakpoint machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .curves import _dedup_sorted
from .residual import ResidualInput, build_time_sets

DENSE_SAMPLES = 2048


@dataclass(frozen=True)
class OracleResult:
    theta: float
    backlog: float
    h_lower: float
    t_max: float
    thetas: np.ndarray
    bounds: np.ndarray

    def profile(self) -> list[tuple[float, float]]:
        return [(float(t), float(b)) for t, b in zip(self.thetas, self.bounds)]


def backlog_profile(inp: ResidualInput, thetas: np.ndarray, t_horizon: float) -> np.ndarray:
    f1r, f1b = inp.foi.as_arrays()
    f2r, f2b = inp.cross.as_arrays()
    gR, gT = inp.beta.as_arrays()
    static = np.array(
        _dedup_sorted(list(inp.foi.knots) + list(inp.beta.knots)), dtype=np.float64
    )
    rel = np.array(sorted(inp.cross.knots), dtype=np.float64)
    t_dense = np.linspace(0.0, max(t_horizon, 1e-6), DENSE_SAMPLES)
    return _kernels.backlog_profile(
        np.asarray(thetas, dtype=np.float64), t_dense, f1r, f1b, f2r, f2b, gR, gT, static, rel
    )


def oracle_search(
    inp: ResidualInput, theta_step: float = 1e-3, t_horizon_factor: float = 2.0
) -> OracleResult:
    """Grid search over theta in [h, t_max] with the given step; reports the
    best (theta, backlog) and the full profile."""
    if theta_step <= 0:
        raise ValueError(f"theta_step must be positive, got {theta_step}")
    ts = build_time_sets(inp)
    h, t_max = inp.h_lower, ts.t_max
    n = max(int(math.floor((t_max - h) / theta_step)) + 1, 1)
    thetas = h + theta_step * np.arange(n)
    bounds = backlog_profile(inp, thetas, t_horizon_factor * t_max)
    best = int(np.argmin(bounds))
    return OracleResult(
        theta=float(thetas[best]),
        backlog=float(bounds[best]),
        h_lower=h,
        t_max=t_max,
        thetas=thetas,
        bounds=bounds,
    )

"""Backend kernels for the brute-force backlog profile: a numba @njit version
and a pure-numpy fallback, selected by the NCFIFO_NUMBA environment variable
("0"/"false"/"off" forces numpy; default uses numba when importable).

Both backends evaluate, per theta, the supremum of foi(t) minus the residual
curve over a candidate set made of a dense grid, every curve knot (static and
theta-shifted) and the zero-crossings of the unclipped service difference, so
the per-theta value is exact up to float arithmetic.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    flag = os.environ.get("NCFIFO_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


def concave_right_np(rates: np.ndarray, bursts: np.ndarray, ts) -> np.ndarray:
    """min_i(b_i + r_i * t), the right-limit arrival-curve value, vectorized."""
    ts = np.asarray(ts, dtype=np.float64)
    return (ts[..., None] * rates + bursts).min(axis=-1)


def convex_np(rates: np.ndarray, lats: np.ndarray, ts) -> np.ndarray:
    """max_i(R_i * [t - T_i]+), vectorized."""
    ts = np.asarray(ts, dtype=np.float64)
    return (np.maximum(ts[..., None] - lats, 0.0) * rates).max(axis=-1)


def _knot_scan_py(
    theta: float,
    f1r,
    f1b,
    f2r,
    f2b,
    gR,
    gT,
    static_knots,
    rel_knots,
) -> float:
    """Exact per-theta supremum over curve knots and difference crossings."""

    def f1(t: float) -> float:
        return min(b + r * t for r, b in zip(f1r, f1b))

    def f2(t: float) -> float:
        return min(b + r * t for r, b in zip(f2r, f2b))

    def beta(t: float) -> float:
        return max(0.0, max(R * (t - T) for R, T in zip(gR, gT)))

    def resid(t: float) -> float:
        if t <= theta:
            return 0.0
        return max(0.0, beta(t) - f2(t - theta))

    knots = sorted(set(list(static_knots) + [theta + a for a in rel_knots] + [theta]))
    best = -np.inf
    for t in knots:
        if t < 0:
            continue
        best = max(best, f1(t) - resid(t))
    # crossings of d(t) = beta(t) - f2(t - theta) between knots past theta
    upper = [t for t in knots if t >= theta]
    for a, b in zip(upper, upper[1:]):
        da = beta(a) - f2(a - theta)
        db = beta(b) - f2(b - theta)
        if (da < 0.0 <= db) or (db < 0.0 <= da):
            k = a + (b - a) * (0.0 - da) / (db - da)
            best = max(best, f1(k))
    if upper:
        last = upper[-1]
        d_last = beta(last) - f2(last - theta)
        tail = gR[-1] - f2r[-1]
        if d_last < 0.0 and tail > 0.0:
            best = max(best, f1(last - d_last / tail))
    return best


def backlog_profile_numpy(
    thetas: np.ndarray,
    t_dense: np.ndarray,
    f1r: np.ndarray,
    f1b: np.ndarray,
    f2r: np.ndarray,
    f2b: np.ndarray,
    gR: np.ndarray,
    gT: np.ndarray,
    static_knots: np.ndarray,
    rel_knots: np.ndarray,
    chunk: int = 128,
) -> np.ndarray:
    out = np.full(len(thetas), -np.inf)
    f1_dense = concave_right_np(f1r, f1b, t_dense)
    beta_dense = convex_np(gR, gT, t_dense)
    for lo in range(0, len(thetas), chunk):
        th = thetas[lo : lo + chunk]
        shifted = t_dense[None, :] - th[:, None]
        resid = np.maximum(beta_dense[None, :] - concave_right_np(f2r, f2b, np.maximum(shifted, 0.0)), 0.0)
        resid[shifted <= 0.0] = 0.0
        out[lo : lo + chunk] = (f1_dense[None, :] - resid).max(axis=1)
    knots = [
        _knot_scan_py(float(th), f1r, f1b, f2r, f2b, gR, gT, static_knots, rel_knots)
        for th in thetas
    ]
    return np.maximum(out, np.array(knots))


if _numba_enabled():
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None
else:
    numba = None


if numba is not None:

    @numba.njit(cache=True)
    def _profile_nb(thetas, t_dense, f1r, f1b, f2r, f2b, gR, gT, static_knots, rel_knots):
        n_th = thetas.shape[0]
        out = np.empty(n_th)
        n_knots = static_knots.shape[0] + rel_knots.shape[0] + 1
        knots = np.empty(n_knots)
        for i in range(n_th):
            theta = thetas[i]
            best = -np.inf
            for j in range(t_dense.shape[0]):
                t = t_dense[j]
                v = _cand_nb(t, theta, f1r, f1b, f2r, f2b, gR, gT)
                if v > best:
                    best = v
            for j in range(static_knots.shape[0]):
                knots[j] = static_knots[j]
            for j in range(rel_knots.shape[0]):
                knots[static_knots.shape[0] + j] = theta + rel_knots[j]
            knots[n_knots - 1] = theta
            kn = np.sort(knots)
            for j in range(n_knots):
                t = kn[j]
                if t < 0.0:
                    continue
                v = _cand_nb(t, theta, f1r, f1b, f2r, f2b, gR, gT)
                if v > best:
                    best = v
            # crossings of the unclipped difference between adjacent knots
            prev_t = -1.0
            prev_d = 0.0
            have_prev = False
            for j in range(n_knots):
                t = kn[j]
                if t < theta:
                    continue
                d = _beta_nb(t, gR, gT) - _concave_nb(t - theta, f2r, f2b)
                if have_prev and ((prev_d < 0.0 <= d) or (d < 0.0 <= prev_d)) and t > prev_t:
                    k = prev_t + (t - prev_t) * (0.0 - prev_d) / (d - prev_d)
                    v = _concave_nb(k, f1r, f1b)
                    if v > best:
                        best = v
                prev_t = t
                prev_d = d
                have_prev = True
            if have_prev and prev_d < 0.0:
                tail = gR[gR.shape[0] - 1] - f2r[f2r.shape[0] - 1]
                if tail > 0.0:
                    k = prev_t - prev_d / tail
                    v = _concave_nb(k, f1r, f1b)
                    if v > best:
                        best = v
            out[i] = best
        return out

    @numba.njit(cache=True, inline="always")
    def _concave_nb(t, rates, bursts):
        best = bursts[0] + rates[0] * t
        for k in range(1, rates.shape[0]):
            v = bursts[k] + rates[k] * t
            if v < best:
                best = v
        return best

    @numba.njit(cache=True, inline="always")
    def _beta_nb(t, gR, gT):
        best = 0.0
        for k in range(gR.shape[0]):
            d = t - gT[k]
            v = gR[k] * d if d > 0.0 else 0.0
            if v > best:
                best = v
        return best

    @numba.njit(cache=True, inline="always")
    def _cand_nb(t, theta, f1r, f1b, f2r, f2b, gR, gT):
        if t <= theta:
            resid = 0.0
        else:
            resid = _beta_nb(t, gR, gT) - _concave_nb(t - theta, f2r, f2b)
            if resid < 0.0:
                resid = 0.0
        return _concave_nb(t, f1r, f1b) - resid

    def backlog_profile_numba(
        thetas, t_dense, f1r, f1b, f2r, f2b, gR, gT, static_knots, rel_knots
    ) -> np.ndarray:
        return _profile_nb(
            np.ascontiguousarray(thetas, dtype=np.float64),
            np.ascontiguousarray(t_dense, dtype=np.float64),
            np.ascontiguousarray(f1r, dtype=np.float64),
            np.ascontiguousarray(f1b, dtype=np.float64),
            np.ascontiguousarray(f2r, dtype=np.float64),
            np.ascontiguousarray(f2b, dtype=np.float64),
            np.ascontiguousarray(gR, dtype=np.float64),
            np.ascontiguousarray(gT, dtype=np.float64),
            np.ascontiguousarray(static_knots, dtype=np.float64),
            np.ascontiguousarray(rel_knots, dtype=np.float64),
        )

    backlog_profile = backlog_profile_numba
    _BACKEND = "numba"
else:
    backlog_profile_numba = None
    backlog_profile = backlog_profile_numpy
    _BACKEND = "numpy"


def active_backend() -> str:
    return _BACKEND

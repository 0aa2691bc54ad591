import math

import numpy as np
import pytest

from ncfifo.curves import (
    ConcaveCurve,
    RateLatencySegment,
    TokenBucketSegment,
    add_concave,
    a_star,
    as_piecewise,
    concave_to_piecewise,
    eval_at,
    eval_right,
    horizontal_deviation,
    lower_nondecreasing_closure,
    normalize_concave,
    normalize_convex,
    pseudo_inverse,
    rate_latency,
    shift_by_impulse,
    token_bucket,
    vertical_deviation,
    zero_curve,
    PiecewiseCurve,
)

TB = TokenBucketSegment
RL = RateLatencySegment


def grid_min_of_buckets(segments, ts):
    return np.min([[s.burst + s.rate * t for t in ts] for s in segments], axis=0)


def grid_max_of_rls(segments, ts):
    return np.max(
        [[s.rate * max(t - s.latency, 0.0) for t in ts] for s in segments], axis=0
    )


class TestEval:
    def test_eval_right_token_bucket(self):
        g = token_bucket(2, 1)
        assert eval_right(g, 0) == pytest.approx(1)
        assert eval_right(g, 3) == pytest.approx(7)

    def test_eval_right_rate_latency(self):
        b = rate_latency(3, 1)
        assert eval_right(b, 0.5) == 0
        assert eval_right(b, 2) == pytest.approx(3)

    def test_eval_at_zero_is_zero(self):
        assert eval_at(token_bucket(2, 1), 0) == 0
        assert eval_at(token_bucket(2, 1), 1) == pytest.approx(3)
        assert eval_at(rate_latency(3, 1), 1) == 0

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            eval_right(token_bucket(2, 1), -0.1)
        with pytest.raises(ValueError):
            eval_at(rate_latency(3, 1), -1)


class TestNormalizeConcave:
    def test_two_buckets_sorted_with_breakpoint(self):
        c = normalize_concave([TB(1, 4), TB(4, 1)])
        assert [s.rate for s in c.segments] == [4, 1]
        # 1 + 4t = 4 + t at t = 1
        assert c.breakpoints == pytest.approx((1.0,))

    def test_equal_rate_keeps_smaller_burst(self):
        c = normalize_concave([TB(2, 1), TB(2, 5)])
        assert c.segments == (TB(2, 1),)

    def test_dominated_segment_removed(self):
        # gamma_{4,1} shares the burst of gamma_{3,1} with a higher rate and
        # is therefore never the strict minimum
        c = normalize_concave([TB(4, 1), TB(3, 1), TB(1, 4)])
        assert [s.rate for s in c.segments] == [3, 1]
        ts = np.linspace(1e-6, 10, 1000)
        expect = grid_min_of_buckets([TB(4, 1), TB(3, 1), TB(1, 4)], ts)
        got = np.array([c.value_right(t) for t in ts])
        assert np.allclose(got, expect, atol=1e-9)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            normalize_concave([])

    def test_pointwise_matches_raw_min(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = rng.integers(1, 6)
            raw = [TB(float(r), float(b)) for r, b in zip(rng.uniform(0.1, 10, n), rng.uniform(0, 5, n))]
            c = normalize_concave(raw)
            ts = rng.uniform(1e-9, 20, 50)
            expect = grid_min_of_buckets(raw, ts)
            got = np.array([c.value_right(t) for t in ts])
            assert np.allclose(got, expect, atol=1e-9)

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = rng.integers(1, 6)
            raw = [TB(float(r), float(b)) for r, b in zip(rng.uniform(0.1, 10, n), rng.uniform(0, 5, n))]
            c = normalize_concave(raw)
            again = normalize_concave(c.segments)
            assert again == c


class TestNormalizeConvex:
    def test_single_segment(self):
        b = normalize_convex([RL(3, 0)])
        assert b.segments == (RL(3, 0),)

    def test_two_segments_breakpoint(self):
        b = normalize_convex([RL(1, 0), RL(3, 2)])
        assert [s.rate for s in b.segments] == [1, 3]
        # t = 3(t - 2) at t = 3
        assert b.breakpoints == pytest.approx((3.0,))

    def test_equal_rate_later_latency_dominated(self):
        b = normalize_convex([RL(2, 0), RL(2, 1)])
        assert b.segments == (RL(2, 0),)

    def test_never_max_segment_dropped(self):
        # The slow line only leads while both curves are still at zero.
        b = normalize_convex([RL(1, 0.6), RL(5, 0.5)])
        assert [s.rate for s in b.segments] == [5]

    def test_pointwise_matches_raw_max(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            n = rng.integers(1, 6)
            raw = [RL(float(r), float(T)) for r, T in zip(rng.uniform(0.1, 10, n), rng.uniform(0, 3, n))]
            c = normalize_convex(raw)
            ts = rng.uniform(0, 20, 50)
            expect = grid_max_of_rls(raw, ts)
            got = np.array([c.value_at(t) for t in ts])
            assert np.allclose(got, expect, atol=1e-9)

    def test_idempotent(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = rng.integers(1, 6)
            raw = [RL(float(r), float(T)) for r, T in zip(rng.uniform(0.1, 10, n), rng.uniform(0, 3, n))]
            c = normalize_convex(raw)
            assert normalize_convex(c.segments) == c


class TestAddConcave:
    def test_affine_sum(self):
        c = add_concave(token_bucket(1, 1), token_bucket(1, 0))
        assert c.segments == (TB(2, 1),)

    def test_piecewise_sum_breakpoint_union(self):
        f = normalize_concave([TB(4, 1), TB(1, 4)])
        g = token_bucket(1, 1)
        c = add_concave(f, g)
        assert [s.rate for s in c.segments] == [5, 2]
        assert [s.burst for s in c.segments] == [2, 5]
        assert c.breakpoints == pytest.approx((1.0,))
        ts = np.linspace(1e-6, 5, 500)
        got = np.array([c.value_right(t) for t in ts])
        expect = np.array([f.value_right(t) + g.value_right(t) for t in ts])
        assert np.allclose(got, expect, atol=1e-9)

    def test_zero_curve_is_identity(self):
        f = normalize_concave([TB(4, 1), TB(1, 4)])
        assert add_concave(f, zero_curve()) == f

    def test_commutative_associative_on_grid(self):
        rng = np.random.default_rng(23)
        ts = np.linspace(1e-6, 10, 200)
        for _ in range(50):
            curves = []
            for _ in range(3):
                n = rng.integers(1, 4)
                raw = [TB(float(r), float(b)) for r, b in zip(rng.uniform(0.5, 8, n), rng.uniform(0, 4, n))]
                curves.append(normalize_concave(raw))
            f, g, h = curves
            ab = add_concave(f, g)
            ba = add_concave(g, f)
            abc = add_concave(ab, h)
            bca = add_concave(add_concave(g, h), f)
            for t in ts[:: 20]:
                assert ab.value_right(t) == pytest.approx(ba.value_right(t), abs=1e-9)
                assert abc.value_right(t) == pytest.approx(bca.value_right(t), abs=1e-9)


class TestPseudoInverse:
    def test_rate_latency(self):
        assert pseudo_inverse(rate_latency(2, 1), 4) == pytest.approx(3)
        assert pseudo_inverse(rate_latency(2, 1), 0) == 0

    def test_two_segment_convex(self):
        b = normalize_convex([RL(1, 0), RL(3, 2)])
        assert pseudo_inverse(b, 6) == pytest.approx(4)

    def test_decreasing_piecewise_rejected(self):
        g = PiecewiseCurve((0.0, 1.0), (5.0, 4.0), (0.0, -1.0))
        with pytest.raises(ValueError):
            pseudo_inverse(g, 1)

    def test_galois_property(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            n = rng.integers(1, 4)
            raw = [RL(float(r), float(T)) for r, T in zip(rng.uniform(0.2, 8, n), rng.uniform(0, 2, n))]
            g = normalize_convex(raw)
            for x in rng.uniform(0, 20, 10):
                t = pseudo_inverse(g, float(x))
                if math.isfinite(t):
                    assert g.value_at(t) >= x - 1e-9
            for t in rng.uniform(0, 10, 10):
                assert pseudo_inverse(g, g.value_at(float(t))) <= t + 1e-9


def dense_horizontal_deviation(f, g, t_hi=30.0, steps=30000):
    worst = 0.0
    for t in np.linspace(0, t_hi, steps):
        ft = f.value_right(float(t))
        d = pseudo_inverse(g, ft) - t
        worst = max(worst, d)
    return worst


class TestHorizontalDeviation:
    def test_burst_over_rate(self):
        h = horizontal_deviation(token_bucket(1, 1), rate_latency(3, 0))
        assert h == pytest.approx(1 / 3)
        assert h == pytest.approx(dense_horizontal_deviation(token_bucket(1, 1), rate_latency(3, 0)), abs=1e-3)

    def test_deviation_at_time_zero(self):
        h = horizontal_deviation(token_bucket(2, 1), rate_latency(3, 0))
        assert h == pytest.approx(1 / 3)

    def test_unstable_pair_is_infinite(self):
        assert horizontal_deviation(token_bucket(5, 1), rate_latency(3, 0)) == math.inf

    def test_matches_dense_grid(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            f = normalize_concave(
                [TB(float(r), float(b)) for r, b in zip(rng.uniform(0.5, 4, 2), rng.uniform(0.1, 3, 2))]
            )
            g = normalize_convex([RL(float(rng.uniform(4.5, 9)), float(rng.uniform(0, 1)))])
            h = horizontal_deviation(f, g)
            assert h == pytest.approx(dense_horizontal_deviation(f, g), abs=1e-3)


class TestAStar:
    def test_immediate(self):
        assert a_star(token_bucket(2, 1), rate_latency(3, 0)) == 0

    def test_at_breakpoint(self):
        f = normalize_concave([TB(5, 1), TB(1, 5)])
        assert a_star(f, rate_latency(3, 0)) == pytest.approx(1.0)

    def test_never_infinite(self):
        assert a_star(token_bucket(5, 1), rate_latency(3, 0)) == math.inf


class TestClosure:
    def test_fixed_point_on_nondecreasing(self):
        g = as_piecewise(normalize_convex([RL(1, 0), RL(3, 2)]))
        c = lower_nondecreasing_closure(g)
        for t in np.linspace(0, 10, 200):
            assert c.eval_right(float(t)) == pytest.approx(g.eval_right(float(t)), abs=1e-9)

    def test_running_min_from_right(self):
        # 5 on [0,1) then 2 + (t-1) after: closure flattens the head to 2.
        g = PiecewiseCurve((0.0, 1.0), (5.0, 2.0), (0.0, 1.0))
        c = lower_nondecreasing_closure(g)
        ts = np.unique(np.concatenate([np.linspace(0, 6, 400), g.starts]))
        gv = np.array([g.eval_right(float(t)) for t in ts])
        expect = np.minimum.accumulate(gv[::-1])[::-1]
        got = np.array([c.eval_right(float(t)) for t in ts])
        assert np.allclose(got, expect, atol=1e-9)
        assert c.eval_right(0.0) == pytest.approx(2.0)

    def test_dip_becomes_plateau(self):
        # rises to 4, dips to 2, rises again: dip start flattens at level 2
        g = PiecewiseCurve((0.0, 2.0, 4.0), (0.0, 4.0, 2.0), (2.0, -1.0, 3.0))
        c = lower_nondecreasing_closure(g)
        assert c.is_nondecreasing()
        ts = np.linspace(0, 8, 800)
        gv = np.array([g.eval_right(float(t)) for t in ts])
        expect = np.minimum.accumulate(gv[::-1])[::-1]
        got = np.array([c.eval_right(float(t)) for t in ts])
        assert np.allclose(got, expect, atol=2e-2)  # grid resolution error only

    def test_forever_decreasing_rejected(self):
        g = PiecewiseCurve((0.0,), (5.0,), (-1.0,))
        with pytest.raises(ValueError):
            lower_nondecreasing_closure(g)


class TestVerticalDeviation:
    def test_token_bucket_vs_rate_latency(self):
        assert vertical_deviation(token_bucket(1, 1), rate_latency(2, 1)) == pytest.approx(2.0)

    def test_identical_curves_zero(self):
        f = token_bucket(1, 0)
        assert vertical_deviation(f, concave_to_piecewise(f)) == pytest.approx(0.0)

    def test_unbounded_when_rate_exceeds_service(self):
        assert vertical_deviation(token_bucket(5, 1), rate_latency(3, 0)) == math.inf
        assert math.isfinite(vertical_deviation(token_bucket(2, 1), rate_latency(3, 0)))

    def test_matches_dense_grid(self):
        rng = np.random.default_rng(37)
        for _ in range(40):
            n = rng.integers(1, 4)
            f = normalize_concave(
                [TB(float(r), float(b)) for r, b in zip(rng.uniform(0.3, 4, n), rng.uniform(0.05, 3, n))]
            )
            m = rng.integers(1, 3)
            g = normalize_convex(
                [RL(float(r), float(T)) for r, T in zip(rng.uniform(4.5, 9, m), rng.uniform(0, 1.5, m))]
            )
            v = vertical_deviation(f, g)
            ts = np.linspace(0, 12, 12000)
            dense = max(f.value_right(float(t)) - g.value_at(float(t)) for t in ts)
            assert v >= dense - 1e-9
            assert v == pytest.approx(dense, abs=1e-2)


class TestShiftByImpulse:
    def test_zero_shift_identity(self):
        f = token_bucket(1, 1)
        s = shift_by_impulse(f, 0)
        for t in np.linspace(1e-9, 5, 100):
            assert s.eval_right(float(t)) == pytest.approx(f.value_right(float(t)), abs=1e-12)

    def test_shifted_values(self):
        s = shift_by_impulse(token_bucket(1, 1), 2)
        assert s.eval_right(3) == pytest.approx(2)
        assert s.eval_right(1) == 0
        # value at the shift itself comes from the left (the impulse cap)
        assert s.eval_at(2) == 0
        assert s.eval_right(2) == pytest.approx(1)

    def test_negative_shift_rejected(self):
        with pytest.raises(ValueError):
            shift_by_impulse(token_bucket(1, 1), -0.5)

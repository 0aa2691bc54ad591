import math

import numpy as np
import pytest

from ncfifo.curves import (
    RateLatencySegment,
    TokenBucketSegment,
    normalize_concave,
    normalize_convex,
    rate_latency,
    token_bucket,
    zero_curve,
)
from ncfifo.exact import exact_theta_opt, intersect_vt_with_alpha1
from ncfifo.gridsearch import oracle_search
from ncfifo.residual import ResidualInput, backlog_bound, build_time_sets, vertical_deviation
from ncfifo.scenarios import ScenarioConfig, generate_scenario

TB = TokenBucketSegment
RL = RateLatencySegment


@pytest.fixture
def e1():
    return ResidualInput(
        foi=token_bucket(1, 1), cross=token_bucket(1, 1), beta=rate_latency(3, 0)
    )


@pytest.fixture
def e2():
    return ResidualInput(
        foi=normalize_concave([TB(4, 1), TB(1, 4)]),
        cross=token_bucket(1, 1),
        beta=rate_latency(3, 0),
    )


class TestIntersect:
    def test_e2_foi_breakpoint(self, e2):
        # 1 + 4*theta = 5 - 3 + (2 - theta)  =>  theta = 3/5
        c = intersect_vt_with_alpha1(e2, 1.0)
        assert c == pytest.approx(3 / 5, abs=1e-9)
        both = e2.foi.value_right(c)
        assert both == pytest.approx(3.4, abs=1e-9)

    def test_e2_absolute_point_matches_balance(self, e2):
        ts = build_time_sets(e2)
        for t_rel, th, t_abs in zip(ts.T_rel, ts.theta_rel, ts.T_abs):
            c = intersect_vt_with_alpha1(e2, t_abs)
            assert c == pytest.approx(th, abs=1e-9)

    def test_below_h_returns_none(self, e2):
        assert intersect_vt_with_alpha1(e2, 0.0) is None


class TestExact:
    def test_e1(self, e1):
        res = exact_theta_opt(e1)
        assert res.theta == pytest.approx(1 / 3, abs=1e-9)
        assert res.backlog == pytest.approx(4 / 3, abs=1e-9)

    def test_e2(self, e2):
        res = exact_theta_opt(e2)
        assert res.theta == pytest.approx(3 / 5, abs=1e-9)
        assert res.backlog == pytest.approx(3.4, abs=1e-9)
        sources = sorted(c for _, c in res.candidates)
        assert any(abs(c - 1 / 3) < 1e-9 for c in sources)
        assert any(abs(c - 3 / 5) < 1e-9 for c in sources)

    def test_no_cross_traffic(self):
        inp = ResidualInput(foi=token_bucket(1, 1), cross=zero_curve(), beta=rate_latency(3, 0))
        res = exact_theta_opt(inp)
        assert res.h_lower == 0.0
        assert res.backlog == pytest.approx(vertical_deviation(inp.foi, inp.beta), abs=1e-9)

    def test_e1_e2_against_theta_grid(self, e1, e2):
        for inp, best in ((e1, 4 / 3), (e2, 3.4)):
            grid = np.arange(inp.h_lower, 2.0, 1e-3)
            bounds = [backlog_bound(inp, float(th)) for th in grid]
            assert min(bounds) >= best - 1e-9
            assert min(bounds) <= best + 1e-2

    def test_result_invariants_on_random_scenarios(self):
        for seed in range(40):
            cfg = ScenarioConfig(n_cross=2 + seed % 4, foi_segments=2 if seed % 2 else 4, seed=seed)
            inp = generate_scenario(cfg).residual_input()
            res = exact_theta_opt(inp)
            assert res.theta >= res.h_lower - 1e-9
            assert res.backlog == pytest.approx(backlog_bound(inp, res.theta), abs=1e-9)
            # at the first intersection the bound sits on the foi curve
            if res.theta > res.h_lower + 1e-9:
                assert res.backlog == pytest.approx(inp.foi.value_right(res.theta), abs=1e-9)
            # no recorded candidate beats the reported optimum
            for _, cand in res.candidates:
                assert res.backlog <= backlog_bound(inp, cand) + 1e-9

    def test_oracle_optimality_small_batch(self):
        for seed in range(10):
            cfg = ScenarioConfig(n_cross=2 + seed % 4, foi_segments=2, seed=1000 + seed)
            inp = generate_scenario(cfg).residual_input()
            res = exact_theta_opt(inp)
            orc = oracle_search(inp, theta_step=1e-3)
            assert res.backlog <= orc.backlog + 1e-9
            assert res.backlog >= orc.backlog - 1e-2

    def test_multi_segment_beta_backlog_hosted_at_service_knot(self):
        # The distance hosted at the service curve's own breakpoint controls
        # the optimum here; the exact answer is theta = 4, backlog 33.
        inp = ResidualInput(
            foi=token_bucket(8, 1),
            cross=token_bucket(1, 1),
            beta=normalize_convex([RL(2, 0), RL(100, 4.9)]),
        )
        res = exact_theta_opt(inp)
        assert res.theta == pytest.approx(4.0, abs=1e-9)
        assert res.backlog == pytest.approx(33.0, abs=1e-9)
        orc = oracle_search(inp, theta_step=1e-3)
        assert res.backlog <= orc.backlog + 1e-9
        assert res.backlog >= orc.backlog - 1e-1  # foi rate 8 x step

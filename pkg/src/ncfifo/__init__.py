"""Per-flow backlog bounds at an aggregate FIFO server under piecewise-linear
arrival and service curves: exact first-intersection solver, decomposition
heuristic, baseline theta, scenario generator and benchmark harness."""

from .curves import (
    ConcaveCurve,
    ConvexCurve,
    PiecewiseCurve,
    RateLatencySegment,
    TokenBucketSegment,
    add_concave,
    a_star,
    curve_from_dict,
    curve_to_dict,
    eval_at,
    eval_right,
    horizontal_deviation,
    lower_nondecreasing_closure,
    normalize_concave,
    normalize_convex,
    pseudo_inverse,
    rate_latency,
    shift_by_impulse,
    sum_concave,
    token_bucket,
    vertical_deviation,
    zero_curve,
)
from .residual import (
    InstabilityError,
    ResidualInput,
    TimeSets,
    backlog_bound,
    build_time_sets,
    residual_curve,
    theta_for_relative_time,
    vt_eval,
)
from .exact import SolveResult, exact_theta_opt, intersect_vt_with_alpha1
from .heuristic import (
    AdjustedTheta,
    HeuristicTrace,
    adjust_theta,
    heuristic_theta_opt,
    segment_theta,
)
from .scenarios import (
    Scenario,
    ScenarioConfig,
    aggregate_backlog,
    generate_scenario,
    scenario_from_dict,
    scenario_to_dict,
    segregation_penalty,
    solve_disco,
    theta_disco,
)
from .gridsearch import OracleResult, oracle_search

__all__ = [name for name in dir() if not name.startswith("_")]

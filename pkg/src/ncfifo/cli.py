"""Command-line surface: generate scenarios, solve them with any method,
brute-force the theta grid, run experiment sweeps and summarize result CSVs."""

from __future__ import annotations

import argparse
import json
import sys

from .exact import exact_theta_opt
from .experiment import (
    baseline_rows,
    penalty_series,
    read_penalties,
    read_rows,
    render_baseline,
    render_penalties,
    render_summary,
    run_experiment,
    summarize,
    write_penalties,
    write_rows,
    write_summary,
)
from .gridsearch import oracle_search
from .heuristic import heuristic_theta_opt
from .residual import InstabilityError
from .scenarios import (
    ScenarioConfig,
    generate_scenario,
    scenario_from_dict,
    scenario_to_dict,
    solve_disco,
)

EXIT_INSTABILITY = 1
EXIT_BAD_INPUT = 2


def _load_scenario(path: str):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SystemExit(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        print(f"{path}: invalid JSON: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_INPUT)
    try:
        return scenario_from_dict(data)
    except ValueError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_INPUT)


def _result_json(res) -> str:
    return json.dumps(
        {
            "method": res.method,
            "theta": res.theta,
            "backlog": res.backlog,
            "h_lower": res.h_lower,
            "candidates": [[t, c] for t, c in res.candidates],
        }
    )


def cmd_gen(args) -> int:
    cfg = ScenarioConfig(
        n_cross=args.n_cross, foi_segments=args.foi_segments, seed=args.seed
    )
    blob = json.dumps(scenario_to_dict(generate_scenario(cfg)), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(blob + "\n")
    else:
        print(blob)
    return 0


def cmd_solve(args) -> int:
    scenario = _load_scenario(args.scenario)
    try:
        inp = scenario.residual_input()
        methods = ["exact", "heuristic", "disco"] if args.method == "all" else [args.method]
        for m in methods:
            if m == "exact":
                res = exact_theta_opt(inp)
            elif m == "heuristic":
                res = heuristic_theta_opt(inp)[0]
            else:
                res = solve_disco(inp, scenario.cross_first_bursts())
            print(_result_json(res))
    except InstabilityError as exc:
        print(f"unstable scenario: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    return 0


def cmd_oracle(args) -> int:
    scenario = _load_scenario(args.scenario)
    try:
        inp = scenario.residual_input()
        res = oracle_search(
            inp, theta_step=args.theta_step, t_horizon_factor=args.t_horizon_factor
        )
    except InstabilityError as exc:
        print(f"unstable scenario: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    print(
        json.dumps(
            {
                "theta": res.theta,
                "backlog": res.backlog,
                "h_lower": res.h_lower,
                "t_max": res.t_max,
                "profile": res.profile(),
            }
        )
    )
    return 0


def penalty_path(out_csv: str) -> str:
    return out_csv + ".penalty.csv" if not out_csv.endswith(".csv") else out_csv[:-4] + ".penalty.csv"


def cmd_experiment(args) -> int:
    rows, penalties = run_experiment(
        iterations=args.iterations,
        cross_min=args.cross_min,
        cross_max=args.cross_max,
        foi_segments=args.foi_segments,
        master_seed=args.seed,
        with_penalty=not args.no_penalty,
    )
    write_rows(args.out, rows)
    if penalties:
        write_penalties(penalty_path(args.out), penalties)
    print(f"wrote {len(rows)} rows to {args.out}")
    if penalties:
        print(f"wrote {len(penalties)} penalty rows to {penalty_path(args.out)}")
    return 0


def cmd_report(args) -> int:
    try:
        rows = read_rows(args.csv)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BAD_INPUT
    summary = summarize(rows)
    print(render_summary(summary, rows))
    print()
    print(render_baseline(baseline_rows(rows)))
    try:
        penalties = read_penalties(penalty_path(args.csv))
    except (OSError, ValueError):
        penalties = []
    if penalties:
        print()
        print(render_penalties(penalty_series(penalties)))
    if args.out:
        write_summary(args.out, summary)
        print(f"\nwrote summary to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncfifo",
        description="Per-flow FIFO backlog bounds under piecewise-linear curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit a scenario JSON from config and seed")
    p.add_argument("--n-cross", type=int, default=2)
    p.add_argument("--foi-segments", type=int, default=2, choices=(1, 2, 4))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one scenario file")
    p.add_argument("scenario")
    p.add_argument(
        "--method", default="all", choices=("exact", "heuristic", "disco", "all")
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force theta grid search")
    p.add_argument("scenario")
    p.add_argument("--theta-step", type=float, default=1e-3)
    p.add_argument("--t-horizon-factor", type=float, default=2.0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="run the benchmark sweep, write CSV rows")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--cross-min", type=int, default=2)
    p.add_argument("--cross-max", type=int, default=10)
    p.add_argument("--foi-segments", type=int, default=2, choices=(2, 4))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--no-penalty",
        action="store_true",
        help="skip the per-flow segregation-penalty sweep",
    )
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summarize an experiment CSV")
    p.add_argument("csv")
    p.add_argument("--out", default=None, help="optional summary CSV path")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())

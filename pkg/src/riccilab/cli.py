"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
configuration or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .flow import (FAMILIES, flow_trajectory, make_family, trajectory_rows,
                   write_ball_profile_csv, write_trajectory_csv)
from .metric import FiniteMetricSpace, alexandrov_check, gh_upper_bound
from .scenario import (ConfigError, SchemaMismatch, diff_reports,
                       list_builtin_scenarios, resolve_config, run_scenario)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _run_one(ref: str, out: str, seed, tol, budget):
    cfg = resolve_config(ref, seed)
    m = run_scenario(cfg, out, tol=tol, budget=budget)
    failed = [k for k, v in m.verdicts.items() if not v]
    return m.scenario_id, m.passed, failed, str(m.out_dir), m.duration


def cmd_run(args) -> int:
    refs = list(args.config)
    if args.all:
        refs += [sid for sid, _ in list_builtin_scenarios()]
    if not refs:
        print("error: give at least one config or --all", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for ref in refs:          # validate everything before running anything
            resolve_config(ref, args.seed)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = max(1, args.jobs)
    call = (lambda r: _run_one(r, args.out, args.seed, args.tol, args.budget))
    if jobs == 1 or len(refs) == 1:
        results = [call(r) for r in refs]
    else:
        with ProcessPoolExecutor(jobs) as pool:
            futs = [pool.submit(_run_one, r, args.out, args.seed, args.tol, args.budget)
                    for r in refs]
            results = [f.result() for f in futs]
    all_ok = True
    for sid, ok, failed, out_dir, dur in results:
        print(f"{'PASS' if ok else 'FAIL'}  {sid}  ({dur:.2f}s)  -> {out_dir}")
        for name in failed:
            print(f"      failed: {name}")
        all_ok &= ok
    return EXIT_OK if all_ok else EXIT_FAIL


def cmd_list(args) -> int:
    for sid, desc in list_builtin_scenarios():
        print(f"{sid:28s} {desc}")
    return EXIT_OK


def cmd_diff(args) -> int:
    try:
        d = diff_reports(args.a, args.b)
    except (SchemaMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"rows: {d.rows}  max margin difference: {d.max_diff!r}")
    for name, v in d.per_check.items():
        if v > 0:
            print(f"  {name}: {v!r}")
    return EXIT_OK if d.max_diff <= args.tol else EXIT_FAIL


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) == 3:
        return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    return np.array([float(x) for x in text.replace(",", " ").split()])


def cmd_flow(args) -> int:
    try:
        params = {}
        for kv in args.param:
            k, v = kv.split("=", 1)
            params[k] = int(v) if k == "order" else float(v)
        tr = flow_trajectory(make_family(args.family, **params), _parse_grid(args.t_grid))
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(tr, out / "trajectory.csv")
        write_ball_profile_csv(tr, out / "ball_profile.csv")
        print(f"wrote {out / 'trajectory.csv'} and {out / 'ball_profile.csv'}")
    else:
        header, rows = trajectory_rows(tr)
        print(",".join(header))
        for r in rows:
            print(",".join(r))
    return EXIT_OK


def _read_space(path):
    return FiniteMetricSpace.read(path)


def cmd_gh(args) -> int:
    try:
        X, Y = _read_space(args.a), _read_space(args.b)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    gh = gh_upper_bound(X, Y, budget=args.budget, seed=args.seed)
    w = gh.witness
    print(json.dumps({
        "bound": gh.bound, "exhaustive": gh.exhaustive,
        "forward_nu": gh.forward.nu, "backward_nu": gh.backward.nu,
        "witness": {"direction": "forward" if w is gh.forward else "backward",
                    "image": list(w.map.image), "distortion": w.distortion,
                    "covering": w.covering},
    }, indent=2))
    return EXIT_OK


def cmd_alexandrov(args) -> int:
    try:
        S = _read_space(args.space)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rep = alexandrov_check(S, args.k, args.tol)
    print(f"k = {rep.k!r}  tol = {rep.tol!r}  checked = {rep.checked}  skipped = {rep.skipped}")
    print(f"min margin = {rep.min_margin!r}  violations = {len(rep.violations)}")
    for p, q, r, s, m in rep.violations[:20]:
        print(f"  p={p} q={q} r={r} s={s} margin={m!r}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riccilab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run scenario configs (paths or builtin names)")
    p.add_argument("config", nargs="*")
    p.add_argument("--all", action="store_true", help="also run every builtin scenario")
    p.add_argument("--out", default="riccilab-out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="override the pass tolerance")
    p.add_argument("--budget", type=int, default=None, help="GH search evaluation budget")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("list", help="list builtin scenarios")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("diff", help="compare the margins of two reports.csv files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tol", type=float, default=0.0, help="allowed max difference")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("flow", help="tabulate a closed-form flow")
    p.add_argument("family", choices=sorted(FAMILIES))
    p.add_argument("--t-grid", required=True, help="start:stop:points or a list of times")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("gh", help="GH upper bound between two metric-space files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gh)

    p = sub.add_parser("alexandrov", help="triangle-comparison check of a metric-space file")
    p.add_argument("space")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_alexandrov)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

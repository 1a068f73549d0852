"""Configuration-driven scenario runner.

A scenario is one INI file.  ``[scenario]`` names it, ``[source]`` and
``[grid]`` build a trajectory, an optional ``[rescale]`` transforms it, and
dotted sections add work: ``[check.NAME]`` runs an estimate check,
``[metric.NAME]`` a finite-metric task and ``[probe.NAME]`` a standalone
diagnostic.  Every check may declare ``expect = fail`` for negative
controls; the scenario passes when every outcome matches its expectation.

Outputs go to ``<out>/<scenario_id>/`` and are byte-for-byte reproducible:
floats are written as shortest round-trip reprs and nothing depends on the
wall clock.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import math
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import _backend
from .curvature import (PinchingParams, TwoForm3, boundary_rate,
                        sample_barrier_point, split_two_form, wedge)
from .estimates import (KINDS, EstimateReport, check_curvature_time,
                        check_distance_bounds, check_hamilton_ivey,
                        check_ricci_lower, check_sec_lower,
                        check_volume_persistence, check_volume_ratio, g_monitor,
                        necklike_report, necklike_scan, window_monitor)
from .flow import (FAMILIES, RescaleTransform, Trajectory, asymptotic_volume_ratio,
                   blow_up_time, diameter_floor_margin, exact_flow,
                   flow_trajectory, injectivity_lower_bound, integrate_reaction,
                   make_family, normalize_curvature, rescale,
                   write_ball_profile_csv, write_trajectory_csv)
from .metric import (FiniteMetricSpace, alexandrov_check, curve_length,
                     directed_happrox, extract_approx_from_embedding,
                     gh_convergence_experiment, gh_upper_bound,
                     glue_disjoint_union, hausdorff_distance, intrinsic_check,
                     sample_model_space, sample_sphere, validate_metric,
                     write_violation_csv)

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")

_COMMON = {"expect"}
_CHECK_KEYS = {
    "curvature-time": {"c", "window"},
    "ricci-lower": {"eps0", "variant", "k", "window"},
    "sec-lower": {"eps0", "variant", "k", "window"},
    "hamilton-ivey": {"window"},
    "distance-lower": {"pair", "c0", "C", "d0", "curvature_time_c", "window"},
    "distance-upper": {"pair", "c0", "C", "d0", "curvature_time_c", "window"},
    "diameter-upper": {"pair", "c0", "C", "d0", "curvature_time_c", "window"},
    "volume-persist": {"v0", "window"},
    "volume-ratio": {"l", "eps", "window"},
    "g-monitor": {"delta", "time_offset", "c_n", "window"},
    "necklike-scan": {"C", "delta", "time_offset", "window"},
    "theorem61-window": {"v0", "d0", "eps", "c", "pinch_window", "window"},
}
_REQUIRED = {
    "curvature-time": {"c"}, "ricci-lower": {"eps0"}, "sec-lower": {"eps0"},
    "distance-lower": {"pair"}, "distance-upper": {"pair"},
    "diameter-upper": {"pair"}, "volume-ratio": {"l", "eps"},
    "g-monitor": {"delta", "time_offset"},
    "necklike-scan": {"C", "delta", "time_offset"},
}
_SPACE_KEYS = {"space", "n", "radius", "path", "side", "seed"}
_METRIC_KEYS = {
    "alexandrov": _SPACE_KEYS | {"k", "tol", "placement"},
    "intrinsic": _SPACE_KEYS | {"delta"},
    "gh-convergence": {"times", "n", "budget", "seed"},
    "sandwich": {"pairs", "max_points", "seed"},
}
_PROBE_KEYS = {
    "n11-sweep": {"variant", "samples", "eps0_min", "eps0_max", "seed"},
    "blow-up": {"spectrum", "expected", "tol"},
    "injectivity": {"r"},
    "asymptotic-volume": {"max_ratio", "min_ratio"},
    "two-form-split": {"samples", "seed"},
    "rescale-invariance": {"c", "t0"},
}
_SOURCE_REACTION = {"family", "spectrum", "tol", "cap", "h_min"}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``problems`` lists every violation."""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# ---------------------------------------------------------------- config

@dataclass
class TaskSpec:
    section: str
    name: str
    kind: str
    params: Dict[str, str]

    def get(self, key, conv=float, default=None):
        v = self.params.get(key)
        return default if v is None else conv(v)

    @property
    def expect_pass(self) -> bool:
        return self.params.get("expect", "pass") == "pass"


@dataclass
class ScenarioConfig:
    scenario_id: str
    description: str = ""
    seed: int = 0
    source: Dict[str, str] = field(default_factory=dict)
    grid: Dict[str, str] = field(default_factory=dict)
    rescale: Optional[Dict[str, str]] = None
    checks: List[TaskSpec] = field(default_factory=list)
    metric: List[TaskSpec] = field(default_factory=list)
    probes: List[TaskSpec] = field(default_factory=list)

    def canonical(self) -> dict:
        return {
            "scenario_id": self.scenario_id, "description": self.description,
            "seed": self.seed, "source": self.source, "grid": self.grid,
            "rescale": self.rescale,
            "checks": [dataclasses.asdict(t) for t in self.checks],
            "metric": [dataclasses.asdict(t) for t in self.metric],
            "probes": [dataclasses.asdict(t) for t in self.probes],
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _window(text: Optional[str]):
    if text is None:
        return None
    w = _floats(text)
    if len(w) != 2 or not w[0] <= w[1]:
        raise ValueError(f"window must be 'a, b' with a <= b, got {text!r}")
    return (w[0], w[1])


def parse_config(text: str, seed: Optional[int] = None) -> ScenarioConfig:
    """Parse and validate scenario text; raises ConfigError listing all problems."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    problems: List[str] = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"unparseable config: {exc}"]) from None
    if not cp.has_section("scenario"):
        raise ConfigError(["missing [scenario] section"])
    head = dict(cp["scenario"])
    sid = head.pop("id", "")
    if not _ID_RE.match(sid):
        problems.append(f"scenario id {sid!r} is empty or not filesystem-safe")
    desc = head.pop("description", "")
    try:
        cfg_seed = int(head.pop("seed", "0"))
    except ValueError:
        problems.append("scenario seed must be an integer")
        cfg_seed = 0
    problems += [f"[scenario] unknown key {k!r}" for k in head]
    cfg = ScenarioConfig(sid, desc, cfg_seed if seed is None else int(seed))

    for sec in cp.sections():
        body = dict(cp[sec])
        if sec == "scenario":
            continue
        if sec == "source":
            cfg.source = body
        elif sec == "grid":
            cfg.grid = body
        elif sec == "rescale":
            cfg.rescale = body
        elif "." in sec:
            prefix, name = sec.split(".", 1)
            key = {"check": "kind", "metric": "task", "probe": "probe"}.get(prefix)
            if key is None or not name:
                problems.append(f"unknown section [{sec}]")
                continue
            kind = body.pop(key, "")
            table = {"check": _CHECK_KEYS, "metric": _METRIC_KEYS, "probe": _PROBE_KEYS}[prefix]
            if kind not in table:
                problems.append(f"[{sec}] {key} {kind!r} is not one of {sorted(table)}")
                continue
            extra = set(body) - table[kind] - _COMMON
            problems += [f"[{sec}] unknown key {k!r}" for k in sorted(extra)]
            missing = _REQUIRED.get(kind, set()) - set(body) if prefix == "check" else set()
            problems += [f"[{sec}] missing required key {k!r}" for k in sorted(missing)]
            if body.get("expect", "pass") not in ("pass", "fail"):
                problems.append(f"[{sec}] expect must be 'pass' or 'fail'")
            getattr(cfg, {"check": "checks", "metric": "metric", "probe": "probes"}[prefix]).append(
                TaskSpec(sec, name, kind, body))
        else:
            problems.append(f"unknown section [{sec}]")

    problems += _validate_source(cfg)
    for t in cfg.checks:
        problems += _validate_check(t)
    if problems:
        raise ConfigError(problems)
    return cfg


def _validate_source(cfg: ScenarioConfig) -> List[str]:
    src, grid = cfg.source, cfg.grid
    out = []
    if not src:
        if cfg.checks or cfg.rescale:
            out.append("checks and [rescale] need a [source] section")
        if any(t.kind in ("gh-convergence",) for t in cfg.metric):
            out.append("gh-convergence needs a [source] family")
        return out
    fam = src.get("family", "")
    if fam == "reaction":
        out += [f"[source] unknown key {k!r}" for k in sorted(set(src) - _SOURCE_REACTION)]
        try:
            if len(_floats(src.get("spectrum", ""))) != 3:
                out.append("[source] spectrum needs three numbers")
        except ValueError:
            out.append("[source] spectrum must be numeric")
    elif fam in FAMILIES:
        allowed = {f.name for f in dataclasses.fields(FAMILIES[fam])} | {"family"}
        out += [f"[source] unknown key {k!r} for {fam}" for k in sorted(set(src) - allowed)]
    else:
        out.append(f"[source] family {fam!r} is not 'reaction' or one of {sorted(FAMILIES)}")
    if not grid:
        out.append("missing [grid] section")
    else:
        extra = set(grid) - {"start", "stop", "points", "times"}
        out += [f"[grid] unknown key {k!r}" for k in sorted(extra)]
        if "times" not in grid and "stop" not in grid:
            out.append("[grid] needs 'stop' or 'times'")
    if cfg.rescale is not None:
        extra = set(cfg.rescale) - {"c", "t0"}
        out += [f"[rescale] unknown key {k!r}" for k in sorted(extra)]
        if "c" not in cfg.rescale:
            out.append("[rescale] needs 'c'")
    return out


def _validate_check(t: TaskSpec) -> List[str]:
    out = []
    for k, v in t.params.items():
        if k in ("expect", "pair", "variant"):
            continue
        try:
            _window(v) if k == "window" else float(v)
        except ValueError as exc:
            out.append(f"[{t.section}] {k}: {exc}")
    if t.kind in ("ricci-lower", "sec-lower") and "eps0" in t.params:
        try:
            PinchingParams(float(t.params["eps0"]),
                           t.params.get("variant", t.kind.split("-")[0] + "-4.1"),
                           float(t.params.get("k", 100)))
        except ValueError as exc:
            out.append(f"[{t.section}] {exc}")
        if not t.params.get("variant", t.kind[:3]).startswith(t.kind[:3]):
            out.append(f"[{t.section}] variant does not match kind {t.kind}")
    return out


def load_config(path, seed: Optional[int] = None) -> ScenarioConfig:
    return parse_config(Path(path).read_text(), seed)


# ---------------------------------------------------------------- builtins

def _builtin_dir():
    return resources.files("riccilab") / "scenarios"


def list_builtin_scenarios() -> List[Tuple[str, str]]:
    """(scenario id, description) of every shipped config, sorted by file name."""
    out = []
    for entry in sorted(_builtin_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".ini"):
            cfg = parse_config(entry.read_text())
            out.append((cfg.scenario_id, cfg.description))
    return out


def builtin_config(name: str, seed: Optional[int] = None) -> ScenarioConfig:
    entry = _builtin_dir() / f"{name}.ini"
    if not entry.is_file():
        raise ConfigError([f"no builtin scenario named {name!r}"])
    return parse_config(entry.read_text(), seed)


def resolve_config(ref: str, seed: Optional[int] = None) -> ScenarioConfig:
    """A path to an .ini file, or the name of a builtin scenario."""
    p = Path(ref)
    if p.is_file():
        return load_config(p, seed)
    return builtin_config(ref, seed)


# ---------------------------------------------------------------- building

def build_trajectory(cfg: ScenarioConfig) -> Optional[Trajectory]:
    src, g = cfg.source, cfg.grid
    if not src:
        return None
    if "times" in g:
        grid = np.array(_floats(g["times"]))
    else:
        grid = np.linspace(float(g.get("start", 0.0)), float(g["stop"]),
                           int(g.get("points", 41)))
    if src["family"] == "reaction":
        kw = {k: float(src[k]) for k in ("tol", "cap", "h_min") if k in src}
        tr = integrate_reaction(_floats(src["spectrum"]), float(grid[-1]), grid=grid, **kw)
    else:
        tr = flow_trajectory(_family(cfg), grid)
    if cfg.rescale:
        tr = rescale(tr, RescaleTransform(float(cfg.rescale["c"]),
                                          float(cfg.rescale.get("t0", 0.0))))
    return tr


def _family(cfg: ScenarioConfig):
    src = dict(cfg.source)
    name = src.pop("family")
    params = {k: (int(v) if k == "order" else float(v)) for k, v in src.items()}
    return make_family(name, **params)


# ---------------------------------------------------------------- results

@dataclass
class TaskResult:
    name: str
    kind: str
    ok: bool
    passed: Optional[bool]
    expected: bool = True
    error: Optional[str] = None
    details: dict = field(default_factory=dict)

    def summary(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "ok": self.ok,
             "passed": self.passed, "expected_pass": self.expected}
        if self.error is not None:
            d["error"] = self.error
        d.update(self.details)
        return d


@dataclass
class RunManifest:
    scenario_id: str
    config_hash: str
    passed: bool
    verdicts: Dict[str, bool]
    files: Dict[str, str]
    out_dir: Path
    backend: str
    duration: float = field(default=0.0, compare=False)

    def to_json(self) -> dict:
        # wall-clock time is kept off disk so reruns stay byte-identical
        return {"scenario_id": self.scenario_id, "config_hash": self.config_hash,
                "passed": self.passed, "verdicts": self.verdicts,
                "files": self.files, "backend": self.backend}


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n")


def _report_summary(rep: EstimateReport) -> dict:
    s = rep.summary()
    s.pop("kind")
    s.pop("passed")
    return s


# ---------------------------------------------------------------- checks

def _run_check(t: TaskSpec, tr: Trajectory, tol: Optional[float]):
    """Reports produced by one check section (a list), or a window summary."""
    w = _window(t.params.get("window"))
    k = t.kind
    if k == "curvature-time":
        return check_curvature_time(tr, t.get("c"), window=w)
    if k in ("ricci-lower", "sec-lower"):
        p = PinchingParams(t.get("eps0"), t.params.get("variant", k[:3] + "-4.1"),
                           t.get("k", float, 100.0))
        fn = check_ricci_lower if k == "ricci-lower" else check_sec_lower
        return [fn(tr, p, window=w)]
    if k == "hamilton-ivey":
        return [check_hamilton_ivey(tr, window=w)]
    if k in ("distance-lower", "distance-upper", "diameter-upper"):
        reps = check_distance_bounds(tr, t.params["pair"], c0=t.get("c0", float, 0.0),
                                     C=t.get("C", float, 4.0), d0=t.get("d0"),
                                     curvature_time_c=t.get("curvature_time_c"), window=w)
        return [r for r in reps if r.kind == k]
    # v0 and d0 default to the values at the start of the checked window
    s0 = next((s for s in tr.snapshots if w is None or s.t >= w[0]), tr.snapshots[0])
    if k == "volume-persist":
        v0 = t.get("v0", float, s0.volume)
        return [check_volume_persistence(tr, v0, window=w)]
    if k == "volume-ratio":
        return check_volume_ratio(tr, t.get("l"), t.get("eps"), window=w)
    if k == "g-monitor":
        return g_monitor(tr, t.get("delta"), t.get("time_offset"),
                         c_n=t.get("c_n", float, 1.0), window=w)
    if k == "necklike-scan":
        rows = necklike_scan(tr, t.get("C"), t.get("delta"), t.get("time_offset"), window=w)
        rep = necklike_report(rows, t.get("delta"))
        rep.constants.update(C=t.get("C"), essential=sum(r.essential for r in rows),
                             necklike=sum(r.necklike for r in rows))
        return [rep]
    if k == "theorem61-window":
        return window_monitor(tr, t.get("v0", float, s0.volume), t.get("d0", float, s0.diameter),
                                 eps=t.get("eps"), c=t.get("c"),
                                 pinch_window=t.get("pinch_window", float, 1.0 / 200.0),
                                 window=w)
    raise AssertionError(k)


def _execute_check(t: TaskSpec, tr: Trajectory, tol: Optional[float]):
    try:
        out = _run_check(t, tr, tol)
    except (ValueError, KeyError, ArithmeticError) as exc:
        return [TaskResult(t.name, t.kind, False, None, t.expect_pass,
                           error=f"{type(exc).__name__}: {exc}")], []
    if t.kind == "theorem61-window":
        held = out.ricci_half_held and out.Rt_within_c is not False
        res = TaskResult(t.name, t.kind, held == t.expect_pass, held, t.expect_pass,
                         details={"window": out.summary()})
        return [res], []
    reports = []
    for rep in out:
        if tol is not None:
            rep.tol = tol
        name = f"{t.name}/{rep.label}" if len(out) > 1 else t.name
        reports.append((name, rep))
    # experimental reports are tabulated but never decide the verdict
    decisive = [rep for _, rep in reports if not rep.experimental]
    passed = all(rep.passed for rep in decisive)
    details = {"reports": [dict(_report_summary(rep), name=name, kind=rep.kind,
                                passed=rep.passed) for name, rep in reports]}
    res = TaskResult(t.name, t.kind, passed == t.expect_pass, passed, t.expect_pass,
                     details=details)
    return [res], reports


def _write_reports(reports, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "kind", "label", "t", "lhs", "rhs", "margin", "pass"])
        for name, rep in reports:
            for t, lhs, rhs, m, ok in rep.rows():
                w.writerow([name, rep.kind, rep.label, repr(t), repr(lhs), repr(rhs),
                            repr(m), int(ok)])


# ---------------------------------------------------------------- metric tasks

def _tripod() -> FiniteMetricSpace:
    return FiniteMetricSpace([[0, 1, 1, 1], [1, 0, 2, 2], [1, 2, 0, 2], [1, 2, 2, 0]],
                             ("hub", "leaf1", "leaf2", "leaf3"))


def _space(t: TaskSpec, cfg: ScenarioConfig) -> FiniteMetricSpace:
    kind = t.params.get("space", "sphere")
    seed = t.get("seed", int, cfg.seed)
    n = t.get("n", int, 20)
    if kind == "sphere":
        return sample_sphere(n, 2, t.get("radius", float, 1.0), seed)
    if kind == "tripod":
        return _tripod()
    if kind == "grid":
        side = t.get("side", int, 4)
        return FiniteMetricSpace.from_points([(i, j) for i in range(side) for j in range(side)])
    if kind == "circle":
        ang = 2 * math.pi * np.arange(n) / n
        d = np.abs(ang[:, None] - ang[None, :])
        return FiniteMetricSpace(t.get("radius", float, 1.0) * np.minimum(d, 2 * math.pi - d))
    if kind == "model":
        return sample_model_space(_family(cfg), n, seed)
    if kind == "file":
        return FiniteMetricSpace.read(t.params["path"])
    raise ValueError(f"unknown space {kind!r}")


def _sandwich(pairs: int, max_points: int, seed: int):
    """Glue / extract round trips on random planar spaces; returns rows and violation count."""
    rng = np.random.default_rng(seed)
    rows, bad = [], 0
    for i in range(pairs):
        X = FiniteMetricSpace.from_points(rng.normal(size=(int(rng.integers(1, max_points + 1)), 2)))
        Y = FiniteMetricSpace.from_points(rng.normal(size=(int(rng.integers(1, max_points + 1)), 2)))
        cert, _ = directed_happrox(X, Y)
        nu = max(cert.nu, 1e-3)
        Z = glue_disjoint_union(X, Y, cert.map, nu)
        xs, ys = range(X.n), range(X.n, X.n + Y.n)
        valid = not validate_metric(Z.d)
        h = hausdorff_distance(Z, xs, ys)
        ext = extract_approx_from_embedding(Z, xs, ys, max(h, 1e-300) / 2.0)
        gh = gh_upper_bound(X, Y, seed=seed)
        ok = valid and h <= 2 * nu * (1 + 1e-12) and ext.nu <= 2 * h * (1 + 1e-12) + 1e-15 \
            and gh.bound <= 2 * cert.nu
        bad += not ok
        rows.append((i, X.n, Y.n, cert.nu, nu, h, ext.nu, gh.bound, int(ok)))
    return rows, bad


def _run_metric(t: TaskSpec, cfg: ScenarioConfig, out: Path, files: List[str],
                tol: Optional[float], budget: Optional[int]) -> TaskResult:
    fname = f"metric_{t.name}.csv"
    if t.kind == "alexandrov":
        S = _space(t, cfg)
        rep = alexandrov_check(S, t.get("k", float, 0.0), t.get("tol", float, tol),
                               placement=t.params.get("placement", "two-distance"))
        write_violation_csv(rep.rows(), out / fname)
        files.append(fname)
        return TaskResult(t.name, t.kind, rep.passed == t.expect_pass, rep.passed, t.expect_pass,
                          details={"k": rep.k, "tol": rep.tol, "min_margin": rep.min_margin,
                                   "violations": len(rep.violations),
                                   "checked": rep.checked, "skipped": rep.skipped})
    if t.kind == "intrinsic":
        S = _space(t, cfg)
        delta = t.get("delta", float, S.diameter())
        ok = intrinsic_check(S, delta)
        tour = list(range(S.n)) + [0]
        return TaskResult(t.name, t.kind, ok == t.expect_pass, ok, t.expect_pass,
                          details={"delta": delta, "points": S.n,
                                   "tour_length": curve_length(S, tour)})
    if t.kind == "gh-convergence":
        times = _floats(t.params.get("times", "0.001 0.002 0.004 0.008 0.016"))
        rows = gh_convergence_experiment(_family(cfg), times, n=t.get("n", int, 20),
                                         seed=t.get("seed", int, cfg.seed),
                                         budget=t.get("budget", int, budget or 20000))
        with open(out / fname, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "bound", "identity_bound", "envelope", "floor", "exhaustive"])
            for r in rows:
                w.writerow([repr(r.t), repr(r.bound), repr(r.identity_bound),
                            repr(r.envelope), repr(r.floor), int(r.exhaustive)])
        files.append(fname)
        bounds = [r.bound for r in sorted(rows, key=lambda r: r.t)]
        within = all(r.within_envelope for r in rows)
        monotone = all(a <= b + 1e-15 for a, b in zip(bounds, bounds[1:]))
        ok = within and monotone
        return TaskResult(t.name, t.kind, ok == t.expect_pass, ok, t.expect_pass,
                          details={"within_envelope": within, "monotone": monotone,
                                   "max_bound": max(bounds) if bounds else 0.0})
    if t.kind == "sandwich":
        rows, bad = _sandwich(t.get("pairs", int, 50), t.get("max_points", int, 5),
                              t.get("seed", int, cfg.seed))
        with open(out / fname, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pair", "nx", "ny", "happrox", "nu", "hausdorff", "extracted_nu",
                        "gh_bound", "ok"])
            for r in rows:
                w.writerow([r[0], r[1], r[2], *(repr(float(x)) for x in r[3:8]), r[8]])
        files.append(fname)
        ok = bad == 0
        return TaskResult(t.name, t.kind, ok == t.expect_pass, ok, t.expect_pass,
                          details={"pairs": len(rows), "violations": bad})
    raise AssertionError(t.kind)


# ---------------------------------------------------------------- probes

def _run_probe(t: TaskSpec, cfg: ScenarioConfig, tr: Optional[Trajectory]) -> TaskResult:
    seed = t.get("seed", int, cfg.seed)
    if t.kind == "n11-sweep":
        rng = np.random.default_rng(seed)
        variant = t.params.get("variant", "ricci-4.1")
        lo, hi = t.get("eps0_min", float, 1e-6), t.get("eps0_max", float, 1e-2)
        n = t.get("samples", int, 10000)
        worst, used = math.inf, 0
        for _ in range(n):
            draw = sample_barrier_point(rng, variant, (lo, hi))
            if draw is None:
                continue
            vals, p, tt = draw
            try:
                v = boundary_rate(vals, p, tt)
            except ValueError:
                continue
            used += 1
            worst = min(worst, v)
        ok = used > 0 and worst > 0
        details = {"variant": variant, "samples": used, "min_value": worst}
    elif t.kind == "blow-up":
        s0 = _floats(t.params["spectrum"]) if "spectrum" in t.params else _floats(cfg.source["spectrum"])
        res = blow_up_time(s0)
        est = None if res is None else res[0]
        exp = t.get("expected")
        ok = res is not None and (exp is None or abs(est - exp) <= t.get("tol", float, 1e-4))
        details = {"estimate": est, "bracket": None if res is None else list(res[1]),
                   "expected": exp}
    elif t.kind == "injectivity":
        f = normalize_curvature(_family(cfg))
        snap = exact_flow(f, 0.0)
        r = t.get("r", float, math.pi / 4)
        inj = injectivity_lower_bound(snap, r)
        floor = diameter_floor_margin(snap) if snap.volume is not None else None
        ok = 0 < inj <= r and (floor is None or floor >= 0)
        details = {"r": r, "bound": inj, "diameter_floor_margin": floor}
    elif t.kind == "asymptotic-volume":
        est = asymptotic_volume_ratio(_family(cfg))
        ok = est.value <= t.get("max_ratio", float, math.inf) and \
            est.value >= t.get("min_ratio", float, -math.inf)
        details = {"value": est.value, "extrapolated": est.extrapolated}
    elif t.kind == "two-form-split":
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(t.get("samples", int, 1000)):
            a, b, c = rng.normal(size=3)
            X, V = split_two_form(TwoForm3(float(a), float(b), float(c)))
            worst = max(worst, max(abs(u - v) for u, v in zip(wedge(X, V), (a, b, c))),
                        abs(float(np.dot(X, V))))
        ok = worst <= 1e-12
        details = {"max_error": worst}
    elif t.kind == "rescale-invariance":
        if tr is None:
            raise ValueError("rescale-invariance needs a trajectory")
        c = t.get("c", float, 4.0)
        out = rescale(tr, RescaleTransform(c, t.get("t0", float, float(tr.grid[0]))))
        worst = 0.0
        for a, b in zip(tr.snapshots, out.snapshots):
            for (ra, qa), (rb, qb) in zip(a.ball_profile, b.ball_profile):
                worst = max(worst, abs(qa - qb), abs(rb - ra * math.sqrt(c)) / max(rb, 1.0))
        ok = worst <= 1e-9
        details = {"c": c, "max_profile_difference": worst}
    else:
        raise AssertionError(t.kind)
    return TaskResult(t.name, t.kind, ok == t.expect_pass, ok, t.expect_pass, details=details)


# ---------------------------------------------------------------- running

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_scenario(cfg: ScenarioConfig, out_root=".", tol: Optional[float] = None,
                 budget: Optional[int] = None) -> RunManifest:
    """Run every section of ``cfg`` and write its outputs under out_root/<id>/."""
    t_start = time.perf_counter()
    out = Path(out_root) / cfg.scenario_id
    out.mkdir(parents=True, exist_ok=True)
    files: List[str] = []
    results: List[TaskResult] = []
    reports = []

    tr = build_trajectory(cfg)
    if tr is not None:
        write_trajectory_csv(tr, out / "trajectory.csv")
        files.append("trajectory.csv")
        if any(s.ball_profile for s in tr.snapshots):
            write_ball_profile_csv(tr, out / "ball_profile.csv")
            files.append("ball_profile.csv")

    for t in cfg.checks:
        res, reps = _execute_check(t, tr, tol)
        results += res
        reports += reps
    if reports:
        _write_reports(reports, out / "reports.csv")
        files.append("reports.csv")

    for t in cfg.metric:
        try:
            results.append(_run_metric(t, cfg, out, files, tol, budget))
        except (ValueError, ArithmeticError) as exc:
            results.append(TaskResult(t.name, t.kind, False, None, t.expect_pass,
                                      error=f"{type(exc).__name__}: {exc}"))
    for t in cfg.probes:
        try:
            results.append(_run_probe(t, cfg, tr))
        except (ValueError, KeyError, ArithmeticError) as exc:
            results.append(TaskResult(t.name, t.kind, False, None, t.expect_pass,
                                      error=f"{type(exc).__name__}: {exc}"))

    passed = all(r.ok for r in results)
    summary = {
        "scenario_id": cfg.scenario_id,
        "description": cfg.description,
        "seed": cfg.seed,
        "passed": passed,
        "source": cfg.source,
        "rescale": cfg.rescale,
        "trajectory": None if tr is None else {
            "points": len(tr.snapshots), "status": tr.status,
            "blow_up_estimate": tr.blow_up_estimate},
        "results": [r.summary() for r in results],
    }
    _dump_json(summary, out / "summary.json")
    files.append("summary.json")

    manifest = RunManifest(
        scenario_id=cfg.scenario_id, config_hash=cfg.config_hash(), passed=passed,
        verdicts={r.name: r.ok for r in results},
        files={f: _sha256(out / f) for f in files},
        out_dir=out, backend=_backend.NAME)
    _dump_json(manifest.to_json(), out / "manifest.json")
    manifest.duration = time.perf_counter() - t_start
    return manifest


def report_kinds(manifest: RunManifest) -> set:
    """Estimate kinds exercised by a finished run, read back from its summary."""
    summary = json.loads((manifest.out_dir / "summary.json").read_text())
    kinds = set()
    for r in summary["results"]:
        kinds.add(r["kind"])
        kinds.update(x["kind"] for x in r.get("reports", ()))
    return kinds & set(KINDS)


# ---------------------------------------------------------------- diffing

class SchemaMismatch(ValueError):
    pass


@dataclass
class ReportDiff:
    rows: int
    max_diff: float
    per_check: Dict[str, float]


def _margin(text: str) -> float:
    return float(text)


def diff_reports(a, b) -> ReportDiff:
    """Row-by-row margin differences between two reports.csv files."""
    def load(p):
        with open(p, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise SchemaMismatch(f"{p} is empty")
        return rows[0], rows[1:]
    ha, ra = load(a)
    hb, rb = load(b)
    if ha != hb or "margin" not in ha:
        raise SchemaMismatch("report headers differ")
    ic, il, im = ha.index("check"), ha.index("label"), ha.index("margin")
    keys_a = [(r[ic], r[il]) for r in ra]
    keys_b = [(r[ic], r[il]) for r in rb]
    if keys_a != keys_b:
        raise SchemaMismatch("reports cover different checks or grids")
    per: Dict[str, float] = {}
    for x, y in zip(ra, rb):
        ma, mb = _margin(x[im]), _margin(y[im])
        d = 0.0 if ma == mb else abs(ma - mb)
        if math.isnan(d):
            d = math.inf
        per[x[ic]] = max(per.get(x[ic], 0.0), d)
    return ReportDiff(len(ra), max(per.values(), default=0.0), per)

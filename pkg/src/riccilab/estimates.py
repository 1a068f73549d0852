"""Margin reports for the a-priori curvature, distance and volume estimates.

Every check returns an :class:`EstimateReport` (or a list of them). The
convention is uniform: ``lhs`` is the side that should be the larger one,
``margin = lhs - rhs`` and a grid point passes when ``margin >= -tol``.
When a trajectory can be re-evaluated off-grid, the first sign change of
the margin is refined by root-finding and stored as ``crossing``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .curvature import (
    C3, PinchingParams, eta, g_quantity, hamilton_ivey_defect, is_essential,
    necklike_defect, ricci_from_operator)
from .flow import FlowSnapshot, Trajectory

PASS_TOL = 1e-9

KINDS = ("curvature-time", "ricci-lower", "sec-lower", "hamilton-ivey",
         "distance-lower", "distance-upper", "diameter-upper", "volume-persist",
         "volume-ratio", "g-monitor", "necklike-scan", "theorem61-window")


@dataclass
class EstimateReport:
    kind: str
    label: str
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tol: float = PASS_TOL
    crossing: Optional[float] = None
    constants: Dict[str, object] = field(default_factory=dict)
    aux: Optional[np.ndarray] = None
    experimental: bool = False

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.lhs = np.asarray(self.lhs, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        if not (self.t.shape == self.lhs.shape == self.rhs.shape):
            raise ValueError("t, lhs and rhs must align")

    @property
    def margin(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            m = self.lhs - self.rhs
        # inf - inf only arises from vacuous rows; treat them as passing
        return np.where(np.isnan(m), np.inf, m)

    @property
    def min_margin(self) -> float:
        m = self.margin
        return float(np.min(m)) if m.size else math.inf

    @property
    def first_violation(self) -> Optional[float]:
        bad = np.nonzero(self.margin < -self.tol)[0]
        return float(self.t[bad[0]]) if bad.size else None

    @property
    def first_violation_index(self) -> Optional[int]:
        bad = np.nonzero(self.margin < -self.tol)[0]
        return int(bad[0]) if bad.size else None

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tol

    def rows(self):
        m = self.margin
        for i in range(self.t.size):
            yield (float(self.t[i]), float(self.lhs[i]), float(self.rhs[i]),
                   float(m[i]), bool(m[i] >= -self.tol))

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "passed": self.passed,
            "min_margin": self.min_margin,
            "first_violation": self.first_violation,
            "crossing": self.crossing,
            "points": int(self.t.size),
            "experimental": self.experimental,
            "constants": dict(self.constants),
        }


def _window(tr: Trajectory, window) -> List[FlowSnapshot]:
    if window is None:
        return list(tr.snapshots)
    a, b = window
    return [s for s in tr.snapshots if a <= s.t <= b]


def _refine(report: EstimateReport, margin_at: Optional[Callable[[float], float]]):
    """Locate the zero of the margin between the last passing grid point and
    the first failing one."""
    i = report.first_violation_index
    if i is None or i == 0 or margin_at is None:
        return report
    a, b = float(report.t[i - 1]), float(report.t[i])
    try:
        fa, fb = margin_at(a), margin_at(b)
        if fa >= 0 > fb:
            report.crossing = float(optimize.brentq(margin_at, a, b,
                                                    xtol=1e-15, rtol=1e-15,
                                                    maxiter=200))
    except (ValueError, RuntimeError):
        pass
    return report


def _lam_min(snap: FlowSnapshot) -> float:
    return ricci_from_operator(snap.spectrum).lam


# ---------------------------------------------------------------- curvature-time

def shifted_time(t: float) -> float:
    """Effective elapsed time in the shifted application of the R t <= c bound.

    For t <= 1/2 the bound is applied directly; otherwise to the solution
    restarted at (N-1)/2 with N = floor(2t), which puts t in [1/2, 1).
    """
    if t <= 0.5:
        return t
    N = math.floor(2.0 * t)
    return t - (N - 1) / 2.0


def check_curvature_time(tr: Trajectory, c: float,
                         window=None) -> List[EstimateReport]:
    """[R t <= c, R <= c / tau(t)] on the trajectory."""
    snaps = _window(tr, window)
    t = np.array([s.t for s in snaps])
    R = np.array([s.R for s in snaps])
    direct = EstimateReport("curvature-time", "R*t<=c", t, np.full(t.size, float(c)),
                           R * t, constants={"c": c})
    _refine(direct, lambda x: c - tr.at(x).R * x)
    taus = np.array([shifted_time(x) for x in t])
    with np.errstate(divide="ignore"):
        bound = np.where(taus > 0, c / np.where(taus > 0, taus, 1.0), np.inf)
    sched = EstimateReport("curvature-time", "R<=c/tau", t, bound, R,
                           constants={"c": c, "schedule": "half-unit shifts"})
    _refine(sched, lambda x: (c / shifted_time(x) if shifted_time(x) > 0 else math.inf)
            - tr.at(x).R)
    return [direct, sched]


def sup_Rt(tr: Trajectory, window=None) -> float:
    snaps = _window(tr, window)
    return max((s.R * s.t for s in snaps), default=0.0)


# ---------------------------------------------------------------- pinching

def _pinch_window(tr, p: PinchingParams, window):
    snaps = _window(tr, window)
    if p.scaled_in_time:
        return [s for s in snaps if s.t <= p.window]
    return [s for s in snaps if s.t < p.window]


def _pinch_check(tr, p, window, value, kind, label):
    snaps = _pinch_window(tr, p, window)
    if not snaps or snaps[0].t != 0.0:
        raise ValueError("pinching checks need the t = 0 snapshot")
    s0 = snaps[0]
    floor0 = p.initial_floor(s0.R)
    if value(s0) < floor0 - 1e-12:
        raise ValueError(f"initial data violate the hypothesis: {value(s0)!r} < {floor0!r}")
    t = np.array([s.t for s in snaps])
    lhs = np.array([value(s) for s in snaps])
    rhs = np.array([p.floor(s.R, s.t) for s in snaps])
    rep = EstimateReport(kind, label, t, lhs, rhs,
                         constants={"eps0": p.eps0, "variant": p.variant,
                                    "k": p.k, "window": p.window})

    def margin_at(x):
        s = tr.at(x)
        return value(s) - p.floor(s.R, x)
    return _refine(rep, margin_at)


def check_ricci_lower(tr: Trajectory, p: PinchingParams, window=None) -> EstimateReport:
    """lam_min(Ricci) >= -eps(t) w(t) R - eps(t) on the variant's window."""
    if not p.is_ricci:
        raise ValueError("Ricci check needs a ricci-* variant")
    return _pinch_check(tr, p, window, _lam_min, "ricci-lower", p.variant)


def check_sec_lower(tr: Trajectory, p: PinchingParams, window=None) -> EstimateReport:
    """Same barrier for the smallest curvature-operator eigenvalue."""
    if p.is_ricci:
        raise ValueError("sectional check needs a sec-* variant")
    return _pinch_check(tr, p, window, lambda s: s.spectrum.alpha,
                        "sec-lower", p.variant)


def check_hamilton_ivey(tr: Trajectory, window=None) -> EstimateReport:
    """R >= X (log X + log(1+t) - 3) wherever X = -alpha > 0."""
    snaps = _window(tr, window)
    if snaps and snaps[0].spectrum.alpha < -1.0 - 1e-12:
        raise ValueError("hypothesis needs the smallest eigenvalue >= -1 initially")
    t, lhs, rhs = [], [], []
    for s in snaps:
        d = hamilton_ivey_defect(s.spectrum, s.t)
        t.append(s.t)
        if d is None:
            lhs.append(math.inf)
            rhs.append(0.0)
        else:
            lhs.append(s.R)
            rhs.append(s.R - d)
    rep = EstimateReport("hamilton-ivey", "R>=X(logX+log(1+t)-3)", t, lhs, rhs)

    def margin_at(x):
        d = hamilton_ivey_defect(tr.at(x).spectrum, x)
        return math.inf if d is None else d
    return _refine(rep, margin_at)


# ---------------------------------------------------------------- distances

def _sqrt_sup_curvature_integral(t: np.ndarray, snaps) -> np.ndarray:
    M = np.array([s.spectrum.norm() for s in snaps])
    f = np.sqrt(M)
    out = np.zeros_like(t)
    out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))
    return out


def check_distance_bounds(tr: Trajectory, pair: str, c0: float = 0.0,
                          C: float = 4.0, d0: Optional[float] = None,
                          curvature_time_c: Optional[float] = None,
                          window=None) -> List[EstimateReport]:
    """Lower and upper distance bounds and the diameter bound.

    The lower bound is d(0) - C * I(t). By default I(t) is the trapezoid
    integral of sqrt(|Riem|) over the grid. With ``curvature_time_c`` the
    curvature is taken to be c/s, which gives I(t) = 2 sqrt(c t).
    """
    snaps = _window(tr, window)
    if not snaps:
        raise ValueError("empty trajectory")
    try:
        dist = np.array([s.pair(pair) for s in snaps])
    except KeyError:
        raise ValueError(f"trajectory does not track pair {pair!r}")
    lam = min(_lam_min(s) for s in snaps)
    if lam < -c0 - 1e-12:
        raise ValueError(f"c0 = {c0} is not a Ricci lower bound (min {lam})")
    t = np.array([s.t for s in snaps])
    t_rel = t - t[0]
    if curvature_time_c is None:
        I = _sqrt_sup_curvature_integral(t, snaps)
        mode = "integral"
    else:
        I = 2.0 * np.sqrt(curvature_time_c * t_rel)
        mode = "curvature-time"
    consts = {"pair": pair, "c0": c0, "C": C, "mode": mode}
    lower = EstimateReport("distance-lower", pair, t, dist, dist[0] - C * I,
                           constants=consts)
    upper = EstimateReport("distance-upper", pair, t,
                           np.exp(c0 * t_rel) * dist[0], dist, constants=consts)
    diam = np.array([s.diameter for s in snaps], dtype=float)
    if np.any(np.isnan(diam)):
        raise ValueError("diameter bound needs a compact trajectory")
    D0 = float(diam[0]) if d0 is None else float(d0)
    dia = EstimateReport("diameter-upper", "diam", t, D0 * np.exp(c0 * t_rel),
                         diam, constants={"d0": D0, "c0": c0})
    return [lower, upper, dia]


# ---------------------------------------------------------------- volumes

def check_volume_persistence(tr: Trajectory, v0: float, window=None) -> EstimateReport:
    """vol(t) >= 3 v0 / 4; the refined crossing is the empirical S."""
    snaps = _window(tr, window)
    if snaps[0].volume is None or snaps[0].volume < v0 * (1 - 1e-15):
        raise ValueError("initial volume below v0")
    t = np.array([s.t for s in snaps])
    vol = np.array([s.volume for s in snaps])
    rep = EstimateReport("volume-persist", "vol>=3v0/4", t, vol,
                         np.full(t.size, 0.75 * v0), constants={"v0": v0})
    return _refine(rep, lambda x: tr.at(x).volume - 0.75 * v0)


def empirical_S(report: EstimateReport) -> float:
    """Crossing time if refined, else first violation, else window end."""
    if report.crossing is not None:
        return report.crossing
    fv = report.first_violation
    return fv if fv is not None else float(report.t[-1])


def check_volume_ratio(tr: Trajectory, l: float, eps: float,
                       window=None) -> List[EstimateReport]:
    """l >= vol(B_r)/r^3 >= eps at every sampled (t, r), plus monotonicity in r."""
    snaps = _window(tr, window)
    ts, rs, qs = [], [], []
    mt, mr, m_lhs, m_rhs = [], [], [], []
    for s in snaps:
        if not s.ball_profile:
            raise ValueError("snapshot has no ball profile")
        prof = s.ball_profile
        for r, q in prof:
            ts.append(s.t)
            rs.append(r)
            qs.append(q)
        for (r1, q1), (_, q2) in zip(prof, prof[1:]):
            mt.append(s.t)
            mr.append(r1)
            m_lhs.append(q1)
            m_rhs.append(q2)
    ts, rs, qs = np.array(ts), np.array(rs), np.array(qs)
    consts = {"l": l, "eps": eps}
    upper = EstimateReport("volume-ratio", "l>=ratio", ts, np.full(ts.size, float(l)),
                           qs, constants=consts, aux=rs)
    lower = EstimateReport("volume-ratio", "ratio>=eps", ts, qs,
                           np.full(ts.size, float(eps)), constants=consts, aux=rs)
    mono = EstimateReport("volume-ratio", "non-increasing", mt, m_lhs, m_rhs,
                          constants=consts, aux=np.array(mr))
    return [upper, lower, mono]


# ---------------------------------------------------------------- Theorem 6.1 window

@dataclass
class TheoremWindow:
    volume_violation: Optional[float]
    ricci_violation: Optional[float]
    diameter_violation: Optional[float]
    T_prime: float
    T_double_prime: float
    T_triple_prime: Optional[float]
    sup_Rt: float
    ricci_half_held: bool
    coupling_feasible: Optional[bool]
    Rt_within_c: Optional[bool]
    window_end: float

    def summary(self) -> dict:
        return dict(self.__dict__)


def _first_crossing(tr, snaps, value, level, strict_above: bool):
    """Earliest time where value(s) leaves {value > level} (or >= level)."""
    def ok(v):
        return v > level if strict_above else v >= level
    prev = None
    for s in snaps:
        v = value(s)
        if not ok(v):
            if prev is None:
                return s.t
            try:
                return float(optimize.brentq(lambda x: value(tr.at(x)) - level,
                                             prev.t, s.t, xtol=1e-15,
                                             rtol=1e-15, maxiter=200))
            except (ValueError, RuntimeError):
                return s.t
        prev = s
    return None


def window_monitor(tr: Trajectory, v0: float, d0: float,
                      eps: Optional[float] = None, c: Optional[float] = None,
                      pinch_window: float = 1.0 / 200.0,
                      window=None) -> TheoremWindow:
    """Track the three conditions that define the maximal interval [0, T')."""
    snaps = _window(tr, window)
    s0 = snaps[0]
    # Reaction trajectories carry no volume or diameter; only the Ricci
    # condition is monitored for them.
    geometric = s0.volume is not None and s0.diameter is not None
    if geometric and (s0.volume < v0 * (1 - 1e-15) or s0.diameter > d0 * (1 + 1e-15)):
        raise ValueError("initial data violate vol >= v0 or diam <= d0")
    if _lam_min(s0) < -1.0:
        raise ValueError("initial data violate Ricci >= -1")
    end = float(snaps[-1].t)
    tv = td = None
    if geometric:
        tv = _first_crossing(tr, snaps, lambda s: s.volume, v0 / 2.0, True)
        td = _first_crossing(tr, snaps, lambda s: -s.diameter, -5.0 * d0, False)
    tr_ = _first_crossing(tr, snaps, _lam_min, -1.0, False)
    present = [x for x in (tv, tr_, td) if x is not None]
    T1 = min(present) if present else end
    T2 = min(T1, pinch_window)
    before = [s for s in snaps if s.t <= T2]
    half = all(_lam_min(s) >= -0.5 - PASS_TOL for s in before)
    upto = [s for s in snaps if s.t <= T1]
    T3 = (_first_crossing(tr, upto, lambda s: s.volume, 0.75 * v0, False)
          if geometric else None)
    srt = max((s.R * s.t for s in snaps if s.t < T1 or T1 == end), default=0.0)
    feas = None if eps is None or c is None else bool(eps <= 1.0 / (10.0 * c * c))
    within = None if c is None else bool(srt <= c + PASS_TOL)
    return TheoremWindow(tv, tr_, td, T1, T2, T3, srt, half, feas, within, end)


# ---------------------------------------------------------------- ancient-solution tools

def _negative_times(snaps, time_offset):
    return np.array([s.t + time_offset for s in snaps])


def g_monitor(tr: Trajectory, delta: float, time_offset: float = 0.0,
              c_n: float = 1.0, window=None) -> List[EstimateReport]:
    """G along a trajectory mapped to negative times tau = t + time_offset.

    Returns two reports. The first checks that G never exceeds its running
    maximum after the first point (only the reaction part of G's evolution
    is visible on a homogeneous trajectory). The second compares G with the
    envelope c_n B^eps / |tau|^(eps/2), B = sup |tau| R; it is marked
    experimental.
    """
    snaps = _window(tr, window)
    eps = eta(delta)
    taus = _negative_times(snaps, time_offset)
    if np.any(taus >= 0):
        raise ValueError("g_monitor needs tau = t + offset < 0 on the whole window")
    Rs = np.array([s.R for s in snaps])
    if np.any(Rs <= 0):
        raise ValueError("G needs R > 0 everywhere")
    G = np.array([g_quantity(s.spectrum, tau, eps) for s, tau in zip(snaps, taus)])
    running = np.maximum.accumulate(G)
    consts = {"delta": delta, "eps": eps, "time_offset": time_offset}
    mono = EstimateReport("g-monitor", "no-new-max", taus[1:], running[:-1], G[1:],
                          constants=consts)
    B = float(np.max(np.abs(taus) * Rs))
    env = c_n * B ** eps / np.abs(taus) ** (eps / 2.0)
    envelope = EstimateReport("g-monitor", "envelope", taus, env, G,
                              constants=dict(consts, B=B, c_n=c_n),
                              experimental=True)
    return [mono, envelope]


@dataclass(frozen=True)
class NeckRow:
    t: float
    essential: bool
    necklike: bool
    defect: Optional[float]


def necklike_scan(tr: Trajectory, C: float, delta: float, time_offset: float = 0.0,
                  window=None) -> List[NeckRow]:
    out = []
    for s in _window(tr, window):
        tau = s.t + time_offset
        if s.spectrum.is_zero():
            out.append(NeckRow(tau, False, False, None))
            continue
        d, _ = necklike_defect(s.spectrum)
        out.append(NeckRow(tau, is_essential(s.spectrum, tau, C), d <= delta, d))
    return out


def necklike_report(rows: Sequence[NeckRow], delta: float) -> EstimateReport:
    """Tabulate a neck scan as a report (lhs = delta, rhs = defect).

    Rows without a defect (zero curvature) are vacuous and pass.
    """
    t = [r.t for r in rows]
    rhs = [(-math.inf if r.defect is None else r.defect) for r in rows]
    return EstimateReport("necklike-scan", "defect<=delta", t,
                          [delta] * len(rows), rhs, constants={"delta": delta})

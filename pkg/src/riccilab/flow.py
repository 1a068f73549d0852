"""Ricci-flow trajectories on closed-form model families and on the
pointwise reaction system.

A :class:`Trajectory` is a grid of :class:`FlowSnapshot` values plus enough
provenance (the source and an affine clock) to re-evaluate the flow at any
off-grid time. That re-evaluation is what the estimate checks use to refine
crossing times beyond grid resolution.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from . import _backend
from .curvature import C3, OperatorSpectrum

OMEGA3 = 4.0 * math.pi / 3.0
BISHOP_GROMOV_TOL = 1e-9
DEFAULT_CAP = 1e8
DEFAULT_TOL = 1e-10
DEFAULT_HMIN = 1e-14

_QUAD = dict(epsabs=0.0, epsrel=1e-13, limit=200)


def _sphere_ball_ratio(x: float) -> float:
    """vol(B_r)/r^3 on a round 3-sphere of curvature K, with x = 2 sqrt(K) r.

    Equals 8 pi (x - sin x) / x^3 for x <= 2 pi; the ball is the whole
    sphere beyond that.
    """
    if x <= 0:
        return OMEGA3
    if x < 1e-2:
        x2 = x * x
        # (x - sin x)/x^3 = 1/6 - x^2/120 + x^4/5040 - x^6/362880
        s = 1 / 6 - x2 / 120 + x2 * x2 / 5040 - x2 * x2 * x2 / 362880
        return 8.0 * math.pi * s
    x = min(x, 2.0 * math.pi)
    return 8.0 * math.pi * (x - math.sin(x)) / x ** 3


def _log_cosh(y: float) -> float:
    y = abs(y)
    return y + math.log1p(math.exp(-2.0 * y)) - math.log(2.0)


def _quarter_disk_rect(rho: float, A: float, B: float) -> float:
    """Area of {x, y >= 0, x <= A, y <= B, x^2 + y^2 <= rho^2}."""
    if rho <= 0.0:
        return 0.0
    if rho * rho >= A * A + B * B:
        return A * B

    def F(x):  # integral_0^x sqrt(rho^2 - u^2) du
        x = min(x, rho)
        return 0.5 * (x * math.sqrt(max(rho * rho - x * x, 0.0))
                      + rho * rho * math.asin(x / rho))

    x0 = math.sqrt(max(rho * rho - B * B, 0.0))
    xa = min(A, rho)
    x0 = min(x0, xa)
    return B * x0 + F(xa) - F(x0)


# ---------------------------------------------------------------- families

class ModelFamily:
    """Base class for closed-form Ricci-flow solutions."""

    compact = True
    name = "family"

    def blow_up(self) -> Optional[float]:
        return None

    def at_time(self, t: float) -> "ModelFamily":
        """The time-t metric, re-expressed as a time-0 member of the family."""
        raise NotImplementedError

    def scaled(self, c: float) -> "ModelFamily":
        """The family member for metric c*g."""
        raise NotImplementedError

    def spectrum(self) -> OperatorSpectrum:
        raise NotImplementedError

    def diameter(self) -> Optional[float]:
        return None

    def volume(self) -> Optional[float]:
        return None

    def tracked_pairs(self) -> Tuple[Tuple[str, float], ...]:
        return ()

    def ball_ratio(self, r: float) -> float:
        raise NotImplementedError

    def ball_volume(self, r: float) -> float:
        return self.ball_ratio(r) * r ** 3

    def max_radius(self) -> float:
        d = self.diameter()
        return math.inf if d is None else d

    def default_radii(self, n: int = 40) -> np.ndarray:
        return np.linspace(1.0 / n, 1.0, n) * self.max_radius()

    def check_time(self, t: float) -> None:
        if t < 0:
            raise ValueError("flow time must be non-negative")
        T = self.blow_up()
        if T is not None and t >= T:
            raise ValueError(f"t = {t} is at or past the blow-up time {T}")

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class RoundSphereQuotient(ModelFamily):
    """Round S^3/Gamma with initial sectional curvature k0.

    Distances and ball volumes are those of the simply connected sphere;
    the quotient order only divides the total volume.
    """

    k0: float = 1.0
    order: int = 1
    name = "round-sphere"

    def __post_init__(self):
        if not self.k0 > 0:
            raise ValueError("k0 must be positive")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("quotient order must be a positive integer")

    def blow_up(self):
        return 1.0 / (4.0 * self.k0)

    def factor(self, t: float) -> float:
        return 1.0 - 4.0 * self.k0 * t

    def at_time(self, t):
        self.check_time(t)
        return RoundSphereQuotient(self.k0 / self.factor(t), self.order)

    def scaled(self, c):
        return RoundSphereQuotient(self.k0 / c, self.order)

    def spectrum(self):
        v = 2.0 * self.k0
        return OperatorSpectrum(v, v, v)

    def diameter(self):
        return math.pi / math.sqrt(self.k0)

    def volume(self):
        return 2.0 * math.pi ** 2 / self.k0 ** 1.5 / self.order

    def tracked_pairs(self):
        return (("antipodal", self.diameter()),)

    def ball_ratio(self, r):
        return _sphere_ball_ratio(2.0 * math.sqrt(self.k0) * r)

    def params(self):
        return {"k0": self.k0, "order": self.order}


@dataclass(frozen=True)
class ProductSphereCircle(ModelFamily):
    """Round S^2 of curvature k0 times a circle of fixed length."""

    k0: float = 1.0
    circle_length: float = 1.0
    name = "product-sphere-circle"

    def __post_init__(self):
        if not (self.k0 > 0 and self.circle_length > 0):
            raise ValueError("k0 and circle_length must be positive")

    def blow_up(self):
        return 1.0 / (2.0 * self.k0)

    def at_time(self, t):
        self.check_time(t)
        return ProductSphereCircle(self.k0 / (1.0 - 2.0 * self.k0 * t),
                                   self.circle_length)

    def scaled(self, c):
        return ProductSphereCircle(self.k0 / c, self.circle_length * math.sqrt(c))

    def spectrum(self):
        return OperatorSpectrum(0.0, 0.0, 2.0 * self.k0)

    def diameter(self):
        return math.hypot(math.pi / math.sqrt(self.k0), self.circle_length / 2.0)

    def volume(self):
        return 4.0 * math.pi / self.k0 * self.circle_length

    def tracked_pairs(self):
        return (("antipodal", self.diameter()),
                ("fiber-half", self.circle_length / 2.0))

    def ball_ratio(self, r):
        if r <= 0:
            return OMEGA3
        sk = math.sqrt(self.k0)
        u = sk * r
        half = sk * self.circle_length / 2.0
        zmax = min(u, half)

        def cap(w):  # cap area on the unit-curvature sphere, geodesic radius y
            y = math.sqrt(max(u * u - w * w, 0.0))
            if y >= math.pi:
                return 4.0 * math.pi
            return 4.0 * math.pi * math.sin(0.5 * y) ** 2

        val, _ = integrate.quad(cap, 0.0, zmax, **_QUAD)
        return 2.0 * val / u ** 3

    def params(self):
        return {"k0": self.k0, "circle_length": self.circle_length}


@dataclass(frozen=True)
class FlatTorus(ModelFamily):
    """Flat rectangular torus; a stationary solution."""

    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    name = "flat-torus"

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("side lengths must be positive")

    def at_time(self, t):
        self.check_time(t)
        return self

    def scaled(self, c):
        s = math.sqrt(c)
        return FlatTorus(self.a * s, self.b * s, self.c * s)

    def spectrum(self):
        return OperatorSpectrum(0.0, 0.0, 0.0)

    def diameter(self):
        return 0.5 * math.sqrt(self.a ** 2 + self.b ** 2 + self.c ** 2)

    def volume(self):
        return self.a * self.b * self.c

    def tracked_pairs(self):
        return (("corner", self.diameter()), ("edge-a", self.a / 2.0))

    def ball_ratio(self, r):
        # The centred box is a Dirichlet domain, so the ball is the
        # Euclidean ball clipped to it.
        A, B, Cz = self.a / 2.0, self.b / 2.0, self.c / 2.0
        if r <= min(A, B, Cz):
            return OMEGA3
        zmax = min(r, Cz)

        def slab(z):
            rho = math.sqrt(max(r * r - z * z, 0.0))
            return 4.0 * _quarter_disk_rect(rho, A, B)

        val, _ = integrate.quad(slab, 0.0, zmax, **_QUAD)
        return 2.0 * val / r ** 3

    def params(self):
        return {"a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class CigarCrossLine(ModelFamily):
    """Cigar soliton times a line, ds^2 + a^2 tanh^2(s/a) dtheta^2 + dz^2.

    Non-compact and static up to isometry. Quantities are tabulated out to
    ``truncation`` (default 50 a), so everything derived from it is a tail
    estimate.
    """

    scale: float = 1.0
    truncation: Optional[float] = None
    compact = False
    name = "cigar-line"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.truncation is None:
            object.__setattr__(self, "truncation", 50.0 * self.scale)
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")

    def at_time(self, t):
        self.check_time(t)
        return self

    def scaled(self, c):
        s = math.sqrt(c)
        return CigarCrossLine(self.scale * s, self.truncation * s)

    def gauss_curvature(self, s: float) -> float:
        return 2.0 / (self.scale ** 2 * math.cosh(s / self.scale) ** 2)

    def spectrum(self):
        """Spectrum at the tip, where curvature is largest."""
        return OperatorSpectrum(0.0, 0.0, 2.0 * self.gauss_curvature(0.0))

    def spectrum_profile(self, s_grid) -> List[OperatorSpectrum]:
        return [OperatorSpectrum(0.0, 0.0, 2.0 * self.gauss_curvature(float(s)))
                for s in s_grid]

    def max_radius(self):
        return self.truncation

    def default_radii(self, n: int = 40) -> np.ndarray:
        return np.geomspace(0.05 * self.scale, self.truncation, n)

    def ball_ratio(self, r):
        if r > self.truncation * (1 + 1e-12):
            raise ValueError("radius beyond the tabulated cigar profile")
        u = r / self.scale
        if u <= 0:
            return OMEGA3

        def disk(w):
            return 2.0 * math.pi * _log_cosh(math.sqrt(max(u * u - w * w, 0.0)))

        val, _ = integrate.quad(disk, 0.0, u, **_QUAD)
        return 2.0 * val / u ** 3

    def params(self):
        return {"scale": self.scale, "truncation": self.truncation}


@dataclass(frozen=True)
class EuclideanSpace(ModelFamily):
    """Flat R^3, the reference for asymptotic volume ratios."""

    compact = False
    name = "euclidean"

    def at_time(self, t):
        return self

    def scaled(self, c):
        return self

    def spectrum(self):
        return OperatorSpectrum(0.0, 0.0, 0.0)

    def ball_ratio(self, r):
        return OMEGA3

    def default_radii(self, n: int = 40):
        return np.geomspace(1e-2, 1e2, n)

    def params(self):
        return {}


FAMILIES = {
    "round-sphere": RoundSphereQuotient,
    "product-sphere-circle": ProductSphereCircle,
    "flat-torus": FlatTorus,
    "cigar-line": CigarCrossLine,
    "euclidean": EuclideanSpace,
}


def make_family(name: str, **params) -> ModelFamily:
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; known: {sorted(FAMILIES)}")
    return cls(**params)


@dataclass(frozen=True)
class ReactionSource:
    """Initial data for the pointwise reaction system."""

    s0: OperatorSpectrum
    tol: float = DEFAULT_TOL
    cap: float = DEFAULT_CAP
    h_min: float = DEFAULT_HMIN
    name = "reaction"

    def params(self):
        return {"s0": list(self.s0.as_tuple()), "tol": self.tol, "cap": self.cap}


# ---------------------------------------------------------------- snapshots

@dataclass(frozen=True)
class FlowSnapshot:
    t: float
    spectrum: OperatorSpectrum
    diameter: Optional[float] = None
    volume: Optional[float] = None
    tracked_pairs: Tuple[Tuple[str, float], ...] = ()
    ball_profile: Tuple[Tuple[float, float], ...] = ()
    geometry: Optional[ModelFamily] = field(default=None, compare=False)

    def __post_init__(self):
        if self.volume is not None and not self.volume > 0:
            raise ValueError("volume must be positive")
        if self.diameter is not None and not self.diameter > 0:
            raise ValueError("diameter must be positive")
        if bishop_gromov_margin(self.ball_profile) < -BISHOP_GROMOV_TOL:
            raise ValueError("ball profile is not non-increasing in r")

    @property
    def R(self) -> float:
        s = self.spectrum
        return s.alpha + s.beta + s.gamma

    def pair(self, name: str) -> float:
        for key, val in self.tracked_pairs:
            if key == name:
                return val
        raise KeyError(name)

    def scaled(self, c: float, t_new: float) -> "FlowSnapshot":
        rc = math.sqrt(c)
        s = self.spectrum
        return FlowSnapshot(
            t=t_new,
            spectrum=OperatorSpectrum(s.alpha / c, s.beta / c, s.gamma / c),
            diameter=None if self.diameter is None else self.diameter * rc,
            volume=None if self.volume is None else self.volume * c ** 1.5,
            tracked_pairs=tuple((k, v * rc) for k, v in self.tracked_pairs),
            ball_profile=tuple((r * rc, q) for r, q in self.ball_profile),
            geometry=None if self.geometry is None else self.geometry.scaled(c),
        )


def bishop_gromov_margin(profile) -> float:
    """min over consecutive radii of ratio(r_i) - ratio(r_{i+1}); +inf if short."""
    if len(profile) < 2:
        return math.inf
    q = np.array([p[1] for p in profile])
    return float(np.min(q[:-1] - q[1:]))


def ball_volume_profile(snap: FlowSnapshot, radii) -> np.ndarray:
    """Table of (r, vol(B_r)/r^3) at the snapshot's base point."""
    geo = snap.geometry
    if geo is None:
        raise ValueError("snapshot carries no geometry (reaction trajectories "
                         "have no ball volumes)")
    radii = np.asarray(radii, dtype=float)
    if radii.size and (np.any(radii <= 0)):
        raise ValueError("radii must be positive")
    limit = geo.max_radius()
    if radii.size and np.max(radii) > limit * (1 + 1e-12):
        raise ValueError(f"radius beyond supported range {limit}")
    out = np.empty((radii.size, 2))
    for i, r in enumerate(radii):
        out[i] = (r, geo.ball_ratio(float(r)))
    return out


def exact_flow(f: ModelFamily, t: float, radii=None) -> FlowSnapshot:
    """Closed-form snapshot of family ``f`` at flow time ``t``."""
    geo = f.at_time(t)
    if radii is None:
        radii = geo.default_radii()
    prof = ball_volume_profile(
        FlowSnapshot(t=t, spectrum=geo.spectrum(), geometry=geo), radii)
    return FlowSnapshot(
        t=float(t),
        spectrum=geo.spectrum(),
        diameter=geo.diameter(),
        volume=geo.volume(),
        tracked_pairs=geo.tracked_pairs(),
        ball_profile=tuple((float(r), float(q)) for r, q in prof),
        geometry=geo,
    )


# ---------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    """Snapshots on a strictly increasing time grid.

    ``clock = (c, t0)`` records the parabolic rescalings applied so far: the
    snapshot at time t comes from the source at time t0 + t/c, with
    curvature divided by c and lengths multiplied by sqrt(c).
    """

    source: Union[ModelFamily, ReactionSource]
    snapshots: List[FlowSnapshot]
    blow_up_estimate: Optional[float] = None
    blow_up_bracket: Optional[Tuple[float, float]] = None
    status: str = "ok"
    clock: Tuple[float, float] = (1.0, 0.0)
    radii_fraction: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        g = self.grid
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("trajectory grid must be strictly increasing")
        if self.blow_up_estimate is not None and g.size and g[-1] >= self.blow_up_estimate:
            raise ValueError("grid reaches the blow-up estimate")

    @property
    def grid(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def source_time(self, t: float) -> float:
        c, t0 = self.clock
        return t0 + t / c

    def at(self, t: float) -> FlowSnapshot:
        """Snapshot at an arbitrary time in the trajectory's own clock."""
        c, _ = self.clock
        ts = self.source_time(t)
        if isinstance(self.source, ReactionSource):
            base = _reaction_at(self.source, ts)
        else:
            base = exact_flow(self.source, ts, radii=self._radii_for(ts))
        return base if c == 1.0 and t == ts else base.scaled(c, t)

    def _radii_for(self, ts: float):
        if self.radii_fraction is None:
            return None
        geo = self.source.at_time(ts)
        return np.asarray(self.radii_fraction) * geo.max_radius()

    def spectra(self) -> np.ndarray:
        return np.array([s.spectrum.as_tuple() for s in self.snapshots])

    def series(self, name: str) -> np.ndarray:
        if name == "R":
            return np.array([s.R for s in self.snapshots])
        return np.array([getattr(s, name) for s in self.snapshots], dtype=float)

    def restrict(self, t_a: float, t_b: float) -> "Trajectory":
        keep = [s for s in self.snapshots if t_a <= s.t <= t_b]
        return replace(self, snapshots=keep)


def flow_trajectory(f: ModelFamily, grid, radii_fraction=None) -> Trajectory:
    """Closed-form trajectory of ``f`` sampled on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    rf = None if radii_fraction is None else np.asarray(radii_fraction, float)
    snaps = []
    for t in grid:
        radii = None
        if rf is not None:
            radii = rf * f.at_time(float(t)).max_radius()
        snaps.append(exact_flow(f, float(t), radii=radii))
    return Trajectory(source=f, snapshots=snaps, radii_fraction=rf)


class StepUnderflow(RuntimeError):
    """Raised when the adaptive step falls below the floor; carries the
    partial trajectory."""

    def __init__(self, message: str, partial: Trajectory):
        super().__init__(message)
        self.partial = partial


def _run_kernel(src: ReactionSource, grid: np.ndarray):
    return _backend.kernels.integrate_reaction(
        src.s0.as_tuple(), grid, src.tol, src.cap, src.h_min)


def integrate_reaction(s0, t_end: float, tol: float = DEFAULT_TOL,
                       grid=None, n_points: int = 201,
                       cap: float = DEFAULT_CAP,
                       h_min: float = DEFAULT_HMIN) -> Trajectory:
    """Integrate the reaction system from ``s0`` up to ``t_end``.

    The spectrum is re-sorted after each accepted step. If its Frobenius
    norm passes ``cap`` the run stops and the cap-crossing time is reported
    as ``blow_up_estimate``; grid points at or past it are dropped.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    s0 = s0 if isinstance(s0, OperatorSpectrum) else OperatorSpectrum.of(s0)
    if grid is None:
        grid = np.linspace(0.0, t_end, n_points)
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or not np.all(np.diff(grid) > 0) or grid[-1] > t_end:
        raise ValueError("grid must start at 0, increase strictly, and end by t_end")
    src = ReactionSource(s0, tol, cap, h_min)
    n, states, status, t_stop, t_lo = _run_kernel(src, grid)
    snaps = [FlowSnapshot(t=float(grid[i]),
                          spectrum=OperatorSpectrum(*states[i]))
             for i in range(n)]
    if status == _backend.STATUS_UNDERFLOW:
        partial = Trajectory(source=src, snapshots=snaps, status="underflow")
        raise StepUnderflow(f"step size underflow at t = {t_stop!r}", partial)
    if status == _backend.STATUS_CAP:
        return Trajectory(source=src, snapshots=snaps,
                          blow_up_estimate=float(t_stop),
                          blow_up_bracket=(float(t_lo), float(t_stop)),
                          status="cap")
    return Trajectory(source=src, snapshots=snaps)


def _reaction_at(src: ReactionSource, t: float) -> FlowSnapshot:
    if t == 0.0:
        return FlowSnapshot(t=0.0, spectrum=src.s0)
    if t < 0:
        raise ValueError("reaction trajectories start at t = 0")
    n, states, status, t_stop, _ = _run_kernel(src, np.array([0.0, t]))
    if n < 2:
        raise ValueError(f"t = {t} is past the cap crossing at {t_stop}")
    return FlowSnapshot(t=float(t), spectrum=OperatorSpectrum(*states[1]))


def blow_up_time(s0, horizon: Optional[float] = None, cap: float = DEFAULT_CAP,
                 tol: float = DEFAULT_TOL):
    """Cap-crossing time of the reaction flow from ``s0``.

    Returns ``(estimate, (lo, hi))`` or ``None`` when the norm stays below
    ``cap`` up to ``horizon`` (default 10 / |s0|).
    """
    s0 = s0 if isinstance(s0, OperatorSpectrum) else OperatorSpectrum.of(s0)
    nrm = s0.norm()
    if nrm == 0.0:
        return None
    if horizon is None:
        horizon = 10.0 / nrm
    src = ReactionSource(s0, tol, cap)
    _, _, status, t_stop, t_lo = _run_kernel(src, np.array([0.0, horizon]))
    if status != _backend.STATUS_CAP:
        return None
    return float(t_stop), (float(t_lo), float(t_stop))


# ---------------------------------------------------------------- rescaling

@dataclass(frozen=True)
class RescaleTransform:
    """g_hat(t_hat) = c g(t0 + t_hat / c)."""

    c: float
    t0: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("scale factor must be positive")

    def time(self, t):
        return self.c * (t - self.t0)


def rescale(tr: Trajectory, r: RescaleTransform) -> Trajectory:
    g = tr.grid
    if g.size and not (g[0] <= r.t0 <= g[-1]):
        raise ValueError("pivot time outside the trajectory grid")
    c1, p1 = tr.clock
    snaps = [s.scaled(r.c, r.time(s.t)) for s in tr.snapshots]
    T = tr.blow_up_estimate
    br = tr.blow_up_bracket
    return Trajectory(
        source=tr.source,
        snapshots=snaps,
        blow_up_estimate=None if T is None else r.time(T),
        blow_up_bracket=None if br is None else (r.time(br[0]), r.time(br[1])),
        status=tr.status,
        clock=(c1 * r.c, p1 + r.t0 / c1),
        radii_fraction=tr.radii_fraction,
    )


# ---------------------------------------------------------------- summaries

def injectivity_bound_value(ball_volume: float, r: float, n: int = 3) -> float:
    """r V / (V + omega_n e^(n-1)) for a ball of volume V and radius r."""
    omega = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    return r * ball_volume / (ball_volume + omega * math.e ** (n - 1))


def injectivity_lower_bound(snap: FlowSnapshot, r: float) -> float:
    """Volume-based injectivity radius bound for |Riem| <= 1 and r <= pi/4."""
    if r > math.pi / 4:
        raise ValueError("the bound is stated for r <= pi/4")
    if not r > 0:
        raise ValueError("r must be positive")
    if snap.spectrum.norm() > 1.0 + 1e-12:
        raise ValueError("rescale the snapshot so that |Riem| <= 1 first")
    if snap.geometry is None:
        raise ValueError("snapshot carries no geometry")
    return injectivity_bound_value(snap.geometry.ball_volume(r), r)


def normalize_curvature(f: ModelFamily) -> ModelFamily:
    """Scale ``f`` so that its curvature norm is at most 1 (no-op if flat)."""
    nrm = f.spectrum().norm()
    return f if nrm <= 1.0 else f.scaled(nrm)


def diameter_floor_margin(snap: FlowSnapshot, c3: float = C3) -> float:
    """diam^3 - vol / (c3 omega_3); non-negative for the volume-diameter floor."""
    if snap.diameter is None or snap.volume is None:
        raise ValueError("compact snapshot required")
    return snap.diameter ** 3 - snap.volume / (c3 * OMEGA3)


@dataclass(frozen=True)
class TailEstimate:
    """vol(B_r)/r^3 at the largest tabulated radius, plus an A + B/r fit."""

    value: float
    extrapolated: float
    radii: Tuple[float, ...]
    ratios: Tuple[float, ...]

    def __float__(self):
        return self.value


def asymptotic_volume_ratio(f: ModelFamily, n: int = 24) -> TailEstimate:
    if f.compact:
        raise ValueError("asymptotic volume ratio needs a non-compact family")
    if isinstance(f, EuclideanSpace):
        return TailEstimate(OMEGA3, OMEGA3, (), ())
    r_max = f.max_radius()
    radii = np.geomspace(r_max / 10.0, r_max, n)
    ratios = np.array([f.ball_ratio(float(r)) for r in radii])
    tail = slice(n // 2, n)
    X = np.column_stack([np.ones(n - n // 2), 1.0 / radii[tail]])
    coef, *_ = np.linalg.lstsq(X, ratios[tail], rcond=None)
    return TailEstimate(float(ratios[-1]), float(coef[0]),
                        tuple(float(r) for r in radii),
                        tuple(float(q) for q in ratios))


# ---------------------------------------------------------------- CSV output

def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def trajectory_rows(tr: Trajectory):
    names: List[str] = []
    for s in tr.snapshots:
        for k, _ in s.tracked_pairs:
            if k not in names:
                names.append(k)
    header = ["t", "alpha", "beta", "gamma", "R", "diameter", "volume"] + names
    rows = []
    for s in tr.snapshots:
        pairs = dict(s.tracked_pairs)
        a, b, c = s.spectrum.as_tuple()
        rows.append([_fmt(s.t), _fmt(a), _fmt(b), _fmt(c), _fmt(s.R),
                     _fmt(s.diameter), _fmt(s.volume)]
                    + [_fmt(pairs.get(k)) for k in names])
    return header, rows


def write_trajectory_csv(tr: Trajectory, path) -> None:
    header, rows = trajectory_rows(tr)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_ball_profile_csv(tr: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "r", "ratio"])
        for s in tr.snapshots:
            for r, q in s.ball_profile:
                w.writerow([_fmt(s.t), _fmt(r), _fmt(q)])

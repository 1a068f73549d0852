"""Pointwise algebra of three-dimensional curvature.

Everything here works in a frame that diagonalises the curvature operator,
so a curvature tensor is carried by its three operator eigenvalues. The
operator convention is the one in which the unit round three-sphere has
spectrum (2, 2, 2) and scalar curvature 6; sectional curvatures are half of
the operator eigenvalues.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

Triple = Tuple[float, float, float]

#: Default dimensional constant relating |Riem| to R-type bounds in 3D.
C3 = math.sqrt(3.0)

VARIANTS = ("ricci-4.1", "sec-4.1", "ricci-4.2", "sec-4.2")

#: Absolute tolerance on the boundary relation fed to the N11 evaluators.
BOUNDARY_TOL = 1e-9


def _finite3(values) -> Triple:
    vals = tuple(float(v) for v in values)
    if len(vals) != 3:
        raise ValueError(f"expected three values, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite entry in {vals}")
    return vals  # type: ignore[return-value]


@dataclass(frozen=True)
class OperatorSpectrum:
    """Eigenvalues of the curvature operator, kept in ascending order."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        a, b, c = sorted(_finite3((self.alpha, self.beta, self.gamma)))
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma", c)

    @classmethod
    def of(cls, values) -> "OperatorSpectrum":
        a, b, c = _finite3(values)
        return cls(a, b, c)

    def as_tuple(self) -> Triple:
        return (self.alpha, self.beta, self.gamma)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def norm(self) -> float:
        """Frobenius norm of diag(alpha, beta, gamma)."""
        return math.sqrt(self.alpha ** 2 + self.beta ** 2 + self.gamma ** 2)

    def is_zero(self) -> bool:
        return self.alpha == 0.0 and self.beta == 0.0 and self.gamma == 0.0


@dataclass(frozen=True)
class RicciSpectrum:
    """Ricci eigenvalues lam <= mu <= nu."""

    lam: float
    mu: float
    nu: float

    def __post_init__(self):
        a, b, c = sorted(_finite3((self.lam, self.mu, self.nu)))
        object.__setattr__(self, "lam", a)
        object.__setattr__(self, "mu", b)
        object.__setattr__(self, "nu", c)

    def as_tuple(self) -> Triple:
        return (self.lam, self.mu, self.nu)

    @property
    def scalar(self) -> float:
        return self.lam + self.mu + self.nu


@dataclass(frozen=True)
class TwoForm3:
    """a dx1^dx2 + b dx1^dx3 + c dx2^dx3."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        _finite3((self.a, self.b, self.c))

    def as_tuple(self) -> Triple:
        return (float(self.a), float(self.b), float(self.c))


@dataclass(frozen=True)
class PinchingParams:
    """Parameters of one of the four pinching estimates.

    ``variant`` picks the quantity (Ricci or sectional) and the time scaling.
    The ``*-4.1`` variants use a time-independent weight on R and live on
    [0, 1/8); the ``*-4.2`` variants weight R by t and live on [0, 1/k].
    The latter window is additionally clipped to 1/200, which is the
    largest interval on which the sampled positivity is claimed.
    """

    eps0: float
    variant: str = "ricci-4.1"
    k: float = 100.0
    window: Optional[float] = field(default=None)

    def __post_init__(self):
        if not 0.0 < self.eps0 < 0.01:
            raise ValueError(f"eps0 must lie in (0, 1/100), got {self.eps0}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.window is None:
            default = 0.125 if self.variant.endswith("4.1") else min(
                1.0 / self.k, 1.0 / 200.0)
            object.__setattr__(self, "window", default)

    @property
    def is_ricci(self) -> bool:
        return self.variant.startswith("ricci")

    @property
    def scaled_in_time(self) -> bool:
        return self.variant.endswith("4.2")

    def eps(self, t: float) -> float:
        rate = self.k if self.scaled_in_time else 4.0
        if self.is_ricci:
            return self.eps0 * (1.0 + rate * t)
        return self.eps0 * (0.5 + (self.k if self.scaled_in_time else 1.0) * t)

    def deps(self) -> float:
        """Time derivative of eps(t) (constant)."""
        if self.scaled_in_time:
            return self.k * self.eps0
        return 4.0 * self.eps0 if self.is_ricci else self.eps0

    def weight(self, t: float) -> float:
        """Coefficient multiplying eps*R in the barrier."""
        return float(t) if self.scaled_in_time else 1.0

    def dweight(self) -> float:
        return 1.0 if self.scaled_in_time else 0.0

    def floor(self, R: float, t: float) -> float:
        """Lower barrier -eps*w*R - eps for the smallest eigenvalue."""
        e = self.eps(t)
        return -e * self.weight(t) * R - e

    def initial_floor(self, R: float) -> float:
        """Hypothesis on the initial metric."""
        if self.scaled_in_time:
            return -self.eps0 / 4.0
        return -self.eps0 / 4.0 * R


def _spec(s) -> OperatorSpectrum:
    return s if isinstance(s, OperatorSpectrum) else OperatorSpectrum.of(s)


def _ric(r) -> RicciSpectrum:
    if isinstance(r, RicciSpectrum):
        return r
    a, b, c = _finite3(r)
    return RicciSpectrum(a, b, c)


def ricci_from_operator(s) -> RicciSpectrum:
    """Ricci eigenvalues as half-sums of pairs of operator eigenvalues."""
    s = _spec(s)
    a, b, c = s.as_tuple()
    return RicciSpectrum((a + b) / 2.0, (a + c) / 2.0, (b + c) / 2.0)


def scalar_curvature(s) -> float:
    s = _spec(s)
    return s.alpha + s.beta + s.gamma


def ricci_norm_sq(s) -> float:
    s = _spec(s)
    a, b, c = s.as_tuple()
    return 0.5 * (a * a + b * b + c * c + a * b + a * c + b * c)


def reaction_rhs(s) -> Triple:
    """Right-hand side of the pointwise reaction system, in input order."""
    s = _spec(s)
    a, b, c = s.as_tuple()
    return (a * a + b * c, b * b + a * c, c * c + a * b)


def q_tensor_diag(r) -> Triple:
    """Diagonal of Q = 6 S_ij - 3 R R_ij + (R^2 - 2S) g_ij in a Ricci frame."""
    r = _ric(r)
    lam = r.as_tuple()
    R = lam[0] + lam[1] + lam[2]
    S = lam[0] ** 2 + lam[1] ** 2 + lam[2] ** 2
    return tuple(6.0 * x * x - 3.0 * R * x + (R * R - 2.0 * S)
                 for x in lam)  # type: ignore[return-value]


def n11_boundary_value(r, p: PinchingParams, t: float,
                       tol: float = BOUNDARY_TOL) -> float:
    """Reaction term of the Ricci barrier in the direction of lam.

    The input must sit on the barrier lam = -eps*w*R - eps (to ``tol``);
    anything else is a precondition violation.
    """
    if not p.is_ricci:
        raise ValueError("n11_boundary_value is defined for Ricci variants; "
                         "use sec_boundary_rate for sectional variants")
    r = _ric(r)
    lam, mu, nu = r.as_tuple()
    R = lam + mu + nu
    e = p.eps(t)
    gap = lam - p.floor(R, t)
    if abs(gap) > tol:
        raise ValueError(f"spectrum is not on the barrier (|L11| = {abs(gap):.3e})")
    S = lam * lam + mu * mu + nu * nu
    base = (mu - nu) ** 2 + lam * (mu + nu)
    if p.scaled_in_time:
        return (base + 2.0 * e * t * S + e * R
                + p.k * p.eps0 * t * R + p.k * p.eps0)
    return base + 2.0 * e * S + 4.0 * p.eps0 * R + 4.0 * p.eps0


def sec_boundary_rate(s, p: PinchingParams, t: float,
                      tol: float = BOUNDARY_TOL) -> float:
    """d/dt (alpha + eps*w*R + eps) under the reaction system, on the barrier."""
    if p.is_ricci:
        raise ValueError("sec_boundary_rate is defined for sectional variants")
    s = _spec(s)
    a, b, c = s.as_tuple()
    R = a + b + c
    e = p.eps(t)
    gap = a - p.floor(R, t)
    if abs(gap) > tol:
        raise ValueError(f"spectrum is not on the barrier (gap = {gap:.3e})")
    dR = 2.0 * ricci_norm_sq(s)
    de = p.deps()
    w = p.weight(t)
    return a * a + b * c + de * w * R + e * (p.dweight() * R + w * dR) + de


def boundary_rate(values, p: PinchingParams, t: float) -> float:
    """Variant-agnostic dispatch: Ricci triple or operator triple."""
    if p.is_ricci:
        return n11_boundary_value(values, p, t)
    return sec_boundary_rate(values, p, t)


def sample_barrier_point(rng, variant: str, eps0_range=(1e-6, 1e-2)):
    """Random point on a pinching barrier with R >= -3 eps0.

    Returns ``(values, params, t)`` where ``values`` is an ascending triple
    whose smallest entry sits on the barrier, or ``None`` when the draw
    leaves no room for the other two entries.  One draw in ten has
    R = -3 eps0 exactly, the extreme admissible scalar curvature.
    """
    e0 = float(rng.uniform(*eps0_range))
    p = PinchingParams(e0, variant)
    t = float(rng.uniform(0, p.window))
    R = float(-3 * e0 + rng.exponential(5.0) * (rng.random() < 0.9))
    lo = p.floor(R, t)
    rest = R - lo
    m = min(float(rng.uniform(lo, max(lo, rest - lo))), rest / 2)
    if m < lo:
        return None
    return (lo, m, rest - m), p, t


def hamilton_ivey_defect(s, t: float) -> Optional[float]:
    """R - X (log X + log(1+t) - 3) with X the negated smallest eigenvalue.

    ``None`` when X <= 0: the pinching inequality places no constraint there.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    s = _spec(s)
    X = -s.alpha
    if X <= 0:
        return None
    R = scalar_curvature(s)
    return R - X * (math.log(X) + math.log1p(t) - 3.0)


def eta(delta: float) -> float:
    """Admissible exponent ceiling delta / (100 (3 - delta))."""
    if not 0.0 < delta < 3.0:
        raise ValueError("delta must lie in (0, 3)")
    return delta / (100.0 * (3.0 - delta))


def traceless_norm_sq(s) -> float:
    s = _spec(s)
    a, b, c = s.as_tuple()
    # pairwise form: exactly zero whenever the entries coincide
    return ((a - b) ** 2 + (a - c) ** 2 + (b - c) ** 2) / 3.0


def g_quantity(s, t: float, eps: float) -> float:
    """|t|^(eps/2) |traceless|^2 / R^(2 - eps) on an ancient solution (t < 0)."""
    s = _spec(s)
    R = scalar_curvature(s)
    if not R > 0:
        raise ValueError(f"G needs R > 0, got R = {R}")
    if not t < 0:
        raise ValueError("G is evaluated at negative times")
    if not eps > 0:
        raise ValueError("eps must be positive")
    return abs(t) ** (eps / 2.0) * traceless_norm_sq(s) / R ** (2.0 - eps)


def split_two_form(w) -> Tuple[np.ndarray, np.ndarray]:
    """Write a nonzero 3D two-form as X ^ V with X orthogonal to V.

    Pivots on the largest coefficient (b preferred on ties), factors the
    form as a wedge of two one-forms, then orthogonalises the second factor
    against the first. One-forms are identified with vectors through the
    Euclidean metric.
    """
    if not isinstance(w, TwoForm3):
        w = TwoForm3(*_finite3(w))
    a, b, c = w.as_tuple()
    if a == 0.0 and b == 0.0 and c == 0.0:
        raise ValueError("the zero two-form has no decomposition")
    mags = (abs(a), abs(b), abs(c))
    if mags[1] >= mags[0] and mags[1] >= mags[2]:
        X = np.array([1.0, c / b, 0.0])
        Y = np.array([0.0, a, b])
    elif mags[0] >= mags[2]:
        X = np.array([1.0, 0.0, -c / a])
        Y = np.array([0.0, a, b])
    else:
        X = np.array([b / c, 1.0, 0.0])
        Y = np.array([-a, 0.0, c])
    V = Y - (X @ Y) / (X @ X) * X
    return X, V


def wedge(X, V) -> Triple:
    """Coefficients (a, b, c) of X ^ V in the basis used by TwoForm3."""
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    return (float(X[0] * V[1] - X[1] * V[0]),
            float(X[0] * V[2] - X[2] * V[0]),
            float(X[1] * V[2] - X[2] * V[1]))


def necklike_defect(s) -> Tuple[float, int]:
    """Smallest relative distance from the spectrum to R times a rank-one
    eigen-projector.

    Only the three eigen-two-forms are tried, so the value bounds the best
    delta over all unit two-forms from above. Returns (delta, index) with
    ``index`` the position (0, 1, 2) of the chosen eigenform in ascending
    order.
    """
    s = _spec(s)
    if s.is_zero():
        raise ValueError("zero spectrum has no neck direction")
    vals = s.as_tuple()
    R = sum(vals)
    nrm = s.norm()
    best, best_i = math.inf, 0
    # Largest eigenvalue first so that ties resolve to the top eigenform.
    for i in (2, 1, 0):
        d = math.sqrt(sum((vals[j] - (R if j == i else 0.0)) ** 2
                          for j in range(3)))
        if d < best:
            best, best_i = d, i
    return best / nrm, best_i


def is_essential(s, t: float, C: float) -> bool:
    """Whether |Riem| |t| >= C with the Frobenius curvature norm."""
    return _spec(s).norm() * abs(t) >= C

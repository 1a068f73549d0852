"""Finite metric spaces and Gromov-Hausdorff tooling.

Everything here works on explicit distance matrices: Hausdorff distances
between subsets, nu-Hausdorff approximations between spaces, gluing two
spaces along an approximation, a searched upper bound on the
Gromov-Hausdorff distance, comparison triangles in the constant-curvature
model planes, and discrete Alexandrov and intrinsic-metric checks.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import shortest_path

from ._backend import kernels
from .flow import FlatTorus, FlowSnapshot, ModelFamily, RoundSphereQuotient

#: Exhaustive map enumeration is used when both spaces have at most this many points.
EXHAUSTIVE_MAX = 6
#: Relative slack (times max(1, diam)) allowed in the triangle inequality.
METRIC_RTOL = 1e-12
SIDE_TOL = 1e-10


# ---------------------------------------------------------------- spaces

class Violation(NamedTuple):
    i: int
    j: int
    k: int
    defect: float
    axiom: str = "triangle"


def _metric_tol(d: np.ndarray) -> float:
    m = float(np.max(np.abs(d))) if d.size else 0.0
    return METRIC_RTOL * max(1.0, m)


def validate_metric(d, tol: Optional[float] = None) -> List[Violation]:
    """All metric-axiom violations of the matrix ``d``; empty means valid.

    Triangle violations are reported as (i, j, k, defect) with
    defect = d[i,k] - d[i,j] - d[j,k] > tol.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if tol is None:
        tol = _metric_tol(d)
    n = d.shape[0]
    out: List[Violation] = []
    if not np.all(np.isfinite(d)):
        for i, j in zip(*np.nonzero(~np.isfinite(d))):
            out.append(Violation(int(i), int(j), -1, math.inf, "finite"))
        return out
    for i in range(n):
        if d[i, i] != 0.0:
            out.append(Violation(i, i, -1, abs(float(d[i, i])), "diagonal"))
        for j in range(i + 1, n):
            if d[i, j] != d[j, i]:
                out.append(Violation(i, j, -1, abs(float(d[i, j] - d[j, i])), "symmetry"))
            if not d[i, j] > 0:
                out.append(Violation(i, j, -1, -float(d[i, j]), "positivity"))
    if out:
        return out
    return [Violation(i, j, k, defect)
            for i, j, k, defect in kernels.triangle_violations(d, tol)]


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite metric space given by its full distance matrix.

    All axioms, including every triangle inequality, are checked at
    construction.
    """

    d: np.ndarray
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise ValueError("a metric space needs a non-empty square matrix")
        bad = validate_metric(d)
        if bad:
            raise ValueError(f"not a metric: {len(bad)} violation(s), first {bad[0]}")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != d.shape[0]:
                raise ValueError("one label per point is required")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __len__(self) -> int:
        return self.n

    def diameter(self) -> float:
        return float(self.d.max())

    def subspace(self, idx: Sequence[int]) -> "FiniteMetricSpace":
        idx = list(idx)
        labels = None if self.labels is None else [self.labels[i] for i in idx]
        return FiniteMetricSpace(self.d[np.ix_(idx, idx)], labels)

    def permuted(self, perm: Sequence[int]) -> "FiniteMetricSpace":
        return self.subspace(perm)

    def scaled(self, c: float) -> "FiniteMetricSpace":
        if not c > 0:
            raise ValueError("scale must be positive")
        return FiniteMetricSpace(self.d * c, self.labels)

    @classmethod
    def from_points(cls, pts, labels=None) -> "FiniteMetricSpace":
        """Euclidean distances between the rows of ``pts``."""
        p = np.asarray(pts, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        return cls(np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2), labels)

    def write(self, path) -> None:
        """Header line with n, then the full matrix row by row."""
        with open(path, "w") as fh:
            fh.write(f"{self.n}\n")
            for row in self.d:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def read(cls, path) -> "FiniteMetricSpace":
        with open(path) as fh:
            lines = [ln.split() for ln in fh if ln.strip()]
        if not lines or len(lines[0]) != 1:
            raise ValueError(f"{path}: first line must hold the point count")
        n = int(lines[0][0])
        rows = lines[1:]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"{path}: expected {n} rows of {n} entries")
        return cls(np.array([[float(x) for x in r] for r in rows]))


def _subset(Z: FiniteMetricSpace, A) -> np.ndarray:
    a = np.unique(np.asarray(list(A), dtype=np.intp))
    if a.size == 0:
        raise ValueError("subsets must be non-empty")
    if a.min() < 0 or a.max() >= Z.n:
        raise ValueError("subset index out of range")
    return a


def hausdorff_distance(Z: FiniteMetricSpace, A, B) -> float:
    """Hausdorff distance between two subsets of Z, given as index lists."""
    a, b = _subset(Z, A), _subset(Z, B)
    block = Z.d[np.ix_(a, b)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


# ---------------------------------------------------------------- approximations

@dataclass(frozen=True, eq=False)
class PointMap:
    source: FiniteMetricSpace
    target: FiniteMetricSpace
    image: Tuple[int, ...]

    def __post_init__(self):
        img = tuple(int(i) for i in self.image)
        if len(img) != self.source.n:
            raise ValueError("the map needs one image per source point")
        if any(i < 0 or i >= self.target.n for i in img):
            raise ValueError("image index out of range")
        object.__setattr__(self, "image", img)

    def __call__(self, i: int) -> int:
        return self.image[i]


@dataclass(frozen=True)
class ApproximationCert:
    map: PointMap
    distortion: float
    covering: float
    nu: float

    def verify(self) -> bool:
        """Recompute from the map; must reproduce the stored values exactly."""
        d, c = kernels.map_nu(self.map.source.d, self.map.target.d, list(self.map.image))
        return d == self.distortion and c == self.covering and max(d, c) == self.nu


def happrox_of_map(f: PointMap) -> ApproximationCert:
    """Distortion, covering radius and nu = max of the two for the map f."""
    d, c = kernels.map_nu(f.source.d, f.target.d, list(f.image))
    return ApproximationCert(f, float(d), float(c), float(max(d, c)))


def glue_disjoint_union(X: FiniteMetricSpace, Y: FiniteMetricSpace, f: PointMap,
                        nu: float, mode: str = "repaired") -> FiniteMetricSpace:
    """The disjoint union of X and Y glued along the approximation f.

    Points 0..|X|-1 are X, the rest are Y.  In ``"verbatim"`` mode the cross
    distance is d_Y(y, f(x)) + nu, which is a metric only when f does not
    expand distances.  The default ``"repaired"`` mode takes the infimum
    over x' of d_X(x, x') + d_Y(f(x'), y) + nu; it agrees with the verbatim
    formula whenever that one is already a metric and is always a metric
    when f is a nu-approximation.
    """
    if f.source is not X or f.target is not Y:
        raise ValueError("f must map X into Y")
    if not nu > 0:
        raise ValueError("gluing needs nu > 0; nu = 0 would identify distinct points")
    cert = happrox_of_map(f)
    if cert.nu > nu * (1 + 1e-12):
        raise ValueError(f"f is only a {cert.nu}-approximation, larger than nu = {nu}")
    dfy = Y.d[list(f.image), :]                    # [x', y] -> d_Y(f(x'), y)
    if mode == "verbatim":
        cross = dfy + nu
    elif mode == "repaired":
        cross = np.min(X.d[:, :, None] + dfy[None, :, :], axis=1) + nu
    else:
        raise ValueError(f"unknown gluing mode {mode!r}")
    nx = X.n
    d = np.zeros((nx + Y.n,) * 2)
    d[:nx, :nx] = X.d
    d[nx:, nx:] = Y.d
    d[:nx, nx:] = cross
    d[nx:, :nx] = cross.T
    bad = validate_metric(d)
    if bad:
        raise ValueError(f"{mode} gluing is not a metric here: first violation {bad[0]}")
    labels = None
    if X.labels is not None and Y.labels is not None:
        labels = X.labels + Y.labels
    return FiniteMetricSpace(d, labels)


def _exhaustive(X, Y) -> ApproximationCert:
    nu, dist, cov, img = kernels.exhaustive_happrox(X.d, Y.d)
    return ApproximationCert(PointMap(X, Y, img), float(dist), float(cov), float(nu))


def _hill_climb(X, Y, budget: int, rng, starts=()) -> ApproximationCert:
    dx, dy = X.d, Y.d
    nx, ny = X.n, Y.n
    evals = 0

    def score(img):
        nonlocal evals
        evals += 1
        d, c = kernels.map_nu(dx, dy, img)
        return max(d, c), d, c

    moves = [("set", i, v) for i in range(nx) for v in range(ny)]
    moves += [("swap", i, j) for i, j in itertools.combinations(range(nx), 2)]
    best = None
    starts = [list(s) for s in starts]
    while evals < budget:
        img = starts.pop(0) if starts else [int(v) for v in rng.integers(0, ny, nx)]
        cur = score(img)
        improved = True
        while improved and evals < budget:
            improved = False
            for m in rng.permutation(len(moves)):
                kind, i, v = moves[m]
                if kind == "set":
                    if img[i] == v:
                        continue
                    cand = img.copy()
                    cand[i] = v
                else:
                    if img[i] == img[v]:
                        continue
                    cand = img.copy()
                    cand[i], cand[v] = cand[v], cand[i]
                sc = score(cand)
                if sc[0] < cur[0]:
                    img, cur, improved = cand, sc, True
                    break
                if evals >= budget:
                    break
        if best is None or cur[0] < best[0][0]:
            best = (cur, tuple(img))
    (nu, d, c), img = best
    return ApproximationCert(PointMap(X, Y, img), float(d), float(c), float(nu))


def directed_happrox(X: FiniteMetricSpace, Y: FiniteMetricSpace, budget: int = 20000,
                     seed: int = 0, starts=()) -> Tuple[ApproximationCert, bool]:
    """Best nu found over maps X -> Y and whether the search was exhaustive."""
    if X.n <= EXHAUSTIVE_MAX and Y.n <= EXHAUSTIVE_MAX:
        return _exhaustive(X, Y), True
    return _hill_climb(X, Y, budget, np.random.default_rng(seed), starts), False


@dataclass(frozen=True)
class GHBound:
    """Upper bound 2*nu on the GH distance with its witnessing map.

    ``forward`` is the best map X -> Y, ``backward`` the best map Y -> X;
    the bound uses whichever is smaller.  Outside the exhaustive regime the
    value is an upper bound only.
    """

    bound: float
    witness: ApproximationCert
    forward: ApproximationCert
    backward: ApproximationCert
    exhaustive: bool

    def __iter__(self):
        return iter((self.bound, self.witness))


def gh_upper_bound(X: FiniteMetricSpace, Y: FiniteMetricSpace, budget: int = 20000,
                   seed: int = 0, starts=()) -> GHBound:
    """d_GH(X, Y) <= 2 Happrox, minimised over the searched maps in both directions.

    ``starts`` are optional initial maps X -> Y for the randomized search.
    """
    fwd, ex1 = directed_happrox(X, Y, budget, seed, starts)
    bwd, ex2 = directed_happrox(Y, X, budget, seed + 1)
    w = fwd if fwd.nu <= bwd.nu else bwd
    return GHBound(2.0 * w.nu, w, fwd, bwd, ex1 and ex2)


def extract_approx_from_embedding(Z: FiniteMetricSpace, X_img, Y_img,
                                  nu: float) -> ApproximationCert:
    """Nearest-point map between two subsets of Z at Hausdorff distance <= 2 nu.

    The resulting map between the induced subspaces is certified to be a
    4 nu-approximation.
    """
    xs = [int(i) for i in X_img]
    ys = [int(i) for i in Y_img]
    h = hausdorff_distance(Z, xs, ys)
    if h > 2.0 * nu * (1 + 1e-12):
        raise ValueError(f"Hausdorff distance {h} exceeds 2*nu = {2 * nu}")
    block = Z.d[np.ix_(xs, ys)]
    img = tuple(int(j) for j in np.argmin(block, axis=1))
    cert = happrox_of_map(PointMap(Z.subspace(xs), Z.subspace(ys), img))
    if cert.nu > 4.0 * nu * (1 + 1e-12) + 1e-15:
        raise ArithmeticError(f"extracted map has nu = {cert.nu} > 4*nu")
    return cert


# ---------------------------------------------------------------- model planes

def _S(k: float, x: float) -> float:
    """Generalised sine of a length in the curvature-k plane (unscaled)."""
    if k > 0:
        return math.sin(x * math.sqrt(k))
    if k < 0:
        return math.sinh(x * math.sqrt(-k))
    return x


def model_distance(k: float, x, y) -> float:
    """Geodesic distance between two model points in the plane of curvature k.

    The plane is R^2 for k = 0, the sphere of radius 1/sqrt(k) in R^3 for
    k > 0 and the hyperboloid sheet of the same radius in Minkowski space
    for k < 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if k == 0:
        return float(np.linalg.norm(x - y))
    rho = 1.0 / math.sqrt(abs(k))
    if k > 0:
        return rho * math.atan2(float(np.linalg.norm(np.cross(x, y))), float(x @ y))
    v = x - y
    q = max(-v[0] ** 2 + v[1] ** 2 + v[2] ** 2, 0.0)
    return 2.0 * rho * math.asinh(math.sqrt(q) / (2.0 * rho))


def _geodesic_point(k: float, x, y, L: float, s: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if L == 0.0:
        return x.copy()
    if k == 0:
        return x + (s / L) * (y - x)
    sk = math.sqrt(abs(k))
    f = math.sin if k > 0 else math.sinh
    den = f(L * sk)
    return (f((L - s) * sk) * x + f(s * sk) * y) / den


@dataclass(frozen=True)
class ComparisonTriangle:
    """Triangle with vertices p, q, r in the curvature-k model plane.

    Sides are a = |qr|, b = |pr|, c = |pq|.
    """

    k: float
    a: float
    b: float
    c: float
    p: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)

    def vertex(self, name: str) -> np.ndarray:
        return {"p": self.p, "q": self.q, "r": self.r}[name]

    def side_length(self, side: str) -> float:
        return {"qr": self.a, "pr": self.b, "pq": self.c}["".join(sorted(side))]

    def angle(self, at: str) -> float:
        """Interior angle at a vertex."""
        opp = {"p": self.a, "q": self.b, "r": self.c}[at]
        adj = [x for v, x in (("p", self.a), ("q", self.b), ("r", self.c)) if v != at]
        return _angle(self.k, opp, adj[0], adj[1])


def _angle(k: float, opp: float, u: float, v: float) -> float:
    """Angle between sides u and v opposite ``opp``, by the half-angle formula."""
    s = 0.5 * (opp + u + v)
    num = _S(k, s - u) * _S(k, s - v)
    den = _S(k, s) * _S(k, s - opp)
    return 2.0 * math.atan2(math.sqrt(max(num, 0.0)), math.sqrt(max(den, 0.0)))


def _apex(k: float, dist: float, angle: float) -> np.ndarray:
    """Model point at distance ``dist`` from the base vertex q, at ``angle``
    from the direction of r."""
    if k == 0:
        return dist * np.array([math.cos(angle), math.sin(angle)])
    rho = 1.0 / math.sqrt(abs(k))
    cs, sn = (math.cos, math.sin) if k > 0 else (math.cosh, math.sinh)
    x = dist / rho
    return rho * np.array([cs(x), sn(x) * math.cos(angle), sn(x) * math.sin(angle)])


def comparison_triangle(k: float, a: float, b: float, c: float) -> ComparisonTriangle:
    """Embed the triangle with sides (|qr|, |pr|, |pq|) = (a, b, c) in the model plane."""
    sides = (a, b, c)
    if min(sides) < 0 or not all(math.isfinite(x) for x in sides):
        raise ValueError("side lengths must be finite and non-negative")
    m = max(sides)
    if 2.0 * m > sum(sides) * (1 + 1e-15):
        raise ValueError(f"sides {sides} violate the triangle inequality")
    if k > 0 and not sum(sides) < 2.0 * math.pi / math.sqrt(k):
        raise ValueError(f"perimeter {sum(sides)} is not below 2*pi/sqrt(k)")
    Q = _angle(k, b, a, c) if a > 0 and c > 0 else 0.0
    q = _apex(k, 0.0, 0.0)
    r = _apex(k, a, 0.0)
    p = _apex(k, c, Q)
    T = ComparisonTriangle(float(k), float(a), float(b), float(c), p, q, r)
    for (u, v), want in ((("q", "r"), a), (("p", "r"), b), (("p", "q"), c)):
        got = model_distance(k, T.vertex(u), T.vertex(v))
        if abs(got - want) > SIDE_TOL * max(1.0, want):
            raise ArithmeticError(f"embedding reproduces |{u}{v}| = {got}, wanted {want}")
    return T


def model_side_distance(T: ComparisonTriangle, side: str, s: float) -> float:
    """Model distance from the vertex opposite ``side`` to the point at
    arclength ``s`` along it, measured from the side's first vertex."""
    if len(side) != 2 or set(side) not in ({"q", "r"}, {"p", "r"}, {"p", "q"}):
        raise ValueError(f"unknown side {side!r}")
    L = T.side_length(side)
    if not 0.0 <= s <= L:
        raise ValueError(f"arclength {s} outside [0, {L}]")
    opp = ({"p", "q", "r"} - set(side)).pop()
    x = _geodesic_point(T.k, T.vertex(side[0]), T.vertex(side[1]), L, s)
    return model_distance(T.k, T.vertex(opp), x)


# ---------------------------------------------------------------- Alexandrov / intrinsic

@dataclass(frozen=True)
class AlexandrovReport:
    k: float
    tol: float
    min_margin: float
    violations: Tuple[Tuple[int, int, int, int, float], ...]
    checked: int
    skipped: int

    @property
    def passed(self) -> bool:
        return not self.violations

    def rows(self):
        """(check, i, j, k, s, margin) rows; i, j, k = p, q, r."""
        return [("alexandrov", p, q, r, s, m) for p, q, r, s, m in self.violations]


def _two_distance_point(T: ComparisonTriangle, dqs: float, dsr: float) -> float:
    """Model distance from p~ to the point with |q~s~| = dqs and |s~r~| = dsr.

    Of the two mirror-image positions the one nearer p~ is used.  When s is
    exactly on a geodesic both positions lie on q~r~ at arclength dqs.
    """
    k, a = T.k, T.a
    if a == 0.0 or dqs == 0.0:
        return model_distance(k, T.p, T.q)
    A = _angle(k, dsr, a, dqs)
    return min(model_distance(k, T.p, _apex(k, dqs, sgn * A)) for sgn in (1.0, -1.0))


def alexandrov_check(S: FiniteMetricSpace, k: float, tol: Optional[float] = None,
                     placement: str = "two-distance") -> AlexandrovReport:
    """Triangle comparison d(p, s) >= d_k(p~, s~) over all near-geodesic points.

    A point s counts as lying on a geodesic from q to r when
    d(q, s) + d(s, r) <= d(q, r) + tol.  With ``placement="arclength"`` the
    model point s~ sits on q~r~ at arclength d(q, s).  The default
    ``"two-distance"`` placement puts s~ at distances d(q, s) and d(s, r)
    from q~ and r~ on the side nearer p~, which coincides with the
    arclength rule for points exactly on a geodesic and does not turn the
    O(sqrt(tol)) sideways offset of near-geodesic sample points into
    spurious violations.  Triangles over the perimeter limit for k > 0, and
    near-geodesic points whose own model triangle is over it, are skipped
    and counted.
    """
    if placement not in ("two-distance", "arclength"):
        raise ValueError(f"unknown placement {placement!r}")
    d = S.d
    n = S.n
    if tol is None:
        tol = 1e-6 * S.diameter()
    min_margin = math.inf
    viol = []
    checked = skipped = 0
    for q, r in itertools.combinations(range(n), 2):
        dqr = d[q, r]
        on = [s for s in range(n) if s != q and s != r and d[q, s] + d[s, r] <= dqr + tol]
        if not on:
            continue
        for p in range(n):
            if p == q or p == r:
                continue
            try:
                T = comparison_triangle(k, dqr, d[p, r], d[p, q])
            except ValueError:
                skipped += 1
                continue
            for s in on:
                if s == p:
                    continue
                if placement == "arclength":
                    model = model_side_distance(T, "qr", min(d[q, s], dqr))
                else:
                    try:
                        model = _two_distance_point(T, d[q, s], d[s, r])
                    except ValueError:
                        skipped += 1
                        continue
                m = float(d[p, s] - model)
                checked += 1
                min_margin = min(min_margin, m)
                if m < -tol:
                    viol.append((p, q, r, s, m))
    return AlexandrovReport(float(k), float(tol), min_margin, tuple(viol), checked, skipped)


def intrinsic_check(S: FiniteMetricSpace, delta: float) -> bool:
    """Whether every pair is joined by a chain of steps <= delta whose total
    length exceeds their distance by at most delta."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    g = np.where(S.d <= delta, S.d, 0.0)
    sp = shortest_path(g, method="D", directed=False)
    return bool(np.all(sp <= S.d + delta * (1 + 1e-12)))


def curve_length(S: FiniteMetricSpace, chain: Sequence[int]) -> float:
    """Sum of consecutive distances along a point chain."""
    chain = list(chain)
    if not chain:
        raise ValueError("a chain needs at least one point")
    return float(sum(S.d[i, j] for i, j in zip(chain, chain[1:])))


# ---------------------------------------------------------------- sampling

def sample_sphere(n: int, dim: int = 2, radius: float = 1.0, seed: int = 0) -> FiniteMetricSpace:
    """n uniform points on the round dim-sphere with geodesic distances."""
    x = np.random.default_rng(seed).normal(size=(n, dim + 1))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return FiniteMetricSpace(radius * _sphere_angles(x))


def _sphere_angles(x: np.ndarray) -> np.ndarray:
    g = np.clip(x @ x.T, -1.0, 1.0)
    # atan2 of the chord half-lengths keeps accuracy near 0 and pi
    diff = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    summ = np.linalg.norm(x[:, None, :] + x[None, :, :], axis=2)
    ang = 2.0 * np.arctan2(diff, summ)
    ang[g == 1.0] = np.where(diff[g == 1.0] == 0.0, 0.0, ang[g == 1.0])
    np.fill_diagonal(ang, 0.0)
    return (ang + ang.T) / 2.0


def _family_of(source) -> ModelFamily:
    if isinstance(source, FlowSnapshot):
        if source.geometry is None:
            raise ValueError("snapshot carries no closed-form geometry")
        return source.geometry
    if isinstance(source, ModelFamily):
        return source
    raise TypeError(f"cannot sample from {type(source).__name__}")


def _draw(f: ModelFamily, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if isinstance(f, RoundSphereQuotient):
        if f.order != 1:
            raise ValueError("only the simply connected round sphere can be sampled")
        x = rng.normal(size=(n, 4))
        return x / np.linalg.norm(x, axis=1, keepdims=True)
    if isinstance(f, FlatTorus):
        return rng.random(size=(n, 3))
    raise ValueError(f"sampling is not supported for {f.name}")


def _distances(f: ModelFamily, pts: np.ndarray) -> np.ndarray:
    """Closed-form geodesic distances of the family f between drawn points."""
    if isinstance(f, RoundSphereQuotient):
        return _sphere_angles(pts) / math.sqrt(f.k0)
    if isinstance(f, FlatTorus):
        L = np.array([f.a, f.b, f.c])
        delta = np.abs(pts[:, None, :] - pts[None, :, :])
        delta = np.minimum(delta, 1.0 - delta) * L
        return np.sqrt(np.sum(delta ** 2, axis=2))
    raise ValueError(f"sampling is not supported for {f.name}")


def sample_model_space(source, n: int, seed: int = 0) -> FiniteMetricSpace:
    """n uniform points of a closed-form family with exact geodesic distances."""
    f = _family_of(source)
    if n < 1:
        raise ValueError("need at least one point")
    return FiniteMetricSpace(_distances(f, _draw(f, n, seed)))


@dataclass(frozen=True)
class GHConvergenceRow:
    t: float
    bound: float
    identity_bound: float
    envelope: float
    floor: float
    exhaustive: bool

    @property
    def within_envelope(self) -> bool:
        return self.bound <= self.envelope + self.floor + 1e-12


def gh_convergence_experiment(f: ModelFamily, times, n: int = 24, seed: int = 0,
                              budget: int = 20000) -> List[GHConvergenceRow]:
    """GH upper bounds between a fixed point sample at time 0 and the same
    points at later times.

    ``envelope`` is twice the identity-map distortion allowed by the
    family's distance scaling, 2 (1 - scale(t)) diam(M, g(0)); ``floor`` is
    the bound between the time-0 sample and itself.
    """
    pts = _draw(f, n, seed)
    X0 = FiniteMetricSpace(_distances(f, pts))
    floor = gh_upper_bound(X0, X0, budget, seed).bound
    diam0 = f.diameter()
    ident = tuple(range(n))
    rows = []
    for t in times:
        t = float(t)
        ft = f.at_time(t)
        Xt = FiniteMetricSpace(_distances(ft, pts))
        gh = gh_upper_bound(Xt, X0, budget, seed, starts=[ident])
        idb = 2.0 * happrox_of_map(PointMap(Xt, X0, ident)).nu
        scale = ft.diameter() / diam0
        env = 2.0 * abs(1.0 - scale) * diam0
        rows.append(GHConvergenceRow(t, gh.bound, idb, env, floor, gh.exhaustive))
    return rows


# ---------------------------------------------------------------- CSV

def write_violation_csv(rows, path) -> None:
    """Rows of (check, i, j, k, s, margin)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "i", "j", "k", "s", "margin"])
        for row in rows:
            w.writerow([row[0], *row[1:5], repr(float(row[5]))])

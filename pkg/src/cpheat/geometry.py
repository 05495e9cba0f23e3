"""Bounded open sets in R^d: membership, volume, rearrangement, linear images.

All domains are immutable value objects. Membership is strict: a domain is
an open set and its boundary counts as outside. This never affects an
integral (boundaries are null sets) but fixes deterministic behavior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import as_seed_sequence
from .errors import PreconditionError

__all__ = [
    "Domain",
    "Interval",
    "Box",
    "Ball",
    "Ellipsoid",
    "Translate",
    "LinearImage",
    "GridSet",
    "unit_ball_volume",
    "symmetric_rearrangement",
    "self_difference_subset",
    "SelfDifferenceReport",
    "apply_linear",
    "monte_carlo_volume",
    "load_grid_set",
    "save_grid_set",
]


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    return math.pi ** (d / 2.0) / math.gamma(1.0 + d / 2.0)


def _as_points(points, d: int) -> tuple[np.ndarray, bool]:
    """Normalize input to shape (n, d); returns (array, was_single_point)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        if d != 1:
            raise PreconditionError(f"scalar point given for dimension {d}")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise PreconditionError(f"point has dimension {arr.shape[0]}, domain has {d}")
        return arr.reshape(1, d), True
    if arr.ndim == 2:
        if arr.shape[1] != d:
            raise PreconditionError(f"points have dimension {arr.shape[1]}, domain has {d}")
        return arr, False
    raise PreconditionError("points must be scalar, (d,), or (n, d)")


class Domain:
    """Base class for bounded open sets."""

    dimension: int

    def volume(self) -> float:
        raise NotImplementedError

    def contains(self, points):
        """Strict membership; scalar/point input gives bool, batch gives bool array."""
        pts, single = _as_points(points, self.dimension)
        mask = self._contains(pts)
        return bool(mask[0]) if single else mask

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned (lo, hi) arrays enclosing the set."""
        raise NotImplementedError

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n i.i.d. uniform points in the set, shape (n, d)."""
        raise NotImplementedError


def _freeze(obj, name, value):
    arr = np.array(value, dtype=float)
    arr.flags.writeable = False
    object.__setattr__(obj, name, arr)


@dataclass(frozen=True)
class Interval(Domain):
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise PreconditionError(f"empty interval ({self.lo}, {self.hi})")
        object.__setattr__(self, "dimension", 1)

    def volume(self) -> float:
        return self.hi - self.lo

    def _contains(self, pts):
        x = pts[:, 0]
        return (x > self.lo) & (x < self.hi)

    def bounding_box(self):
        return np.array([self.lo]), np.array([self.hi])

    def sample_uniform(self, rng, n):
        return (self.lo + (self.hi - self.lo) * rng.random(n)).reshape(n, 1)


@dataclass(frozen=True, eq=False)
class Box(Domain):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        _freeze(self, "lo", np.atleast_1d(self.lo))
        _freeze(self, "hi", np.atleast_1d(self.hi))
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise PreconditionError("box bounds must be equal-length vectors")
        if not np.all(self.lo < self.hi):
            raise PreconditionError("box has an empty axis")
        object.__setattr__(self, "dimension", self.lo.shape[0])

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def _contains(self, pts):
        return np.all((pts > self.lo) & (pts < self.hi), axis=1)

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def sample_uniform(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.random((n, self.dimension))


@dataclass(frozen=True, eq=False)
class Ball(Domain):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        _freeze(self, "center", np.atleast_1d(self.center))
        if self.radius <= 0:
            raise PreconditionError("ball radius must be positive")
        object.__setattr__(self, "dimension", self.center.shape[0])

    def volume(self) -> float:
        return unit_ball_volume(self.dimension) * self.radius ** self.dimension

    def _contains(self, pts):
        diff = pts - self.center
        return np.einsum("ij,ij->i", diff, diff) < self.radius**2

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def sample_uniform(self, rng, n):
        d = self.dimension
        z = rng.standard_normal((n, d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        r = self.radius * rng.random(n) ** (1.0 / d)
        return self.center + z / norms * r[:, None]


@dataclass(frozen=True, eq=False)
class Ellipsoid(Domain):
    """Open set {x : (x - center)^T form (x - center) < 1} for positive-definite form."""

    center: np.ndarray
    form: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _freeze(self, "center", np.atleast_1d(self.center))
        _freeze(self, "form", np.atleast_2d(self.form))
        d = self.center.shape[0]
        if self.form.shape != (d, d):
            raise PreconditionError("quadratic form shape does not match center")
        if not np.allclose(self.form, self.form.T, atol=1e-12):
            raise PreconditionError("quadratic form must be symmetric")
        try:
            chol = np.linalg.cholesky(self.form)
        except np.linalg.LinAlgError as exc:
            raise PreconditionError("quadratic form must be positive definite") from exc
        _freeze(self, "_chol", chol)
        object.__setattr__(self, "dimension", d)

    def volume(self) -> float:
        det = np.linalg.det(self.form)
        return unit_ball_volume(self.dimension) / math.sqrt(det)

    def _contains(self, pts):
        diff = pts - self.center
        return np.einsum("ij,jk,ik->i", diff, self.form, diff) < 1.0

    def bounding_box(self):
        # axis extents of the ellipsoid are sqrt(diag(form^{-1}))
        inv = np.linalg.inv(self.form)
        ext = np.sqrt(np.diag(inv))
        return self.center - ext, self.center + ext

    def sample_uniform(self, rng, n):
        d = self.dimension
        ball = Ball(np.zeros(d), 1.0).sample_uniform(rng, n)
        # form = L L^T; y = L^T (x - c) maps the set onto the unit ball
        return self.center + np.linalg.solve(self._chol.T, ball.T).T


@dataclass(frozen=True, eq=False)
class Translate(Domain):
    base: Domain
    shift: np.ndarray

    def __post_init__(self):
        _freeze(self, "shift", np.atleast_1d(self.shift))
        if self.shift.shape[0] != self.base.dimension:
            raise PreconditionError("shift dimension does not match base domain")
        object.__setattr__(self, "dimension", self.base.dimension)

    def volume(self) -> float:
        return self.base.volume()

    def _contains(self, pts):
        return self.base._contains(pts - self.shift)

    def bounding_box(self):
        lo, hi = self.base.bounding_box()
        return lo + self.shift, hi + self.shift

    def sample_uniform(self, rng, n):
        return self.base.sample_uniform(rng, n) + self.shift


@dataclass(frozen=True, eq=False)
class LinearImage(Domain):
    """Image T(base) of a domain under an invertible linear map."""

    base: Domain
    matrix: np.ndarray
    _inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _freeze(self, "matrix", np.atleast_2d(self.matrix))
        d = self.base.dimension
        if self.matrix.shape != (d, d):
            raise PreconditionError("matrix shape does not match base dimension")
        det = np.linalg.det(self.matrix)
        if det == 0:
            raise PreconditionError("matrix must be invertible")
        _freeze(self, "_inv", np.linalg.inv(self.matrix))
        object.__setattr__(self, "dimension", d)

    def volume(self) -> float:
        return abs(float(np.linalg.det(self.matrix))) * self.base.volume()

    def _contains(self, pts):
        return self.base._contains(pts @ self._inv.T)

    def bounding_box(self):
        # image of the base bounding box is a parallelotope; box its corners
        lo, hi = self.base.bounding_box()
        d = self.dimension
        corners = np.array(
            [[(hi if (k >> i) & 1 else lo)[i] for i in range(d)] for k in range(1 << d)]
        )
        mapped = corners @ self.matrix.T
        return mapped.min(axis=0), mapped.max(axis=0)

    def sample_uniform(self, rng, n):
        return self.base.sample_uniform(rng, n) @ self.matrix.T


@dataclass(frozen=True, eq=False)
class GridSet(Domain):
    """Union of occupied lattice cells; cell (i, ...) spans origin + [i, i+1) * h."""

    origin: np.ndarray
    h: float
    mask: np.ndarray

    def __post_init__(self):
        _freeze(self, "origin", np.atleast_1d(self.origin))
        mask = np.array(self.mask, dtype=bool)
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)
        if self.h <= 0:
            raise PreconditionError("cell size must be positive")
        if mask.ndim != self.origin.shape[0]:
            raise PreconditionError("mask rank does not match origin dimension")
        if not mask.any():
            raise PreconditionError("grid set has no occupied cells")
        object.__setattr__(self, "dimension", mask.ndim)

    def volume(self) -> float:
        return float(self.mask.sum()) * self.h**self.dimension

    def _contains(self, pts):
        idx = np.floor((pts - self.origin) / self.h).astype(np.int64)
        ok = np.all((idx >= 0) & (idx < np.array(self.mask.shape)), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if ok.any():
            sel = idx[ok]
            out[ok] = self.mask[tuple(sel.T)]
        return out

    def bounding_box(self):
        occ = np.argwhere(self.mask)
        lo = self.origin + occ.min(axis=0) * self.h
        hi = self.origin + (occ.max(axis=0) + 1) * self.h
        return lo, hi

    def sample_uniform(self, rng, n):
        occ = np.argwhere(self.mask)
        pick = occ[rng.integers(0, len(occ), n)]
        return self.origin + (pick + rng.random((n, self.dimension))) * self.h

    def occupied_cell_centers(self) -> np.ndarray:
        occ = np.argwhere(self.mask)
        return self.origin + (occ + 0.5) * self.h


def symmetric_rearrangement(domain: Domain) -> Ball:
    """Centered ball with the same volume as the domain."""
    d = domain.dimension
    vol = domain.volume()
    if not (0 < vol < math.inf):
        raise PreconditionError("domain volume must be positive and finite")
    radius = (vol / unit_ball_volume(d)) ** (1.0 / d)
    return Ball(np.zeros(d), radius)


@dataclass(frozen=True)
class SelfDifferenceReport:
    ok: bool
    violating_fraction: float
    n_pairs: int
    tolerance: float


def self_difference_subset(
    domain: Domain,
    superset: Domain,
    tolerance: float = 1e-3,
    n_pairs: int = 200_000,
    seed=0,
) -> SelfDifferenceReport:
    """Check D - D inside A up to a mass fraction of pairs.

    Pairs (x, y) are drawn uniformly from D x D (exhaustive cell-center pairs
    when D is a GridSet); the check passes when the fraction with x - y
    outside A is at most ``tolerance``.
    """
    if domain.dimension != superset.dimension:
        raise PreconditionError("domains must share a dimension")
    if not (0 <= tolerance < 1):
        raise PreconditionError("tolerance must lie in [0, 1)")
    if isinstance(domain, GridSet):
        centers = domain.occupied_cell_centers()
        diffs = (centers[:, None, :] - centers[None, :, :]).reshape(-1, domain.dimension)
        inside = superset.contains(diffs)
        n = len(diffs)
    else:
        rng = np.random.default_rng(as_seed_sequence(seed))
        x = domain.sample_uniform(rng, n_pairs)
        y = domain.sample_uniform(rng, n_pairs)
        inside = superset.contains(x - y)
        n = n_pairs
    frac = 1.0 - float(np.count_nonzero(inside)) / n
    return SelfDifferenceReport(frac <= tolerance, frac, n, tolerance)


def apply_linear(domain: Domain, matrix) -> Domain:
    """Image of an analytic domain under a volume-preserving linear map."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    d = domain.dimension
    if m.shape != (d, d):
        raise PreconditionError(f"matrix must be {d}x{d}")
    det = float(np.linalg.det(m))
    if abs(abs(det) - 1.0) > 1e-12:
        raise PreconditionError(f"matrix must be unimodular, |det| = {abs(det)!r}")
    if isinstance(domain, GridSet):
        raise PreconditionError("linear images of grid sets are not supported")
    if isinstance(domain, Interval):
        a, b = m[0, 0] * domain.lo, m[0, 0] * domain.hi
        return Interval(min(a, b), max(a, b))
    if isinstance(domain, Ball):
        inv = np.linalg.inv(m)
        form = inv.T @ inv / domain.radius**2
        return Ellipsoid(m @ domain.center, form)
    if isinstance(domain, Ellipsoid):
        inv = np.linalg.inv(m)
        return Ellipsoid(m @ domain.center, inv.T @ domain.form @ inv)
    if isinstance(domain, Translate):
        return Translate(apply_linear(domain.base, m), m @ domain.shift)
    if isinstance(domain, Box):
        off = m - np.diag(np.diag(m))
        if not off.any():
            lo, hi = np.diag(m) * domain.lo, np.diag(m) * domain.hi
            return Box(np.minimum(lo, hi), np.maximum(lo, hi))
        return LinearImage(domain, m)
    if isinstance(domain, LinearImage):
        return LinearImage(domain.base, m @ domain.matrix)
    return LinearImage(domain, m)


def monte_carlo_volume(domain: Domain, n: int, seed) -> tuple[float, float]:
    """Rejection-sampling volume estimate over the bounding box: (mean, stderr)."""
    lo, hi = domain.bounding_box()
    box_vol = float(np.prod(hi - lo))
    rng = np.random.default_rng(as_seed_sequence(seed))
    pts = lo + (hi - lo) * rng.random((n, domain.dimension))
    p = float(np.count_nonzero(domain.contains(pts))) / n
    return box_vol * p, box_vol * math.sqrt(p * (1 - p) / n)


def load_grid_set(path) -> GridSet:
    """Read a mask file: header line `d h origin... counts...`, then 0/1 rows."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        rows = [line.strip() for line in fh if line.strip()]
    d = int(header[0])
    h = float(header[1])
    origin = np.array([float(v) for v in header[2 : 2 + d]])
    counts = [int(v) for v in header[2 + d : 2 + 2 * d]]
    digits = "".join(rows)
    if len(digits) != int(np.prod(counts)):
        raise PreconditionError(
            f"mask file holds {len(digits)} cells, header declares {int(np.prod(counts))}"
        )
    mask = np.array([c == "1" for c in digits]).reshape(counts)
    return GridSet(origin, h, mask)


def save_grid_set(grid: GridSet, path) -> None:
    counts = grid.mask.shape
    header = (
        f"{grid.dimension} {grid.h!r} "
        + " ".join(repr(float(v)) for v in grid.origin)
        + " "
        + " ".join(str(c) for c in counts)
    )
    flat = grid.mask.reshape(counts[0], -1) if grid.dimension == 2 else grid.mask.reshape(1, -1)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for row in flat:
            fh.write("".join("1" if v else "0" for v in row) + "\n")

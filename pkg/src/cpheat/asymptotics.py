"""Conditional statistics of the jump chain confined to a bounded domain.

Two rejection-sampled diagnostics: the characteristic function of the n-th
chain position conditioned on landing in the domain (which flattens toward
the uniform law on the domain as n grows), and the probability that the
next position stays inside conditioned on the whole history staying inside
(whose limit is compared against the mean single-jump containment).

Rejection is used throughout, with no importance weighting, so estimates
are unbiased; the cost is the rarity of the conditioning event, guarded by
an acceptance-rate floor. Uniformity-in-start claims are read as uniform
over compact sets of starting points; callers probe a finite deterministic
set (domain center and a near-boundary point is the conventional pair).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .blocks import as_seed_sequence
from .errors import AcceptanceRateError, PreconditionError
from .geometry import Ball, Box, Domain, Interval, Translate, _as_points
from .jumps import JumpDensity

__all__ = [
    "uniform_fourier",
    "CharfunEstimate",
    "conditional_charfun",
    "ContainmentEstimate",
    "conditional_containment",
    "DEFAULT_MAX_ORDER",
]

DEFAULT_MAX_ORDER = 50
_MIN_ACCEPTANCE = 1e-4
_BLOCK = 1 << 16
_BLOCK_MAX = 1 << 21


def _next_batch(accepted: int, target: int, tried: int, max_chains: int | None) -> int:
    """Grow batches toward the projected need; deterministic given history."""
    if tried == 0 or accepted >= target:
        batch = _BLOCK
    else:
        rate = max(accepted / tried, 1.0 / tried)
        need = math.ceil((target - accepted) / rate)
        batch = int(min(max(need, _BLOCK), _BLOCK_MAX))
    if max_chains is not None:
        batch = min(batch, max_chains - tried)
    return batch


def _sinc_interval(lo: float, hi: float, xi: float) -> complex:
    if xi == 0.0:
        return 1.0 + 0.0j
    return (cmath.exp(1j * xi * hi) - cmath.exp(1j * xi * lo)) / (1j * xi * (hi - lo))


def uniform_fourier(domain: Domain, xi) -> complex:
    """Normalized Fourier transform of the domain indicator at frequency xi.

    Analytic for intervals, boxes, and balls in one or two dimensions;
    midpoint-grid quadrature otherwise.
    """
    xi_arr, _ = _as_points(xi, domain.dimension)
    xi_vec = xi_arr[0]
    if isinstance(domain, Interval):
        return _sinc_interval(domain.lo, domain.hi, float(xi_vec[0]))
    if isinstance(domain, Box):
        out = 1.0 + 0.0j
        for i in range(domain.dimension):
            out *= _sinc_interval(float(domain.lo[i]), float(domain.hi[i]), float(xi_vec[i]))
        return out
    if isinstance(domain, Ball):
        phase = cmath.exp(1j * float(np.dot(xi_vec, domain.center)))
        s = float(np.linalg.norm(xi_vec)) * domain.radius
        if s == 0.0:
            return phase
        if domain.dimension == 1:
            return phase * math.sin(s) / s
        if domain.dimension == 2:
            from scipy.special import j1

            return phase * 2.0 * float(j1(s)) / s
    if isinstance(domain, Translate):
        phase = cmath.exp(1j * float(np.dot(xi_vec, domain.shift)))
        return phase * uniform_fourier(domain.base, xi_vec)
    return _fourier_grid(domain, xi_vec)


def _fourier_grid(domain: Domain, xi_vec, res: int = 512) -> complex:
    lo, hi = domain.bounding_box()
    d = domain.dimension
    steps = (hi - lo) / res
    axes = [lo[i] + (np.arange(res) + 0.5) * steps[i] for i in range(d)]
    if d == 1:
        pts = axes[0].reshape(-1, 1)
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    inside = domain.contains(pts)
    if not inside.any():
        raise PreconditionError("quadrature grid too coarse for domain")
    phases = np.exp(1j * pts[inside] @ np.asarray(xi_vec, dtype=float))
    return complex(phases.mean())


@dataclass(frozen=True)
class CharfunEstimate:
    value: complex
    stderr_re: float
    stderr_im: float
    n_accepted: int
    acceptance_rate: float
    seed: int

    @property
    def stderr(self) -> float:
        return math.hypot(self.stderr_re, self.stderr_im)


def _acceptance_guard(accepted: int, tried: int, floor: float, context: str):
    if floor <= 0:
        return
    if tried >= max(20.0 / floor, 1e6) and accepted / tried < floor:
        raise AcceptanceRateError(
            f"{context}: acceptance rate {accepted / max(tried, 1):.3e} fell below "
            f"{floor:.0e} after {tried} chains; the conditioning event is too rare "
            "at this depth (expected to shrink geometrically with n)"
        )


def conditional_charfun(
    jump: JumpDensity,
    domain: Domain,
    x,
    n: int,
    xi,
    n_accepted: int,
    seed,
    min_acceptance: float = _MIN_ACCEPTANCE,
    max_chains: int | None = None,
) -> CharfunEstimate:
    """Characteristic function of the n-th chain position given it lands inside.

    Chains start at x; those whose n-th position lies in the domain are
    kept and the complex exponential is averaged over the first
    ``n_accepted`` of them.
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if n > DEFAULT_MAX_ORDER:
        raise PreconditionError(f"n is capped at {DEFAULT_MAX_ORDER}")
    x0, _ = _as_points(x, domain.dimension)
    xi_vec = np.asarray(xi, dtype=float).reshape(-1)
    rng = np.random.default_rng(as_seed_sequence(seed))
    kept = []
    accepted = 0
    tried = 0
    while accepted < n_accepted:
        if max_chains is not None and tried >= max_chains:
            break
        batch = _next_batch(accepted, n_accepted, tried, max_chains)
        if batch <= 0:
            break
        pos = x0 + jump.sample(rng, batch)
        for _ in range(n - 1):
            pos = pos + jump.sample(rng, batch)
        good = domain.contains(pos)
        sel = pos[good]
        kept.append(sel)
        accepted += len(sel)
        tried += batch
        _acceptance_guard(accepted, tried, min_acceptance, f"conditional charfun at n={n}")
    samples = np.concatenate(kept)[:n_accepted] if kept else np.empty((0, domain.dimension))
    if len(samples) < 2:
        raise AcceptanceRateError(
            f"conditional charfun at n={n}: only {len(samples)} accepted chains within budget"
        )
    vals = np.exp(1j * samples @ xi_vec)
    m = len(vals)
    value = complex(vals.mean())
    se_re = float(vals.real.std(ddof=1)) / math.sqrt(m)
    se_im = float(vals.imag.std(ddof=1)) / math.sqrt(m)
    root = as_seed_sequence(seed)
    seed_tag = int(root.entropy) if isinstance(root.entropy, (int, np.integer)) else 0
    return CharfunEstimate(value, se_re, se_im, m, accepted / max(tried, 1), seed_tag)


@dataclass(frozen=True)
class ContainmentEstimate:
    mean: float
    stderr: float
    n_accepted: int
    acceptance_rate: float
    seed: int


def conditional_containment(
    jump: JumpDensity,
    domain: Domain,
    x,
    n: int,
    n_accepted: int,
    seed,
    min_acceptance: float = _MIN_ACCEPTANCE,
    max_chains: int | None = None,
) -> ContainmentEstimate:
    """Probability the (n+1)-th chain position stays inside, given the first n did.

    Chains start at x and are killed at their first exit; survivors of depth
    n are the conditioned sample, and the estimate is the fraction whose
    next position also lands inside. Dead chains are dropped as they die, so
    the cost is dominated by the first step.
    """
    if n < 0:
        raise PreconditionError("n must be nonnegative")
    if n > DEFAULT_MAX_ORDER:
        raise PreconditionError(f"n is capped at {DEFAULT_MAX_ORDER}")
    x0, _ = _as_points(x, domain.dimension)
    rng = np.random.default_rng(as_seed_sequence(seed))
    accepted = 0
    contained = 0
    tried = 0
    while accepted < n_accepted:
        if max_chains is not None and tried >= max_chains:
            break
        batch = _next_batch(accepted, n_accepted, tried, max_chains)
        if batch <= 0:
            break
        pos = x0 + jump.sample(rng, batch) if n > 0 else np.broadcast_to(x0, (batch, x0.shape[1])).copy()
        if n > 0:
            pos = pos[domain.contains(pos)]
        for _ in range(n - 1):
            if len(pos) == 0:
                break
            pos = pos + jump.sample(rng, len(pos))
            pos = pos[domain.contains(pos)]
        survivors = len(pos)
        accepted += survivors
        if survivors:
            nxt = pos + jump.sample(rng, survivors)
            contained += int(np.count_nonzero(domain.contains(nxt)))
        tried += batch
        _acceptance_guard(accepted, tried, min_acceptance, f"conditional containment at n={n}")
    if accepted == 0:
        raise AcceptanceRateError(
            f"conditional containment at n={n}: no chains survived within budget"
        )
    p = contained / accepted
    stderr = math.sqrt(p * (1.0 - p) / accepted)
    root = as_seed_sequence(seed)
    seed_tag = int(root.entropy) if isinstance(root.entropy, (int, np.integer)) else 0
    return ContainmentEstimate(p, stderr, accepted, accepted / max(tried, 1), seed_tag)

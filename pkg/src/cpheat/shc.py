"""Heat content of a killed pure-jump process: path simulation and series.

The survival event up to time t depends only on the chain positions visited
before t, because paths are piecewise constant: the process survives iff
every chain position up to the number of arrivals in [0, t] stays in the
domain. Simulation therefore draws a jump count, the chain, and sorted
uniform arrival times, and reuses one path across the whole time grid.

The same quantity expands as a series over the number of jumps, weighted by
the counting-process probabilities, with coefficients equal to the integral
over starting points of the probability that the first n chain positions
stay in the domain ("stay integrals").
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import as_seed_sequence, map_blocks
from .errors import PreconditionError
from .eigenvalue import QuadratureSpec, ValueWithError
from .geometry import Domain, _as_points
from .jumps import ProcessSpec

__all__ = [
    "EstimateCI",
    "ShcCurve",
    "survive_one_path",
    "estimate_Q",
    "stay_integral",
    "q_series",
    "SeriesResult",
    "lambda_from_shc",
    "ShcFit",
    "poisson_pmf_truncated",
]

SERIES_TERM_CAP = 10_000


@dataclass(frozen=True)
class EstimateCI:
    mean: float
    stderr: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if self.stderr < 0 or self.n_samples < 1:
            raise PreconditionError("invalid estimate: stderr >= 0 and n_samples >= 1 required")


@dataclass(frozen=True)
class ShcCurve:
    times: tuple[float, ...]
    estimates: tuple[EstimateCI, ...]
    domain_volume: float
    process_id: str = ""
    domain_id: str = ""

    def __post_init__(self):
        t = np.asarray(self.times)
        if len(t) != len(self.estimates):
            raise PreconditionError("times and estimates length mismatch")
        if np.any(np.diff(t) <= 0):
            raise PreconditionError("times must be strictly increasing")

    def means(self) -> np.ndarray:
        return np.array([e.mean for e in self.estimates])

    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for e in self.estimates])


def survive_one_path(spec: ProcessSpec, domain: Domain, t: float, rng: np.random.Generator) -> bool:
    """Simulate one path from a uniform start; True iff it stays in the domain up to t."""
    if t < 0:
        raise PreconditionError("time must be nonnegative")
    x = domain.sample_uniform(rng, 1)[0]
    n = int(rng.poisson(spec.rate * t))
    if n == 0:
        return True
    jumps = spec.jump.sample(rng, n)
    positions = x + np.cumsum(jumps, axis=0)
    return bool(domain.contains(positions).all())


def _simulate_block(spec: ProcessSpec, domain: Domain, times: np.ndarray, rng, count: int):
    """Survival counts per time threshold for one block of reused paths."""
    horizon = float(times[-1])
    x = domain.sample_uniform(rng, count)
    n_jumps = rng.poisson(spec.rate * horizon, count)
    k_max = int(n_jumps.max(initial=0))
    if k_max == 0:
        return np.full(len(times), count, dtype=np.int64)
    d = domain.dimension
    jumps = spec.jump.sample(rng, count * k_max).reshape(count, k_max, d)
    live = np.arange(k_max)[None, :] < n_jumps[:, None]
    jumps[~live] = 0.0
    positions = x[:, None, :] + np.cumsum(jumps, axis=1)
    inside = domain.contains(positions.reshape(-1, d)).reshape(count, k_max) | ~live
    exited = ~inside
    has_exit = exited.any(axis=1)
    first_exit = np.where(has_exit, exited.argmax(axis=1), k_max)
    # arrival times: unordered uniforms on [0, horizon]; sorting yields the
    # ordered arrivals given the jump count
    arrivals = rng.random((count, k_max)) * horizon
    arrivals[~live] = np.inf
    arrivals.sort(axis=1)
    exit_time = np.where(
        has_exit, arrivals[np.arange(count), np.minimum(first_exit, k_max - 1)], np.inf
    )
    return (exit_time[:, None] > times[None, :]).sum(axis=0).astype(np.int64)


def estimate_Q(
    spec: ProcessSpec,
    domain: Domain,
    times,
    n_paths: int,
    seed,
    workers: int = 1,
    process_id: str = "",
    domain_id: str = "",
) -> ShcCurve:
    """Heat content estimates on a time grid from ``n_paths`` reused paths.

    Each path is simulated once to the largest time; its exit time is then
    compared against every threshold. Shared paths make the estimates
    exactly nonincreasing in t. Mean and binomial standard error are scaled
    by the domain volume; t = 0 yields the volume exactly with zero error.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise PreconditionError("times must be a nonempty 1-d sequence")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise PreconditionError("times must be nonnegative and strictly increasing")
    if n_paths < 100:
        raise PreconditionError("at least 100 paths are required")
    if spec.dimension != domain.dimension:
        raise PreconditionError("process and domain dimension differ")
    vol = domain.volume()
    root = as_seed_sequence(seed)
    counts = sum(map_blocks(lambda rng, c: _simulate_block(spec, domain, t, rng, c),
                            n_paths, root, workers=workers))
    p = counts / n_paths
    stderr = vol * np.sqrt(p * (1.0 - p) / n_paths)
    seed_tag = int(root.entropy if isinstance(root.entropy, (int, np.integer)) else 0)
    estimates = tuple(
        EstimateCI(vol * pi, float(si), n_paths, seed_tag) for pi, si in zip(p, stderr)
    )
    return ShcCurve(tuple(t), estimates, vol, process_id, domain_id)


def _chain_survival_counts(domain, jump, n, rng, count):
    """Number of chains (uniform start) whose first k positions stay inside, k = 1..n."""
    d = domain.dimension
    pos = domain.sample_uniform(rng, count)
    alive = np.ones(count, dtype=bool)
    out = np.zeros(n, dtype=np.int64)
    idx = np.arange(count)
    for k in range(n):
        if not alive.any():
            break
        cur = idx[alive]
        step = jump.sample(rng, len(cur))
        nxt = pos[cur] + step
        ok = domain.contains(nxt)
        pos[cur[ok]] = nxt[ok]
        alive[cur[~ok]] = False
        out[k] = int(alive.sum())
    return out


def stay_integral(domain: Domain, jump, n: int, quad: QuadratureSpec, workers: int = 1) -> ValueWithError:
    """Integral over starting points of the n-step stay probability.

    Monte Carlo over jump chains started uniformly in the domain: the
    fraction of chains whose first n positions all stay inside, scaled by
    the volume. n = 0 returns the volume exactly.
    """
    if n < 0:
        raise PreconditionError("n must be nonnegative")
    if quad.method != "mc":
        raise PreconditionError("stay integrals are Monte Carlo estimates; use an mc quadrature")
    vol = domain.volume()
    if n == 0:
        return ValueWithError(vol, 0.0)
    total = quad.resolution
    parts = map_blocks(
        lambda rng, c: _chain_survival_counts(domain, jump, n, rng, c),
        total,
        as_seed_sequence(quad.seed),
        workers=workers,
    )
    survived = int(sum(int(p[n - 1]) for p in parts))
    p_hat = survived / total
    return ValueWithError(vol * p_hat, vol * math.sqrt(p_hat * (1.0 - p_hat) / total))


def poisson_pmf_truncated(mean: float, tail_tol: float) -> np.ndarray:
    """pmf[0..N] of a Poisson law with tail mass beyond N below tail_tol.

    The truncation point comes from direct summation of the pmf, not an
    approximation, so ``1 - pmf.sum() < tail_tol`` exactly.
    """
    if mean < 0:
        raise PreconditionError("mean must be nonnegative")
    terms = [math.exp(-mean)]
    total = terms[0]
    while total < 1.0 - tail_tol:
        n = len(terms)
        if n > SERIES_TERM_CAP:
            raise PreconditionError(
                f"series truncation exceeds {SERIES_TERM_CAP} terms; "
                "rate * t is too large for series mode"
            )
        terms.append(terms[-1] * mean / n)
        total += terms[-1]
    return np.array(terms)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    error: float
    mc_stderr: float
    tail_bound: float
    n_terms: int


def q_series(
    spec: ProcessSpec,
    domain: Domain,
    t: float,
    tail_tol: float,
    quad: QuadratureSpec,
    workers: int = 1,
) -> SeriesResult:
    """Heat content at time t by the truncated jump-count series.

    One set of chains of the truncated length is shared across all terms:
    per chain the weighted term sum telescopes to the cumulative jump-count
    probability at the chain's survival depth, which gives an exact sample
    standard error for the whole truncated sum. The reported error adds the
    certified tail bound ``volume * tail_tol``.
    """
    if not (0.0 < tail_tol <= 1e-3):
        raise PreconditionError("tail_tol must lie in (0, 1e-3]")
    if t < 0:
        raise PreconditionError("time must be nonnegative")
    if quad.method != "mc":
        raise PreconditionError("series coefficients are Monte Carlo estimates; use an mc quadrature")
    vol = domain.volume()
    pmf = poisson_pmf_truncated(spec.rate * t, tail_tol)
    n_terms = len(pmf)
    cum = np.cumsum(pmf)
    depth = n_terms - 1
    if depth == 0:
        return SeriesResult(vol, vol * tail_tol, 0.0, vol * tail_tol, 1)

    def one_block(rng, count):
        counts = _chain_survival_counts(domain, spec.jump, depth, rng, count)
        # survivors-by-depth -> number of chains with survival depth exactly k
        alive = np.concatenate([[count], counts])
        exact = -np.diff(np.concatenate([alive, [0]]))  # depth 0..depth
        g_sum = float((exact * cum).sum())
        g_sq = float((exact * cum**2).sum())
        return g_sum, g_sq, count

    total = quad.resolution
    parts = map_blocks(one_block, total, as_seed_sequence(quad.seed), workers=workers)
    g_sum = sum(p[0] for p in parts)
    g_sq = sum(p[1] for p in parts)
    mean = g_sum / total
    var = max(g_sq / total - mean * mean, 0.0)
    stderr = vol * math.sqrt(var / total)
    return SeriesResult(vol * mean, stderr + vol * tail_tol, stderr, vol * tail_tol, n_terms)


@dataclass(frozen=True)
class ShcFit:
    lambda1: float
    stderr: float
    intercept: float
    n_used: int
    times_used: tuple[float, ...]
    residuals: tuple[float, ...]
    max_rel_ci: float


def lambda_from_shc(curve: ShcCurve, max_rel_ci: float = 0.2) -> ShcFit:
    """Decay rate of the heat content from weighted least squares.

    Fits -log(mean / volume) against t with an intercept (the curve is a
    positive mixture of exponentials whose local slope approaches the
    asymptotic rate from above; a forced zero intercept would bias it). Points
    need a positive mean and a 95% confidence interval narrower than
    ``max_rel_ci`` of the mean; at least 4 must survive the filter.
    """
    t = np.asarray(curve.times)
    means = curve.means()
    stderrs = curve.stderrs()
    vol = curve.domain_volume
    usable = (means > 0) & (2 * 1.96 * stderrs < max_rel_ci * np.maximum(means, 1e-300))
    if int(usable.sum()) < 4:
        raise PreconditionError(
            f"only {int(usable.sum())} usable points after the {max_rel_ci:.0%} CI filter; need 4"
        )
    tt = t[usable]
    y = -np.log(means[usable] / vol)
    ysig = stderrs[usable] / means[usable]
    w = 1.0 / np.maximum(ysig, 1e-12) ** 2
    design = np.stack([np.ones_like(tt), tt], axis=1)
    ata = design.T @ (design * w[:, None])
    aty = design.T @ (w * y)
    cov = np.linalg.inv(ata)
    coef = cov @ aty
    fitted = design @ coef
    slope_se = math.sqrt(max(cov[1, 1], 0.0))
    return ShcFit(
        lambda1=float(coef[1]),
        stderr=slope_se,
        intercept=float(coef[0]),
        n_used=int(usable.sum()),
        times_used=tuple(tt),
        residuals=tuple(float(r) for r in (y - fitted)),
        max_rel_ci=max_rel_ci,
    )

"""Sublevel-volume and curvature estimation.

The empirical CDF of objective values under uniform sampling estimates the
normalised sublevel-set volume; its generalised inverse turns a volume target
n^-alpha into a cutoff value.  Both i.i.d. uniform samples and the
near-uniform high-variance iterates of a run are accepted as sample sources,
tagged by provenance.

Curvature estimators recover eigenvalue bounds of the Hessian near the
minimum: the divided-difference Lipschitz bound for the largest eigenvalue,
and the volume-based lower bound for the smallest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampler import RngStream
from .schedule import CurvatureBounds, critical_constants

__all__ = [
    "EmpiricalCdf",
    "CurvatureEstimate",
    "EstimationError",
    "PartialResultError",
    "build_cdf_iid",
    "build_cdf_online",
    "pooled_online_cdf",
    "inverse_cdf",
    "cutoff_sequence",
    "estimate_bounds",
    "estimate_b1b2_iterative",
]

_MIN_PAIR_DISTANCE = 1e-12


class EstimationError(ValueError):
    pass


class PartialResultError(EstimationError):
    """Raised when a sample stream runs dry mid-round; carries finished rounds."""

    def __init__(self, message, rounds):
        super().__init__(message)
        self.rounds = rounds


@dataclass(frozen=True)
class EmpiricalCdf:
    """Sorted objective-value samples with step-function CDF queries."""

    samples: np.ndarray
    provenance: str = "iid_uniform"

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        if s.size < 1:
            raise EstimationError("empirical CDF requires at least one sample")
        if not np.all(np.isfinite(s)):
            raise EstimationError("empirical CDF samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.size

    def cdf(self, f):
        """Fraction of samples <= f (right-continuous step function)."""
        return np.searchsorted(self.samples, f, side="right") / self.n

    def inverse(self, level: float) -> float:
        """Smallest sample v with CDF(v) >= level, for level in (0, 1]."""
        if not 0.0 < level <= 1.0:
            raise ValueError(f"level must lie in (0, 1], got {level}")
        k = max(0, math.ceil(level * self.n) - 1)
        return float(self.samples[k])


def build_cdf_iid(objective, box, n: int, rng: RngStream, chunk: int = 262144) -> EmpiricalCdf:
    """CDF of objective values at n uniform draws from the box."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    values = np.empty(n)
    filled = 0
    gen = rng.generator
    width = box.width
    while filled < n:
        m = min(chunk, n - filled)
        xs = box.low + gen.random((m, box.dim)) * width
        if hasattr(objective, "value_many"):
            values[filled:filled + m] = objective.value_many(xs)
        else:
            values[filled:filled + m] = [objective.value(x) for x in xs]
        filled += m
    return EmpiricalCdf(values, provenance="iid_uniform")


def build_cdf_online(trace) -> EmpiricalCdf:
    """CDF from a run's high-variance iterates (successors of above-cutoff steps)."""
    values = trace.high_variance_values()
    if values.size == 0:
        raise EstimationError("trace contains no high-variance iterates")
    return EmpiricalCdf(values, provenance="high_variance_iterates")


def pooled_online_cdf(traces) -> EmpiricalCdf:
    """CDF pooled over the high-variance iterates of several runs."""
    parts = [t.high_variance_values() for t in traces]
    values = np.concatenate(parts) if parts else np.empty(0)
    if values.size == 0:
        raise EstimationError("no high-variance iterates in any trace")
    return EmpiricalCdf(values, provenance="high_variance_iterates")


def inverse_cdf(cdf: EmpiricalCdf, level: float) -> float:
    return cdf.inverse(level)


def cutoff_sequence(cdf: EmpiricalCdf, alpha: float, n_max: int) -> np.ndarray:
    """Cutoffs f_n = inverse-CDF(n^-alpha) for n = 1..n_max, clamped non-increasing."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ns = np.arange(1, n_max + 1, dtype=float)
    levels = ns ** (-alpha)
    ks = np.maximum(0, np.ceil(levels * cdf.n).astype(int) - 1)
    return np.minimum.accumulate(cdf.samples[ks])


@dataclass(frozen=True)
class CurvatureEstimate:
    """Eigenvalue-bound estimates: b1 (lower), b2 (upper), with provenance scalars."""

    b1: float
    b2: float
    f_star: float
    diameter: float = math.nan
    round_index: int = 0
    alpha: float = math.nan

    def __post_init__(self):
        if self.b1 > self.b2 and math.isfinite(self.b2):
            # the crude lower bound may overshoot; keep both, callers decide
            pass


def _alpha_from_bounds(b1: float, b2: float) -> float:
    """Admissible volume-decay exponent alpha* at the maximising step 1/b2."""
    if not (b2 > 0 and b1 > 0):
        return math.nan
    cb = CurvatureBounds(min(b1, b2), b2)
    _, _, alpha_star = critical_constants(cb, 1.0 / b2)
    return alpha_star


def _lipschitz_bound(points: np.ndarray, gradients: np.ndarray) -> float:
    """Max divided difference |G(x_{k+1}) - G(x_k)| / |x_{k+1} - x_k| over
    consecutive pairs; near-coincident pairs are skipped."""
    dx = np.linalg.norm(np.diff(points, axis=0), axis=1)
    dg = np.linalg.norm(np.diff(gradients, axis=0), axis=1)
    ok = dx > _MIN_PAIR_DISTANCE
    if not np.any(ok):
        raise EstimationError("all consecutive pairs coincide; no divided differences")
    return float(np.max(dg[ok] / dx[ok]))


def estimate_bounds(points, gradients, level_sets, c0: float, d: int,
                    values=None, f_star: float | None = None) -> CurvatureEstimate:
    """Crude curvature bounds from consecutive iterates and sublevel volumes.

    b2 is the largest divided difference of the gradient along the iterate
    sequence.  For each (g, volume) in ``level_sets``,
    E = b2^(1-d) * volume^-2 * (2 (g - f*) / c0^2)^d bounds the smallest
    eigenvalue from below; the minimum over levels is returned as b1.
    """
    points = np.asarray(points, dtype=float)
    gradients = np.asarray(gradients, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if gradients.ndim == 1:
        gradients = gradients[:, None]
    if len(points) < 2:
        raise EstimationError("need at least two consecutive iterates")
    b2 = _lipschitz_bound(points, gradients)

    if f_star is None:
        if values is None:
            raise EstimationError("f_star or the objective values must be supplied")
        f_star = float(np.min(values))

    b1 = math.inf
    for g, volume in level_sets:
        if g <= f_star or volume <= 0:
            continue
        e = b2 ** (1 - d) * volume ** (-2.0) * (2.0 * (g - f_star) / c0**2) ** d
        b1 = min(b1, e)
    if not math.isfinite(b1):
        raise EstimationError("no usable level set (need g > f_star and volume > 0)")
    return CurvatureEstimate(b1=b1, b2=b2, f_star=f_star,
                             alpha=_alpha_from_bounds(min(b1, b2), b2))


def estimate_b1b2_iterative(samples, objective, m: int, rounds: int,
                            levels=None, level_ratio: float = 0.5):
    """Round-based curvature estimation from a uniform sample stream.

    Round l filters the stream for m*l samples below the round's threshold
    g_{1+k_l} (k_l = m*l*(l-1)/2); consecutive accepted samples update the
    Lipschitz bound b2, the running minimum value, and the diameter estimate
    D, and the round closes with b1 = 8 |g - f*_hat| / D.

    ``levels`` may be an explicit decreasing sequence (indexed by the paper's
    g_{1+k_l} rule); by default each round interpolates geometrically between
    the median of the values seen so far and the running minimum.

    Raises :class:`PartialResultError` with the finished rounds if the stream
    is exhausted mid-round.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    stream = iter(samples)
    results = []
    f_star_hat = math.inf
    seen_values = []

    def next_sample():
        y = np.asarray(next(stream), dtype=float)
        fy = objective.value(y)
        seen_values.append(fy)
        return y, fy

    try:
        first, f_first = next_sample()
    except StopIteration:
        raise PartialResultError("sample stream empty", results) from None
    f_star_hat = f_first

    for l in range(1, rounds + 1):
        k_l = m * l * (l - 1) // 2
        if levels is not None:
            if k_l >= len(levels):
                raise PartialResultError(
                    f"level sequence exhausted at round {l} (needs index {k_l})", results)
            g = float(levels[k_l])
        else:
            med = float(np.median(seen_values))
            g = f_star_hat + (med - f_star_hat) * level_ratio**l
        b2_l = 0.0
        d_l = 0.0
        prev = None
        accepted = 0
        while accepted < m * l:
            try:
                y, fy = next_sample()
            except StopIteration:
                raise PartialResultError(
                    f"sample stream exhausted in round {l} "
                    f"({accepted}/{m * l} accepted)", results) from None
            if fy >= g:
                continue
            accepted += 1
            f_star_hat = min(f_star_hat, fy)
            if prev is not None:
                dist = float(np.linalg.norm(y - prev))
                if dist > _MIN_PAIR_DISTANCE:
                    d_l = max(d_l, dist)
                    gdist = float(np.linalg.norm(objective.gradient(y) - objective.gradient(prev)))
                    b2_l = max(b2_l, gdist / dist)
            prev = y
        if d_l <= 0 or b2_l <= 0:
            raise PartialResultError(
                f"round {l} produced no usable sample pair", results)
        b1_l = 8.0 * abs(g - f_star_hat) / d_l
        results.append(CurvatureEstimate(
            b1=b1_l, b2=b2_l, f_star=f_star_hat, diameter=d_l, round_index=l,
            alpha=_alpha_from_bounds(min(b1_l, b2_l), b2_l)))
    return results

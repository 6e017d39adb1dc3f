"""Iteration schedules: step size, low/high noise levels, and cutoff values.

Four families are provided.

* ``PracticalSchedule`` — power-decay low noise with a constant high noise and
  a running-quantile cutoff over the observed objective values.
* ``ClassicalSchedule`` — state-independent simulated-annealing baseline.
* ``TheoreticalSchedule`` — volume-driven noise (the sublevel-set volume decays
  as n^-alpha) with a precomputed cutoff table.
* ``LogarithmicSchedule`` — the slower all-logarithmic fallback family.

A schedule object is immutable configuration; ``driver()`` returns the
single-owner per-run state that the solver consults once per step.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "CurvatureBounds",
    "PracticalSchedule",
    "ClassicalSchedule",
    "TheoreticalSchedule",
    "LogarithmicSchedule",
    "QuantileTracker",
    "unit_ball_radius",
    "critical_constants",
    "theoretical_sigma",
    "practical_sigma",
    "update_cutoff",
    "make_schedule",
]


def unit_ball_radius(d: int) -> float:
    """Radius of the d-dimensional ball of unit volume."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return math.exp(math.lgamma(d / 2.0 + 1.0) / d) / math.sqrt(math.pi)


@dataclass(frozen=True)
class CurvatureBounds:
    """Eigenvalue bounds of the Hessian on the convex neighbourhood: 0 < b1 <= b2."""

    b1: float
    b2: float

    def __post_init__(self):
        if not (0 < self.b1 <= self.b2 < math.inf):
            raise ValueError(f"need 0 < b1 <= b2 < inf, got b1={self.b1}, b2={self.b2}")


def critical_constants(cb: CurvatureBounds, eta: float) -> tuple[float, float, float]:
    """(gamma*, c*, alpha*) for a step size eta in (0, 2/b2).

    gamma* = 1 / (2 eta b2 - eta^2 b2^2), c* = (b1/b2)^{3/2} / (4 gamma*),
    alpha* = (c*)^2 / 2.  alpha* is maximised at eta = 1/b2.
    """
    if not 0 < eta < 2.0 / cb.b2:
        raise ValueError(f"step size must lie in (0, 2/b2) = (0, {2.0 / cb.b2}), got {eta}")
    gamma_star = 1.0 / (2.0 * eta * cb.b2 - eta**2 * cb.b2**2)
    c_star = (cb.b1 / cb.b2) ** 1.5 / (4.0 * gamma_star)
    return gamma_star, c_star, c_star**2 / 2.0


class QuantileTracker:
    """Running lower-interpolation quantile of a growing sample.

    Two-heap order statistics: the low heap holds the smallest
    floor(q*(count-1)) + 1 values, so its max is the sorted element at index
    floor(q*(count-1)).  O(log n) insert, O(1) query.
    """

    __slots__ = ("q", "_lo", "_hi")

    def __init__(self, q: float):
        if not 0.0 < q < 1.0:
            raise ValueError(f"quantile must lie in (0, 1), got {q}")
        self.q = q
        self._lo: list[float] = []  # max-heap via negation
        self._hi: list[float] = []  # min-heap

    def __len__(self):
        return len(self._lo) + len(self._hi)

    def push(self, v: float) -> None:
        if self._lo and v <= -self._lo[0]:
            heapq.heappush(self._lo, -v)
        else:
            heapq.heappush(self._hi, v)
        target = int(self.q * (len(self) - 1)) + 1
        while len(self._lo) > target:
            heapq.heappush(self._hi, -heapq.heappop(self._lo))
        while len(self._lo) < target:
            heapq.heappush(self._lo, -heapq.heappop(self._hi))

    def value(self) -> float:
        if not self._lo:
            raise ValueError("quantile of empty history")
        return -self._lo[0]


def update_cutoff(history, q: float, previous_cutoff: float | None = None) -> float:
    """Quantile-of-history cutoff, clamped so successive cutoffs never increase.

    Lower-interpolation convention: the sorted element at index
    floor(q*(len-1)).  With ``previous_cutoff`` given, returns
    min(previous_cutoff, quantile).
    """
    values = np.asarray(history, dtype=float)
    if values.size == 0:
        raise ValueError("cutoff update requires a non-empty history")
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {q}")
    quantile = float(np.sort(values)[int(q * (values.size - 1))])
    if previous_cutoff is None:
        return quantile
    return min(previous_cutoff, quantile)


class StepScalars(NamedTuple):
    eta: float
    sigma: float
    cutoff: float
    low: bool


@dataclass(frozen=True)
class PracticalSchedule:
    """Quantile-cutoff schedule: sigma0 * n^-alpha below the cutoff, sigma_high above.

    The cutoff is the running q-quantile of all objective values seen so far.
    ``clamp_cutoff`` forces the cutoff sequence non-increasing; the default is
    off because clamping freezes the cutoff at the noise floor of the first
    converged stretch and permanently strands any later escape (see README).
    """

    sigma0: float = 1.0
    sigma_high: float = 20.0
    alpha: float = 1.0
    quantile: float = 0.5
    eta: float = 1.0
    clamp_cutoff: bool = False

    def __post_init__(self):
        if self.sigma0 <= 0 or self.sigma_high <= 0:
            raise ValueError("sigma0 and sigma_high must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    def sigma_low(self, n: int) -> float:
        return self.sigma0 * max(n, 1) ** (-self.alpha)

    def driver(self) -> "_PracticalDriver":
        return _PracticalDriver(self)


def practical_sigma(sched: PracticalSchedule, n: int, f_value: float, cutoff: float) -> float:
    """Noise level at step n: sigma0 * n^-alpha when f_value < cutoff, else sigma_high.

    The boundary f_value == cutoff belongs to the high regime.
    """
    if n < 1:
        raise ValueError(f"step index must be >= 1, got {n}")
    if f_value < cutoff:
        return sched.sigma0 * n ** (-sched.alpha)
    return sched.sigma_high


class _PracticalDriver:
    __slots__ = ("sched", "_tracker", "_cutoff")

    def __init__(self, sched: PracticalSchedule):
        self.sched = sched
        self._tracker = QuantileTracker(sched.quantile)
        self._cutoff = math.inf

    def step(self, n: int, f_value: float) -> StepScalars:
        self._tracker.push(f_value)
        quantile = self._tracker.value()
        if self.sched.clamp_cutoff:
            self._cutoff = min(self._cutoff, quantile)
        else:
            self._cutoff = quantile
        low = f_value < self._cutoff
        sigma = practical_sigma(self.sched, max(n, 1), f_value, self._cutoff)
        return StepScalars(self.sched.eta, sigma, self._cutoff, low)


@dataclass(frozen=True)
class ClassicalSchedule:
    """State-independent noise: sigma0/sqrt(n) or the critical sigma0/sqrt(log n)."""

    sigma0: float = 1.0
    decay: str = "inverse_sqrt_n"
    eta: float = 1.0

    _DECAYS = ("inverse_sqrt_n", "inverse_sqrt_log_n")

    def __post_init__(self):
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be non-negative")
        if self.decay not in self._DECAYS:
            raise ValueError(f"decay must be one of {self._DECAYS}, got {self.decay!r}")
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    def sigma(self, n: int) -> float:
        if self.decay == "inverse_sqrt_n":
            return self.sigma0 / math.sqrt(max(n, 1))
        return self.sigma0 / math.sqrt(math.log(max(n, 2)))

    def driver(self) -> "_ClassicalDriver":
        return _ClassicalDriver(self)


class _ClassicalDriver:
    __slots__ = ("sched",)

    def __init__(self, sched: ClassicalSchedule):
        self.sched = sched

    def step(self, n: int, f_value: float) -> StepScalars:
        return StepScalars(self.sched.eta, self.sched.sigma(n), math.inf, True)


@dataclass(frozen=True)
class TheoreticalSchedule:
    """Volume-schedule noise with a precomputed, non-increasing cutoff table.

    The sublevel volume follows |Omega_n| = omega0 * (n-1)^-alpha for n >= 2
    (|Omega_1| = |Omega_0|) and the low noise is
    c0 * |Omega_n|^{1/d} / sqrt(log n).  ``cutoffs[k]`` is the cutoff for step
    n = k + 1; steps beyond the table reuse its last entry.
    """

    alpha: float
    omega0_volume: float
    dim: int
    eta: float = 1.0
    curvature: CurvatureBounds | None = None
    cutoffs: np.ndarray | None = None
    sigma_high: float | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.curvature is not None:
            _, _, alpha_star = critical_constants(self.curvature, self.eta)
            if self.alpha >= alpha_star:
                raise ValueError(
                    f"alpha={self.alpha} violates alpha < alpha* = {alpha_star} for the "
                    "given curvature bounds"
                )
        if self.omega0_volume <= 0:
            raise ValueError("omega0_volume must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.cutoffs is not None:
            object.__setattr__(self, "cutoffs", np.asarray(self.cutoffs, dtype=float))

    def omega_volume(self, n: int) -> float:
        if n <= 1:
            return self.omega0_volume
        return self.omega0_volume * (n - 1) ** (-self.alpha)

    def cutoff(self, n: int) -> float:
        if self.cutoffs is None or len(self.cutoffs) == 0:
            return math.inf
        return float(self.cutoffs[min(max(n, 1), len(self.cutoffs)) - 1])

    def driver(self) -> "_TheoreticalDriver":
        return _TheoreticalDriver(self)


def theoretical_sigma(sched: TheoreticalSchedule, n: int) -> float:
    """Low-regime noise c0 * |Omega_n|^{1/d} / sqrt(log n); defined for n >= 2."""
    if n < 2:
        raise ValueError(f"theoretical sigma requires n >= 2, got {n}")
    c0 = unit_ball_radius(sched.dim)
    return c0 * sched.omega_volume(n) ** (1.0 / sched.dim) / math.sqrt(math.log(n))


class _TheoreticalDriver:
    __slots__ = ("sched",)

    def __init__(self, sched: TheoreticalSchedule):
        self.sched = sched

    def step(self, n: int, f_value: float) -> StepScalars:
        cutoff = self.sched.cutoff(n)
        low = f_value <= cutoff
        sigma = theoretical_sigma(self.sched, max(n, 2))
        if not low and self.sched.sigma_high is not None:
            sigma = self.sched.sigma_high
        return StepScalars(self.sched.eta, sigma, cutoff, low)


@dataclass(frozen=True)
class LogarithmicSchedule:
    """All-logarithmic fallback: eta_n ~ 1/log(log n), |Omega_n| ~ 1/log n.

    Asymptotic orders only; the leading constants default to 1 and are
    configurable.  Positive and non-increasing from n = 3 on.
    """

    dim: int
    eta_scale: float = 1.0
    omega_scale: float = 1.0
    cutoffs: np.ndarray | None = None
    sigma_high: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.eta_scale <= 0 or self.omega_scale <= 0:
            raise ValueError("scales must be positive")
        if self.cutoffs is not None:
            object.__setattr__(self, "cutoffs", np.asarray(self.cutoffs, dtype=float))

    def eta(self, n: int) -> float:
        return self.eta_scale / math.log(math.log(max(n, 3)))

    def omega_volume(self, n: int) -> float:
        return self.omega_scale / math.log(max(n, 3))

    def sigma(self, n: int) -> float:
        n = max(n, 3)
        c0 = unit_ball_radius(self.dim)
        return c0 * self.omega_volume(n) ** (1.0 / self.dim) / math.sqrt(math.log(n))

    def cutoff(self, n: int) -> float:
        if self.cutoffs is None or len(self.cutoffs) == 0:
            return math.inf
        return float(self.cutoffs[min(max(n, 1), len(self.cutoffs)) - 1])

    def driver(self) -> "_LogarithmicDriver":
        return _LogarithmicDriver(self)


class _LogarithmicDriver:
    __slots__ = ("sched",)

    def __init__(self, sched: LogarithmicSchedule):
        self.sched = sched

    def step(self, n: int, f_value: float) -> StepScalars:
        cutoff = self.sched.cutoff(n)
        low = f_value <= cutoff
        sigma = self.sched.sigma(n)
        if not low and self.sched.sigma_high is not None:
            sigma = self.sched.sigma_high
        return StepScalars(self.sched.eta(n), sigma, cutoff, low)


def make_schedule(spec: dict):
    """Build a schedule from config keys; see each family for its fields."""
    kind = spec.get("kind")
    if kind == "practical":
        return PracticalSchedule(
            sigma0=float(spec.get("sigma0", 1.0)),
            sigma_high=float(spec.get("sigma_high", 20.0)),
            alpha=float(spec.get("alpha", 1.0)),
            quantile=float(spec.get("quantile", 0.5)),
            eta=float(spec.get("eta", 1.0)),
            clamp_cutoff=bool(spec.get("clamp_cutoff", False)),
        )
    if kind == "classical":
        return ClassicalSchedule(
            sigma0=float(spec.get("sigma0", 1.0)),
            decay=spec.get("classical_decay", "inverse_sqrt_n"),
            eta=float(spec.get("eta", 1.0)),
        )
    if kind == "theoretical":
        curvature = None
        if "b1" in spec or "b2" in spec:
            curvature = CurvatureBounds(float(spec["b1"]), float(spec["b2"]))
        return TheoreticalSchedule(
            alpha=float(spec.get("alpha", 0.01)),
            omega0_volume=float(spec["omega0_volume"]),
            dim=int(spec["dim"]),
            eta=float(spec.get("eta", 1.0)),
            curvature=curvature,
            cutoffs=spec.get("cutoffs"),
            sigma_high=float(spec["sigma_high"]) if "sigma_high" in spec else None,
        )
    if kind == "logarithmic":
        return LogarithmicSchedule(
            dim=int(spec["dim"]),
            eta_scale=float(spec.get("eta_scale", 1.0)),
            omega_scale=float(spec.get("omega_scale", 1.0)),
            cutoffs=spec.get("cutoffs"),
            sigma_high=float(spec["sigma_high"]) if "sigma_high" in spec else None,
        )
    raise ValueError(f"unknown schedule kind: {kind!r}")

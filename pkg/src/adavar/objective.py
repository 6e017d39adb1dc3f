"""Objective functions: the Rastrigin variant, its stochastic sampled form,
and supporting pieces (search box, finite-difference gradient oracle).

Objectives are pure: deterministic ones expose ``value``/``gradient``,
stochastic ones draw noise only from a caller-supplied generator so every
draw is attributable to a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoxDomain",
    "Rastrigin",
    "StochasticRastrigin",
    "Quadratic",
    "as_point",
    "finite_diff_grad",
    "make_objective",
]


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Validate and return x as a finite 1-D float64 vector."""
    p = x if type(x) is np.ndarray and x.dtype == np.float64 else np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError(f"point must be a 1-D vector of length >= 1, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise ValueError("point has non-finite entries")
    if dim is not None and p.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {p.size}")
    return p


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned search box with strictly positive width on every axis."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = as_point(self.low)
        high = as_point(self.high, dim=low.size)
        if not np.all(low < high):
            raise ValueError("box requires low[i] < high[i] on every axis")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> "BoxDomain":
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self) -> int:
        return self.low.size

    @property
    def width(self) -> np.ndarray:
        return self.high - self.low

    def volume(self) -> float:
        return float(np.prod(self.width))

    def contains(self, x) -> bool:
        x = as_point(x, dim=self.dim)
        return bool(np.all(x >= self.low) and np.all(x <= self.high))


@dataclass(frozen=True)
class Rastrigin:
    """Rastrigin-variant objective a*(d - sum cos(b*x_i)) + c*sum x_i^2.

    For c > 0 the unique global minimizer is the origin with value 0; the
    quadratic term breaks the degeneracy of the plain cosine landscape.
    """

    a: float = 1.0
    b: float = 1.0
    c: float = 0.05
    dim: int = 2

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")
        if self.c < 0:
            raise ValueError("c must be non-negative")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    @property
    def minimizer(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def minimum(self) -> float:
        return 0.0

    def value(self, x) -> float:
        x = as_point(x, dim=self.dim)
        return float(self.a * (self.dim - np.cos(self.b * x).sum()) + self.c * (x * x).sum())

    def gradient(self, x) -> np.ndarray:
        x = as_point(x, dim=self.dim)
        return self.a * self.b * np.sin(self.b * x) + 2.0 * self.c * x

    def value_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised evaluation over rows of an (n, dim) array."""
        xs = np.asarray(xs, dtype=float)
        return self.a * (self.dim - np.cos(self.b * xs).sum(axis=1)) + self.c * (xs * xs).sum(axis=1)


@dataclass(frozen=True)
class StochasticRastrigin:
    """Sampled objective J2(x; z) = J1(x) + z1*sum sin(10 x_i) + z2*sum cos(10 x_i).

    z1, z2 are drawn fresh per sample from N(0, noise_std^2); the expectation
    over the noise recovers the deterministic base objective.
    """

    base: Rastrigin = field(default_factory=Rastrigin)
    noise_std: float = math.sqrt(0.5)

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def minimizer(self) -> np.ndarray:
        return self.base.minimizer

    @property
    def minimum(self) -> float:
        return self.base.minimum

    def expectation(self) -> Rastrigin:
        return self.base

    def _from_noise(self, x: np.ndarray, z: np.ndarray):
        """Values and gradients for noise rows z of shape (m, 2)."""
        s10 = np.sin(10.0 * x)
        c10 = np.cos(10.0 * x)
        values = self.base.value(x) + z[:, 0] * s10.sum() + z[:, 1] * c10.sum()
        grads = (
            self.base.gradient(x)[None, :]
            + 10.0 * z[:, 0, None] * c10[None, :]
            - 10.0 * z[:, 1, None] * s10[None, :]
        )
        return values, grads

    def sample(self, x, rng) -> tuple[float, np.ndarray]:
        """One draw of (J2, grad J2) with fresh noise from rng."""
        x = as_point(x, dim=self.dim)
        z = rng.generator.standard_normal((1, 2)) * self.noise_std
        values, grads = self._from_noise(x, z)
        return float(values[0]), grads[0]

    def batch(self, x, m: int, rng) -> tuple[float, np.ndarray]:
        """Average of m independent samples of (J2, grad J2)."""
        if m < 1:
            raise ValueError(f"batch size must be >= 1, got {m}")
        x = as_point(x, dim=self.dim)
        z = rng.generator.standard_normal((m, 2)) * self.noise_std
        values, grads = self._from_noise(x, z)
        return float(values.mean()), grads.mean(axis=0)


@dataclass(frozen=True)
class Quadratic:
    """f(x) = 0.5 * sum h_i x_i^2 with Hessian diag(h); exact oracle for the
    curvature estimators and the geometric-contraction solver check."""

    hessian_diag: np.ndarray

    def __post_init__(self):
        h = as_point(self.hessian_diag)
        if np.any(h <= 0):
            raise ValueError("hessian diagonal must be positive")
        object.__setattr__(self, "hessian_diag", h)

    @property
    def dim(self) -> int:
        return self.hessian_diag.size

    @property
    def minimizer(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def minimum(self) -> float:
        return 0.0

    def value(self, x) -> float:
        x = as_point(x, dim=self.dim)
        return float(0.5 * (self.hessian_diag * x * x).sum())

    def gradient(self, x) -> np.ndarray:
        x = as_point(x, dim=self.dim)
        return self.hessian_diag * x

    def value_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return 0.5 * (self.hessian_diag[None, :] * xs * xs).sum(axis=1)


def finite_diff_grad(f, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / 2h.

    Test oracle for analytic gradients; h = 1e-5 balances truncation against
    roundoff at double precision.
    """
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    x = as_point(x)
    value = f.value if hasattr(f, "value") else f
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (value(x + e) - value(x - e)) / (2.0 * h)
    return g


def make_objective(spec: dict):
    """Build an objective from config keys {name, a, b, c, dim, noise_std}."""
    name = spec.get("name")
    base = Rastrigin(
        a=float(spec.get("a", 1.0)),
        b=float(spec.get("b", 1.0)),
        c=float(spec.get("c", 0.05)),
        dim=int(spec.get("dim", 2)),
    )
    if name == "rastrigin":
        return base
    if name == "rastrigin_stochastic":
        std = spec.get("noise_std")
        if std is None:
            raise ValueError("rastrigin_stochastic requires noise_std")
        return StochasticRastrigin(base=base, noise_std=float(std))
    raise ValueError(f"unknown objective name: {name!r}")

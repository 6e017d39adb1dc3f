"""Single-trajectory solver for all algorithm variants.

Variants
--------
* ``restart``       — gradient step with low noise inside the cutoff sublevel
                      set, uniform redraw from the box outside.
* ``two_stage``     — gradient step with low noise below the cutoff, high
                      noise above; exits are pushed back by the boundary
                      policy.
* ``classical``     — state-independent noise (simulated-annealing baseline).
* ``batch``         — sampled objective; the batch-mean value plays the role
                      of f in the cutoff test, uniform redraw above it.
* ``gradient_free`` — pure diffusion with region-dependent step scale and
                      periodic wrap.

The trace records, for every iterate, the position, objective value, and the
noise level / cutoff / regime of the step that produced it (record 0 is the
seed point and carries no step metadata).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .objective import BoxDomain, as_point
from .sampler import RngStream, uniform_in_box
from .schedule import StepScalars

__all__ = [
    "REGIME_NAMES",
    "SolverConfig",
    "RunTrace",
    "run",
    "step_restart",
    "step_two_stage",
    "step_classical",
    "step_batch",
    "step_gradient_free",
    "reflect_into_box",
    "write_trace_csv",
    "read_trace_csv",
]

REGIME_INIT, REGIME_LOW, REGIME_HIGH, REGIME_RESTART = 0, 1, 2, 3
REGIME_NAMES = ("init", "low", "high", "restart")
_REGIME_CODES = {name: code for code, name in enumerate(REGIME_NAMES)}

_VARIANTS = ("restart", "two_stage", "classical", "batch", "gradient_free")
_BOUNDARIES = ("reflect", "clamp", "resample")
_BATCH_RULES = ("proposed", "classical_log")


@dataclass(frozen=True)
class SolverConfig:
    variant: str
    box: BoxDomain
    iterations: int
    objective: object = None
    schedule: object = None
    initial: object = "uniform"  # "uniform" or an explicit point
    boundary: str = "reflect"
    batch_rule: str = "proposed"
    region: Optional[BoxDomain] = None  # gradient_free low-variance region
    scale: Optional[float] = None       # gradient_free in-region step scale

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}, got {self.boundary!r}")
        if self.variant == "gradient_free":
            if self.region is None or self.scale is None:
                raise ValueError("gradient_free requires region and scale")
            if self.scale <= 0:
                raise ValueError("gradient_free scale must be positive")
        else:
            if self.objective is None or self.schedule is None:
                raise ValueError(f"variant {self.variant!r} requires objective and schedule")
            if getattr(self.objective, "dim") != self.box.dim:
                raise ValueError("objective dimension does not match the box")
        if self.variant == "batch":
            if self.batch_rule not in _BATCH_RULES:
                raise ValueError(f"batch_rule must be one of {_BATCH_RULES}")
            if not hasattr(self.objective, "batch"):
                raise ValueError("batch variant requires a sampled objective")
        if not isinstance(self.initial, str):
            p = as_point(self.initial, dim=self.box.dim)
            if not self.box.contains(p):
                raise ValueError("initial point lies outside the box")
            object.__setattr__(self, "initial", p)
        elif self.initial != "uniform":
            raise ValueError(f"initial must be 'uniform' or a point, got {self.initial!r}")


@dataclass
class RunTrace:
    """Column-oriented per-iteration records plus the best-so-far summary."""

    variant: str
    master_seed: int
    stream_index: int
    positions: np.ndarray      # (N+1, d)
    f_values: np.ndarray       # (N+1,)
    sigmas: np.ndarray         # (N+1,), nan at 0
    cutoffs: np.ndarray        # (N+1,), nan at 0
    regimes: np.ndarray        # (N+1,) uint8 codes into REGIME_NAMES
    best_f: np.ndarray         # (N+1,) running min of f_values
    batch_sizes: Optional[np.ndarray] = None

    def __len__(self):
        return self.f_values.size

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def best_index(self) -> int:
        return int(np.nanargmin(self.f_values)) if np.any(np.isfinite(self.f_values)) else 0

    @property
    def best_position(self) -> np.ndarray:
        return self.positions[self.best_index]

    @property
    def best_value(self) -> float:
        return float(self.f_values[self.best_index])

    def high_variance_values(self) -> np.ndarray:
        """Objective values of iterates produced by a high or restart step.

        Their predecessors sat above the cutoff, so these landings are the
        near-uniform samples used for online sublevel-volume estimation.
        """
        mask = (self.regimes == REGIME_HIGH) | (self.regimes == REGIME_RESTART)
        return self.f_values[mask]


def reflect_into_box(x: np.ndarray, box: BoxDomain) -> np.ndarray:
    """Fold a point back into the box by coordinate-wise billiard reflection."""
    w = box.width
    t = np.mod(x - box.low, 2.0 * w)
    return box.low + w - np.abs(t - w)


def _apply_boundary(x: np.ndarray, box: BoxDomain, policy: str, rng: RngStream) -> np.ndarray:
    if ((x >= box.low) & (x <= box.high)).all():
        return x
    if policy == "reflect":
        return reflect_into_box(x, box)
    if policy == "clamp":
        return np.clip(x, box.low, box.high)
    return uniform_in_box(rng, box)


def step_restart(objective, box, x, f_value, scalars: StepScalars, rng: RngStream):
    """One step of the restart form: gradient + low noise inside the sublevel
    set, uniform redraw outside.  Exits are captured by the redraw branch on
    the following step, so no boundary policy applies here."""
    if scalars.low:
        g = objective.gradient(x)
        x_new = x - scalars.eta * g + scalars.sigma * rng.generator.standard_normal(x.size)
        return x_new, REGIME_LOW
    return uniform_in_box(rng, box), REGIME_RESTART


def step_two_stage(objective, box, x, f_value, scalars: StepScalars, rng: RngStream,
                   sigma_high: float, boundary: str = "reflect"):
    """One two-stage step: the noise level switches on the cutoff comparison."""
    sigma = scalars.sigma if scalars.low else sigma_high
    g = objective.gradient(x)
    x_new = x - scalars.eta * g + sigma * rng.generator.standard_normal(x.size)
    x_new = _apply_boundary(x_new, box, boundary, rng)
    return x_new, (REGIME_LOW if scalars.low else REGIME_HIGH), sigma


def step_classical(objective, box, x, scalars: StepScalars, rng: RngStream,
                   boundary: str = "reflect"):
    """One classical step with state-independent noise."""
    g = objective.gradient(x)
    x_new = x - scalars.eta * g + scalars.sigma * rng.generator.standard_normal(x.size)
    return _apply_boundary(x_new, box, boundary, rng)


def step_batch(objective, box, x, batch_value, batch_grad, scalars: StepScalars,
               rng: RngStream):
    """One batch step: gradient move with the batch-mean gradient below the
    cutoff, uniform redraw at or above it."""
    if scalars.low:
        return x - scalars.eta * batch_grad, REGIME_LOW
    return uniform_in_box(rng, box), REGIME_RESTART


def step_gradient_free(box, region: BoxDomain, x, scale: float, rng: RngStream):
    """One drift-free diffusion step with periodic wrap: step scale is
    ``scale`` inside the region and 1/scale outside."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    inside = bool(((x >= region.low) & (x <= region.high)).all())
    sigma = scale if inside else 1.0 / scale
    x_new = x + sigma * rng.generator.standard_normal(x.size)
    x_new = box.low + np.mod(x_new - box.low, box.width)
    return x_new, (REGIME_LOW if inside else REGIME_HIGH), sigma


def _batch_size(rule: str, n: int) -> int:
    if rule == "proposed":
        return max(n, 1)
    return max(1, math.ceil(math.log(10.0 * max(n, 1))))


def run(config: SolverConfig, rng: RngStream) -> RunTrace:
    """Execute ``config.iterations`` steps and record the full trace.

    The cutoff is refreshed from the schedule every iteration.  The result is
    a pure function of (config, seed, stream index).
    """
    n_steps = config.iterations
    box = config.box
    d = box.dim
    variant = config.variant

    positions = np.empty((n_steps + 1, d))
    f_values = np.full(n_steps + 1, math.nan)
    sigmas = np.full(n_steps + 1, math.nan)
    cutoffs = np.full(n_steps + 1, math.nan)
    regimes = np.zeros(n_steps + 1, dtype=np.uint8)
    batch_sizes = np.zeros(n_steps + 1, dtype=np.int64) if variant == "batch" else None

    x = uniform_in_box(rng, box) if isinstance(config.initial, str) else config.initial.copy()
    positions[0] = x

    if variant == "gradient_free":
        region, scale = config.region, config.scale
        for n in range(n_steps):
            x, regime, sigma = step_gradient_free(box, region, x, scale, rng)
            positions[n + 1] = x
            sigmas[n + 1] = sigma
            regimes[n + 1] = regime
        best_f = np.full(n_steps + 1, math.nan)
        return RunTrace(variant, rng.master_seed, rng.stream_index, positions,
                        f_values, sigmas, cutoffs, regimes, best_f)

    objective = config.objective
    driver = config.schedule.driver()
    sigma_high = getattr(config.schedule, "sigma_high", None)
    if variant == "two_stage" and sigma_high is None:
        raise ValueError("two_stage requires a schedule with sigma_high")

    if variant == "batch":
        rule = config.batch_rule
        for n in range(n_steps):
            m = _batch_size(rule, n)
            value, grad = objective.batch(x, m, rng)
            f_values[n] = value
            batch_sizes[n] = m
            scalars = driver.step(n, value)
            x, regime = step_batch(objective, box, x, value, grad, scalars, rng)
            positions[n + 1] = x
            sigmas[n + 1] = scalars.sigma if scalars.low else math.inf
            cutoffs[n + 1] = scalars.cutoff
            regimes[n + 1] = regime
        m = _batch_size(rule, n_steps)
        f_values[n_steps], _ = objective.batch(x, m, rng)
        batch_sizes[n_steps] = m
    else:
        fx = objective.value(x)
        f_values[0] = fx
        for n in range(n_steps):
            scalars = driver.step(n, fx)
            if variant == "restart":
                x, regime = step_restart(objective, box, x, fx, scalars, rng)
                sigma = scalars.sigma if regime == REGIME_LOW else math.inf
            elif variant == "two_stage":
                x, regime, sigma = step_two_stage(objective, box, x, fx, scalars, rng,
                                                  sigma_high, config.boundary)
            else:  # classical
                x = step_classical(objective, box, x, scalars, rng, config.boundary)
                regime, sigma = REGIME_LOW, scalars.sigma
            fx = objective.value(x)
            positions[n + 1] = x
            f_values[n + 1] = fx
            sigmas[n + 1] = sigma
            cutoffs[n + 1] = scalars.cutoff
            regimes[n + 1] = regime

    best_f = np.minimum.accumulate(f_values)
    return RunTrace(variant, rng.master_seed, rng.stream_index, positions,
                    f_values, sigmas, cutoffs, regimes, best_f, batch_sizes)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trace_csv(trace: RunTrace, path, coords: bool = False) -> None:
    """Write the trace as CSV: n,f_value,cutoff,sigma_used,regime,best_f[,x0..]."""
    header = ["n", "f_value", "cutoff", "sigma_used", "regime", "best_f"]
    if coords:
        header += [f"x{i}" for i in range(trace.dim)]
    lines = [",".join(header)]
    for i in range(len(trace)):
        row = [
            str(i),
            _fmt(trace.f_values[i]),
            _fmt(trace.cutoffs[i]),
            _fmt(trace.sigmas[i]),
            REGIME_NAMES[trace.regimes[i]],
            _fmt(trace.best_f[i]),
        ]
        if coords:
            row += [_fmt(v) for v in trace.positions[i]]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path) -> dict:
    """Read a trace CSV back into column arrays (coordinates if present)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    col = {name: idx for idx, name in enumerate(header)}
    out = {
        "n": np.array([int(r[col["n"]]) for r in rows]),
        "f_value": np.array([float(r[col["f_value"]]) for r in rows]),
        "cutoff": np.array([float(r[col["cutoff"]]) for r in rows]),
        "sigma_used": np.array([float(r[col["sigma_used"]]) for r in rows]),
        "regime": np.array([_REGIME_CODES[r[col["regime"]]] for r in rows], dtype=np.uint8),
        "best_f": np.array([float(r[col["best_f"]]) for r in rows]),
    }
    coord_names = [name for name in header if name.startswith("x") and name[1:].isdigit()]
    if coord_names:
        out["positions"] = np.array(
            [[float(r[col[name]]) for name in coord_names] for r in rows]
        )
    return out

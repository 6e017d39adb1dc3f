"""Multi-run experiment harness and result persistence.

Runs are embarrassingly parallel: run k always uses the stream derived from
(master seed, k), and aggregation folds results in run-index order, so the
output is bitwise identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .objective import BoxDomain
from .sampler import derive_stream
from .solver import REGIME_HIGH, REGIME_RESTART, RunTrace, SolverConfig, run

__all__ = [
    "ExperimentConfig",
    "ConvergenceCurve",
    "ConvergenceResult",
    "OccupationHistogram",
    "default_checkpoints",
    "wilson_interval",
    "convergence_experiment",
    "occupation_measure",
    "region_mass",
    "write_curve_csv",
    "read_curve_csv",
    "write_histogram_csv",
    "read_histogram_csv",
]

_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial fraction."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = p + z * z / (2.0 * trials)
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
    return (max(0.0, (centre - half) / denom), min(1.0, (centre + half) / denom))


def default_checkpoints(n_max: int) -> np.ndarray:
    """Geometric {1, 2, 5} x 10^j grid up to and including n_max."""
    pts = []
    base = 1
    while base <= n_max:
        for mult in (1, 2, 5):
            v = mult * base
            if v <= n_max:
                pts.append(v)
        base *= 10
    if not pts or pts[-1] != n_max:
        pts.append(n_max)
    return np.array(sorted(set(pts)), dtype=int)


@dataclass(frozen=True)
class ExperimentConfig:
    solver: SolverConfig
    runs: int
    eps: float
    master_seed: int
    checkpoints: Optional[np.ndarray] = None
    jobs: int = 1
    collect_online: bool = False
    collect_traces: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        cps = (default_checkpoints(self.solver.iterations)
               if self.checkpoints is None else np.asarray(self.checkpoints, dtype=int))
        if np.any(np.diff(cps) <= 0) or cps[0] < 0 or cps[-1] > self.solver.iterations:
            raise ValueError("checkpoints must be strictly increasing and <= iterations")
        object.__setattr__(self, "checkpoints", cps)
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class ConvergenceCurve:
    """Failure fractions P(|X_n - x*| >= eps) at the checkpoints."""

    checkpoints: np.ndarray
    failure_fraction: np.ndarray
    wilson_lo: np.ndarray
    wilson_hi: np.ndarray
    runs: int
    eps: float

    @classmethod
    def from_distances(cls, checkpoints, distances, eps):
        """distances: (runs, checkpoints) array of |X_n - x*|."""
        distances = np.asarray(distances)
        runs = distances.shape[0]
        failures = (distances >= eps).sum(axis=0)
        frac = failures / runs
        lo = np.empty_like(frac)
        hi = np.empty_like(frac)
        for i, k in enumerate(failures):
            lo[i], hi[i] = wilson_interval(int(k), runs)
        return cls(np.asarray(checkpoints, dtype=int), frac, lo, hi, runs, eps)


@dataclass(frozen=True)
class ConvergenceResult:
    curve_current: ConvergenceCurve
    curve_best: ConvergenceCurve
    distances_current: np.ndarray   # (runs, checkpoints)
    distances_best: np.ndarray      # (runs, checkpoints)
    master_seed: int
    online_values: Optional[np.ndarray] = None
    traces: Optional[list] = None

    @property
    def final_success_current(self) -> float:
        return 1.0 - float(self.curve_current.failure_fraction[-1])

    @property
    def final_success_best(self) -> float:
        return 1.0 - float(self.curve_best.failure_fraction[-1])


def _best_so_far_indices(f_values: np.ndarray) -> np.ndarray:
    """Index of the running argmin of f at every iteration."""
    n = f_values.size
    run_min = np.minimum.accumulate(f_values)
    is_new_best = np.zeros(n, dtype=bool)
    is_new_best[0] = True
    is_new_best[1:] = f_values[1:] < run_min[:-1]
    idx = np.where(is_new_best, np.arange(n), 0)
    return np.maximum.accumulate(idx)


def _run_one(payload):
    (solver_config, master_seed, k, checkpoints, x_star,
     collect_online, collect_traces) = payload
    rng = derive_stream(master_seed, k)
    trace = run(solver_config, rng)
    dist = np.linalg.norm(trace.positions - x_star[None, :], axis=1)
    best_idx = _best_so_far_indices(trace.f_values)
    cur = dist[checkpoints]
    best = dist[best_idx[checkpoints]]
    online = trace.high_variance_values() if collect_online else None
    return cur, best, online, (trace if collect_traces else None)


def convergence_experiment(cfg: ExperimentConfig) -> ConvergenceResult:
    """Estimate P(|X_n - x*| >= eps) over independent seeded runs.

    The current-iterate curve is the primary statistic; the best-so-far curve
    (distance of the lowest-value iterate seen so far) is computed alongside.
    """
    objective = cfg.solver.objective
    x_star = getattr(objective, "minimizer", None)
    if x_star is None:
        raise ValueError("convergence experiment requires an objective with a known minimizer")
    payloads = [
        (cfg.solver, cfg.master_seed, k, cfg.checkpoints, x_star,
         cfg.collect_online, cfg.collect_traces)
        for k in range(cfg.runs)
    ]
    if cfg.jobs == 1:
        results = [_run_one(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, payloads, chunksize=1))

    distances_current = np.vstack([r[0] for r in results])
    distances_best = np.vstack([r[1] for r in results])
    online = None
    if cfg.collect_online:
        online = np.concatenate([r[2] for r in results if r[2] is not None and r[2].size])
    traces = [r[3] for r in results] if cfg.collect_traces else None
    return ConvergenceResult(
        curve_current=ConvergenceCurve.from_distances(cfg.checkpoints, distances_current, cfg.eps),
        curve_best=ConvergenceCurve.from_distances(cfg.checkpoints, distances_best, cfg.eps),
        distances_current=distances_current,
        distances_best=distances_best,
        master_seed=cfg.master_seed,
        online_values=online,
        traces=traces,
    )


@dataclass(frozen=True)
class OccupationHistogram:
    """Equal-width occupation fractions of a 1-D trajectory over its box."""

    edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        if abs(self.masses.sum() - 1.0) > 1e-12:
            raise ValueError("occupation masses must sum to 1")
        if np.any(self.masses < 0):
            raise ValueError("occupation masses must be non-negative")


def occupation_measure(trace: RunTrace, bins: int, box: BoxDomain | None = None) -> OccupationHistogram:
    """Fraction of iterates per equal-width bin; the initial point is excluded."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if trace.dim != 1:
        raise ValueError("occupation histograms are defined for 1-D traces")
    positions = trace.positions[1:, 0]
    if box is None:
        lo = float(np.min(positions))
        hi = float(np.max(positions))
        if hi <= lo:
            hi = lo + 1.0
    else:
        lo, hi = float(box.low[0]), float(box.high[0])
    counts, edges = np.histogram(positions, bins=bins, range=(lo, hi))
    return OccupationHistogram(edges=edges, masses=counts / positions.size)


def region_mass(hist: OccupationHistogram, lo: float, hi: float) -> float:
    """Occupation mass of [lo, hi], with fractional overlap at partial bins."""
    left = hist.edges[:-1]
    right = hist.edges[1:]
    overlap = np.clip(np.minimum(right, hi) - np.maximum(left, lo), 0.0, None)
    width = right - left
    return float(np.sum(hist.masses * np.where(width > 0, overlap / width, 0.0)))


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_curve_csv(curve: ConvergenceCurve, path) -> None:
    lines = ["checkpoint,failure_fraction,wilson_lo,wilson_hi"]
    for i in range(curve.checkpoints.size):
        lines.append(",".join([
            str(int(curve.checkpoints[i])),
            _fmt(curve.failure_fraction[i]),
            _fmt(curve.wilson_lo[i]),
            _fmt(curve.wilson_hi[i]),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve_csv(path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return {
        "checkpoint": data["checkpoint"].astype(int),
        "failure_fraction": data["failure_fraction"],
        "wilson_lo": data["wilson_lo"],
        "wilson_hi": data["wilson_hi"],
    }


def write_histogram_csv(hist: OccupationHistogram, path) -> None:
    lines = ["bin_lo,bin_hi,mass"]
    for i in range(hist.masses.size):
        lines.append(",".join([_fmt(hist.edges[i]), _fmt(hist.edges[i + 1]), _fmt(hist.masses[i])]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_histogram_csv(path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return {"bin_lo": data["bin_lo"], "bin_hi": data["bin_hi"], "mass": data["mass"]}

"""JSON configuration: strict validation and object construction.

Unknown keys are rejected with the offending field path so a typo never
silently falls back to a default.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .estimation import build_cdf_iid, cutoff_sequence
from .objective import BoxDomain, make_objective
from .sampler import derive_stream
from .schedule import make_schedule
from .solver import SolverConfig

__all__ = ["ConfigError", "load_config", "validate_config", "build_solver_config"]

# stream index reserved for pre-run estimation draws; run streams count from 0
ESTIMATION_STREAM = 2**62

_SCHEMA = {
    "seed": None,
    "objective": {"name", "a", "b", "c", "dim", "noise_std"},
    "box": {"low", "high"},
    "schedule": {
        "kind", "alpha", "sigma0", "sigma_high", "eta", "quantile", "clamp_cutoff",
        "classical_decay", "omega0_volume", "dim", "b1", "b2", "cutoffs",
        "cdf_samples", "eta_scale", "omega_scale",
    },
    "solver": {
        "variant", "iterations", "initial", "boundary", "batch_rule",
        "region", "scale",
    },
    "experiment": {"runs", "eps", "checkpoints", "bins"},
    "estimate": {"levels", "source", "samples", "m", "rounds", "level_values"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def validate_config(cfg: dict) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError("$", "configuration must be a JSON object")
    for key, value in cfg.items():
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key")
        allowed = _SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(key, "must be an object")
        for sub in value:
            if sub not in allowed:
                raise ConfigError(f"{key}.{sub}", "unknown key")
    if "seed" in cfg:
        seed = cfg["seed"]
        if not isinstance(seed, int) or seed < 0 or seed > 2**64 - 1:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("$", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    validate_config(cfg)
    return cfg


def _build_box(spec: dict, dim: int) -> BoxDomain:
    low, high = spec.get("low"), spec.get("high")
    if low is None or high is None:
        raise ConfigError("box", "requires low and high")
    if isinstance(low, (int, float)) and isinstance(high, (int, float)):
        return BoxDomain.cube(low, high, dim)
    return BoxDomain(np.asarray(low, dtype=float), np.asarray(high, dtype=float))


def build_solver_config(cfg: dict, seed_override: int | None = None,
                        iterations_override: int | None = None) -> tuple[SolverConfig, int]:
    """Build the SolverConfig and effective master seed from a validated config."""
    try:
        seed = int(seed_override if seed_override is not None else cfg.get("seed", 0))
        solver_spec = dict(cfg.get("solver", {}))
        variant = solver_spec.get("variant")
        if variant is None:
            raise ConfigError("solver.variant", "is required")
        iterations = int(iterations_override if iterations_override is not None
                         else solver_spec.get("iterations", 1000))

        objective = None
        schedule = None
        dim = None
        if variant != "gradient_free":
            obj_spec = cfg.get("objective")
            if obj_spec is None:
                raise ConfigError("objective", "is required for this variant")
            objective = make_objective(obj_spec)
            dim = objective.dim
        else:
            dim = 1

        box_spec = cfg.get("box")
        if box_spec is None:
            raise ConfigError("box", "is required")
        box = _build_box(box_spec, dim)

        region = None
        if "region" in solver_spec and solver_spec["region"] is not None:
            region = _build_box(solver_spec["region"], box.dim)

        if variant != "gradient_free":
            sched_spec = dict(cfg.get("schedule", {"kind": "practical"}))
            if sched_spec.get("kind") == "theoretical":
                sched_spec.setdefault("dim", box.dim)
                sched_spec.setdefault("omega0_volume", box.volume())
                if "cutoffs" not in sched_spec and objective is not None:
                    samples = int(sched_spec.pop("cdf_samples", 100_000))
                    base = objective.expectation() if hasattr(objective, "expectation") else objective
                    cdf = build_cdf_iid(base, box, samples, derive_stream(seed, ESTIMATION_STREAM))
                    sched_spec["cutoffs"] = cutoff_sequence(
                        cdf, float(sched_spec.get("alpha", 0.01)), iterations + 1)
                else:
                    sched_spec.pop("cdf_samples", None)
            if sched_spec.get("kind") == "logarithmic":
                sched_spec.setdefault("dim", box.dim)
            schedule = make_schedule(sched_spec)

        solver = SolverConfig(
            variant=variant,
            box=box,
            iterations=iterations,
            objective=objective,
            schedule=schedule,
            initial=solver_spec.get("initial", "uniform"),
            boundary=solver_spec.get("boundary", "reflect"),
            batch_rule=solver_spec.get("batch_rule", "proposed"),
            region=region,
            scale=float(solver_spec["scale"]) if solver_spec.get("scale") is not None else None,
        )
        return solver, seed
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("$", str(exc)) from None


def effective_config(cfg: dict, master_seed: int, overrides: dict | None = None) -> dict:
    """The configuration actually used, for the output-directory sidecar."""
    out = json.loads(json.dumps(cfg))
    out["seed"] = master_seed
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            section, _, name = key.partition(".")
            if name:
                out.setdefault(section, {})[name] = value
            else:
                out[section] = value
    if isinstance(out.get("schedule", {}).get("cutoffs"), np.ndarray):
        out["schedule"]["cutoffs"] = out["schedule"]["cutoffs"].tolist()
    return out

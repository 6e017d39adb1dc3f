"""Deterministic, splittable random-number streams.

All randomness in the package flows through :class:`RngStream` objects that
are derived from a single 64-bit master seed plus a stream index.  The
underlying bit generator is numpy's counter-based Philox, keyed through
``SeedSequence((master_seed, stream_index))``, so a stream is a pure function
of ``(master_seed, stream_index)`` and distinct indices give statistically
independent sequences.  This generator choice is fixed per release; changing
it changes every reproduced trace.
"""

from __future__ import annotations

import numpy as np

from .objective import BoxDomain

__all__ = ["RngStream", "derive_stream", "gaussian_vector", "uniform_in_box"]


class RngStream:
    """Single-owner random stream: one master seed, one stream index.

    Not safe to share across threads; derive one stream per concurrent run.
    """

    __slots__ = ("master_seed", "stream_index", "generator")

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or master_seed > 2**64 - 1:
            raise ValueError(f"master_seed must fit in 64 bits, got {master_seed}")
        if stream_index < 0:
            raise ValueError(f"stream_index must be non-negative, got {stream_index}")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(entropy=(self.master_seed, self.stream_index))
        self.generator = np.random.Generator(np.random.Philox(seed=seq))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def derive_stream(master_seed: int, run_index: int) -> RngStream:
    """Deterministic stream for run ``run_index``; pure in both arguments."""
    return RngStream(master_seed, run_index)


def gaussian_vector(rng: RngStream, d: int) -> np.ndarray:
    """Draw d independent standard normal deviates."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return rng.generator.standard_normal(d)


def uniform_in_box(rng: RngStream, box: BoxDomain) -> np.ndarray:
    """Draw one point uniformly from the box, independent across axes."""
    return box.low + rng.generator.random(box.dim) * (box.high - box.low)

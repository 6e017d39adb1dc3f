import numpy as np
import pytest

from adavar.objective import as_point


class Identity1D:
    """f(x) = x[0] on a 1-D box; exact uniform-value CDF oracle."""

    dim = 1
    minimizer = np.zeros(1)
    minimum = 0.0

    def value(self, x):
        return float(as_point(x, dim=1)[0])

    def gradient(self, x):
        as_point(x, dim=1)
        return np.ones(1)

    def value_many(self, xs):
        return np.asarray(xs, dtype=float)[:, 0]


class SquaredNorm:
    """f(x) = |x|^2; sublevel sets are discs of area pi*v."""

    def __init__(self, dim):
        self.dim = dim
        self.minimizer = np.zeros(dim)
        self.minimum = 0.0

    def value(self, x):
        x = as_point(x, dim=self.dim)
        return float((x * x).sum())

    def gradient(self, x):
        return 2.0 * as_point(x, dim=self.dim)

    def value_many(self, xs):
        xs = np.asarray(xs, dtype=float)
        return (xs * xs).sum(axis=1)


class FixedNormals:
    """Duck-typed RngStream whose normal draws are prescribed (for wrap tests)."""

    master_seed = 0
    stream_index = 0

    def __init__(self, values):
        self._values = list(values)

        class _Gen:
            def __init__(gself):
                gself.outer = self

            def standard_normal(gself, size):
                v = np.asarray(gself.outer._values.pop(0), dtype=float)
                return v.reshape(size) if not np.isscalar(size) else v

        self.generator = _Gen()


@pytest.fixture
def rng_factory():
    from adavar.sampler import derive_stream

    def make(seed=12345, stream=0):
        return derive_stream(seed, stream)

    return make

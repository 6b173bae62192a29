import numpy as np
import pytest

import minplus as mp


class InstancePool:
    """Session cache of generated matrix pairs and their naive products."""

    def __init__(self):
        self._pairs = {}
        self._naive = {}

    def pair(self, n, delta, seed):
        key = (n, delta, seed)
        if key not in self._pairs:
            self._pairs[key] = (
                mp.generate_bd(n, delta, 2 * seed),
                mp.generate_bd(n, delta, 2 * seed + 1),
            )
        return self._pairs[key]

    def naive(self, n, delta, seed):
        key = (n, delta, seed)
        if key not in self._naive:
            a, b = self.pair(n, delta, seed)
            self._naive[key] = mp.minplus_naive(a.base, b.base)
        return self._naive[key]


@pytest.fixture(scope="session")
def pool():
    return InstancePool()


def random_matrix(rng, n_rows, n_cols, bound, inf_prob=0.0):
    """Plain random Matrix with optional INF entries (test input helper)."""
    data = rng.integers(-bound, bound + 1, size=(n_rows, n_cols))
    if inf_prob > 0:
        mask = rng.random((n_rows, n_cols)) < inf_prob
        data = np.where(mask, mp.INF, data)
    return mp.Matrix(data)

import functools

import numpy as np
import pytest

from wachsyn.cli import catalog_module


@functools.lru_cache(maxsize=None)
def cached_catalog(name: str, p: int = 3, prec_p: int = 8, prec_mu: int = 40):
    return catalog_module(name, p, prec_p, prec_mu)


@pytest.fixture
def catalog():
    return cached_catalog


def vector(length: int, *coords, dtype=np.int64) -> np.ndarray:
    """A coordinate array (length, d) from per-coordinate coefficient lists."""
    out = np.zeros((length, len(coords)), dtype=dtype)
    for i, c in enumerate(coords):
        out[: len(c), i] = c
    return out

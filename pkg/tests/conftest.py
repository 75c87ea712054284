from pathlib import Path

import numpy as np
import pytest

from malalab.targets import (
    SmoothnessProfile,
    TargetDensity,
    make_anisotropic,
    make_cosine_perturbed,
    make_gaussian,
    make_quadratic,
)


class FlatTarget(TargetDensity):
    """Constant potential: free dynamics, every proposal accepted."""

    def __init__(self, dim: int = 2):
        self.dim = dim
        self.name = f"flat(d={dim})"
        self.profile = SmoothnessProfile(L=1.0, upsilon=float(dim), psi=1.0)

    def potential(self, q):
        return np.zeros(np.shape(q)[:-1])

    def gradient(self, q):
        return np.zeros_like(np.asarray(q, dtype=np.float64))

    def hvp(self, q, v):
        return np.zeros(np.broadcast_shapes(np.shape(q), np.shape(v)))


@pytest.fixture
def flat():
    return FlatTarget(2)


@pytest.fixture
def gaussian1():
    return make_gaussian(1)


CATALOG_CASES = {
    "gaussian1": lambda: make_gaussian(1),
    "gaussian3": lambda: make_gaussian(3),
    "quadratic": lambda: make_quadratic([3.0, 1.0]),
    "anisotropic4": lambda: make_anisotropic(4),
    "cosine2": lambda: make_cosine_perturbed(2, 0.5),
}


@pytest.fixture(params=sorted(CATALOG_CASES))
def catalog_target(request):
    return CATALOG_CASES[request.param]()


@pytest.fixture
def write_config(tmp_path: Path):
    def _write(text: str, name: str = "config.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write

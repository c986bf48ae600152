import numpy as np
import pytest
from data.models import DgpSpec, ErrorProcess, FunctionalSeries, MeanFunction
from services.simulation_service import simulate_series


def make_series(fn, n: int, N: int = 5) -> FunctionalSeries:
    """Noiseless series X_j(s) = fn(j/n, s)."""
    t = np.arange(1, n + 1) / n
    s = np.linspace(0.0, 1.0, N)
    return FunctionalSeries(values=fn(t[:, None], s[None, :]) * np.ones((n, N)), s_grid=s)


@pytest.fixture
def rng():
    return np.random.default_rng(20240915)


@pytest.fixture
def constant_series():
    return make_series(lambda t, s: 3.0 + 0.0 * t + 0.0 * s, 60)


@pytest.fixture
def affine_series():
    return make_series(lambda t, s: 1.0 + s + (2.0 - s) * t, 100)


@pytest.fixture
def mu1_series():
    return simulate_series(DgpSpec(mean=MeanFunction.MU1, errors=ErrorProcess.IID, n=200, N=21, seed=11))


@pytest.fixture
def write_wide(tmp_path):
    def write(text: str, name: str = "input.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write

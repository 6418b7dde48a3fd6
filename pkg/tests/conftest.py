from pathlib import Path

import numpy as np
import pytest

from src.config import SolverSettings
from src.game_model import validate_spec
from src.pydantic_models import CooperationMatrix, GameSpec, WeightVector

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def flow_game(n, b=1.0, x0=1.0, a=0.0):
    spec = GameSpec(a=a, b=[b] * n, q=[1.0] * n, r=[1.0] * n, x0=x0)
    return validate_spec(spec)


def random_game(rng, n=None, a=None, sigma_range=(0.1, 10.0)):
    """Game with sigma_i drawn from sigma_range and random weights."""
    n = n or int(rng.integers(1, 7))
    a = float(rng.uniform(-1, 1)) if a is None else a
    sigma = rng.uniform(*sigma_range, size=n)
    b = rng.uniform(0.5, 2.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    r = rng.uniform(0.5, 2.0, size=n)
    q = sigma * r / b ** 2
    mu = rng.uniform(0.2, 1.0, size=n)
    mu = mu / mu.sum()
    mu[-1] = 1.0 - mu[:-1].sum()
    spec = GameSpec(a=a, b=b.tolist(), q=q.tolist(), r=r.tolist(), x0=float(rng.uniform(0.5, 3.0)))
    return validate_spec(spec, WeightVector(mu=mu.tolist()))


@pytest.fixture
def settings():
    return SolverSettings()


@pytest.fixture
def flow2():
    return flow_game(2)


@pytest.fixture
def flow3():
    return flow_game(3)


@pytest.fixture
def hetero3():
    spec = GameSpec(a=0.5, b=[1.0, 0.8, 1.5], q=[1.0, 2.0, 0.5], r=[1.0, 0.5, 2.0], x0=2.0)
    cooperation = CooperationMatrix(weights=[[0.8, 0.1, 0.1], [0.2, 0.6, 0.2], [0.0, 0.3, 0.7]])
    return validate_spec(spec, WeightVector(mu=[0.5, 0.3, 0.2]), cooperation)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_games():
    gen = np.random.default_rng(7)
    return [random_game(gen) for _ in range(200)]


@pytest.fixture
def config_dir():
    return CONFIG_DIR

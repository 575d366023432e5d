"""
Shared pytest fixtures
"""
import numpy as np
import pytest

from src.main.python.models import (
    Grid,
    Parameters,
    ScalarField,
    SolverConfig,
    State,
    VectorField,
)


def smooth_random_state(grid: Grid, rng: np.random.Generator, amplitude: float = 0.1,
                        max_mode: int = 3) -> State:
    """Band-limited random state around (1, 1, 0) with positive rho and theta"""
    phases = np.pi * np.stack(grid.mesh)
    components = []
    for c in range(grid.dim + 2):
        values = np.zeros(grid.shape)
        for _ in range(max_mode):
            m = rng.integers(-max_mode, max_mode + 1, size=grid.dim)
            phase = np.tensordot(m, phases, axes=1)
            values = values + rng.uniform(-1.0, 1.0) * np.cos(phase) + rng.uniform(-1.0, 1.0) * np.sin(phase)
        values = amplitude * values / (2.0 * max_mode)
        components.append(values + (1.0 if c < 2 else 0.0))
    return State.from_array(grid, np.stack(components))


@pytest.fixture
def grid_1d():
    return Grid(1, 32)


@pytest.fixture
def grid_2d():
    return Grid(2, 16)


@pytest.fixture
def params():
    return Parameters(c_v=2.5, mu=0.05, eta=0.0, kappa=0.05)


@pytest.fixture
def fixed_config():
    return SolverConfig(dt_init=1e-3, fixed_dt=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def smooth_state_1d(grid_1d):
    x = grid_1d.mesh[0]
    return State(
        rho=ScalarField(grid_1d, 1.0 + 0.1 * np.cos(np.pi * x)),
        theta=ScalarField(grid_1d, 1.0 + 0.05 * np.sin(2 * np.pi * x)),
        u=VectorField((ScalarField(grid_1d, 0.1 * np.sin(np.pi * x)),)),
    )


@pytest.fixture
def random_state():
    return smooth_random_state

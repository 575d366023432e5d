"""
Random initial data from truncated Fourier series

Every member draws from its own counter-based stream
Philox(SeedSequence(seed, spawn_key=(member,))), so member i is the same
whatever N is and whichever worker computes it.
"""
from functools import lru_cache
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np

from ...core.exceptions import DistributionInfeasible
from ...models import DataDistribution, Grid, State
from ...utils.logging_utils import setup_logger

MAX_REJECTION_RATE = 0.99
# a member that needs more draws than this has its own rejection rate above MAX_REJECTION_RATE
MAX_ATTEMPTS = round(1.0 / (1.0 - MAX_REJECTION_RATE))


def member_rng(seed: int, member: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(member,))))


@lru_cache(maxsize=32)
def active_modes(dim: int, m_max: int) -> Tuple[Tuple[int, ...], ...]:
    """Half-lattice wavevectors with 1 <= |m|_inf <= m_max in a fixed order"""
    modes = []
    for m in product(range(-m_max, m_max + 1), repeat=dim):
        nonzero = [v for v in m if v != 0]
        if nonzero and nonzero[0] > 0:
            modes.append(tuple(m))
    return tuple(sorted(modes))


def _random_component(grid: Grid, dist: DataDistribution, rng: np.random.Generator,
                      base: float, modes: Sequence[Tuple[int, ...]]) -> np.ndarray:
    coefficients = np.zeros(grid.shape, dtype=complex)
    coefficients[(0,) * grid.dim] = base * 2.0 ** (grid.dim / 2.0)
    if dist.sigma > 0.0:
        amplitude = dist.sigma * np.array(
            [np.linalg.norm(m) ** -dist.r for m in modes]
        )
        a = amplitude * rng.standard_normal(len(modes))
        b = amplitude * rng.standard_normal(len(modes))
        # a cos(pi m.x) + b sin(pi m.x) has c_m = 2^(dim/2 - 1) (a - i b)
        scale = 2.0 ** (grid.dim / 2.0 - 1.0)
        for m, a_m, b_m in zip(modes, a, b):
            plus = tuple(v % grid.n for v in m)
            minus = tuple(-v % grid.n for v in m)
            coefficients[plus] = scale * (a_m - 1j * b_m)
            coefficients[minus] = scale * (a_m + 1j * b_m)
    return grid.inverse(coefficients)


def sample_member(dist: DataDistribution, member: int) -> Tuple[State, int]:
    """
    Draw one admissible member

    Returns:
        (state, number of rejected draws)

    Raises:
        DistributionInfeasible: If the member's rejection rate exceeds MAX_REJECTION_RATE,
            i.e. all of its first MAX_ATTEMPTS draws were rejected
    """
    grid = dist.grid
    modes = active_modes(grid.dim, dist.m_max)
    rng = member_rng(dist.seed, member)
    bases = [dist.rho_bar, dist.theta_bar] + [0.0] * grid.dim
    for attempt in range(MAX_ATTEMPTS):
        array = np.stack([_random_component(grid, dist, rng, base, modes) for base in bases])
        if array[0].min() >= dist.epsilon and array[1].min() >= dist.epsilon:
            return State.from_array(grid, array), attempt
    raise DistributionInfeasible(
        f"Member {member}: rejection rate above {MAX_REJECTION_RATE:.0%} "
        f"({MAX_ATTEMPTS} of {MAX_ATTEMPTS} draws per member violated the positivity margin "
        f"epsilon={dist.epsilon})"
    )


def sample_initial_data(dist: DataDistribution, count: int, start: int = 0) -> List[State]:
    """
    i.i.d. admissible initial states for members start .. start + count - 1

    Raises:
        ValueError: If count < 1
        DistributionInfeasible: If any member's rejection rate exceeds 99%
    """
    if count < 1:
        raise ValueError(f"Member count must be >= 1, got {count}")
    logger = setup_logger("Sampling")
    states, rejected = [], 0
    for member in range(start, start + count):
        state, rejections = sample_member(dist, member)
        if rejections:
            logger.debug(f"Member {member}: {rejections} draws rejected")
        states.append(state)
        rejected += rejections
    logger.debug(f"Rejection rate {rejected / (rejected + count):.3f} over {count} members")
    return states

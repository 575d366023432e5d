"""
Metric d on the extended phase space X+ plus U_inf

    d(U, V) = |dG| / (1 + |dG|) + sum_k exp(-|k|) |dQ_k| / (1 + |dQ_k|)

where G(U) = (1 + ||U||_X + ||1/rho||_C + ||1/theta||_C)^-2, G(U_inf) = 0
and Q_k(U) = G(U) F_k(U). The index k runs over (component c, wavevector m,
parity) with m in the half-lattice (first non-zero entry positive) and
|k| = |m|_1 + (c - 1) <= K. F_k is the cosine or sine coefficient of the
component against the real orthonormal basis.
"""
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ...core.exceptions import GridMismatch
from ...core.spectral import sobolev_norm_X
from ...models import ExtendedState, Grid, MetricConfig, State
from ...utils.logging_utils import setup_logger


class ConvergenceMode(Enum):
    IN_X_PLUS = "InXPlus"
    TO_INFINITY = "ToInfinity"
    NOT_CONVERGENT = "NotConvergent"


def _half_lattice(dim: int, radius: int) -> List[Tuple[int, ...]]:
    """Wavevectors with |m|_1 <= radius whose first non-zero entry is positive, zero first"""
    vectors = []
    for m in product(range(-radius, radius + 1), repeat=dim):
        if sum(abs(v) for v in m) > radius:
            continue
        nonzero = [v for v in m if v != 0]
        if nonzero and nonzero[0] < 0:
            continue
        vectors.append(tuple(m))
    vectors.sort(key=lambda m: (sum(abs(v) for v in m), m))
    return vectors


@dataclass(frozen=True)
class MetricIndex:
    """
    Flattened index set of the truncated series for one grid

    Arrays are aligned: entry i reads the spectral coefficient at
    spectral[component[i]][position[i]] and keeps its real part scaled by
    scale[i] (cosine) or its imaginary part (sine).
    """
    component: np.ndarray
    position: Tuple[np.ndarray, ...]
    imaginary: np.ndarray
    scale: np.ndarray
    weight: np.ndarray
    index_norm: np.ndarray

    @classmethod
    def build(cls, grid: Grid, K: int) -> 'MetricIndex':
        components, positions, imaginary, scale, norms = [], [], [], [], []
        for c in range(grid.dim + 2):
            radius = K - c
            if radius < 0:
                break
            for m in _half_lattice(grid.dim, radius):
                # modes beyond the grid band read as zero and are dropped
                if max(abs(v) for v in m) >= grid.n // 2:
                    continue
                position = tuple(v % grid.n for v in m)
                norm = sum(abs(v) for v in m) + c
                if not any(m):
                    components.append(c)
                    positions.append(position)
                    imaginary.append(False)
                    scale.append(1.0)
                    norms.append(norm)
                    continue
                for is_sine in (False, True):
                    components.append(c)
                    positions.append(position)
                    imaginary.append(is_sine)
                    scale.append(-math.sqrt(2.0) if is_sine else math.sqrt(2.0))
                    norms.append(norm)
        norms_array = np.asarray(norms, dtype=float)
        return cls(
            component=np.asarray(components, dtype=int),
            position=tuple(np.asarray([p[a] for p in positions], dtype=int) for a in range(grid.dim)),
            imaginary=np.asarray(imaginary, dtype=bool),
            scale=np.asarray(scale, dtype=float),
            weight=np.exp(-norms_array),
            index_norm=norms_array,
        )

    def functionals(self, state: State) -> np.ndarray:
        """F_k(U) for every index, in index order"""
        spectra = np.stack([c.spectral for c in state.components()])
        values = spectra[(self.component,) + self.position]
        return np.where(self.imaginary, values.imag, values.real) * self.scale

    def __len__(self) -> int:
        return len(self.weight)


@lru_cache(maxsize=64)
def _metric_index(grid: Grid, K: int) -> MetricIndex:
    return MetricIndex.build(grid, K)


def G_weight(point: ExtendedState, q: float = 6.0) -> float:
    """
    G(U) in [0, 1]; zero at U_inf and for states outside X+
    """
    if point.is_infinity or not point.state.in_x_plus():
        return 0.0
    norms = sobolev_norm_X(point.state, q)
    return float((1.0 + norms.blowup_argument) ** -2)


@dataclass(frozen=True)
class MetricEmbedding:
    """(G, Q_k) of one point, ready for repeated distance evaluation"""
    G: float
    Q: np.ndarray
    grid: Optional[Grid] = None

    @property
    def is_infinity(self) -> bool:
        return self.grid is None


class PhaseMetric:
    """
    Truncated metric d with cached index tables
    """

    def __init__(self, config: Optional[MetricConfig] = None):
        self.config = config or MetricConfig()
        self.logger = setup_logger("PhaseMetric")

    def index(self, grid: Grid) -> MetricIndex:
        return _metric_index(grid, self.config.K)

    def embed(self, point: ExtendedState) -> MetricEmbedding:
        G = G_weight(point, self.config.q)
        if G == 0.0:
            return MetricEmbedding(G=0.0, Q=np.zeros(0))
        table = self.index(point.grid)
        return MetricEmbedding(G=G, Q=G * table.functionals(point.state), grid=point.grid)

    def distance_embedded(self, a: MetricEmbedding, b: MetricEmbedding) -> float:
        if a.grid is not None and b.grid is not None and a.grid != b.grid:
            raise GridMismatch(f"Cannot compare states on grids {a.grid} and {b.grid}")
        grid = a.grid or b.grid
        dG = abs(a.G - b.G)
        total = dG / (1.0 + dG)
        if grid is None:
            return total
        table = self.index(grid)
        qa = a.Q if a.Q.size else np.zeros(len(table))
        qb = b.Q if b.Q.size else np.zeros(len(table))
        dQ = np.abs(qa - qb)
        return float(total + np.sum(table.weight * dQ / (1.0 + dQ)))

    def distance(self, a: ExtendedState, b: ExtendedState) -> float:
        if a.is_regular and b.is_regular and a.grid != b.grid:
            raise GridMismatch(f"Cannot compare states on grids {a.grid} and {b.grid}")
        return self.distance_embedded(self.embed(a), self.embed(b))


def embed(point: ExtendedState, config: Optional[MetricConfig] = None) -> MetricEmbedding:
    return PhaseMetric(config).embed(point)


def metric_d(a: ExtendedState, b: ExtendedState, config: Optional[MetricConfig] = None) -> float:
    """
    Distance between two points of X+ plus U_inf

    Raises:
        GridMismatch: If both points are regular but live on different grids
    """
    return PhaseMetric(config).distance(a, b)


def _lattice_shell(dim: int, s: int) -> int:
    """Number of m in Z^dim with |m|_1 = s"""
    if s < 0:
        return 0
    if s == 0:
        return 1
    return sum(2 ** i * math.comb(dim, i) * math.comb(s - 1, i - 1) for i in range(1, dim + 1))


def tail_bound(K: int, dim: int, terms: int = 400) -> float:
    """
    sum over |k| > K of exp(-|k|), counted over the (component, m, parity) index set

    Each (component, half-lattice m != 0) pair carries two parities, so an
    index shell counts like the full lattice shell of |m|_1 = |k| - (c - 1).
    """
    total = 0.0
    for j in range(K + 1, K + 1 + terms):
        count = sum(_lattice_shell(dim, j - c) for c in range(dim + 2))
        total += count * math.exp(-j)
    return total


def cutoff_G_n(y: float, n: float) -> float:
    """
    Smooth cap: 1 on [0, n], cos^2 ramp down to 0 on [n, 2n], 0 beyond
    """
    if n <= 0:
        raise ValueError(f"Cutoff level must be positive, got {n}")
    if not y > n:
        return 1.0
    if y >= 2.0 * n or math.isinf(y):
        return 0.0
    return math.cos(0.5 * math.pi * (y - n) / n) ** 2


def censored_moment_map(point: ExtendedState, grid: Grid, c_v: float,
                        cutoff: Optional[float] = None, q: float = 6.0) -> np.ndarray:
    """
    (rho, rho u, rho log(theta^c_v / rho)) stacked as (dim + 2, *shape), zero at U_inf

    With a cutoff level n the fields are scaled by
    G_n(||U||_X + ||1/rho||_C + ||1/theta||_C).
    """
    if point.is_infinity or not point.state.in_x_plus():
        return np.zeros((grid.dim + 2,) + grid.shape)
    state = point.state
    if state.grid != grid:
        raise GridMismatch(f"State grid {state.grid} differs from moment grid {grid}")
    rho, theta = state.rho.values, state.theta.values
    moments = np.concatenate([
        rho[np.newaxis],
        rho[np.newaxis] * state.u.to_array(),
        (rho * (c_v * np.log(theta) - np.log(rho)))[np.newaxis],
    ])
    if cutoff is not None:
        moments = moments * cutoff_G_n(sobolev_norm_X(state, q).blowup_argument, cutoff)
    return moments


def convergence_mode(sequence: Sequence[ExtendedState], limit: Optional[ExtendedState] = None,
                     config: Optional[MetricConfig] = None, tol: float = 1e-2) -> ConvergenceMode:
    """
    Classify a sequence by its tail behaviour in d

    InXPlus: the tail is within tol of a regular limit and the X norms track
    the limit's. ToInfinity: the tail approaches U_inf monotonically and the
    blow-up argument grows. NotConvergent otherwise.
    """
    if len(sequence) < 2:
        raise ValueError("Need at least two sequence members to classify")
    metric = PhaseMetric(config)
    tail = list(sequence[len(sequence) // 2:])
    infinity = ExtendedState.infinity()

    if limit is None or limit.is_infinity:
        to_infinity = [metric.distance(u, infinity) for u in tail]
        growing = all(u.is_infinity for u in tail) or (
            len(tail) >= 2 and np.all(np.diff(to_infinity) <= 0.0) and to_infinity[-1] < tol
        )
        if growing:
            return ConvergenceMode.TO_INFINITY
        if limit is not None:
            return ConvergenceMode.NOT_CONVERGENT
        limit = tail[-1]

    distances = [metric.distance(u, limit) for u in tail]
    if max(distances) >= tol or any(u.is_infinity for u in tail):
        return ConvergenceMode.NOT_CONVERGENT
    limit_norm = sobolev_norm_X(limit.state, metric.config.q).x_norm
    norms = [sobolev_norm_X(u.state, metric.config.q).x_norm for u in tail]
    if max(abs(x - limit_norm) for x in norms) > tol * max(1.0, limit_norm):
        return ConvergenceMode.NOT_CONVERGENT
    return ConvergenceMode.IN_X_PLUS


def distance_table(points: Sequence[ExtendedState], config: Optional[MetricConfig] = None) -> np.ndarray:
    """Symmetric matrix of pairwise distances"""
    metric = PhaseMetric(config)
    embedded = [metric.embed(p) for p in points]
    size = len(points)
    table = np.zeros((size, size))
    for i in range(size):
        for j in range(i + 1, size):
            table[i, j] = table[j, i] = metric.distance_embedded(embedded[i], embedded[j])
    return table

"""
Field data models on the periodic torus [-1, 1]^dim
"""
from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np

from ..core.exceptions import GridMismatch, NonFiniteField


@dataclass(frozen=True)
class Grid:
    """
    Uniform periodic grid with side length 2 per axis

    Sample j along an axis sits at x_j = -1 + 2 j / n. Spectral coefficients
    are taken against the L2-orthonormal basis
    e_m(x) = exp(i pi m . x) / 2^(dim/2).
    """
    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"Grid dimension must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"Points per axis must be even and >= 8, got {self.n}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return 2.0 / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def volume(self) -> float:
        return 2.0 ** self.dim

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Sample positions along one axis"""
        return -1.0 + self.spacing * np.arange(self.n)

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Coordinate arrays of full grid shape, one per axis"""
        return tuple(np.meshgrid(*([self.coordinates] * self.dim), indexing='ij'))

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Integer frequencies m in FFT order"""
        return np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n)).astype(int)

    def axis_frequencies(self, axis: int) -> np.ndarray:
        """Integer frequencies reshaped to broadcast along one axis"""
        shape = [1] * self.dim
        shape[axis] = self.n
        return self.frequencies.reshape(shape)

    @cached_property
    def _phase(self) -> np.ndarray:
        # (-1)^(m_1 + ... + m_dim) accounts for the grid starting at x = -1
        total = sum(self.axis_frequencies(a) for a in range(self.dim))
        return np.where(np.asarray(total) % 2 == 0, 1.0, -1.0) * np.ones(self.shape)

    @property
    def _scale(self) -> float:
        return self.cell_volume / np.sqrt(self.volume)

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Grid samples -> orthonormal Fourier coefficients"""
        return np.fft.fftn(values) * (self._phase * self._scale)

    def inverse(self, coefficients: np.ndarray) -> np.ndarray:
        """Orthonormal Fourier coefficients -> real grid samples"""
        return np.fft.ifftn(coefficients * (self._phase / self._scale)).real

    def to_dict(self) -> dict:
        return {'dim': self.dim, 'n': self.n}

    @classmethod
    def from_dict(cls, data: dict) -> 'Grid':
        return cls(dim=int(data['dim']), n=int(data['n']))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Real scalar samples on a grid with a lazily computed spectral mirror

    Values are stored read-only, so a field can be shared between workers.
    """
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatch(
                f"Field shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    @cached_property
    def spectral(self) -> np.ndarray:
        if not self.is_finite():
            raise NonFiniteField("Cannot transform a field with non-finite samples")
        coefficients = self.grid.forward(self.values)
        coefficients.flags.writeable = False
        return coefficients

    @classmethod
    def from_spectral(cls, grid: Grid, coefficients: np.ndarray) -> 'ScalarField':
        coefficients = np.asarray(coefficients, dtype=complex)
        if not np.all(np.isfinite(coefficients)):
            raise NonFiniteField("Cannot invert non-finite spectral coefficients")
        return cls(grid, grid.inverse(coefficients))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> 'ScalarField':
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> 'ScalarField':
        return cls.constant(grid, 0.0)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def __add__(self, other) -> 'ScalarField':
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values + other_values)

    def __sub__(self, other) -> 'ScalarField':
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values - other_values)

    def __mul__(self, scalar: float) -> 'ScalarField':
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """dim scalar components on one grid"""
    components: Tuple[ScalarField, ...]

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise ValueError("A vector field needs at least one component")
        grid = components[0].grid
        if any(c.grid != grid for c in components):
            raise GridMismatch("All vector components must share one grid")
        if len(components) != grid.dim:
            raise GridMismatch(
                f"Vector field on a {grid.dim}D grid needs {grid.dim} components, got {len(components)}"
            )
        object.__setattr__(self, 'components', components)

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @classmethod
    def zeros(cls, grid: Grid) -> 'VectorField':
        return cls(tuple(ScalarField.zeros(grid) for _ in range(grid.dim)))

    @classmethod
    def from_array(cls, grid: Grid, array: np.ndarray) -> 'VectorField':
        return cls(tuple(ScalarField(grid, array[i]) for i in range(grid.dim)))

    def to_array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])

    def __getitem__(self, index: int) -> ScalarField:
        return self.components[index]

    def __len__(self) -> int:
        return len(self.components)


@dataclass(frozen=True, eq=False)
class State:
    """
    U = (rho, theta, u) on one grid

    Component order (rho, theta, u_1, ..., u_dim) is used everywhere a state
    is flattened: snapshot files, Fourier functionals and the solver arrays.
    """
    rho: ScalarField
    theta: ScalarField
    u: VectorField

    def __post_init__(self):
        if not (self.rho.grid == self.theta.grid == self.u.grid):
            raise GridMismatch("rho, theta and u must share one grid")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    @property
    def component_count(self) -> int:
        return self.grid.dim + 2

    def components(self) -> List[ScalarField]:
        return [self.rho, self.theta, *self.u.components]

    def is_finite(self) -> bool:
        return all(c.is_finite() for c in self.components())

    def in_x_plus(self) -> bool:
        """Strictly positive density and temperature on the grid"""
        return self.is_finite() and self.rho.min() > 0.0 and self.theta.min() > 0.0

    def max_rho_plus_theta(self) -> float:
        return float(np.max(self.rho.values + self.theta.values))

    def to_array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components()])

    @classmethod
    def from_array(cls, grid: Grid, array: np.ndarray) -> 'State':
        return cls(
            rho=ScalarField(grid, array[0]),
            theta=ScalarField(grid, array[1]),
            u=VectorField.from_array(grid, array[2:]),
        )

    @classmethod
    def constant(cls, grid: Grid, rho: float = 1.0, theta: float = 1.0,
                 velocity: Sequence[float] = ()) -> 'State':
        velocity = list(velocity) or [0.0] * grid.dim
        return cls(
            rho=ScalarField.constant(grid, rho),
            theta=ScalarField.constant(grid, theta),
            u=VectorField(tuple(ScalarField.constant(grid, v) for v in velocity)),
        )


@dataclass(frozen=True)
class PhaseNorms:
    """
    Norms defining the phase space X and the subset X+

    inv_rho_sup and inv_theta_sup are the sup norms of 1/rho and 1/theta,
    +inf when the minimum is not positive.
    """
    x_norm: float
    inv_rho_sup: float
    inv_theta_sup: float
    rho_norm: float = 0.0
    theta_norm: float = 0.0
    u_norm: float = 0.0

    @property
    def blowup_argument(self) -> float:
        """||U||_X + ||1/rho||_C + ||1/theta||_C"""
        return self.x_norm + self.inv_rho_sup + self.inv_theta_sup

    def to_dict(self) -> dict:
        return {
            'x_norm': self.x_norm,
            'inv_rho_sup': self.inv_rho_sup,
            'inv_theta_sup': self.inv_theta_sup,
            'rho_norm': self.rho_norm,
            'theta_norm': self.theta_norm,
            'u_norm': self.u_norm,
        }

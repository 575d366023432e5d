"""
Spectral operations on periodic fields

All transforms use the orthonormal basis of models.fields.Grid, so Fourier
coefficients do not depend on the resolution and Parseval reads
sum |c_m|^2 = integral of f^2.
"""
from itertools import combinations_with_replacement
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..models.fields import Grid, PhaseNorms, ScalarField, State
from .exceptions import GridMismatch, NonFiniteField, OutOfBand


FORWARD = 'forward'
INVERSE = 'inverse'


def _require_finite(field: ScalarField):
    if not field.is_finite():
        raise NonFiniteField("Field contains NaN or infinite samples")


def transform(field: ScalarField, direction: str = FORWARD) -> ScalarField:
    """
    Synchronize a field with its spectral mirror

    'forward' computes the coefficients from the samples; 'inverse' rebuilds
    the samples from the coefficients. Both return a field whose samples and
    coefficients agree.
    """
    _require_finite(field)
    if direction == FORWARD:
        _ = field.spectral
        return field
    if direction == INVERSE:
        return ScalarField.from_spectral(field.grid, field.spectral)
    raise ValueError(f"Unknown transform direction: {direction!r}")


def derivative_multiplier(grid: Grid, axis: int, order: int) -> np.ndarray:
    """(i pi m)^order along one axis; the Nyquist mode is zeroed for odd orders"""
    m = grid.axis_frequencies(axis)
    multiplier = (1j * np.pi * m) ** order
    if order % 2:
        multiplier = np.where(m == -grid.n // 2, 0.0, multiplier)
    return multiplier


def partial_multiplier(grid: Grid, axes: Sequence[int]) -> np.ndarray:
    """Multiplier of the mixed partial derivative d^alpha, alpha given as a list of axes"""
    multiplier = np.ones(grid.shape, dtype=complex)
    for axis in range(grid.dim):
        count = list(axes).count(axis)
        if count:
            multiplier = multiplier * derivative_multiplier(grid, axis, count)
    return multiplier


def derivative(field: ScalarField, axis: int, order: int = 1) -> ScalarField:
    """
    Spectral derivative along one axis

    Raises:
        ValueError: If the axis or order is invalid
        NonFiniteField: If the field has non-finite samples
    """
    if not 0 <= axis < field.grid.dim:
        raise ValueError(f"Axis {axis} out of range for a {field.grid.dim}D grid")
    if order not in (1, 2):
        raise ValueError(f"Derivative order must be 1 or 2, got {order}")
    _require_finite(field)
    coefficients = field.spectral * derivative_multiplier(field.grid, axis, order)
    return ScalarField.from_spectral(field.grid, coefficients)


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3 rule: keep modes with |m| < n/3 on every axis"""
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        mask = mask & (np.abs(grid.axis_frequencies(axis)) < grid.n / 3.0)
    return mask


def dealias(field: ScalarField) -> ScalarField:
    _require_finite(field)
    return ScalarField.from_spectral(field.grid, field.spectral * dealias_mask(field.grid))


def integrate(field: ScalarField) -> float:
    """Midpoint quadrature of f over the torus"""
    return float(np.sum(field.values) * field.grid.cell_volume)


def lq_norm(values: np.ndarray, grid: Grid, q: float) -> float:
    """(integral |f|^q dx)^(1/q) by midpoint quadrature"""
    return float((np.sum(np.abs(values) ** q) * grid.cell_volume) ** (1.0 / q))


def multi_indices(dim: int, max_order: int) -> List[Tuple[int, ...]]:
    """Multi-indices |alpha| <= max_order as sorted tuples of axes"""
    indices: List[Tuple[int, ...]] = []
    for order in range(max_order + 1):
        indices.extend(combinations_with_replacement(range(dim), order))
    return indices


def w22_norm(field: ScalarField) -> float:
    """(sum over |alpha| <= 2 of ||d^alpha f||_2^2)^(1/2), evaluated through Parseval"""
    _require_finite(field)
    power = np.abs(field.spectral) ** 2
    total = 0.0
    for alpha in multi_indices(field.grid.dim, 2):
        total += float(np.sum(np.abs(partial_multiplier(field.grid, alpha)) ** 2 * power))
    return float(np.sqrt(total))


def w1q_norm(field: ScalarField, q: float) -> float:
    """(||f||_q^q + sum_i ||d_i f||_q^q)^(1/q)"""
    _require_finite(field)
    grid = field.grid
    total = lq_norm(field.values, grid, q) ** q
    for axis in range(grid.dim):
        total += lq_norm(derivative(field, axis, 1).values, grid, q) ** q
    return float(total ** (1.0 / q))


def sobolev_norm_X(state: State, q: float = 6.0) -> PhaseNorms:
    """
    Norms of the phase space X = W^{1,q} x W^{2,2} x W^{2,2}

    Args:
        state: State to measure
        q: Sobolev exponent of the density, 3 < q <= 6

    Returns:
        PhaseNorms with the X norm and the sup norms of 1/rho and 1/theta
        (+inf when the state is outside X+)
    """
    if not 3.0 < q <= 6.0:
        raise ValueError(f"Sobolev exponent must satisfy 3 < q <= 6, got {q}")
    rho_norm = w1q_norm(state.rho, q)
    theta_norm = w22_norm(state.theta)
    u_norm = float(np.sqrt(sum(w22_norm(c) ** 2 for c in state.u.components)))
    rho_min = state.rho.min()
    theta_min = state.theta.min()
    return PhaseNorms(
        x_norm=rho_norm + theta_norm + u_norm,
        inv_rho_sup=1.0 / rho_min if rho_min > 0.0 else np.inf,
        inv_theta_sup=1.0 / theta_min if theta_min > 0.0 else np.inf,
        rho_norm=rho_norm,
        theta_norm=theta_norm,
        u_norm=u_norm,
    )


def spectral_index(grid: Grid, wavevector: Sequence[int]) -> Tuple[int, ...]:
    """Array index of a wavevector, checking it is resolvable"""
    wavevector = tuple(int(m) for m in wavevector)
    if len(wavevector) != grid.dim:
        raise ValueError(f"Wavevector {wavevector} does not match grid dimension {grid.dim}")
    if max(abs(m) for m in wavevector) >= grid.n // 2:
        raise OutOfBand(f"Wavevector {wavevector} is outside the band |m| < {grid.n // 2}")
    return tuple(m % grid.n for m in wavevector)


def fourier_coefficient(state: State, component: int, wavevector: Sequence[int]) -> Tuple[float, float]:
    """
    F_k(U): L2-normalized trigonometric moment of one component

    Args:
        state: State to project
        component: 1 = rho, 2 = theta, 3.. = velocity components
        wavevector: Integer wavevector with |m|_inf < n/2

    Returns:
        (re, im) of the integral of U_c against conj(e_m)
    """
    components = state.components()
    if not 1 <= component <= len(components):
        raise ValueError(f"Component must lie in 1..{len(components)}, got {component}")
    index = spectral_index(state.grid, wavevector)
    value = components[component - 1].spectral[index]
    return float(value.real), float(value.imag)


def inject(field: ScalarField, target: Grid) -> ScalarField:
    """
    Spectral injection onto another resolution (experimental)

    Modes resolvable on both grids are copied, everything else is dropped.
    """
    if target.dim != field.grid.dim:
        raise GridMismatch("Injection needs grids of equal dimension")
    _require_finite(field)
    band = min(field.grid.n, target.n) // 2
    source_m = field.grid.frequencies
    target_m = target.frequencies
    keep_source = np.nonzero(np.abs(source_m) < band)[0]
    positions = {int(m): i for i, m in enumerate(target_m)}
    keep_target = np.array([positions[int(source_m[i])] for i in keep_source])
    coefficients = np.zeros(target.shape, dtype=complex)
    source_index = np.ix_(*([keep_source] * target.dim))
    target_index = np.ix_(*([keep_target] * target.dim))
    coefficients[target_index] = field.spectral[source_index]
    return ScalarField.from_spectral(target, coefficients)


def inject_state(state: State, target: Grid) -> State:
    arrays = [inject(c, target).values for c in state.components()]
    return State.from_array(target, np.stack(arrays))


class SpectralOperator:
    """
    Precomputed multipliers for repeated differentiation of raw arrays

    Works on plain numpy arrays of grid shape with unnormalized FFTs; the
    basis normalization cancels for diagonal operators.
    """

    def __init__(self, grid: Grid, dealias: bool = True):
        self.grid = grid
        self.dealias_enabled = dealias
        self.first = [derivative_multiplier(grid, a, 1) for a in range(grid.dim)]
        self.second = [derivative_multiplier(grid, a, 2) for a in range(grid.dim)]
        self.mask = dealias_mask(grid)

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values)

    def ifft(self, coefficients: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(coefficients).real

    def gradient(self, values: np.ndarray) -> List[np.ndarray]:
        coefficients = self.fft(values)
        return [self.ifft(m * coefficients) for m in self.first]

    def gradient_hat(self, coefficients: np.ndarray) -> List[np.ndarray]:
        return [self.ifft(m * coefficients) for m in self.first]

    def mixed(self, coefficients: np.ndarray, axis_a: int, axis_b: int) -> np.ndarray:
        if axis_a == axis_b:
            return self.ifft(self.second[axis_a] * coefficients)
        return self.ifft(self.first[axis_a] * self.first[axis_b] * coefficients)

    def laplacian_hat(self, coefficients: np.ndarray) -> np.ndarray:
        return self.ifft(sum(m * coefficients for m in self.second))

    def divergence(self, vector: Iterable[np.ndarray]) -> np.ndarray:
        total = np.zeros(self.grid.shape)
        for axis, component in enumerate(vector):
            total = total + self.ifft(self.first[axis] * self.fft(component))
        return total

    def project(self, values: np.ndarray) -> np.ndarray:
        """Apply the 2/3-rule mask to a nonlinear product"""
        if not self.dealias_enabled:
            return values
        return self.ifft(self.mask * self.fft(values))

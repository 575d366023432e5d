"""
Tests for grids, fields, spectral operations and snapshot files
"""
import numpy as np
import pytest

from src.main.python.core.exceptions import GridMismatch, NonFiniteField, OutOfBand
from src.main.python.core.spectral import (
    dealias,
    dealias_mask,
    derivative,
    fourier_coefficient,
    inject,
    integrate,
    sobolev_norm_X,
    transform,
)
from src.main.python.models import FieldSpec, Grid, Mode, ScalarField, State, state_from_specs
from src.main.python.utils.field_io import read_snapshot, read_state, write_snapshot, write_state


def random_field(grid, rng, modes=5):
    phase = np.pi * np.stack(grid.mesh)
    values = np.zeros(grid.shape)
    for _ in range(modes):
        m = rng.integers(-4, 5, size=grid.dim)
        values = values + rng.normal() * np.cos(np.tensordot(m, phase, axes=1) + rng.uniform(0, 2 * np.pi))
    return ScalarField(grid, values)


class TestGrid:
    def test_volumes(self):
        grid = Grid(2, 16)
        assert grid.cell_volume == pytest.approx((2 / 16) ** 2)
        assert grid.volume == 4.0
        assert grid.coordinates[0] == -1.0

    @pytest.mark.parametrize("dim,n", [(4, 16), (1, 6), (1, 9)])
    def test_rejects_invalid(self, dim, n):
        with pytest.raises(ValueError):
            Grid(dim, n)

    def test_field_shape_mismatch(self, grid_1d):
        with pytest.raises(GridMismatch):
            ScalarField(grid_1d, np.ones(16))


class TestTransform:
    @pytest.mark.parametrize("dim,n", [(1, 16), (2, 8), (3, 8)])
    def test_constant_zero_mode(self, dim, n):
        grid = Grid(dim, n)
        field = ScalarField.constant(grid, 3.0)
        spectral = field.spectral
        assert spectral[(0,) * dim].real == pytest.approx(3.0 * 2 ** (dim / 2), rel=1e-13)
        rest = np.abs(spectral).ravel()[1:]
        assert rest.max() < 1e-12

    def test_single_harmonic_two_modes(self, grid_1d):
        field = ScalarField(grid_1d, np.cos(np.pi * grid_1d.mesh[0]))
        nonzero = np.flatnonzero(np.abs(field.spectral) > 1e-10)
        assert sorted(grid_1d.frequencies[nonzero]) == [-1, 1]
        assert field.spectral[1] == pytest.approx(1 / np.sqrt(2), abs=1e-13)

    def test_round_trip(self, grid_2d, rng):
        field = random_field(grid_2d, rng)
        back = transform(field, 'inverse')
        scale = np.max(np.abs(field.values))
        assert np.max(np.abs(back.values - field.values)) < 1e-12 * scale

    def test_parseval(self, rng):
        grid = Grid(2, 16)
        for _ in range(100):
            field = ScalarField(grid, rng.normal(size=grid.shape))
            spectral_energy = np.sum(np.abs(field.spectral) ** 2)
            quadrature = np.sum(field.values ** 2) * grid.cell_volume
            assert spectral_energy == pytest.approx(quadrature, rel=1e-10)

    def test_non_finite_rejected(self, grid_1d):
        values = np.ones(grid_1d.shape)
        values[3] = np.nan
        with pytest.raises(NonFiniteField):
            transform(ScalarField(grid_1d, values))

    def test_unknown_direction(self, grid_1d):
        with pytest.raises(ValueError):
            transform(ScalarField.zeros(grid_1d), 'sideways')


class TestDerivative:
    def test_cosine(self):
        grid = Grid(1, 64)
        x = grid.mesh[0]
        d = derivative(ScalarField(grid, np.cos(np.pi * x)), axis=0)
        np.testing.assert_allclose(d.values, -np.pi * np.sin(np.pi * x), atol=1e-10)

    def test_constant(self, grid_2d):
        d = derivative(ScalarField.constant(grid_2d, 2.0), axis=1)
        np.testing.assert_allclose(d.values, 0.0, atol=1e-14)

    def test_second_matches_composed_first(self, grid_2d, rng):
        field = random_field(grid_2d, rng)
        second = derivative(field, axis=0, order=2)
        composed = derivative(derivative(field, axis=0), axis=0)
        scale = np.max(np.abs(second.values))
        assert np.max(np.abs(second.values - composed.values)) < 1e-9 * scale

    def test_invalid_axis(self, grid_1d):
        with pytest.raises(ValueError):
            derivative(ScalarField.zeros(grid_1d), axis=1)


class TestQuadratureAndDealias:
    def test_integrate_constant(self, grid_2d):
        assert integrate(ScalarField.constant(grid_2d, 1.0)) == pytest.approx(4.0)

    def test_dealias_keeps_low_modes(self, grid_1d):
        x = grid_1d.mesh[0]
        low = np.cos(np.pi * x)
        high = np.cos(12 * np.pi * x)
        cleaned = dealias(ScalarField(grid_1d, low + high))
        np.testing.assert_allclose(cleaned.values, low, atol=1e-12)
        assert dealias_mask(grid_1d).sum() == 21


class TestSobolevNorm:
    @pytest.mark.parametrize("dim,q", [(1, 6.0), (2, 4.0), (3, 6.0)])
    def test_constant_state(self, dim, q):
        norms = sobolev_norm_X(State.constant(Grid(dim, 8)), q)
        assert norms.rho_norm == pytest.approx(2 ** (dim / q), rel=1e-12)
        assert norms.inv_rho_sup == 1.0
        assert norms.inv_theta_sup == 1.0

    def test_zero_density_point(self, grid_1d):
        rho = np.ones(grid_1d.shape)
        rho[5] = 0.0
        state = State.from_array(grid_1d, np.stack([rho, np.ones(32), np.zeros(32)]))
        assert sobolev_norm_X(state).inv_rho_sup == np.inf

    def test_reciprocal_identity(self, smooth_state_1d):
        norms = sobolev_norm_X(smooth_state_1d)
        assert norms.inv_rho_sup * smooth_state_1d.rho.min() == pytest.approx(1.0)

    def test_adding_mode_increases_norm(self, smooth_state_1d):
        before = sobolev_norm_X(smooth_state_1d).x_norm
        array = smooth_state_1d.to_array()
        array[1] = array[1] + 0.05 * np.cos(3 * np.pi * smooth_state_1d.grid.mesh[0])
        after = sobolev_norm_X(State.from_array(smooth_state_1d.grid, array)).x_norm
        assert after > before

    def test_refinement_oracle(self):
        spec = FieldSpec(constant=1.0, modes=(Mode((1,), cos=0.2), Mode((2,), sin=0.1)))
        coarse, fine = Grid(1, 32), Grid(1, 128)
        norms = [
            sobolev_norm_X(state_from_specs(g, spec, spec, [spec.scaled(0.5)])).x_norm
            for g in (coarse, fine)
        ]
        assert norms[0] == pytest.approx(norms[1], rel=1e-6)

    def test_exponent_range(self, smooth_state_1d):
        with pytest.raises(ValueError):
            sobolev_norm_X(smooth_state_1d, q=3.0)


class TestFourierCoefficient:
    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_constant_density(self, dim):
        re, im = fourier_coefficient(State.constant(Grid(dim, 8)), 1, (0,) * dim)
        assert re == pytest.approx(2 ** (dim / 2), rel=1e-13)
        assert im == pytest.approx(0.0, abs=1e-13)

    def test_zero_state(self, grid_2d):
        zero = State.constant(grid_2d, 0.0, 0.0)
        assert fourier_coefficient(zero, 3, (1, -2)) == (0.0, 0.0)

    def test_single_harmonic(self, grid_1d):
        x = grid_1d.mesh[0]
        state = State.from_array(grid_1d, np.stack([np.ones(32), 1 + 0.3 * np.sin(2 * np.pi * x), np.zeros(32)]))
        re, im = fourier_coefficient(state, 2, (2,))
        assert re == pytest.approx(0.0, abs=1e-13)
        assert im == pytest.approx(-0.3 / np.sqrt(2), rel=1e-12)
        assert fourier_coefficient(state, 2, (1,)) == pytest.approx((0.0, 0.0), abs=1e-13)

    def test_out_of_band(self, grid_1d):
        with pytest.raises(OutOfBand):
            fourier_coefficient(State.constant(grid_1d), 1, (16,))


class TestInjection:
    def test_band_limited_field_survives(self):
        coarse, fine = Grid(1, 16), Grid(1, 64)
        field = ScalarField(coarse, np.cos(np.pi * coarse.mesh[0]))
        injected = inject(field, fine)
        np.testing.assert_allclose(injected.values, np.cos(np.pi * fine.mesh[0]), atol=1e-12)


class TestSnapshotFiles:
    def test_state_file(self, tmp_path, smooth_state_1d):
        path = write_state(tmp_path / "state.bin", smooth_state_1d)
        raw = path.read_bytes()
        assert raw[:4] == b"NSFF"
        assert np.frombuffer(raw, dtype='<u4', count=3, offset=4).tolist() == [1, 32, 3]
        restored = read_state(path)
        assert np.array_equal(restored.to_array(), smooth_state_1d.to_array())

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"XXXX" + bytes(12))
        with pytest.raises(ValueError):
            read_snapshot(path)

    def test_shape_checked(self, tmp_path, grid_1d):
        with pytest.raises(GridMismatch):
            write_snapshot(tmp_path / "x.bin", grid_1d, np.zeros((2, 16)))

"""
Tests for random initial data, empirical measures and ensemble estimates
"""
import math

import numpy as np
import pytest

from src.main.python.core.exceptions import DistributionInfeasible
from src.main.python.core.spectral import fourier_coefficient
from src.main.python.models import (
    DataDistribution,
    EnsembleEstimate,
    ExtendedState,
    Forcing,
    Grid,
    Parameters,
    SolverConfig,
    State,
    StoppingConfig,
    StoppingRecord,
    StopReason,
)
from src.main.python.services.metric import constant_observable, make_observable
from src.main.python.services.statistics import (
    EmpiricalMeasure,
    EnsembleEngine,
    MemberOutcome,
    MemberTask,
    active_modes,
    combine_atoms,
    observable_table,
    replicate_seed,
    sample_initial_data,
    sample_member,
    sorted_sum,
)
from src.main.python.services.statistics.sampling import MAX_ATTEMPTS, MAX_REJECTION_RATE

FIXED = SolverConfig(dt_init=1e-2, fixed_dt=True)
HEATING = (0.0, 10.0, 20.0, 40.0)


def heated_engine(params, extra=()) -> EnsembleEngine:
    observables = EnsembleEngine.default_observables(params) + list(extra)
    return EnsembleEngine(params, solver_config=FIXED, stopping=StoppingConfig(M=4.0), observables=observables)


def heated_tasks(params, grid):
    """Constant states stopping near t = 5 / Q under uniform heating Q"""
    return [
        MemberTask(i, ExtendedState(State.constant(grid)), params, Forcing.constant(grid, Q=Q))
        for i, Q in enumerate(HEATING)
    ]


class TestSampling:
    def test_zero_spread_gives_base_state(self):
        dist = DataDistribution(sigma=0.0, rho_bar=1.5, theta_bar=0.7)
        state, rejected = sample_member(dist, 3)
        assert rejected == 0
        np.testing.assert_allclose(state.to_array(), State.constant(dist.grid, 1.5, 0.7).to_array(), rtol=1e-14)

    def test_margin_respected(self):
        dist = DataDistribution(sigma=0.2, epsilon=0.6, seed=11)
        for state in sample_initial_data(dist, 40):
            assert state.rho.min() >= 0.6
            assert state.theta.min() >= 0.6

    def test_member_stream_independent_of_count(self):
        dist = DataDistribution(seed=5)
        short = sample_initial_data(dist, 3)
        long = sample_initial_data(dist, 6)
        shifted = sample_initial_data(dist, 2, start=2)
        assert np.array_equal(short[2].to_array(), long[2].to_array())
        assert np.array_equal(shifted[0].to_array(), long[2].to_array())
        assert not np.array_equal(long[0].to_array(), long[1].to_array())

    def test_coefficient_variance(self):
        dist = DataDistribution(sigma=0.1, r=2.0, epsilon=0.1, seed=42)
        for wavevector in [(1,), (2,)]:
            samples = [fourier_coefficient(s, 1, wavevector)[0] for s in sample_initial_data(dist, 4000)]
            assert abs(np.mean(samples)) < 5.0 * math.sqrt(dist.coefficient_variance(wavevector) / 4000)
            assert np.var(samples) == pytest.approx(dist.coefficient_variance(wavevector), rel=0.1)

    def test_active_modes_half_lattice(self):
        modes = active_modes(2, 1)
        assert len(modes) == 4
        assert (0, 1) in modes and (1, -1) in modes and (-1, 1) not in modes

    def test_infeasible_margin(self):
        dist = DataDistribution(sigma=1.0, epsilon=0.99)
        with pytest.raises(DistributionInfeasible) as info:
            sample_member(dist, 0)
        assert "rejection rate above 99%" in str(info.value)
        assert f"{MAX_ATTEMPTS} of {MAX_ATTEMPTS} draws per member" in str(info.value)
        with pytest.raises(DistributionInfeasible):
            sample_initial_data(dist, 3)

    def test_member_cap_matches_rejection_rate(self):
        assert MAX_ATTEMPTS == 100
        assert (MAX_ATTEMPTS - 1) / MAX_ATTEMPTS <= MAX_REJECTION_RATE

    def test_invalid_distribution(self):
        with pytest.raises(ValueError):
            DataDistribution(r=1.0)
        with pytest.raises(ValueError):
            DataDistribution(n=16, m_max=8)

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_initial_data(DataDistribution(), 0)

    def test_replicate_seeds(self):
        assert replicate_seed(3, 1) == replicate_seed(3, 1)
        assert replicate_seed(3, 1) != replicate_seed(3, 2)
        assert 0 <= replicate_seed(3, 0) < 2 ** 64


class TestEmpiricalMeasure:
    def test_weights_validated(self, grid_1d):
        atoms = [ExtendedState(State.constant(grid_1d))] * 2
        with pytest.raises(ValueError):
            EmpiricalMeasure(atoms, np.array([0.6, 0.6]))
        with pytest.raises(ValueError):
            EmpiricalMeasure(atoms, np.array([1.5, -0.5]))

    def test_dirac(self, grid_1d):
        measure = EmpiricalMeasure.dirac(ExtendedState.infinity())
        assert measure.infinity_mass() == 1.0
        assert measure.integrate(constant_observable(2.0)) == 2.0

    def test_mixture_exact(self, grid_1d):
        observable = make_observable('cutoff_G_n', n=10.0, functional='energy')
        a = EmpiricalMeasure.uniform([ExtendedState(State.constant(grid_1d, r, 1.0)) for r in (0.5, 1.0, 2.0)])
        b = EmpiricalMeasure.uniform([ExtendedState.infinity(), ExtendedState(State.constant(grid_1d, 1.0, 3.0))])
        mixed = a.mixture(b, 0.3)
        expected = 0.3 * a.integrate(observable) + 0.7 * b.integrate(observable)
        assert mixed.integrate(observable) == pytest.approx(expected, abs=1e-15)
        assert mixed.total_mass == pytest.approx(1.0, abs=1e-15)
        assert mixed.infinity_mass() == pytest.approx(0.35)

    def test_permutation_invariance(self, grid_1d, rng, random_state):
        observable = make_observable('cutoff_G_n', n=10.0, functional='entropy')
        atoms = [ExtendedState(random_state(grid_1d, rng)) for _ in range(7)] + [ExtendedState.infinity()]
        weights = rng.dirichlet(np.ones(8))
        weights = weights / math.fsum(weights)
        order = rng.permutation(8)
        forward = EmpiricalMeasure(atoms, weights)
        shuffled = EmpiricalMeasure([atoms[i] for i in order], weights[order])
        assert forward.integrate(observable) == shuffled.integrate(observable)

    def test_sorted_sum_order_free(self, rng):
        arrays = rng.standard_normal((9, 4, 4))
        assert np.array_equal(sorted_sum(arrays), sorted_sum(arrays[::-1]))
        assert not np.any(sorted_sum(arrays[:0]))


class TestCensoring:
    def test_blowup_fraction_and_censoring_identity(self, params):
        grid = Grid(1, 16)
        engine = heated_engine(params, [constant_observable(1.0, name='one')])
        times = [0.0, 0.1, 0.2, 0.3, 0.6]
        outcomes = engine.run_members(heated_tasks(params, grid), grid, times)
        estimate = engine.reduce(outcomes, grid, times)
        assert estimate.blowup_fraction == [0.0, 0.0, 0.25, 0.5, 0.75]
        for name, means in estimate.observable_means.items():
            limit = 1.0 if name == 'one' else 0.0
            for i in range(len(times)):
                censored = estimate.censored_means[name][i]
                assert means[i] == pytest.approx(censored + limit * estimate.blowup_fraction[i], abs=1e-14)
        assert estimate.observable_means['one'] == [1.0] * len(times)
        assert len(observable_table(estimate)) == len(times) * len(estimate.observable_means)

    def test_all_members_absorbed(self, params):
        grid = Grid(1, 16)
        engine = heated_engine(params, [constant_observable(1.0, name='one')])
        tasks = [MemberTask(i, ExtendedState(State.constant(grid)), params, Forcing.constant(grid, Q=40.0))
                 for i in range(3)]
        estimate = engine.reduce(engine.run_members(tasks, grid, [0.5]), grid, [0.5])
        assert estimate.blowup_fraction == [pytest.approx(1.0)]
        assert estimate.observable_means['one'] == [pytest.approx(1.0)]
        assert all(estimate.censored_means[name] == [0.0] for name in estimate.censored_means)
        assert not np.any(estimate.moments[0])
        assert estimate.functional_means['mass'] == [0.0]

    def test_failed_member_is_absorbed(self, params, grid_1d):
        engine = heated_engine(params)
        outcomes = [
            MemberOutcome(0, [ExtendedState(State.constant(grid_1d))], StoppingRecord()),
            MemberOutcome(1, [ExtendedState.infinity()], StoppingRecord(t_stop=0.0, reason=StopReason.NON_FINITE),
                          error="NonFiniteField: boom"),
        ]
        estimate = engine.reduce(outcomes, grid_1d, [0.0])
        assert estimate.failures == [1]
        assert estimate.blowup_fraction == [0.5]
        np.testing.assert_allclose(estimate.moments[0][0], 0.5 * np.ones(32), rtol=1e-15)


class TestPushforward:
    def test_initial_moments_are_sample_means(self, params):
        dist = DataDistribution(n=16, sigma=0.05, m_max=3, seed=9)
        engine = EnsembleEngine(params, solver_config=FIXED)
        estimate = engine.pushforward_estimate(dist, [0.0], 5)
        states = sample_initial_data(dist, 5)
        expected = np.mean([s.rho.values for s in states], axis=0)
        np.testing.assert_allclose(estimate.moments[0][0], expected, rtol=1e-13)
        assert estimate.blowup_fraction == [0.0]

    def test_single_member_is_dirac(self, params):
        dist = DataDistribution(n=16, sigma=0.05, m_max=3, seed=9)
        estimate = EnsembleEngine(params, solver_config=FIXED).pushforward_estimate(dist, [0.0, 0.05], 1)
        assert len(estimate.measures[1]) == 1
        assert all(w == [0.0, 0.0] for w in estimate.half_widths.values())

    def test_unsorted_times_rejected(self, params):
        with pytest.raises(ValueError):
            EnsembleEngine(params).pushforward_estimate(DataDistribution(n=16, m_max=3), [0.2, 0.1], 2)

    def test_product_of_atoms(self, params):
        grid = Grid(1, 16)
        first = EnsembleEstimate(N=2, times=[0.0, 1.0], blowup_fraction=[0.0, 0.5],
                                 moments=[np.ones((3, 16)), np.zeros((3, 16))],
                                 observable_means={'f': [1.0, 0.2]})
        second = EnsembleEstimate(N=2, times=[0.0, 1.0], blowup_fraction=[0.0, 1.0],
                                  moments=[np.ones((3, 16)), np.ones((3, 16))],
                                  observable_means={'f': [0.5, 0.0]})
        product = combine_atoms([0.25, 0.75], [first, second])
        assert product.blowup_fraction == [0.0, pytest.approx(0.875)]
        assert product.observable_means['f'] == [pytest.approx(0.625), pytest.approx(0.05)]
        np.testing.assert_allclose(product.moments[1], 0.75 * np.ones((3, grid.n)))

    def test_markov_identities(self, params):
        dist = DataDistribution(n=16, sigma=0.02, m_max=3, seed=7)
        engine = EnsembleEngine(params, solver_config=FIXED)
        report = engine.markov_property_check(dist, 0.05, 0.05, 2)
        assert report.passed
        assert report.semigroup_discrepancy == 0.0
        assert report.mixture_discrepancy <= 1e-12
        assert report.product_discrepancy <= 1e-12
        assert report.to_dict()['passed'] is True


@pytest.mark.slow
class TestLawOfLargeNumbers:
    N_LIST = [16, 64, 256, 1024]

    @pytest.fixture(scope="class")
    def study(self):
        params = Parameters(c_v=2.5, mu=0.05, eta=0.0, kappa=0.05)
        dist = DataDistribution(n=16, sigma=0.05, m_max=3, seed=123)
        engine = EnsembleEngine(params, solver_config=FIXED)
        return engine.slln_convergence_study(dist, 0.05, self.N_LIST, replicates=8)

    def test_error_decays_like_inverse_square_root(self, study):
        assert len(study.rows()) == len(self.N_LIST) * 8
        assert study.mean_errors[0] > study.mean_errors[-1]
        assert -0.65 <= study.slope <= -0.35

    def test_half_width_halves_when_n_quadruples(self, study):
        widths = study.mean_half_widths
        assert all(w > 0.0 for w in widths)
        for wide, narrow in zip(widths, widths[1:]):
            assert wide / narrow == pytest.approx(2.0, rel=0.3)

    def test_deterministic_reference(self, params):
        dist = DataDistribution(n=16, sigma=0.0, m_max=3)
        engine = EnsembleEngine(params, solver_config=FIXED)
        study = engine.slln_convergence_study(dist, 0.05, [1, 2], replicates=2)
        assert max(max(row) for row in study.errors) <= 1e-12

"""
Monte Carlo push-forward estimation with blow-up censoring

Members are independent tasks run through joblib; results come back in
member order and every reduction is order independent (exactly rounded
sums for scalars, member-sorted sums for fields), so estimates do not
depend on the worker count.
"""
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from ...models import (
    DataDistribution,
    EnsembleEstimate,
    ExtendedState,
    Forcing,
    Grid,
    MarkovReport,
    MetricConfig,
    Parameters,
    ProductEstimate,
    SLLNStudy,
    SolverConfig,
    State,
    StoppingConfig,
    StoppingRecord,
    StopReason,
)
from ...utils.logging_utils import setup_logger
from ..metric import Observable, censored_moment_map, make_observable, state_functionals
from ..semigroup import ExtendedSemigroup
from .empirical_measure import EmpiricalMeasure
from .sampling import sample_initial_data

Z_95 = 1.96
REFERENCE_STREAM = 65535


@dataclass
class MemberTask:
    """One member: initial point plus the (params, forcing) it evolves under"""
    member: int
    point: ExtendedState
    params: Parameters
    forcing: Optional[Forcing] = None


@dataclass
class MemberOutcome:
    member: int
    points: List[ExtendedState]
    record: StoppingRecord
    error: Optional[str] = None


def run_member(task: MemberTask, grid: Grid, times: Sequence[float],
               solver_config: Optional[SolverConfig], stopping: Optional[StoppingConfig]) -> MemberOutcome:
    """Evolve one member; any failure absorbs it instead of aborting the ensemble"""
    try:
        semigroup = ExtendedSemigroup(grid, task.params, task.forcing, solver_config, stopping)
        result = semigroup.run_extended(task.point, times)
        return MemberOutcome(task.member, result.points, result.record)
    except Exception as e:
        return MemberOutcome(
            task.member,
            [ExtendedState.infinity()] * len(times),
            StoppingRecord(t_stop=0.0, reason=StopReason.NON_FINITE),
            error=f"{type(e).__name__}: {e}",
        )


def replicate_seed(seed: int, replicate: int) -> int:
    return int(np.random.SeedSequence([seed, replicate]).generate_state(1, dtype=np.uint64)[0])


def sorted_sum(arrays: np.ndarray) -> np.ndarray:
    """Sum over the leading (member) axis after sorting it elementwise"""
    if arrays.shape[0] == 0:
        return np.zeros(arrays.shape[1:])
    return np.sum(np.sort(arrays, axis=0), axis=0)


def bitwise_equal(a: ExtendedState, b: ExtendedState) -> bool:
    if a.is_infinity or b.is_infinity:
        return a.is_infinity and b.is_infinity
    return a.grid == b.grid and np.array_equal(a.state.to_array(), b.state.to_array())


def weighted_half_width(values: Sequence[float], weights: np.ndarray) -> float:
    """1.96 sqrt(N/(N-1) sum w^2 (F - mean)^2); 1.96 std/sqrt(N) for uniform weights"""
    count = len(values)
    if count < 2:
        return 0.0
    mean = math.fsum(w * v for w, v in zip(weights, values))
    spread = math.fsum(w * w * (v - mean) ** 2 for w, v in zip(weights, values))
    return Z_95 * math.sqrt(count / (count - 1) * spread)


class EnsembleEngine:
    """
    Runs ensembles of extended trajectories and reduces them to estimates
    """

    def __init__(
        self,
        params: Parameters,
        forcing: Optional[Forcing] = None,
        solver_config: Optional[SolverConfig] = None,
        stopping: Optional[StoppingConfig] = None,
        metric: Optional[MetricConfig] = None,
        observables: Optional[List[Observable]] = None,
        workers: int = 1,
        moment_cutoff: Optional[float] = None,
    ):
        """
        Initialize ensemble engine

        Args:
            params: Parameters of every member unless a task overrides them
            forcing: Forcing shared by the members; zero when omitted
            solver_config: Time stepping controls
            stopping: Stopping threshold and numerical floors
            metric: Metric settings, used for the Sobolev exponent
            observables: Observables averaged at every query time
            workers: joblib worker count
            moment_cutoff: Optional G_n level applied to the censored moments
        """
        self.params = params
        self.forcing = forcing
        self.solver_config = solver_config or SolverConfig()
        self.stopping = stopping or StoppingConfig()
        self.metric = metric or MetricConfig()
        self.observables = observables if observables is not None else self.default_observables(params)
        self.workers = max(1, int(workers))
        self.moment_cutoff = moment_cutoff
        self.logger = setup_logger("EnsembleEngine")

    @staticmethod
    def default_observables(params: Parameters) -> List[Observable]:
        return [
            make_observable('cutoff_G_n', n=10.0, functional='mass', c_v=params.c_v),
            make_observable('cutoff_G_n', n=10.0, functional='energy', c_v=params.c_v),
            make_observable('windowed_moment', component=1, window=1.0),
        ]

    # ------------------------------------------------------------------
    # member runs
    # ------------------------------------------------------------------

    def run_members(self, tasks: Sequence[MemberTask], grid: Grid,
                    times: Sequence[float]) -> List[MemberOutcome]:
        """Evolve every task; outcomes are returned in task order"""
        self.logger.info(f"Running {len(tasks)} members on {self.workers} worker(s)")
        outcomes = Parallel(n_jobs=self.workers)(
            delayed(run_member)(task, grid, list(times), self.solver_config, self.stopping)
            for task in tasks
        )
        for outcome in outcomes:
            if outcome.error is not None:
                self.logger.warning(f"Member {outcome.member} failed and is absorbed: {outcome.error}")
        return list(outcomes)

    def tasks_for(self, states: Sequence[State], params: Optional[Parameters] = None,
                  forcing: Optional[Forcing] = None, start: int = 0) -> List[MemberTask]:
        params = params or self.params
        forcing = forcing if forcing is not None else self.forcing
        return [MemberTask(start + i, ExtendedState(s), params, forcing) for i, s in enumerate(states)]

    # ------------------------------------------------------------------
    # reductions
    # ------------------------------------------------------------------

    def reduce(self, outcomes: Sequence[MemberOutcome], grid: Grid, times: Sequence[float],
               weights: Optional[np.ndarray] = None, c_v: Optional[float] = None) -> EnsembleEstimate:
        """
        Reduce member outcomes to an estimate

        Args:
            outcomes: Member outcomes, each with one point per query time
            grid: Grid of the moment fields
            times: Query times
            weights: Member weights summing to one; uniform when omitted
            c_v: Heat capacity for the entropy moment
        """
        count = len(outcomes)
        c_v = self.params.c_v if c_v is None else c_v
        weights = np.full(count, 1.0 / count) if weights is None else np.asarray(weights, dtype=float)
        estimate = EnsembleEstimate(N=count, times=[float(t) for t in times])
        estimate.records = [o.record for o in outcomes]
        estimate.failures = [o.member for o in outcomes if o.error is not None]
        for observable in self.observables:
            estimate.observable_means[observable.name] = []
            estimate.censored_means[observable.name] = []
            estimate.half_widths[observable.name] = []
        for name in ('mass', 'energy', 'entropy'):
            estimate.functional_means[name] = []

        for i in range(len(times)):
            points = [o.points[i] for o in outcomes]
            alive = [p.is_regular for p in points]
            estimate.blowup_fraction.append(math.fsum(w for w, a in zip(weights, alive) if not a))
            measure = EmpiricalMeasure(points, weights)
            estimate.measures.append(measure)

            fields = np.stack([
                w * censored_moment_map(p, grid, c_v, self.moment_cutoff, self.metric.q)
                for w, p in zip(weights, points)
            ])
            estimate.moments.append(sorted_sum(fields))

            for observable in self.observables:
                values = [observable(p) for p in points]
                estimate.observable_means[observable.name].append(
                    math.fsum(w * v for w, v in zip(weights, values))
                )
                estimate.censored_means[observable.name].append(
                    math.fsum(w * v for w, v, a in zip(weights, values, alive) if a)
                )
                estimate.half_widths[observable.name].append(weighted_half_width(values, weights))

            functionals = [state_functionals(p.state, c_v) for p, a in zip(points, alive) if a]
            alive_weights = [w for w, a in zip(weights, alive) if a]
            for name in ('mass', 'energy', 'entropy'):
                estimate.functional_means[name].append(
                    math.fsum(w * f[name] for w, f in zip(alive_weights, functionals))
                )
        return estimate

    # ------------------------------------------------------------------
    # estimates
    # ------------------------------------------------------------------

    def pushforward_estimate(self, dist: DataDistribution, times: Sequence[float], N: int) -> EnsembleEstimate:
        """
        Estimate M_t(V) at every query time from N i.i.d. members

        Raises:
            ValueError: If the times are not sorted and non-negative
        """
        times = _check_times(times)
        states = sample_initial_data(dist, N)
        outcomes = self.run_members(self.tasks_for(states), dist.grid, times)
        estimate = self.reduce(outcomes, dist.grid, times)
        self.logger.info(
            f"Ensemble of {N}: blow-up fraction {estimate.blowup_fraction[-1]:.3f} at t={times[-1]}"
        )
        return estimate

    def mixture_estimate(self, dist_a: DataDistribution, dist_b: DataDistribution, lam: float,
                         times: Sequence[float], N: int) -> EnsembleEstimate:
        """
        Estimate for lam * V_a + (1 - lam) * V_b as one weighted ensemble

        Members reuse each distribution's own seeds, so atom i of either
        half is the member i of the separate estimate.
        """
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"Mixture weight must lie in [0, 1], got {lam}")
        times = _check_times(times)
        states = sample_initial_data(dist_a, N) + sample_initial_data(dist_b, N)
        tasks = self.tasks_for(states)
        weights = np.concatenate([np.full(N, lam / N), np.full(N, (1.0 - lam) / N)])
        outcomes = self.run_members(tasks, dist_a.grid, times)
        return self.reduce(outcomes, dist_a.grid, times, weights)

    def pushforward_product_estimate(self, dist: DataDistribution,
                                     atoms: Sequence[Tuple[Parameters, Optional[Forcing], float]],
                                     times: Sequence[float], N: int) -> ProductEstimate:
        """
        Product measure Pi_X V x Pi_{F x P} V with finitely many parameter atoms

        Each atom is estimated on the same data samples (disintegration);
        the aggregate is the weight-combination of the atom estimates.
        """
        times = _check_times(times)
        weights = [float(a[2]) for a in atoms]
        if any(w < 0.0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"Atom weights must be non-negative and sum to one, got {weights}")
        states = sample_initial_data(dist, N)
        per_atom = []
        for params, forcing, _ in atoms:
            outcomes = self.run_members(self.tasks_for(states, params, forcing), dist.grid, times)
            per_atom.append(self.reduce(outcomes, dist.grid, times, c_v=params.c_v))
        return combine_atoms(weights, per_atom)

    # ------------------------------------------------------------------
    # studies
    # ------------------------------------------------------------------

    def _censored_density(self, dist: DataDistribution, t: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """Per-member censored rho at t and its cos(pi x_1) moment"""
        grid = dist.grid
        states = sample_initial_data(dist, count)
        outcomes = self.run_members(self.tasks_for(states), grid, [t])
        fields = np.stack([
            o.points[0].state.rho.values if o.points[0].is_regular else np.zeros(grid.shape)
            for o in outcomes
        ])
        weight = np.cos(np.pi * grid.mesh[0]) * grid.cell_volume
        scalars = np.array([float(np.sum(f * weight)) for f in fields])
        return fields, scalars

    def slln_convergence_study(self, dist: DataDistribution, t: float, N_list: Sequence[int],
                               replicates: int = 8, N_ref: Optional[int] = None) -> SLLNStudy:
        """
        L1 distance of the censored density moment to a reference, per N

        Every replicate draws max(N_list) members once and evaluates nested
        prefixes. The reference uses 8 max(N_list) members from an
        independent stream, or the deterministic solution when sigma = 0.
        """
        N_list = [int(n) for n in N_list]
        if N_list != sorted(N_list) or N_list[0] < 1:
            raise ValueError(f"N_list must be increasing and positive, got {N_list}")
        grid = dist.grid
        largest = N_list[-1]
        if dist.sigma == 0.0:
            base = State.constant(grid, dist.rho_bar, dist.theta_bar)
            point = ExtendedSemigroup(grid, self.params, self.forcing, self.solver_config,
                                      self.stopping).evolve(base, t)
            reference = point.state.rho.values if point.is_regular else np.zeros(grid.shape)
        else:
            N_ref = N_ref or 8 * largest
            ref_dist = replace(dist, seed=replicate_seed(dist.seed, REFERENCE_STREAM))
            fields, _ = self._censored_density(ref_dist, t, N_ref)
            reference = sorted_sum(fields) / N_ref

        study = SLLNStudy(time=float(t), N_list=N_list)
        rows_error = [[] for _ in N_list]
        rows_width = [[] for _ in N_list]
        for replicate in range(replicates):
            rep_dist = replace(dist, seed=replicate_seed(dist.seed, replicate))
            fields, scalars = self._censored_density(rep_dist, t, largest)
            for k, n in enumerate(N_list):
                mean = sorted_sum(fields[:n]) / n
                rows_error[k].append(float(np.sum(np.abs(mean - reference)) * grid.cell_volume))
                rows_width[k].append(weighted_half_width(list(scalars[:n]), np.full(n, 1.0 / n)))
            self.logger.info(f"SLLN replicate {replicate + 1}/{replicates} done")
        study.errors = rows_error
        study.half_widths = rows_width
        self.logger.info(f"SLLN slope {study.slope:.3f} over N={N_list}")
        return study

    def markov_property_check(
        self,
        dist: DataDistribution,
        s: float,
        t: float,
        N: int,
        lam: float = 0.5,
        dist_b: Optional[DataDistribution] = None,
        atoms: Optional[Sequence[Tuple[Parameters, Optional[Forcing], float]]] = None,
    ) -> MarkovReport:
        """
        Check the Markov-operator identities on a sampled ensemble

        (i) per-member semigroup identity, (ii) M_0 = identity,
        (iii) convex mixtures with matched seeds, (iv) the product form over
        finitely many parameter atoms.
        """
        if not self.solver_config.fixed_dt:
            self.logger.warning("Markov identities are exact only with fixed_dt stepping")
        grid = dist.grid
        report = MarkovReport()
        states = sample_initial_data(dist, N)

        # (i) semigroup, member by member
        pairs = Parallel(n_jobs=self.workers)(
            delayed(_semigroup_member)(state, grid, self.params, self.forcing,
                                       self.solver_config, self.stopping, self.metric, s, t)
            for state in states
        )
        report.semigroup_bitwise = all(p[0] for p in pairs)
        report.semigroup_discrepancy = max(p[1] for p in pairs)

        # (ii) M_0 is the identity
        initial = self.run_members(self.tasks_for(states), grid, [0.0])
        report.identity_bitwise = all(
            bitwise_equal(o.points[0], ExtendedState(st)) for o, st in zip(initial, states)
        )

        # (iii) convex mixture against separately run halves
        dist_b = dist_b or replace(dist, sigma=2.0 * dist.sigma, seed=replicate_seed(dist.seed, 1))
        horizon = [s + t]
        separate_a = self.run_members(self.tasks_for(states), grid, horizon)
        states_b = sample_initial_data(dist_b, N)
        separate_b = self.run_members(self.tasks_for(states_b), grid, horizon)
        estimate_a = self.reduce(separate_a, grid, horizon)
        estimate_b = self.reduce(separate_b, grid, horizon)
        mixture = self.mixture_estimate(dist, dist_b, lam, horizon, N)
        joint_points = mixture.measures[0].atoms
        report.mixture_atoms_bitwise = all(
            bitwise_equal(a, o.points[0]) for a, o in zip(joint_points, separate_a + separate_b)
        )
        report.mixture_discrepancy = max(
            abs(mixture.observable_means[name][0]
                - (lam * estimate_a.observable_means[name][0] + (1.0 - lam) * estimate_b.observable_means[name][0]))
            for name in mixture.observable_means
        )

        # (iv) product form over parameter atoms
        atoms = list(atoms) if atoms else [
            (self.params, self.forcing, 0.5),
            (replace(self.params, kappa=2.0 * self.params.kappa), self.forcing, 0.5),
        ]
        product = self.pushforward_product_estimate(dist, atoms, horizon, N)
        joint_tasks, joint_weights = [], []
        for j, (params, forcing, weight) in enumerate(atoms):
            joint_tasks.extend(self.tasks_for(states, params, forcing, start=j * N))
            joint_weights.extend([weight / N] * N)
        joint = self.run_members(joint_tasks, grid, horizon)
        report.product_atoms_bitwise = all(
            bitwise_equal(joint[j * N + i].points[0], product.per_atom[j].measures[0].atoms[i])
            for j in range(len(atoms)) for i in range(N)
        )
        joint_measure = EmpiricalMeasure([o.points[0] for o in joint], np.array(joint_weights))
        report.product_discrepancy = max(
            abs(joint_measure.integrate(obs) - product.observable_means[obs.name][0])
            for obs in self.observables
        )
        report.details = {
            's': s, 't': t, 'N': N, 'lambda': lam,
            'atom_weights': [float(a[2]) for a in atoms],
            'blowup_fraction_mixture': mixture.blowup_fraction[0],
            'blowup_fraction_product': product.blowup_fraction[0],
        }
        self.logger.info(f"Markov check passed={report.passed}")
        return report


def _semigroup_member(state: State, grid: Grid, params: Parameters, forcing: Optional[Forcing],
                      solver_config: SolverConfig, stopping: StoppingConfig, metric: MetricConfig,
                      s: float, t: float) -> Tuple[bool, float]:
    semigroup = ExtendedSemigroup(grid, params, forcing, solver_config, stopping, metric)
    direct, composed = semigroup.semigroup_pair(state, s, t)
    return bitwise_equal(direct, composed), semigroup.metric.distance(direct, composed)


def combine_atoms(weights: Sequence[float], per_atom: Sequence[EnsembleEstimate]) -> ProductEstimate:
    """Weight-combination of per-atom estimates with the disintegrated blow-up fraction"""
    product = ProductEstimate(weights=list(weights), per_atom=list(per_atom))
    times = per_atom[0].times
    for i in range(len(times)):
        product.blowup_fraction.append(
            math.fsum(w * e.blowup_fraction[i] for w, e in zip(weights, per_atom))
        )
        product.moments.append(sum(w * e.moments[i] for w, e in zip(weights, per_atom)))
    for name in per_atom[0].observable_means:
        product.observable_means[name] = [
            math.fsum(w * e.observable_means[name][i] for w, e in zip(weights, per_atom))
            for i in range(len(times))
        ]
    return product


def _check_times(times: Sequence[float]) -> List[float]:
    times = [float(t) for t in times]
    if not times or any(t < 0.0 for t in times) or times != sorted(times):
        raise ValueError(f"Query times must be sorted and non-negative, got {times}")
    return times


def pushforward_estimate(dist: DataDistribution, params: Parameters, times: Sequence[float], N: int,
                         forcing: Optional[Forcing] = None, stopping: Optional[StoppingConfig] = None,
                         solver_config: Optional[SolverConfig] = None, **kwargs) -> EnsembleEstimate:
    engine = EnsembleEngine(params, forcing, solver_config, stopping, **kwargs)
    return engine.pushforward_estimate(dist, times, N)


def observable_table(estimate: EnsembleEstimate) -> List[Dict[str, float]]:
    """Long-format rows (time, observable, mean, censored_mean, half_width)"""
    rows = []
    for name in estimate.observable_means:
        for i, time in enumerate(estimate.times):
            rows.append({
                'time': time,
                'observable': name,
                'mean': estimate.observable_means[name][i],
                'censored_mean': estimate.censored_means[name][i],
                'half_width': estimate.half_widths[name][i],
                'blowup_fraction': estimate.blowup_fraction[i],
            })
    return rows

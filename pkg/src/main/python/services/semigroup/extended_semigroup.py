"""
Solution operator on X+ plus U_inf

A regular state evolves with the solver until the stopping time T_M, the
first recorded time at which sup(rho + theta) reaches M or a numerical
proxy for leaving X+ fires. From T_M on the trajectory is absorbed into
U_inf, which never leaves.
"""
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ...core.exceptions import NSFError, StiffnessBreakdown
from ...models import (
    ExtendedState,
    Forcing,
    Grid,
    MetricConfig,
    Parameters,
    SolverConfig,
    State,
    StoppingConfig,
    StoppingRecord,
    StopReason,
    Trajectory,
)
from ...utils.logging_utils import setup_logger
from ..metric import PhaseMetric
from ..solver import NSFSolver

Point = Union[ExtendedState, State]


def _as_point(point: Point) -> ExtendedState:
    return point if isinstance(point, ExtendedState) else ExtendedState(point)


def trigger(state: State, config: StoppingConfig) -> Optional[Tuple[StopReason, float, Optional[Tuple[int, ...]]]]:
    """(reason, peak value, grid location) of the first stopping condition met by a state"""
    if not state.is_finite():
        return StopReason.NON_FINITE, math.nan, None
    total = state.rho.values + state.theta.values
    peak = float(total.max())
    if peak >= config.M:
        return StopReason.THRESHOLD_M, peak, tuple(int(i) for i in np.unravel_index(np.argmax(total), total.shape))
    for values, floor in ((state.rho.values, config.rho_floor), (state.theta.values, config.theta_floor)):
        if values.min() < floor:
            location = tuple(int(i) for i in np.unravel_index(np.argmin(values), values.shape))
            return StopReason.POSITIVITY_LOSS, peak, location
    return None


def stopping_time(trajectory: Trajectory, config: StoppingConfig) -> StoppingRecord:
    """
    Stopping record of a solver trajectory

    The trigger at record i is bracketed by (t_{i-1}, t_i]; the earlier
    time is reported so censoring never keeps a state past T_M. A trigger
    at the first record gives t_stop = 0. A stiffness breakdown without
    an earlier trigger stops at the last recorded time.
    """
    for i, (time, state) in enumerate(trajectory.items()):
        found = trigger(state, config)
        if found is not None:
            reason, peak, location = found
            t_stop = trajectory.times[i - 1] if i > 0 else 0.0
            return StoppingRecord(t_stop=t_stop, reason=reason, peak_value=peak, location=location)
    if trajectory.termination == StopReason.STIFFNESS.value and trajectory.times:
        return StoppingRecord(
            t_stop=trajectory.final_time,
            reason=StopReason.STIFFNESS,
            peak_value=trajectory.final_state.max_rho_plus_theta(),
        )
    return StoppingRecord()


@dataclass
class ExtendedTrajectory:
    """ExtendedStates at the query times of one run, with its stopping record"""
    times: List[float]
    points: List[ExtendedState]
    record: StoppingRecord
    trajectory: Optional[Trajectory] = None

    def at(self, time: float) -> ExtendedState:
        for t, point in zip(self.times, self.points):
            if t == time:
                return point
        raise KeyError(f"Time {time} was not queried")

    def alive(self) -> List[bool]:
        return [p.is_regular for p in self.points]


@dataclass
class StabilityReport:
    """Sup-norm differences of perturbed runs at one time"""
    time: float
    deltas: List[float] = field(default_factory=list)
    differences: List[float] = field(default_factory=list)

    @property
    def fitted_order(self) -> float:
        """Least-squares slope of log(difference) against log(delta)"""
        pairs = [(d, e) for d, e in zip(self.deltas, self.differences)
                 if d > 0.0 and 0.0 < e < math.inf]
        if len(pairs) < 2:
            return math.nan
        x = np.log([p[0] for p in pairs])
        y = np.log([p[1] for p in pairs])
        return float(np.polyfit(x, y, 1)[0])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'delta': self.deltas,
            'sup_difference': self.differences,
            'time': [self.time] * len(self.deltas),
        })


def default_perturbation(grid: Grid) -> np.ndarray:
    """Smooth unit-size profile for every component, stacked like State.to_array()"""
    phase = np.pi * sum(grid.mesh)
    rows = [np.cos(phase), 0.5 * np.sin(phase)]
    rows.extend(0.25 * np.cos(np.pi * grid.mesh[a] + 0.5) for a in range(grid.dim))
    return np.stack(rows)


class ExtendedSemigroup:
    """
    Extended solution operator for one (params, forcing) pair
    """

    def __init__(
        self,
        grid: Grid,
        params: Parameters,
        forcing: Optional[Forcing] = None,
        solver_config: Optional[SolverConfig] = None,
        stopping: Optional[StoppingConfig] = None,
        metric: Optional[MetricConfig] = None,
    ):
        self.grid = grid
        self.params = params
        self.stopping = stopping or StoppingConfig()
        solver_config = solver_config or SolverConfig()
        dt_min = max(solver_config.dt_min, self.stopping.dt_min)
        if dt_min < solver_config.dt_init:
            solver_config = replace(solver_config, dt_min=dt_min)
        self.solver = NSFSolver(grid, params, forcing, solver_config)
        self.metric = PhaseMetric(metric)
        self.logger = setup_logger("ExtendedSemigroup")
        # equality of query and stopping times up to the step grid counts as stopped
        self._time_tol = 1e-9 * solver_config.dt_init

    @property
    def forcing(self) -> Forcing:
        return self.solver.forcing

    def stop_condition(self, time: float, state: State) -> Optional[str]:
        found = trigger(state, self.stopping)
        return None if found is None else found[0].value

    def stopping_time(self, trajectory: Trajectory) -> StoppingRecord:
        return stopping_time(trajectory, self.stopping)

    def alive_at(self, record: StoppingRecord, time: float) -> bool:
        return time < record.t_stop - self._time_tol

    def run_extended(self, point: Point, times: Sequence[float]) -> ExtendedTrajectory:
        """
        Evolve once and report the ExtendedState at every query time

        Failures never propagate: they stop the run and absorb it.
        """
        point = _as_point(point)
        times = [float(t) for t in times]
        if any(t < 0.0 for t in times):
            raise ValueError("Query times must be non-negative")
        if point.is_infinity or not point.state.in_x_plus():
            reason = StopReason.POSITIVITY_LOSS
            if point.is_regular and not point.state.is_finite():
                reason = StopReason.NON_FINITE
            record = StoppingRecord(t_stop=0.0, reason=reason)
            return ExtendedTrajectory(times, [ExtendedState.infinity()] * len(times), record)
        if point.grid != self.grid:
            raise ValueError(f"State grid {point.grid} differs from semigroup grid {self.grid}")

        t_end = max(times) if times else 0.0
        try:
            trajectory = self.solver.solve(
                point.state, t_end, output_times=times, stop_check=self.stop_condition
            )
        except StiffnessBreakdown as e:
            self.logger.info(f"Stiffness breakdown absorbs the run: {e}")
            trajectory = e.trajectory
        except NSFError as e:
            self.logger.warning(f"Solver failure absorbs the run at t=0: {e}")
            return ExtendedTrajectory(
                times, [ExtendedState.infinity()] * len(times),
                StoppingRecord(t_stop=0.0, reason=StopReason.NON_FINITE),
            )

        record = self.stopping_time(trajectory)
        if record.stopped:
            self.logger.info(
                f"Stopped by {record.reason.value} with t_stop={record.t_stop:.6g} "
                f"(peak {record.peak_value:.6g})"
            )
        points = []
        for t in times:
            if t == 0.0:
                points.append(point)
                continue
            state = trajectory.state_at(t) if self.alive_at(record, t) else None
            points.append(ExtendedState(state) if state is not None else ExtendedState.infinity())
        return ExtendedTrajectory(times, points, record, trajectory)

    def evolve(self, point: Point, t: float) -> ExtendedState:
        """
        Extended solution operator at time t

        U_inf is absorbing and t = 0 is the identity.
        """
        if t < 0.0:
            raise ValueError(f"Time must be non-negative, got {t}")
        point = _as_point(point)
        if point.is_infinity:
            return point
        if t == 0.0:
            return point if point.state.in_x_plus() else ExtendedState.infinity()
        return self.run_extended(point, [t]).points[0]

    def semigroup_pair(self, point: Point, s: float, t: float) -> Tuple[ExtendedState, ExtendedState]:
        """(U(s + t), U(U(s))(t)) for the semigroup identity"""
        direct = self.evolve(point, s + t)
        composed = self.evolve(self.evolve(point, s), t)
        return direct, composed

    def semigroup_check(self, point: Point, s: float, t: float) -> float:
        """Metric distance between direct and composed evolution"""
        direct, composed = self.semigroup_pair(point, s, t)
        return self.metric.distance(direct, composed)

    def stability_probe(self, point: Point, deltas: Sequence[float], t: float,
                        profile: Optional[np.ndarray] = None) -> StabilityReport:
        """
        Sup-norm difference at t between the run from U_0 and from
        U_0 + delta * profile, for each delta

        Perturbed runs absorbed before t report +inf.

        Raises:
            ValueError: If the unperturbed run is stopped before t
        """
        point = _as_point(point)
        reference = self.evolve(point, t)
        if reference.is_infinity:
            raise ValueError(f"Unperturbed run is absorbed before t={t}")
        base = point.state.to_array()
        target = reference.state.to_array()
        profile = default_perturbation(self.grid) if profile is None else np.asarray(profile, dtype=float)
        report = StabilityReport(time=float(t))
        for delta in deltas:
            perturbed = ExtendedState(State.from_array(self.grid, base + float(delta) * profile))
            result = self.evolve(perturbed, t)
            difference = math.inf if result.is_infinity else float(
                np.max(np.abs(result.state.to_array() - target))
            )
            self.logger.debug(f"delta={delta:.3g}: sup difference {difference:.6g}")
            report.deltas.append(float(delta))
            report.differences.append(difference)
        return report

    def time_continuity_profile(self, trajectory: Trajectory) -> np.ndarray:
        """Metric distance between consecutive recorded states"""
        embedded = [self.metric.embed(ExtendedState(s)) for s in trajectory.states]
        return np.array([
            self.metric.distance_embedded(a, b) for a, b in zip(embedded[:-1], embedded[1:])
        ])


def evolve_extended(point: Point, params: Parameters, forcing: Optional[Forcing], t: float,
                    solver_config: Optional[SolverConfig] = None,
                    stopping: Optional[StoppingConfig] = None) -> ExtendedState:
    point = _as_point(point)
    if point.is_infinity:
        return point
    semigroup = ExtendedSemigroup(point.grid, params, forcing, solver_config, stopping)
    return semigroup.evolve(point, t)

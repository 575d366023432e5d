"""
Pseudo-spectral solver for the compressible Navier-Stokes-Fourier system

The state is evolved in primitive variables (rho, theta, u):

    rho_t   = -div(rho u)
    u_t     = -(u.grad)u - grad(rho theta)/rho + div S/rho + g
    theta_t = -u.grad(theta) + (kappa lap(theta) + S:Du)/(c_v rho)
              - theta div(u)/c_v + Q/c_v

with S = mu (grad u + grad u^T - 2/3 div u I) + eta div u I. The theta
equation is the internal energy balance rewritten with e = c_v theta and
the continuity equation; it is exact for smooth fields.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ...core.exceptions import (
    NonFiniteField,
    NotInXPlus,
    StepRejected,
    StiffnessBreakdown,
)
from ...core.spectral import SpectralOperator
from ...models import (
    DIAGNOSTICS_COLUMNS,
    DiagnosticsRecord,
    Forcing,
    Grid,
    Parameters,
    SolverConfig,
    State,
    Trajectory,
)
from ...utils.logging_utils import setup_logger

Source = Callable[[float], np.ndarray]
StopCheck = Callable[[float, State], Optional[str]]

# RK4 stability reaches about 2.8 on the imaginary axis and 2.78 on the
# negative real axis
RK4_STABILITY = 2.5
VIOLATION_MARGIN = 0.95


class NSFSolver:
    """
    Right-hand side, RK4 stepping and diagnostics for one (params, forcing) pair
    """

    def __init__(
        self,
        grid: Grid,
        params: Parameters,
        forcing: Optional[Forcing] = None,
        config: Optional[SolverConfig] = None,
    ):
        """
        Initialize solver

        Args:
            grid: Grid shared by every state handed to the solver
            params: Constitutive parameters
            forcing: Time-independent (g, Q); zero when omitted
            config: Time stepping controls
        """
        self.grid = grid
        self.params = params
        self.forcing = forcing if forcing is not None else Forcing.zero(grid)
        if self.forcing.grid != grid:
            raise ValueError("Forcing must live on the solver grid")
        self.config = config or SolverConfig()
        self.operator = SpectralOperator(grid, dealias=self.config.dealias)
        self._g = self.forcing.g.to_array()
        self._Q = np.array(self.forcing.Q.values)
        self.logger = setup_logger("NSFSolver")

    # ------------------------------------------------------------------
    # right-hand side
    # ------------------------------------------------------------------

    def _check_admissible(self, U: np.ndarray):
        if not np.all(np.isfinite(U)):
            raise NonFiniteField("State contains NaN or infinite samples")
        if U[0].min() <= 0.0 or U[1].min() <= 0.0:
            raise NotInXPlus(
                f"State left X+: min(rho)={U[0].min():.6g}, min(theta)={U[1].min():.6g}"
            )

    def _velocity_gradient(self, u: np.ndarray) -> Tuple[List[np.ndarray], List[List[np.ndarray]]]:
        u_hat = [self.operator.fft(c) for c in u]
        grad_u = [self.operator.gradient_hat(h) for h in u_hat]
        return u_hat, grad_u

    def _dissipation(self, grad_u: List[List[np.ndarray]], div_u: np.ndarray) -> np.ndarray:
        """S(Du):Du = 2 mu |D|^2 - 2/3 mu (div u)^2 + eta (div u)^2"""
        dim = self.grid.dim
        strain = np.zeros(self.grid.shape)
        for i in range(dim):
            for j in range(dim):
                strain = strain + (0.5 * (grad_u[i][j] + grad_u[j][i])) ** 2
        mu, eta = self.params.mu, self.params.eta
        return 2.0 * mu * strain + (eta - 2.0 * mu / 3.0) * div_u ** 2

    def tangent(self, U: np.ndarray, time: float = 0.0, source: Optional[Source] = None) -> np.ndarray:
        """
        Time derivative of a stacked state array (rho, theta, u_1..u_dim)

        Raises:
            NonFiniteField: If U has non-finite samples
            NotInXPlus: If rho or theta is not strictly positive
        """
        self._check_admissible(U)
        op, project, p = self.operator, self.operator.project, self.params
        dim = self.grid.dim
        rho, theta, u = U[0], U[1], U[2:]

        u_hat, grad_u = self._velocity_gradient(u)
        div_u = sum(grad_u[i][i] for i in range(dim))
        theta_hat = op.fft(theta)
        grad_theta = op.gradient_hat(theta_hat)
        inv_rho = 1.0 / rho

        result = np.empty_like(U)
        result[0] = -op.divergence([project(rho * c) for c in u])

        grad_pressure = op.gradient(project(rho * theta))
        grad_div = op.gradient(div_u)
        for i in range(dim):
            advection = project(sum(u[j] * grad_u[i][j] for j in range(dim)))
            stress = p.mu * op.laplacian_hat(u_hat[i]) + p.bulk_coefficient * grad_div[i]
            result[2 + i] = -advection + project(inv_rho * (stress - grad_pressure[i])) + self._g[i]

        heating = project(self._dissipation(grad_u, div_u))
        conduction = p.kappa * op.laplacian_hat(theta_hat)
        transport = project(sum(u[j] * grad_theta[j] for j in range(dim)))
        result[1] = (
            -transport
            + project(inv_rho * (conduction + heating)) / p.c_v
            - project(theta * div_u) / p.c_v
            + self._Q / p.c_v
        )

        if source is not None:
            result = result + np.asarray(source(time), dtype=float)
        return result

    def rhs(self, state: State, time: float = 0.0, source: Optional[Source] = None) -> State:
        """Tangent (d rho/dt, d theta/dt, du/dt) packed as a State-shaped object"""
        self._require_grid(state)
        return State.from_array(self.grid, self.tangent(state.to_array(), time, source))

    def _require_grid(self, state: State):
        if state.grid != self.grid:
            raise ValueError(f"State grid {state.grid} differs from solver grid {self.grid}")

    # ------------------------------------------------------------------
    # time stepping
    # ------------------------------------------------------------------

    def _rk4(self, U: np.ndarray, time: float, dt: float, source: Optional[Source]) -> np.ndarray:
        try:
            k1 = self.tangent(U, time, source)
            k2 = self.tangent(U + 0.5 * dt * k1, time + 0.5 * dt, source)
            k3 = self.tangent(U + 0.5 * dt * k2, time + 0.5 * dt, source)
            k4 = self.tangent(U + dt * k3, time + dt, source)
        except (NotInXPlus, NonFiniteField) as e:
            raise StepRejected(f"Stage left X+ at t={time:.6g}, dt={dt:.3g}: {e}")
        result = U + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(result)) or result[0].min() <= 0.0 or result[1].min() <= 0.0:
            raise StepRejected(f"Step from t={time:.6g} with dt={dt:.3g} left X+")
        return result

    def step_array(self, U: np.ndarray, dt: float, time: float = 0.0,
                   source: Optional[Source] = None) -> np.ndarray:
        self._check_admissible(U)
        if dt == 0.0:
            return np.array(U)
        return self._rk4(U, time, dt, source)

    def step(self, state: State, dt: float, time: float = 0.0,
             source: Optional[Source] = None) -> State:
        """
        One classical Runge-Kutta step

        Raises:
            NotInXPlus: If the input state is outside X+
            StepRejected: If any stage leaves X+ (callers halve dt)
        """
        self._require_grid(state)
        if dt < 0.0:
            raise ValueError(f"Time step must be non-negative, got {dt}")
        if dt == 0.0:
            if not state.in_x_plus():
                raise NotInXPlus("Cannot step a state outside X+")
            return state
        return State.from_array(self.grid, self.step_array(state.to_array(), dt, time, source))

    def stable_dt(self, U: np.ndarray) -> float:
        """Step size from the advective/acoustic and viscous limits, capped by dt_init"""
        p, grid = self.params, self.grid
        dx = grid.spacing
        speed = float(np.max(np.sqrt(np.sum(U[2:] ** 2, axis=0))))
        sound = float(np.max(np.sqrt(U[1] * (1.0 + 1.0 / p.c_v))))
        dt_adv = RK4_STABILITY * dx / (np.pi * math.sqrt(grid.dim) * (speed + sound))
        rho_min = float(U[0].min())
        nu = max((4.0 * p.mu / 3.0 + p.eta) / rho_min, p.kappa / (p.c_v * rho_min))
        dt_visc = RK4_STABILITY / (nu * grid.dim * (np.pi / dx) ** 2)
        return min(self.config.dt_init, self.config.cfl * min(dt_adv, dt_visc))

    # ------------------------------------------------------------------
    # diagnostics
    # ------------------------------------------------------------------

    def _functionals(self, U: np.ndarray) -> Tuple[float, float, float]:
        rho, theta, u = U[0], U[1], U[2:]
        c_v, volume = self.params.c_v, self.grid.cell_volume
        mass = float(np.sum(rho) * volume)
        energy = float(np.sum(0.5 * rho * np.sum(u ** 2, axis=0) + c_v * rho * theta) * volume)
        entropy = float(np.sum(rho * (c_v * np.log(theta) - np.log(rho))) * volume)
        return mass, energy, entropy

    def _production_rate(self, U: np.ndarray) -> Tuple[float, float]:
        """Entropy production rate and sup |div u|"""
        dim = self.grid.dim
        theta = U[1]
        _, grad_u = self._velocity_gradient(U[2:])
        div_u = sum(grad_u[i][i] for i in range(dim))
        grad_theta = self.operator.gradient(theta)
        conduction = self.params.kappa * sum(g ** 2 for g in grad_theta) / theta
        integrand = (self._dissipation(grad_u, div_u) + conduction) / theta
        rate = float(np.sum(integrand) * self.grid.cell_volume)
        if rate < -1e-10:
            self.logger.warning(f"Negative entropy production {rate:.3e} beyond round-off")
        return rate, float(np.max(np.abs(div_u)))

    def diagnostics(self, state: State) -> Tuple[float, float, float]:
        """
        (mass, energy, entropy) of a state

        Raises:
            NotInXPlus: If rho or theta is not strictly positive
        """
        self._require_grid(state)
        U = state.to_array()
        self._check_admissible(U)
        return self._functionals(U)

    def entropy_production_rate(self, state: State) -> float:
        self._require_grid(state)
        U = state.to_array()
        self._check_admissible(U)
        return self._production_rate(U)[0]

    def _record(self, time: float, U: np.ndarray, dt: float, production: float,
                rate: float, max_div: float, div_integral: float) -> DiagnosticsRecord:
        mass, energy, entropy = self._functionals(U)
        return DiagnosticsRecord(
            time=time,
            total_mass=mass,
            total_energy=energy,
            entropy=entropy,
            entropy_production_integral=production,
            min_rho=float(U[0].min()),
            min_theta=float(U[1].min()),
            max_rho_plus_theta=float(np.max(U[0] + U[1])),
            production_rate=rate,
            max_div_u=max_div,
            div_integral=div_integral,
            dt=dt,
        )

    # ------------------------------------------------------------------
    # solve
    # ------------------------------------------------------------------

    def solve(
        self,
        state0: State,
        t_end: float,
        output_times: Optional[Sequence[float]] = None,
        stop_check: Optional[StopCheck] = None,
        source: Optional[Source] = None,
    ) -> Trajectory:
        """
        Integrate from t = 0 to t_end

        Args:
            state0: Initial state in X+
            t_end: Final time
            output_times: Times that must be hit exactly and recorded
            stop_check: Called on every accepted state; a non-None return
                value ends the run and becomes the trajectory termination
            source: Optional additive tangent source(time)

        Returns:
            Trajectory with diagnostics at every recorded state

        Raises:
            NotInXPlus: If state0 is outside X+
            StiffnessBreakdown: If the step size drops below dt_min; the
                partial trajectory is attached
        """
        self._require_grid(state0)
        if t_end < 0.0:
            raise ValueError(f"t_end must be non-negative, got {t_end}")
        U = state0.to_array()
        self._check_admissible(U)

        targets = sorted({float(t) for t in (output_times or []) if 0.0 < t < t_end} | {float(t_end)})
        trajectory = Trajectory(t_end=float(t_end))
        run = _RunState(U=U, rate=self._production_rate(U))
        trajectory.append(0.0, state0, self._record(0.0, U, 0.0, 0.0, *run.rate, 0.0))

        reason = stop_check(0.0, state0) if stop_check else None
        if reason is not None:
            trajectory.termination = reason
            return trajectory
        if t_end == 0.0:
            return trajectory

        self.logger.debug(
            f"Solving to t={t_end} ({'fixed' if self.config.fixed_dt else 'adaptive'} dt)"
        )
        if self.config.fixed_dt:
            self._solve_fixed(run, trajectory, targets, stop_check, source)
        else:
            self._solve_adaptive(run, trajectory, targets, stop_check, source)
        return trajectory

    def _accept(self, run: '_RunState', trajectory: Trajectory, time: float, U: np.ndarray,
                dt: float, force_record: bool, stop_check: Optional[StopCheck]) -> bool:
        """Book-keep an accepted step; returns True when the run must stop"""
        previous = (run.time, run.U, run.last_dt, run.record_args())
        rate = self._production_rate(U)
        run.production += 0.5 * dt * (run.rate[0] + rate[0])
        run.div_integral += 0.5 * dt * (run.rate[1] + rate[1])
        run.rate, run.U, run.time, run.last_dt = rate, U, time, dt
        trajectory.steps += 1

        state = None
        record = force_record or trajectory.steps % self.config.record_stride == 0
        reason = None
        if stop_check is not None:
            state = State.from_array(self.grid, U)
            reason = stop_check(time, state)
            if reason is not None and not record and trajectory.times[-1] < previous[0]:
                # keep the last state before the trigger so censoring stays tight
                p_time, p_U, p_dt, p_args = previous
                trajectory.append(
                    p_time, State.from_array(self.grid, p_U), self._record(p_time, p_U, p_dt, *p_args)
                )
        if record or reason is not None:
            state = state or State.from_array(self.grid, U)
            trajectory.append(time, state, self._record(time, U, dt, *run.record_args()))
        if reason is not None:
            trajectory.termination = reason
            self.logger.debug(f"Stop condition {reason} at t={time:.6g}")
            return True
        return False

    def _breakdown(self, trajectory: Trajectory, run: '_RunState', dt: float):
        trajectory.termination = "Stiffness"
        if trajectory.times[-1] < run.time:
            trajectory.append(
                run.time, State.from_array(self.grid, run.U),
                self._record(run.time, run.U, run.last_dt, *run.record_args()),
            )
        raise StiffnessBreakdown(
            f"Time step {dt:.3g} fell below dt_min={self.config.dt_min:.3g} at t={run.time:.6g}",
            trajectory=trajectory,
        )

    def _solve_fixed(self, run: '_RunState', trajectory: Trajectory, targets: List[float],
                     stop_check: Optional[StopCheck], source: Optional[Source]):
        dt = self.config.dt_init
        t_end = targets[-1]
        full_steps = int(math.floor(t_end / dt + 1e-9))
        remainder = t_end - full_steps * dt
        if remainder <= 1e-9 * dt:
            remainder = 0.0
        aligned = {int(round(t / dt)) for t in targets if abs(t / dt - round(t / dt)) <= 1e-9}
        unaligned = [t for t in targets[:-1] if int(round(t / dt)) not in aligned]
        if unaligned:
            raise ValueError(f"Output times {unaligned} are not multiples of the fixed step {dt}")

        for index in range(1, full_steps + 1):
            U = self._fixed_substeps(run, trajectory, (index - 1) * dt, dt, source)
            time = index * dt
            if remainder == 0.0 and index == full_steps:
                time = t_end
            if self._accept(run, trajectory, time, U, dt, index in aligned, stop_check):
                return
        if remainder > 0.0:
            U = self._fixed_substeps(run, trajectory, full_steps * dt, remainder, source)
            self._accept(run, trajectory, t_end, U, remainder, True, stop_check)

    def _fixed_substeps(self, run: '_RunState', trajectory: Trajectory, time: float,
                        dt: float, source: Optional[Source]) -> np.ndarray:
        """One step of length dt, split into 2^j equal sub-steps after rejections"""
        substeps = 1
        while True:
            h = dt / substeps
            if h < self.config.dt_min:
                self._breakdown(trajectory, run, h)
            try:
                U = run.U
                for j in range(substeps):
                    U = self._rk4(U, time + j * h, h, source)
                return U
            except StepRejected as e:
                trajectory.rejected_steps += 1
                self.logger.debug(f"{e}; retrying with {2 * substeps} sub-steps")
                substeps *= 2

    def _solve_adaptive(self, run: '_RunState', trajectory: Trajectory, targets: List[float],
                        stop_check: Optional[StopCheck], source: Optional[Source]):
        cap = self.config.dt_init
        target_index = 0
        while target_index < len(targets):
            target = targets[target_index]
            natural = min(cap, self.stable_dt(run.U))
            if natural < self.config.dt_min:
                self._breakdown(trajectory, run, natural)
            remaining = target - run.time
            landing = natural + self.config.dt_min >= remaining
            dt = remaining if landing else natural
            try:
                U = self._rk4(run.U, run.time, dt, source)
            except StepRejected as e:
                trajectory.rejected_steps += 1
                cap = 0.5 * dt
                self.logger.debug(f"{e}; halving dt")
                continue
            cap = min(2.0 * cap, self.config.dt_init)
            time = target if landing else run.time + dt
            if self._accept(run, trajectory, time, U, dt, landing, stop_check):
                return
            if landing:
                target_index += 1

    # ------------------------------------------------------------------
    # monitors and linear theory
    # ------------------------------------------------------------------

    def lower_bound_monitor(self, trajectory: Trajectory) -> 'LowerBoundReport':
        return lower_bound_monitor(trajectory, self.params.c_v)


@dataclass
class _RunState:
    """Mutable integration state of one solve"""
    U: np.ndarray
    rate: Tuple[float, float]
    time: float = 0.0
    last_dt: float = 0.0
    production: float = 0.0
    div_integral: float = 0.0

    def record_args(self) -> Tuple[float, float, float, float]:
        return self.production, self.rate[0], self.rate[1], self.div_integral


@dataclass
class LowerBoundReport:
    """
    Predicted positivity floors along a trajectory

    rho_floor(t) = min rho_0 exp(-int ||div u||_inf) and
    theta_floor(t) = min theta_0 exp(-(1/c_v) int ||div u||_inf).
    """
    times: List[float] = field(default_factory=list)
    rho_floor: List[float] = field(default_factory=list)
    theta_floor: List[float] = field(default_factory=list)
    rho_min: List[float] = field(default_factory=list)
    theta_min: List[float] = field(default_factory=list)
    violations: List[bool] = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return any(self.violations)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'time': self.times,
            'rho_floor': self.rho_floor,
            'rho_min': self.rho_min,
            'theta_floor': self.theta_floor,
            'theta_min': self.theta_min,
            'violation': self.violations,
        })


def lower_bound_monitor(trajectory: Trajectory, c_v: float) -> LowerBoundReport:
    """
    Compare observed minima with the comparison-principle floors

    A violation is flagged when an observed minimum falls more than 5%
    below its floor; it is logged, never raised.
    """
    report = LowerBoundReport()
    if not trajectory.diagnostics:
        return report
    logger = setup_logger("NSFSolver")
    first = trajectory.diagnostics[0]
    for record in trajectory.diagnostics:
        rho_floor = first.min_rho * math.exp(-record.div_integral)
        theta_floor = first.min_theta * math.exp(-record.div_integral / c_v)
        violated = (
            record.min_rho < VIOLATION_MARGIN * rho_floor
            or record.min_theta < VIOLATION_MARGIN * theta_floor
        )
        if violated:
            logger.warning(
                f"Lower bound violated at t={record.time:.6g}: "
                f"min rho {record.min_rho:.6g} vs floor {rho_floor:.6g}, "
                f"min theta {record.min_theta:.6g} vs floor {theta_floor:.6g}"
            )
        report.times.append(record.time)
        report.rho_floor.append(rho_floor)
        report.theta_floor.append(theta_floor)
        report.rho_min.append(record.min_rho)
        report.theta_min.append(record.min_theta)
        report.violations.append(violated)
    return report


def linearized_modes(rho_bar: float, theta_bar: float, params: Parameters,
                     wavevector: Sequence[int]) -> np.ndarray:
    """
    Linearized operator around (rho_bar, theta_bar, 0) for one wavevector

    Acts on the amplitudes (rho_hat, theta_hat, u_hat) with u_hat the
    velocity component along the wavevector; k = pi |m|.
    """
    k = np.pi * float(np.linalg.norm(np.asarray(wavevector, dtype=float)))
    ik = 1j * k
    nu_u = (4.0 * params.mu / 3.0 + params.eta) / rho_bar
    nu_theta = params.kappa / (params.c_v * rho_bar)
    return np.array([
        [0.0, 0.0, -rho_bar * ik],
        [0.0, -nu_theta * k ** 2, -(theta_bar / params.c_v) * ik],
        [-(theta_bar / rho_bar) * ik, -ik, -nu_u * k ** 2],
    ], dtype=complex)


def linearized_evolution(matrix: np.ndarray, amplitudes: Sequence[complex], t: float) -> np.ndarray:
    """exp(A t) applied to the initial amplitudes via eigendecomposition"""
    eigenvalues, vectors = np.linalg.eig(matrix)
    weights = np.linalg.solve(vectors, np.asarray(amplitudes, dtype=complex))
    return vectors @ (np.exp(eigenvalues * t) * weights)


def write_diagnostics_csv(trajectory: Trajectory, path: Union[str, Path]) -> Path:
    """Diagnostics table in the documented column order, round-trip floats"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([r.to_row() for r in trajectory.diagnostics], columns=DIAGNOSTICS_COLUMNS)
    frame.to_csv(path, index=False, float_format='%.17g')
    return path


# Functional entry points


def rhs(state: State, params: Parameters, forcing: Optional[Forcing] = None,
        time: float = 0.0, source: Optional[Source] = None) -> State:
    return NSFSolver(state.grid, params, forcing).rhs(state, time, source)


def step(state: State, dt: float, params: Parameters, forcing: Optional[Forcing] = None,
         time: float = 0.0, source: Optional[Source] = None) -> State:
    return NSFSolver(state.grid, params, forcing).step(state, dt, time, source)


def solve(state0: State, t_end: float, params: Parameters, forcing: Optional[Forcing] = None,
          config: Optional[SolverConfig] = None, **kwargs) -> Trajectory:
    return NSFSolver(state0.grid, params, forcing, config).solve(state0, t_end, **kwargs)


def diagnostics(state: State, params: Parameters) -> Tuple[float, float, float]:
    return NSFSolver(state.grid, params).diagnostics(state)


def entropy_production_rate(state: State, params: Parameters) -> float:
    return NSFSolver(state.grid, params).entropy_production_rate(state)


def diagnostics_summary(trajectory: Trajectory) -> Dict[str, float]:
    """Relative mass and energy drift between first and last record"""
    first, last = trajectory.diagnostics[0], trajectory.diagnostics[-1]
    return {
        'mass_drift': abs(last.total_mass - first.total_mass) / abs(first.total_mass),
        'energy_drift': abs(last.total_energy - first.total_energy) / abs(first.total_energy),
        'entropy_change': last.entropy - first.entropy,
        'production_integral': last.entropy_production_integral,
    }

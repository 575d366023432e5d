"""
Trajectory and diagnostics records produced by the solver
"""
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .fields import State


DIAGNOSTICS_COLUMNS = [
    'time', 'mass', 'energy', 'entropy', 'production_integral',
    'min_rho', 'min_theta', 'max_rho_plus_theta', 'dt',
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """
    Conservation and entropy functionals of one recorded state
    """
    time: float
    total_mass: float
    total_energy: float
    entropy: float
    entropy_production_integral: float
    min_rho: float
    min_theta: float
    max_rho_plus_theta: float
    production_rate: float = 0.0
    max_div_u: float = 0.0
    div_integral: float = 0.0
    dt: float = 0.0

    def to_row(self) -> Dict[str, float]:
        """Row in the documented diagnostics CSV column order"""
        return {
            'time': self.time,
            'mass': self.total_mass,
            'energy': self.total_energy,
            'entropy': self.entropy,
            'production_integral': self.entropy_production_integral,
            'min_rho': self.min_rho,
            'min_theta': self.min_theta,
            'max_rho_plus_theta': self.max_rho_plus_theta,
            'dt': self.dt,
        }

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Trajectory:
    """
    Recorded (time, State) pairs with their diagnostics

    termination names the stopping condition that ended the run early, or
    None when t_end was reached.
    """
    times: List[float] = field(default_factory=list)
    states: List[State] = field(default_factory=list)
    diagnostics: List[DiagnosticsRecord] = field(default_factory=list)
    termination: Optional[str] = None
    t_end: float = 0.0
    steps: int = 0
    rejected_steps: int = 0

    def append(self, time: float, state: State, record: DiagnosticsRecord):
        self.times.append(float(time))
        self.states.append(state)
        self.diagnostics.append(record)

    def __len__(self) -> int:
        return len(self.times)

    def items(self) -> List[Tuple[float, State]]:
        return list(zip(self.times, self.states))

    @property
    def final_time(self) -> float:
        return self.times[-1] if self.times else 0.0

    @property
    def final_state(self) -> State:
        return self.states[-1]

    def state_at(self, time: float, tol: float = 1e-12) -> Optional[State]:
        """Recorded state at a time, None if the time was not recorded"""
        for t, state in zip(self.times, self.states):
            if abs(t - time) <= tol * max(1.0, abs(time)):
                return state
        return None

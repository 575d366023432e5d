"""
Stopping-time records for censored trajectories
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple
import math


class StopReason(Enum):
    """Why a trajectory was absorbed into U_inf"""
    THRESHOLD_M = "ThresholdM"
    POSITIVITY_LOSS = "PositivityLoss"
    STIFFNESS = "Stiffness"
    NON_FINITE = "NonFinite"
    NONE = "None"


@dataclass(frozen=True)
class StoppingRecord:
    """
    Stopping time T_M with its trigger

    t_stop is +inf exactly when reason is NONE. location is the grid index
    where the trigger fired (argmax of rho + theta, or the argmin of the
    field that lost positivity).
    """
    t_stop: float = math.inf
    reason: StopReason = StopReason.NONE
    peak_value: float = 0.0
    location: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if (self.reason == StopReason.NONE) != math.isinf(self.t_stop):
            raise ValueError("reason NONE and t_stop = +inf must go together")

    @property
    def stopped(self) -> bool:
        return self.reason != StopReason.NONE

    def alive_at(self, t: float) -> bool:
        return t < self.t_stop

    def to_dict(self) -> Dict[str, Any]:
        return {
            't_stop': None if math.isinf(self.t_stop) else self.t_stop,
            'reason': self.reason.value,
            'peak_value': self.peak_value,
            'location': list(self.location) if self.location is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StoppingRecord':
        t_stop = data.get('t_stop')
        location = data.get('location')
        return cls(
            t_stop=math.inf if t_stop is None else float(t_stop),
            reason=StopReason(data.get('reason', 'None')),
            peak_value=float(data.get('peak_value', 0.0)),
            location=tuple(location) if location is not None else None,
        )

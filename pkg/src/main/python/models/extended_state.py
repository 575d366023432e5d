"""
Points of the extended phase space X+ plus the absorbing state U_inf
"""
from dataclasses import dataclass
from typing import Optional

from ..core.exceptions import NotInXPlus
from .fields import Grid, State


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """
    Either a regular state or the distinguished point U_inf = (0, 0, 0)

    Use ExtendedState.regular() to build a checked regular point; a raw
    ExtendedState(state) may hold a state outside X+, which the phase
    metric treats like U_inf.
    """
    state: Optional[State] = None

    @classmethod
    def regular(cls, state: State) -> 'ExtendedState':
        if not state.in_x_plus():
            raise NotInXPlus("Regular extended states need min(rho) > 0 and min(theta) > 0")
        return cls(state)

    @classmethod
    def infinity(cls) -> 'ExtendedState':
        return cls(None)

    @property
    def is_infinity(self) -> bool:
        return self.state is None

    @property
    def is_regular(self) -> bool:
        return self.state is not None

    @property
    def grid(self) -> Optional[Grid]:
        return None if self.state is None else self.state.grid

    def __repr__(self) -> str:
        if self.state is None:
            return "ExtendedState(Infinity)"
        return f"ExtendedState(Regular, grid={self.state.grid})"

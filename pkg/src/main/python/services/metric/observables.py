"""
Bounded observables of the class C: continuous on X+, bounded by a declared
constant and tending to their value at U_inf as the phase norms blow up
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from ...core.spectral import fourier_coefficient, sobolev_norm_X
from ...models import ExtendedState, State
from .phase_metric import G_weight, cutoff_G_n


@dataclass(frozen=True)
class Observable:
    """
    F : X+ plus U_inf -> [-bound, bound]

    limit_value is F(U_inf); every evaluator returns it for U_inf and for
    states outside X+.
    """
    name: str
    kind: str
    bound: float
    evaluator: Callable[[State], float]
    limit_value: float = 0.0

    def __call__(self, point: ExtendedState) -> float:
        if point.is_infinity or not point.state.in_x_plus():
            return self.limit_value
        return float(self.evaluator(point.state))

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'kind': self.kind, 'bound': self.bound, 'limit_value': self.limit_value}


def _squash(s: float) -> float:
    return s / (1.0 + abs(s))


def state_functionals(state: State, c_v: float) -> Dict[str, float]:
    """Quadrature values of mass, energy and entropy"""
    rho, theta = state.rho.values, state.theta.values
    speed2 = np.sum(state.u.to_array() ** 2, axis=0)
    volume = state.grid.cell_volume
    return {
        'mass': float(np.sum(rho) * volume),
        'energy': float(np.sum(0.5 * rho * speed2 + c_v * rho * theta) * volume),
        'entropy': float(np.sum(rho * (c_v * np.log(theta) - np.log(rho))) * volume),
    }


def _cutoff_observable(n: float = 10.0, functional: str = 'mass', c_v: float = 2.5,
                       q: float = 6.0, **_) -> Observable:
    if n < 1:
        raise ValueError(f"Cutoff level must satisfy n >= 1, got {n}")
    if functional not in ('mass', 'energy', 'entropy'):
        raise ValueError(f"Unknown functional {functional!r}")

    def evaluate(state: State) -> float:
        level = cutoff_G_n(sobolev_norm_X(state, q).blowup_argument, n)
        if level == 0.0:
            return 0.0
        return level * _squash(state_functionals(state, c_v)[functional])

    return Observable(name=f"cutoff_G_{n:g}_{functional}", kind='cutoff_G_n', bound=1.0, evaluator=evaluate)


def _windowed_moment(component: int = 1, wavevector: Optional[Sequence[int]] = None, window: float = 1.0,
                     part: str = 're', q: float = 6.0, **_) -> Observable:
    if window <= 0:
        raise ValueError(f"Window must be positive, got {window}")
    if part not in ('re', 'im'):
        raise ValueError(f"part must be 're' or 'im', got {part!r}")
    # no wavevector means the zero mode of whatever grid the state lives on
    wavevector = None if wavevector is None else tuple(int(m) for m in wavevector)

    def evaluate(state: State) -> float:
        m = wavevector if wavevector is not None else (0,) * state.grid.dim
        re, im = fourier_coefficient(state, component, m)
        value = G_weight(ExtendedState(state), q) * (re if part == 're' else im)
        return float(np.clip(value, -window, window))

    label = '0' if wavevector is None else ','.join(str(m) for m in wavevector)
    return Observable(
        name=f"moment_c{component}_m{label}_{part}", kind='windowed_moment',
        bound=float(window), evaluator=evaluate,
    )


class ObservableFactory:
    """
    Factory for the registered observable kinds
    """

    _builders: Dict[str, Callable[..., Observable]] = {
        'cutoff_G_n': _cutoff_observable,
        'windowed_moment': _windowed_moment,
    }

    @classmethod
    def create(cls, kind: str, **kwargs) -> Observable:
        """
        Build an observable

        Args:
            kind: Registered kind name
            **kwargs: Kind-specific settings

        Raises:
            ValueError: If the kind is unknown or a setting is invalid
        """
        if kind not in cls._builders:
            raise ValueError(f"Unknown observable kind {kind!r}; supported: {cls.get_supported_kinds()}")
        return cls._builders[kind](**kwargs)

    @classmethod
    def get_supported_kinds(cls) -> list:
        return list(cls._builders.keys())

    @classmethod
    def register(cls, kind: str, builder: Callable[..., Observable]):
        cls._builders[kind] = builder


def make_observable(kind: str, **kwargs) -> Observable:
    return ObservableFactory.create(kind, **kwargs)


def constant_observable(value: float, name: str = 'constant') -> Observable:
    """F = value on X+ and at U_inf; used to test total probability"""
    return Observable(name=name, kind='constant', bound=abs(value),
                      evaluator=lambda state: value, limit_value=value)


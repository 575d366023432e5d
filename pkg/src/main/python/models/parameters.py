"""
Physical parameters, forcing and numerical configuration models
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict, List

import numpy as np

from .fields import Grid, ScalarField, VectorField


def _admissibility(c_v: float, mu: float, eta: float, kappa: float) -> List[str]:
    found = []
    if not c_v > 1.0:
        found.append(f"c_v: c_v > 1 required (admissibility), got {c_v}")
    if not mu > 0.0:
        found.append(f"mu: mu > 0 required (admissibility), got {mu}")
    if not eta >= 0.0:
        found.append(f"eta: eta >= 0 required (admissibility), got {eta}")
    if not kappa > 0.0:
        found.append(f"kappa: kappa > 0 required (admissibility), got {kappa}")
    return found


@dataclass(frozen=True)
class Parameters:
    """
    Constitutive parameters (c_v, mu, eta, kappa)

    Admissible means c_v > 1, mu > 0, eta >= 0, kappa > 0.
    """
    c_v: float = 2.5
    mu: float = 0.05
    eta: float = 0.0
    kappa: float = 0.05

    def __post_init__(self):
        violations = self.violations()
        if violations:
            raise ValueError("; ".join(violations))

    def violations(self) -> List[str]:
        return _admissibility(self.c_v, self.mu, self.eta, self.kappa)

    @classmethod
    def check(cls, data: Dict[str, Any]) -> List[str]:
        """Violations of a raw parameter mapping without constructing it"""
        values, found = {}, []
        for name in ('c_v', 'mu', 'eta', 'kappa'):
            raw = data.get(name, getattr(cls, name))
            try:
                values[name] = float(raw)
            except (TypeError, ValueError):
                found.append(f"params.{name}: expected a number, got {raw!r}")
        if found:
            return found
        return [f"params.{v}" for v in _admissibility(**values)]

    @property
    def bulk_coefficient(self) -> float:
        """mu/3 + eta, the coefficient of grad(div u) in div S"""
        return self.mu / 3.0 + self.eta

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Parameters':
        return cls(
            c_v=float(data.get('c_v', cls.c_v)),
            mu=float(data.get('mu', cls.mu)),
            eta=float(data.get('eta', cls.eta)),
            kappa=float(data.get('kappa', cls.kappa)),
        )


@dataclass(frozen=True, eq=False)
class Forcing:
    """
    Time-independent volume force g and heat source Q >= 0
    """
    g: VectorField
    Q: ScalarField

    def __post_init__(self):
        if self.g.grid != self.Q.grid:
            raise ValueError("Forcing components must share one grid")
        if self.Q.min() < 0.0:
            raise ValueError(f"Heat source must satisfy Q >= 0, min is {self.Q.min()}")

    @property
    def grid(self) -> Grid:
        return self.Q.grid

    @classmethod
    def zero(cls, grid: Grid) -> 'Forcing':
        return cls(g=VectorField.zeros(grid), Q=ScalarField.zeros(grid))

    @classmethod
    def constant(cls, grid: Grid, g=(), Q: float = 0.0) -> 'Forcing':
        g = list(g) or [0.0] * grid.dim
        return cls(
            g=VectorField(tuple(ScalarField.constant(grid, v) for v in g)),
            Q=ScalarField.constant(grid, Q),
        )

    def is_zero(self) -> bool:
        return not np.any(self.Q.values) and not np.any(self.g.to_array())


@dataclass(frozen=True)
class SolverConfig:
    """
    Time stepping controls

    fixed_dt=True steps with exactly dt_init so that runs aligned to the
    step grid replay bit-identically.
    """
    dt_init: float = 1e-3
    cfl: float = 0.5
    dt_min: float = 1e-9
    dealias: bool = True
    integrator: str = 'RK4'
    fixed_dt: bool = False
    record_stride: int = 1

    def __post_init__(self):
        violations = self.violations()
        if violations:
            raise ValueError("; ".join(violations))

    def violations(self) -> List[str]:
        found = []
        if not self.dt_init > 0.0:
            found.append(f"solver.dt_init must be positive, got {self.dt_init}")
        if not 0.0 < self.cfl <= 1.0:
            found.append(f"solver.cfl must lie in (0, 1], got {self.cfl}")
        if not self.dt_min > 0.0:
            found.append(f"solver.dt_min must be positive, got {self.dt_min}")
        if not self.dt_min < self.dt_init:
            found.append(f"solver.dt_min ({self.dt_min}) must be below dt_init ({self.dt_init})")
        if self.integrator != 'RK4':
            found.append(f"solver.integrator must be 'RK4', got {self.integrator!r}")
        if self.record_stride < 1:
            found.append(f"solver.record_stride must be >= 1, got {self.record_stride}")
        return found

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolverConfig':
        defaults = cls()
        return cls(
            dt_init=float(data.get('dt_init', defaults.dt_init)),
            cfl=float(data.get('cfl', defaults.cfl)),
            dt_min=float(data.get('dt_min', defaults.dt_min)),
            dealias=bool(data.get('dealias', defaults.dealias)),
            integrator=str(data.get('integrator', defaults.integrator)),
            fixed_dt=bool(data.get('fixed_dt', defaults.fixed_dt)),
            record_stride=int(data.get('record_stride', defaults.record_stride)),
        )


@dataclass(frozen=True)
class StoppingConfig:
    """
    Threshold M on sup(rho + theta) plus numerical proxies for leaving X+
    """
    M: float = 50.0
    rho_floor: float = 1e-6
    theta_floor: float = 1e-6
    dt_min: float = 1e-9

    def __post_init__(self):
        violations = self.violations()
        if violations:
            raise ValueError("; ".join(violations))

    def violations(self) -> List[str]:
        found = []
        if not self.M > 0.0:
            found.append(f"stopping.M must be positive, got {self.M}")
        if not self.rho_floor > 0.0:
            found.append(f"stopping.rho_floor must be positive, got {self.rho_floor}")
        if not self.theta_floor > 0.0:
            found.append(f"stopping.theta_floor must be positive, got {self.theta_floor}")
        if not self.dt_min > 0.0:
            found.append(f"stopping.dt_min must be positive, got {self.dt_min}")
        return found

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StoppingConfig':
        defaults = cls()
        return cls(
            M=float(data.get('M', defaults.M)),
            rho_floor=float(data.get('rho_floor', defaults.rho_floor)),
            theta_floor=float(data.get('theta_floor', defaults.theta_floor)),
            dt_min=float(data.get('dt_min', defaults.dt_min)),
        )


@dataclass(frozen=True)
class MetricConfig:
    """
    Truncation radius K for the Fourier functionals and Sobolev exponent q
    """
    K: int = 8
    q: float = 6.0

    def __post_init__(self):
        violations = self.violations()
        if violations:
            raise ValueError("; ".join(violations))

    def violations(self) -> List[str]:
        found = []
        if self.K < 1:
            found.append(f"metric.K must be >= 1, got {self.K}")
        if not 3.0 < self.q <= 6.0:
            found.append(f"metric.q must lie in (3, 6], got {self.q}")
        return found

    def weight(self, index_norm: np.ndarray) -> np.ndarray:
        return np.exp(-np.asarray(index_norm, dtype=float))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MetricConfig':
        defaults = cls()
        return cls(K=int(data.get('K', defaults.K)), q=float(data.get('q', defaults.q)))

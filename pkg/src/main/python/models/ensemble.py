"""
Random data laws and ensemble estimate records
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .fields import Grid
from .stopping import StoppingRecord


@dataclass(frozen=True)
class DataDistribution:
    """
    Law of the random initial data

    Each component is the base constant plus independent centered
    coefficients a_m, b_m ~ sigma |m|^-r N(0, 1) in front of cos(pi m.x) and
    sin(pi m.x), for half-lattice wavevectors with 1 <= |m|_inf <= m_max.
    Samples with min(rho) < epsilon or min(theta) < epsilon are redrawn.
    """
    dim: int = 1
    n: int = 32
    rho_bar: float = 1.0
    theta_bar: float = 1.0
    sigma: float = 0.05
    r: float = 2.0
    m_max: int = 4
    epsilon: float = 0.1
    seed: int = 0

    def __post_init__(self):
        violations = self.violations()
        if violations:
            raise ValueError("; ".join(violations))

    @property
    def grid(self) -> Grid:
        return Grid(self.dim, self.n)

    def violations(self) -> List[str]:
        found = []
        if not self.rho_bar > 0.0:
            found.append(f"distribution.rho_bar must be positive, got {self.rho_bar}")
        if not self.theta_bar > 0.0:
            found.append(f"distribution.theta_bar must be positive, got {self.theta_bar}")
        if not self.sigma >= 0.0:
            found.append(f"distribution.sigma must be >= 0, got {self.sigma}")
        if not self.r > 1.0:
            found.append(f"distribution.r must satisfy r > 1, got {self.r}")
        if not 1 <= self.m_max < self.n // 2:
            found.append(f"distribution.m_max must lie in [1, n/2), got {self.m_max}")
        if not self.epsilon > 0.0:
            found.append(f"distribution.epsilon must be positive, got {self.epsilon}")
        if not 0 <= self.seed < 2 ** 64:
            found.append(f"distribution.seed must be a 64-bit unsigned integer, got {self.seed}")
        return found

    def coefficient_variance(self, wavevector) -> float:
        """Variance of Re c_m of any component for an active wavevector"""
        norm = float(np.linalg.norm(np.asarray(wavevector, dtype=float)))
        return self.sigma ** 2 * norm ** (-2.0 * self.r) * 2.0 ** (self.dim - 2)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DataDistribution':
        defaults = cls()
        return cls(
            dim=int(data.get('dim', defaults.dim)),
            n=int(data.get('n', defaults.n)),
            rho_bar=float(data.get('rho_bar', defaults.rho_bar)),
            theta_bar=float(data.get('theta_bar', defaults.theta_bar)),
            sigma=float(data.get('sigma', defaults.sigma)),
            r=float(data.get('r', defaults.r)),
            m_max=int(data.get('m_max', defaults.m_max)),
            epsilon=float(data.get('epsilon', defaults.epsilon)),
            seed=int(data.get('seed', defaults.seed)),
        )


@dataclass
class EnsembleEstimate:
    """
    Monte Carlo estimate of the push-forward measure at the query times

    moments[i] holds the censored means of (rho, rho u, rho log(theta^c_v / rho))
    at times[i], stacked like a state. observable_means equal
    censored_means + limit_value * blowup_fraction at every time.
    """
    N: int
    times: List[float]
    blowup_fraction: List[float] = field(default_factory=list)
    moments: List[np.ndarray] = field(default_factory=list)
    observable_means: Dict[str, List[float]] = field(default_factory=dict)
    censored_means: Dict[str, List[float]] = field(default_factory=dict)
    half_widths: Dict[str, List[float]] = field(default_factory=dict)
    functional_means: Dict[str, List[float]] = field(default_factory=dict)
    records: List[StoppingRecord] = field(default_factory=list)
    measures: List[Any] = field(default_factory=list)
    failures: List[int] = field(default_factory=list)

    def moment_l1_norms(self, cell_volume: float) -> List[float]:
        return [float(np.sum(np.abs(m)) * cell_volume) for m in self.moments]

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready summary; fields go to separate snapshot files"""
        return {
            'N': self.N,
            'times': list(self.times),
            'blowup_fraction': list(self.blowup_fraction),
            'observable_means': {k: list(v) for k, v in self.observable_means.items()},
            'censored_means': {k: list(v) for k, v in self.censored_means.items()},
            'half_widths': {k: list(v) for k, v in self.half_widths.items()},
            'functional_means': {k: list(v) for k, v in self.functional_means.items()},
            'stopping_records': [r.to_dict() for r in self.records],
            'failed_members': list(self.failures),
        }


@dataclass
class ProductEstimate:
    """Estimates for finitely many parameter atoms plus their weighted aggregate"""
    weights: List[float]
    per_atom: List[EnsembleEstimate]
    blowup_fraction: List[float] = field(default_factory=list)
    observable_means: Dict[str, List[float]] = field(default_factory=dict)
    moments: List[np.ndarray] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'weights': list(self.weights),
            'blowup_fraction': list(self.blowup_fraction),
            'observable_means': {k: list(v) for k, v in self.observable_means.items()},
            'atoms': [e.to_dict() for e in self.per_atom],
        }


@dataclass
class SLLNStudy:
    """L1 errors of censored density moments against a reference, per N and replicate"""
    time: float
    N_list: List[int]
    errors: List[List[float]] = field(default_factory=list)
    half_widths: List[List[float]] = field(default_factory=list)

    @property
    def mean_errors(self) -> List[float]:
        return [float(np.mean(row)) for row in self.errors]

    @property
    def mean_half_widths(self) -> List[float]:
        return [float(np.mean(row)) for row in self.half_widths]

    @property
    def slope(self) -> float:
        """Log-log slope of the mean L1 error against N"""
        pairs = [(n, e) for n, e in zip(self.N_list, self.mean_errors) if e > 0.0]
        if len(pairs) < 2:
            return math.nan
        return float(np.polyfit(np.log([p[0] for p in pairs]), np.log([p[1] for p in pairs]), 1)[0])

    def rows(self) -> List[Dict[str, float]]:
        rows = []
        for n, errors, widths in zip(self.N_list, self.errors, self.half_widths):
            for replicate, (error, width) in enumerate(zip(errors, widths)):
                rows.append({'N': n, 'replicate': replicate, 'l1_error': error, 'half_width': width})
        return rows


@dataclass
class MarkovReport:
    """Outcome of the Markov-operator identities on sampled ensembles"""
    semigroup_discrepancy: float = 0.0
    semigroup_bitwise: bool = True
    identity_bitwise: bool = True
    mixture_atoms_bitwise: bool = True
    mixture_discrepancy: float = 0.0
    product_atoms_bitwise: bool = True
    product_discrepancy: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (self.semigroup_bitwise and self.identity_bitwise
                and self.mixture_atoms_bitwise and self.product_atoms_bitwise)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['passed'] = self.passed
        return data


def record_summary(records: List[StoppingRecord]) -> Dict[str, int]:
    """Count of stopping reasons"""
    counts: Dict[str, int] = {}
    for record in records:
        counts[record.reason.value] = counts.get(record.reason.value, 0) + 1
    return counts


def optional_float(value: Optional[float]) -> Optional[float]:
    if value is None or (isinstance(value, float) and (math.isinf(value) or math.isnan(value))):
        return None
    return float(value)

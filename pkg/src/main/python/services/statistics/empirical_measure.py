"""
Weighted Dirac mixtures on X+ plus U_inf
"""
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from ...models import ExtendedState
from ..metric import Observable


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """
    sum_i w_i delta_{U_i} with w_i >= 0 summing to one
    """
    atoms: List[ExtendedState]
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (len(self.atoms),):
            raise ValueError("One weight per atom required")
        if np.any(weights < 0.0):
            raise ValueError("Weights must be non-negative")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"Weights must sum to one, got {math.fsum(weights)}")
        object.__setattr__(self, 'atoms', list(self.atoms))
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def uniform(cls, atoms: Sequence[ExtendedState]) -> 'EmpiricalMeasure':
        return cls(list(atoms), np.full(len(atoms), 1.0 / len(atoms)))

    @classmethod
    def dirac(cls, atom: ExtendedState) -> 'EmpiricalMeasure':
        return cls([atom], np.ones(1))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def integrate(self, observable: Observable) -> float:
        """sum_i w_i F(U_i), exactly rounded so atom order does not matter"""
        return math.fsum(w * observable(a) for w, a in zip(self.weights, self.atoms))

    def infinity_mass(self) -> float:
        return math.fsum(w for w, a in zip(self.weights, self.atoms) if a.is_infinity)

    def mixture(self, other: 'EmpiricalMeasure', lam: float) -> 'EmpiricalMeasure':
        """lam * self + (1 - lam) * other"""
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"Mixture weight must lie in [0, 1], got {lam}")
        return EmpiricalMeasure(
            self.atoms + other.atoms,
            np.concatenate([lam * self.weights, (1.0 - lam) * other.weights]),
        )

    def push(self, evolve: Callable[[ExtendedState], ExtendedState]) -> 'EmpiricalMeasure':
        """Image measure under an evolution map, weights unchanged"""
        return EmpiricalMeasure([evolve(a) for a in self.atoms], self.weights)

"""Continuous refinement of layer thicknesses.

Materials and layer count stay frozen; the thickness vector is pushed to
a local reward maximum by bounded limited-memory quasi-Newton search with
finite-difference gradients. The discrete thickness grid used during
generation is deliberately absent here: this is where designs leave the
grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .materials import MaterialLibrary
from .structures import Structure
from .training import RewardSpec, compute_reward

__all__ = ["FinetuneProblem", "FinetuneResult", "reward_gradient", "finetune"]

FD_STEP_NM = 0.1


@dataclass(frozen=True)
class FinetuneProblem:
    structure: Structure
    spec: RewardSpec
    library: MaterialLibrary
    bounds: tuple[float, float] = (15.0, 200.0)

    def __post_init__(self):
        lo, hi = self.bounds
        if not (0.0 < lo < hi):
            raise ValueError(f"bounds must satisfy 0 < lo < hi, got {self.bounds}")
        if len(self.structure) == 0:
            raise ValueError("cannot finetune an empty structure")
        t = self.structure.thicknesses()
        if np.any(t < lo) or np.any(t > hi):
            raise ValueError("initial thicknesses violate the bounds")

    def reward_at(self, thicknesses: np.ndarray) -> float:
        return compute_reward(self.structure.with_thicknesses(thicknesses),
                              self.spec, self.library)


@dataclass(frozen=True)
class FinetuneResult:
    structure: Structure
    reward_before: float
    reward_after: float
    iterations: int
    improved: bool


def reward_gradient(problem: FinetuneProblem, x: np.ndarray,
                    h: float = FD_STEP_NM) -> np.ndarray:
    """Central finite-difference gradient of the reward, step h in nm.

    Probe points are clamped to the bounds so the gradient stays defined
    on the boundary (one-sided there).
    """
    x = np.asarray(x, dtype=float)
    lo, hi = problem.bounds
    grad = np.empty_like(x)
    for i in range(x.size):
        up = x.copy()
        dn = x.copy()
        up[i] = min(x[i] + h, hi)
        dn[i] = max(x[i] - h, lo)
        width = up[i] - dn[i]
        if width == 0.0:
            grad[i] = 0.0
            continue
        grad[i] = (problem.reward_at(up) - problem.reward_at(dn)) / width
    return grad


def finetune(problem: FinetuneProblem, gtol: float = 1e-6,
             maxiter: int = 500) -> FinetuneResult:
    """Maximize the reward over thicknesses within bounds.

    Guarantees improvement-or-identity: if the optimizer's best point is
    not strictly better, the original structure is returned unchanged.
    """
    x0 = problem.structure.thicknesses()
    reward_before = problem.reward_at(x0)

    def objective(x):
        return -problem.reward_at(x)

    def gradient(x):
        return -reward_gradient(problem, x)

    res = minimize(objective, x0, jac=gradient, method="L-BFGS-B",
                   bounds=[problem.bounds] * x0.size,
                   options={"maxcor": 10, "gtol": gtol, "maxiter": maxiter})
    x_best = np.clip(res.x, problem.bounds[0], problem.bounds[1])
    reward_after = problem.reward_at(x_best)

    if reward_after > reward_before:
        refined = problem.structure.with_thicknesses(x_best)
        return FinetuneResult(structure=refined, reward_before=reward_before,
                              reward_after=reward_after,
                              iterations=int(res.nit), improved=True)
    return FinetuneResult(structure=problem.structure,
                          reward_before=reward_before,
                          reward_after=reward_before,
                          iterations=int(res.nit), improved=False)

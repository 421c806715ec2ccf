"""Problem abstraction, sampling-oracle contract, and shared numeric types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, runtime_checkable

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid dimensions, step sizes, or malformed configuration."""


class NumericalDivergenceError(RuntimeError):
    """Raised when a solver iterate becomes non-finite.

    Carries the iteration index at which the divergence was detected.
    """

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")


def euclidean_norm(v) -> float:
    """L2 norm; empty vectors have norm 0."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    return float(np.linalg.norm(v))


def positive_part(v) -> np.ndarray:
    """Componentwise max(v, 0)."""
    return np.maximum(np.asarray(v, dtype=float), 0.0)


@dataclass(frozen=True)
class Dims:
    """Dimensions of the minimax problem.

    d_x / d_y are the min / max player dimensions, m1 / m2 count the
    expectation constraints on x / y (either may be 0).
    """

    d_x: int
    d_y: int
    m1: int = 0
    m2: int = 0

    def __post_init__(self):
        if self.d_x < 1 or self.d_y < 1:
            raise ConfigurationError("d_x and d_y must be >= 1")
        if self.m1 < 0 or self.m2 < 0:
            raise ConfigurationError("m1 and m2 must be >= 0")


@dataclass(frozen=True)
class ProblemConstants:
    """Lipschitz / second-moment bounds used by the step-size schedules.

    c_x, c_y bound objective (sub)gradients; c_h, c_g bound constraint
    Jacobians; sigma_h, sigma_g bound constraint-value noise.
    """

    c_x: float = 1.0
    c_y: float = 1.0
    c_h: float = 1.0
    c_g: float = 1.0
    sigma_h: float = 0.0
    sigma_g: float = 0.0

    def __post_init__(self):
        for name in ("c_x", "c_y", "c_h", "c_g", "sigma_h", "sigma_g"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {v}")


@runtime_checkable
class SamplingOracle(Protocol):
    """Stochastic oracle contract.

    Every method consumes an explicit RNG stream so that independence of
    queries is structural: the solver hands distinct substreams to the dual
    and primal queries of one iteration.
    """

    def sample_grad_x(self, x, y, rng) -> np.ndarray: ...

    def sample_grad_y(self, x, y, rng) -> np.ndarray: ...

    def sample_h_value(self, x, rng) -> np.ndarray: ...

    def sample_h_jacobian(self, x, rng) -> np.ndarray: ...

    def sample_g_value(self, y, rng) -> np.ndarray: ...

    def sample_g_jacobian(self, y, rng) -> np.ndarray: ...


@dataclass(frozen=True)
class ExactOracle:
    """Closed-form expectations of the sampled quantities.

    Used by the evaluation metrics and the deterministic reference solver.
    h_jacobian has shape (d_x, m1), column j being the gradient of the j-th
    constraint; g_jacobian analogously (d_y, m2).
    """

    f: Callable[[np.ndarray, np.ndarray], float]
    grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    h_jacobian: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    g_jacobian: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable bundle describing one minimax problem.

    proj_x / proj_y are ProjectionOp values from the prox module (kept
    untyped here to avoid a circular import).  best_response_x /
    best_response_y, when present, return min_{x feasible} F(x, y) /
    max_{y feasible} F(x, y) for the duality-gap metric.
    """

    dims: Dims
    constants: ProblemConstants
    oracle: SamplingOracle
    proj_x: object
    proj_y: object
    exact: Optional[ExactOracle] = None
    name: str = "problem"
    best_response_y: Optional[Callable[[np.ndarray], float]] = None
    best_response_x: Optional[Callable[[np.ndarray], float]] = None
    reference: Optional["ReferenceSolution"] = None
    # Step schedule recommended for the deterministic reference solver on
    # this instance (None = theory defaults from `constants`).
    reference_schedule: Optional[object] = None


@dataclass
class IterateState:
    """Current primal-dual point plus running averages and dual-norm maxima."""

    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    x_sum: np.ndarray = field(default=None)  # type: ignore[assignment]
    y_sum: np.ndarray = field(default=None)  # type: ignore[assignment]
    t: int = 0
    max_gamma_norm: float = 0.0
    max_lambda_norm: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if self.x_sum is None:
            self.x_sum = np.zeros_like(self.x)
        if self.y_sum is None:
            self.y_sum = np.zeros_like(self.y)

    @property
    def x_mean(self) -> np.ndarray:
        return self.x_sum / max(self.t, 1)

    @property
    def y_mean(self) -> np.ndarray:
        return self.y_sum / max(self.t, 1)


def update_running_average(state: IterateState, x_new, y_new) -> IterateState:
    """Accumulate one iterate into the running sums; mean = sum / t."""
    x_new = np.asarray(x_new, dtype=float)
    y_new = np.asarray(y_new, dtype=float)
    if x_new.shape != state.x_sum.shape or y_new.shape != state.y_sum.shape:
        raise ConfigurationError("running-average update dimension mismatch")
    state.x_sum += x_new
    state.y_sum += y_new
    state.t += 1
    return state


@dataclass(frozen=True)
class ReferenceSolution:
    """High-accuracy saddle point used as ground truth for evaluation."""

    x_star: np.ndarray
    y_star: np.ndarray
    gamma_star: np.ndarray
    lambda_star: np.ndarray
    f_star: float
    tolerance: float

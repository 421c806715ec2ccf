"""Euclidean projections and the four prox-map updates of both solvers.

All feasible sets here are simple enough that the prox of a linear term is an
exact projected gradient step; the numeric-oracle tests in the suite verify
that equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import ConfigurationError


@dataclass(frozen=True)
class FullSpace:
    pass


@dataclass(frozen=True)
class NonnegOrthant:
    pass


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ConfigurationError("box bounds shape mismatch")
        if np.any(self.lower > self.upper):
            raise ConfigurationError("box lower bound exceeds upper bound")


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ConfigurationError("ball radius must be positive")


@dataclass(frozen=True)
class DiagEllipsoid:
    """{y : sum_i diag_m[i] * (y_i - center_i)^2 <= radius^2}."""

    center: np.ndarray
    diag_m: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "diag_m", np.asarray(self.diag_m, dtype=float))
        if np.any(self.diag_m <= 0):
            raise ConfigurationError("ellipsoid diag_m must be strictly positive")
        if self.radius <= 0:
            raise ConfigurationError("ellipsoid radius must be positive")


ProjectionOp = Union[FullSpace, NonnegOrthant, Box, Ball, DiagEllipsoid]

_MEMBERSHIP_TOL = 1e-12


def _check_dim(op: ProjectionOp, v: np.ndarray):
    ref = None
    if isinstance(op, Box):
        ref = op.lower
    elif isinstance(op, (Ball, DiagEllipsoid)):
        ref = op.center
    if ref is not None and v.shape != ref.shape:
        raise ConfigurationError(
            f"projection dimension mismatch: point {v.shape} vs set {ref.shape}"
        )


def _ellipsoid_multiplier(op: DiagEllipsoid, w: np.ndarray) -> float:
    # Solve sum m_i (w_i / (1 + nu m_i))^2 = r^2 for nu >= 0 by safeguarded
    # bisection; residual is monotone decreasing in nu.
    def residual(nu):
        scaled = w / (1.0 + nu * op.diag_m)
        return float(np.sum(op.diag_m * scaled**2) - op.radius**2)

    lo, hi = 0.0, 1.0
    it = 0
    while residual(hi) > 0 and it < 200:
        lo, hi = hi, 2.0 * hi
        it += 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) <= _MEMBERSHIP_TOL:
            return mid
        if r > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def project(op: ProjectionOp, v) -> np.ndarray:
    """Euclidean projection of v onto the set described by op."""
    v = np.asarray(v, dtype=float)
    _check_dim(op, v)
    if isinstance(op, FullSpace):
        return v.copy()
    if isinstance(op, NonnegOrthant):
        return np.maximum(v, 0.0)
    if isinstance(op, Box):
        return np.clip(v, op.lower, op.upper)
    if isinstance(op, Ball):
        w = v - op.center
        nrm = np.linalg.norm(w)
        if nrm <= op.radius:
            return v.copy()
        return op.center + w * (op.radius / nrm)
    if isinstance(op, DiagEllipsoid):
        w = v - op.center
        if float(np.sum(op.diag_m * w**2)) <= op.radius**2:
            return v.copy()
        nu = _ellipsoid_multiplier(op, w)
        return op.center + w / (1.0 + nu * op.diag_m)
    raise ConfigurationError(f"unknown projection op {op!r}")


def contains(op: ProjectionOp, v, tol: float = 1e-10) -> bool:
    """Membership predicate for the set described by op."""
    v = np.asarray(v, dtype=float)
    _check_dim(op, v)
    if isinstance(op, FullSpace):
        return True
    if isinstance(op, NonnegOrthant):
        return bool(np.all(v >= -tol))
    if isinstance(op, Box):
        return bool(np.all(v >= op.lower - tol) and np.all(v <= op.upper + tol))
    if isinstance(op, Ball):
        return bool(np.linalg.norm(v - op.center) <= op.radius + tol)
    if isinstance(op, DiagEllipsoid):
        w = v - op.center
        return bool(np.sum(op.diag_m * w**2) <= op.radius**2 + tol)
    raise ConfigurationError(f"unknown projection op {op!r}")


def dual_prox_basic(gamma_t, sample, beta_t: float) -> np.ndarray:
    """argmax_{g >= 0} { sample.g - (beta/2) ||gamma_t - g||^2 }."""
    if beta_t <= 0:
        raise ConfigurationError(f"beta_t must be positive, got {beta_t}")
    return np.maximum(np.asarray(gamma_t, dtype=float) + np.asarray(sample, dtype=float) / beta_t, 0.0)


def dual_prox_adaptive(gamma_t, gamma_0, sample, beta_t: float, tau_t: float) -> np.ndarray:
    """Majorized dual step anchored at gamma_0; tau_t = 0 recovers the basic step."""
    if beta_t <= 0 or tau_t < 0:
        raise ConfigurationError(f"need beta_t > 0 and tau_t >= 0, got {beta_t}, {tau_t}")
    num = beta_t * np.asarray(gamma_t, dtype=float) + tau_t * np.asarray(gamma_0, dtype=float)
    return np.maximum((num + np.asarray(sample, dtype=float)) / (beta_t + tau_t), 0.0)


def primal_prox_basic(x_t, combined_grad, eta_t: float, proj: ProjectionOp) -> np.ndarray:
    """Projected gradient step minimizing grad.x + (eta/2)||x - x_t||^2 over proj."""
    if eta_t <= 0:
        raise ConfigurationError(f"eta_t must be positive, got {eta_t}")
    return project(proj, np.asarray(x_t, dtype=float) - np.asarray(combined_grad, dtype=float) / eta_t)


def primal_prox_adaptive(x_t, x_0, combined_grad, eta_t: float, rho_t: float,
                         proj: ProjectionOp) -> np.ndarray:
    """Majorized primal step anchored at x_0; rho_t = 0 recovers the basic step."""
    if eta_t <= 0 or rho_t < 0:
        raise ConfigurationError(f"need eta_t > 0 and rho_t >= 0, got {eta_t}, {rho_t}")
    num = (eta_t * np.asarray(x_t, dtype=float) + rho_t * np.asarray(x_0, dtype=float)
           - np.asarray(combined_grad, dtype=float))
    return project(proj, num / (eta_t + rho_t))


def combine_grad_x(grad_f_x, h_jacobian, gamma) -> np.ndarray:
    """Descent direction of the min player: grad_f_x + h_jacobian @ gamma."""
    grad_f_x = np.asarray(grad_f_x, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.size == 0:
        return grad_f_x.copy()
    h_jacobian = np.asarray(h_jacobian, dtype=float)
    if h_jacobian.shape != (grad_f_x.size, gamma.size):
        raise ConfigurationError(
            f"h_jacobian shape {h_jacobian.shape} incompatible with "
            f"d_x={grad_f_x.size}, m1={gamma.size}"
        )
    return grad_f_x + h_jacobian @ gamma


def combine_grad_y(grad_f_y, g_jacobian, lam) -> np.ndarray:
    """Ascent direction of the max player: grad_f_y - g_jacobian @ lambda."""
    grad_f_y = np.asarray(grad_f_y, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if lam.size == 0:
        return grad_f_y.copy()
    g_jacobian = np.asarray(g_jacobian, dtype=float)
    if g_jacobian.shape != (grad_f_y.size, lam.size):
        raise ConfigurationError(
            f"g_jacobian shape {g_jacobian.shape} incompatible with "
            f"d_y={grad_f_y.size}, m2={lam.size}"
        )
    return grad_f_y - g_jacobian @ lam

"""Evaluation metrics and the deterministic reference solver.

The reference solver is the noise-free analogue of the adaptive primal-dual
loop run on exact expectations; it supplies the ground-truth saddle point the
gap metrics are measured against, and is cross-validated on the analytic toy
problem by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import prox
from .core import (
    ConfigurationError,
    ProblemConstants,
    ProblemInstance,
    ReferenceSolution,
    euclidean_norm,
    positive_part,
)
from .schedule import ADAPTIVE, StepSchedule


@dataclass(frozen=True)
class GapReport:
    """Signed objective gap plus feasibility residuals at an averaged iterate.

    obj_gap may legitimately be negative for infeasible points; lower_bound is
    the multiplier-weighted floor it can never fall below.
    """

    obj_gap: float
    feas_x: float
    feas_y: float
    lower_bound: float
    lagrangian_at_point: float
    duality_gap: Optional[float] = None


def evaluate(point: Tuple[np.ndarray, np.ndarray], problem: ProblemInstance,
             ref: ReferenceSolution) -> GapReport:
    """Exact-oracle gap report for an averaged iterate (x_bar, y_bar)."""
    if problem.exact is None:
        raise ConfigurationError("evaluate requires a problem with an exact oracle")
    x_bar, y_bar = (np.asarray(v, dtype=float) for v in point)
    ex = problem.exact
    obj_gap = float(ex.f(x_bar, ref.y_star) - ex.f(ref.x_star, y_bar))
    feas_x = euclidean_norm(positive_part(ex.h(x_bar)))
    feas_y = euclidean_norm(positive_part(ex.g(y_bar)))
    g_norm = euclidean_norm(ref.gamma_star)
    l_norm = euclidean_norm(ref.lambda_star)
    lower = -g_norm * feas_x - l_norm * feas_y
    lagr = float(ex.f(x_bar, y_bar))
    if ref.gamma_star.size:
        lagr += float(ref.gamma_star @ ex.h(x_bar))
    if ref.lambda_star.size:
        lagr -= float(ref.lambda_star @ ex.g(y_bar))
    return GapReport(
        obj_gap=obj_gap,
        feas_x=feas_x,
        feas_y=feas_y,
        lower_bound=lower,
        lagrangian_at_point=lagr,
        duality_gap=duality_gap(point, problem),
    )


def duality_gap(point: Tuple[np.ndarray, np.ndarray],
                problem: ProblemInstance) -> Optional[float]:
    """Best-response gap F(x_bar, y°) - F(x°, y_bar), or None when a feasible
    side is unbounded (no best-response value available for the problem)."""
    if problem.best_response_y is None or problem.best_response_x is None:
        return None
    x_bar, y_bar = (np.asarray(v, dtype=float) for v in point)
    return float(problem.best_response_y(x_bar) - problem.best_response_x(y_bar))


def _reference_round(problem: ProblemInstance, schedule: StepSchedule,
                     start, n_iters: int):
    """One noise-free adaptive pass of n_iters anchored at `start`.

    Returns the round averages (x, y, gamma, lambda) or None if an iterate
    became non-finite (signalling the caller to shrink the step sizes).
    Overflow is an expected outcome of an over-aggressive step scale, so the
    numpy warnings for it are suppressed here.
    """
    ex = problem.exact
    d = problem.dims
    x, y, gamma, lam = (v.copy() for v in start)
    x0, y0, g0, l0 = (v.copy() for v in start)
    x_sum = np.zeros(d.d_x)
    y_sum = np.zeros(d.d_y)
    g_sum = np.zeros(d.m1)
    l_sum = np.zeros(d.m2)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(n_iters):
            s = schedule.at(t)
            if d.m1:
                gamma = prox.dual_prox_adaptive(gamma, g0, ex.h(x), s.beta, s.tau)
            if d.m2:
                lam = prox.dual_prox_adaptive(lam, l0, ex.g(y), s.alpha, s.nu)
            gx = ex.grad_x(x, y)
            if d.m1:
                gx = prox.combine_grad_x(gx, ex.h_jacobian(x), gamma)
            x_new = prox.primal_prox_adaptive(x, x0, gx, s.eta, s.rho, problem.proj_x)
            gy = ex.grad_y(x, y)
            if d.m2:
                gy = prox.combine_grad_y(gy, ex.g_jacobian(y), lam)
            y_new = prox.primal_prox_adaptive(y, y0, -gy, s.kappa, s.phi, problem.proj_y)
            if not (np.isfinite(x_new).all() and np.isfinite(y_new).all()
                    and np.isfinite(gamma).all() and np.isfinite(lam).all()):
                return None
            x, y = x_new, y_new
            x_sum += x
            y_sum += y
            g_sum += gamma
            l_sum += lam
    return (x_sum / n_iters, y_sum / n_iters, g_sum / n_iters, l_sum / n_iters)


def solve_reference(problem: ProblemInstance, target_tol: float,
                    schedule: Optional[StepSchedule] = None,
                    initial_point=None,
                    base_horizon: int = 1024,
                    max_iters: int = 10**8) -> ReferenceSolution:
    """Noise-free adaptive primal-dual run until the averaged iterates settle.

    The horizon is doubled until successive averages move by less than
    target_tol / 10 and the averaged primal point is target_tol-feasible.
    Each round restarts the anchored loop from the previous averages, which
    contracts geometrically on the bundled problem classes; the horizon is
    only doubled when a round fails to halve the movement, so the tail of
    the search is not dominated by overlong rounds.  If an iterate blows up
    (primal steps too large for the local curvature) the step sizes are
    automatically shrunk and the round repeated.  Dual components below
    10 * target_tol are clamped to zero so inactive constraints report
    exact complementary slackness.

    Linear-objective blocks can have a flat optimal face: the averaged
    iterate then wanders the face forever while every reported quantity
    (objective value, feasibility, dual norms) is already converged.  When
    movement stagnates over three consecutive rounds with feasibility and
    the objective change both under tolerance, the current face point is
    accepted.
    """
    if problem.exact is None:
        raise ConfigurationError("solve_reference requires an exact oracle")
    if target_tol <= 0:
        raise ConfigurationError("target_tol must be positive")
    if schedule is None:
        schedule = StepSchedule(ADAPTIVE, problem.constants)
    elif schedule.kind != ADAPTIVE:
        raise ConfigurationError("reference solver uses the adaptive schedule")

    ex = problem.exact
    d = problem.dims
    if initial_point is not None:
        start = tuple(np.asarray(v, dtype=float) for v in initial_point)
    else:
        start = (
            prox.project(problem.proj_x, np.zeros(d.d_x)),
            prox.project(problem.proj_y, np.zeros(d.d_y)),
            np.zeros(d.m1),
            np.zeros(d.m2),
        )

    prev_avg = None
    prev_delta = None
    prev_f = None
    stalled = 0
    horizon = base_horizon
    total = 0
    backoffs = 0
    history: List[tuple] = []
    while total < max_iters:
        avg = _reference_round(problem, schedule, start, horizon)
        if avg is None:
            backoffs += 1
            if backoffs > 60:
                raise RuntimeError("reference solver diverged at every step scale")
            schedule = StepSchedule(schedule.kind, schedule.constants, schedule.n,
                                    schedule.dual_scale, 4.0 * schedule.primal_scale)
            continue
        total += horizon
        x_bar, y_bar = avg[0], avg[1]
        feas = euclidean_norm(positive_part(ex.h(x_bar))) + \
            euclidean_norm(positive_part(ex.g(y_bar)))
        f_bar = float(ex.f(x_bar, y_bar))
        history.append((total, feas))
        if prev_avg is not None:
            delta = euclidean_norm(x_bar - prev_avg[0]) + euclidean_norm(y_bar - prev_avg[1])
            settled = (feas <= target_tol
                       and abs(f_bar - prev_f) <= target_tol * (1.0 + abs(f_bar)))
            if prev_delta is not None and delta > 0.75 * prev_delta and settled:
                stalled += 1
            else:
                stalled = 0
            if (delta <= target_tol / 10 and feas <= target_tol) or stalled >= 3:
                g_bar = avg[2].copy()
                l_bar = avg[3].copy()
                g_bar[np.abs(g_bar) < 10 * target_tol] = 0.0
                l_bar[np.abs(l_bar) < 10 * target_tol] = 0.0
                return ReferenceSolution(
                    x_star=x_bar, y_star=y_bar,
                    gamma_star=g_bar, lambda_star=l_bar,
                    f_star=f_bar,
                    tolerance=target_tol,
                )
            if prev_delta is not None and delta > 0.5 * prev_delta:
                horizon *= 2
            prev_delta = delta
        prev_avg = (x_bar, y_bar)
        prev_f = f_bar
        start = avg
    raise RuntimeError(
        f"reference solver did not converge within {max_iters} iterations; "
        f"(iterations, feasibility) trajectory: {history[-8:]}"
    )


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    n_excluded: int = 0


def slope_fit(points: Sequence[Tuple[float, float]]) -> SlopeFit:
    """Least-squares line through (log N, log value); nonpositive values are
    dropped (and counted) since they have no logarithm."""
    kept = [(n, v) for n, v in points if v > 0]
    excluded = len(points) - len(kept)
    if len(kept) < 3:
        raise ConfigurationError(
            f"slope fit needs >= 3 positive points, got {len(kept)}"
        )
    logn = np.log([n for n, _ in kept])
    logv = np.log([v for _, v in kept])
    slope, intercept = np.polyfit(logn, logv, 1)
    pred = slope * logn + intercept
    ss_res = float(np.sum((logv - pred) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return SlopeFit(float(slope), float(intercept), r2, excluded)


def theory_constant_R(ref: ReferenceSolution,
                      init: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
                      constants: ProblemConstants) -> float:
    """Dual-boundedness constant; the fixed-step solver keeps
    E||gamma_t||^2 + E||lambda_t||^2 below 2 R e^2."""
    c = constants
    if c.c_h <= 0 or c.c_g <= 0:
        raise ConfigurationError("theory_constant_R requires c_h > 0 and c_g > 0")
    x0, y0, g0, l0 = (np.asarray(v, dtype=float) for v in init)
    gs, ls = euclidean_norm(ref.gamma_star), euclidean_norm(ref.lambda_star)
    r = (11 * c.c_x**2 / (8 * c.c_h**2)
         + 2 * euclidean_norm(g0 - ref.gamma_star) ** 2
         + gs * c.sigma_h
         + c.sigma_h**2 / 8
         + 19 * gs**2 / 8
         + 2 * c.c_h**2 * euclidean_norm(x0 - ref.x_star) ** 2
         + 2 * c.c_h**2 * euclidean_norm(ref.x_star) ** 2)
    r += (11 * c.c_y**2 / (8 * c.c_g**2)
          + 2 * euclidean_norm(l0 - ref.lambda_star) ** 2
          + ls * c.sigma_g
          + c.sigma_g**2 / 8
          + 19 * ls**2 / 8
          + 2 * c.c_g**2 * euclidean_norm(y0 - ref.y_star) ** 2
          + 2 * c.c_g**2 * euclidean_norm(ref.y_star) ** 2)
    return float(r)

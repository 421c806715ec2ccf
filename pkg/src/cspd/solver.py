"""Iteration loops for the fixed-step and adaptive primal-dual solvers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import prox, schedule as sched
from .core import (
    ConfigurationError,
    IterateState,
    NumericalDivergenceError,
    ProblemInstance,
    update_running_average,
)
from .rng import StreamSource

# Query-slot labels: slot 1 feeds the dual (value) queries of an iteration,
# slot 2 the primal (gradient) queries.
_SLOT_DUAL = 1
_SLOT_PRIMAL = 2


@dataclass(frozen=True)
class RunConfig:
    n_iters: int
    schedule: sched.StepSchedule
    seed: int
    checkpoints: Sequence[int] = ()
    initial_point: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = None
    run_id: int = 0

    def __post_init__(self):
        if self.n_iters < 1:
            raise ConfigurationError("n_iters must be >= 1")
        cps = sorted(int(c) for c in self.checkpoints)
        if cps and (cps[0] < 1 or cps[-1] > self.n_iters):
            raise ConfigurationError("checkpoints must lie in [1, n_iters]")
        object.__setattr__(self, "checkpoints", tuple(cps))


@dataclass
class CheckpointRecord:
    t: int
    x_bar: np.ndarray
    y_bar: np.ndarray
    gamma_norm_max: float
    lambda_norm_max: float
    wall_ms: float


@dataclass
class RunTrace:
    records: List[CheckpointRecord] = field(default_factory=list)
    final: Optional[IterateState] = None


def _initial_state(problem: ProblemInstance, config: RunConfig) -> IterateState:
    d = problem.dims
    if config.initial_point is not None:
        x0, y0, g0, l0 = (np.asarray(v, dtype=float) for v in config.initial_point)
    else:
        x0 = prox.project(problem.proj_x, np.zeros(d.d_x))
        y0 = prox.project(problem.proj_y, np.zeros(d.d_y))
        g0 = np.zeros(d.m1)
        l0 = np.zeros(d.m2)
    if x0.shape != (d.d_x,) or y0.shape != (d.d_y,):
        raise ConfigurationError("initial primal point has wrong dimensions")
    if g0.shape != (d.m1,) or l0.shape != (d.m2,):
        raise ConfigurationError("initial dual point has wrong dimensions")
    return IterateState(x=x0, y=y0, gamma=g0, lam=l0)


def _check_sample(v: np.ndarray, expected: tuple, what: str, t: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != expected:
        raise ConfigurationError(
            f"oracle returned {what} of shape {v.shape}, expected {expected} (iteration {t})"
        )
    return v


def _run(problem: ProblemInstance, config: RunConfig, adaptive: bool) -> RunTrace:
    d = problem.dims
    state = _initial_state(problem, config)
    x0 = state.x.copy()
    y0 = state.y.copy()
    g0 = state.gamma.copy()
    l0 = state.lam.copy()
    if adaptive and (np.any(g0 != 0) or np.any(l0 != 0)):
        raise ConfigurationError("adaptive runs require gamma_0 = lambda_0 = 0")

    oracle = problem.oracle
    streams = StreamSource(config.seed, config.run_id)
    step_at = config.schedule.at
    proj_x, proj_y = problem.proj_x, problem.proj_y
    checkpoints = set(config.checkpoints)
    trace = RunTrace()
    t_start = time.perf_counter()

    x, y, gamma, lam = state.x, state.y, state.gamma, state.lam
    for t in range(config.n_iters):
        s = step_at(t)
        rng_dual = streams.stream(_SLOT_DUAL, t)
        rng_primal = streams.stream(_SLOT_PRIMAL, t)

        if d.m1:
            h_s = _check_sample(oracle.sample_h_value(x, rng_dual), (d.m1,), "h value", t)
            if adaptive:
                gamma = prox.dual_prox_adaptive(gamma, g0, h_s, s.beta, s.tau)
            else:
                gamma = prox.dual_prox_basic(gamma, h_s, s.beta)
        if d.m2:
            g_s = _check_sample(oracle.sample_g_value(y, rng_dual), (d.m2,), "g value", t)
            if adaptive:
                lam = prox.dual_prox_adaptive(lam, l0, g_s, s.alpha, s.nu)
            else:
                lam = prox.dual_prox_basic(lam, g_s, s.alpha)

        gx = _check_sample(oracle.sample_grad_x(x, y, rng_primal), (d.d_x,), "grad_x", t)
        if d.m1:
            hj = _check_sample(oracle.sample_h_jacobian(x, rng_primal), (d.d_x, d.m1),
                               "h jacobian", t)
            gx = prox.combine_grad_x(gx, hj, gamma)
        if adaptive:
            x_new = prox.primal_prox_adaptive(x, x0, gx, s.eta, s.rho, proj_x)
        else:
            x_new = prox.primal_prox_basic(x, gx, s.eta, proj_x)

        gy = _check_sample(oracle.sample_grad_y(x, y, rng_primal), (d.d_y,), "grad_y", t)
        if d.m2:
            gj = _check_sample(oracle.sample_g_jacobian(y, rng_primal), (d.d_y, d.m2),
                               "g jacobian", t)
            gy = prox.combine_grad_y(gy, gj, lam)
        # Ascent step: same prox map with the direction negated.
        if adaptive:
            y_new = prox.primal_prox_adaptive(y, y0, -gy, s.kappa, s.phi, proj_y)
        else:
            y_new = prox.primal_prox_basic(y, -gy, s.kappa, proj_y)

        if not (np.isfinite(x_new).all() and np.isfinite(y_new).all()
                and np.isfinite(gamma).all() and np.isfinite(lam).all()):
            raise NumericalDivergenceError(t)

        x, y = x_new, y_new
        update_running_average(state, x, y)
        if d.m1:
            state.max_gamma_norm = max(state.max_gamma_norm, float(np.linalg.norm(gamma)))
        if d.m2:
            state.max_lambda_norm = max(state.max_lambda_norm, float(np.linalg.norm(lam)))

        if (t + 1) in checkpoints:
            trace.records.append(CheckpointRecord(
                t=t + 1,
                x_bar=state.x_sum / (t + 1),
                y_bar=state.y_sum / (t + 1),
                gamma_norm_max=state.max_gamma_norm,
                lambda_norm_max=state.max_lambda_norm,
                wall_ms=(time.perf_counter() - t_start) * 1e3,
            ))

    state.x, state.y, state.gamma, state.lam = x, y, gamma, lam
    trace.final = state
    return trace


def run_basic_cspd(problem: ProblemInstance, config: RunConfig) -> RunTrace:
    """Fixed-step primal-dual loop; requires a fixed-horizon schedule matching n_iters."""
    if config.schedule.kind != sched.BASIC:
        raise ConfigurationError("run_basic_cspd requires a fixed-horizon schedule")
    if config.schedule.n != config.n_iters:
        raise ConfigurationError(
            f"schedule horizon {config.schedule.n} != n_iters {config.n_iters}"
        )
    return _run(problem, config, adaptive=False)


def run_adp_cspd(problem: ProblemInstance, config: RunConfig) -> RunTrace:
    """Adaptive (horizon-free) primal-dual loop with anchored prox maps."""
    if config.schedule.kind != sched.ADAPTIVE:
        raise ConfigurationError("run_adp_cspd requires an adaptive schedule")
    return _run(problem, config, adaptive=True)

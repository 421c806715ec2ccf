"""Bundled problem generators.

Three instances ship with the library: a quadratic-constrained quadratic
saddle problem, a robust-pricing problem with many affine expectation
constraints, and a tiny analytic zero-sum game used as a ground-truth oracle
in the tests.  All generators are deterministic given (spec, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigurationError,
    Dims,
    ExactOracle,
    ProblemConstants,
    ProblemInstance,
    ReferenceSolution,
)
from .prox import Ball, Box, FullSpace
from .schedule import ADAPTIVE, StepSchedule

_DATA_STREAM = 0xD47A  # generation key suffix, distinct from solver run streams

INTERIOR = "interior"
BOUNDARY = "boundary"
_THETA_FACTORS = {INTERIOR: 1.2, BOUNDARY: 0.9}


def _data_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed), _DATA_STREAM]))


# ---------------------------------------------------------------------------
# Quadratic-constrained quadratic saddle problem


@dataclass(frozen=True)
class QcqpSaddleSpec:
    d: int = 50
    m: int = 15
    seed: int = 0
    theta_mode: str = INTERIOR

    def __post_init__(self):
        if self.d < 1 or self.m < 0:
            raise ConfigurationError("need d >= 1 and m >= 0")
        if self.theta_mode not in _THETA_FACTORS:
            raise ConfigurationError(f"unknown theta_mode {self.theta_mode!r}")


class QcqpOracle:
    """Sampling oracle for the quadratic saddle instance.

    Objective noise is Uniform[0,1]^d added to the x-gradient; each
    constraint draws standard normal noise inside the squared term.
    """

    def __init__(self, x_tilde0, Q, s_mat, offsets, theta):
        self.x_tilde0 = x_tilde0
        self.Q = Q
        self.s_mat = s_mat          # (d, m), column j = s_j
        self.offsets = offsets      # (m,), entry j = x_tilde_j . s_j
        self.theta = theta

    def _a(self, x):
        # a_j = (x - x_tilde_j) . s_j
        return x @ self.s_mat - self.offsets

    def sample_grad_x(self, x, y, rng):
        omega = rng.random(len(x))
        return 2.0 * (self.Q @ (x - self.x_tilde0)) + omega + y

    def sample_grad_y(self, x, y, rng):
        return x.copy()

    def sample_h_value(self, x, rng):
        xi = rng.standard_normal(len(self.theta))
        return (self._a(x) + xi) ** 2 - self.theta

    def sample_h_jacobian(self, x, rng):
        xi = rng.standard_normal(len(self.theta))
        return self.s_mat * (2.0 * (self._a(x) + xi))

    def sample_g_value(self, y, rng):
        return np.zeros(0)

    def sample_g_jacobian(self, y, rng):
        return np.zeros((len(y), 0))


def _qcqp_exact(x_tilde0, Q, s_mat, offsets, theta) -> ExactOracle:
    half = 0.5  # mean of the Uniform[0,1] objective noise

    def f(x, y):
        w = x - x_tilde0
        return float(w @ (Q @ w) + half * np.sum(x) + x @ y)

    def grad_x(x, y):
        return 2.0 * (Q @ (x - x_tilde0)) + half + y

    def grad_y(x, y):
        return x.copy()

    def h(x):
        a = x @ s_mat - offsets
        return a**2 + 1.0 - theta  # +1 is the constraint noise variance

    def h_jacobian(x):
        a = x @ s_mat - offsets
        return s_mat * (2.0 * a)

    return ExactOracle(
        f=f, grad_x=grad_x, grad_y=grad_y,
        h=h, h_jacobian=h_jacobian,
        g=lambda y: np.zeros(0),
        g_jacobian=lambda y: np.zeros((len(y), 0)),
    )


def _qcqp_constants(x_ref, x_tilde0, Q, x_tildes, s_mat, offsets) -> ProblemConstants:
    # Bounds taken over a radius-3 neighbourhood of the reference point; the
    # +3 terms absorb that radius (and, for the constraint noise, 3 standard
    # deviations of the inner normal draw).
    s_norms = np.linalg.norm(s_mat, axis=0)  # ||s_j||
    c_x = (2.0 * float(np.linalg.norm(Q, 2)) * (float(np.linalg.norm(x_ref - x_tilde0)) + 3.0)
           + math.sqrt(len(x_ref)) + 1.0)
    c_y = float(np.linalg.norm(x_ref)) + 3.0
    if s_mat.shape[1]:
        # grad of h_j sample is 2((x - x_tilde_j).s_j + xi) s_j
        reach = np.linalg.norm(x_ref - x_tildes, axis=1) + 3.0
        c_h = float(np.max(2.0 * reach * s_norms))
        # per-component value noise 2 a_j xi + xi^2 - 1 has variance 4 a_j^2 + 2
        sigma_h = math.sqrt(float(np.sum(4.0 * (reach * s_norms) ** 2 + 2.0)))
    else:
        c_h, sigma_h = 1.0, 0.0
    # No y-side constraints: mirror c_h so the experiment presets give the
    # same primal coefficient on both blocks.
    return ProblemConstants(c_x=c_x, c_y=c_y, c_h=c_h, c_g=c_h,
                            sigma_h=sigma_h, sigma_g=0.0)


def generate_qcqp(spec: QcqpSaddleSpec) -> ProblemInstance:
    """Quadratic saddle instance; x unconstrained in space, y in the unit ball.

    Constraint levels are calibrated from the unconstrained minimizer so the
    optimum lands strictly inside (interior mode) or outside (boundary mode)
    the feasible region.
    """
    from .metrics import solve_reference  # local import, avoids cycle

    rng = _data_rng(spec.seed)
    d, m = spec.d, spec.m
    x_tilde0 = rng.normal(0.0, math.sqrt(0.3), size=d)
    L = rng.standard_normal((d, d))
    Q = L @ L.T + np.eye(d)
    x_tildes = rng.standard_normal((m, d))
    s_mat = rng.random((d, m))
    offsets = np.einsum("jd,dj->j", x_tildes, s_mat)
    c_y_radius = 1.0
    y0 = np.zeros(d)

    # Reference-solver step scales sized to the objective curvature; the
    # solver backs off further on its own if the constraint terms bite.
    lip = 2.0 * float(np.linalg.eigvalsh(Q)[-1])
    ref_schedule = StepSchedule(ADAPTIVE, ProblemConstants(),
                                primal_scale=max(1.0, lip / 16.0))

    # Unconstrained solve to place the constraint levels.
    free = ProblemInstance(
        dims=Dims(d_x=d, d_y=d, m1=0, m2=0),
        constants=ProblemConstants(),
        oracle=QcqpOracle(x_tilde0, Q, s_mat[:, :0], offsets[:0], np.zeros(0)),
        proj_x=FullSpace(),
        proj_y=Ball(center=y0, radius=c_y_radius),
        exact=_qcqp_exact(x_tilde0, Q, s_mat[:, :0], offsets[:0], np.zeros(0)),
        name="qcqp-unconstrained",
    )
    x_hat = solve_reference(free, target_tol=1e-4, schedule=ref_schedule).x_star

    a_hat = x_hat @ s_mat - offsets
    theta_hat = a_hat**2 + 1.0
    theta = _THETA_FACTORS[spec.theta_mode] * theta_hat
    # Shrinking theta below the noise-variance floor of 1 makes a constraint
    # unsatisfiable for every x (H_j >= 1 - theta_j > 0), i.e. the generated
    # problem would be infeasible; reject the draw instead of solving it.
    if np.any(theta <= 1.0):
        raise ConfigurationError(
            f"seed {spec.seed} yields an infeasible instance "
            f"(min theta = {theta.min():.4f} <= 1); choose another seed"
        )

    constants = _qcqp_constants(x_hat, x_tilde0, Q, x_tildes, s_mat, offsets)
    oracle = QcqpOracle(x_tilde0, Q, s_mat, offsets, theta)
    exact = _qcqp_exact(x_tilde0, Q, s_mat, offsets, theta)

    def best_response_y(x_bar):
        # Support function of the unit ball centered at y0.
        w = x_bar - x_tilde0
        return float(w @ (Q @ w) + 0.5 * np.sum(x_bar)
                     + x_bar @ y0 + c_y_radius * np.linalg.norm(x_bar))

    return ProblemInstance(
        dims=Dims(d_x=d, d_y=d, m1=m, m2=0),
        constants=constants,
        oracle=oracle,
        proj_x=FullSpace(),
        proj_y=Ball(center=y0, radius=c_y_radius),
        exact=exact,
        name=f"qcqp-d{d}-m{m}-{spec.theta_mode}",
        best_response_y=best_response_y,
        best_response_x=None,  # feasible x-set is unbounded
        reference_schedule=ref_schedule,
    )


# ---------------------------------------------------------------------------
# Robust optimal pricing


@dataclass(frozen=True)
class PricingSpec:
    d: int = 100
    m: int = 5000
    seed: int = 0
    p_min: float = 0.0
    p_max: float = 30.0

    def __post_init__(self):
        if self.d < 1 or self.m < 0:
            raise ConfigurationError("need d >= 1 and m >= 0")
        if not self.p_min < self.p_max:
            raise ConfigurationError("need p_min < p_max")


class PricingOracle:
    """Sampling oracle for the pricing instance.

    The demand model is affine in the parameter vector, so the constraint
    Jacobian is deterministic; standard normal demand noise enters the
    constraint values and the price gradient.
    """

    def __init__(self, s_live, hist_s, hist_p, demand_floor):
        self.s_live = s_live
        self.hist_s = hist_s            # (m, d)
        self.hist_p = hist_p            # (m,)
        self.demand_floor = demand_floor
        # Jacobian of theta -> -(demand at history), shape (d+1, m).
        self.h_jac = -np.vstack([hist_p[None, :], hist_s.T])

    def sample_grad_x(self, x, y, rng):
        p = y[0]
        return p * np.concatenate(([p], self.s_live))

    def sample_grad_y(self, x, y, rng):
        xi = rng.standard_normal()
        return np.array([self.s_live @ x[1:] + 2.0 * x[0] * y[0] + xi])

    def sample_h_value(self, x, rng):
        xi = rng.standard_normal(len(self.hist_p))
        demand = self.hist_s @ x[1:] + x[0] * self.hist_p + xi
        return self.demand_floor - demand

    def sample_h_jacobian(self, x, rng):
        return self.h_jac.copy()

    def sample_g_value(self, y, rng):
        return np.zeros(0)

    def sample_g_jacobian(self, y, rng):
        return np.zeros((len(y), 0))


def _pricing_exact(s_live, hist_s, hist_p, demand_floor) -> ExactOracle:
    h_jac = -np.vstack([hist_p[None, :], hist_s.T])

    def f(x, y):
        p = y[0]
        return float(p * (s_live @ x[1:] + x[0] * p))

    def grad_x(x, y):
        p = y[0]
        return p * np.concatenate(([p], s_live))

    def grad_y(x, y):
        return np.array([s_live @ x[1:] + 2.0 * x[0] * y[0]])

    def h(x):
        return demand_floor - (hist_s @ x[1:] + x[0] * hist_p)

    return ExactOracle(
        f=f, grad_x=grad_x, grad_y=grad_y,
        h=h, h_jacobian=lambda x: h_jac.copy(),
        g=lambda y: np.zeros(0),
        g_jacobian=lambda y: np.zeros((len(y), 0)),
    )


def generate_pricing(spec: PricingSpec) -> ProblemInstance:
    """Robust pricing instance: theta is the min player over a box, the scalar
    price the max player over [p_min, p_max]."""
    rng = _data_rng(spec.seed)
    d, m = spec.d, spec.m
    lower = np.empty(d + 1)
    lower[0] = -5.0
    lower[1:] = rng.uniform(0.0, 2.0, size=d)
    upper = lower + rng.uniform(0.0, 3.0, size=d + 1)

    hist_s = rng.uniform(0.0, 3.0, size=(m, d))
    hist_p = rng.uniform(10.0, 20.0, size=m)
    theta_tilde = rng.uniform(lower, upper)
    slack = rng.uniform(0.0, 5.0, size=m)
    demand_floor = hist_s @ theta_tilde[1:] + theta_tilde[0] * hist_p + slack
    s_live = rng.uniform(0.0, 3.0, size=d)

    c_x = spec.p_max * math.sqrt(spec.p_max**2 + float(s_live @ s_live))
    c_y = float(s_live @ upper[1:] + 2.0 * abs(lower[0]) * spec.p_max + 1.0)
    c_h = math.sqrt(float(np.sum(hist_p**2) + np.sum(hist_s**2))) if m else 1.0
    sigma_h = math.sqrt(m)  # E||xi||^2 = m for iid standard normal noise

    oracle = PricingOracle(s_live, hist_s, hist_p, demand_floor)
    exact = _pricing_exact(s_live, hist_s, hist_p, demand_floor)

    def best_response_y(x_bar):
        # Concave quadratic in p; vertex clipped to the price box.
        a = x_bar[0]
        b = float(s_live @ x_bar[1:])
        p = -b / (2.0 * a) if a < 0 else spec.p_max
        p = min(max(p, spec.p_min), spec.p_max)
        return float(p * (b + a * p))

    return ProblemInstance(
        dims=Dims(d_x=d + 1, d_y=1, m1=m, m2=0),
        constants=ProblemConstants(c_x=c_x, c_y=c_y, c_h=c_h, c_g=c_h,
                                   sigma_h=sigma_h, sigma_g=0.0),
        oracle=oracle,
        proj_x=Box(lower=lower, upper=upper),
        proj_y=Box(lower=np.array([spec.p_min]), upper=np.array([spec.p_max])),
        exact=exact,
        name=f"pricing-d{d}-m{m}",
        best_response_y=best_response_y,
        best_response_x=None,  # min over the constrained box is an LP; not bundled
        reference_schedule=StepSchedule(
            ADAPTIVE, ProblemConstants(),
            primal_scale=max(1.0, (spec.p_max**2
                                   + spec.p_max * float(np.linalg.norm(s_live))) / 16.0)),
    )


# ---------------------------------------------------------------------------
# Analytic zero-sum toy


class ToyOracle:
    """Matching-pennies payoff with one budget constraint per player."""

    def __init__(self, A, c, budget, grad_noise, h_noise):
        self.A = A
        self.c = c
        self.budget = budget
        self.grad_noise = grad_noise
        self.h_noise = h_noise

    def sample_grad_x(self, x, y, rng):
        return self.A @ y + self.grad_noise * rng.standard_normal(2)

    def sample_grad_y(self, x, y, rng):
        return self.A.T @ x + self.grad_noise * rng.standard_normal(2)

    def sample_h_value(self, x, rng):
        return np.array([self.c @ x - self.budget + self.h_noise * rng.standard_normal()])

    def sample_h_jacobian(self, x, rng):
        return self.c.reshape(2, 1).copy()

    def sample_g_value(self, y, rng):
        return np.array([self.c @ y - self.budget + self.h_noise * rng.standard_normal()])

    def sample_g_jacobian(self, y, rng):
        return self.c.reshape(2, 1).copy()


def _feasible_polygon_vertices(c, budget):
    # Vertices of [0,1]^2 intersected with {c.v <= budget}, for the bundled
    # parameters (the cut removes the (1,1) corner only).
    verts = [np.array(v, dtype=float)
             for v in ((0, 0), (1, 0), (0, 1), (1, 1))]
    verts = [v for v in verts if c @ v <= budget + 1e-12]
    # Intersections of the budget line with the box edges.
    for i in range(2):
        j = 1 - i
        for fixed in (0.0, 1.0):
            if c[j] == 0:
                continue
            other = (budget - c[i] * fixed) / c[j]
            if 0.0 <= other <= 1.0:
                v = np.empty(2)
                v[i] = fixed
                v[j] = other
                verts.append(v)
    return np.array(verts)


def _toy_grid_saddle(A, c, budget, resolution=1e-3):
    """Brute-force saddle: the inner maximization is linear, so it is exact
    over the feasible polygon vertices; the outer player is minimized over a
    dense feasible grid with one local refinement pass."""
    verts = _feasible_polygon_vertices(c, budget)

    def best_point(payoff_vectors):
        # payoff_vectors: (n, 2) rows w; value(w) = max_v w . v over vertices
        return np.max(payoff_vectors @ verts.T, axis=1)

    def refine(objective, start, step):
        pt = start.copy()
        while step > 1e-9:
            g1, g2 = np.meshgrid(pt[0] + step * np.arange(-2, 3),
                                 pt[1] + step * np.arange(-2, 3))
            cand = np.column_stack([g1.ravel(), g2.ravel()])
            cand = np.clip(cand, 0.0, 1.0)
            cand = cand[cand @ c <= budget + 1e-12]
            vals = objective(cand)
            pt = cand[int(np.argmin(vals))]
            step /= 2.0
        return pt

    n = int(round(1.0 / resolution)) + 1
    g = np.linspace(0.0, 1.0, n)
    g1, g2 = np.meshgrid(g, g)
    grid = np.column_stack([g1.ravel(), g2.ravel()])
    grid = grid[grid @ c <= budget + 1e-12]

    x_obj = lambda pts: best_point(pts @ A)          # max player responds
    y_obj = lambda pts: best_point(-(pts @ A.T))     # min player responds
    x_star = refine(x_obj, grid[int(np.argmin(x_obj(grid)))], resolution)
    y_star = refine(y_obj, grid[int(np.argmin(y_obj(grid)))], resolution)
    return x_star, y_star


def generate_zero_sum_toy(grad_noise: float = 0.5, h_noise: float = 1.0,
                          budget: float = 1.4) -> ProblemInstance:
    """2x2 zero-sum game with a budget constraint per player and a stored
    grid-search reference saddle."""
    A = np.array([[1.0, -1.0], [-1.0, 1.0]])
    c = np.array([1.0, 2.0])
    box = Box(lower=np.zeros(2), upper=np.ones(2))
    oracle = ToyOracle(A, c, budget, grad_noise, h_noise)
    exact = ExactOracle(
        f=lambda x, y: float(x @ A @ y),
        grad_x=lambda x, y: A @ y,
        grad_y=lambda x, y: A.T @ x,
        h=lambda x: np.array([c @ x - budget]),
        h_jacobian=lambda x: c.reshape(2, 1).copy(),
        g=lambda y: np.array([c @ y - budget]),
        g_jacobian=lambda y: c.reshape(2, 1).copy(),
    )
    x_star, y_star = _toy_grid_saddle(A, c, budget)
    reference = ReferenceSolution(
        x_star=x_star, y_star=y_star,
        gamma_star=np.zeros(1), lambda_star=np.zeros(1),
        f_star=float(x_star @ A @ y_star),
        tolerance=1e-3,
    )
    verts = _feasible_polygon_vertices(c, budget)

    def best_response_y(x_bar):
        return float(np.max((x_bar @ A) @ verts.T))

    def best_response_x(y_bar):
        return float(np.min(verts @ (A @ y_bar)))

    c_x = math.sqrt(2.0 + 2.0 * grad_noise**2)
    return ProblemInstance(
        dims=Dims(d_x=2, d_y=2, m1=1, m2=1),
        constants=ProblemConstants(c_x=c_x, c_y=c_x,
                                   c_h=float(np.linalg.norm(c)),
                                   c_g=float(np.linalg.norm(c)),
                                   sigma_h=h_noise, sigma_g=h_noise),
        oracle=oracle,
        proj_x=box,
        proj_y=box,
        exact=exact,
        name="zero-sum-toy",
        best_response_y=best_response_y,
        best_response_x=best_response_x,
        reference=reference,
    )


# ---------------------------------------------------------------------------
# Experiment presets

# Leading step-size coefficients (dual, primal) used by the benchmark runs,
# sized to the bundled instance scales: the qcqp pair damps both players
# enough that the whole benchmark sweep sits inside the stochastic
# 1/sqrt(N) regime of either solver.
PRESET_COEFFS = {
    "qcqp": (30.0, 300.0),
    "pricing": (100.0, 10.0),
    "toy": (4.0, 4.0),
}


def preset_schedules(kind: str, constants: ProblemConstants, n: int):
    """(basic, adaptive) schedules with the experiment coefficients."""
    dual, primal = PRESET_COEFFS[kind]
    return (StepSchedule.basic_preset(n, constants, dual, primal),
            StepSchedule.adaptive_preset(constants, dual, primal))

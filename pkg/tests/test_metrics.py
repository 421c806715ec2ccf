import math

import numpy as np
import pytest

from cspd import metrics, problems, prox
from cspd.core import (
    ConfigurationError,
    Dims,
    ExactOracle,
    ProblemConstants,
    ProblemInstance,
    ReferenceSolution,
)
from cspd.schedule import BASIC, StepSchedule


# ---------------------------------------------------------------------------
# slope_fit


def test_slope_fit_exact_half_line():
    fit = metrics.slope_fit([(10, 1.0), (100, 10**-0.5), (1000, 0.1)])
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_slope_fit_flat_line():
    fit = metrics.slope_fit([(10, 2.0), (100, 2.0), (1000, 2.0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_slope_fit_unit_slope():
    pts = [(math.e**k, math.e**-k) for k in range(3)]
    assert metrics.slope_fit(pts).slope == pytest.approx(-1.0, abs=1e-12)


def test_slope_fit_noisy_recovery():
    rng = np.random.default_rng(0)
    for _ in range(10):
        slope = rng.uniform(-1.5, -0.2)
        ns = np.geomspace(10, 1e5, 9)
        vals = ns**slope * (1 + rng.uniform(-0.01, 0.01, size=9))
        fit = metrics.slope_fit(list(zip(ns, vals)))
        assert fit.slope == pytest.approx(slope, abs=0.02)


def test_slope_fit_excludes_nonpositive():
    fit = metrics.slope_fit([(10, 1.0), (100, 0.0), (1000, 0.1), (10000, 0.03)])
    assert fit.n_excluded == 1
    with pytest.raises(ConfigurationError):
        metrics.slope_fit([(10, 1.0), (100, -1.0), (1000, 0.0)])


# ---------------------------------------------------------------------------
# theory constant


def _zero_ref(m1=1, m2=1):
    return ReferenceSolution(
        x_star=np.zeros(2), y_star=np.zeros(2),
        gamma_star=np.zeros(m1), lambda_star=np.zeros(m2),
        f_star=0.0, tolerance=1e-6)


def test_theory_constant_zeroed_example():
    init = (np.zeros(2), np.zeros(2), np.zeros(1), np.zeros(1))
    r = metrics.theory_constant_R(_zero_ref(), init, ProblemConstants())
    assert r == pytest.approx(2.75, abs=1e-12)


def test_theory_constant_cx_homogeneity():
    init = (np.zeros(2), np.zeros(2), np.zeros(1), np.zeros(1))
    base = metrics.theory_constant_R(_zero_ref(), init, ProblemConstants(c_x=1.0))
    doubled = metrics.theory_constant_R(_zero_ref(), init, ProblemConstants(c_x=2.0))
    assert doubled - base == pytest.approx(3 * 11 / 8, abs=1e-12)


def test_theory_constant_requires_positive_constants():
    init = (np.zeros(2), np.zeros(2), np.zeros(1), np.zeros(1))
    with pytest.raises(ConfigurationError):
        metrics.theory_constant_R(_zero_ref(), init, ProblemConstants(c_h=0.0))


# ---------------------------------------------------------------------------
# evaluate / duality gap on the toy


@pytest.fixture(scope="module")
def toy():
    return problems.generate_zero_sum_toy()


def test_evaluate_at_reference(toy):
    ref = toy.reference
    rep = metrics.evaluate((ref.x_star, ref.y_star), toy, ref)
    tol = 10 * ref.tolerance
    assert abs(rep.obj_gap) <= tol
    assert rep.feas_x <= tol and rep.feas_y <= tol
    assert rep.duality_gap is not None and abs(rep.duality_gap) <= tol


def test_evaluate_feasibility_positive_part():
    ref = _zero_ref(m1=3, m2=0)
    problem = ProblemInstance(
        dims=Dims(d_x=2, d_y=2, m1=3, m2=0),
        constants=ProblemConstants(),
        oracle=None,
        proj_x=prox.FullSpace(), proj_y=prox.FullSpace(),
        exact=ExactOracle(
            f=lambda x, y: 0.0,
            grad_x=lambda x, y: np.zeros(2), grad_y=lambda x, y: np.zeros(2),
            h=lambda x: np.array([-1.0, 2.0, 0.0]),
            h_jacobian=lambda x: np.zeros((2, 3)),
            g=lambda y: np.zeros(0), g_jacobian=lambda y: np.zeros((2, 0)),
        ))
    rep = metrics.evaluate((np.zeros(2), np.zeros(2)), problem, ref)
    assert rep.feas_x == 2.0


def test_evaluate_lower_bound_holds_off_saddle(toy):
    rng = np.random.default_rng(2)
    ref = toy.reference
    for _ in range(25):
        x = rng.uniform(0, 1, size=2)
        y = rng.uniform(0, 1, size=2)
        rep = metrics.evaluate((x, y), toy, ref)
        assert rep.obj_gap >= rep.lower_bound - 10 * ref.tolerance
        if rep.duality_gap is not None:
            assert rep.duality_gap >= rep.obj_gap - 1e-9


def test_evaluate_requires_exact_oracle(toy):
    stripped = ProblemInstance(
        dims=toy.dims, constants=toy.constants, oracle=toy.oracle,
        proj_x=toy.proj_x, proj_y=toy.proj_y, exact=None)
    with pytest.raises(ConfigurationError):
        metrics.evaluate((np.zeros(2), np.zeros(2)), stripped, toy.reference)


def test_duality_gap_positive_off_saddle(toy):
    gap = metrics.duality_gap((np.array([1.0, 0.0]), np.array([0.3, 0.3])), toy)
    assert gap is not None and gap > 0


# ---------------------------------------------------------------------------
# reference solver


def test_reference_matches_toy_grid_saddle(toy):
    ref = metrics.solve_reference(toy, 1e-5)
    grid = toy.reference
    assert np.linalg.norm(ref.x_star - grid.x_star) <= 1e-4
    assert np.linalg.norm(ref.y_star - grid.y_star) <= 1e-4
    assert abs(ref.f_star - grid.f_star) <= 1e-4


def test_reference_idempotent(toy):
    tol = 1e-5
    ref = metrics.solve_reference(toy, tol)
    again = metrics.solve_reference(
        toy, tol,
        initial_point=(ref.x_star, ref.y_star, ref.gamma_star, ref.lambda_star))
    assert np.linalg.norm(again.x_star - ref.x_star) <= tol
    assert np.linalg.norm(again.y_star - ref.y_star) <= tol


def test_reference_rejects_bad_inputs(toy):
    with pytest.raises(ConfigurationError):
        metrics.solve_reference(toy, -1.0)
    with pytest.raises(ConfigurationError):
        metrics.solve_reference(toy, 1e-4,
                                schedule=StepSchedule(BASIC, toy.constants, n=10))


def test_reference_interior_duals_clamped_to_zero():
    problem = problems.generate_qcqp(problems.QcqpSaddleSpec(
        d=6, m=4, seed=3, theta_mode=problems.INTERIOR))
    ref = metrics.solve_reference(problem, 1e-4,
                                  schedule=problem.reference_schedule)
    # Strictly feasible optimum: every constraint slack, every multiplier 0.
    assert np.all(problem.exact.h(ref.x_star) < 0)
    assert np.all(ref.gamma_star == 0.0)

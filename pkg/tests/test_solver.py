import numpy as np
import pytest

from cspd import problems, prox, solver
from cspd.core import (
    ConfigurationError,
    Dims,
    ExactOracle,
    NumericalDivergenceError,
    ProblemConstants,
    ProblemInstance,
)
from cspd.schedule import ADAPTIVE, BASIC, StepSchedule


class BilinearOracle:
    """Deterministic oracle for f(x, y) = x * y on [-1, 1]^2."""

    def sample_grad_x(self, x, y, rng):
        return y.copy()

    def sample_grad_y(self, x, y, rng):
        return x.copy()

    def sample_h_value(self, x, rng):
        return np.zeros(0)

    def sample_h_jacobian(self, x, rng):
        return np.zeros((1, 0))

    def sample_g_value(self, y, rng):
        return np.zeros(0)

    def sample_g_jacobian(self, y, rng):
        return np.zeros((1, 0))


def bilinear_problem():
    box = prox.Box(lower=np.array([-1.0]), upper=np.array([1.0]))
    return ProblemInstance(
        dims=Dims(d_x=1, d_y=1),
        constants=ProblemConstants(),
        oracle=BilinearOracle(),
        proj_x=box,
        proj_y=box,
        exact=ExactOracle(
            f=lambda x, y: float(x[0] * y[0]),
            grad_x=lambda x, y: y.copy(),
            grad_y=lambda x, y: x.copy(),
            h=lambda x: np.zeros(0),
            h_jacobian=lambda x: np.zeros((1, 0)),
            g=lambda y: np.zeros(0),
            g_jacobian=lambda y: np.zeros((1, 0)),
        ),
        name="bilinear",
    )


def _basic_recursion(x, y, eta, kappa, n):
    """Independent replica of the fixed-step loop for the bilinear game."""
    xs, ys = [], []
    for _ in range(n):
        x_new = min(max(x - y / eta, -1.0), 1.0)
        y_new = min(max(y + x / kappa, -1.0), 1.0)
        x, y = x_new, y_new
        xs.append(x)
        ys.append(y)
    return x, y, np.mean(xs), np.mean(ys)


def test_basic_matches_independent_recursion():
    problem = bilinear_problem()
    n = 1_000
    sch = StepSchedule(BASIC, problem.constants, n=n)
    start = (np.array([0.5]), np.array([0.5]), np.zeros(0), np.zeros(0))
    trace = solver.run_basic_cspd(problem, solver.RunConfig(
        n_iters=n, schedule=sch, seed=0, checkpoints=[n], initial_point=start))
    s = sch.at(0)
    x, y, x_bar, y_bar = _basic_recursion(0.5, 0.5, s.eta, s.kappa, n)
    assert trace.final.x[0] == x and trace.final.y[0] == y
    assert trace.records[0].x_bar[0] == pytest.approx(x_bar, abs=1e-15)
    assert trace.records[0].y_bar[0] == pytest.approx(y_bar, abs=1e-15)


def test_basic_bilinear_average_near_saddle():
    problem = bilinear_problem()
    n = 10_000
    sch = StepSchedule(BASIC, problem.constants, n=n)
    start = (np.array([0.5]), np.array([0.5]), np.zeros(0), np.zeros(0))
    trace = solver.run_basic_cspd(problem, solver.RunConfig(
        n_iters=n, schedule=sch, seed=0, checkpoints=[n], initial_point=start))
    rec = trace.records[0]
    assert np.hypot(rec.x_bar[0], rec.y_bar[0]) <= 0.1


def test_adaptive_matches_independent_recursion():
    problem = bilinear_problem()
    n = 10_000
    sch = StepSchedule(ADAPTIVE, problem.constants)
    start = (np.array([0.5]), np.array([0.5]), np.zeros(0), np.zeros(0))
    trace = solver.run_adp_cspd(problem, solver.RunConfig(
        n_iters=n, schedule=sch, seed=0, checkpoints=[n], initial_point=start))
    # Independent replica of the anchored update for the bilinear game.
    x = y = x0 = y0 = 0.5
    xs, ys = [], []
    for t in range(n):
        s = sch.at(t)
        x_new = min(max((s.eta * x + s.rho * x0 - y) / (s.eta + s.rho), -1.0), 1.0)
        y_new = min(max((s.kappa * y + s.phi * y0 + x) / (s.kappa + s.phi), -1.0), 1.0)
        x, y = x_new, y_new
        xs.append(x)
        ys.append(y)
    rec = trace.records[0]
    assert rec.x_bar[0] == pytest.approx(np.mean(xs), abs=1e-15)
    assert rec.y_bar[0] == pytest.approx(np.mean(ys), abs=1e-15)
    # The anchored schedule damps harder than the fixed one; the average
    # still contracts well below the start.
    assert np.hypot(rec.x_bar[0], rec.y_bar[0]) <= 0.15


def test_zero_gradient_fixed_point():
    problem = bilinear_problem()
    n = 50
    sch = StepSchedule(BASIC, problem.constants, n=n)
    start = (np.array([0.0]), np.array([0.0]), np.zeros(0), np.zeros(0))
    trace = solver.run_basic_cspd(problem, solver.RunConfig(
        n_iters=n, schedule=sch, seed=0, checkpoints=[n], initial_point=start))
    assert trace.final.x[0] == 0.0 and trace.final.y[0] == 0.0


def test_determinism_bitwise():
    problem = problems.generate_zero_sum_toy()
    sch = StepSchedule.basic_preset(500, problem.constants, 4.0, 4.0)
    cfg = solver.RunConfig(n_iters=500, schedule=sch, seed=123, checkpoints=[100, 500])
    a = solver.run_basic_cspd(problem, cfg)
    b = solver.run_basic_cspd(problem, cfg)
    for ra, rb in zip(a.records, b.records):
        np.testing.assert_array_equal(ra.x_bar, rb.x_bar)
        np.testing.assert_array_equal(ra.y_bar, rb.y_bar)
        assert ra.gamma_norm_max == rb.gamma_norm_max
    np.testing.assert_array_equal(a.final.gamma, b.final.gamma)


def test_adaptive_prefix_consistency():
    problem = problems.generate_zero_sum_toy()
    sch = StepSchedule.adaptive_preset(problem.constants, 4.0, 4.0)
    long = solver.run_adp_cspd(problem, solver.RunConfig(
        n_iters=2_000, schedule=sch, seed=7, checkpoints=[400, 2_000]))
    short = solver.run_adp_cspd(problem, solver.RunConfig(
        n_iters=400, schedule=sch, seed=7, checkpoints=[400]))
    np.testing.assert_array_equal(long.records[0].x_bar, short.records[0].x_bar)
    np.testing.assert_array_equal(long.records[0].y_bar, short.records[0].y_bar)
    assert long.records[0].gamma_norm_max == short.records[0].gamma_norm_max


def test_iterates_feasible_and_duals_nonnegative():
    problem = problems.generate_zero_sum_toy()
    sch = StepSchedule.adaptive_preset(problem.constants, 4.0, 4.0)
    trace = solver.run_adp_cspd(problem, solver.RunConfig(
        n_iters=300, schedule=sch, seed=1, checkpoints=[300]))
    final = trace.final
    assert prox.contains(problem.proj_x, final.x, tol=1e-10)
    assert prox.contains(problem.proj_y, final.y, tol=1e-10)
    assert np.all(final.gamma >= 0) and np.all(final.lam >= 0)


def test_running_average_matches_checkpoint():
    problem = problems.generate_zero_sum_toy()
    n = 200
    sch = StepSchedule.basic_preset(n, problem.constants, 4.0, 4.0)
    cfg = solver.RunConfig(n_iters=n, schedule=sch, seed=5, checkpoints=list(range(1, n + 1)))
    trace = solver.run_basic_cspd(problem, cfg)
    # x_bar at checkpoint t is the mean of the first t recorded iterates;
    # reconstruct the raw iterates from successive partial sums.
    sums = np.array([r.x_bar * r.t for r in trace.records])
    iterates = np.diff(sums, axis=0, prepend=np.zeros((1, 2)))
    for t in (1, 7, 100, n):
        np.testing.assert_allclose(trace.records[t - 1].x_bar,
                                   iterates[:t].mean(axis=0), atol=1e-12)


def test_schedule_mismatch_errors():
    problem = bilinear_problem()
    adp = StepSchedule(ADAPTIVE, problem.constants)
    fixed = StepSchedule(BASIC, problem.constants, n=10)
    with pytest.raises(ConfigurationError):
        solver.run_basic_cspd(problem, solver.RunConfig(n_iters=10, schedule=adp, seed=0))
    with pytest.raises(ConfigurationError):
        solver.run_basic_cspd(problem, solver.RunConfig(n_iters=20, schedule=fixed, seed=0))
    with pytest.raises(ConfigurationError):
        solver.run_adp_cspd(problem, solver.RunConfig(n_iters=10, schedule=fixed, seed=0))


def test_adaptive_requires_zero_initial_duals():
    problem = problems.generate_zero_sum_toy()
    sch = StepSchedule.adaptive_preset(problem.constants, 4.0, 4.0)
    start = (np.full(2, 0.5), np.full(2, 0.5), np.array([1.0]), np.zeros(1))
    with pytest.raises(ConfigurationError):
        solver.run_adp_cspd(problem, solver.RunConfig(
            n_iters=10, schedule=sch, seed=0, initial_point=start))


def test_checkpoint_bounds_validated():
    problem = bilinear_problem()
    sch = StepSchedule(BASIC, problem.constants, n=10)
    with pytest.raises(ConfigurationError):
        solver.RunConfig(n_iters=10, schedule=sch, seed=0, checkpoints=[11])


class ExplodingOracle(BilinearOracle):
    def sample_grad_x(self, x, y, rng):
        return np.array([np.inf])


def test_divergence_reports_iteration():
    problem = bilinear_problem()
    bad = ProblemInstance(
        dims=problem.dims, constants=problem.constants, oracle=ExplodingOracle(),
        proj_x=prox.FullSpace(), proj_y=problem.proj_y, exact=problem.exact)
    sch = StepSchedule(BASIC, bad.constants, n=10)
    with pytest.raises(NumericalDivergenceError) as exc:
        solver.run_basic_cspd(bad, solver.RunConfig(n_iters=10, schedule=sch, seed=0))
    assert exc.value.iteration == 0

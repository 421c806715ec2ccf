import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cspd.core import ConfigurationError, ProblemConstants
from cspd.schedule import ADAPTIVE, BASIC, StepSchedule, adaptive_steps, basic_steps


def test_basic_steps_values():
    c = ProblemConstants(c_h=2.0, c_g=1.0)
    s = basic_steps(100, c)
    assert s.eta == 160.0
    assert s.beta == 40.0
    assert s.alpha == 40.0
    assert s.kappa == 40.0
    assert s.rho == s.phi == s.tau == s.nu == 0.0


def test_basic_steps_unit_horizon():
    s = basic_steps(1, ProblemConstants())
    assert (s.eta, s.kappa, s.alpha, s.beta) == (4.0, 4.0, 4.0, 4.0)


def test_basic_steps_sqrt_scaling():
    c = ProblemConstants(c_h=1.7, c_g=0.4)
    a, b = basic_steps(250, c), basic_steps(1000, c)
    for fld in ("eta", "kappa", "alpha", "beta"):
        assert getattr(b, fld) == pytest.approx(2.0 * getattr(a, fld), rel=1e-12)


def test_basic_steps_validation():
    with pytest.raises(ConfigurationError):
        basic_steps(0, ProblemConstants())


def test_adaptive_steps_t0_values():
    s = adaptive_steps(0, ProblemConstants())
    assert s.beta == pytest.approx(1.0)
    assert s.tau == pytest.approx(math.sqrt(2) - 1)
    assert s.eta == pytest.approx(16 * math.sqrt(2))
    assert s.rho == pytest.approx(16 * (math.sqrt(3) - math.sqrt(2)))


@given(st.integers(0, 10_000), st.floats(0.1, 50.0))
@settings(max_examples=300, deadline=None)
def test_adaptive_telescoping(t, c_h):
    c = ProblemConstants(c_h=c_h, c_g=c_h / 2 + 0.1)
    s, s_next = adaptive_steps(t, c), adaptive_steps(t + 1, c)
    assert s.beta + s.tau == pytest.approx(s_next.beta, abs=1e-12 * max(1, s.beta))
    assert s.eta + s.rho == pytest.approx(s_next.eta, abs=1e-12 * max(1, s.eta))
    assert s.alpha + s.nu == pytest.approx(s_next.alpha, abs=1e-12 * max(1, s.alpha))
    assert s.kappa + s.phi == pytest.approx(s_next.kappa, abs=1e-12 * max(1, s.kappa))


def test_adaptive_telescoping_sum():
    c = ProblemConstants(c_h=3.0)
    n = 500
    total = adaptive_steps(0, c).beta + sum(adaptive_steps(t, c).tau for t in range(n))
    assert total == pytest.approx(c.c_h**2 * math.sqrt(n + 1), rel=1e-9)


def test_adaptive_monotone():
    c = ProblemConstants(c_h=1.3, c_g=2.1)
    prev = adaptive_steps(0, c)
    for t in range(1, 200):
        s = adaptive_steps(t, c)
        assert s.eta >= prev.eta and s.beta >= prev.beta
        assert 0 < s.tau < prev.tau and 0 < s.rho < prev.rho
        prev = s


def test_schedule_kind_validation():
    with pytest.raises(ConfigurationError):
        StepSchedule("nope", ProblemConstants())
    with pytest.raises(ConfigurationError):
        StepSchedule(BASIC, ProblemConstants())  # missing horizon
    with pytest.raises(ConfigurationError):
        StepSchedule(ADAPTIVE, ProblemConstants(), dual_scale=0.0)


def test_basic_schedule_constant_in_t():
    sch = StepSchedule(BASIC, ProblemConstants(), n=64)
    assert sch.at(0) == sch.at(63)


def test_presets_cancel_constraint_constant():
    c = ProblemConstants(c_h=7.3, c_g=7.3)
    n = 400
    b = StepSchedule.basic_preset(n, c, 500.0, 30.0).at(0)
    assert b.alpha == pytest.approx(500.0 * math.sqrt(n))
    assert b.beta == pytest.approx(500.0 * math.sqrt(n))
    assert b.eta == pytest.approx(30.0 * math.sqrt(n))
    assert b.kappa == pytest.approx(30.0 * math.sqrt(n))
    for t in (0, 2, 99):
        a = StepSchedule.adaptive_preset(c, 100.0, 10.0).at(t)
        assert a.beta == pytest.approx(100.0 * math.sqrt(t + 1))
        assert a.eta == pytest.approx(10.0 * math.sqrt(t + 2))


def test_with_horizon():
    sch = StepSchedule(ADAPTIVE, ProblemConstants()).with_horizon(10)
    assert sch.n == 10 and sch.kind == ADAPTIVE

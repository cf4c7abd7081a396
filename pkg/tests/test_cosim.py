import math

import pytest
from hypothesis import given, strategies as st

from cosimrl.cartpole import CartPoleBackend, CartPoleParams
from cosimrl.cosim import NumericalError, advance, rk4_step, substep_plan


@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6),
    st.floats(1e-6, 10.0),
)
def test_zero_derivative_is_fixed_point(state, h):
    assert rk4_step(state, lambda y: [0.0] * len(y), h) == state


def test_exponential_single_step():
    # closed form e^0.1
    y = rk4_step([1.0], lambda v: [v[0]], 0.1)
    assert y[0] == pytest.approx(1.1051709180756477, abs=1e-7)


@pytest.mark.parametrize("x0, v0, a, h", [(0.0, 0.0, 9.81, 0.1), (1.5, -2.0, -3.0, 0.7), (0.0, 1.0, 0.5, 2.0)])
def test_constant_acceleration_exact(x0, v0, a, h):
    x, v = rk4_step([x0, v0], lambda y: [y[1], a], h)
    assert x == pytest.approx(x0 + v0 * h + 0.5 * a * h * h, rel=1e-14, abs=1e-14)
    assert v == pytest.approx(v0 + a * h, rel=1e-14, abs=1e-14)


def test_non_finite_derivative_names_component():
    with pytest.raises(NumericalError, match="component 1"):
        rk4_step([1.0, 0.0], lambda y: [0.0, math.inf], 0.1)
    with pytest.raises(NumericalError, match="component 0"):
        rk4_step([1.0], lambda y: [math.nan], 0.1)


def test_step_size_must_be_positive():
    with pytest.raises(ValueError):
        rk4_step([1.0], lambda y: [0.0], 0.0)


@pytest.mark.parametrize(
    "dt, target, n, h",
    [(0.05, 0.005, 10, 0.005), (0.001, 0.005, 1, 0.001), (1.0, 0.005, 200, 0.005), (0.01, 0.005, 2, 0.005)],
)
def test_substep_plan(dt, target, n, h):
    got_n, got_h = substep_plan(dt, target)
    assert got_n == n
    assert got_h == pytest.approx(h, rel=1e-15)


def _backend(force=3.0):
    b = CartPoleBackend(0.005)
    b.initialize({"m_cart": 10, "m_pole": 1, "theta_0": math.radians(85), "theta_dot_0": 0.0})
    b.set_inputs([force])
    return b


def test_advance_counts_substeps():
    b = _backend()
    calls = []
    orig = b.derivative

    def counting(state, inputs):
        calls.append(1)
        return orig(state, inputs)

    b.derivative = counting
    advance(b, 0.05, 0.005)
    assert len(calls) == 4 * 10
    calls.clear()
    advance(b, 0.001, 0.005)
    assert len(calls) == 4


def test_one_long_advance_matches_many_short_ones():
    one, many = _backend(), _backend()
    advance(one, 1.0, 0.005)
    for _ in range(20):
        advance(many, 0.05, 0.005)
    for a, b in zip(one.state, many.state):
        assert abs(a - b) <= 1e-9 * max(1.0, abs(a))
    assert one.time == pytest.approx(1.0, abs=1e-15)
    assert many.time == pytest.approx(1.0, abs=20 * 2.3e-16)


def test_advance_holds_inputs_constant():
    b = _backend(force=7.0)
    seen = set()
    orig = b.derivative
    b.derivative = lambda s, u: (seen.add(tuple(u)), orig(s, u))[1]
    advance(b, 0.05, 0.005)
    assert seen == {(7.0,)}


def test_time_lands_exactly_on_dt():
    b = _backend()
    advance(b, 0.3, 0.007)
    assert b.time == 0.3


def test_convergence_order_on_smooth_system():
    # cart-pole with f=0 from a tilted start; reference from a much finer step
    p = CartPoleParams()
    start = [0.0, 0.0, math.radians(80), 0.5]

    def run(h):
        b = CartPoleBackend(h)
        b.params = p
        b.state = list(start)
        b.inputs = [0.0]
        b.do_step(1.0)
        return b.state

    ref = run(1e-4)
    errs = [max(abs(a - r) for a, r in zip(run(h), ref)) for h in (0.04, 0.02, 0.01)]
    assert errs[0] / errs[1] >= 12
    assert errs[1] / errs[2] >= 12

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwlab.errors import ExprDomainError
from pwlab.ode import hermite, integrate


def test_harmonic_oscillator_nodes_and_dense_output():
    tr = integrate(lambda t, y: np.array([y[1], -y[0]]), 0.0, [0.0, 1.0], (0.0, 10.0),
                   h_max=0.05)
    assert tr.status == "ok" and tr.t[0] == 0.0 and tr.t[-1] == 10.0
    assert np.max(np.abs(tr.y[:, 0] - np.sin(tr.t))) < 1e-8
    for t in np.linspace(0.0, 10.0, 37):
        assert tr(t)[0] == pytest.approx(math.sin(t), abs=1e-8)
        assert tr.derivative(t)[0] == pytest.approx(math.cos(t), abs=1e-6)


def test_both_directions_from_interior_start():
    tr = integrate(lambda t, y: y, 0.0, [1.0], (-2.0, 2.0))
    assert np.all(np.diff(tr.t) > 0)
    assert np.max(np.abs(tr.y[:, 0] - np.exp(tr.t)) / np.exp(tr.t)) < 1e-9


def test_reversed_span():
    tr = integrate(lambda t, y: -y, 1.0, [1.0], (1.0, 0.0))
    assert tr(0.0)[0] == pytest.approx(math.e, rel=1e-9)


def test_blowup_truncates_with_horizon():
    # y' = y^2, y(0) = 1 blows up at t = 1
    tr = integrate(lambda t, y: y * y, 0.0, [1.0], (0.0, 2.0))
    assert tr.status == "blowup"
    assert tr.horizon[1] < 1.0 and tr.horizon[1] > 0.99


def test_domain_error_stops_as_singular():
    def f(t, y):
        if y[0] <= 0:
            raise ExprDomainError("log of nonpositive")
        return np.array([-1.0])
    tr = integrate(f, 0.0, [1.0], (0.0, 3.0))
    assert tr.status == "singular"
    assert tr.horizon[1] == pytest.approx(1.0, abs=1e-6)


def test_out_of_range_evaluation_raises():
    tr = integrate(lambda t, y: -y, 0.0, [1.0], (0.0, 1.0))
    with pytest.raises(ValueError):
        tr(1.5)
    with pytest.raises(ValueError):
        integrate(lambda t, y: -y, 2.0, [1.0], (0.0, 1.0))


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0, 1))
def test_hermite_reproduces_cubics(c, s):
    p = np.polynomial.Polynomial(c)
    dp = p.deriv()
    t0, t1 = 0.3, 1.1
    t = t0 + s * (t1 - t0)
    val = hermite(t, t0, t1, p(t0), p(t1), dp(t0), dp(t1))
    assert val == pytest.approx(p(t), abs=1e-12)

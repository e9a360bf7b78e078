import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwlab.deviation import (BaseJacobiField, JacobiSystem, NotJacobiError,
                             causal_independence_check, conjugate_points, correspondence_check,
                             focusing_check, index_form, index_form_split,
                             limit_conjugate_points, morse_bound)
from pwlab.errors import CausalDependenceError
from pwlab.geometry import MetricSpec
from pwlab.limit import WaveProfile, wave_profile
from pwlab.scenarios import scenario
from pwlab.transport import geodesic_with_frame

LOC = 1e-6


def constant_profile(diag, eps=None, span=(0.0, 12.0), N=121, off=None):
    r = len(diag)
    A = np.diag(np.asarray(diag, float))
    if off is not None:
        A = A + np.asarray(off, float)
    t = np.linspace(*span, N)
    return WaveProfile(t, np.repeat(A[None], N, axis=0), np.ones(r) if eps is None else eps)


def located(report):
    return [(round(t / math.pi, 6), m) for t, m in report.points]


def ssmm_profile(span):
    sc = scenario("pp-example-ssmm")
    rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, span, t0=0.0)
    return wave_profile(rec, fr)


# ----------------------------------------------------------------------------
# Causal independence
# ----------------------------------------------------------------------------

def test_causal_independence(ssmm, sphere3):
    assert causal_independence_check(sphere3[3]) == (True, 0.0)
    ok, res = causal_independence_check(ssmm[3])
    assert ok and res < 1e-12
    m = MetricSpec([[0, 1, 0, 0], [1, "x^2-y^2+2*x*y", 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]],
                   names=["v", "t", "x", "y"])
    rec, fr = geodesic_with_frame(m, np.zeros(4), [0.0, 1.0, 0.0, 0.0], (0.0, 4.0))
    p = wave_profile(rec, fr)
    ok, res = causal_independence_check(p)
    assert not ok and res == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(CausalDependenceError):
        conjugate_points(p, (0.0, 4.0))


def test_block_structure(ssmm):
    sysm = JacobiSystem.from_profile(ssmm[3])
    assert [list(b) for b in sysm.blocks] == [[0], [1]]
    assert sysm.off_block_max() == 0.0


# ----------------------------------------------------------------------------
# Conjugate points
# ----------------------------------------------------------------------------

def test_pp_example_conjugate_points(ssmm):
    rep = conjugate_points(ssmm[3], (0.0, 2.5 * math.pi))
    assert [m for _, m in rep.points] == [2, 2]
    for (t, _), k in zip(rep.points, (1, 2)):
        assert abs(t - k * math.pi) < LOC
    assert rep.total == 4


def test_sphere_limit_conjugate_points():
    p = constant_profile([-1.0, -1.0], span=(0.0, 3.5 * math.pi), N=351)
    rep = conjugate_points(p, (0.0, 3.5 * math.pi))
    assert located(rep) == [(1.0, 2), (2.0, 2), (3.0, 2)]


def test_sphere3_scenario_conjugate_points(sphere3):
    rep = conjugate_points(sphere3[3], (0.0, 1.5 * math.pi))
    assert located(rep) == [(1.0, 2)]


def test_no_conjugate_points_flat_or_negative():
    assert conjugate_points(constant_profile([0.0, 0.0]), (0.0, 12.0)).points == []
    assert conjugate_points(constant_profile([1.0, 1.0]), (0.0, 12.0)).points == []


def test_distinct_multiplicities():
    # A = diag(-1, -4): sin t and sin 2t; pi is shared (multiplicity 2)
    p = constant_profile([-1.0, -4.0], span=(0.0, 4.0))
    assert located(conjugate_points(p, (0.0, 4.0))) == [(0.5, 1), (1.0, 2)]


def test_non_diagonal_spacelike_block():
    # rotated diag(-1, -4): same conjugate points as the diagonal case
    c, s = math.cos(0.4), math.sin(0.4)
    R = np.array([[c, -s], [s, c]])
    A = R @ np.diag([-1.0, -4.0]) @ R.T
    t = np.linspace(0, 4, 81)
    p = WaveProfile(t, np.repeat(A[None], 81, axis=0), [1.0, 1.0])
    assert located(conjugate_points(p, (0.0, 4.0))) == [(0.5, 1), (1.0, 2)]


def test_report_serialization(ssmm):
    rep = conjugate_points(ssmm[3], (0.0, 2.5 * math.pi))
    d = json.loads(rep.to_json())
    assert d["total"] == 4 and d["points"][0]["multiplicity"] == 2
    assert set(d) >= {"points", "total", "index_bound", "residuals", "resolution"}
    lines = rep.plot_csv().splitlines()
    assert lines[0] == "t,sigma_min" and len(lines) > 700


def test_interval_outside_profile_rejected(ssmm):
    with pytest.raises(ValueError):
        conjugate_points(ssmm[3], (0.0, 10.0))


# ----------------------------------------------------------------------------
# Limit side and the Morse bound
# ----------------------------------------------------------------------------

def test_limit_side_agrees_and_morse_bound(ssmm):
    p = ssmm[3]
    interval = (0.0, 2.5 * math.pi)
    base = conjugate_points(p, interval)
    lim = limit_conjugate_points(p, interval)
    assert [m for _, m in lim.points] == [2, 2]
    for (tb, _), (tl, _) in zip(base.points, lim.points):
        assert abs(tb - tl) < LOC
    assert morse_bound(base, lim)
    assert (base.total, base.index_bound) == (4, 8)


def test_morse_bound_flat_and_sphere():
    flat = constant_profile([0.0, 0.0])
    rb = conjugate_points(flat, (0.0, 12.0))
    assert morse_bound(rb, limit_conjugate_points(flat, (0.0, 12.0)))
    assert rb.total == 0 and rb.index_bound == 0
    sph = constant_profile([-1.0, -1.0], span=(0.0, 1.5 * math.pi), N=151)
    rb = conjugate_points(sph, (0.0, 1.5 * math.pi))
    rl = limit_conjugate_points(sph, (0.0, 1.5 * math.pi))
    assert morse_bound(rb, rl) and rb.total == 2 and rl.total == 2
    with pytest.raises(ValueError):
        morse_bound(rb, limit_conjugate_points(sph, (0.0, 4.0)))


# ----------------------------------------------------------------------------
# Correspondence of Jacobi fields
# ----------------------------------------------------------------------------

def test_correspondence_pp_example(ssmm):
    p = ssmm[3]
    res = correspondence_check(p, lambda s: np.array([math.sin(s), 0.0]), (0.0, 2.0 * math.pi))
    assert max(res.values()) < 1e-6
    # the lifted field vanishes exactly where the base field does
    assert res["limit_t_component"] < 1e-12


def test_correspondence_sphere_closed_form(sphere3):
    p = sphere3[3]
    res = correspondence_check(p, lambda s: np.array([math.sin(s), 0.0]), (0.0, 5.0))
    assert max(res.values()) < 1e-6


def test_correspondence_zero_field(torus):
    p = torus[3]
    res = correspondence_check(p, lambda s: np.zeros(1), (0.0, 6.0))
    assert res["base"] == 0.0 and res["forward"] == 0.0


def test_correspondence_generic_field(torus):
    p = torus[3]
    J = BaseJacobiField(p, [0.3], [1.0], (0.0, 6.0))
    res = correspondence_check(p, J, (0.0, 6.0))
    assert max(res.values()) < 1e-6


def test_non_jacobi_input_rejected(ssmm):
    with pytest.raises(NotJacobiError):
        correspondence_check(ssmm[3], lambda s: np.array([s * s, 0.0]), (0.0, 3.0))


# ----------------------------------------------------------------------------
# Focusing
# ----------------------------------------------------------------------------

def test_focusing_pp_example():
    p = ssmm_profile((-4.0, 4.0))
    out = focusing_check(p, 4.0)
    assert out["verdict"] == "consistent"
    assert out["pair"][0] == 0.0 and abs(out["pair"][1] - math.pi) < LOC
    assert out["ric_min"] == pytest.approx(2.0)


def test_focusing_other_verdicts():
    span = (-5.0, 5.0)
    assert focusing_check(constant_profile([0.0, 0.0], span=span), 5.0)["verdict"] == \
        "vacuously consistent"
    assert focusing_check(constant_profile([1.0, 1.0], span=span), 5.0)["verdict"] == \
        "hypothesis fails"
    weak = constant_profile([-0.01], span=span)
    assert focusing_check(weak, 5.0)["verdict"] == "horizon too small"
    assert focusing_check(constant_profile([-1.0], span=(0.0, 5.0)), 5.0)["verdict"] == \
        "incomplete-evidence"


# ----------------------------------------------------------------------------
# Index form
# ----------------------------------------------------------------------------

def test_index_form_closed_form():
    # hat field on [0, 2]: int V'^2 = 2, int V^2 = 2/3
    hat = ([0.0, 1.0, 2.0], [[0.0], [1.0], [0.0]])
    assert index_form(constant_profile([0.0]), hat, hat) == pytest.approx(-2.0, rel=1e-12)
    # A = -1: Rm(E, v, v, E) = 1 adds int V^2
    assert index_form(constant_profile([-1.0]), hat, hat) == pytest.approx(-2.0 + 2 / 3,
                                                                           rel=1e-12)


field_values = st.lists(st.floats(-2, 2, allow_nan=False), min_size=8, max_size=8)


def _pl_field(vals, lo, hi):
    knots = np.linspace(lo, hi, 5)
    values = np.zeros((5, 2))
    values[1:4] = np.reshape(vals[:6], (3, 2))
    return knots, values


@given(field_values, field_values)
def test_index_form_split_pp_example(ssmm, a, b):
    p = ssmm[3]
    V = _pl_field(a, 0.0, 7.0)
    W = _pl_field(b, 0.5, 6.0)
    whole, split = index_form_split(p, V, W)
    assert abs(whole - split) < 1e-6


@pytest.fixture(scope="module")
def mixed_profile():
    """A time-dependent causally independent profile with eps = (-1, +1)."""
    m = MetricSpec([[0, 1, 0, 0], [1, "(x^2-3*y^2)*cos(t)+y^2*t", 0, 0], [0, 0, -1, 0],
                    [0, 0, 0, 1]], names=["v", "t", "x", "y"])
    rec, fr = geodesic_with_frame(m, np.zeros(4), [0.0, 1.0, 0.0, 0.0], (0.0, 5.0))
    return wave_profile(rec, fr)


@given(field_values, field_values)
def test_index_form_split_time_dependent(mixed_profile, a, b):
    p = mixed_profile
    assert causal_independence_check(p)[0]
    whole, split = index_form_split(p, _pl_field(a, 0.0, 5.0), _pl_field(b, 1.0, 4.0))
    assert abs(whole - split) < 1e-6

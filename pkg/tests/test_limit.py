import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwlab.errors import ConfigError, DegenerateMetricError
from pwlab.geometry import MetricSpec
from pwlab.limit import (WaveProfile, assemble_plane_wave, flow_profile, frame_change_check,
                         frame_change_residual, lift_and_limit, profile_deviation,
                         rosen_to_brinkmann, wave_profile)
from pwlab.ode import integrate
from pwlab.scenarios import random_unit_geodesics, scenario
from pwlab.transport import geodesic_with_frame, integrate_geodesic


def _profiles(name, count, seed=0, span=None):
    sc = scenario(name)
    for x0, v0 in random_unit_geodesics(sc, count, seed):
        rec, fr = geodesic_with_frame(sc.metric, x0, v0, span or sc.span)
        yield wave_profile(rec, fr)


@pytest.mark.parametrize("name,lam", [("sphere-2", 1.0), ("sphere-3", 1.0),
                                      ("hyperbolic-3", -1.0), ("flat-3", 0.0)])
def test_constant_curvature_profile(name, lam):
    for p in _profiles(name, 4, seed=3):
        eye = np.eye(p.r)
        assert np.max(np.abs(p.A + lam * eye)) < 1e-7
        assert p.trace_residual() < 1e-9


def test_pp_example_profile(ssmm):
    sc, rec, fr, p = ssmm
    assert list(p.eps) == [-1.0, 1.0]
    assert np.max(np.abs(p.A - np.diag([-1.0, -1.0]))) < 1e-12
    # Ric(gamma', gamma') = -tr A = 2
    assert np.max(np.abs(p.ricci - 2.0)) < 1e-12


def test_torus_profile_is_minus_gauss_curvature(torus):
    sc, rec, fr, p = torus
    u = fr.x[:, 0]
    assert np.max(np.abs(p.A[:, 0, 0] + np.cos(u) / (2 + np.cos(u)))) < 1e-10


def test_symmetry_rule_with_mixed_signs():
    # random Lorentzian constant-coefficient profile data from a pp-wave
    m = MetricSpec([[0, 1, 0, 0], [1, "x^2 - 3*y^2 + 2*x*y", 0, 0], [0, 0, -1, 0],
                    [0, 0, 0, 1]], names=["v", "t", "x", "y"])
    rec, fr = geodesic_with_frame(m, np.zeros(4), [0.0, 1.0, 0.0, 0.0], (0.0, 1.0))
    p = wave_profile(rec, fr)
    assert p.symmetry_residual() < 1e-12
    # mixed-sign pairs are antisymmetric and drop out of the assembled H
    assert p.A[0, 0, 1] == pytest.approx(-p.A[0, 1, 0])
    assert abs(p.A[0, 0, 1]) > 0.5
    pw = assemble_plane_wave(p)
    assert np.allclose(pw.hessian_H(0.5), np.diag(2 * np.diag(p.A[0])))


# ----------------------------------------------------------------------------
# Frame change covariance
# ----------------------------------------------------------------------------

@given(st.floats(0, 2 * math.pi), st.booleans())
def test_frame_change_covariance(sphere3, theta, reflect):
    sc, rec, fr, p = sphere3
    c, s = math.cos(theta), math.sin(theta)
    K = np.array([[c, -s], [s, c]])
    if reflect:
        K = K @ np.diag([1.0, -1.0])
    assert frame_change_residual(p, K) < 1e-10


def test_frame_change_with_retransport(torus, ssmm):
    *_, p = torus
    assert frame_change_check(p, [[-1.0]], retransport=True)
    *_, q = ssmm
    assert frame_change_check(q, np.diag([-1.0, 1.0]), retransport=True)
    with pytest.raises(ValueError):
        frame_change_check(q, [[0.0, 1.0], [1.0, 0.0]])   # mixes causal blocks
    with pytest.raises(ValueError):
        frame_change_check(q, [[2.0, 0.0], [0.0, 1.0]])   # not orthogonal


# ----------------------------------------------------------------------------
# Export and assembly
# ----------------------------------------------------------------------------

def test_csv_roundtrip(ssmm):
    *_, p = ssmm
    text = p.to_csv()
    head = text.splitlines()[:2]
    assert head[0] == "t,A_11,A_12,A_21,A_22"
    assert head[1].startswith("eps,-1,1")
    q = WaveProfile.from_csv(text)
    assert np.array_equal(q.t, p.t) and np.array_equal(q.A, p.A)
    assert list(q.eps) == list(p.eps)


def test_assembled_limit_metric(sphere3):
    *_, p = sphere3
    pw = assemble_plane_wave(p)
    m = pw.metric
    assert m.n == 4 and m.index == 1 and tuple(m.names[:2]) == ("v", "t")
    x = np.array([0.3, 1.7, 0.4, -0.2])
    g = m.g(x)
    assert g[0, 1] == 1.0 and g[2, 2] == 1.0
    # H = sum A_ij x^i x^j = -(x1^2 + x2^2)
    assert g[1, 1] == pytest.approx(-(0.4 ** 2 + 0.2 ** 2), abs=1e-7)


# ----------------------------------------------------------------------------
# Lightlike lift
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["sphere-2", "torus", "hyperbolic-2"])
def test_lift_matches_direct_profile(name):
    sc = scenario(name)
    (x0, v0), = random_unit_geodesics(sc, 1, seed=5)
    rec = integrate_geodesic(sc.metric, x0, v0, (0.0, 5.0))
    p = wave_profile(rec)
    lp = lift_and_limit(sc.metric, rec)
    assert lp.causal == "lightlike"
    assert profile_deviation(lp, p) < 1e-6


def test_lift_rejects_non_unit_speed():
    sc = scenario("torus")
    rec = integrate_geodesic(sc.metric, sc.x0, 2 * sc.v0, (0.0, 1.0))
    with pytest.raises(ValueError):
        lift_and_limit(sc.metric, rec)


# ----------------------------------------------------------------------------
# Rosen to Brinkmann
# ----------------------------------------------------------------------------

def test_rosen_cos_squared():
    q = rosen_to_brinkmann([["cos(t)^2"]], (0.0, 1.4))
    assert np.max(np.abs(q.A + 1.0)) < 1e-6
    assert np.max(np.abs(q.f[:, 0, 0] - 1 / np.cos(q.t))) < 1e-8


def test_rosen_flat_and_errors():
    q = rosen_to_brinkmann([["1", "0"], ["0", "1"]], (0.0, 2.0))
    assert np.max(np.abs(q.A)) == 0.0
    with pytest.raises(ConfigError):
        rosen_to_brinkmann([["-1"]], (0.0, 1.0))
    with pytest.raises(ConfigError):
        rosen_to_brinkmann([["1"]], (0.0, 1.0), f0=[[2.0]])


def test_rosen_meridian_of_torus():
    # along the meridian u = t the torus reads 2 du dx1 + (2 + cos u)^2 dw^2
    q = rosen_to_brinkmann([["(2+cos(t))^2"]], (0.0, 6.0))
    assert np.max(np.abs(q.A[:, 0, 0] + np.cos(q.t) / (2 + np.cos(q.t)))) < 1e-6


def test_rosen_pipeline_cross_check(torus):
    """Rosen data g = F^2 from F'' = A F along the torus geodesic reproduce A."""
    sc, rec, fr, p = torus
    span = (0.0, 2.5)   # F stays positive here
    tr = integrate(lambda t, y: np.array([y[1], p.at(t)[0, 0] * y[0]]), 0.0, [1.0, 0.0],
                   span, rtol=1e-12, atol=1e-12, h_max=0.02)

    def jets(t):
        F, Fd = tr(t)
        Fdd = p.at(t)[0, 0] * F
        return [[F * F]], [[2 * F * Fd]], [[2 * Fd * Fd + 2 * F * Fdd]]

    q = rosen_to_brinkmann(jets, span)
    assert profile_deviation(q, p) < 1e-5


def test_rosen_detects_degenerate_data():
    # cos(t)^2 vanishes at t = pi / 2
    with pytest.raises(DegenerateMetricError):
        rosen_to_brinkmann([["cos(t)^2"]], (0.0, 2.0))


# ----------------------------------------------------------------------------
# Riccati identity
# ----------------------------------------------------------------------------

def test_radial_field_riccati():
    sc = scenario("radial-3")
    rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, sc.span, t0=sc.t0)
    fp = flow_profile(sc.metric, sc.extra["field"], rec, fr)
    assert fp.residual < 1e-5
    # A_Z = -I / t for the radial field
    assert np.max(np.abs(fp.AZ + np.eye(2)[None] / fp.t[:, None, None])) < 1e-8


def test_riccati_on_sphere_with_great_circle_field():
    # on S^2 in polar coordinates the meridians d_th form a geodesic field
    m = MetricSpec([[1, 0], [0, "sin(th)^2"]], names=["th", "ph"], base_point=[1.0, 0.0])
    rec, fr = geodesic_with_frame(m, [0.5, 0.0], [1.0, 0.0], (0.0, 2.0))
    fp = flow_profile(m, ["1", "0"], rec, fr)
    assert fp.residual < 1e-8
    assert np.max(np.abs(fp.A + 1.0)) < 1e-8


def test_non_geodesic_field_rejected():
    sc = scenario("radial-3")
    rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, sc.span, t0=sc.t0)
    with pytest.raises(ValueError):
        flow_profile(sc.metric, ["1", "x1", "0"], rec, fr)

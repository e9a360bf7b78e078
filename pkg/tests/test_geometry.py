import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwlab.errors import ConfigError, DegenerateMetricError
from pwlab.geometry import (MetricSpec, christoffel_at, curvature_at, gamma_at, ricci_contract,
                            signature_at, weyl_tensor)
from pwlab.ppwave import covariant_riemann

# ----------------------------------------------------------------------------
# Closed forms
# ----------------------------------------------------------------------------


def test_round_sphere_polar():
    m = MetricSpec([[1, 0], [0, "sin(th)^2"]], names=["th", "ph"], base_point=[1.0, 0.0])
    th = 0.7
    cp = curvature_at(m, [th, 0.3])
    assert cp.rm[0, 1, 1, 0] == pytest.approx(math.sin(th) ** 2, rel=1e-13)
    assert cp.scal == pytest.approx(2.0, rel=1e-13)
    assert np.allclose(cp.ric, cp.g, atol=1e-13)
    assert cp.sectional([1, 0], [0, 1]) == pytest.approx(1.0, rel=1e-13)
    # Gamma^th_phph = -sin cos, Gamma^ph_thph = cot
    assert cp.gamma[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th))
    assert cp.gamma[1, 0, 1] == pytest.approx(1 / math.tan(th))


def test_hyperbolic_half_plane():
    m = MetricSpec([["1/y^2", 0], [0, "1/y^2"]], names=["x", "y"], base_point=[0, 1])
    cp = curvature_at(m, [0.3, 0.4])
    assert cp.scal == pytest.approx(-2.0, rel=1e-12)
    assert cp.sectional([1, 0], [0, 1]) == pytest.approx(-1.0, rel=1e-12)


def test_stereographic_three_sphere_constant_curvature():
    c = "4/(1+x1^2+x2^2+x3^2)^2"
    m = MetricSpec([[c, 0, 0], [0, c, 0], [0, 0, c]])
    cp = curvature_at(m, [0.2, -0.4, 0.9])
    assert cp.scal == pytest.approx(6.0, rel=1e-12)
    assert np.allclose(cp.ric, 2 * cp.g, atol=1e-12)


def test_minkowski_signature_and_flatness():
    m = MetricSpec([[-1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    assert m.index == 1
    cp = curvature_at(m, [0.1, 0.2, 0.3, 0.4])
    assert np.all(cp.rm == 0) and cp.scal == 0


def test_conformally_flat_four_metric_has_no_weyl():
    c = "exp(x1*x2 + sin(x3) - x4^2/3)"
    m = MetricSpec([[f"-{c}", 0, 0, 0], [0, c, 0, 0], [0, 0, c, 0], [0, 0, 0, c]])
    cp = curvature_at(m, [0.3, -0.2, 0.5, 0.1])
    assert np.max(np.abs(cp.rm)) > 1e-2
    assert np.max(np.abs(weyl_tensor(cp))) < 1e-12


# ----------------------------------------------------------------------------
# Errors and validation
# ----------------------------------------------------------------------------

def test_degenerate_metric_detected():
    with pytest.raises(DegenerateMetricError):
        MetricSpec([[1, 0], [0, "x1^2"]])  # default base point is the origin
    m = MetricSpec([[1, 0], [0, "x1^2"]], base_point=[1.0, 0.0])
    with pytest.raises(DegenerateMetricError):
        curvature_at(m, [0.0, 0.0])
    with pytest.raises(DegenerateMetricError):
        gamma_at(m, [1e-13, 0.0])


def test_asymmetric_and_misshapen_components_rejected():
    with pytest.raises(ConfigError):
        MetricSpec([[1, "x1"], ["x2", 1]])
    with pytest.raises(ConfigError):
        MetricSpec([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(ConfigError):
        MetricSpec([[1, 0], [0, 1]], index=1)


def test_signature_reports_index():
    m = MetricSpec([[0, 1, 0], [1, 0, 0], [0, 0, 1]])
    nu, spectrum = signature_at(m, [0, 0, 0])
    assert nu == 1 and np.allclose(sorted(spectrum), [-1, 1, 1])


# ----------------------------------------------------------------------------
# Random metrics: symmetries, Bianchi identities, two routes to Christoffels
# ----------------------------------------------------------------------------

coef = st.floats(-0.25, 0.25, allow_nan=False)


@st.composite
def random_metric(draw, n=3, lorentz=False):
    comps = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            a, b, c = draw(coef), draw(coef), draw(coef)
            k, l = draw(st.integers(1, n)), draw(st.integers(1, n))
            term = f"{a}*sin(x{k}) + {b}*x{l}^2 + {c}*x{k}*x{l}"
            if i == j:
                sign = "-" if (lorentz and i == 0) else ""
                comps[i][j] = f"{sign}(2 + {term})"
            else:
                comps[i][j] = comps[j][i] = f"0.5*({term})"
    return MetricSpec(comps)


pts3 = st.lists(st.floats(-0.5, 0.5, allow_nan=False), min_size=3, max_size=3)
pts4 = st.lists(st.floats(-0.5, 0.5, allow_nan=False), min_size=4, max_size=4)


@given(random_metric(), pts3)
def test_riemann_symmetries_and_first_bianchi(m, x):
    cp = curvature_at(m, x)
    R = cp.rm
    s = 1e-11 * (1 + np.max(np.abs(R)))
    assert np.max(np.abs(R + R.transpose(1, 0, 2, 3))) < s
    assert np.max(np.abs(R + R.transpose(0, 1, 3, 2))) < s
    assert np.max(np.abs(R - R.transpose(2, 3, 0, 1))) < s
    bianchi = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
    assert np.max(np.abs(bianchi)) < s
    assert np.max(np.abs(cp.ric - cp.ric.T)) < s
    ric, scal = ricci_contract(cp)
    assert np.allclose(ric, cp.ric) and scal == pytest.approx(cp.scal)


@given(random_metric(n=4, lorentz=True), pts4)
def test_weyl_is_trace_free_with_riemann_symmetries(m, x):
    cp = curvature_at(m, x)
    W = weyl_tensor(cp)
    s = 1e-10 * (1 + np.max(np.abs(cp.rm)))
    assert np.max(np.abs(np.einsum("ad,abcd->bc", cp.ginv, W))) < s
    assert np.max(np.abs(W + W.transpose(1, 0, 2, 3))) < s
    assert np.max(np.abs(W - W.transpose(2, 3, 0, 1))) < s


@given(random_metric(), pts3)
def test_second_bianchi_identity(m, x):
    D = covariant_riemann(m, x)       # D[e, a, b, c, d]
    cyc = D + D.transpose(1, 2, 0, 3, 4) + D.transpose(2, 0, 1, 3, 4)
    assert np.max(np.abs(cyc)) < 1e-6 * (1 + np.max(np.abs(D)))


@given(random_metric(), pts3)
def test_generated_christoffels_match_matrix_route(m, x):
    g, ginv, gam = christoffel_at(m, x)
    assert np.allclose(gamma_at(m, x), gam, rtol=1e-12, atol=1e-13)
    # metric compatibility: d_k g_ij = g_lj Gamma^l_ki + g_il Gamma^l_kj
    cp = curvature_at(m, x)
    lhs = cp.dg
    rhs = np.einsum("lj,lki->kij", g, gam) + np.einsum("il,lkj->kij", g, gam)
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(random_metric(), pts3)
def test_riemann_from_differenced_christoffels(m, x):
    """Independent route: R^e_abc from central differences of gamma_at."""
    x = np.array(x)
    n = m.n
    h = 1e-5
    G = gamma_at(m, x)
    dG = np.empty((n, n, n, n))   # dG[a, e, b, c] = d_a Gamma^e_bc
    for a in range(n):
        d = np.zeros(n)
        d[a] = h
        dG[a] = (gamma_at(m, x + d) - gamma_at(m, x - d)) / (2 * h)
    R = (np.einsum("aebc->abce", dG) - np.einsum("beac->abce", dG)
         + np.einsum("eaf,fbc->abce", G, G) - np.einsum("ebf,fac->abce", G, G))
    cp = curvature_at(m, x)
    assert np.max(np.abs(R - cp.riemann_up)) < 1e-7

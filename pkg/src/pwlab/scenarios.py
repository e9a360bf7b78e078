"""Built-in metrics with a default geodesic each.

Names: ``flat-n``, ``sphere-n``, ``hyperbolic-n``, ``minkowski``,
``pp-example-ssmm``, ``product-lift``, ``torus``, ``radial-3`` and
``pp-ricci-flat``.  ``n`` is the dimension, e.g. ``sphere-3``.

The sphere uses stereographic coordinates from the north pole,
``g = 4 |dx|^2 / (1 + |x|^2)^2``; hyperbolic space uses the upper half
space, ``g = |dx|^2 / x_n^2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import MetricSpec
from .limit import product_metric

__all__ = ["Scenario", "scenario", "SCENARIO_NAMES", "random_sphere_geodesic",
           "random_unit_geodesics", "unit_speed"]

SCENARIO_NAMES = ("flat-n", "sphere-n", "hyperbolic-n", "minkowski", "pp-example-ssmm",
                  "product-lift", "torus", "radial-3", "pp-ricci-flat")


@dataclass
class Scenario:
    name: str
    metric: MetricSpec
    x0: np.ndarray
    v0: np.ndarray
    span: tuple
    t0: float = 0.0
    extra: dict = field(default_factory=dict)


def _diag(entries):
    n = len(entries)
    return [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]


def unit_speed(m: MetricSpec, x0, v0) -> np.ndarray:
    """Rescale ``v0`` to ``|g(v0, v0)| = 1`` (lightlike vectors are returned unchanged)."""
    v0 = np.asarray(v0, float)
    q = float(v0 @ m.g(x0) @ v0)
    if abs(q) < 1e-12:
        return v0
    return v0 / np.sqrt(abs(q))


def flat(n):
    m = MetricSpec(_diag([1] * n), name=f"flat-{n}")
    e = np.zeros(n)
    e[0] = 1.0
    return Scenario(m.name, m, np.zeros(n), e, (0.0, 10.0))


def sphere(n):
    if n < 2:
        raise ConfigError("sphere-n needs n >= 2")
    c = "4/(1+" + "+".join(f"x{i}^2" for i in range(1, n + 1)) + ")^2"
    x0 = np.zeros(n)
    x0[0] = 1.0
    m = MetricSpec(_diag([c] * n), base_point=x0, name=f"sphere-{n}")
    v0 = np.zeros(n)
    v0[1] = 1.0
    # the equator |x| = 1 is a unit-speed great circle
    return Scenario(m.name, m, x0, v0, (0.0, 10.0))


def hyperbolic(n):
    if n < 2:
        raise ConfigError("hyperbolic-n needs n >= 2")
    c = f"1/x{n}^2"
    x0 = np.zeros(n)
    x0[-1] = 1.0
    m = MetricSpec(_diag([c] * n), base_point=x0, name=f"hyperbolic-{n}")
    v0 = np.zeros(n)
    v0[-1] = 1.0
    # vertical geodesic x_n = exp(t)
    return Scenario(m.name, m, x0, v0, (0.0, 10.0))


def minkowski():
    m = MetricSpec(_diag([-1, 1, 1, 1]), names=["t", "x", "y", "z"], name="minkowski")
    return Scenario(m.name, m, np.zeros(4), np.array([1.0, 0.0, 0.0, 0.0]), (0.0, 10.0))


def pp_example_ssmm():
    m = MetricSpec([[0, 1, 0, 0], [1, "x^2-y^2", 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]],
                   names=["v", "t", "x", "y"], name="pp-example-ssmm")
    return Scenario(m.name, m, np.zeros(4), np.array([0.0, 1.0, 0.0, 0.0]),
                    (0.0, 2.5 * np.pi))


def torus():
    m = MetricSpec([[1, 0], [0, "(2+cos(u))^2"]], names=["u", "w"], name="torus")
    x0 = np.array([0.3, 0.0])
    return Scenario(m.name, m, x0, unit_speed(m, x0, [0.6, 0.4]), (0.0, 6.0))


def product_lift():
    base = torus()
    m = product_metric(base.metric)
    m.name = "product-lift"
    x0 = np.concatenate([[0.0], base.x0])
    v0 = np.concatenate([[1.0], base.v0])
    return Scenario(m.name, m, x0, v0, base.span, extra={"base": base})


def radial():
    m = MetricSpec(_diag([1, 1, 1]), base_point=[1.0, 0.0, 0.0], name="radial-3")
    norm = "sqrt(x1^2+x2^2+x3^2)"
    return Scenario(m.name, m, np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]),
                    (1.0, 5.0), t0=1.0, extra={"field": [f"x{i}/{norm}" for i in (1, 2, 3)]})


def pp_ricci_flat():
    m = MetricSpec([[0, 1, 0, 0], [1, "(x^2-y^2)*cos(t)+2*x*y*sin(t)", 0, 0],
                    [0, 0, 1, 0], [0, 0, 0, 1]], names=["v", "t", "x", "y"],
                   name="pp-ricci-flat")
    # transverse perturbations grow exponentially (the Hessian rotates at
    # the resonant rate), so random data vary only (v, t) and (v', t')
    return Scenario(m.name, m, np.zeros(4), np.array([0.0, 1.0, 0.0, 0.0]), (0.0, 10.0),
                    extra={"perturb": [1.0, 1.0, 0.0, 0.0]})


_FIXED = {"minkowski": minkowski, "pp-example-ssmm": pp_example_ssmm, "torus": torus,
          "product-lift": product_lift, "radial-3": radial, "pp-ricci-flat": pp_ricci_flat}
_SIZED = {"flat": flat, "sphere": sphere, "hyperbolic": hyperbolic}


def scenario(name: str) -> Scenario:
    """Resolve a built-in scenario name, raising :class:`ConfigError` if unknown."""
    if name in _FIXED:
        return _FIXED[name]()
    mt = re.fullmatch(r"(flat|sphere|hyperbolic)-(\d+)", name)
    if mt:
        return _SIZED[mt.group(1)](int(mt.group(2)))
    raise ConfigError(f"unknown scenario {name!r}; built-ins: {', '.join(SCENARIO_NAMES)}")


def random_sphere_geodesic(n: int, rng, max_pole: float = 0.5):
    """Unit-speed initial data ``(x, v)`` in the stereographic chart of ``S^n``.

    A point ``p`` and unit tangent ``u`` are drawn uniformly on
    ``S^n`` in ``R^{n+1}``; pairs whose great circle comes within
    ``arccos(max_pole)`` of the projection pole are redrawn, which keeps
    the chart bounded along the whole circle (its highest point has
    height ``hypot(p_N, u_N)``).
    """
    while True:
        p = rng.normal(size=n + 1)
        p /= np.linalg.norm(p)
        u = rng.normal(size=n + 1)
        u -= (u @ p) * p
        u /= np.linalg.norm(u)
        if np.hypot(p[-1], u[-1]) <= max_pole:
            break
    d = 1.0 - p[-1]
    return p[:-1] / d, u[:-1] / d + p[:-1] * u[-1] / d ** 2


def random_unit_geodesics(sc: Scenario, count: int, seed: int = 0):
    """``count`` seeded initial data ``(x0, v0)`` for a scenario.

    Riemannian data are unit speed.  Indefinite scenarios perturb the
    default data (only the components flagged in ``extra["perturb"]``, if
    given) and rescale non-null velocities to ``|g(v, v)| = 1``.
    """
    rng = np.random.default_rng(seed)
    out = []
    n = sc.metric.n
    kind = sc.name.split("-")[0]
    for _ in range(count):
        if kind == "sphere":
            out.append(random_sphere_geodesic(n, rng))
        elif kind == "hyperbolic":
            x0 = np.concatenate([rng.uniform(-1, 1, n - 1), [rng.uniform(0.5, 2.0)]])
            u = rng.normal(size=n)
            u /= np.linalg.norm(u)
            out.append((x0, u * x0[-1]))
        elif sc.metric.index == 0:
            x0 = sc.x0 + rng.uniform(-0.5, 0.5, n)
            out.append((x0, unit_speed(sc.metric, x0, rng.normal(size=n))))
        else:
            # perturb the default data; the causal character may change
            mask = np.asarray(sc.extra.get("perturb", np.ones(n)), float)
            x0 = sc.x0 + mask * rng.uniform(-0.5, 0.5, n)
            v0 = sc.v0 + mask * 0.3 * rng.normal(size=n)
            out.append((x0, unit_speed(sc.metric, x0, v0)))
    return out

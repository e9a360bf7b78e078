"""Pointwise curvature of a metric given by coordinate expressions.

Conventions
-----------
``dg[k, i, j] = d_k g_ij``, ``gamma[k, i, j] = Gamma^k_ij``,
``dgamma[l, k, i, j] = d_l Gamma^k_ij``.  The Riemann tensor is stored fully
lowered with

    Rm(a, b, c, d) = g(nabla_a nabla_b c - nabla_b nabla_a c - nabla_[a,b] c, d),

so ``Rm(X, Y, Y, X) > 0`` on a round sphere.  In components
``R^e_abc = d_a Gamma^e_bc - d_b Gamma^e_ac + Gamma^e_af Gamma^f_bc
- Gamma^e_bf Gamma^f_ac`` and ``Rm_abcd = g_de R^e_abc``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateMetricError, ExprDomainError
from .exprlang import Const, Expr, _Gen, compile_jets, parse, to_source

__all__ = [
    "MetricSpec", "CurvaturePoint", "curvature_at", "christoffel_at", "gamma_at",
    "signature_at", "ricci_contract", "weyl_tensor", "DEGENERACY_TOL",
]

DEGENERACY_TOL = 1e-10
MAX_CONDITION = 1e12


class MetricSpec:
    """Symmetric metric ``g_ij(x)`` on a coordinate chart of dimension ``n``.

    Parameters
    ----------
    components : n x n nested sequence
        Entries are expression strings, numbers or :class:`Expr` nodes.  Only
        the upper triangle is read when ``symmetric_check`` is false;
        otherwise the lower triangle must match it (compared as ASTs).
    names : sequence of str, optional
        Coordinate names accepted by the parser in place of ``x1..xn``.
    base_point : point, optional
        Where nondegeneracy and the index are validated (default origin).
    index : int, optional
        Expected number of negative eigenvalues at ``base_point``.
    functions : mapping, optional
        Extra univariate functions for the parser.
    """

    def __init__(self, components, names: Sequence[str] | None = None,
                 base_point=None, index: int | None = None, name: str = "",
                 functions: Mapping | None = None, symmetric_check: bool = True,
                 degeneracy_tol: float = DEGENERACY_TOL):
        rows = [list(r) for r in components]
        n = len(rows)
        if n < 2 or any(len(r) != n for r in rows):
            raise ConfigError("metric components must form an n x n matrix with n >= 2")
        self.n = n
        self.names = tuple(names) if names else None
        if self.names is not None and len(self.names) != n:
            raise ConfigError(f"expected {n} coordinate names, got {len(self.names)}")
        self.name = name
        self.functions = dict(functions or {})
        self.degeneracy_tol = degeneracy_tol

        def as_expr(c):
            if isinstance(c, Expr):
                return c
            if isinstance(c, (int, float, np.floating, np.integer)):
                return Const(float(c))
            return parse(str(c), n, self.names, self.functions)

        self.upper: dict[tuple[int, int], Expr] = {}
        for i in range(n):
            for j in range(i, n):
                e = as_expr(rows[i][j])
                self.upper[i, j] = e
                if symmetric_check and j > i and rows[j][i] is not None:
                    lower = as_expr(rows[j][i])
                    if lower != e:
                        raise ConfigError(
                            f"metric not symmetric: g[{i + 1},{j + 1}] = {to_source(e)} "
                            f"but g[{j + 1},{i + 1}] = {to_source(lower)}")
        self._pairs = sorted(self.upper)
        self._compiled = {}
        self.base_point = np.zeros(n) if base_point is None else np.asarray(base_point, float)
        nu, _ = signature_at(self, self.base_point)
        if index is not None and nu != index:
            raise ConfigError(f"metric has index {nu} at the base point, expected {index}")
        self.index = nu

    # ------------------------------------------------------------------
    def component(self, i: int, j: int) -> Expr:
        """Expression for ``g_ij`` (0-based indices)."""
        return self.upper[min(i, j), max(i, j)]

    def matrix_source(self) -> list[list[str]]:
        return [[to_source(self.component(i, j), self.names) for j in range(self.n)]
                for i in range(self.n)]

    def _fn(self, order):
        if order not in self._compiled:
            n = self.n
            layout = [[i * n + j] if i == j else [i * n + j, j * n + i] for i, j in self._pairs]
            self._compiled[order] = compile_jets([self.upper[p] for p in self._pairs],
                                                 n, order, layout, n * n)
        return self._compiled[order]

    def jets(self, x, order: int = 2):
        """``g``, ``dg`` and ``ddg`` at ``x`` (derivatives ``None`` above ``order``).

        ``dg[k, i, j] = d_k g_ij`` and ``ddg[k, l, i, j] = d_k d_l g_ij``.
        """
        n = self.n
        V, G, H = self._fn(order)(x)
        g = V.reshape(n, n)
        dg = None if G is None else G.reshape(n, n, n).transpose(2, 0, 1)
        ddg = None if H is None else H.reshape(n, n, n, n).transpose(2, 3, 0, 1)
        return g, dg, ddg

    def g(self, x) -> np.ndarray:
        return self.jets(x, 0)[0]

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"MetricSpec{label}(n={self.n}, index={self.index})"


def _small_inverse(g):
    """Closed-form inverse and 1-norm condition number for n <= 3.

    numpy's per-call overhead exceeds the arithmetic at these sizes, and
    this sits on the innermost loop of every geodesic integration.
    """
    if g.shape[0] == 2:
        (a, b), (c, d) = g.tolist()
        det = a * d - b * c
        if det == 0.0:
            return None, np.inf
        norm_g = max(abs(a) + abs(c), abs(b) + abs(d))
        norm_adj = max(abs(d) + abs(c), abs(b) + abs(a))
        return np.array([[d, -b], [-c, a]]) / det, norm_g * norm_adj / abs(det)
    (a, b, c), (d, e, f), (h, i, k) = g.tolist()
    A, B, C = e * k - f * i, f * h - d * k, d * i - e * h
    det = a * A + b * B + c * C
    if det == 0.0:
        return None, np.inf
    D, E, F = c * i - b * k, a * k - c * h, b * h - a * i
    G, H, I = b * f - c * e, c * d - a * f, a * e - b * d
    norm_g = max(abs(a) + abs(d) + abs(h), abs(b) + abs(e) + abs(i), abs(c) + abs(f) + abs(k))
    norm_adj = max(abs(A) + abs(B) + abs(C), abs(D) + abs(E) + abs(F), abs(G) + abs(H) + abs(I))
    return (np.array([[A, D, G], [B, E, H], [C, F, I]]) / det,
            norm_g * norm_adj / abs(det))


def _inverse(m: MetricSpec, g: np.ndarray, x) -> np.ndarray:
    # 1-norm condition number; an SVD per call would dominate geodesic runs
    if g.shape[0] <= 3:
        ginv, cond = _small_inverse(g)
    else:
        try:
            ginv = np.linalg.inv(g)
            cond = np.abs(g).sum(0).max() * np.abs(ginv).sum(0).max()
        except np.linalg.LinAlgError:
            cond = np.inf
    if not cond < MAX_CONDITION:
        raise DegenerateMetricError(
            f"metric degenerate at {np.asarray(x).tolist()} (condition number {cond:.3g})")
    return ginv


def signature_at(m: MetricSpec, x):
    """Index (number of negative eigenvalues) and spectrum of ``g(x)``."""
    g = m.g(x)
    if not np.all(np.isfinite(g)):
        raise DegenerateMetricError(f"metric not finite at {np.asarray(x).tolist()}")
    spectrum = np.linalg.eigvalsh(g)
    if np.min(np.abs(spectrum)) <= m.degeneracy_tol:
        raise DegenerateMetricError(
            f"metric degenerate at {np.asarray(x).tolist()}: eigenvalue "
            f"{spectrum[np.argmin(np.abs(spectrum))]:.3g}")
    return int(np.sum(spectrum < 0)), spectrum


def _inverse_code(n, gname):
    """Source lines computing ``gi_k_l`` and ``cond`` for n <= 3."""
    if n == 2:
        a, b, d = gname(0, 0), gname(0, 1), gname(1, 1)
        return [
            f"det = {a}*{d} - {b}*{b}",
            "if det == 0.0: raise _Degenerate(x, _inf)",
            f"gi_0_0 = {d}/det", f"gi_0_1 = gi_1_0 = -{b}/det", f"gi_1_1 = {a}/det",
            f"cond = max(abs({a}) + abs({b}), abs({b}) + abs({d}))**2 / abs(det)",
        ]
    q = {(i, j): gname(i, j) for i in range(3) for j in range(3)}
    cof = {}
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            sign = "" if (i + j) % 2 == 0 else "-"
            cof[i, j] = (f"{sign}({q[r[0], c[0]]}*{q[r[1], c[1]]} - "
                         f"{q[r[0], c[1]]}*{q[r[1], c[0]]})")
    lines = [f"c_{i}_{j} = {cof[i, j]}" for i in range(3) for j in range(i, 3)]
    lines.append(f"det = {q[0, 0]}*c_0_0 + {q[0, 1]}*c_0_1 + {q[0, 2]}*c_0_2")
    lines.append("if det == 0.0: raise _Degenerate(x, _inf)")
    for i in range(3):
        for j in range(i, 3):
            lines.append(f"gi_{i}_{j} = gi_{j}_{i} = c_{i}_{j}/det")
    col = " , ".join(" + ".join(f"abs({q[i, j]})" for i in range(3)) for j in range(3))
    adj = " , ".join(" + ".join(f"abs(c_{min(i, j)}_{max(i, j)})" for i in range(3))
                     for j in range(3))
    lines.append(f"cond = max({col}) * max({adj}) / abs(det)")
    return lines


def _compile_christoffel(m: MetricSpec):
    """Straight-line code for ``Gamma^k_ij`` (flat, row-major ``[k, i, j]``).

    Structurally zero metric derivatives drop out of the first-kind symbols,
    and for n <= 3 the inverse is written out by cofactors, so diagonal or
    sparse metrics cost little more than their nonzero entries.
    """
    n = m.n
    gen = _Gen(n, 1)
    outs = {p: gen.node(m.upper[p]) for p in m._pairs}
    body = [f"x{k + 1} = float(x[{k}])" for k in range(n)] + list(gen.lines)
    for (i, j), (val, _, _) in outs.items():
        body.append(f"g_{i}_{j} = {val}")

    def gname(i, j):
        return f"g_{min(i, j)}_{max(i, j)}"

    def dg(i, j, k):  # d_k g_ij as source text or None
        return outs[min(i, j), max(i, j)][1].get(k + 1)

    if n <= 3:
        body += _inverse_code(n, gname)
    else:
        rows = ", ".join("[" + ", ".join(gname(i, j) for j in range(n)) + "]" for i in range(n))
        body.append(f"_g = _np.array([{rows}])")
        body.append("try:\n        _gi = _np.linalg.inv(_g)\n    except _np.linalg.LinAlgError:\n"
                    "        raise _Degenerate(x, _inf)")
        body.append("cond = _np.abs(_g).sum(0).max() * _np.abs(_gi).sum(0).max()")
        body.append("_gl = _gi.tolist()")
        for i in range(n):
            for j in range(n):
                body.append(f"gi_{i}_{j} = _gl[{i}][{j}]")
    body.append(f"if not cond < {MAX_CONDITION!r}: raise _Degenerate(x, cond)")
    low = {}
    for l in range(n):
        for i in range(n):
            for j in range(i, n):
                terms = []
                for code, sign in ((dg(l, j, i), "+"), (dg(l, i, j), "+"), (dg(i, j, l), "-")):
                    if code is not None:
                        terms.append(f"{sign} {code}")
                if terms:
                    name = f"L_{l}_{i}_{j}"
                    body.append(f"{name} = 0.5*({' '.join(terms)})")
                    low[l, i, j] = name
    out = []
    for k in range(n):
        for i in range(n):
            for j in range(n):
                a, b = min(i, j), max(i, j)
                if j < i:
                    out.append(f"G_{k}_{a}_{b}")
                    continue
                terms = [f"gi_{k}_{l}*{low[l, a, b]}" for l in range(n) if (l, a, b) in low]
                body.append(f"G_{k}_{a}_{b} = {' + '.join(terms) if terms else '0.0'}")
                out.append(f"G_{k}_{a}_{b}")
    body.append("return _np.array([" + ", ".join(out) + f"]).reshape({n}, {n}, {n})")
    src = "def _christoffel(x):\n    " + "\n    ".join(body) + "\n"
    ns = dict(gen.ns)
    ns.update(_np=np, math=math, _Dom=ExprDomainError, _inf=np.inf,
              _Degenerate=_degenerate)
    exec(compile(src, "<pwlab.christoffel>", "exec"), ns)
    return ns["_christoffel"]


def _degenerate(x, cond):
    return DegenerateMetricError(
        f"metric degenerate at {np.asarray(x).tolist()} (condition number {cond:.3g})")


def gamma_at(m: MetricSpec, x) -> np.ndarray:
    """Christoffel symbols ``gamma[k, i, j]`` at ``x`` via generated code."""
    fn = m._compiled.get("gamma")
    if fn is None:
        fn = m._compiled["gamma"] = _compile_christoffel(m)
    return fn(x)


def christoffel_at(m: MetricSpec, x):
    """``(g, ginv, gamma)`` at ``x``; only first derivatives are evaluated."""
    n = m.n
    V, G, _ = m._fn(1)(x)
    g = V.reshape(n, n)
    D = G.reshape(n, n, n)  # D[a, b, c] = d_c g_ab
    ginv = _inverse(m, g, x)
    low = 0.5 * (D + D.transpose(0, 2, 1) - D.transpose(2, 0, 1))
    return g, ginv, (ginv @ low.reshape(n, n * n)).reshape(n, n, n)


@dataclass(frozen=True)
class CurvaturePoint:
    """Curvature data at one point; see the module docstring for indices."""

    x: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    riemann_up: np.ndarray  # R^e_abc stored as [a, b, c, e]
    rm: np.ndarray
    ric: np.ndarray
    scal: float

    def sectional(self, X, Y) -> float:
        X, Y = np.asarray(X, float), np.asarray(Y, float)
        num = np.einsum("abcd,a,b,c,d->", self.rm, X, Y, Y, X)
        den = (X @ self.g @ X) * (Y @ self.g @ Y) - (X @ self.g @ Y) ** 2
        return num / den


def curvature_at(m: MetricSpec, x) -> CurvaturePoint:
    """Christoffel symbols, Riemann, Ricci and scalar curvature at ``x``."""
    x = np.asarray(x, float)
    n = m.n
    V, G, H = m._fn(2)(x)
    g = V.reshape(n, n)
    D = G.reshape(n, n, n)          # D[a, b, c] = d_c g_ab
    HH = H.reshape(n, n, n, n)      # HH[a, b, c, d] = d_c d_d g_ab
    ginv = _inverse(m, g, x)
    # Christoffel symbols of the first kind and their derivatives, last axis = d_m
    low = 0.5 * (D + D.transpose(0, 2, 1) - D.transpose(2, 0, 1))
    dlow = 0.5 * (HH + HH.transpose(0, 2, 1, 3) - HH.transpose(2, 0, 1, 3))
    gamma = (ginv @ low.reshape(n, n * n)).reshape(n, n, n)
    # d_m Gamma^k_ij = g^kl (d_m low_lij - d_m g_lp Gamma^p_ij)
    corr = (D.transpose(0, 2, 1).reshape(n * n, n) @ gamma.reshape(n, n * n))
    corr = corr.reshape(n, n, n, n).transpose(0, 2, 3, 1)        # [l, i, j, m]
    dgam = (ginv @ (dlow - corr).reshape(n, n ** 3)).reshape(n, n, n, n)  # [k, i, j, m]
    dgamma = dgam.transpose(3, 0, 1, 2)
    # R^e_abc as [a, b, c, e]
    d_term = dgam.transpose(3, 1, 2, 0)
    quad = (gamma.reshape(n * n, n) @ gamma.reshape(n, n * n)).reshape(n, n, n, n)
    quad = quad.transpose(1, 2, 3, 0)
    r_up = d_term + quad
    r_up = r_up - r_up.transpose(1, 0, 2, 3)
    rm = (r_up.reshape(n ** 3, n) @ g).reshape(n, n, n, n)
    ric, scal = _contract(ginv, rm)
    dg = D.transpose(2, 0, 1)
    return CurvaturePoint(x, g, ginv, dg, gamma, dgamma, r_up, rm, ric, scal)


def _contract(ginv, rm):
    n = ginv.shape[0]
    ric = (ginv.ravel() @ rm.transpose(0, 3, 1, 2).reshape(n * n, n * n)).reshape(n, n)
    return ric, float(np.sum(ginv * ric))


def ricci_contract(cp: CurvaturePoint):
    """``(Ric, scal)`` with ``Ric_bc = g^ad Rm_abcd`` and ``scal = g^bc Ric_bc``."""
    return _contract(cp.ginv, cp.rm)


def weyl_tensor(cp: CurvaturePoint) -> np.ndarray:
    """Weyl tensor (same index convention as ``cp.rm``); zero for n < 4."""
    n = cp.g.shape[0]
    if n < 4:
        return np.zeros_like(cp.rm)
    g = cp.g
    P = (cp.ric - cp.scal / (2 * (n - 1)) * g) / (n - 2)
    kn = (np.einsum("ad,bc->abcd", P, g) + np.einsum("bc,ad->abcd", P, g)
          - np.einsum("ac,bd->abcd", P, g) - np.einsum("bd,ac->abcd", P, g))
    return cp.rm - kn

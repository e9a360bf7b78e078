"""Wave profiles along geodesics and the plane wave limits they define.

Along a geodesic ``gamma`` with a parallel orthonormal normal frame ``E_i``
(signs ``eps_i = g(E_i, E_i)``) the wave profile is

    A_ij(t) = -eps_i |eps_j| Rm(E_i, gamma', gamma', E_j),

and the plane wave limit is the Lorentzian metric

    2 dv dt + (sum_ij A_ij(t) x^i x^j) dt^2 + sum_i (dx^i)^2

on coordinates ``(v, t, x^1, ..., x^r)``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import sqrtm

from .errors import ConfigError, DegenerateMetricError, ExprDomainError, IntegrationQualityError
from .exprlang import Const, Expr, Func, Var, compile_jets, parse, shift_vars
from .geometry import MetricSpec, curvature_at
from .ode import integrate
from .transport import (
    GeodesicRecord, NormalFrame, ParallelFrame, initial_normal_frame,
    integrate_geodesic, parallel_transport,
)

__all__ = [
    "WaveProfile", "PlaneWaveMetric", "FlowProfile", "slot_matrix",
    "profile_from_slots", "wave_profile", "assemble_plane_wave",
    "frame_change_check", "frame_change_residual", "lift_and_limit",
    "product_metric", "rosen_to_brinkmann", "flow_profile",
    "profile_deviation",
]


def slot_matrix(rm: np.ndarray, v: np.ndarray, E: np.ndarray) -> np.ndarray:
    """``S_ij = Rm(E_i, v, v, E_j)``, symmetrized (pair symmetry)."""
    S = np.einsum("abcd,ia,b,c,jd->ij", rm, E, v, v, E)
    return 0.5 * (S + S.T)


def profile_from_slots(S: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """``A_ij = -eps_i |eps_j| S_ij``; mixed-sign pairs come out antisymmetric."""
    return -np.asarray(eps, float)[:, None] * S


@dataclass
class WaveProfile:
    """Samples of ``A(t)`` with frame signs and a cubic-spline interpolant.

    ``A`` has shape ``(N, r, r)``; ``ricci`` holds ``Ric(gamma', gamma')``
    at the same nodes when it was computed alongside.
    """

    t: np.ndarray
    A: np.ndarray
    eps: np.ndarray
    causal: str = "spacelike"
    provenance: dict = field(default_factory=dict)
    ricci: np.ndarray | None = None
    status: str = "ok"
    rec: GeodesicRecord | None = field(default=None, repr=False)
    frame: ParallelFrame | None = field(default=None, repr=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, float)
        self.A = np.asarray(self.A, float)
        self.eps = np.asarray(self.eps, float)
        self._spline = CubicSpline(self.t, self.A, axis=0) if len(self.t) > 1 else None

    @property
    def r(self) -> int:
        return len(self.eps)

    @property
    def k(self) -> int:
        return int(np.sum(self.eps < 0))

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])

    def _in_range(self, t):
        lo, hi = self.span
        slack = 1e-9 * (1 + abs(lo) + abs(hi))
        return lo - slack <= t <= hi + slack

    def at(self, t, nu: int = 0) -> np.ndarray:
        """Interpolated ``A`` (or its ``nu``-th derivative) at ``t``."""
        if not self._in_range(t):
            raise ExprDomainError(f"profile evaluated at t={t} outside {self.span}")
        if self._spline is None:
            return self.A[0] if nu == 0 else np.zeros_like(self.A[0])
        return self._spline(t, nu)

    def derivative(self, t) -> np.ndarray:
        return self.at(t, 1)

    def symmetric(self) -> np.ndarray:
        """``(A + A^T) / 2`` at every node; the limit metric only sees this part."""
        return 0.5 * (self.A + np.transpose(self.A, (0, 2, 1)))

    def trace_residual(self) -> float:
        """``max_t |tr A + Ric(gamma', gamma')|`` (needs ``ricci``)."""
        if self.ricci is None:
            raise ValueError("profile carries no Ricci samples")
        return float(np.max(np.abs(np.trace(self.A, axis1=1, axis2=2) + self.ricci)))

    def symmetry_residual(self) -> float:
        """Largest violation of ``A_ij = eps_i eps_j A_ji``."""
        sign = np.outer(self.eps, self.eps)
        return float(np.max(np.abs(self.A - sign * np.transpose(self.A, (0, 2, 1)))))

    # -- export -----------------------------------------------------------
    def column_names(self) -> list[str]:
        sep = "" if self.r < 10 else "_"
        return [f"A_{i + 1}{sep}{j + 1}" for i in range(self.r) for j in range(self.r)]

    def to_csv(self, path=None) -> str:
        """Header ``t, A_11 .. A_rr``, then an ``eps`` row, then one row per node."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.column_names()
        w.writerow(["t"] + cols)
        w.writerow(["eps"] + [f"{e:.0f}" for e in self.eps] + [""] * (len(cols) - self.r))
        for t, A in zip(self.t, self.A):
            w.writerow([f"{t:.17g}"] + [f"{a + 0.0:.17g}" for a in A.ravel()])  # no "-0"
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "eps": [int(e) for e in self.eps],
            "k": self.k,
            "causal": self.causal,
            "status": self.status,
            "t": [float(t) for t in self.t],
            "A": [[[float(a) for a in row] for row in A] for A in self.A],
            "provenance": self.provenance,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @staticmethod
    def from_csv(text: str) -> "WaveProfile":
        rows = list(csv.reader(io.StringIO(text)))
        r = int(round(np.sqrt(len(rows[0]) - 1)))
        eps = [float(e) for e in rows[1][1:1 + r]]
        data = np.array([[float(c) for c in row] for row in rows[2:]])
        return WaveProfile(data[:, 0], data[:, 1:].reshape(-1, r, r), eps,
                           provenance={"stage": "csv import"})


def wave_profile(rec: GeodesicRecord, frame: ParallelFrame | None = None) -> WaveProfile:
    """Profile ``A_ij(t)`` at every node of the parallel frame.

    If ``frame`` is omitted the initial normal frame is transported along
    ``rec`` first.
    """
    if frame is None:
        frame = parallel_transport(rec)
    m = rec.metric
    As, ric = [], []
    for x, v, E in zip(frame.x, frame.v, frame.E):
        cp = curvature_at(m, x)
        As.append(profile_from_slots(slot_matrix(cp.rm, v, E), frame.eps))
        ric.append(float(v @ cp.ric @ v))
    prov = {
        "stage": "wave_profile",
        "metric": m.name or "inline",
        "components": m.matrix_source(),
        "x0": [float(c) for c in rec.x0],
        "v0": [float(c) for c in rec.v0],
        "t0": rec.t0,
        "span": list(rec.span),
        "tol": rec.tol,
        "frame0": frame.at(rec.t0)[2].tolist(),
    }
    return WaveProfile(frame.t.copy(), np.array(As), frame.eps.copy(), rec.causal,
                       prov, np.array(ric), frame.traj.status, rec, frame)


# ----------------------------------------------------------------------------
# Assembled limit
# ----------------------------------------------------------------------------

@dataclass
class PlaneWaveMetric:
    """Brinkmann-form limit ``2 dv dt + H dt^2 + sum dx^2`` on ``(v, t, x)``."""

    r: int
    profile: WaveProfile
    metric: MetricSpec
    H: Expr

    @property
    def eps(self):
        return self.profile.eps

    def hessian_H(self, t) -> np.ndarray:
        """Transverse Hessian ``H_ij(t) = A_ij + A_ji``."""
        A = self.profile.at(t)
        return A + A.T

    def t_samples(self):
        return self.profile.t

    def H_samples(self) -> np.ndarray:
        return 2.0 * self.profile.symmetric()


def _entry_impl(spline: CubicSpline, i: int, j: int, lo: float, hi: float):
    slack = 1e-9 * (1 + abs(lo) + abs(hi))

    def impl(u):
        if not lo - slack <= u <= hi + slack:
            raise ExprDomainError(f"profile entry evaluated at t={u} outside [{lo}, {hi}]")
        c = spline(u, 0)[i, j], spline(u, 1)[i, j], spline(u, 2)[i, j]
        return float(c[0]), float(c[1]), float(c[2])

    return impl


def assemble_plane_wave(p: WaveProfile) -> PlaneWaveMetric:
    """Build the limit metric; ``H`` enters through spline-valued entries ``A_i_j(t)``.

    Only the symmetric part of ``A`` contributes to ``H``, so curvature slots
    between members of different causal character vanish identically.
    """
    r = p.r
    n = r + 2
    t_var = Var(2)
    sym = p.symmetric()
    lo, hi = p.span
    spline = CubicSpline(p.t, sym, axis=0) if len(p.t) > 1 else None
    H: Expr = Const(0.0)
    for i in range(r):
        for j in range(i, r):
            col = sym[:, i, j]
            if not np.any(col):
                continue
            if spline is None or np.all(col == col[0]):
                coef: Expr = Const(float(col[0]))
            else:
                coef = Func(f"A_{i + 1}_{j + 1}", t_var, _entry_impl(spline, i, j, lo, hi))
            mult = 1.0 if i == j else 2.0
            H = H + mult * coef * Var(3 + i) * Var(3 + j)
    comps = [[Const(0.0)] * n for _ in range(n)]
    comps[0][1] = comps[1][0] = Const(1.0)
    comps[1][1] = H
    for i in range(r):
        comps[2 + i][2 + i] = Const(1.0)
    names = ["v", "t"] + [f"x{i + 1}" for i in range(r)]
    base = np.zeros(n)
    base[1] = p.t[0]
    metric = MetricSpec(comps, names=names, base_point=base, index=1,
                        name="plane wave limit", symmetric_check=False)
    return PlaneWaveMetric(r, p, metric, H)


# ----------------------------------------------------------------------------
# Frame change covariance
# ----------------------------------------------------------------------------

def _check_block_orthogonal(K, eps, tol=1e-10):
    K = np.asarray(K, float)
    r = len(eps)
    if K.shape != (r, r):
        raise ValueError(f"K must be {r}x{r}")
    if np.max(np.abs(K @ K.T - np.eye(r))) > tol:
        raise ValueError("K is not orthogonal within tolerance")
    cross = np.not_equal.outer(eps, eps)
    if np.any(np.abs(K[cross]) > tol):
        raise ValueError("K mixes frame members of different causal character")
    return K


def frame_change_residual(p: WaveProfile, K, retransport: bool = False) -> float:
    """``max_t |A'(t) - K A(t) K^T|`` where ``A'`` comes from the frame ``K E``.

    With ``retransport`` the rotated initial frame is parallel-transported
    afresh and compared with ``K A K^T`` interpolated at the new nodes;
    otherwise the stored frame samples are rotated and curvature recomputed.
    """
    if p.frame is None:
        raise ValueError("profile has no frame attached")
    K = _check_block_orthogonal(K, p.eps)
    m = p.rec.metric
    if retransport:
        i0 = int(np.argmin(np.abs(p.frame.t - p.rec.t0)))
        E0 = K @ p.frame.E[i0]
        q = wave_profile(p.rec, parallel_transport(p.rec, E0))
        return max(float(np.max(np.abs(A - K @ p.at(t) @ K.T))) for t, A in zip(q.t, q.A))
    worst = 0.0
    for x, v, E, A in zip(p.frame.x, p.frame.v, p.frame.E, p.A):
        cp = curvature_at(m, x)
        A2 = profile_from_slots(slot_matrix(cp.rm, v, K @ E), p.eps)
        worst = max(worst, float(np.max(np.abs(A2 - K @ A @ K.T))))
    return worst


def frame_change_check(p: WaveProfile, K, tol: float = 1e-8,
                       retransport: bool = False) -> bool:
    """True iff the profile of the rotated frame equals ``K A K^T`` to ``tol``.

    Raises
    ------
    ValueError
        If ``K`` is not orthogonal or mixes causal blocks.
    """
    return frame_change_residual(p, K, retransport) < tol


# ----------------------------------------------------------------------------
# Lightlike lift through a product metric
# ----------------------------------------------------------------------------

def product_metric(m: MetricSpec) -> MetricSpec:
    """``-d tau^2 + g`` on ``R x M`` with ``tau`` as the first coordinate."""
    n = m.n + 1
    comps = [[Const(0.0)] * n for _ in range(n)]
    comps[0][0] = Const(-1.0)
    for i in range(m.n):
        for j in range(m.n):
            comps[i + 1][j + 1] = shift_vars(m.component(i, j), 1)
    names = ["tau", *m.names] if m.names else None
    base = np.concatenate([[0.0], m.base_point])
    return MetricSpec(comps, names=names, base_point=base, index=m.index + 1,
                      name=f"product lift of {m.name or 'metric'}",
                      functions=m.functions, symmetric_check=False)


def lift_and_limit(m: MetricSpec, rec: GeodesicRecord, frame0=None,
                   speed_tol: float = 1e-6) -> WaveProfile:
    """Profile along the lightlike lift ``(t, gamma(t))`` in ``-d tau^2 + g``.

    The base frame at ``rec.x0`` (default: initial normal frame) is lifted
    as ``(0, E_i)`` and transported with the product metric; nothing from
    the base transport is reused.

    Raises
    ------
    ValueError
        If ``m`` is not Riemannian or ``rec`` is not unit speed.
    """
    if m.index != 0:
        raise ValueError("lift_and_limit needs a Riemannian metric")
    if abs(rec.energy - 1.0) > speed_tol:
        raise ValueError(f"geodesic is not unit speed (g(v, v) = {rec.energy})")
    if frame0 is None:
        frame0 = initial_normal_frame(m, rec.x0, rec.v0)
    vecs = frame0.vectors if isinstance(frame0, NormalFrame) else np.atleast_2d(frame0)
    pm = product_metric(m)
    x0 = np.concatenate([[rec.t0], rec.x0])
    v0 = np.concatenate([[1.0], rec.v0])
    lrec = integrate_geodesic(pm, x0, v0, rec.span, tol=rec.tol, t0=rec.t0)
    lifted = np.hstack([np.zeros((len(vecs), 1)), vecs])
    p = wave_profile(lrec, parallel_transport(lrec, lifted))
    p.provenance["stage"] = "lift_and_limit"
    return p


def profile_deviation(p: WaveProfile, q: WaveProfile) -> float:
    """``max |A_p(t) - A_q(t)|`` over the nodes of ``p`` inside ``q``'s range."""
    lo, hi = q.span
    return max((float(np.max(np.abs(A - q.at(t)))) for t, A in zip(p.t, p.A)
                if lo <= t <= hi), default=0.0)


# ----------------------------------------------------------------------------
# Rosen to Brinkmann
# ----------------------------------------------------------------------------

def _rosen_callable(gR):
    """Normalize Rosen data to ``t -> (g, g', g'')``."""
    if callable(gR):
        return gR
    rows = [list(r) for r in np.atleast_2d(np.array(gR, dtype=object))]
    r = len(rows)
    exprs = [c if isinstance(c, Expr) else parse(str(c), 1, ["t"]) for row in rows for c in row]
    fn = compile_jets(exprs, 1, 2)

    def jets(t):
        V, G, H = fn(np.array([t], float))
        return V.reshape(r, r), G[:, 0].reshape(r, r), H[:, 0, 0].reshape(r, r)

    return jets


@dataclass
class RosenResult:
    profile: WaveProfile
    f: np.ndarray           # (N, r, r), f[k, i] = f^k_i
    fdot: np.ndarray
    symmetry_residual: float
    normalization_residual: float
    relation_residual: float


def rosen_to_brinkmann(gR, span, f0=None, t0: float | None = None,
                       tol: float = 1e-11, max_step: float = 0.05,
                       check_tol: float = 1e-7) -> WaveProfile:
    """Brinkmann profile of the Rosen plane wave ``2 dx0 dx1 + gR_ij(x0) dx^i dx^j``.

    Parameters
    ----------
    gR : r x r matrix of expressions in ``t`` (strings or Expr), or callable
        ``t -> (g, g', g'')``.
    span : (a, b)
    f0 : r x r array, optional
        Initial frame with ``f0^T gR(t0) f0 = I``; default ``gR(t0)^(-1/2)``.

    Notes
    -----
    ``f`` solves ``f' = -1/2 g^-1 g' f`` and is integrated together with
    ``f'`` as a first-order system, using the derivative of that relation
    for ``f''``.  The profile is ``A = -(f'^T g' f + f''^T g f)``.  The
    symmetry of ``f'^T g f``, the normalization ``f^T g f = I`` and the
    first-order relation are monitored; a violation above ``check_tol``
    raises :class:`IntegrationQualityError`.  Data that become degenerate
    inside the span raise :class:`DegenerateMetricError`.  The full monitor values are
    stored in ``provenance``.
    """
    jets = _rosen_callable(gR)
    a, b = float(span[0]), float(span[1])
    t0 = a if t0 is None else float(t0)
    g0, dg0, _ = jets(t0)
    g0 = np.atleast_2d(np.asarray(g0, float))
    r = g0.shape[0]
    if np.any(np.linalg.eigvalsh(g0) <= 0):
        raise ConfigError("Rosen metric must be positive definite")
    if f0 is None:
        f0 = np.real(sqrtm(np.linalg.inv(g0)))
    f0 = np.atleast_2d(np.asarray(f0, float))
    if np.max(np.abs(f0.T @ g0 @ f0 - np.eye(r))) > 1e-8:
        raise ConfigError("f0 does not satisfy f0^T gR(t0) f0 = I")

    def parts(t):
        g, dg, ddg = (np.atleast_2d(np.asarray(c, float)) for c in jets(t))
        w = np.linalg.eigvalsh(g)
        if np.min(w) <= 1e-12 * max(1.0, np.max(np.abs(w))):
            raise ExprDomainError(f"Rosen metric degenerate at t={t}")
        gi = np.linalg.inv(g)
        return g, dg, ddg, gi

    def second(t, f, fd):
        g, dg, ddg, gi = parts(t)
        M = gi @ dg
        dM = -M @ M + gi @ ddg
        return -0.5 * (dM @ f + M @ fd)

    def rhs(t, y):
        f = y[:r * r].reshape(r, r)
        fd = y[r * r:].reshape(r, r)
        return np.concatenate([fd.ravel(), second(t, f, fd).ravel()])

    fd0 = -0.5 * np.linalg.inv(g0) @ np.atleast_2d(dg0) @ f0
    traj = integrate(rhs, t0, np.concatenate([f0.ravel(), fd0.ravel()]), (a, b),
                     rtol=tol, atol=tol, h_max=max_step)
    if traj.status != "ok":
        raise DegenerateMetricError(
            f"Rosen data unusable beyond t in {traj.horizon}: {traj.reason}")
    As, fs, fds = [], [], []
    sym_res = norm_res = rel_res = 0.0
    for t, y in zip(traj.t, traj.y):
        f = y[:r * r].reshape(r, r)
        fd = y[r * r:].reshape(r, r)
        g, dg, ddg, gi = parts(t)
        fdd = second(t, f, fd)
        As.append(-(fd.T @ dg @ f + fdd.T @ g @ f))
        fs.append(f)
        fds.append(fd)
        P = fd.T @ g @ f
        sym_res = max(sym_res, float(np.max(np.abs(P - P.T))))
        norm_res = max(norm_res, float(np.max(np.abs(f.T @ g @ f - np.eye(r)))))
        rel_res = max(rel_res, float(np.max(np.abs(fd + 0.5 * gi @ dg @ f))))
    if max(sym_res, norm_res, rel_res) > check_tol:
        raise IntegrationQualityError(
            f"Rosen frame monitors out of tolerance (symmetry {sym_res:.3g}, "
            f"normalization {norm_res:.3g}, relation {rel_res:.3g})")
    prov = {"stage": "rosen_to_brinkmann", "span": [a, b], "t0": t0, "tol": tol,
            "f0": f0.tolist(), "symmetry_residual": sym_res,
            "normalization_residual": norm_res, "relation_residual": rel_res}
    if not callable(gR):
        prov["gR"] = [[str(c) for c in row] for row in np.atleast_2d(np.array(gR, dtype=object))]
    p = WaveProfile(traj.t, np.array(As), np.ones(r), "lightlike", prov, status=traj.status)
    p.f = np.array(fs)
    p.fdot = np.array(fds)
    return p


# ----------------------------------------------------------------------------
# Geodesic flow and the Riccati identity
# ----------------------------------------------------------------------------

@dataclass
class FlowProfile:
    """Samples of ``A_Z``, its exact derivative and the profile ``A``.

    ``residual = max_t |A + dA_Z/dt - A_Z^2|``.
    """

    t: np.ndarray
    AZ: np.ndarray
    dAZ: np.ndarray
    A: np.ndarray
    residual: float
    geodesic_residual: float
    tangency_residual: float


def flow_profile(m: MetricSpec, Z, rec: GeodesicRecord,
                 frame: ParallelFrame | None = None, field_tol: float = 1e-7) -> FlowProfile:
    """Check the Riccati identity ``A = -dA_Z/dt + A_Z^2`` along an integral curve.

    ``Z`` is a list of ``n`` component expressions (strings or Expr).
    ``(A_Z)_ij = -eps_i g(nabla_{E_j} Z, E_i)``; its ``t``-derivative is
    evaluated exactly from second covariant derivatives of ``Z`` rather than
    by differencing samples.

    Raises
    ------
    ValueError
        If ``Z`` is not geodesic (``|nabla_Z Z| > field_tol``) or ``rec`` is
        not one of its integral curves.
    """
    n = m.n
    exprs = [c if isinstance(c, Expr) else parse(str(c), n, m.names, m.functions) for c in Z]
    if len(exprs) != n:
        raise ValueError(f"Z needs {n} components")
    zjet = compile_jets(exprs, n, 2)
    if frame is None:
        frame = parallel_transport(rec)
    eps = frame.eps
    ts, AZs, dAZs, As = [], [], [], []
    geo_res = tan_res = 0.0
    for t, x, v, E in zip(frame.t, frame.x, frame.v, frame.E):
        cp = curvature_at(m, x)
        z, dz, ddz = zjet(x)              # dz[c, l] = d_l Z^c
        G = cp.gamma                        # G[c, l, m]
        nz = dz.T + np.einsum("clm,m->lc", G, z)          # nz[l, c] = (nabla_l Z)^c
        geo_res = max(geo_res, float(np.max(np.abs(z @ nz))))
        tan_res = max(tan_res, float(np.max(np.abs(z - v))))
        # d_a (nabla_l Z)^c
        d_nz = (np.einsum("cla->alc", ddz)
                + np.einsum("aclm,m->alc", cp.dgamma, z)
                + np.einsum("clm,ma->alc", G, dz))
        # (nabla_a nabla Z)^c_l
        nnz = (d_nz + np.einsum("cam,lm->alc", G, nz)
               - np.einsum("mal,mc->alc", G, nz))
        gE = E @ cp.g                        # gE[i, c] = g(E_i, .)
        AZ = -eps[:, None] * np.einsum("ic,jl,lc->ij", gE, E, nz)
        dAZ = -eps[:, None] * np.einsum("ic,a,jl,alc->ij", gE, v, E, nnz)
        ts.append(t)
        AZs.append(AZ)
        dAZs.append(dAZ)
        As.append(profile_from_slots(slot_matrix(cp.rm, v, E), eps))
    if geo_res > field_tol:
        raise ValueError(f"Z is not geodesic along the curve (|nabla_Z Z| = {geo_res:.3g})")
    if tan_res > field_tol:
        raise ValueError(f"curve is not an integral curve of Z (mismatch {tan_res:.3g})")
    AZs, dAZs, As = np.array(AZs), np.array(dAZs), np.array(As)
    residual = float(np.max(np.abs(As + dAZs - AZs @ AZs)))
    return FlowProfile(np.array(ts), AZs, dAZs, As, residual, geo_res, tan_res)

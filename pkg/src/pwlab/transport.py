"""Geodesics, normal frames and parallel transport in any signature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetricError, IntegrationQualityError, PwlabError
from .geometry import MetricSpec, christoffel_at, gamma_at
from .ode import Trajectory, integrate

__all__ = [
    "GeodesicRecord", "NormalFrame", "ParallelFrame", "causal_character",
    "integrate_geodesic", "initial_normal_frame", "parallel_transport",
    "geodesic_residual", "geodesic_with_frame", "CAUSAL_TOL", "PIVOT_TOL",
]

CAUSAL_TOL = 1e-9
PIVOT_TOL = 1e-9
ENERGY_TOL = 1e-7
FRAME_DRIFT_MAX = 1e-5
# Cap on the step so that cubic Hermite interpolation between nodes stays
# at the 1e-8 level for profiles of moderate size.
MAX_STEP = 0.05


def causal_character(norm2: float, tol: float = CAUSAL_TOL) -> str:
    """``"spacelike"``, ``"timelike"`` or ``"lightlike"`` from ``g(v, v)``."""
    if norm2 > tol:
        return "spacelike"
    if norm2 < -tol:
        return "timelike"
    return "lightlike"


def _geodesic_rhs(m: MetricSpec):
    n = m.n

    def rhs(t, y):
        v = y[n:]
        return np.concatenate([v, -((gamma_at(m, y[:n]) @ v) @ v)])

    return rhs


@dataclass
class GeodesicRecord:
    """Dense solution ``gamma(t)`` of the geodesic equation.

    ``t``, ``x`` and ``v`` are the accepted nodes; :meth:`position` and
    :meth:`velocity` interpolate between them.  ``status`` is ``"ok"`` or the
    reason the run stopped early (then ``horizon`` is the range reached).
    """

    metric: MetricSpec
    t0: float
    span: tuple
    traj: Trajectory
    energy: float
    causal: str
    tol: float
    energy_drift: float = 0.0

    @property
    def t(self):
        return self.traj.t

    @property
    def x(self):
        return self.traj.y[:, :self.metric.n]

    @property
    def v(self):
        return self.traj.y[:, self.metric.n:]

    @property
    def status(self):
        return self.traj.status

    @property
    def horizon(self):
        return self.traj.horizon

    @property
    def x0(self):
        return self.position(self.t0)

    @property
    def v0(self):
        return self.velocity(self.t0)

    def position(self, t):
        return self.traj(t)[:self.metric.n]

    def velocity(self, t):
        return self.traj(t)[self.metric.n:]


def integrate_geodesic(m: MetricSpec, x0, v0, span, tol: float = 1e-10,
                       t0: float | None = None, max_step: float = MAX_STEP) -> GeodesicRecord:
    """Integrate the geodesic with ``gamma(t0) = x0``, ``gamma'(t0) = v0``.

    ``t0`` defaults to ``span[0]``.  If the state exceeds ``1e8`` or the
    step size underflows the record is truncated and ``status`` flags a
    blow-up; this is evidence of incompleteness, not a proof.

    Raises
    ------
    DegenerateMetricError
        If the metric is degenerate at ``x0`` or becomes degenerate along
        the path.
    IntegrationQualityError
        If ``g(gamma', gamma')`` drifts by more than ``1e-7 (1 + |g(v0, v0)|)``
        on a run that covered its whole span.
    """
    x0 = np.asarray(x0, float)
    v0 = np.asarray(v0, float)
    if x0.shape != (m.n,) or v0.shape != (m.n,):
        raise ValueError(f"x0 and v0 must have length {m.n}")
    t0 = float(span[0]) if t0 is None else float(t0)
    g0, _, _ = christoffel_at(m, x0)  # raises on degeneracy
    energy = float(v0 @ g0 @ v0)
    traj = integrate(_geodesic_rhs(m), t0, np.concatenate([x0, v0]), span,
                     rtol=tol, atol=tol, h_max=max_step)
    if traj.status == "singular":
        raise DegenerateMetricError(
            f"integration stopped at t in {traj.horizon}: {traj.reason}")
    return _make_record(m, t0, span, traj, energy, tol)


def _metric_samples(m, xs):
    """``g`` at each node, stopping at the first node where it is unusable."""
    out = []
    for x in xs:
        if np.abs(x).max() > 1e6:
            break
        try:
            out.append(m.g(x))
        except PwlabError:
            break
    return out


def _make_record(m, t0, span, traj, energy, tol, gs=None):
    rec = GeodesicRecord(m, t0, (float(span[0]), float(span[1])), traj, energy,
                         causal_character(energy), tol)
    if gs is None:
        gs = _metric_samples(m, rec.x)
    drift = 0.0
    for G, v in zip(gs, rec.v):
        if np.abs(v).max() > 1e6:
            break
        drift = max(drift, abs(float(v @ G @ v) - energy))
    rec.energy_drift = drift
    if traj.status == "ok" and drift > ENERGY_TOL * (1 + abs(energy)):
        raise IntegrationQualityError(
            f"energy drift {drift:.3g} exceeds tolerance; try a smaller tol")
    return rec


def geodesic_residual(rec: GeodesicRecord) -> float:
    """Max residual of ``x'' + Gamma(x', x')`` at the interval midpoints.

    Uses the Hermite interpolant of the velocity, so it measures the dense
    output rather than the nodes themselves.
    """
    m = rec.metric
    n = m.n
    worst = 0.0
    for a, b in zip(rec.t[:-1], rec.t[1:]):
        tm = 0.5 * (a + b)
        y = rec.traj(tm)
        acc = rec.traj.derivative(tm)[n:]
        _, _, gamma = christoffel_at(m, y[:n])
        worst = max(worst, float(np.max(np.abs(acc + np.einsum("kij,i,j->k", gamma, y[n:], y[n:])))))
    return worst


@dataclass(frozen=True)
class NormalFrame:
    """Orthonormal vectors in ``v0``-perp at one point, timelike ones first."""

    vectors: np.ndarray  # (r, n)
    eps: np.ndarray      # (r,) entries +-1
    k: int               # number of timelike members

    @property
    def r(self):
        return len(self.eps)


def _signed_gram_schmidt(G, cands, want):
    """Pick ``want`` orthonormal vectors from the span of ``cands``."""
    cands = [c.astype(float).copy() for c in cands]
    chosen, signs = [], []
    while len(chosen) < want:
        for c, s in zip(chosen, signs):
            cands = [e - s * (e @ G @ c) * c for e in cands]
        if not cands:
            break
        norms = np.array([e @ G @ e for e in cands])
        i = int(np.argmax(np.abs(norms)))
        if abs(norms[i]) < PIVOT_TOL:
            # every candidate is (nearly) null: pivot on a pair instead
            best, pair = 0.0, None
            for a in range(len(cands)):
                for b in range(a + 1, len(cands)):
                    val = abs(cands[a] @ G @ cands[b])
                    if val > best:
                        best, pair = val, (a, b)
            if pair is None or best < PIVOT_TOL:
                break
            a, b = pair
            cands[a] = cands[a] + cands[b]
            continue
        e = cands.pop(i)
        chosen.append(e / np.sqrt(abs(norms[i])))
        signs.append(1.0 if norms[i] > 0 else -1.0)
    return chosen, signs


def initial_normal_frame(m: MetricSpec, x0, v0) -> NormalFrame:
    """Maximal orthonormal set in ``v0``-perp, after the complement construction.

    For non-null ``v0`` the coordinate basis is projected onto ``v0``-perp
    and ``n - 1`` vectors are extracted.  For null ``v0`` a null partner
    ``w`` with ``g(w, v0) = 1`` is built, the basis is projected onto
    ``{v0, w}``-perp and ``n - 2`` vectors are extracted.  Extraction is a
    signed Gram-Schmidt pivoting on ``|g(e, e)|``; pivots below ``1e-9`` are
    rejected.
    """
    x0 = np.asarray(x0, float)
    v0 = np.asarray(v0, float)
    if not np.any(v0):
        raise ValueError("v0 must be nonzero")
    G = m.g(x0)
    n = m.n
    basis = np.eye(n)
    e0 = float(v0 @ G @ v0)
    if causal_character(e0) != "lightlike":
        cands = [e - (e @ G @ v0) / e0 * v0 for e in basis]
        want = n - 1
    else:
        pair = basis @ G @ v0
        u = basis[int(np.argmax(np.abs(pair)))]
        u = u / (u @ G @ v0)
        w = u - 0.5 * (u @ G @ u) * v0
        cands = [e - (e @ G @ w) * v0 - (e @ G @ v0) * w for e in basis]
        want = n - 2
    chosen, signs = _signed_gram_schmidt(G, cands, want)
    if len(chosen) < want:
        raise DegenerateMetricError(
            f"could not find a nondegenerate complement of v0 (found {len(chosen)} of {want})")
    order = sorted(range(want), key=lambda i: (signs[i] > 0, i))
    vecs = np.array([chosen[i] for i in order])
    eps = np.array([signs[i] for i in order])
    return NormalFrame(vecs, eps, int(np.sum(eps < 0)))


@dataclass
class ParallelFrame:
    """Frame ``E_i(t)`` parallel along a geodesic, with its own node grid.

    The geodesic is re-integrated together with the frame, so ``x`` and
    ``v`` here are consistent with ``E`` at every node.  Between nodes the
    frame is Hermite-interpolated.
    """

    rec: GeodesicRecord
    traj: Trajectory
    eps: np.ndarray
    k: int
    gram_drift: float = 0.0
    orth_drift: float = 0.0

    @property
    def r(self):
        return len(self.eps)

    @property
    def n(self):
        return self.rec.metric.n

    @property
    def t(self):
        return self.traj.t

    @property
    def x(self):
        return self.traj.y[:, :self.n]

    @property
    def v(self):
        return self.traj.y[:, self.n:2 * self.n]

    @property
    def E(self):
        return self.traj.y[:, 2 * self.n:].reshape(len(self.t), self.r, self.n)

    def at(self, t):
        """``(x, v, E)`` at parameter ``t``."""
        y = self.traj(t)
        n = self.n
        return y[:n], y[n:2 * n], y[2 * n:].reshape(self.r, n)

    def state_derivative(self, t):
        """Derivatives of ``(x, v, E)`` at ``t`` from the Hermite interpolant."""
        d = self.traj.derivative(t)
        n = self.n
        return d[:n], d[n:2 * n], d[2 * n:].reshape(self.r, n)


def _transport_rhs(m: MetricSpec, r: int):
    n = m.n

    def rhs(t, y):
        x, v = y[:n], y[n:2 * n]
        E = y[2 * n:].reshape(r, n)
        gv = gamma_at(m, x) @ v  # gv[k, j] = Gamma^k_ij v^i (symmetric in i, j)
        return np.concatenate([v, -(gv @ v), -(E @ gv.T).ravel()])

    return rhs


def _frame_vectors(m, x0, v0, frame0):
    if frame0 is None:
        frame0 = initial_normal_frame(m, x0, v0)
    if isinstance(frame0, NormalFrame):
        return frame0.vectors, frame0.eps
    vecs = np.atleast_2d(np.asarray(frame0, float))
    G0 = m.g(x0)
    return vecs, np.sign(np.einsum("ai,ij,aj->a", vecs, G0, vecs))


def parallel_transport(rec: GeodesicRecord, frame0=None, tol: float | None = None,
                       check: bool = True, max_step: float = MAX_STEP) -> ParallelFrame:
    """Parallel-transport ``frame0`` (default: :func:`initial_normal_frame`).

    ``frame0`` is a :class:`NormalFrame` or an ``(r, n)`` array of vectors at
    ``rec.x0``.  Drift of the Gram matrix away from ``diag(eps)`` and of
    ``g(E_i, gamma')`` away from 0 is measured, never corrected.

    Raises
    ------
    IntegrationQualityError
        If either drift exceeds ``1e-5`` (when ``check`` is true).
    """
    m = rec.metric
    x0, v0 = rec.x0, rec.v0
    vecs, eps = _frame_vectors(m, x0, v0, frame0)
    tol = rec.tol if tol is None else tol
    lo, hi = rec.horizon
    span = (lo, hi) if rec.span[0] <= rec.span[1] else (hi, lo)
    y0 = np.concatenate([x0, v0, vecs.ravel()])
    traj = integrate(_transport_rhs(m, len(eps)), rec.t0, y0, span, rtol=tol, atol=tol,
                     h_max=max_step)
    if traj.status == "singular":
        raise DegenerateMetricError(f"frame transport stopped: {traj.reason}")
    return _make_frame(rec, traj, eps, check)


def _make_frame(rec, traj, eps, check, gs=None):
    eps = np.asarray(eps, float)
    pf = ParallelFrame(rec, traj, eps, int(np.sum(eps < 0)))
    if gs is None:
        gs = _metric_samples(rec.metric, pf.x)
    target = np.diag(pf.eps)
    gd = od = 0.0
    for G, v, E in zip(gs, pf.v, pf.E):
        gd = max(gd, float(np.max(np.abs(E @ G @ E.T - target))))
        od = max(od, float(np.max(np.abs(E @ G @ v))))
    pf.gram_drift, pf.orth_drift = gd, od
    if check and traj.status == "ok" and max(gd, od) > FRAME_DRIFT_MAX:
        raise IntegrationQualityError(
            f"frame drift {max(gd, od):.3g} exceeds {FRAME_DRIFT_MAX}; try a smaller tol")
    return pf


def geodesic_with_frame(m: MetricSpec, x0, v0, span, frame0=None, tol: float = 1e-10,
                        t0: float | None = None, max_step: float = MAX_STEP,
                        check: bool = True):
    """Integrate a geodesic and transport a frame along it in one pass.

    Equivalent to :func:`integrate_geodesic` followed by
    :func:`parallel_transport`, at roughly half the cost: the record is the
    ``(x, v)`` part of the joint solution.  Returns ``(rec, frame)``.
    """
    x0 = np.asarray(x0, float)
    v0 = np.asarray(v0, float)
    if x0.shape != (m.n,) or v0.shape != (m.n,):
        raise ValueError(f"x0 and v0 must have length {m.n}")
    t0 = float(span[0]) if t0 is None else float(t0)
    g0, _, _ = christoffel_at(m, x0)
    energy = float(v0 @ g0 @ v0)
    vecs, eps = _frame_vectors(m, x0, v0, frame0)
    y0 = np.concatenate([x0, v0, vecs.ravel()])
    traj = integrate(_transport_rhs(m, len(eps)), t0, y0, span, rtol=tol, atol=tol,
                     h_max=max_step)
    if traj.status == "singular":
        raise DegenerateMetricError(
            f"integration stopped at t in {traj.horizon}: {traj.reason}")
    k = 2 * m.n
    gtraj = Trajectory(traj.t, traj.y[:, :k], traj.dy[:, :k], traj.status,
                       traj.horizon, traj.reason)
    gs = _metric_samples(m, gtraj.y[:, :m.n])
    rec = _make_record(m, t0, span, gtraj, energy, tol, gs)
    return rec, _make_frame(rec, traj, eps, check, gs)

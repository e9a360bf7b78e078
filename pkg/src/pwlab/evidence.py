"""Forward-direction evidence that plane wave limits inherit curvature properties.

For each sampled geodesic the property is measured on the base metric
along the geodesic, the limit is built and classified, and the matching
flag of the limit is reported.  Items:

* ``i``   flat                        -> limits flat
* ``ii``  constant sectional curvature -> limits conformally flat
* ``iii`` Ricci-flat                  -> limits Ricci-flat
* ``iv``  ``Ric(v, v)`` constant along geodesics -> limits have parallel Ricci
* ``v``   ``(nabla_v Rm)(., v, v, .) = 0`` -> limits locally symmetric
* ``vi``  signed Ricci curvature      -> limit Ricci of the same sign
* ``vii`` completeness                -> reported by a domain check only

Finitely many geodesics are sampled, so every report is labelled
evidence, not proof.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .geometry import curvature_at
from .limit import assemble_plane_wave, wave_profile
from .ppwave import classify, completeness_probe, covariant_riemann
from .scenarios import Scenario, random_unit_geodesics
from .transport import geodesic_with_frame

__all__ = ["ITEMS", "verify_item", "base_residual"]

ITEMS = ("i", "ii", "iii", "iv", "v", "vi", "vii")
_FLAG = {"i": "flat", "ii": "conformally_flat", "iii": "ricci_flat",
         "iv": "parallel_ricci", "v": "locally_symmetric"}
_BASE = {"i": "flat", "ii": "constant sectional curvature", "iii": "Ricci-flat",
         "iv": "Ric(v, v) constant along the geodesic",
         "v": "(nabla_v Rm)(., v, v, .) = 0 along the geodesic",
         "vi": "signed Ricci curvature", "vii": "geodesically complete"}


def _frame_tensor(t, F):
    """Components of a covariant 4-tensor in the frame rows of ``F``."""
    return np.einsum("abcd,ia,jb,kc,ld->ijkl", t, F, F, F, F, optimize=True)


def _frame_rm(rec, x, v, E):
    F = np.vstack([v, E])
    cp = curvature_at(rec.metric, x)
    return cp, F, _frame_tensor(cp.rm, F)


def base_residual(item: str, rec, frame, stride: int = 1, nabla_points: int = 6,
                  fd_step: float = 1e-3):
    """Residual of the base-side property along the sampled geodesic.

    Components are taken in the orthonormal frame ``(v, E_1, ..., E_r)``
    so residuals do not depend on the chart's scale.  Returns
    ``(residual, extra)``; ``extra`` carries the Ricci eigenvalue range
    for item ``vi``.
    """
    xs, vs, Es = frame.x[::stride], frame.v[::stride], frame.E[::stride]
    extra = {}
    if item in ("i", "ii", "iii"):
        res = 0.0
        lams = []
        for x, v, E in zip(xs, vs, Es):
            cp, F, R = _frame_rm(rec, x, v, E)
            if item == "i":
                res = max(res, float(np.max(np.abs(R))))
            elif item == "ii":
                n = len(F)
                G = F @ cp.g @ F.T
                lam = cp.scal / (n * (n - 1))
                lams.append(lam)
                model = lam * (np.einsum("ad,bc->abcd", G, G) - np.einsum("ac,bd->abcd", G, G))
                res = max(res, float(np.max(np.abs(R - model))))
            else:
                res = max(res, float(np.max(np.abs(F @ cp.ric @ F.T))))
        if lams:
            # pointwise isotropy is automatic in dimension 2; the value must
            # also be constant along the geodesic
            res = max(res, max(lams) - min(lams))
    elif item == "iv":
        rics = [float(v @ curvature_at(rec.metric, x).ric @ v) for x, v in zip(xs, vs)]
        res = max(rics) - min(rics)
    elif item == "v":
        idx = np.linspace(0, len(frame.t) - 1, nabla_points).astype(int)
        res = 0.0
        for i in idx:
            x = frame.x[i]
            # a step of fd_step in proper length along each coordinate
            h = fd_step / np.sqrt(np.abs(np.diag(rec.metric.g(x))))
            D = covariant_riemann(rec.metric, x, h)
            v, E = frame.v[i], frame.E[i]
            slot = np.einsum("eabcd,e,ia,b,c,jd->ij", D, v, E, v, v, E)
            res = max(res, float(np.max(np.abs(slot))))
    elif item == "vi":
        lo, hi = np.inf, -np.inf
        for x in xs:
            cp = curvature_at(rec.metric, x)
            ev = np.linalg.eigvals(np.linalg.solve(cp.g, cp.ric)).real
            lo, hi = min(lo, ev.min()), max(hi, ev.max())
        extra = {"ric_eigen_min": float(lo), "ric_eigen_max": float(hi)}
        # distance from having a sign: the smaller violation of >= 0 or <= 0
        res = float(min(max(0.0, -lo), max(0.0, hi)))
    else:
        raise ConfigError(f"no base residual for item {item!r}")
    return res, extra


def verify_item(sc: Scenario, item: str, count: int = 16, seed: int = 0, tol: float = 1e-6,
                span=None, integration_tol: float = 1e-10) -> dict:
    """Run one theorem item on ``count`` seeded geodesics of a scenario."""
    if item not in ITEMS:
        raise ConfigError(f"unknown item {item!r}; choose from {', '.join(ITEMS)}")
    span = tuple(span) if span is not None else sc.span
    if item == "vii":
        # the profile must cover [-T, T]
        T = max(abs(span[0]), abs(span[1]))
        span = (-T, T)
    data = random_unit_geodesics(sc, count, seed)
    rows = []
    for k, (x0, v0) in enumerate(data):
        t0 = min(max(sc.t0, span[0]), span[1])
        rec, fr = geodesic_with_frame(sc.metric, x0, v0, span, t0=t0, tol=integration_tol)
        p = wave_profile(rec, fr)
        row = {"geodesic": k, "x0": [float(c) for c in x0], "v0": [float(c) for c in v0],
               "causal": rec.causal}
        if item == "vii":
            probe = completeness_probe(p, T)
            row.update({"domain_check": probe, "pass": probe["verdict"] == "complete-evidence"})
            rows.append(row)
            continue
        base, extra = base_residual(item, rec, fr)
        row["base_residual"] = base
        row.update(extra)
        if item == "vi":
            limit_ric = -np.trace(p.A, axis1=1, axis2=2)
            base_ric = np.array([float(v @ curvature_at(sc.metric, x).ric @ v)
                                 for x, v in zip(fr.x, fr.v)])
            row["limit_ricci_range"] = [float(limit_ric.min()), float(limit_ric.max())]
            row["limit_vs_base_ricci"] = float(np.max(np.abs(limit_ric - base_ric)))
            sign = 1.0 if extra["ric_eigen_min"] >= -tol else -1.0
            same = bool(np.all(sign * limit_ric >= -tol))
            row["limit_residual"] = row["limit_vs_base_ricci"]
            row["pass"] = bool(base < tol and same and row["limit_vs_base_ricci"] < tol)
        else:
            cls = classify(assemble_plane_wave(p))
            flag = cls.flags[_FLAG[item]]
            row["limit_flag"] = _FLAG[item]
            row["limit_value"] = flag.value
            row["limit_residual"] = flag.residual
            row["pass"] = bool(base < tol and flag.value and flag.residual < tol)
        rows.append(row)
    return {
        "scenario": sc.name,
        "item": item,
        "base_property": _BASE[item],
        "limit_property": _FLAG.get(item, "Ricci sign" if item == "vi" else "complete"),
        "direction": "forward",
        "label": "evidence",
        "tolerance": tol,
        "count": count,
        "seed": seed,
        "geodesics": rows,
        "pass": all(r["pass"] for r in rows),
    }

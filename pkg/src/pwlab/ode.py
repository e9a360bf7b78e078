"""Adaptive Dormand-Prince 5(4) integration with cubic Hermite dense output.

The integrator is deliberately small: fixed tableau, scalar step control on
a mixed absolute/relative RMS norm, and a blow-up watchdog.  Exceptions
raised by the right-hand side during a trial step (a metric becoming
singular, an expression leaving its domain) halve the step; if that drives
the step below the underflow threshold the run stops and the trajectory is
truncated with its horizon recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PwlabError

__all__ = ["Trajectory", "integrate", "hermite"]

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                    -92097 / 339200, 187 / 2100, 1 / 40])

BLOWUP = 1e8


def hermite(t, t0, t1, y0, y1, d0, d1):
    """Cubic Hermite interpolant on ``[t0, t1]`` evaluated at ``t``."""
    h = t1 - t0
    s = (t - t0) / h
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def hermite_derivative(t, t0, t1, y0, y1, d0, d1):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    return ((6 * s2 - 6 * s) * (y0 - y1) / h
            + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1)


@dataclass
class Trajectory:
    """Accepted nodes of an integration, sorted by increasing ``t``.

    ``status`` is ``"ok"`` when the whole requested span was covered,
    otherwise ``"blowup"`` or ``"singular"``; ``horizon`` then holds the
    ``(lo, hi)`` range actually reached.
    """

    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    status: str = "ok"
    horizon: tuple = (None, None)
    reason: str = ""

    def _locate(self, t):
        i = int(np.searchsorted(self.t, t, side="right")) - 1
        return min(max(i, 0), len(self.t) - 2)

    def __call__(self, t):
        """Hermite-interpolated state at ``t`` (within the covered range)."""
        if len(self.t) == 1:
            return self.y[0].copy()
        self._check(t)
        i = self._locate(t)
        return hermite(t, self.t[i], self.t[i + 1], self.y[i], self.y[i + 1],
                       self.dy[i], self.dy[i + 1])

    def derivative(self, t):
        self._check(t)
        i = self._locate(t)
        return hermite_derivative(t, self.t[i], self.t[i + 1], self.y[i],
                                  self.y[i + 1], self.dy[i], self.dy[i + 1])

    def _check(self, t):
        lo, hi = self.t[0], self.t[-1]
        slack = 1e-12 * (1 + abs(lo) + abs(hi))
        if t < lo - slack or t > hi + slack:
            raise ValueError(f"t={t} outside integrated range [{lo}, {hi}]")


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    try:
        f1 = f(t0 + direction * h0, y0 + direction * h0 * f0)
        d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    except (PwlabError, ArithmeticError, ValueError):
        return h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _one_direction(f, t0, y0, t1, rtol, atol, max_steps, h_max):
    direction = 1.0 if t1 >= t0 else -1.0
    ts, ys, dys = [t0], [y0], []
    f0 = f(t0, y0)
    dys.append(f0)
    if t1 == t0:
        return ts, ys, dys, "ok", ""
    span = abs(t1 - t0)
    h = min(_initial_step(f, t0, y0, f0, direction, rtol, atol), span, h_max)
    t, y = t0, y0
    k = np.empty((7, len(y0)))
    underflow = 1e-13 * (1.0 + abs(t0) + abs(t1))
    for _ in range(max_steps):
        if direction * (t1 - t) <= underflow:
            return ts, ys, dys, "ok", ""
        h = min(h, abs(t1 - t))
        if h < underflow:
            return ts, ys, dys, "blowup", "step size underflow"
        hs = direction * h
        k[0] = f0
        try:
            for s in range(1, 7):
                k[s] = f(t + _C[s] * hs, y + hs * (_A[s] @ k[:s]))
        except (PwlabError, ArithmeticError, ValueError, FloatingPointError) as exc:
            h *= 0.5
            if h < underflow:
                return ts, ys, dys, "singular", str(exc)
            continue
        y_new = y + hs * (_B @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean(np.square(hs * (_E @ k) / scale))))
        if err <= 1.0:  # false for nan, which then shrinks the step
            t = t + hs if abs(t1 - (t + hs)) > underflow else t1
            y = y_new
            f0 = k[6].copy()  # FSAL
            ts.append(t)
            ys.append(y)
            dys.append(f0)
            if np.abs(y).max() > BLOWUP:
                return ts, ys, dys, "blowup", "state exceeded 1e8"
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * fac, h_max)
        else:
            h *= 0.2 if err != err else max(0.2, 0.9 * err ** -0.2)
    return ts, ys, dys, "blowup", "maximum step count reached"


def integrate(f, t0, y0, span, rtol=1e-10, atol=1e-10, max_steps=200000,
              h_max=np.inf) -> Trajectory:
    """Integrate ``y' = f(t, y)`` from ``(t0, y0)`` over ``span = (a, b)``.

    ``t0`` may lie anywhere in the closed span (or equal either end, and
    ``a > b`` is allowed); both directions are integrated and merged.
    """
    a, b = float(span[0]), float(span[1])
    lo, hi = min(a, b), max(a, b)
    t0 = float(t0)
    if not lo - 1e-12 <= t0 <= hi + 1e-12:
        raise ValueError(f"t0={t0} outside span {span}")
    y0 = np.asarray(y0, dtype=float)
    fwd = _one_direction(f, t0, y0, hi, rtol, atol, max_steps, h_max)
    bwd = _one_direction(f, t0, y0, lo, rtol, atol, max_steps, h_max)
    t = np.array(bwd[0][::-1][:-1] + fwd[0])
    y = np.array(bwd[1][::-1][:-1] + fwd[1])
    dy = np.array(bwd[2][::-1][:-1] + fwd[2])
    status, reason = "ok", ""
    for st, why in ((fwd[3], fwd[4]), (bwd[3], bwd[4])):
        if st != "ok":
            status, reason = st, why
    return Trajectory(t, y, dy, status, (float(t[0]), float(t[-1])), reason)

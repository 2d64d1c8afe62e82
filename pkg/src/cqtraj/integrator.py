"""Dormand-Prince 5(4) for a scalar complex ODE dy/dt = f(t, y).

PI step-size control (Gustafsson), FSAL, and the standard quartic continuous
extension so callers can evaluate y anywhere inside an accepted step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = -71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40

# continuous extension: y(t + s h) = y + h * sum_j Q_j s^(j+1), Q = K^T P
P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI exponents for an order-4 error estimate
ALPHA = 0.7 / 5
BETA = 0.4 / 5


class GuardHit(Exception):
    """Raised by f when a stage lands somewhere it must not evaluate."""


class StepUnderflow(Exception):
    def __init__(self, t, y, segments):
        super().__init__(f"step size underflow at t = {t}")
        self.t = t
        self.y = y
        self.segments = segments


@dataclass(frozen=True)
class Segment:
    """One accepted step with its dense interpolant."""

    t: float
    h: float
    y0: complex
    y1: complex
    q: tuple

    @property
    def t1(self):
        return self.t + self.h

    def __call__(self, s):
        """y at fraction s in [0, 1] of the step (scalar or array)."""
        q1, q2, q3, q4 = self.q
        return self.y0 + self.h * s * (q1 + s * (q2 + s * (q3 + s * q4)))

    def at(self, t):
        return self((t - self.t) / self.h)


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    scale = atol + rtol * abs(y0)
    d0 = abs(y0) / scale
    d1 = abs(f0) / scale
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    try:
        f1 = f(t0 + direction * h0, y1)
    except GuardHit:
        return h0 * 1e-3
    d2 = abs(f1 - f0) / scale / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def solve(
    f: Callable[[float, complex], complex],
    t0: float,
    y0: complex,
    t_end: float,
    rtol: float,
    atol: float,
    on_step: Callable[[Segment], bool] | None = None,
    max_steps: int = 1_000_000,
) -> list[Segment]:
    """Integrate from t0 to t_end; returns the accepted segments in order.

    ``on_step`` is called after each accepted step and may return True to
    stop early.  Raises StepUnderflow (carrying the segments so far) when
    the step collapses below floating-point resolution.
    """
    direction = 1.0 if t_end >= t0 else -1.0
    t, y = float(t0), complex(y0)
    k1 = complex(f(t, y))
    h = _initial_step(f, t, y, k1, direction, rtol, atol)
    err_prev = 1.0
    rejected = False
    segments: list[Segment] = []

    for _ in range(max_steps):
        remaining = (t_end - t) * direction
        if remaining <= 0:
            break
        h = min(h, remaining)
        if h < 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepUnderflow(t, y, segments)
        hs = h * direction
        try:
            k2 = f(t + C2 * hs, y + hs * A21 * k1)
            k3 = f(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
            k4 = f(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = f(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = f(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y_new = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = f(t + hs, y_new)
        except GuardHit:
            h *= 0.25
            rejected = True
            continue

        err = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * max(abs(y), abs(y_new))
        err_norm = abs(err) / scale
        if not math.isfinite(err_norm):
            h *= 0.25
            rejected = True
            continue

        if err_norm <= 1.0:
            K = np.array([k1, k2, k3, k4, k5, k6, k7])
            q = tuple(complex(c) for c in K @ P)
            t_new = t_end if h == remaining else t + hs
            seg = Segment(t, t_new - t, y, y_new, q)
            segments.append(seg)
            t, y, k1 = t_new, y_new, k7
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err_norm**-ALPHA * err_prev**BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if rejected:
                factor = min(1.0, factor)
            h *= factor
            err_prev = max(err_norm, 1e-4)
            rejected = False
            if on_step is not None and on_step(seg):
                break
        else:
            h *= max(MIN_FACTOR, SAFETY * err_norm ** -(1 / 5))
            rejected = True
    else:
        raise StepUnderflow(t, y, segments)
    return segments

"""Complex trajectories: integration of dX/dt = v(X, t), closure, crossings
and winding numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np

from . import integrator
from .errors import DomainError, NonConvergence, NotClosed, PoleEncountered, UnsupportedState
from .wavefunction import (
    POLE_EPS,
    OscillatorEigenstate,
    QuantumState,
    as_complex,
    list_nodes,
    stagnation_points,
    velocity,
)

STAGNATION_SPEED = 1e-12
DEFAULT_HORIZON = 50.0
DIRECTION_TOL = 1e-3
# a step collapse this close to a node is reported as running into the pole
NEAR_NODE = 1e-5


@dataclass(frozen=True)
class Trajectory:
    state: QuantumState
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    segments: tuple
    rel_tol: float
    closed: bool = False
    period: float | None = None
    crossings: tuple = ()
    winding: dict = field(default_factory=dict)
    stagnation: bool = False
    terminated_at_pole: bool = False

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def x0(self) -> complex:
        return complex(self.x[0])

    def __len__(self):
        return len(self.t)

    @cached_property
    def _index(self):
        lows = np.array([min(s.t, s.t1) for s in self.segments])
        order = np.argsort(lows, kind="stable")
        return lows[order], order

    def at(self, t):
        """Position at time t from the dense output."""
        if not self.segments:
            return self.x0
        lows, order = self._index
        i = int(np.searchsorted(lows, t, side="right")) - 1
        i = max(0, min(len(order) - 1, i))
        return complex(self.segments[order[i]].at(t))


def cassinian_invariant(x) -> float:
    """|1 - X^2|, the conserved label of n = 1 trajectories."""
    x = as_complex(x)
    return np.abs(1.0 - x * x)


@lru_cache(maxsize=None)
def _centres(state: OscillatorEigenstate):
    s = np.array(stagnation_points(state))
    weights = 1.0 / (s * s - 2.0 * state.energy)
    return s, weights


def orbit_invariant(state: QuantumState, x):
    """Conserved orbit label for oscillator eigenstates.

    Along dX/dt = -i psi'/psi the complex time T(X) = i * int psi/psi' dX
    advances by real t, so Im T is constant.  psi/psi' is rational with
    simple poles at the stagnation points s (residue 1/(s^2 - 2E)), giving

        Phi(X) = sum_s ln|X - s| / (s^2 - 2E).

    For n = 1 this is -ln|1 - X^2| / 2.
    """
    if not isinstance(state, OscillatorEigenstate):
        raise UnsupportedState("orbit invariant only for oscillator eigenstates")
    s, w = _centres(state)
    x = as_complex(x)
    out = 0.0
    for sk, wk in zip(s, w):
        out = out + wk * np.log(np.abs(x - sk))
    return out


def orbit_period(state: OscillatorEigenstate, enclosed_centres) -> float:
    """Period of an orbit that encloses the given stagnation points."""
    s, w = _centres(state)
    return float(sum(-2.0 * math.pi * w[i] for i in enclosed_centres))


# --------------------------------------------------------------------------
# integration


def _refine_root(g, lo, hi, glo, ghi, tol=1e-15, iters=100):
    """Illinois (modified regula falsi) root of g on [lo, hi]."""
    side = 0
    for _ in range(iters):
        mid = (lo * ghi - hi * glo) / (ghi - glo)
        gm = g(mid)
        if abs(gm) <= tol or abs(hi - lo) <= 1e-15 * max(1.0, abs(mid)):
            return mid
        if gm * ghi > 0:
            hi, ghi = mid, gm
            if side == -1:
                glo *= 0.5
            side = -1
        else:
            lo, glo = mid, gm
            if side == 1:
                ghi *= 0.5
            side = 1
    return mid


def _return_time(seg, x0, v0, closure_tol):
    """If seg crosses the section through x0 normal to v0 (from behind) close
    to x0, return the crossing time, else None."""
    g_scale = abs(v0) * max(1.0, abs(x0))

    def g(y):
        return (np.conj(v0) * (y - x0)).real / g_scale

    g0, g1 = g(seg.y0), g(seg.y1)
    if not (g0 < 0.0 <= g1):
        return None
    s = _refine_root(lambda s: g(seg(s)), 0.0, 1.0, g0, g1)
    xs = seg(s)
    if abs(xs - x0) >= closure_tol:
        return None
    return seg.t + s * seg.h, s


def _sample(segments, rel_tol, stop=None):
    """Sample the dense output densely enough that linear interpolation
    between samples stays within ~5 rel_tol."""
    ts, xs = [], []
    for i, seg in enumerate(segments):
        s_end = stop if (stop is not None and i == len(segments) - 1) else 1.0
        y_end = seg(s_end)
        mid_err = abs(seg(0.5 * s_end) - 0.5 * (seg.y0 + y_end))
        target = 5.0 * rel_tol * max(1.0, abs(seg.y0))
        m = int(min(20000, max(1, math.ceil(math.sqrt(mid_err / target)))))
        s = s_end * np.arange(m) / m
        ts.append(seg.t + s * seg.h)
        xs.append(seg(s))
    if segments:
        last = segments[-1]
        s_end = stop if stop is not None else 1.0
        ts.append(np.array([last.t + s_end * last.h]))
        xs.append(np.array([last(s_end)]))
    return np.concatenate(ts), np.concatenate(xs).astype(complex)


def _assemble(state, segments, t0, x0, rel_tol, stop=None, **meta):
    if segments:
        t, x = _sample(segments, rel_tol, stop)
    else:
        t, x = np.array([t0]), np.array([x0], dtype=complex)
    if len(t) > 1 and t[-1] < t[0]:
        t, x = t[::-1].copy(), x[::-1].copy()
    v = np.asarray(-1j * state.log_derivative_raw(x, t), dtype=complex)
    if stop is not None and segments:
        last = segments[-1]
        segments = segments[:-1] + [
            integrator.Segment(last.t, stop * last.h, last.y0, last(stop), _rescale_q(last.q, stop))
        ]
    return Trajectory(state, t, x, v, tuple(segments), rel_tol, **meta)


def _rescale_q(q, s):
    # interpolant restricted to [0, s]: y0 + (s h) * sum q_j s^j u^(j+1)
    return tuple(qj * s**j for j, qj in enumerate(q))


def integrate(
    state: QuantumState,
    x0,
    t0: float = 0.0,
    t_end: float | None = None,
    *,
    until_closure: bool = False,
    rel_tol: float = 1e-9,
    closure_tol: float = 1e-6,
    horizon: float = DEFAULT_HORIZON,
    on_pole: str = "raise",
) -> Trajectory:
    """Integrate the trajectory through x0.

    Either ``t_end`` (may be before t0) or ``until_closure`` must be given.
    With ``until_closure`` the run stops at the first return to x0 and the
    trajectory is reported closed with its period; after ``horizon`` time
    units without return it is reported open.

    ``on_pole="stop"`` returns the path up to a node instead of raising
    PoleEncountered (used for separatrices, which end on nodes).
    """
    x0 = complex(as_complex(x0))
    t0 = float(t0)
    if not (1e-12 <= rel_tol <= 1e-4):
        raise DomainError(f"rel_tol must lie in [1e-12, 1e-4], got {rel_tol}")
    if t_end is None and not until_closure:
        raise DomainError("give t_end or until_closure")
    if on_pole not in ("raise", "stop"):
        raise DomainError(f"on_pole must be 'raise' or 'stop', got {on_pole!r}")
    if until_closure and t_end is None:
        t_end = t0 + horizon

    v0 = complex(velocity(state, x0, t0))
    if abs(v0) < STAGNATION_SPEED:
        t1 = t_end if t_end != t0 else t0 + 1.0
        seg = integrator.Segment(t0, t1 - t0, x0, x0, (0j, 0j, 0j, 0j))
        t = np.array(sorted([t0, t1]))
        return Trajectory(
            state, t, np.full(2, x0), np.zeros(2, complex), (seg,), rel_tol, stagnation=True
        )

    amp = {"max": float(abs(state.psi(x0, t0)))}

    def f(t, y):
        a = float(abs(state.psi(y, t)))
        if not a >= POLE_EPS * amp["max"]:
            raise integrator.GuardHit
        return complex(-1j * state.log_derivative_raw(y, t))

    closure = {}

    def on_step(seg):
        amp["max"] = max(amp["max"], float(abs(state.psi(seg.y1, seg.t1))))
        if until_closure:
            hit = _return_time(seg, x0, v0, closure_tol)
            if hit is not None:
                t_ret, s = hit
                v_ret = complex(-1j * state.log_derivative_raw(seg(s), t_ret))
                if abs(np.angle(v_ret / v0)) < DIRECTION_TOL:
                    closure["t"], closure["s"] = t_ret, s
                    return True
        return False

    try:
        segments = integrator.solve(f, t0, x0, t_end, rel_tol, rel_tol, on_step)
    except integrator.StepUnderflow as exc:
        partial = _assemble(state, exc.segments, t0, x0, rel_tol, terminated_at_pole=True)
        near = float(abs(state.psi(exc.y, exc.t))) < NEAR_NODE * amp["max"]
        if near and on_pole == "stop":
            return partial
        if near:
            raise PoleEncountered(
                f"trajectory from {x0} ran into a node near {exc.y} at t = {exc.t}",
                point=exc.y,
                trajectory=partial,
            ) from None
        raise NonConvergence(
            f"step size underflow at t = {exc.t}, x = {exc.y}", point=exc.y, t=exc.t, trajectory=partial
        ) from None

    if closure:
        traj = _assemble(
            state, segments, t0, x0, rel_tol, stop=closure["s"], closed=True, period=closure["t"] - t0
        )
    else:
        traj = _assemble(state, segments, t0, x0, rel_tol)
    crossings = tuple(real_axis_crossings(traj))
    winding = {}
    if traj.closed and isinstance(state, OscillatorEigenstate):
        winding = winding_numbers(traj, _nodes_near(traj))
    return _replace(traj, crossings=crossings, winding=winding)


def _replace(traj, **changes):
    return replace(traj, **changes)


def _nodes_near(traj):
    xr, xi = traj.x.real, traj.x.imag
    pad = 1.0
    box = (xr.min() - pad, xr.max() + pad, xi.min() - pad, xi.max() + pad)
    return list_nodes(traj.state, box)


def detect_closure(traj: Trajectory, closure_tol: float = 1e-6):
    """Post-hoc closure test on an integrated trajectory.

    Looks for the first return through the section normal to the initial
    velocity, refines the return time on the dense output, and checks the
    position and direction against the start.  Returns (closed, period).
    """
    if traj.closed:
        return True, traj.period
    if traj.stagnation or len(traj.segments) == 0:
        return False, None
    x0, v0 = traj.x0, complex(traj.v[0])
    for seg in traj.segments:
        hit = _return_time(seg, x0, v0, closure_tol)
        if hit is None:
            continue
        t_ret, s = hit
        v_ret = complex(-1j * traj.state.log_derivative_raw(seg(s), t_ret))
        if abs(np.angle(v_ret / v0)) < DIRECTION_TOL:
            return True, t_ret - traj.t0
    return False, None


def real_axis_crossings(traj: Trajectory, tol: float = 1e-10):
    """(t, x_r) for every crossing of Im X = 0, refined by bisection."""
    im = traj.x.imag
    out = []
    n = len(im)
    for i in range(n):
        if im[i] == 0.0:
            out.append((float(traj.t[i]), float(traj.x[i].real)))
            continue
        if i + 1 < n and im[i] * im[i + 1] < 0:
            lo, hi = float(traj.t[i]), float(traj.t[i + 1])
            ilo = im[i]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                xm = traj.at(mid)
                if abs(xm.imag) < tol or hi - lo < 1e-16 * max(1.0, abs(mid)):
                    break
                if (xm.imag < 0) == (ilo < 0):
                    lo, ilo = mid, xm.imag
                else:
                    hi = mid
            out.append((mid, float(xm.real)))
    if traj.closed and traj.period:
        end = traj.t0 + traj.period
        out = [c for c in out if abs(c[0] - end) > 1e-6 * max(1.0, traj.period)]
    # samples landing exactly on the axis are also caught as the edge of a bracket
    dedup = []
    for c in sorted(out):
        if not dedup or abs(c[0] - dedup[-1][0]) > 1e-12 * max(1.0, abs(c[0])):
            dedup.append(c)
    return dedup


def winding_numbers(traj: Trajectory, nodes) -> dict:
    """Signed winding number of a closed trajectory around each node."""
    if not traj.closed:
        raise NotClosed("winding numbers need a closed trajectory")
    out = {}
    for node in nodes:
        d = traj.x - node
        d = np.append(d, d[0])
        total = np.angle(d[1:] / d[:-1]).sum() / (2 * math.pi)
        w = round(total)
        if abs(total - w) > 1e-3:
            raise NonConvergence(f"winding about {node} is not integral ({total})")
        out[complex(node)] = int(w)
    return out

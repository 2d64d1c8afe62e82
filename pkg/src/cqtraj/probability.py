"""Probability densities built from the velocity field.

* ``born_density``: the real-axis density recovered by exponentiating the
  line integral of Im v along the real axis.
* ``rho_conserved``: the extended density transported along a trajectory
  with rate -4 Im(v^2/2 + V); it satisfies the planar continuity equation.
* ``rho_alt``: the same transport without the potential term.  Anchored to
  the Born value where the path crosses the real axis it reproduces
  |psi(X)|^2, which is also available in closed form (``via="direct"``).
* ``density_field`` / ``normalize_and_fraction``: the combined plane density
  (alternative density on orbits that enclose no node, conserved density
  elsewhere) and the share of probability on node-free orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from .errors import (
    DomainError,
    GridTooCoarse,
    NoCrossing,
    NotClosed,
    NotFinite,
    NotNormalizable,
    PoleOnPath,
    QuadratureError,
    UnsupportedState,
)
from .trajectory import Trajectory, cassinian_invariant, integrate, orbit_invariant, winding_numbers
from .wavefunction import (
    GaussianPacket,
    OscillatorEigenstate,
    PhysicalScale,
    QuantumState,
    as_complex,
    list_nodes,
    stagnation_points,
)

NODE_EXCLUSION = 1e-4
GUARD_RADIUS = 1e-6
MIN_CELLS_ACROSS = 50
MAX_FIELD_N = 4
SEPARATRIX_OFFSET = 1e-6

REFERENCE_WIDTH_N1 = 0.4858
REFERENCE_FRACTION_N1 = 0.4325

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
# mapped to [0, 1]
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


class RegionLabel(IntEnum):
    CONSERVED = 0
    ALT = 1
    EXCLUDED = 2


def _require_oscillator(state, what):
    if isinstance(state, OscillatorEigenstate):
        return
    if not state.normalizable:
        raise NotNormalizable(f"{what}: {state.descriptor} is not normalizable")
    raise UnsupportedState(f"{what}: needs a stationary normalizable state, got {state.descriptor}")


def born_value(state: QuantumState, x):
    """|psi(x)|^2 of the normalized state (the Born density on the real axis)."""
    _require_oscillator(state, "born_value")
    return np.abs(state.psi(x)) ** 2


# --------------------------------------------------------------------------
# expectation values


def _observable(state, name, x, t):
    lam = state.log_derivative_raw(x, t)
    v = -1j * lam
    if name == "position":
        return x + 0j
    if name == "momentum":
        return v
    if name == "energy":
        # kinetic + potential + quantum potential (hbar / 2im) dv/dx
        dv = -1j * state.log_derivative_prime(x, t)
        return 0.5 * v * v + state.potential(x) - 0.5j * dv
    raise DomainError(f"unknown observable {name!r}; use position, momentum or energy")


def expectation(state: QuantumState, observable: str, t: float = 0.0) -> float:
    """Average of a trajectory-formulation observable weighted by |psi|^2
    along the real axis.

    Momentum is m * xdot; energy is m xdot^2 / 2 + V + Q with the quantum
    potential Q = (hbar / 2im) d(m xdot)/dx.
    """
    if not state.normalizable:
        raise NotNormalizable(f"{state.descriptor} is not normalizable")
    if isinstance(state, OscillatorEigenstate):
        centre, half = 0.0, math.sqrt(2 * state.n + 1) + 10.0
    elif isinstance(state, GaussianPacket):
        width = state.sigma0 * abs(1 + 1j * t / (2 * state.sigma0**2))
        centre, half = state.centre(t), 14.0 * width
    else:
        raise UnsupportedState(f"no expectation values for {state.descriptor}")
    count = 2 * int(math.ceil(half / 2.5e-3))
    h = 2 * half / count
    x = centre - half + (np.arange(count) + 0.5) * h
    weight = np.abs(state.psi(x, t)) ** 2
    value = np.sum(_observable(state, observable, x, t) * weight) / np.sum(weight)
    if abs(value.imag) > 1e-8:
        raise QuadratureError(f"<{observable}> has imaginary part {value.imag:.3e}")
    return float(value.real)


# --------------------------------------------------------------------------
# Born density from the velocity field


@dataclass(frozen=True)
class BornProfile:
    x: np.ndarray
    values: np.ndarray
    normalization: float

    def integral(self) -> float:
        return float(trapezoid(self.values, self.x))


def exclude_nodes(state: QuantumState, x_grid, half_width: float = NODE_EXCLUSION) -> np.ndarray:
    """Drop grid points that fall within half_width of a real node."""
    x = np.asarray(x_grid, dtype=float)
    nodes = _real_nodes(state, x)
    keep = np.ones(len(x), bool)
    for a in nodes:
        keep &= np.abs(x - a) >= half_width
    return x[keep]


def _real_nodes(state, x):
    lo, hi = float(np.min(x)), float(np.max(x))
    return [z.real for z in list_nodes(state, (lo - 1.0, hi + 1.0, -1.0, 1.0)) if abs(z.imag) < 1e-12]


def born_density(state: QuantumState, x_grid) -> BornProfile:
    """Exponentiated line integral of Im v along the real axis, normalized to
    unit trapezoid integral over the grid.

    The integrand has simple poles at nodes; near a node the -1/(x - a) piece
    is integrated in closed form (it exponentiates to the benign |x - a|^2)
    and the remainder by Gauss-Legendre quadrature.
    """
    _require_oscillator(state, "born_density")
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or len(x) < 2 or np.any(np.diff(x) <= 0):
        raise DomainError("x grid must be one-dimensional, strictly ascending, with at least 2 points")
    nodes = np.array(_real_nodes(state, x))
    for a in nodes:
        if np.any(np.abs(x - a) < NODE_EXCLUSION):
            raise PoleOnPath(f"grid point within {NODE_EXCLUSION} of the node at {a:.12g}")

    lo, hi = x[:-1], x[1:]
    length = hi - lo
    pts = lo[:, None] + length[:, None] * _GL_U[None, :]
    integrand = np.imag(-1j * state.log_derivative_raw(pts + 0j))
    analytic = np.zeros_like(length)
    for a in nodes:
        gap = np.maximum(np.maximum(lo - a, a - hi), 0.0)
        near = gap <= 2.0 * length
        integrand[near] += 1.0 / (pts[near] - a)
        analytic[near] -= np.log(np.abs(hi[near] - a)) - np.log(np.abs(lo[near] - a))
    increments = length * (integrand @ _GL_W) + analytic
    line_integral = np.concatenate([[0.0], np.cumsum(increments)])
    log_p = -2.0 * line_integral
    unnormalized = np.exp(log_p - log_p.max())
    total = float(trapezoid(unnormalized, x))
    return BornProfile(x, unnormalized / total, 1.0 / total * math.exp(-log_p.max()))


# --------------------------------------------------------------------------
# densities along trajectories


def exponent_rate(state: QuantumState, x, t=0.0, include_potential: bool = True):
    """d(ln rho)/dt along a trajectory: -4 Im(v^2/2 + V), or without V."""
    x = as_complex(x)
    v = -1j * state.log_derivative_raw(x, t)
    energy = 0.5 * v * v
    if include_potential:
        energy = energy + state.potential(x)
    return -4.0 * np.imag(energy)


def _segment_table(traj: Trajectory):
    segs = traj.segments
    t = np.array([s.t for s in segs])
    h = np.array([s.h for s in segs])
    y0 = np.array([s.y0 for s in segs])
    q = np.array([s.q for s in segs])
    return t, h, y0, q


def _eval_segments(h, y0, q, s):
    # s has shape (M, K); h, y0, q index rows
    q1, q2, q3, q4 = (q[:, j][:, None] for j in range(4))
    return y0[:, None] + h[:, None] * s * (q1 + s * (q2 + s * (q3 + s * q4)))


def exponent_integral(traj: Trajectory, times, include_potential: bool = True) -> np.ndarray:
    """Integral of the exponent rate from the integration start to each time,
    by Gauss-Legendre quadrature over the dense output."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if traj.stagnation or not traj.segments:
        rate = float(exponent_rate(traj.state, traj.x0, traj.t0, include_potential))
        return rate * (times - traj.t0)
    state = traj.state
    t_seg, h, y0, q = _segment_table(traj)
    full_pts = _eval_segments(h, y0, q, np.broadcast_to(_GL_U, (len(h), len(_GL_U))))
    full_t = t_seg[:, None] + h[:, None] * _GL_U[None, :]
    full = h * (exponent_rate(state, full_pts, full_t, include_potential) @ _GL_W)
    before = np.concatenate([[0.0], np.cumsum(full)])

    lows = np.minimum(t_seg, t_seg + h)
    order = np.argsort(lows, kind="stable")
    idx = np.searchsorted(lows[order], times, side="right") - 1
    idx = order[np.clip(idx, 0, len(order) - 1)]
    frac = (times - t_seg[idx]) / h[idx]
    sub = frac[:, None] * _GL_U[None, :]
    pts = _eval_segments(h[idx], y0[idx], q[idx], sub)
    pts_t = t_seg[idx][:, None] + h[idx][:, None] * sub
    partial = h[idx] * frac * (exponent_rate(state, pts, pts_t, include_potential) @ _GL_W)
    return before[idx] + partial


@dataclass(frozen=True)
class DensityTrace:
    t: np.ndarray
    x: np.ndarray
    rho: np.ndarray
    anchor_t: float
    anchor_x: complex
    anchor_rho: float


def _anchor_time(traj: Trajectory, x_anchor: complex) -> float:
    i = int(np.argmin(np.abs(traj.x - x_anchor)))
    if abs(traj.x[i] - x_anchor) > 1e-6 * max(1.0, abs(x_anchor)):
        raise DomainError(f"anchor {x_anchor} is not on the trajectory")
    t = float(traj.t[i])
    for _ in range(8):
        xt = traj.at(t)
        vt = complex(-1j * traj.state.log_derivative_raw(xt, t))
        if vt == 0:
            break
        dt = (np.conj(vt) * (xt - x_anchor)).real / abs(vt) ** 2
        t -= dt
        if abs(dt) < 1e-16 * max(1.0, abs(t)):
            break
    return t


def _default_anchor(traj: Trajectory):
    if not traj.crossings:
        raise NoCrossing("trajectory never crosses the real axis; give an explicit anchor")
    t_c, x_c = traj.crossings[0]
    return t_c, complex(x_c), float(born_value(traj.state, x_c))


def _transport(traj, anchor, include_potential):
    if anchor is None:
        t_a, x_a, rho_a = _default_anchor(traj)
    else:
        x_a, rho_a = complex(as_complex(anchor[0])), float(anchor[1])
        t_a = traj.t0 if x_a == traj.x0 else _anchor_time(traj, x_a)
    i_samples = exponent_integral(traj, traj.t, include_potential)
    i_anchor = 0.0 if t_a == traj.t0 else float(exponent_integral(traj, [t_a], include_potential)[0])
    rho = rho_a * np.exp(i_samples - i_anchor)
    return DensityTrace(traj.t, traj.x, rho, t_a, x_a, rho_a)


def rho_conserved(state: QuantumState, traj: Trajectory, anchor=None) -> DensityTrace:
    """Conserved extended density at every sample of ``traj``.

    ``anchor`` is ``(x_anchor, rho_anchor)`` with x_anchor on the path; by
    default the first real-axis crossing with its Born value.
    """
    if traj.state != state:
        raise DomainError("trajectory belongs to a different state")
    return _transport(traj, anchor, include_potential=True)


def conserved_oracle(state: QuantumState, x, anchor_x, anchor_rho):
    """C / |v(x)|^2 with C fixed by rho(anchor_x) = anchor_rho.

    For stationary states d ln|v|^2/dt = 2 Re v', which cancels the
    transport rate, so the conserved density is C/|v|^2 on each orbit.
    """
    v = -1j * state.log_derivative_raw(as_complex(x))
    va = complex(-1j * state.log_derivative_raw(complex(as_complex(anchor_x))))
    return anchor_rho * abs(va) ** 2 / np.abs(v) ** 2


def rho_alt(state: QuantumState, x, via: str = "direct", rel_tol: float = 1e-10) -> float:
    """Alternative (non-conserved) extended density at x.

    ``direct`` returns |psi(x)|^2; ``trajectory_integral`` transports the
    Born value from the path's first real-axis crossing to x.
    """
    _require_oscillator(state, "rho_alt")
    x = complex(as_complex(x))
    if via == "direct":
        return float(abs(state.psi(x)) ** 2)
    if via != "trajectory_integral":
        raise DomainError(f"via must be 'direct' or 'trajectory_integral', got {via!r}")
    if x.imag == 0.0:
        return float(born_value(state, x.real))
    traj = integrate(state, x, until_closure=True, rel_tol=rel_tol)
    ahead = [c for c in traj.crossings if c[0] > traj.t0]
    if not ahead:
        raise NoCrossing(f"trajectory through {x} never reaches the real axis")
    t_c, x_c = ahead[0]
    exponent = float(exponent_integral(traj, [t_c], include_potential=False)[0])
    return float(born_value(state, x_c)) * math.exp(-exponent)


# --------------------------------------------------------------------------
# regions


def _near_special(state, x, radius):
    special = [complex(a) for a in list_nodes(state, (-50, 50, -50, 50))] + [complex(s) for s in stagnation_points(state)]
    return any(abs(x - p) < radius for p in special)


def classify_region(state: QuantumState, x, rel_tol: float = 1e-9) -> RegionLabel:
    """Label the orbit through x by whether it winds around any node.

    ALT: the closed orbit encloses no node (the conserved density cannot match
    the Born density at all its crossings).  CONSERVED: it winds around at
    least one node, or the state has no nodes at all.
    """
    x = complex(as_complex(x))
    oscillator = isinstance(state, OscillatorEigenstate)
    if oscillator and _near_special(state, x, GUARD_RADIUS):
        return RegionLabel.EXCLUDED
    traj = integrate(state, x, until_closure=True, rel_tol=rel_tol)
    if not traj.closed:
        raise NotClosed(f"trajectory through {x} did not close for {state.descriptor}")
    nodes = list_nodes(state, (-50, 50, -50, 50)) if oscillator else []
    if not nodes:
        return RegionLabel.CONSERVED
    winding = winding_numbers(traj, nodes)
    return RegionLabel.ALT if all(w == 0 for w in winding.values()) else RegionLabel.CONSERVED


# --------------------------------------------------------------------------
# grids and the combined density


@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    n_re: int
    im_min: float
    im_max: float
    n_im: int

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise DomainError("grid bounds must satisfy min < max")
        if self.n_re < 1 or self.n_im < 1:
            raise DomainError("grid needs at least one cell per axis")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """``"re_min:re_max:cells,im_min:im_max:cells"``."""
        try:
            re_part, im_part = text.split(",")
            a, b, n = re_part.split(":")
            c, d, m = im_part.split(":")
            return cls(float(a), float(b), int(n), float(c), float(d), int(m))
        except ValueError:
            raise DomainError(f"bad grid spec {text!r}; expected min:max:cells,min:max:cells") from None

    def __str__(self):
        return f"{self.re_min:g}:{self.re_max:g}:{self.n_re},{self.im_min:g}:{self.im_max:g}:{self.n_im}"

    @property
    def d_re(self):
        return (self.re_max - self.re_min) / self.n_re

    @property
    def d_im(self):
        return (self.im_max - self.im_min) / self.n_im

    @property
    def cell_area(self):
        return self.d_re * self.d_im

    def centres(self):
        xr = self.re_min + (np.arange(self.n_re) + 0.5) * self.d_re
        xi = self.im_min + (np.arange(self.n_im) + 0.5) * self.d_im
        return xr, xi

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.re_min, self.re_max, self.n_re * factor, self.im_min, self.im_max, self.n_im * factor)


@dataclass
class DensityField:
    grid: GridSpec
    state: QuantumState
    values: np.ndarray  # shape (n_re, n_im)
    labels: np.ndarray  # RegionLabel codes, same shape
    normalization: float | None = None
    fraction_inside: float | None = None
    meta: dict = field(default_factory=dict)


def _sweep_labels(state, X):
    """Node-enclosure labels and anchor centres by a descending-level sweep.

    Orbits are level curves of the invariant Phi.  The region enclosed by the
    orbit through X is the component of {Phi >= Phi(X)} containing X; a
    union-find over cells taken in decreasing Phi tracks, for every cell,
    whether that component already holds a node and which stagnation point
    is its rightmost one.
    """
    nr, ni = X.shape
    phi = orbit_invariant(state, X).ravel()
    count = nr * ni
    nodes = [a.real for a in list_nodes(state, (-50, 50, -1, 1))]
    centres = stagnation_points(state)
    node_level = [float(orbit_invariant(state, complex(a))) for a in nodes]
    levels = np.concatenate([phi, node_level])
    total = count + len(nodes)

    xr = X[:, 0].real
    xi = X[0, :].imag
    dr = xr[1] - xr[0] if nr > 1 else 1.0
    di = xi[1] - xi[0] if ni > 1 else 1.0
    reach = 0.75 * math.hypot(dr, di)

    def cells_near(p):
        i_hi = np.searchsorted(xr, p + reach)
        i_lo = np.searchsorted(xr, p - reach)
        j_hi = np.searchsorted(xi, reach)
        j_lo = np.searchsorted(xi, -reach)
        return [i * ni + j for i in range(i_lo, i_hi) for j in range(j_lo, j_hi) if abs(complex(xr[i] - p, xi[j])) <= reach]

    node_adj = {}
    for k, a in enumerate(nodes):
        for c in cells_near(a):
            node_adj.setdefault(c, []).append(count + k)
    node_cells = {count + k: cells_near(a) for k, a in enumerate(nodes)}

    right = [-1] * total
    for k, s in enumerate(centres):
        i = int(np.clip(np.searchsorted(xr, s), 0, nr - 1))
        for ii in (i - 1, i):
            if 0 <= ii < nr:
                j = int(np.clip(np.searchsorted(xi, 0.0), 0, ni - 1))
                for jj in (j - 1, j):
                    if 0 <= jj < ni:
                        right[ii * ni + jj] = max(right[ii * ni + jj], k)
    has_node = [False] * count + [True] * len(nodes)
    parent = list(range(total))
    added = bytearray(total)
    label_node = np.zeros(count, bool)
    label_right = np.full(count, -1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    order = np.argsort(-levels, kind="stable")
    for idx in order.tolist():
        added[idx] = 1
        if idx < count:
            i, j = divmod(idx, ni)
            nbrs = []
            if i > 0:
                nbrs.append(idx - ni)
            if i < nr - 1:
                nbrs.append(idx + ni)
            if j > 0:
                nbrs.append(idx - 1)
            if j < ni - 1:
                nbrs.append(idx + 1)
            nbrs.extend(node_adj.get(idx, ()))
        else:
            nbrs = node_cells[idx]
        root = find(idx)
        for nb in nbrs:
            if added[nb]:
                other = find(nb)
                if other != root:
                    parent[other] = root
                    has_node[root] = has_node[root] or has_node[other]
                    right[root] = max(right[root], right[other])
        if idx < count:
            label_node[idx] = has_node[root]
            label_right[idx] = right[root]
    return phi.reshape(nr, ni), label_node.reshape(nr, ni), label_right.reshape(nr, ni), nodes, centres


def _right_crossing(state, level, lo, hi, iters=80):
    """Solve Phi(x) = level on (lo, hi), where Phi decreases from +inf."""
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = orbit_invariant(state, mid + 0j) > level
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def density_field(state: QuantumState, grid: GridSpec) -> DensityField:
    """Unnormalized combined density on the cell centres of ``grid``.

    ALT cells take |psi|^2; CONSERVED cells take the conserved density of
    their orbit, C/|v|^2 with C fixed by the Born value at the orbit's
    rightmost real crossing; EXCLUDED cells (centre within the guard radius
    of a node or stagnation point) hold NaN.
    """
    if not isinstance(state, OscillatorEigenstate):
        raise UnsupportedState(f"density fields need an oscillator eigenstate, got {state.descriptor}")
    if state.n > MAX_FIELD_N:
        raise UnsupportedState(f"density fields support n <= {MAX_FIELD_N}")
    if state.n >= 1:
        width = 2.0 * lemniscate_width(state.n)
        if width / grid.d_im < MIN_CELLS_ACROSS:
            raise GridTooCoarse(
                f"{width / grid.d_im:.1f} cells across the separatrix width {width:.4f}; need {MIN_CELLS_ACROSS}"
            )
    xr, xi = grid.centres()
    X = xr[:, None] + 1j * xi[None, :]
    n = state.n

    if n == 0:
        alt = np.zeros(X.shape, bool)
        x_cross = np.abs(X)
    elif n == 1:
        b = cassinian_invariant(X)
        alt = b < 1.0 + 1e-12
        x_cross = np.sqrt(1.0 + b)
    else:
        phi, has_node, right, nodes, centres = _sweep_labels(state, X)
        alt = ~has_node
        centres = np.asarray(centres)
        nodes_arr = np.asarray(sorted(nodes))
        fallback = np.searchsorted(centres, X.real) - 1
        right = np.where(right < 0, np.clip(fallback, 0, len(centres) - 1), right)
        s = centres[right]
        nxt = np.searchsorted(nodes_arr, s)
        upper = np.where(nxt < len(nodes_arr), nodes_arr[np.minimum(nxt, len(nodes_arr) - 1)], s + 50.0)
        x_cross = np.where(alt, np.nan, 0.0)
        sel = ~alt
        x_cross[sel] = _right_crossing(state, phi[sel], s[sel], upper[sel])

    labels = np.where(alt, RegionLabel.ALT, RegionLabel.CONSERVED).astype(np.int8)
    values = np.empty(X.shape)
    values[alt] = np.abs(state.psi(X[alt])) ** 2
    cons = ~alt
    xc = x_cross[cons] + 0j
    v_cross = np.abs(state.log_derivative_raw(xc)) ** 2
    v_here = np.abs(state.log_derivative_raw(X[cons])) ** 2
    values[cons] = np.abs(state.psi(xc)) ** 2 * v_cross / v_here

    special = [complex(a) for a in list_nodes(state, (-50, 50, -50, 50))] + [complex(p) for p in stagnation_points(state)]
    for p in special:
        near = np.abs(X - p) < GUARD_RADIUS
        labels[near] = RegionLabel.EXCLUDED
        values[near] = np.nan
    return DensityField(grid, state, values, labels)


def normalize_and_fraction(fld: DensityField) -> tuple[float, float]:
    """Normalize the field in place and return (normalization, fraction on ALT cells)."""
    g = fld.grid
    if g.re_max - g.re_min < 6.0 or g.im_max - g.im_min < 3.0:
        raise GridTooCoarse("grid must span at least 6 units in x_r and 3 in x_i")
    included = fld.labels != RegionLabel.EXCLUDED
    vals = fld.values[included]
    if not np.all(np.isfinite(vals)):
        raise NotFinite("density field has non-finite values on included cells")
    cell_sum = float(np.sum(vals))
    norm = cell_sum * g.cell_area
    inside = float(np.sum(fld.values[fld.labels == RegionLabel.ALT]))
    fld.values = fld.values / norm
    fld.normalization = norm
    fld.fraction_inside = inside / cell_sum
    return norm, fld.fraction_inside


# --------------------------------------------------------------------------
# separatrix width and physical scale


@lru_cache(maxsize=None)
def _width(n: int, lower: bool) -> float:
    sign = -1.0 if lower else 1.0
    if n == 1:
        # lemniscate r^2 = 2 cos 2theta, Im X = r sin theta
        res = minimize_scalar(
            lambda th: -sign * math.sqrt(max(0.0, 2.0 * math.cos(2.0 * th))) * math.sin(th),
            bounds=(-math.pi / 4, math.pi / 4),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return float(-res.fun * sign)
    state = OscillatorEigenstate(n)
    best = 0.0
    for a in list_nodes(state, (0.0, 50.0, -1.0, 1.0)):
        traj = integrate(state, a + sign * SEPARATRIX_OFFSET * 1j, t_end=2 * math.pi, rel_tol=1e-10, on_pole="stop")
        extreme = traj.x.imag.min() if lower else traj.x.imag.max()
        best = min(best, extreme) if lower else max(best, extreme)
    return float(best)


def lemniscate_width(n: int, lower: bool = False) -> float:
    """Largest Im X reached on the separatrix of oscillator level n (smallest if ``lower``)."""
    if isinstance(n, OscillatorEigenstate):
        n = n.n
    if n < 1:
        raise DomainError("the ground state has no separatrix")
    return _width(int(n), bool(lower))


def classical_width(scale: PhysicalScale, x_i_max: float) -> float:
    """Dimensionless imaginary extent converted to metres."""
    return x_i_max * scale.length_unit

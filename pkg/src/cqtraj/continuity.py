"""Conservation structure of the complex flow.

The extended-plane continuity equation is taken as

    d rho/dt + d(rho v_r)/dx_r + d(rho v_i)/dx_i = 0,

whose characteristics are the integral curves of (Re v, Im v).  For an
analytic field the planar divergence is 2 Re v'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NonConvergence, PoleEncountered, UnsupportedState
from .probability import exponent_rate
from .trajectory import Trajectory, integrate
from .wavefunction import FreeParticle, OscillatorEigenstate, QuantumState, as_complex, velocity_derivative

FD_STEP = 1e-5
TRACER_TOL = 1e-12


def divergence(state: QuantumState, x):
    """2 Re v'(x), the planar divergence of (Re v, Im v)."""
    return 2.0 * np.real(velocity_derivative(state, x))


# --------------------------------------------------------------------------
# real two-dimensional field


def _mul(a, b, c, d):
    return a * c - b * d, a * d + b * c


def planar_field(state: QuantumState, xr, xi):
    """(Re v, Im v) at (xr, xi) using only real arithmetic.

    Kept separate from the complex evaluation path so that the characteristics
    tracer is an independent check on the complex integrator.
    """
    xr = np.asarray(xr, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if isinstance(state, FreeParticle):
        return np.full_like(xr, state.k), np.zeros_like(xi)
    if not isinstance(state, OscillatorEigenstate):
        raise UnsupportedState(f"planar field not available for {state.descriptor}")
    n = state.n
    # monic Hermite recurrence on (re, im) pairs
    pr, pi = np.zeros_like(xr), np.zeros_like(xr)  # h_{k-1}
    hr, hi = np.ones_like(xr), np.zeros_like(xr)  # h_k
    for k in range(n):
        ar, ai = _mul(xr, xi, hr, hi)
        pr, pi, hr, hi = hr, hi, ar - 0.5 * k * pr, ai - 0.5 * k * pi
    # psi'/psi = n h_{n-1} / h_n - X
    den = hr * hr + hi * hi
    num_r, num_i = _mul(n * pr, n * pi, hr, -hi)
    lr = num_r / den - xr
    li = num_i / den - xi
    # v = -i L
    return li, -lr


def fd_divergence(state: QuantumState, x, step: float = FD_STEP):
    """Central-difference divergence of the planar field."""
    z = complex(as_complex(x))
    vr_p, _ = planar_field(state, z.real + step, z.imag)
    vr_m, _ = planar_field(state, z.real - step, z.imag)
    _, vi_p = planar_field(state, z.real, z.imag + step)
    _, vi_m = planar_field(state, z.real, z.imag - step)
    return float((vr_p - vr_m + vi_p - vi_m) / (2.0 * step))


# --------------------------------------------------------------------------
# residuals


@dataclass(frozen=True)
class ResidualReport:
    state: str
    density: str
    t: np.ndarray
    x: np.ndarray
    residual: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.residual**2)))

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "density": self.density,
            "max_abs": self.max_abs,
            "rms": self.rms,
            "t": self.t.tolist(),
            "x_re": self.x.real.tolist(),
            "x_im": self.x.imag.tolist(),
            "residual": self.residual.tolist(),
        }


def continuity_residual(state: QuantumState, traj: Trajectory, density: str = "eq3") -> ResidualReport:
    """d(ln rho)/dt + div v at every sample of ``traj``.

    eq3: the conserved density, whose log-rate is -4 Im(v^2/2 + V).
    eq4: the alternative density |psi|^2, whose log-rate is 2 Re(v psi'/psi).
    """
    if not state.stationary:
        raise UnsupportedState("continuity residuals need a stationary state")
    x, t = traj.x, traj.t
    if density == "eq3":
        rate = exponent_rate(state, x, t, include_potential=True)
    elif density == "eq4":
        lam = state.log_derivative_raw(x, t)
        rate = 2.0 * np.real(lam * (-1j * lam))
    else:
        raise DomainError(f"density must be 'eq3' or 'eq4', got {density!r}")
    div = 2.0 * np.real(-1j * state.log_derivative_prime(x, t))
    return ResidualReport(state.descriptor, density, t, x, np.asarray(rate + div, dtype=float))


# --------------------------------------------------------------------------
# characteristics


def trace_characteristic(state: QuantumState, x0, t_eval):
    """Integral curve of the planar field through x0, sampled at t_eval.

    scipy's DOP853 on the real pair (x_r, x_i).
    """
    z0 = complex(as_complex(x0))
    t_eval = np.asarray(t_eval, dtype=float)

    def rhs(_t, y):
        vr, vi = planar_field(state, y[0], y[1])
        return [float(vr), float(vi)]

    sol = solve_ivp(
        rhs,
        (float(t_eval[0]), float(t_eval[-1])),
        [z0.real, z0.imag],
        method="DOP853",
        rtol=TRACER_TOL,
        atol=TRACER_TOL,
        dense_output=True,
    )
    if sol.status != 0:
        raise PoleEncountered(f"characteristic from {z0} failed: {sol.message}", point=z0)
    y = sol.sol(t_eval)
    return y[0] + 1j * y[1]


def characteristics_match(state: QuantumState, x0, duration: float | None = None, rel_tol: float = 1e-9) -> float:
    """Largest distance between the complex trajectory and the independently
    traced characteristic through x0 over ``duration`` (one period if None)."""
    if not state.stationary:
        raise UnsupportedState("characteristics are compared for stationary states")
    if duration is None:
        traj = integrate(state, x0, until_closure=True, rel_tol=rel_tol)
        if traj.stagnation:
            return 0.0
        if not traj.closed:
            raise NonConvergence(f"trajectory from {x0} did not close; give a duration")
    else:
        if not (math.isfinite(duration) and duration > 0):
            raise DomainError("duration must be positive")
        traj = integrate(state, x0, t_end=duration, rel_tol=rel_tol)
        if traj.stagnation:
            return 0.0
    traced = trace_characteristic(state, x0, traj.t)
    return float(np.max(np.abs(traced - traj.x)))

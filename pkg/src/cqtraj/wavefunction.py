"""Closed-form wavefunctions continued to complex position.

Everything is in dimensionless oscillator units (hbar = m = omega = 1,
X = alpha * x).  Functions accept Python complex scalars, ComplexPoint or
numpy arrays and broadcast over arrays.

The velocity field of a complex trajectory is

    v(X) = -i * psi'(X) / psi(X),

so nodes of psi are poles of v and zeros of psi' are stagnation points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import constants
from scipy.optimize import brentq

from .errors import DomainError, PoleEncountered, UnsupportedState

#: Pole guard, relative to the local amplitude scale of the state.
POLE_EPS = 1e-10

HBAR_SI = constants.hbar
ELECTRON_MASS_SI = constants.m_e

MAX_OSCILLATOR_N = 10


@dataclass(frozen=True)
class ComplexPoint:
    """A position in the complex plane, in units of 1/alpha."""

    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError(f"non-finite ComplexPoint ({self.re}, {self.im})")

    def __complex__(self):
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, z) -> "ComplexPoint":
        z = complex(z)
        return cls(z.real, z.imag)

    @classmethod
    def parse(cls, text: str) -> "ComplexPoint":
        """Parse ``"1+0i"``, ``"-0.5-0.2i"``, ``"2"`` or ``"0.3i"``."""
        s = text.strip().replace(" ", "").replace("i", "j")
        try:
            return cls.from_complex(complex(s))
        except ValueError:
            raise DomainError(f"cannot parse complex point {text!r}") from None

    def __str__(self):
        return f"{self.re:.17g}{self.im:+.17g}i"


Point = Union[complex, float, ComplexPoint, np.ndarray]


def as_complex(x: Point):
    if isinstance(x, ComplexPoint):
        return complex(x)
    if isinstance(x, np.ndarray):
        return x.astype(complex, copy=False)
    return complex(x)


@dataclass(frozen=True)
class PhysicalScale:
    """Mass (kg), angular frequency (rad/s) and hbar (J s)."""

    mass: float
    omega0: float
    hbar: float = HBAR_SI

    def __post_init__(self):
        for name in ("mass", "omega0", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")

    @property
    def alpha(self) -> float:
        """Inverse length scale sqrt(m omega / hbar), in 1/m."""
        return math.sqrt(self.mass * self.omega0 / self.hbar)

    @property
    def length_unit(self) -> float:
        return 1.0 / self.alpha

    @classmethod
    def electron(cls, omega0: float = 1.0) -> "PhysicalScale":
        return cls(ELECTRON_MASS_SI, omega0)


# --------------------------------------------------------------------------
# States


class QuantumState:
    """Base for the closed-form state variants.

    Subclasses implement ``psi``, ``log_derivative_raw`` (psi'/psi with no
    pole guard), ``log_derivative_prime`` (d/dX of psi'/psi), ``potential``
    and ``node_measure`` (a dimensionless amplitude that vanishes at nodes).
    """

    stationary = False
    normalizable = False
    normalized = True

    def psi(self, x, t=0.0):
        raise NotImplementedError

    def log_derivative_raw(self, x, t=0.0):
        raise NotImplementedError

    def log_derivative_prime(self, x, t=0.0):
        raise NotImplementedError

    def potential(self, x):
        raise NotImplementedError

    def node_measure(self, x, t=0.0):
        return np.abs(self.psi(x, t))

    @property
    def descriptor(self) -> str:
        raise NotImplementedError


def _monic_hermite(x, n):
    """Return (h_n, h_{n-1}, h_{n-2}) of the monic Hermite family.

    h_0 = 1, h_1 = X, h_{k+1} = X h_k - (k/2) h_{k-1}; h_k = H_k / 2^k.
    Entries for negative order are zero.
    """
    zero = x * 0
    h_km2, h_km1, h_k = zero, zero, zero + 1.0
    for k in range(n):
        h_km2, h_km1, h_k = h_km1, h_k, x * h_k - 0.5 * k * h_km1
    return h_k, h_km1, h_km2


@dataclass(frozen=True)
class OscillatorEigenstate(QuantumState):
    n: int
    normalized: bool = True

    stationary = True
    normalizable = True

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise DomainError(f"oscillator level must be a non-negative integer, got {self.n!r}")
        if self.n > MAX_OSCILLATOR_N:
            raise DomainError(f"oscillator level {self.n} exceeds supported maximum {MAX_OSCILLATOR_N}")

    @property
    def energy(self) -> float:
        return self.n + 0.5

    @property
    def amplitude(self) -> float:
        # psi_n = sqrt(2^n / (n! sqrt(pi))) h_n(X) exp(-X^2/2)
        if not self.normalized:
            return 1.0
        return math.sqrt(2.0**self.n / (math.factorial(self.n) * math.sqrt(math.pi)))

    def psi(self, x, t=0.0):
        x = as_complex(x)
        h, _, _ = _monic_hermite(x, self.n)
        return self.amplitude * h * np.exp(-0.5 * x * x - 1j * self.energy * t)

    def log_derivative_raw(self, x, t=0.0):
        x = as_complex(x)
        h, h1, _ = _monic_hermite(x, self.n)
        return self.n * h1 / h - x

    def log_derivative_prime(self, x, t=0.0):
        x = as_complex(x)
        n = self.n
        h, h1, h2 = _monic_hermite(x, n)
        return n * ((n - 1) * h2 * h - n * h1 * h1) / (h * h) - 1.0

    def potential(self, x):
        x = as_complex(x)
        return 0.5 * x * x

    def node_measure(self, x, t=0.0):
        x = as_complex(x)
        h, _, _ = _monic_hermite(x, self.n)
        return np.abs(h) / np.maximum(1.0, np.abs(x)) ** self.n

    @property
    def descriptor(self):
        return f"sho:{self.n}"


@dataclass(frozen=True)
class FreeParticle(QuantumState):
    k: float

    stationary = True
    normalizable = False
    normalized = False

    def __post_init__(self):
        if not math.isfinite(self.k):
            raise DomainError("wavenumber must be finite")

    @property
    def energy(self) -> float:
        return 0.5 * self.k**2

    def psi(self, x, t=0.0):
        x = as_complex(x)
        return np.exp(1j * self.k * x - 1j * self.energy * t)

    def log_derivative_raw(self, x, t=0.0):
        x = as_complex(x)
        return x * 0 + 1j * self.k

    def log_derivative_prime(self, x, t=0.0):
        x = as_complex(x)
        return x * 0 + 0j

    def potential(self, x):
        return as_complex(x) * 0

    def node_measure(self, x, t=0.0):
        return np.abs(as_complex(x) * 0) + 1.0

    @property
    def descriptor(self):
        return f"free:{self.k:.17g}"


@dataclass(frozen=True)
class GaussianPacket(QuantumState):
    """Free Gaussian packet: centre x0, mean wavenumber k0, initial width sigma0."""

    x0: float
    k0: float
    sigma0: float

    stationary = False
    normalizable = True

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x0, self.k0, self.sigma0)):
            raise DomainError("packet parameters must be finite")
        if self.sigma0 <= 0:
            raise DomainError(f"sigma0 must be positive, got {self.sigma0}")

    def _spread(self, t):
        return 1.0 + 1j * t / (2.0 * self.sigma0**2)

    def centre(self, t=0.0) -> float:
        return self.x0 + self.k0 * t

    def psi(self, x, t=0.0):
        x = as_complex(x)
        a = self._spread(t)
        s2 = self.sigma0**2
        d = x - self.x0 - self.k0 * t
        norm = (2.0 * math.pi * s2) ** -0.25 / np.sqrt(a)
        return norm * np.exp(-d * d / (4.0 * s2 * a) + 1j * self.k0 * (x - self.x0) - 0.5j * self.k0**2 * t)

    def log_derivative_raw(self, x, t=0.0):
        x = as_complex(x)
        a = self._spread(t)
        return -(x - self.x0 - self.k0 * t) / (2.0 * self.sigma0**2 * a) + 1j * self.k0

    def log_derivative_prime(self, x, t=0.0):
        x = as_complex(x)
        return x * 0 - 1.0 / (2.0 * self.sigma0**2 * self._spread(t))

    def potential(self, x):
        return as_complex(x) * 0

    def node_measure(self, x, t=0.0):
        return np.abs(as_complex(x) * 0) + 1.0

    @property
    def descriptor(self):
        return f"packet:{self.x0:.17g},{self.k0:.17g},{self.sigma0:.17g}"


@dataclass(frozen=True)
class PotentialStep(QuantumState):
    """Scattering state on a step of height V0 at x = 0, incident from the left.

    Re(X) <= 0 uses the incident+reflected branch, Re(X) > 0 the transmitted
    (or evanescent) branch; each half is continued separately.
    """

    E: float
    V0: float

    stationary = True
    normalizable = False
    normalized = False

    def __post_init__(self):
        if not (math.isfinite(self.E) and math.isfinite(self.V0)):
            raise DomainError("step parameters must be finite")
        if self.E <= 0:
            raise DomainError(f"step energy must be positive, got {self.E}")

    @property
    def energy(self):
        return self.E

    @property
    def k(self):
        return math.sqrt(2.0 * self.E)

    @property
    def q(self) -> complex:
        # right branch is T exp(q X)
        if self.E >= self.V0:
            return 1j * math.sqrt(2.0 * (self.E - self.V0))
        return complex(-math.sqrt(2.0 * (self.V0 - self.E)))

    @property
    def reflection(self) -> complex:
        ik = 1j * self.k
        return (ik - self.q) / (ik + self.q)

    @property
    def transmission(self) -> complex:
        return 1.0 + self.reflection

    def _branches(self, x):
        x = as_complex(x)
        ik = 1j * self.k
        left = np.exp(ik * x) + self.reflection * np.exp(-ik * x)
        left_d = ik * (np.exp(ik * x) - self.reflection * np.exp(-ik * x))
        right = self.transmission * np.exp(self.q * x)
        return x, left, left_d, right

    def psi(self, x, t=0.0):
        x, left, _, right = self._branches(x)
        return np.where(np.real(x) <= 0, left, right) * np.exp(-1j * self.E * t)

    def log_derivative_raw(self, x, t=0.0):
        x, left, left_d, _ = self._branches(x)
        return np.where(np.real(x) <= 0, left_d / left, self.q)

    def log_derivative_prime(self, x, t=0.0):
        x = as_complex(x)
        lam = self.log_derivative_raw(x, t)
        # psi''/psi = -k^2 on the left, q^2 on the right
        return np.where(np.real(x) <= 0, -(self.k**2) - lam * lam, 0j * x)

    def potential(self, x):
        x = as_complex(x)
        return np.where(np.real(x) <= 0, 0j * x, self.V0 + 0j * x)

    def node_measure(self, x, t=0.0):
        x, left, _, right = self._branches(x)
        return np.where(np.real(x) <= 0, np.abs(left) / (1.0 + abs(self.reflection)), 1.0)

    @property
    def descriptor(self):
        return f"step:{self.E:.17g},{self.V0:.17g}"


def parse_state(text: str) -> QuantumState:
    """Build a state from a descriptor such as ``sho:1``, ``free:1``,
    ``packet:0,2,1`` or ``step:1,0.5``."""
    kind, _, args = text.strip().partition(":")
    try:
        values = [float(a) for a in args.split(",")] if args else []
    except ValueError:
        raise DomainError(f"bad state parameters in {text!r}") from None
    kind = kind.lower()
    if kind == "sho" and len(values) == 1 and values[0] == int(values[0]):
        return OscillatorEigenstate(int(values[0]))
    if kind == "free" and len(values) == 1:
        return FreeParticle(values[0])
    if kind == "packet" and len(values) == 3:
        return GaussianPacket(*values)
    if kind == "step" and len(values) == 2:
        return PotentialStep(*values)
    raise DomainError(f"unrecognised state descriptor {text!r}")


# --------------------------------------------------------------------------
# Operations


def eval_psi(state: QuantumState, x: Point, t: float = 0.0):
    return state.psi(x, t)


def _check_pole(state, x, t, scale):
    measure = state.node_measure(x, t) if scale is None else np.abs(state.psi(x, t)) / scale
    hit = np.asarray(measure < POLE_EPS)
    if hit.any():
        where = np.asarray(x).ravel()[np.flatnonzero(hit.ravel())[0]] if np.ndim(x) else x
        raise PoleEncountered(f"wavefunction node at x = {complex(where)}", point=complex(where))


def log_derivative(state: QuantumState, x: Point, t: float = 0.0, scale: float | None = None):
    """psi'/psi from closed-form derivatives.

    Raises PoleEncountered when the amplitude falls below ``POLE_EPS`` times
    ``scale`` (or, with no scale, the state's own envelope).
    """
    x = as_complex(x)
    _check_pole(state, x, t, scale)
    return state.log_derivative_raw(x, t)


def velocity(state: QuantumState, x: Point, t: float = 0.0, scale: float | None = None):
    return -1j * log_derivative(state, x, t, scale)


def velocity_derivative(state: QuantumState, x: Point, t: float = 0.0):
    """dv/dX, from the closed-form derivative of psi'/psi."""
    x = as_complex(x)
    _check_pole(state, x, t, None)
    return -1j * state.log_derivative_prime(x, t)


def potential(state: QuantumState, x: Point):
    return state.potential(as_complex(x))


def _real_roots(f, lo, hi, step=1e-2):
    grid = np.arange(lo, hi + step, step)
    vals = f(grid)
    roots = [float(g) for g, v in zip(grid, vals) if v == 0.0]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            roots.append(brentq(lambda s: float(f(np.array([s]))[0]), a, b, xtol=1e-15, rtol=1e-15))
    return sorted(roots)


def _polish(f, df, z, iters=3):
    for _ in range(iters):
        dz = f(z) / df(z)
        if dz == 0:
            break
        z = z - dz
    return z


def list_nodes(state: QuantumState, box=(-3.0, 3.0, -3.0, 3.0), t: float = 0.0) -> list[complex]:
    """Zeros of psi inside ``box = (re_min, re_max, im_min, im_max)``.

    Eigenstate nodes are real, so they are bracketed by a sign-change scan on
    the real axis and then polished with complex Newton steps.
    """
    re_min, re_max, im_min, im_max = box
    if isinstance(state, FreeParticle):
        return []
    if isinstance(state, GaussianPacket):
        if t != 0.0:
            raise UnsupportedState("packet nodes move with time; only t = 0 is supported")
        return []
    if not isinstance(state, OscillatorEigenstate):
        raise UnsupportedState(f"node listing not supported for {state.descriptor}")
    if state.n == 0 or not (im_min <= 0.0 <= im_max):
        return []

    def h(z):
        return _monic_hermite(z, state.n)[0]

    def dh(z):
        return state.n * _monic_hermite(z, state.n - 1)[0]

    reach = math.sqrt(2 * state.n + 1) + 1.0
    roots = _real_roots(lambda s: h(s.astype(float)), -reach, reach)
    nodes = []
    for r in roots:
        z = _polish(h, dh, complex(r))
        if re_min <= z.real <= re_max and all(abs(z - m) > 1e-9 for m in nodes):
            nodes.append(complex(z.real, 0.0) if abs(z.imag) < 1e-14 else z)
    return nodes


def stagnation_points(state: QuantumState) -> list[complex]:
    """Zeros of psi' (fixed points of the flow) for oscillator eigenstates.

    psi' = (n h_{n-1} - X h_n) exp(-X^2/2); the polynomial has n + 1 real roots.
    """
    if not isinstance(state, OscillatorEigenstate):
        raise UnsupportedState(f"stagnation points not supported for {state.descriptor}")
    n = state.n

    def q(z):
        h, h1, _ = _monic_hermite(z, n)
        return n * h1 - z * h

    def dq(z):
        h, h1, h2 = _monic_hermite(z, n)
        return n * (n - 1) * h2 - h - z * n * h1

    reach = math.sqrt(2 * n + 1) + 1.0
    roots = _real_roots(lambda s: q(s.astype(float)), -reach, reach)
    out = []
    for r in roots:
        z = _polish(q, dq, complex(r))
        out.append(float(z.real))
    return out

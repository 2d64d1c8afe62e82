"""Verification suites run by ``cqtraj verify``.

Each suite measures one property, compares it with its tolerance and
returns a SuiteResult.  ``tol`` overrides every tolerance of the suite.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import continuity, export, probability
from .probability import GridSpec, REFERENCE_FRACTION_N1, REFERENCE_WIDTH_N1
from .trajectory import cassinian_invariant, integrate
from .wavefunction import OscillatorEigenstate, PhysicalScale, list_nodes

SEPARATRIX_TOL = 1e-11
FRACTION_GRID = "-4:4:800,-1.5:1.5:300"
CASSINIAN_B = (0.2, 0.5, 1.0, 2.0, 5.0)
CHARACTERISTIC_SEEDS = {
    0: (1.0, 0.5 + 0.5j, 2j, -1.5 + 0.3j, 0.7 - 0.2j, 2.2 + 0.4j),
    1: (1.2 + 0.2j, 0.6 + 0.1j, 2.0, 1j, -1.5 + 0.2j, 2.5 + 0.5j, 0.8),
    2: (0.3 + 0.1j, 1.8, 2.5, 0.2j, 1.2 + 0.2j, -1.8 + 0.1j, 3.0),
}


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    def add(self, label, measured, tolerance, ok):
        self.checks.append({"check": label, "measured": measured, "tolerance": tolerance, "passed": bool(ok)})
        self.passed = self.passed and bool(ok)


def _pick(tol, default):
    return default if tol is None else tol


def suite_born(tol=None):
    res = SuiteResult("born", True)
    limit = _pick(tol, 1e-6)
    grid = np.linspace(-4.0, 4.0, 801)
    for n in range(5):
        state = OscillatorEigenstate(n)
        x = probability.exclude_nodes(state, grid)
        prof = probability.born_density(state, x)
        ref = np.abs(state.psi(x)) ** 2
        ref = ref / probability.trapezoid(ref, x)
        dev = float(np.max(np.abs(prof.values / ref - 1.0)))
        res.add(f"n={n} max relative deviation", dev, limit, dev < limit)
    return res


def _seed_for_b(b):
    return complex(math.sqrt(1.0 + b))


def suite_cassinian(tol=None):
    res = SuiteResult("cassinian", True)
    s1 = OscillatorEigenstate(1)
    for b in CASSINIAN_B:
        traj = integrate(s1, _seed_for_b(b), until_closure=True, rel_tol=1e-9)
        drift = float(np.max(np.abs(cassinian_invariant(traj.x) - b)))
        limit = _pick(tol, 1e-7)
        res.add(f"b={b:g} invariant drift", drift, limit, drift < limit)
    traj = integrate(s1, _seed_for_b(1.0), until_closure=True, rel_tol=SEPARATRIX_TOL)
    approach = float(np.min(np.abs(traj.x)))
    limit = _pick(tol, 1e-6)
    res.add(f"b=1 closest approach to origin (rel_tol {SEPARATRIX_TOL:g})", approach, limit, approach < limit)
    return res


def suite_period(tol=None):
    res = SuiteResult("period", True)
    s1 = OscillatorEigenstate(1)
    limit = _pick(tol, 1e-5)
    for b in CASSINIAN_B:
        traj = integrate(s1, _seed_for_b(b), until_closure=True, rel_tol=1e-9)
        err = float(abs(traj.period - math.pi)) if traj.closed else math.inf
        res.add(f"n=1 b={b:g} period - pi", err, limit, err < limit)
    traj = integrate(OscillatorEigenstate(0), 1.0, until_closure=True, rel_tol=1e-9)
    err = float(abs(traj.period - 2 * math.pi)) if traj.closed else math.inf
    limit = _pick(tol, 1e-6)
    res.add("n=0 circle period - 2 pi", err, limit, err < limit)
    return res


def suite_period_derived(tol=None):
    """Periods from the residue sum: pi per enclosed focus."""
    res = SuiteResult("period_derived", True)
    s1 = OscillatorEigenstate(1)
    limit = _pick(tol, 1e-6)
    for b in CASSINIAN_B:
        if b == 1.0:
            continue
        expected = math.pi if b < 1 else 2 * math.pi
        traj = integrate(s1, _seed_for_b(b), until_closure=True, rel_tol=1e-9)
        err = abs(traj.period - expected) if traj.closed else math.inf
        res.add(f"n=1 b={b:g} period - {'pi' if b < 1 else '2 pi'}", float(err), limit, err < limit)
    return res


def full_plane_fraction() -> float:
    """Share of the combined n=1 density on the lobes over the whole plane.

    Lobes carry |X|^2 exp(-Re X^2) and integrate to pi I1(1) / e; the ovals
    carry |X|^2 exp(-(1 + b)) and integrate to 2 pi / e^2 (polar-type
    coordinates u = X^2 for both pieces).
    """
    from scipy.special import iv

    lobes = iv(1, 1.0)
    ovals = 2.0 / math.e
    return float(lobes / (lobes + ovals))


def suite_fraction_full_plane(tol=None):
    res = SuiteResult("fraction_full_plane", True)
    s1 = OscillatorEigenstate(1)
    _, frac = probability.normalize_and_fraction(probability.density_field(s1, GridSpec.parse("-8:8:1600,-8:8:1600")))
    expected = full_plane_fraction()
    limit = _pick(tol, 1e-3)
    res.add(f"[-8,8]^2 grid vs closed form {expected:.6f}", frac, limit, abs(frac - expected) < limit)
    return res


def suite_eq3(tol=None):
    res = SuiteResult("eq3", True)
    s1 = OscillatorEigenstate(1)
    limit = _pick(tol, 1e-6)
    for b in (1.5, 2.0, 3.0):
        x0 = _seed_for_b(b)
        traj = integrate(s1, x0, until_closure=True, rel_tol=1e-9)
        rho_a = float(probability.born_value(s1, x0.real))
        trace = probability.rho_conserved(s1, traj, anchor=(x0, rho_a))
        oracle = probability.conserved_oracle(s1, traj.x, x0, rho_a)
        err = float(np.max(np.abs(trace.rho / oracle - 1.0)))
        res.add(f"b={b:g} rho vs C/|v|^2", err, limit, err < limit)
        resid = continuity.continuity_residual(s1, traj, "eq3").max_abs
        res.add(f"b={b:g} continuity residual", resid, limit, resid < limit)
    return res


def lobe_points(count=100, seed=12345):
    """Random off-axis points inside the n=1 lobes, away from the foci."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        z = complex(rng.uniform(0.05, 1.4), rng.uniform(0.02, 0.5))
        if cassinian_invariant(z) < 0.95 and abs(z - 1.0) > 0.05:
            out.append(z if rng.random() < 0.5 else -z.conjugate())
    return out


def suite_eq4(tol=None):
    res = SuiteResult("eq4", True)
    s1 = OscillatorEigenstate(1)
    limit = _pick(tol, 1e-6)
    worst = 0.0
    for z in lobe_points():
        a = probability.rho_alt(s1, z, via="trajectory_integral")
        d = probability.rho_alt(s1, z, via="direct")
        worst = max(worst, abs(a / d - 1.0))
    res.add("100 lobe points, trajectory vs direct", worst, limit, worst < limit)
    return res


def _rho_at_crossing(state, x0, x_target):
    """Conserved density anchored to Born at real x0, at the crossing nearest x_target."""
    traj = integrate(state, x0, until_closure=True, rel_tol=1e-9)
    t_c = min(traj.crossings, key=lambda c: abs(c[1] - x_target))[0]
    exponent = float(probability.exponent_integral(traj, [t_c])[0])
    return float(probability.born_value(state, x0)) * math.exp(exponent)


def dichotomy_ratios():
    """(oval relative mismatch, lobe ratio P/rho at the second crossing)."""
    s1 = OscillatorEigenstate(1)
    x0 = math.sqrt(3.0)
    oval = _rho_at_crossing(s1, x0, -x0) / float(probability.born_value(s1, -x0)) - 1.0
    x0, x1 = math.sqrt(1.5), math.sqrt(0.5)
    lobe = float(probability.born_value(s1, x1)) / _rho_at_crossing(s1, x0, x1)
    return oval, lobe


def suite_dichotomy(tol=None):
    res = SuiteResult("dichotomy", True)
    oval, lobe = dichotomy_ratios()
    limit = _pick(tol, 1e-6)
    res.add("b=2 oval: rho(-sqrt3)/P(-sqrt3) - 1", abs(oval), limit, abs(oval) < limit)
    limit = _pick(tol, 1e-4)
    res.add("b=0.5 lobe: P(sqrt0.5)/rho(sqrt0.5) - e", abs(lobe - math.e), limit, abs(lobe - math.e) < limit)
    return res


def suite_characteristics(tol=None):
    res = SuiteResult("characteristics", True)
    limit = _pick(tol, 1e-6)
    for n, seeds in CHARACTERISTIC_SEEDS.items():
        state = OscillatorEigenstate(n)
        worst = max(continuity.characteristics_match(state, z) for z in seeds)
        res.add(f"n={n} {len(seeds)} seeds max distance", worst, limit, worst < limit)
    return res


def suite_fraction(tol=None):
    res = SuiteResult("fraction", True)
    s1 = OscillatorEigenstate(1)
    grid = GridSpec.parse(FRACTION_GRID)
    _, frac = probability.normalize_and_fraction(probability.density_field(s1, grid))
    _, fine = probability.normalize_and_fraction(probability.density_field(s1, grid.refined(2)))
    limit = _pick(tol, 0.015)
    res.add(f"fraction_inside vs {REFERENCE_FRACTION_N1}", frac, limit, abs(frac - REFERENCE_FRACTION_N1) < limit)
    limit = _pick(tol, 1e-3)
    res.add("2x refinement change", abs(fine - frac), limit, abs(fine - frac) < limit)
    return res


def suite_width(tol=None):
    res = SuiteResult("width", True)
    w1 = probability.lemniscate_width(1)
    limit = _pick(tol, 1e-4)
    res.add(f"n=1 width (reference {REFERENCE_WIDTH_N1})", w1, limit, abs(w1 - 0.5) < limit)
    widths = [probability.lemniscate_width(n) for n in (1, 2, 3, 4)]
    res.add("widths n=1..4 strictly decreasing", widths, None, all(a > b for a, b in zip(widths, widths[1:])))
    return res


def suite_classical(tol=None):
    res = SuiteResult("classical", True)
    factor = _pick(tol, 3.0)
    w = probability.lemniscate_width(1)
    big = probability.classical_width(PhysicalScale(1.0, 1.0), w)
    ratio = max(big / 1e-17, 1e-17 / big)
    res.add("m=1 kg, omega=1: ratio to 1e-17 m", ratio, factor, ratio < factor)
    small = probability.classical_width(PhysicalScale.electron(1.0), w)
    ratio = max(small / 1e-2, 1e-2 / small)
    res.add("electron, omega=1: ratio to 1e-2 m", ratio, factor, ratio < factor)
    return res


def suite_expectation(tol=None):
    res = SuiteResult("expectation", True)
    for n in range(5):
        state = OscillatorEigenstate(n)
        err = abs(probability.expectation(state, "energy") - (n + 0.5))
        limit = _pick(tol, 1e-8)
        res.add(f"n={n} <E> - (n+1/2)", err, limit, err < limit)
        pos = abs(probability.expectation(state, "position"))
        limit = _pick(tol, 1e-10)
        res.add(f"n={n} |<x>|", pos, limit, pos < limit)
    return res


def suite_divergence(tol=None):
    res = SuiteResult("divergence", True)
    rng = np.random.default_rng(7)
    worst_id, worst_fd = 0.0, 0.0
    for n in range(5):
        state = OscillatorEigenstate(n)
        for _ in range(200):
            z = complex(rng.uniform(-3, 3), rng.uniform(-1.5, 1.5))
            if n and min(abs(z - a) for a in list_nodes(state, (-5, 5, -1, 1))) < 0.05:
                continue
            div = float(continuity.divergence(state, z))
            rate = float(probability.exponent_rate(state, z))
            scale = max(1.0, abs(div))
            worst_id = max(worst_id, abs(rate + div) / scale)
            worst_fd = max(worst_fd, abs(continuity.fd_divergence(state, z) - div) / scale)
    limit = _pick(tol, 1e-6)
    res.add("-4 Im(v^2/2+V) + div v", worst_id, limit, worst_id < limit)
    limit = _pick(tol, 1e-5)
    res.add("finite-difference divergence", worst_fd, limit, worst_fd < limit)
    return res


def suite_determinism(tol=None):
    res = SuiteResult("determinism", True)
    s1 = OscillatorEigenstate(1)
    grid = GridSpec.parse("-4:4:200,-1.5:1.5:150")
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            fld = probability.density_field(s1, grid)
            probability.normalize_and_fraction(fld)
            path = Path(tmp) / f"run{k}.csv"
            export.write_density_csv(path, fld)
            blobs.append(path.read_bytes())
    res.add("two density runs byte-identical", len(blobs[0]), None, blobs[0] == blobs[1])
    return res


SUITES = {
    "born": suite_born,
    "cassinian": suite_cassinian,
    "period": suite_period,
    "period_derived": suite_period_derived,
    "eq3": suite_eq3,
    "eq4": suite_eq4,
    "dichotomy": suite_dichotomy,
    "characteristics": suite_characteristics,
    "fraction": suite_fraction,
    "fraction_full_plane": suite_fraction_full_plane,
    "width": suite_width,
    "classical": suite_classical,
    "expectation": suite_expectation,
    "divergence": suite_divergence,
    "determinism": suite_determinism,
}


def run(names=None, tol=None) -> list[SuiteResult]:
    names = list(SUITES) if not names else names
    out = []
    for name in names:
        start = time.perf_counter()
        result = SUITES[name](tol)
        result.seconds = time.perf_counter() - start
        out.append(result)
    return out


def report(results) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "failing": [r.name for r in results if not r.passed],
        "suites": [asdict(r) for r in results],
    }

"""Acceptance criteria, one test and one printed line each.

Tolerances are pinned here rather than imported from the package, so a
change of library default cannot loosen them.
"""

import math
import time

import numpy as np
import pytest
from scipy.special import eval_hermite, factorial

from cqtraj import continuity, probability
from cqtraj.cli import main
from cqtraj.probability import GridSpec
from cqtraj.trajectory import cassinian_invariant, integrate
from cqtraj.wavefunction import OscillatorEigenstate, PhysicalScale

S0, S1 = OscillatorEigenstate(0), OscillatorEigenstate(1)
B_VALUES = (0.2, 0.5, 1.0, 2.0, 5.0)


def textbook_density(n, x):
    psi = eval_hermite(n, x) * np.exp(-x * x / 2) / math.sqrt(2.0**n * factorial(n) * math.sqrt(math.pi))
    return psi * psi


def test_01_born_reconstruction(criterion):
    grid = np.linspace(-4.0, 4.0, 801)
    worst, seconds = 0.0, 0.0
    for n in range(5):
        state = OscillatorEigenstate(n)
        start = time.perf_counter()
        x = probability.exclude_nodes(state, grid)
        prof = probability.born_density(state, x)
        seconds = max(seconds, time.perf_counter() - start)
        ref = textbook_density(n, x)
        ref = ref / probability.trapezoid(ref, x)
        worst = max(worst, float(np.max(np.abs(prof.values / ref - 1.0))))
    ok = worst < 1e-6 and seconds < 1.0
    criterion(1, "Born reconstruction n=0..4, 801 points", ok, f"{worst:.2e}, {seconds:.2f} s", "< 1e-6, < 1 s")
    assert ok


def test_02_cassinian_invariance(criterion):
    start = time.perf_counter()
    drift = 0.0
    for b in B_VALUES:
        traj = integrate(S1, math.sqrt(1 + b), until_closure=True, rel_tol=1e-9)
        drift = max(drift, float(np.max(np.abs(cassinian_invariant(traj.x) - b))))
    # the origin is reached only as closely as sqrt(drift) allows, so the
    # separatrix is integrated at a tighter tolerance
    sep = integrate(S1, math.sqrt(2.0), until_closure=True, rel_tol=1e-11)
    approach = float(np.min(np.abs(sep.x)))
    seconds = time.perf_counter() - start
    ok = drift < 1e-7 and approach < 1e-6 and seconds < 1.0
    criterion(
        2,
        "Cassinian drift / b=1 approach to origin",
        ok,
        f"{drift:.2e} / {approach:.2e}, {seconds:.2f} s",
        "< 1e-7 / < 1e-6, < 1 s",
    )
    assert ok


def test_03_period_law(criterion):
    periods = {}
    for b in B_VALUES:
        traj = integrate(S1, math.sqrt(1 + b), until_closure=True, rel_tol=1e-9)
        periods[b] = traj.period if traj.closed else math.nan
    circle = integrate(S0, 1.0, until_closure=True).period
    bad = [b for b, p in periods.items() if not abs(p - math.pi) < 1e-5]
    ok = not bad and abs(circle - 2 * math.pi) < 1e-6
    shown = ", ".join(f"b={b:g}: {p:.6f}" for b, p in periods.items())
    criterion(3, "n=1 periods / n=0 circle", ok, f"{shown} / {circle:.8f}", "pi +- 1e-5 / 2 pi +- 1e-6")
    assert ok


def test_03_supplement_residue_periods(criterion):
    # the period is pi per focus enclosed: lobes pi, ovals 2 pi
    worst = 0.0
    for b in (0.2, 0.5, 2.0, 5.0):
        traj = integrate(S1, math.sqrt(1 + b), until_closure=True, rel_tol=1e-9)
        worst = max(worst, abs(traj.period - (math.pi if b < 1 else 2 * math.pi)))
    ok = worst < 1e-6
    criterion(3, "(supplement) periods vs enclosed-focus count", ok, f"{worst:.2e}", "< 1e-6")
    assert ok


def test_04_conserved_density_oracle(criterion):
    rel, resid = 0.0, 0.0
    for b in (1.5, 2.0, 3.0):
        x0 = math.sqrt(1 + b)
        traj = integrate(S1, x0, until_closure=True, rel_tol=1e-9)
        rho0 = float(textbook_density(1, x0))
        trace = probability.rho_conserved(S1, traj, anchor=(x0, rho0))
        # n=1: v = i(X - 1/X), so C/|v|^2 = rho0 |v(x0)|^2 |X|^2 / |X^2 - 1|^2
        v0 = abs(x0 - 1 / x0) ** 2
        oracle = rho0 * v0 * np.abs(traj.x) ** 2 / np.abs(traj.x**2 - 1) ** 2
        rel = max(rel, float(np.max(np.abs(trace.rho / oracle - 1.0))))
        resid = max(resid, continuity.continuity_residual(S1, traj, "eq3").max_abs)
    ok = rel < 1e-6 and resid < 1e-6
    criterion(4, "conserved density vs C/|v|^2 / continuity residual", ok, f"{rel:.2e} / {resid:.2e}", "< 1e-6 / < 1e-6")
    assert ok


def lobe_points(count=100, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        z = complex(rng.uniform(0.05, 1.4), rng.uniform(0.02, 0.5))
        if abs(1 - z * z) < 0.95 and abs(z - 1) > 0.05:
            out.append(z if rng.random() < 0.5 else -z.conjugate())
    return out


def test_05_noncons_density_oracle(criterion):
    worst = 0.0
    norm = 2 / math.sqrt(math.pi)
    for z in lobe_points():
        via_path = probability.rho_alt(S1, z, via="trajectory_integral")
        direct = norm * abs(z) ** 2 * math.exp(-(z * z).real)
        worst = max(worst, abs(via_path / direct - 1))
    ok = worst < 1e-6
    criterion(5, "trajectory-integral rho' vs |psi|^2, 100 lobe points", ok, f"{worst:.2e}", "< 1e-6")
    assert ok


def born_rho_at(x0, target):
    traj = integrate(S1, x0, until_closure=True, rel_tol=1e-9)
    t_c = min(traj.crossings, key=lambda c: abs(c[1] - target))[0]
    return float(textbook_density(1, x0)) * math.exp(float(probability.exponent_integral(traj, [t_c])[0]))


def test_06_dichotomy(criterion):
    r3 = math.sqrt(3.0)
    oval = abs(born_rho_at(r3, -r3) / textbook_density(1, -r3) - 1)
    ratio = float(textbook_density(1, math.sqrt(0.5))) / born_rho_at(math.sqrt(1.5), math.sqrt(0.5))
    ok = oval < 1e-6 and abs(ratio - math.e) < 1e-4
    criterion(
        6,
        "oval relative mismatch / lobe mismatch factor P/rho",
        ok,
        f"{oval:.2e} / {ratio:.6f}",
        "< 1e-6 / e +- 1e-4",
    )
    assert ok


SEEDS = {
    0: (1.0, 0.5 + 0.5j, 2j, -1.5 + 0.3j, 0.7 - 0.2j, 2.2 + 0.4j),
    1: (1.2 + 0.2j, 0.6 + 0.1j, 2.0, 1j, -1.5 + 0.2j, 2.5 + 0.5j, 0.8),
    2: (0.3 + 0.1j, 1.8, 2.5, 0.2j, 1.2 + 0.2j, -1.8 + 0.1j, 3.0),
}


def test_07_characteristics(criterion):
    worst = max(
        continuity.characteristics_match(OscillatorEigenstate(n), z) for n, seeds in SEEDS.items() for z in seeds
    )
    count = sum(len(s) for s in SEEDS.values())
    ok = worst < 1e-6 and count == 20
    criterion(7, f"characteristics vs trajectories, {count} seeds", ok, f"{worst:.2e}", "< 1e-6")
    assert ok


def fraction_on(spec):
    fld = probability.density_field(S1, GridSpec.parse(spec))
    return probability.normalize_and_fraction(fld)[1]


def test_08_fraction_inside(criterion):
    start = time.perf_counter()
    frac = fraction_on("-4:4:800,-1.5:1.5:300")
    seconds = time.perf_counter() - start
    fine = fraction_on("-4:4:1600,-1.5:1.5:600")
    ok = abs(frac - 0.4325) < 0.015 and abs(fine - frac) < 1e-3 and seconds < 30
    criterion(
        8,
        "fraction inside lemniscate, 800x300 / refinement change",
        ok,
        f"{frac:.5f} / {abs(fine - frac):.1e}, {seconds:.1f} s",
        "0.4325 +- 0.015 / < 1e-3, < 30 s",
    )
    assert ok


def test_08_supplement_full_plane(criterion):
    # closed form over the whole plane: I1(1) / (I1(1) + 2/e)
    from scipy.special import iv

    expected = iv(1, 1.0) / (iv(1, 1.0) + 2 / math.e)
    frac = fraction_on("-8:8:1600,-8:8:1600")
    ok = abs(frac - expected) < 1e-3
    criterion(8, f"(supplement) full-plane fraction vs {expected:.5f}", ok, f"{frac:.5f}", "+- 1e-3")
    assert ok


def test_09_width(criterion):
    w = [probability.lemniscate_width(n) for n in (1, 2, 3, 4)]
    ok = abs(w[0] - 0.5) < 1e-4 and all(a > b for a, b in zip(w, w[1:]))
    shown = ", ".join(f"{x:.5f}" for x in w)
    criterion(9, "separatrix widths n=1..4 (reference n=1: 0.4858)", ok, shown, "0.5 +- 1e-4, strictly decreasing")
    assert ok


def test_10_classical(criterion):
    w = probability.lemniscate_width(1)
    # sqrt(hbar / m omega) from CODATA 2018 values; later editions differ below 1e-8
    hbar, m_e = 1.054571817e-34, 9.1093837015e-31
    big = probability.classical_width(PhysicalScale(1.0, 1.0), w)
    small = probability.classical_width(PhysicalScale.electron(1.0), w)
    assert big == pytest.approx(w * math.sqrt(hbar), rel=1e-7)
    assert small == pytest.approx(w * math.sqrt(hbar / m_e), rel=1e-7)
    r_big = max(big / 1e-17, 1e-17 / big)
    r_small = max(small / 1e-2, 1e-2 / small)
    ok = r_big < 3 and r_small < 3
    criterion(10, "classical widths m=1 kg / electron", ok, f"{big:.2e} m / {small:.2e} m", "1e-17 m / 1e-2 m within x3")
    assert ok


def test_11_expectation(criterion):
    e_err = max(abs(probability.expectation(OscillatorEigenstate(n), "energy") - (n + 0.5)) for n in range(5))
    x_err = max(abs(probability.expectation(OscillatorEigenstate(n), "position")) for n in range(5))
    ok = e_err < 1e-8 and x_err < 1e-10
    criterion(11, "<E> - (n+1/2) / |<x>|, n=0..4", ok, f"{e_err:.2e} / {x_err:.2e}", "< 1e-8 / < 1e-10")
    assert ok


def test_12_determinism(criterion, tmp_path):
    args = ["density", "--state", "sho:1", "--grid", "-4:4:800,-1.5:1.5:300", "--format", "csv"]
    codes = [main(args + ["--out", str(tmp_path / d)]) for d in ("a", "b")]
    same = (tmp_path / "a" / "density.csv").read_bytes() == (tmp_path / "b" / "density.csv").read_bytes()
    ok = codes == [0, 0] and same
    criterion(12, "two density runs byte-identical", ok, f"exit codes {codes}, identical={same}", "identical")
    assert ok

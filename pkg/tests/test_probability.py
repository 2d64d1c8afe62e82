import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import nquad
from scipy.optimize import brentq, minimize_scalar
from scipy.special import eval_hermite

from cqtraj import probability as P
from cqtraj.errors import (
    DomainError,
    GridTooCoarse,
    NoCrossing,
    NotClosed,
    NotFinite,
    NotNormalizable,
    PoleOnPath,
    UnsupportedState,
)
from cqtraj.probability import GridSpec, RegionLabel
from cqtraj.trajectory import cassinian_invariant, integrate, orbit_invariant
from cqtraj.wavefunction import FreeParticle, GaussianPacket, OscillatorEigenstate, PhysicalScale, PotentialStep, list_nodes

S0, S1, S2 = (OscillatorEigenstate(n) for n in range(3))
NORM1 = 2 / math.sqrt(math.pi)  # |psi_1|^2 = NORM1 |X|^2 exp(-Re X^2)


# --------------------------------------------------------------------------
# expectation values


def hermgauss_expectation(n, weight):
    """<f> over |psi_n|^2 with Gauss-Hermite quadrature of the textbook form."""
    x, w = np.polynomial.hermite.hermgauss(60)
    dens = eval_hermite(n, x) ** 2 / (2**n * math.factorial(n) * math.sqrt(math.pi))
    return float(np.sum(w * dens * weight(x)))


@pytest.mark.parametrize("n", range(5))
def test_expectation_matches_textbook(n):
    s = OscillatorEigenstate(n)
    assert P.expectation(s, "energy") == pytest.approx(n + 0.5, abs=1e-8)
    assert abs(P.expectation(s, "position")) < 1e-10
    assert abs(P.expectation(s, "momentum")) < 1e-10
    # <x^2> = n + 1/2 in these units; potential part of the energy is half of it
    assert hermgauss_expectation(n, lambda x: x * x) == pytest.approx(n + 0.5)


def test_expectation_packet():
    s = GaussianPacket(0.5, 2.0, 0.7)
    assert P.expectation(s, "momentum") == pytest.approx(2.0, abs=1e-8)
    assert P.expectation(s, "position", t=1.3) == pytest.approx(0.5 + 2.0 * 1.3, abs=1e-8)
    assert P.expectation(s, "energy", t=0.4) == pytest.approx(2.0 + 1 / (8 * 0.49), abs=1e-8)


def test_expectation_errors():
    with pytest.raises(NotNormalizable):
        P.expectation(FreeParticle(1.0), "energy")
    with pytest.raises(NotNormalizable):
        P.expectation(PotentialStep(1.0, 0.5), "position")
    with pytest.raises(DomainError):
        P.expectation(S1, "spin")


# --------------------------------------------------------------------------
# Born reconstruction


def test_born_ratios():
    x = np.linspace(-4, 4, 801)
    prof = P.born_density(S1, P.exclude_nodes(S1, x))
    at = dict(zip(np.round(prof.x, 10), prof.values))
    assert at[1.0] / at[2.0] == pytest.approx(math.e**3 / 4, rel=1e-10)
    prof0 = P.born_density(S0, x)
    at0 = dict(zip(np.round(prof0.x, 10), prof0.values))
    assert at0[0.0] / at0[1.0] == pytest.approx(math.e, rel=1e-12)
    assert prof.integral() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", range(5))
def test_born_equals_psi_squared(n):
    s = OscillatorEigenstate(n)
    x = P.exclude_nodes(s, np.linspace(-6, 6, 1201))
    prof = P.born_density(s, x)
    ref = np.abs(s.psi(x)) ** 2
    np.testing.assert_allclose(prof.values, ref / P.trapezoid(ref, x), rtol=1e-8)
    # the range covers well over 8 widths
    assert prof.integral() == pytest.approx(1.0, abs=1e-6)


def test_born_coarse_grid_across_nodes():
    # intervals spanning a node are handled by the closed-form log term
    s = OscillatorEigenstate(3)
    x = np.linspace(-3.1, 3.0, 13)
    prof = P.born_density(s, x)
    ref = np.abs(s.psi(x)) ** 2
    np.testing.assert_allclose(prof.values / prof.values[6], ref / ref[6], rtol=1e-8)


def test_born_errors():
    with pytest.raises(PoleOnPath):
        P.born_density(S1, np.linspace(-1, 1, 11))
    with pytest.raises(NotNormalizable):
        P.born_density(FreeParticle(1.0), np.linspace(-1, 1, 11))
    with pytest.raises(UnsupportedState):
        P.born_density(GaussianPacket(0, 1, 1), np.linspace(-1, 1, 11))
    with pytest.raises(DomainError):
        P.born_density(S0, np.array([1.0, 0.5]))
    kept = P.exclude_nodes(S1, np.array([-0.5, -5e-5, 0.0, 3e-4]))
    assert kept.tolist() == [-0.5, 3e-4]


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_born_ratio_property(a, b):
    # P(a)/P(b) = exp(b^2 - a^2) for n=0, from the exponentiated line integral alone
    if abs(a - b) < 1e-3:
        return
    x = np.sort(np.array([a, b]))
    prof = P.born_density(S0, x)
    assert prof.values[0] / prof.values[1] == pytest.approx(math.exp(x[1] ** 2 - x[0] ** 2), rel=1e-9)


# --------------------------------------------------------------------------
# densities along trajectories


def test_rho_conserved_matches_inverse_speed():
    x0 = math.sqrt(3)
    traj = integrate(S1, x0, until_closure=True)
    rho_a = float(P.born_value(S1, x0))
    trace = P.rho_conserved(S1, traj, anchor=(x0, rho_a))
    assert trace.rho[0] == rho_a
    oracle = P.conserved_oracle(S1, traj.x, x0, rho_a)
    np.testing.assert_allclose(trace.rho, oracle, rtol=1e-6)
    # closed form on ovals: NORM1 |X|^2 exp(-(1 + b))
    np.testing.assert_allclose(trace.rho, NORM1 * np.abs(traj.x) ** 2 * math.exp(-3.0), rtol=1e-6)


def test_rho_conserved_default_anchor_and_mid_anchor():
    traj = integrate(S1, 1.3 + 0.4j, until_closure=True)
    trace = P.rho_conserved(S1, traj)
    t_c, x_c = traj.crossings[0]
    assert trace.anchor_rho == pytest.approx(float(P.born_value(S1, x_c)))
    mid = traj.x[len(traj) // 3]
    again = P.rho_conserved(S1, traj, anchor=(mid, 0.25))
    np.testing.assert_allclose(again.rho / trace.rho, again.rho[0] / trace.rho[0], rtol=1e-7)
    with pytest.raises(DomainError):
        P.rho_conserved(S1, traj, anchor=(5 + 5j, 1.0))
    with pytest.raises(DomainError):
        P.rho_conserved(S2, traj)


def test_rho_conserved_lobe_mismatch():
    x0, x1 = math.sqrt(1.5), math.sqrt(0.5)
    traj = integrate(S1, x0, until_closure=True)
    trace = P.rho_conserved(S1, traj, anchor=(x0, float(P.born_value(S1, x0))))
    t1 = min(traj.crossings, key=lambda c: abs(c[1] - x1))[0]
    rho1 = trace.anchor_rho * math.exp(float(P.exponent_integral(traj, [t1])[0]))
    assert float(P.born_value(S1, x1)) / rho1 == pytest.approx(math.e, rel=1e-6)


def test_no_crossing():
    traj = integrate(FreeParticle(1.0), 0.5j, t_end=2.0)
    with pytest.raises(NoCrossing):
        P.rho_conserved(FreeParticle(1.0), traj)


def test_rho_alt_examples():
    assert P.rho_alt(S1, 1j) / P.rho_alt(S1, 1.0) == pytest.approx(math.e**2)
    assert P.rho_alt(S1, 0.7, via="trajectory_integral") == pytest.approx(float(P.born_value(S1, 0.7)))
    z = 0.9 + 0.2j
    assert P.rho_alt(S1, z, via="trajectory_integral") == pytest.approx(P.rho_alt(S1, z), rel=1e-6)
    with pytest.raises(DomainError):
        P.rho_alt(S1, z, via="magic")


@given(st.floats(0.1, 1.35), st.floats(0.02, 0.45), st.integers(0, 2))
@settings(max_examples=12, deadline=None)
def test_rho_alt_route_independence(xr, xi, n):
    s = OscillatorEigenstate(n)
    z = complex(xr, xi)
    if min([abs(z - p) for p in (1.0, 1 / math.sqrt(2), 0.0, 1.58113883)]) < 0.05:
        return
    assert P.rho_alt(s, z, via="trajectory_integral") == pytest.approx(P.rho_alt(s, z), rel=1e-6)


def test_classify_examples():
    assert P.classify_region(S1, 1 + 0.1j) is RegionLabel.ALT
    assert P.classify_region(S1, 1j) is RegionLabel.CONSERVED
    assert P.classify_region(S0, 1.0) is RegionLabel.CONSERVED
    assert P.classify_region(S1, 1.0 + 1e-7j) is RegionLabel.EXCLUDED
    assert P.classify_region(S1, 1e-7) is RegionLabel.EXCLUDED
    assert P.classify_region(S2, 0.2 + 0.1j) is RegionLabel.ALT
    assert P.classify_region(S2, 3.0) is RegionLabel.CONSERVED
    with pytest.raises(NotClosed):
        P.classify_region(FreeParticle(1.0), 0.5)


# --------------------------------------------------------------------------
# grids


def test_gridspec():
    g = GridSpec.parse("-3:3:600,-1:1:200")
    assert (g.n_re, g.n_im) == (600, 200)
    assert g.d_re == pytest.approx(0.01) and g.cell_area == pytest.approx(1e-4)
    assert GridSpec.parse(str(g)) == g
    assert g.refined().n_re == 1200
    for bad in ("1:2:3", "a:b:c,d:e:f", "3:-3:10,0:1:10", "0:1:0,0:1:1"):
        with pytest.raises(DomainError):
            GridSpec.parse(bad)


def test_field_n1_closed_forms():
    g = GridSpec.parse("-3:3:300,-1.5:1.5:301")
    fld = P.density_field(S1, g)
    xr, xi = g.centres()
    X = xr[:, None] + 1j * xi[None, :]
    b = cassinian_invariant(X)
    expected = np.where(b < 1, NORM1 * np.abs(X) ** 2 * np.exp(-(X * X).real), NORM1 * np.abs(X) ** 2 * np.exp(-(1 + b)))
    np.testing.assert_allclose(fld.values, expected, rtol=1e-10)
    assert np.array_equal(fld.labels == RegionLabel.ALT, b < 1)
    assert np.all(fld.values >= 0)


def test_field_real_axis_row_is_born():
    g = GridSpec.parse("-3:3:600,-1:1:201")
    fld = P.density_field(S1, g)
    xr, xi = g.centres()
    row = int(np.argmin(np.abs(xi)))
    assert abs(xi[row]) < 1e-12
    np.testing.assert_allclose(fld.values[:, row], P.born_value(S1, xr), atol=1e-4)


def test_field_n2_conserved_values_follow_trajectories():
    g = GridSpec.parse("-4:4:200,-1.5:1.5:200")
    fld = P.density_field(S2, g)
    xr, xi = g.centres()
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 6:
        i, j = rng.integers(200), rng.integers(200)
        if fld.labels[i, j] != RegionLabel.CONSERVED:
            continue
        z = complex(xr[i], xi[j])
        traj = integrate(S2, z, until_closure=True)
        x_c = max(x for _, x in traj.crossings)
        oracle = P.conserved_oracle(S2, z, x_c, float(P.born_value(S2, x_c)))
        assert fld.values[i, j] == pytest.approx(float(oracle), rel=1e-6)
        checked += 1


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sweep_labels_match_winding(n):
    s = OscillatorEigenstate(n)
    g = GridSpec.parse("-4:4:160,-1.5:1.5:300")
    fld = P.density_field(s, g)
    xr, xi = g.centres()
    rng = np.random.default_rng(n)
    for _ in range(12):
        i, j = rng.integers(160), rng.integers(300)
        z = complex(xr[i], xi[j])
        assert P.classify_region(s, z) == fld.labels[i, j]


def full_plane_fraction_by_quadrature():
    """Lobe share of the n=1 combined density by adaptive quadrature in polar
    coordinates; the lobes are r^2 < 2 cos 2theta."""

    def b(r, th):
        return abs(1 - (r * np.exp(1j * th)) ** 2)

    def alt(r, th):
        return r**3 * math.exp(-r * r * math.cos(2 * th))

    def cons(r, th):
        return r**3 * math.exp(-(1 + b(r, th)))

    def edge(th):
        return [0, math.sqrt(max(0.0, 2 * math.cos(2 * th)))]

    opts = {"limit": 200, "epsabs": 1e-12}
    quarter = [-math.pi / 4, math.pi / 4]
    lobes = 2 * nquad(alt, [edge, quarter], opts=opts)[0]
    # conserved formula over the whole plane minus its lobe part
    whole = nquad(cons, [[0, 12], [0, 2 * math.pi]], opts=opts)[0]
    ovals = whole - 2 * nquad(cons, [edge, quarter], opts=opts)[0]
    return lobes / (lobes + ovals)


def test_fraction_converges_to_full_plane_value():
    fld = P.density_field(S1, GridSpec.parse("-8:8:1600,-8:8:1600"))
    _, frac = P.normalize_and_fraction(fld)
    assert frac == pytest.approx(full_plane_fraction_by_quadrature(), abs=2e-4)


def test_normalize_and_fraction():
    fld = P.density_field(S1, GridSpec.parse("-4:4:400,-1.5:1.5:150"))
    norm, frac = P.normalize_and_fraction(fld)
    assert fld.normalization == norm and fld.fraction_inside == frac
    assert np.nansum(fld.values) * fld.grid.cell_area == pytest.approx(1.0, abs=1e-12)
    assert 0.4 < frac < 0.5
    fld0 = P.density_field(S0, GridSpec.parse("-4:4:200,-3:3:150"))
    assert P.normalize_and_fraction(fld0)[1] == 0.0


def test_field_errors():
    with pytest.raises(GridTooCoarse):
        P.density_field(S1, GridSpec.parse("-4:4:100,-1.5:1.5:60"))
    with pytest.raises(UnsupportedState):
        P.density_field(OscillatorEigenstate(5), GridSpec.parse("-4:4:100,-1.5:1.5:600"))
    with pytest.raises(UnsupportedState):
        P.density_field(FreeParticle(1.0), GridSpec.parse("-4:4:100,-1.5:1.5:600"))
    small = P.density_field(S1, GridSpec.parse("-3:3:100,-1:1:100"))
    with pytest.raises(GridTooCoarse):
        P.normalize_and_fraction(small)
    fld = P.density_field(S1, GridSpec.parse("-4:4:100,-1.5:1.5:150"))
    fld.values[3, 3] = np.inf
    with pytest.raises(NotFinite):
        P.normalize_and_fraction(fld)


def test_excluded_cells_near_foci():
    # 101 cells per unit on [-4.5, 4.5] puts centres on the node 0 and the foci +-1
    fld = P.density_field(S1, GridSpec.parse("-4.5:4.5:909,-1.5:1.5:151"))
    excluded = fld.labels == RegionLabel.EXCLUDED
    assert excluded.sum() == 3
    assert np.all(np.isnan(fld.values[excluded]))
    norm, frac = P.normalize_and_fraction(fld)
    assert math.isfinite(norm) and 0 < frac < 1


# --------------------------------------------------------------------------
# widths


def level_set_width(n):
    """Largest Im X on {Phi >= Phi(node)} for the lowest node level, by
    root-finding on vertical lines (no trajectory integration)."""
    s = OscillatorEigenstate(n)
    level = min(float(orbit_invariant(s, a)) for a in list_nodes(s, (-10, 10, -1, 1)))

    def top(xr):
        ys = np.linspace(1e-6, 1.0, 2001)
        inside = orbit_invariant(s, xr + 1j * ys) >= level
        if not inside.any():
            return 0.0
        k = np.flatnonzero(inside)[-1]
        if k == len(ys) - 1:
            return ys[-1]
        return brentq(lambda y: orbit_invariant(s, xr + 1j * y) - level, ys[k], ys[k + 1], xtol=1e-13)

    reach = math.sqrt(2 * n + 1) + 1
    xs = np.linspace(0, reach, 801)
    tops = [top(x) for x in xs]
    k = int(np.argmax(tops))
    res = minimize_scalar(lambda x: -top(x), bounds=(xs[max(k - 1, 0)], xs[min(k + 1, 800)]), method="bounded", options={"xatol": 1e-10})
    return -res.fun


def test_lemniscate_width_n1():
    assert P.lemniscate_width(1) == pytest.approx(0.5, abs=1e-9)
    assert P.lemniscate_width(1, lower=True) == pytest.approx(-0.5, abs=1e-9)
    assert P.lemniscate_width(S1) == P.lemniscate_width(1)
    with pytest.raises(DomainError):
        P.lemniscate_width(0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_separatrix_width_matches_level_set(n):
    assert P.lemniscate_width(n) == pytest.approx(level_set_width(n), abs=1e-5)
    assert P.lemniscate_width(n, lower=True) == pytest.approx(-P.lemniscate_width(n), abs=1e-8)


def test_widths_decrease():
    w = [P.lemniscate_width(n) for n in range(1, 5)]
    assert all(a > b for a, b in zip(w, w[1:]))


def test_classical_width():
    assert P.classical_width(PhysicalScale(1.0, 1.0), 0.4858) == pytest.approx(4.99e-18, rel=1e-3)
    assert P.classical_width(PhysicalScale.electron(1.0), 1.0) == pytest.approx(1.076e-2, rel=1e-3)
    assert P.classical_width(PhysicalScale(2.0, 3.0), 0.0) == 0.0

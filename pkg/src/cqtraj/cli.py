"""Batch command-line front end.

    cqtraj trajectory --state sho:1 --cassinian-b 0.5,1,2 --out runs/fig1
    cqtraj density    --state sho:1 --grid -4:4:800,-1.5:1.5:300
    cqtraj born       --state sho:1 --range -4:4:801
    cqtraj classical  --mass 1 --omega 1
    cqtraj verify     --suite born,cassinian

Flags override values from ``--config file.json`` (keys are flag names with
underscores).  Exit codes: 0 success, 1 verification failure, 2 bad
configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import export, probability, verify
from .errors import CQTError, DomainError, NumericalError, PoleEncountered
from .probability import GridSpec, REFERENCE_FRACTION_N1, REFERENCE_WIDTH_N1
from .trajectory import integrate
from .wavefunction import ComplexPoint, OscillatorEigenstate, PhysicalScale, list_nodes, parse_state

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULTS = {
    "state": "sho:1",
    "out": "out",
    "format": "csv,json,svg",
    "tol": None,
    "seed": None,
    "cassinian_b": None,
    "t_end": None,
    "grid": verify.FRACTION_GRID,
    "range": "-4:4:801",
    "mass": None,
    "omega": None,
    "electron": False,
    "x_i_max": None,
    "suite": None,
}
FORMATS = {"csv", "json", "svg"}
# seeds on the separatrix need a tighter tolerance to follow it through the node
SEPARATRIX_TOL = verify.SEPARATRIX_TOL


class ConfigError(DomainError):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="cqtraj", description="Complex quantum trajectories and extended densities.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol_help="relative tolerance"):
        sp.add_argument("--config", help="JSON file with default values for the flags")
        sp.add_argument("--out", default=None, help="output directory (default: out)")
        sp.add_argument("--format", default=None, help="comma list from csv,json,svg")
        sp.add_argument("--tol", type=float, default=None, help=tol_help)

    sp = sub.add_parser("trajectory", help="integrate trajectories and write CSV/JSON/SVG")
    common(sp, "integrator relative tolerance (default 1e-9)")
    sp.add_argument("--state", default=None)
    sp.add_argument("--seed", action="append", default=None, help="complex start point, e.g. 1+0.2i (repeatable)")
    sp.add_argument("--cassinian-b", dest="cassinian_b", default=None, help="comma list of b values (n=1 only)")
    sp.add_argument("--t-end", dest="t_end", type=float, default=None, help="fixed duration instead of one period")

    sp = sub.add_parser("density", help="combined extended density on a grid")
    common(sp)
    sp.add_argument("--state", default=None)
    sp.add_argument("--grid", default=None, help="re_min:re_max:cells,im_min:im_max:cells")

    sp = sub.add_parser("born", help="Born density reconstructed from the velocity field")
    common(sp)
    sp.add_argument("--state", default=None)
    sp.add_argument("--range", default=None, help="min:max:points on the real axis")

    sp = sub.add_parser("classical", help="separatrix width in metres")
    common(sp)
    sp.add_argument("--mass", type=float, default=None, help="kg")
    sp.add_argument("--omega", type=float, default=None, help="rad/s")
    sp.add_argument("--electron", action="store_true", default=None, help="use the electron mass")
    sp.add_argument("--x-i-max", dest="x_i_max", type=float, default=None, help="dimensionless width (default: computed n=1 value)")

    sp = sub.add_parser("verify", help="run the verification suites")
    common(sp, "override every suite tolerance")
    sp.add_argument("--suite", default=None, help="comma list of suites: " + ",".join(verify.SUITES))
    return p


def _resolve(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if value is not None and key != "config":
            cfg[key] = value
    formats = {f.strip() for f in str(cfg["format"]).split(",") if f.strip()}
    if not formats <= FORMATS:
        raise ConfigError(f"unknown formats {sorted(formats - FORMATS)}")
    cfg["formats"] = formats
    if cfg["tol"] is not None and not (cfg["tol"] > 0 and math.isfinite(cfg["tol"])):
        raise ConfigError("--tol must be positive")
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, str):
        return [v for v in value.split(",") if v.strip()]
    return list(value)


# --------------------------------------------------------------------------
# commands


def cmd_trajectory(cfg) -> int:
    state = parse_state(cfg["state"])
    rel_tol = cfg["tol"] if cfg["tol"] is not None else 1e-9
    seeds = []
    for text in _as_list(cfg["seed"]):
        seeds.append((str(text), complex(ComplexPoint.parse(str(text))), rel_tol))
    b_values = [float(b) for b in _as_list(cfg["cassinian_b"])]
    if b_values:
        if not (isinstance(state, OscillatorEigenstate) and state.n == 1):
            raise ConfigError("--cassinian-b needs --state sho:1")
        for b in b_values:
            if not b > 0:
                raise ConfigError(f"b must be positive, got {b}")
            tol = min(rel_tol, SEPARATRIX_TOL) if b == 1.0 else rel_tol
            seeds.append((f"b={b:g}", complex(math.sqrt(1.0 + b)), tol))
    if not seeds:
        raise ConfigError("give --seed or --cassinian-b")
    out = _outdir(cfg)

    trajectories = []
    for i, (label, x0, tol) in enumerate(seeds):
        try:
            if cfg["t_end"] is not None:
                traj = integrate(state, x0, t_end=float(cfg["t_end"]), rel_tol=tol)
            else:
                traj = integrate(state, x0, until_closure=True, rel_tol=tol)
        except PoleEncountered as exc:
            raise PoleEncountered(f"seed {label}: {exc}", point=exc.point) from None
        except NumericalError as exc:
            raise type(exc)(f"seed {label}: {exc}") from None
        trajectories.append(traj)
        stem = out / f"trajectory_{i:02d}"
        meta = export.trajectory_meta(traj)
        meta["seed"] = label
        meta["closest_approach_to_origin"] = float(np.min(np.abs(traj.x)))
        if "csv" in cfg["formats"]:
            export.write_trajectory_csv(stem.with_suffix(".csv"), traj)
        if "json" in cfg["formats"]:
            export.write_json(stem.with_suffix(".json"), meta)
        period = f"{traj.period:.12g}" if traj.closed else "open"
        print(f"{label}: samples={len(traj)} closed={traj.closed} period={period}")
    if "svg" in cfg["formats"]:
        markers = list_nodes(state) if isinstance(state, OscillatorEigenstate) else []
        export.trajectories_svg(out / "trajectories.svg", trajectories, markers)
    return EXIT_OK


def separatrix_curves(state: OscillatorEigenstate):
    if state.n == 0:
        return []
    if state.n == 1:
        theta = np.linspace(-math.pi / 4, math.pi / 4, 801)
        r = np.sqrt(np.maximum(0.0, 2.0 * np.cos(2.0 * theta)))
        right = r * np.exp(1j * theta)
        return [right, -right]
    curves = []
    for a in list_nodes(state, (-50, 50, -1, 1)):
        for sign in (1, -1):
            traj = integrate(state, a + sign * probability.SEPARATRIX_OFFSET * 1j, t_end=2 * math.pi, rel_tol=1e-10, on_pole="stop")
            curves.append(traj.x)
    return curves


def cmd_density(cfg) -> int:
    state = parse_state(cfg["state"])
    grid = GridSpec.parse(str(cfg["grid"]))
    fld = probability.density_field(state, grid)
    probability.normalize_and_fraction(fld)
    fld.meta["recipe"] = (
        "Alt cells (orbits enclosing no node): |psi(X)|^2; Conserved cells: "
        "P(x_c)|v(x_c)|^2/|v(X)|^2 with x_c the orbit's rightmost real crossing; "
        "midpoint sum over cell centres"
    )
    if isinstance(state, OscillatorEigenstate) and state.n == 1:
        fld.meta["reference_fraction"] = REFERENCE_FRACTION_N1
        fld.meta["full_plane_fraction"] = verify.full_plane_fraction()
    out = _outdir(cfg)
    if "csv" in cfg["formats"]:
        export.write_density_csv(out / "density.csv", fld)
    if "json" in cfg["formats"]:
        export.write_json(out / "density.json", export.density_header(fld))
    if "svg" in cfg["formats"]:
        export.density_svg(out / "density.svg", fld, separatrix_curves(state))
    print(f"normalization={fld.normalization:.12g} fraction_inside={fld.fraction_inside:.6f}")
    return EXIT_OK


def _parse_range(text):
    try:
        lo, hi, count = str(text).split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigError(f"bad range {text!r}; expected min:max:points") from None
    if not (hi > lo and count >= 2):
        raise ConfigError("range needs min < max and at least 2 points")
    return np.linspace(lo, hi, count)


def cmd_born(cfg) -> int:
    state = parse_state(cfg["state"])
    grid = _parse_range(cfg["range"])
    if isinstance(state, OscillatorEigenstate):
        grid = probability.exclude_nodes(state, grid)
    profile = probability.born_density(state, grid)
    reference = np.abs(state.psi(profile.x)) ** 2
    reference = reference / probability.trapezoid(reference, profile.x)
    deviation = float(np.max(np.abs(profile.values / reference - 1.0)))
    out = _outdir(cfg)
    if "csv" in cfg["formats"]:
        export.write_born_csv(out / "born.csv", profile, reference)
    if "json" in cfg["formats"]:
        export.write_json(
            out / "born.json",
            {
                "state": state.descriptor,
                "range": str(cfg["range"]),
                "points": len(profile.x),
                "normalization": profile.normalization,
                "max_relative_deviation": deviation,
            },
        )
    if "svg" in cfg["formats"]:
        export.born_svg(out / "born.svg", profile, reference)
    print(f"points={len(profile.x)} max_relative_deviation={deviation:.3e}")
    return EXIT_OK


def cmd_classical(cfg) -> int:
    if cfg["omega"] is None:
        raise ConfigError("--omega is required")
    if cfg["electron"]:
        scale = PhysicalScale.electron(float(cfg["omega"]))
    else:
        if cfg["mass"] is None:
            raise ConfigError("give --mass or --electron")
        scale = PhysicalScale(float(cfg["mass"]), float(cfg["omega"]))
    width = probability.lemniscate_width(1) if cfg["x_i_max"] is None else float(cfg["x_i_max"])
    report = {
        "mass": scale.mass,
        "omega0": scale.omega0,
        "hbar": scale.hbar,
        "X_i_max": width,
        "x_i_max_m": probability.classical_width(scale, width),
        "reference_X_i_max": REFERENCE_WIDTH_N1,
        "reference_x_i_max_m": probability.classical_width(scale, REFERENCE_WIDTH_N1),
    }
    for key, value in report.items():
        print(f"{key} = {value:.6g}")
    if "json" in cfg["formats"]:
        export.write_json(_outdir(cfg) / "classical.json", report)
    return EXIT_OK


def cmd_verify(cfg) -> int:
    names = [s.strip() for s in _as_list(cfg["suite"])]
    unknown = [s for s in names if s not in verify.SUITES]
    if unknown:
        raise ConfigError(f"unknown suites: {', '.join(unknown)}")
    results = verify.run(names or None, cfg["tol"])
    payload = verify.report(results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.2f} s)")
        for c in r.checks:
            print(f"    {'ok ' if c['passed'] else 'BAD'} {c['check']}: {c['measured']} (tol {c['tolerance']})")
    if "json" in cfg["formats"]:
        export.write_json(_outdir(cfg) / "verify.json", payload)
    if payload["failing"]:
        print("failing suites: " + ", ".join(payload["failing"]))
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "trajectory": cmd_trajectory,
    "density": cmd_density,
    "born": cmd_born,
    "classical": cmd_classical,
    "verify": cmd_verify,
}


_VALUE_FLAGS = ("--grid", "--range", "--seed", "--cassinian-b")
_NEGATIVE = re.compile(r"-[\d.]")


def _join_negative_values(argv):
    """Let ``--grid -3:3:600,...`` through argparse, which would otherwise
    read the leading minus as an option."""
    out, i = [], 0
    while i < len(argv):
        arg = argv[i]
        if arg in _VALUE_FLAGS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{arg}={argv[i + 1]}")
            i += 2
            continue
        out.append(arg)
        i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = _parser().parse_args(_join_negative_values(argv))
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except DomainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CQTError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

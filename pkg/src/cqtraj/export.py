"""CSV / JSON / SVG writers.

CSV is the record of every result; floats are written with 17 significant
digits and rows in a fixed order so identical runs give identical bytes.
SVGs are hand-written convenience plots.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .probability import BornProfile, DensityField, RegionLabel
from .trajectory import Trajectory

LABEL_NAMES = {RegionLabel.CONSERVED: "Conserved", RegionLabel.ALT: "Alt", RegionLabel.EXCLUDED: "Excluded"}


def fmt(value) -> str:
    return format(float(value), ".17g")


def _write_rows(path, header, columns):
    lines = [header]
    lines.extend(",".join(row) for row in zip(*columns))
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt_column(values):
    return [fmt(v) for v in np.asarray(values, dtype=float).tolist()]


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")


# --------------------------------------------------------------------------
# trajectories


def trajectory_meta(traj: Trajectory) -> dict:
    return {
        "state": traj.state.descriptor,
        "x0": [traj.x0.real, traj.x0.imag],
        "t0": traj.t0,
        "rel_tol": traj.rel_tol,
        "samples": len(traj),
        "closed": traj.closed,
        "period": traj.period,
        "stagnation": traj.stagnation,
        "crossings": [{"t": t, "x_r": x} for t, x in traj.crossings],
        "winding": [{"node": [z.real, z.imag], "winding": w} for z, w in traj.winding.items()],
    }


def write_trajectory_csv(path, traj: Trajectory):
    _write_rows(
        path,
        "t,x_re,x_im,v_re,v_im",
        [_fmt_column(traj.t), _fmt_column(traj.x.real), _fmt_column(traj.x.imag), _fmt_column(traj.v.real), _fmt_column(traj.v.imag)],
    )


# --------------------------------------------------------------------------
# density fields and Born profiles


def density_header(fld: DensityField) -> dict:
    counts = {LABEL_NAMES[RegionLabel(k)]: int(np.sum(fld.labels == k)) for k in RegionLabel}
    return {
        "state": fld.state.descriptor,
        "grid": str(fld.grid),
        "normalization": fld.normalization,
        "fraction_inside": fld.fraction_inside,
        "cell_counts": counts,
        **fld.meta,
    }


def write_density_csv(path, fld: DensityField):
    xr, xi = fld.grid.centres()
    XR, XI = np.meshgrid(xr, xi, indexing="ij")
    labels = [LABEL_NAMES[RegionLabel(k)] for k in fld.labels.ravel().tolist()]
    _write_rows(
        path,
        "x_re,x_im,rho,label",
        [_fmt_column(XR.ravel()), _fmt_column(XI.ravel()), _fmt_column(fld.values.ravel()), labels],
    )


def write_born_csv(path, profile: BornProfile, reference=None):
    columns = [_fmt_column(profile.x), _fmt_column(profile.values)]
    header = "x_r,P"
    if reference is not None:
        columns.append(_fmt_column(reference))
        header += ",abs_psi_sq"
    _write_rows(path, header, columns)


# --------------------------------------------------------------------------
# SVG


class _Frame:
    """Maps plane coordinates to SVG pixels (y up)."""

    def __init__(self, re_min, re_max, im_min, im_max, width=800, pad=40):
        self.re_min, self.im_max = re_min, im_max
        span_re, span_im = re_max - re_min, im_max - im_min
        self.scale = (width - 2 * pad) / span_re
        self.pad = pad
        self.width = width
        self.height = int(round(span_im * self.scale + 2 * pad))

    def px(self, z):
        return self.pad + (z.real - self.re_min) * self.scale, self.pad + (self.im_max - z.imag) * self.scale

    def open(self):
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>\n'
        )

    def axes(self):
        x0, y0 = self.px(complex(self.re_min, 0.0))
        x1, _ = self.px(complex(self.re_min + (self.width - 2 * self.pad) / self.scale, 0.0))
        return f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}" stroke="#999" stroke-width="0.5"/>\n'

    def polyline(self, z, colour, width=1.0, max_points=4000):
        z = np.asarray(z)
        if len(z) > max_points:
            z = z[np.linspace(0, len(z) - 1, max_points).astype(int)]
        pts = " ".join("{:.2f},{:.2f}".format(*self.px(p)) for p in z)
        return f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="{width}"/>\n'


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def trajectories_svg(path, trajectories, markers=()):
    xs = np.concatenate([t.x for t in trajectories])
    pad = 0.1 * max(1.0, float(np.ptp(xs.real)), float(np.ptp(xs.imag)))
    frame = _Frame(xs.real.min() - pad, xs.real.max() + pad, xs.imag.min() - pad, xs.imag.max() + pad)
    parts = [frame.open(), frame.axes()]
    for i, traj in enumerate(trajectories):
        parts.append(frame.polyline(traj.x, _PALETTE[i % len(_PALETTE)]))
    for z in markers:
        x, y = frame.px(complex(z))
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="black"/>\n')
    parts.append("</svg>\n")
    Path(path).write_text("".join(parts))


def _colour(u):
    # white -> dark blue
    u = min(1.0, max(0.0, u))
    r = int(round(255 * (1 - 0.9 * u)))
    g = int(round(255 * (1 - 0.7 * u)))
    b = int(round(255 - 90 * u))
    return f"#{r:02x}{g:02x}{b:02x}"


def density_svg(path, fld: DensityField, curves=(), max_cells=(200, 100)):
    g = fld.grid
    frame = _Frame(g.re_min, g.re_max, g.im_min, g.im_max)
    step_r = max(1, math.ceil(g.n_re / max_cells[0]))
    step_i = max(1, math.ceil(g.n_im / max_cells[1]))
    values = np.where(np.isfinite(fld.values), fld.values, 0.0)
    top = float(values.max()) or 1.0
    w = step_r * g.d_re * frame.scale
    h = step_i * g.d_im * frame.scale
    parts = [frame.open()]
    for i in range(0, g.n_re, step_r):
        for j in range(0, g.n_im, step_i):
            block = values[i : i + step_r, j : j + step_i]
            corner = complex(g.re_min + i * g.d_re, g.im_min + (j + step_i) * g.d_im)
            x, y = frame.px(corner)
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{_colour(block.mean() / top)}"/>\n'
            )
    parts.append(frame.axes())
    for curve in curves:
        parts.append(frame.polyline(curve, "#d62728", 1.2))
    parts.append("</svg>\n")
    Path(path).write_text("".join(parts))


def born_svg(path, profile: BornProfile, reference=None):
    x, p = profile.x, profile.values
    top = float(max(p.max(), reference.max() if reference is not None else 0.0)) or 1.0
    frame = _Frame(float(x[0]), float(x[-1]), -0.05 * top * 4, 1.05 * top * 4)
    parts = [frame.open(), frame.axes()]
    if reference is not None:
        parts.append(frame.polyline(x + 4j * reference, "#999", 3.0))
    parts.append(frame.polyline(x + 4j * p, "#1f77b4", 1.0))
    parts.append("</svg>\n")
    Path(path).write_text("".join(parts))

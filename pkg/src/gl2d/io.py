"""Snapshot, checkpoint and report file formats.

* Field snapshots: text CSV, one line per lattice entry, %.17g floats (exact
  float64 round trip), header carrying (nx, ny, Lx, Ly, layout tag).
* State checkpoints: compressed npz with the raw arrays plus solver options
  and seed, for bit-identical resume.
* Frame dumps: npz with the rescaled fields and frame metadata.

Every text artifact starts with a provenance header: tool version, config
hash, seed.  No timestamps anywhere, so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict

import numpy as np

from . import __version__
from .errors import ConfigError
from .grid import EdgeField, Grid
from .solver import GLState, SolveOptions

_LAYOUTS = ("node", "xedge", "yedge", "cell")


def config_hash(obj) -> str:
    """Stable short hash of a JSON-representable configuration."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance_lines(cfg_hash: str, seed) -> list[str]:
    return [f"# gl2d {__version__}", f"# config {cfg_hash}", f"# seed {seed}"]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def save_field_csv(path, grid: Grid, values, layout: str, cfg_hash="-", seed="-"):
    values = np.asarray(values)
    if layout not in _LAYOUTS:
        raise ConfigError(f"unknown layout {layout!r}")
    expected = {"node": grid.node_shape, "xedge": grid.xedge_shape,
                "yedge": grid.yedge_shape, "cell": grid.cell_shape}[layout]
    if values.shape != expected:
        raise ConfigError(f"{layout} field shape {values.shape} != {expected}")
    cplx = np.iscomplexobj(values)
    with open(path, "w") as f:
        for line in provenance_lines(cfg_hash, seed):
            f.write(line + "\n")
        f.write(f"# field nx={grid.nx} ny={grid.ny} Lx={_fmt(grid.Lx)} "
                f"Ly={_fmt(grid.Ly)} layout={layout} complex={int(cplx)}\n")
        f.write("i,j," + ("re,im" if cplx else "value") + "\n")
        for i in range(values.shape[0]):
            for j in range(values.shape[1]):
                v = values[i, j]
                if cplx:
                    f.write(f"{i},{j},{_fmt(v.real)},{_fmt(v.imag)}\n")
                else:
                    f.write(f"{i},{j},{_fmt(v)}\n")


def load_field_csv(path):
    """Returns (grid, values, layout)."""
    meta = None
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line.startswith("# field "):
                meta = dict(kv.split("=") for kv in line[len("# field "):].split())
            elif line.startswith("#") or not line or line.startswith("i,j"):
                continue
            else:
                rows.append(line.split(","))
    if meta is None:
        raise ConfigError(f"{path}: missing field header")
    grid = Grid(int(meta["nx"]), int(meta["ny"]), float(meta["Lx"]), float(meta["Ly"]),
                allow_anisotropic=True)
    layout = meta["layout"]
    cplx = bool(int(meta["complex"]))
    shape = {"node": grid.node_shape, "xedge": grid.xedge_shape,
             "yedge": grid.yedge_shape, "cell": grid.cell_shape}[layout]
    out = np.zeros(shape, dtype=complex if cplx else float)
    for r in rows:
        i, j = int(r[0]), int(r[1])
        out[i, j] = complex(float(r[2]), float(r[3])) if cplx else float(r[2])
    return grid, out, layout


def save_state(path, state: GLState, opts: SolveOptions | None = None, extra=None):
    """Binary checkpoint; exact arrays, options as JSON."""
    meta = {"opts": asdict(opts) if opts is not None else None, "extra": extra or {}}
    np.savez_compressed(
        path, psi=state.psi, ax=state.A.ax, ay=state.A.ay,
        kappa=state.kappa, H=state.H,
        nx=state.grid.nx, ny=state.grid.ny, Lx=state.grid.Lx, Ly=state.grid.Ly,
        aniso=state.grid.allow_anisotropic,
        meta=json.dumps(meta, sort_keys=True, default=str))


def load_state(path):
    """Returns (state, meta dict)."""
    z = np.load(path, allow_pickle=False)
    grid = Grid(int(z["nx"]), int(z["ny"]), float(z["Lx"]), float(z["Ly"]),
                allow_anisotropic=bool(z["aniso"]))
    state = GLState(grid, z["psi"], EdgeField(z["ax"], z["ay"]),
                    float(z["kappa"]), float(z["H"]))
    return state, json.loads(str(z["meta"]))


def save_frame(path, frame):
    np.savez_compressed(
        path, phi=frame.phi, ax=frame.a.ax, ay=frame.a.ay,
        fx=frame.F_lin.ax, fy=frame.F_lin.ay, M=frame.M,
        nx=frame.grid.nx, ny=frame.grid.ny, Lx=frame.grid.Lx, Ly=frame.grid.Ly,
        meta=json.dumps({
            "P": list(frame.P), "case": frame.case, "S": frame.S,
            "Lam": frame.Lam, "R": frame.R, "z_index": list(frame.z_index),
            "origin": list(frame.origin), "wall_axes": list(frame.wall_axes),
        }, sort_keys=True))


def load_frame(path):
    from .blowup import BlowupFrame
    z = np.load(path, allow_pickle=False)
    meta = json.loads(str(z["meta"]))
    grid = Grid(int(z["nx"]), int(z["ny"]), float(z["Lx"]), float(z["Ly"]),
                allow_anisotropic=True)
    return BlowupFrame(
        P=tuple(meta["P"]), case=meta["case"], S=meta["S"], Lam=meta["Lam"],
        R=meta["R"], grid=grid, phi=z["phi"], a=EdgeField(z["ax"], z["ay"]),
        F_lin=EdgeField(z["fx"], z["fy"]), M=z["M"],
        z_index=tuple(meta["z_index"]), origin=tuple(meta["origin"]),
        valid=None, wall_axes=tuple(meta["wall_axes"]))

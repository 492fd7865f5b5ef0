"""Result serialization: CSV (canonical machine format) and legacy ASCII VTK.

A frame is the per-particle state at one schedule time: reference position,
displacement, dilatation theta, peridynamic pressure p, pore pressure pf, and
a tag bitmask (bit k set means membership in the k-th declared tag). Floats
are written with 17 significant digits (``%.17g``) so a write/read cycle
reproduces every IEEE double bit-exactly; exact zeros print as ``0``. Files
contain no timestamps or wall-times, so identical runs produce identical
bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .discretization import ParticleSet
from .errors import ConfigurationError

CSV_HEADER = "id,x0,x1,x2,u0,u1,u2,theta,p,pf,tags"


def _fmt(value: float) -> str:
    return "%.17g" % value


@dataclass
class ResultFrame:
    """Per-particle state at one schedule time."""

    time: float
    positions: np.ndarray       # (n, 3) reference coordinates
    displacement: np.ndarray    # (n, 3)
    theta: np.ndarray           # (n,)
    pressure: np.ndarray        # (n,) peridynamic pressure
    pore_pressure: np.ndarray   # (n,)
    tag_bits: np.ndarray        # (n,) int64 membership bitmask
    tag_names: list[str] = dc_field(default_factory=list)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


def tag_bitmask(particles: ParticleSet) -> tuple[np.ndarray, list[str]]:
    """Tag membership packed into one integer per particle, bit k for the k-th
    declared tag (declaration order)."""
    names = list(particles.tags)
    if len(names) > 63:
        raise ConfigurationError(f"cannot pack {len(names)} tags into a 64-bit bitmask")
    bits = np.zeros(particles.n, dtype=np.int64)
    for k, name in enumerate(names):
        bits[particles.tags[name]] |= np.int64(1 << k)
    return bits, names


def make_frame(particles: ParticleSet, time: float, displacement: np.ndarray,
               theta: np.ndarray, pressure: np.ndarray,
               pore_pressure: np.ndarray | None = None) -> ResultFrame:
    bits, names = tag_bitmask(particles)
    n = particles.n
    if pore_pressure is None:
        pore_pressure = np.zeros(n)
    return ResultFrame(time=float(time), positions=particles.positions,
                       displacement=np.asarray(displacement, dtype=float).reshape(n, 3),
                       theta=np.asarray(theta, dtype=float).reshape(n),
                       pressure=np.asarray(pressure, dtype=float).reshape(n),
                       pore_pressure=np.asarray(pore_pressure, dtype=float).reshape(n),
                       tag_bits=bits, tag_names=names)


def write_csv(frame: ResultFrame, path: str) -> None:
    lines = [CSV_HEADER]
    x, u = frame.positions, frame.displacement
    for i in range(frame.n):
        lines.append(",".join((
            str(i),
            _fmt(x[i, 0]), _fmt(x[i, 1]), _fmt(x[i, 2]),
            _fmt(u[i, 0]), _fmt(u[i, 1]), _fmt(u[i, 2]),
            _fmt(frame.theta[i]), _fmt(frame.pressure[i]),
            _fmt(frame.pore_pressure[i]), str(int(frame.tag_bits[i])))))
    _write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str) -> ResultFrame:
    """Read a frame back; float columns reproduce the written doubles
    bit-exactly. Tag names are not stored in the file, only the bitmask."""
    with open(path, "r", encoding="ascii") as handle:
        header = handle.readline().strip()
        if header != CSV_HEADER:
            raise ConfigurationError(
                f"{path}: unexpected CSV header {header!r} (expected {CSV_HEADER!r})")
        rows = [line.strip().split(",") for line in handle if line.strip()]
    n = len(rows)
    positions = np.empty((n, 3))
    displacement = np.empty((n, 3))
    theta = np.empty(n)
    pressure = np.empty(n)
    pore = np.empty(n)
    bits = np.empty(n, dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != 11:
            raise ConfigurationError(f"{path}: row {i} has {len(row)} fields, expected 11")
        positions[i] = [float(row[1]), float(row[2]), float(row[3])]
        displacement[i] = [float(row[4]), float(row[5]), float(row[6])]
        theta[i] = float(row[7])
        pressure[i] = float(row[8])
        pore[i] = float(row[9])
        bits[i] = int(row[10])
    return ResultFrame(time=0.0, positions=positions, displacement=displacement,
                       theta=theta, pressure=pressure, pore_pressure=pore,
                       tag_bits=bits)


def write_vtk(frame: ResultFrame, path: str, title: str = "peripore results") -> None:
    """Legacy ASCII VTK POLYDATA: one vertex per particle with displacement as
    a vector field and theta/p/pf/tags as point scalars."""
    n = frame.n
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET POLYDATA",
             f"POINTS {n} double"]
    x = frame.positions
    for i in range(n):
        lines.append(f"{_fmt(x[i, 0])} {_fmt(x[i, 1])} {_fmt(x[i, 2])}")
    lines.append(f"VERTICES {n} {2 * n}")
    for i in range(n):
        lines.append(f"1 {i}")
    lines.append(f"POINT_DATA {n}")
    lines.append("VECTORS displacement double")
    u = frame.displacement
    for i in range(n):
        lines.append(f"{_fmt(u[i, 0])} {_fmt(u[i, 1])} {_fmt(u[i, 2])}")
    for name, values in (("theta", frame.theta), ("p", frame.pressure),
                         ("pf", frame.pore_pressure)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_fmt(v) for v in values)
    lines.append("SCALARS tags long 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(b)) for b in frame.tag_bits)
    _write_text(path, "\n".join(lines) + "\n")


def write_results(frames: list[ResultFrame], out_dir: str, name: str,
                  formats: tuple[str, ...] = ("csv",)) -> list[str]:
    """One file per frame and format, with zero-padded step suffixes."""
    os.makedirs(out_dir, exist_ok=True)
    width = max(4, len(str(max(len(frames) - 1, 0))))
    paths = []
    for step, frame in enumerate(frames):
        stem = f"{name}_{step:0{width}d}"
        if "csv" in formats:
            path = os.path.join(out_dir, stem + ".csv")
            write_csv(frame, path)
            paths.append(path)
        if "vtk" in formats:
            path = os.path.join(out_dir, stem + ".vtk")
            write_vtk(frame, path, title=stem)
            paths.append(path)
    return paths


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise IOError(f"cannot write {path}: directory {parent} does not exist")
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write(text)

"""File formats: 8-bit graymap carpets, trajectory CSV, flat key = value text."""
from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Dict, Iterable, Tuple

import numpy as np

from .analysis import CarpetRaster

TRAJECTORY_COLUMNS = ("traj_id", "slit_index", "t", "x_over_d", "z_over_2zT", "vx_over_vz")


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "%.10g" % (value + 0.0)
    return str(value)


def write_kv(path, items: Dict[str, object]):
    """Write ``key = value`` lines via a temporary file and an atomic rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {fmt(v)}\n")
    os.replace(tmp, path)


def read_kv(path) -> Dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def write_pgm(path, raster: CarpetRaster):
    """Binary P5 graymap; rows run from the smallest z downward."""
    data = np.clip(np.rint(raster.values * 255.0), 0, 255).astype(np.uint8)
    nz, nx = data.shape
    head = ["P5"]
    head += [f"# {k} = {v}" for k, v in raster.header().items()]
    head += ["# row_order = z_ascending", f"{nx} {nz}", "255"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(head) + "\n").encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> Tuple[Dict[str, str], np.ndarray]:
    """Return the comment header and the pixel values scaled to [0, 1]."""
    raw = Path(path).read_bytes()
    pos = 0
    tokens = []
    header: Dict[str, str] = {}
    while len(tokens) < 4:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key.strip()] = value.strip()
            continue
        tokens.extend(line.split())
    if tokens[0] != "P5":
        raise ValueError(f"{path}: not a binary graymap")
    nx, nz, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pix = np.frombuffer(raw, dtype=np.uint8, count=nx * nz, offset=pos).reshape(nz, nx)
    return header, pix.astype(float) / maxval


def raster_axes(header: Dict[str, str]):
    nx, nz = int(header["nx"]), int(header["nz"])
    x = np.linspace(float(header["x_min"]), float(header["x_max"]), nx)
    z = np.linspace(float(header["z_min"]), float(header["z_max"]), nz)
    return x, z


def write_trajectories(path, rows: Iterable[Tuple]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")


def read_trajectories(path):
    import csv

    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [dict(r) for r in reader]


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_frame(directory, index: int, density, phase):
    """Density then phase, float64 little-endian, C order (nx, nz)."""
    path = Path(directory) / f"frame_{index:05d}.bin"
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(density, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(phase, dtype="<f8").tobytes())
    return path


def read_frame(path, nx: int, nz: int):
    data = np.fromfile(path, dtype="<f8")
    return data[: nx * nz].reshape(nx, nz), data[nx * nz:].reshape(nx, nz)

"""Atomic writers for run artifacts: series CSV, radius fields, OBJ meshes, JSON."""

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def write_atomic(path, text):
    """Write ``text`` to a temporary file in the target directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def jsonable(obj):
    """Plain JSON types; numpy scalars are unwrapped and non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def json_text(obj):
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    return write_atomic(path, json_text(obj))


def write_series(path, series):
    return write_atomic(path, series.to_csv())


def field_text(grid, rho):
    lines = ["theta,phi,rho"]
    for j, th in enumerate(grid.theta):
        for i, ph in enumerate(grid.phi):
            lines.append(f"{th:.17g},{ph:.17g},{rho[j, i]:.17g}")
    return "\n".join(lines) + "\n"


def write_field(path, grid, rho):
    """One ``theta,phi,rho`` row per node, theta-major."""
    return write_atomic(path, field_text(grid, np.asarray(rho)))


def read_field(path, grid):
    """Read a file written by :func:`write_field`; node angles must match ``grid``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.size, 3):
        raise ValueError(f"{path}: expected {grid.size} rows of theta,phi,rho, got {data.shape[0]}")
    th = data[:, 0].reshape(grid.shape)
    ph = data[:, 1].reshape(grid.shape)
    if not (np.allclose(th, grid.theta2d, atol=1e-12) and np.allclose(ph, grid.phi2d, atol=1e-12)):
        raise ValueError(f"{path}: node angles do not match the configured grid")
    return data[:, 2].reshape(grid.shape).copy()


def mesh(grid, rho, n_phi_axisym=64):
    """Vertices ``rho(x) x`` and triangles of the closed surface.

    Axisymmetric fields are revolved onto ``n_phi_axisym`` longitudes. Each quad
    between neighbouring latitude rows is split in two, the seam in phi is
    closed, and a fan of triangles around an added pole vertex caps each end
    (the pole radius is the mean of the nearest row).
    """
    rho = np.asarray(rho, dtype=float)
    if grid.axisymmetric:
        m = n_phi_axisym
        phi = 2.0 * np.pi * np.arange(m) / m
        rho = np.repeat(rho, m, axis=1)
    else:
        m = grid.n_phi
        phi = np.asarray(grid.phi)
    n = grid.n_theta
    th = np.asarray(grid.theta)[:, None]
    x = np.stack([np.sin(th) * np.cos(phi), np.sin(th) * np.sin(phi), np.cos(th) * np.ones_like(phi)], -1)
    verts = (rho[..., None] * x).reshape(-1, 3)
    north = np.array([0.0, 0.0, rho[0].mean()])
    south = np.array([0.0, 0.0, -rho[-1].mean()])
    verts = np.vstack([verts, north, south])
    ni, si = n * m, n * m + 1

    def idx(j, i):
        return j * m + i % m

    faces = []
    for i in range(m):
        faces.append((ni, idx(0, i), idx(0, i + 1)))
    for j in range(n - 1):
        for i in range(m):
            a, b, c, d = idx(j, i), idx(j + 1, i), idx(j + 1, i + 1), idx(j, i + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    for i in range(m):
        faces.append((si, idx(n - 1, i + 1), idx(n - 1, i)))
    return verts, np.asarray(faces, dtype=int)


def obj_text(verts, faces, comment=None):
    lines = [f"# {comment}"] if comment else []
    lines += [f"v {x:.12g} {y:.12g} {z:.12g}" for x, y, z in verts]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    return "\n".join(lines) + "\n"


def write_obj(path, grid, rho, comment=None):
    verts, faces = mesh(grid, rho)
    return write_atomic(path, obj_text(verts, faces, comment))

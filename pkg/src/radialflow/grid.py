"""Offset latitude-longitude discretization of the unit sphere.

Nodes sit at ``theta_j = (j + 1/2) pi / n_theta`` and ``phi_i = 2 pi i / n_phi``, so
no node lies on a pole. Fields are arrays of shape ``(n_theta, n_phi)``; the
axisymmetric mode stores a single longitude column (``n_phi == 1``) and every
phi-derivative vanishes identically.

Derivatives are returned in the orthonormal frame ``(e_theta, e_phi)`` with
``e_phi = d/dphi / sin(theta)``. A stencil that steps past a pole reads the ghost
value at ``(-theta, phi)`` from the node ``(theta, phi + pi)`` (and likewise past
``theta = pi``), which keeps the stencils centered everywhere.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

MODES = ("full", "axisymmetric")
MIN_NODES = 8


@dataclass(frozen=True, eq=False)
class SphereGrid:
    mode: str
    n_theta: int
    n_phi: int
    theta: np.ndarray
    phi: np.ndarray
    dtheta: float
    dphi: float
    h_min: float

    @property
    def shape(self):
        return (self.n_theta, self.n_phi)

    @property
    def size(self):
        return self.n_theta * self.n_phi

    @property
    def axisymmetric(self):
        return self.mode == "axisymmetric"

    @property
    def theta2d(self):
        return np.broadcast_to(self.theta[:, None], self.shape)

    @property
    def phi2d(self):
        return np.broadcast_to(self.phi[None, :], self.shape)

    @cached_property
    def sin_theta(self):
        return np.sin(self.theta)[:, None]

    @cached_property
    def cot_theta(self):
        return (np.cos(self.theta) / np.sin(self.theta))[:, None]

    @cached_property
    def nodes(self):
        """Unit vectors of the nodes, shape ``(n_theta, n_phi, 3)``."""
        out = unit_vectors(self.theta2d, self.phi2d)
        out.setflags(write=False)
        return out

    @cached_property
    def e_theta(self):
        return frame(self.theta2d, self.phi2d)[0]

    @cached_property
    def e_phi(self):
        return frame(self.theta2d, self.phi2d)[1]


def build_grid(mode, n_theta, n_phi=None):
    """Construct a :class:`SphereGrid`.

    ``n_phi`` is ignored in axisymmetric mode. Full grids need an even ``n_phi``
    so that the pole-crossing partner ``phi + pi`` is itself a grid longitude.
    """
    if mode not in MODES:
        raise ValueError(f"unknown grid mode {mode!r}; expected one of {MODES}")
    n_theta = int(n_theta)
    if n_theta < MIN_NODES:
        raise ValueError(f"n_theta must be >= {MIN_NODES}, got {n_theta}")
    if mode == "full":
        if n_phi is None or int(n_phi) < MIN_NODES:
            raise ValueError(f"n_phi must be >= {MIN_NODES} in full mode, got {n_phi}")
        n_phi = int(n_phi)
        if n_phi % 2:
            raise ValueError(f"n_phi must be even, got {n_phi}")
    else:
        n_phi = 1

    dtheta = np.pi / n_theta
    dphi = 2.0 * np.pi / n_phi
    theta = (np.arange(n_theta) + 0.5) * dtheta
    phi = dphi * np.arange(n_phi)
    if mode == "full":
        h_min = min(dtheta, np.sin(theta[0]) * dphi)
    else:
        h_min = dtheta
    theta.setflags(write=False)
    phi.setflags(write=False)
    return SphereGrid(mode, n_theta, n_phi, theta, phi, dtheta, dphi, float(h_min))


def unit_vectors(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def frame(theta, phi):
    """Ambient unit vectors ``(e_theta, e_phi)`` at the given angles."""
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(theta * phi)], axis=-1)
    return e_theta, e_phi


def angles(points):
    """Polar and azimuthal angles of (not necessarily normalized) 3-vectors."""
    points = np.asarray(points, dtype=float)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    theta = np.arctan2(np.hypot(x, y), z)
    phi = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    return theta, phi


def _pad_rows(u, width, parity=1.0):
    # ghost rows across each pole, read from the antipodal longitude
    shift = u.shape[1] // 2
    top = parity * np.roll(u[width - 1::-1], shift, axis=1)
    bottom = parity * np.roll(u[:-width - 1:-1], shift, axis=1)
    return np.concatenate([top, u, bottom], axis=0)


def _shift(u, k):
    return np.roll(u, -k, axis=1)


def gradient_components(grid, u):
    """Frame components ``(d_theta u, d_phi u / sin theta)``."""
    up = _pad_rows(u, 1)
    u_t = (up[2:] - up[:-2]) / (2.0 * grid.dtheta)
    if grid.axisymmetric:
        return u_t, np.zeros_like(u)
    u_p = (_shift(u, 1) - _shift(u, -1)) / (2.0 * grid.dphi)
    return u_t, u_p / grid.sin_theta


def hessian_components(grid, u):
    """Frame components ``(H_11, H_12, H_22)`` of the covariant Hessian.

    ``H_11 = u_tt`` uses the second-order stencil. The mixed entry is the
    centered theta-difference of ``u_p / sin theta``, which equals
    ``(u_tp - cot theta u_p) / sin theta``. The two terms of
    ``H_22 = u_pp / sin^2 theta + cot theta u_t`` are each O(1/h) on the first
    latitude row and cancel, so both use fourth-order stencils; with second-order
    ones the max-norm error near the poles is only first order.
    """
    dt = grid.dtheta
    up = _pad_rows(u, 2)
    c, n1, s1, n2, s2 = up[2:-2], up[1:-3], up[3:-1], up[:-4], up[4:]
    u_tt = (s1 - 2.0 * c + n1) / dt**2
    u_t4 = (8.0 * (s1 - n1) - (s2 - n2)) / (12.0 * dt)
    cot = grid.cot_theta
    if grid.axisymmetric:
        return u_tt, np.zeros_like(u), cot * u_t4

    dp = grid.dphi
    st = grid.sin_theta
    w = (_shift(u, 1) - _shift(u, -1)) / (2.0 * dp) / st
    wp = _pad_rows(w, 1, parity=-1.0)
    h12 = (wp[2:] - wp[:-2]) / (2.0 * dt)
    # differences from the centre value so that phi-constant rows give exactly zero
    u_pp4 = (
        16.0 * ((_shift(u, 1) - u) + (_shift(u, -1) - u)) - ((_shift(u, 2) - u) + (_shift(u, -2) - u))
    ) / (12.0 * dp**2)
    h22 = u_pp4 / st**2 + cot * u_t4
    return u_tt, h12, h22


def covariant_gradient(grid, u):
    """Gradient as a frame vector field of shape ``(n_theta, n_phi, 2)``."""
    return np.stack(gradient_components(grid, np.asarray(u, dtype=float)), axis=-1)


def covariant_hessian(grid, u):
    """Hessian as a symmetric frame matrix field of shape ``(n_theta, n_phi, 2, 2)``."""
    h11, h12, h22 = hessian_components(grid, np.asarray(u, dtype=float))
    return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)


def interpolate(grid, values, theta, phi, parity=1.0):
    """Bilinear interpolation in ``(theta, phi)`` of a node field.

    ``parity`` is the sign a quantity picks up when continued across a pole in
    the extended chart: +1 for scalars, -1 for frame components of vectors.
    """
    values = np.asarray(values, dtype=float)
    theta = np.asarray(theta, dtype=float)
    padded = _pad_rows(values, 1, parity)
    s = (theta - grid.theta[0]) / grid.dtheta + 1.0
    j0 = np.clip(np.floor(s).astype(int), 0, grid.n_theta)
    a = s - j0
    if grid.axisymmetric:
        col = padded[:, 0]
        return (1.0 - a) * col[j0] + a * col[j0 + 1]
    q = np.mod(np.asarray(phi, dtype=float), 2.0 * np.pi) / grid.dphi
    i0f = np.floor(q)
    b = q - i0f
    i0 = i0f.astype(int) % grid.n_phi
    i1 = (i0 + 1) % grid.n_phi
    return (
        (1.0 - a) * (1.0 - b) * padded[j0, i0]
        + (1.0 - a) * b * padded[j0, i1]
        + a * (1.0 - b) * padded[j0 + 1, i0]
        + a * b * padded[j0 + 1, i1]
    )

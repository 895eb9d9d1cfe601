"""Geometry of the radial surface ``X(x) = rho(x) x`` at every grid node.

All tensors are components in the orthonormal frame of the round sphere. The
shape matrix ``a`` is computed from ``r = log rho``:

    a = e^{-r} gamma (I + grad r grad r^T - Hess r) gamma / sqrt(1 + |grad r|^2),
    gamma = I - grad r grad r^T / (W (1 + W)),   W = sqrt(1 + |grad r|^2).

The rho-route (``g^{-1/2} h g^{-1/2}`` with the closed-form square root) is kept
as a cross-check. Both routes consume the same discrete derivatives of ``r``
(derivatives of ``rho`` follow by the chain rule), so they agree to rounding.
"""

from dataclasses import dataclass

import numpy as np

from . import grid as sg
from . import symfunc
from .errors import DomainError


# symmetric 2x2 matrices are handled as component triples (xx, xy, yy)

def sym_sandwich(s, m):
    """``S M S`` for symmetric S and M, as a component triple."""
    s11, s12, s22 = s
    m11, m12, m22 = m
    p11 = s11 * m11 + s12 * m12
    p12 = s11 * m12 + s12 * m22
    p21 = s12 * m11 + s22 * m12
    p22 = s12 * m12 + s22 * m22
    return (p11 * s11 + p12 * s12, p11 * s12 + p12 * s22, p21 * s12 + p22 * s22)


def sym_eig(m):
    """Closed-form ascending eigenvalues of a symmetric 2x2 triple."""
    m11, m12, m22 = m
    mean = 0.5 * (m11 + m22)
    d = np.hypot(0.5 * (m11 - m22), m12)
    return mean - d, mean + d


def sym_stack(m):
    m11, m12, m22 = (np.asarray(c, dtype=float) for c in m)
    return np.stack([np.stack([m11, m12], -1), np.stack([m12, m22], -1)], -2)


def sym_unstack(a):
    a = np.asarray(a, dtype=float)
    return a[..., 0, 0], a[..., 0, 1], a[..., 1, 1]


def principal_curvatures(a):
    """Ascending eigenvalue pair of a symmetric 2x2 matrix (or stack of them)."""
    lo, hi = sym_eig(sym_unstack(a))
    return np.stack([lo, hi], axis=-1)


def log_route(r, grad_r, hess_r):
    """Shape matrix triple and ``(gamma, W)`` from the log-radial jet."""
    r1, r2 = grad_r
    q = r1 * r1 + r2 * r2
    w = np.sqrt(1.0 + q)
    c = 1.0 / (w * (1.0 + w))
    gamma = (1.0 - c * r1 * r1, -c * r1 * r2, 1.0 - c * r2 * r2)
    h11, h12, h22 = hess_r
    inner = (1.0 + r1 * r1 - h11, r1 * r2 - h12, 1.0 + r2 * r2 - h22)
    b = sym_sandwich(gamma, inner)
    scale = np.exp(-r) / w
    return tuple(scale * bi for bi in b), gamma, w


def rho_route(rho, grad_rho, hess_rho):
    """Metric, its inverse square root, second fundamental form and shape matrix from the rho-jet."""
    p1, p2 = grad_rho
    q = p1 * p1 + p2 * p2
    big_w = np.sqrt(rho * rho + q)
    g = (rho * rho + p1 * p1, p1 * p2, rho * rho + p2 * p2)
    c = 1.0 / (big_w * (rho + big_w))
    s = tuple(ci / rho for ci in (1.0 - c * p1 * p1, -c * p1 * p2, 1.0 - c * p2 * p2))
    q11, q12, q22 = hess_rho
    h = tuple(
        hi / big_w
        for hi in (
            rho * rho + 2.0 * p1 * p1 - rho * q11,
            2.0 * p1 * p2 - rho * q12,
            rho * rho + 2.0 * p2 * p2 - rho * q22,
        )
    )
    return g, s, h, sym_sandwich(s, h)


@dataclass(frozen=True, eq=False)
class ShapeState:
    """Per-node geometry; matrix fields have trailing shape ``(2, 2)``."""

    rho: np.ndarray
    grad_rho: np.ndarray
    g: np.ndarray
    g_inv_sqrt: np.ndarray
    h: np.ndarray
    a: np.ndarray
    kappa: np.ndarray
    support: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    a_rho: "np.ndarray | None" = None

    @property
    def route_defect(self):
        """Max relative disagreement of the two shape-matrix routes (verification mode only)."""
        if self.a_rho is None:
            return None
        scale = np.maximum(np.abs(self.a).max(axis=(-2, -1)), 1e-300)[..., None, None]
        return float(np.max(np.abs(self.a - self.a_rho) / scale))


def jets(grid, rho):
    """Discrete log- and rho-jets: ``(r, grad r, Hess r, grad rho, Hess rho)``."""
    rho = np.asarray(rho, dtype=float)
    if not np.all(rho > 0):
        raise DomainError("radial function must be positive at every node")
    r = np.log(rho)
    grad_r = sg.gradient_components(grid, r)
    hess_r = sg.hessian_components(grid, r)
    r1, r2 = grad_r
    grad_rho = (rho * r1, rho * r2)
    hess_rho = tuple(
        rho * (hc + pc) for hc, pc in zip(hess_r, (r1 * r1, r1 * r2, r2 * r2))
    )
    return r, grad_r, hess_r, grad_rho, hess_rho


def shape_state(grid, rho, verify=False):
    """Full geometry of the radial surface over ``grid``.

    With ``verify=True`` the rho-route shape matrix is stored in ``a_rho``.
    """
    rho = np.asarray(rho, dtype=float)
    r, grad_r, hess_r, grad_rho, hess_rho = jets(grid, rho)
    a, gamma, w = log_route(r, grad_r, hess_r)
    g, s, h, a_rho = rho_route(rho, grad_rho, hess_rho)
    lo, hi = sym_eig(a)

    p1, p2 = grad_rho
    x = grid.nodes
    grad_amb = p1[..., None] * grid.e_theta + p2[..., None] * grid.e_phi
    big_w = rho * w
    nu = (rho[..., None] * x - grad_amb) / big_w[..., None]
    return ShapeState(
        rho=rho,
        grad_rho=np.stack(grad_rho, -1),
        g=sym_stack(g),
        g_inv_sqrt=sym_stack(s),
        h=sym_stack(h),
        a=sym_stack(a),
        kappa=np.stack([lo, hi], -1),
        support=rho / w,
        nu=nu,
        gamma=sym_stack(gamma),
        a_rho=sym_stack(a_rho) if verify else None,
    )


def min_cone_margin(state, spec):
    """Smallest cone slack of the principal curvatures over all nodes (see ``symfunc.cone_margin``)."""
    return float(np.min(symfunc.cone_margin(spec, state.kappa)))

"""Fused per-node kernel for the time-stepping hot loop.

Mirrors ``grid.gradient_components``/``hessian_components``, ``shape.log_route``
and the two-variable curvature families of ``symfunc``; the numpy versions are
the reference and the test suite checks the two against each other.
"""

import numpy as np
from numba import njit

SIGMA, INV = 0, 1


def curvature_code(spec):
    """``(kind, k, alpha)`` for the kernel, flattening nested powers."""
    alpha = 1.0
    while spec.kind == "power":
        alpha *= spec.alpha
        spec = spec.base
    if spec.n != 2:
        raise ValueError("kernel supports two-variable curvature functions only")
    return (SIGMA if spec.kind == "sigma_k" else INV), spec.k, alpha


@njit(cache=True)
def _curvature(kind, k, alpha, l1, l2):
    # returns F, dF/dl1, dF/dl2, cone margin
    s1 = l1 + l2
    if kind == SIGMA:
        if k == 1:
            margin = 0.5 * s1
            f, g1, g2 = 0.5 * s1, 0.5, 0.5
        else:
            margin = min(0.5 * s1, l1 * l2)
            f, g1, g2 = l1 * l2, l2, l1
    else:
        margin = min(l1, l2)
        if k == 1:
            f = 2.0 * l1 * l2 / s1
            g1 = 2.0 * l2 * l2 / (s1 * s1)
            g2 = 2.0 * l1 * l1 / (s1 * s1)
        else:
            f, g1, g2 = l1 * l2, l2, l1
    if alpha != 1.0 and margin > 0:
        c = alpha * f ** (alpha - 1.0)
        g1 *= c
        g2 *= c
        f = f**alpha
    return f, g1, g2, margin


@njit(cache=True)
def _node(u, jj, ii, n, m):
    # value at an extended index; rows outside [0, n) come from the antipodal longitude
    if jj < 0:
        return u[-jj - 1, (ii + m // 2) % m]
    if jj >= n:
        return u[2 * n - 1 - jj, (ii + m // 2) % m]
    return u[jj, ii % m]


@njit(cache=True)
def _w(u, jj, ii, n, m, dphi, sin_t):
    # u_phi / sin(theta) at an extended row; odd across the poles
    sign = 1.0
    row = jj
    shift = 0
    if jj < 0:
        row, shift, sign = -jj - 1, m // 2, -1.0
    elif jj >= n:
        row, shift, sign = 2 * n - 1 - jj, m // 2, -1.0
    i = ii + shift
    return sign * (u[row, (i + 1) % m] - u[row, (i - 1) % m]) / (2.0 * dphi) / sin_t[row]


@njit(cache=True)
def step_kernel(u, dtheta, dphi, sin_t, cot_t, axisym, kind, k, alpha, p, eps, y, out):
    """Fill ``out`` with ``d_t r``; return (max|d_t rho|, max diffusion radius, min margin, argmin)."""
    n, m = u.shape
    max_dt_rho = 0.0
    max_radius = 0.0
    min_margin = np.inf
    arg = 0
    for j in range(n):
        st = sin_t[j]
        ct = cot_t[j]
        for i in range(m):
            c = u[j, i]
            un1 = _node(u, j - 1, i, n, m)
            us1 = _node(u, j + 1, i, n, m)
            un2 = _node(u, j - 2, i, n, m)
            us2 = _node(u, j + 2, i, n, m)
            r1 = (us1 - un1) / (2.0 * dtheta)
            h11 = (us1 - 2.0 * c + un1) / (dtheta * dtheta)
            ut4 = (8.0 * (us1 - un1) - (us2 - un2)) / (12.0 * dtheta)
            if axisym:
                r2 = 0.0
                h12 = 0.0
                h22 = ct * ut4
            else:
                ue1 = u[j, (i + 1) % m]
                uw1 = u[j, (i - 1) % m]
                ue2 = u[j, (i + 2) % m]
                uw2 = u[j, (i - 2) % m]
                r2 = (ue1 - uw1) / (2.0 * dphi) / st
                upp = (16.0 * ((ue1 - c) + (uw1 - c)) - ((ue2 - c) + (uw2 - c))) / (12.0 * dphi * dphi)
                h22 = upp / (st * st) + ct * ut4
                h12 = (_w(u, j + 1, i, n, m, dphi, sin_t) - _w(u, j - 1, i, n, m, dphi, sin_t)) / (2.0 * dtheta)

            q = r1 * r1 + r2 * r2
            w = np.sqrt(1.0 + q)
            cc = 1.0 / (w * (1.0 + w))
            g11 = 1.0 - cc * r1 * r1
            g12 = -cc * r1 * r2
            g22 = 1.0 - cc * r2 * r2
            m11 = 1.0 + r1 * r1 - h11
            m12 = r1 * r2 - h12
            m22 = 1.0 + r2 * r2 - h22
            p11 = g11 * m11 + g12 * m12
            p12 = g11 * m12 + g12 * m22
            p21 = g12 * m11 + g22 * m12
            p22 = g12 * m12 + g22 * m22
            scale = np.exp(-c) / w
            a11 = scale * (p11 * g11 + p12 * g12)
            a12 = scale * (p11 * g12 + p12 * g22)
            a22 = scale * (p21 * g12 + p22 * g22)
            mean = 0.5 * (a11 + a22)
            d = np.hypot(0.5 * (a11 - a22), a12)
            lo = mean - d
            hi = mean + d

            F, f1, f2, margin = _curvature(kind, k, alpha, lo, hi)
            if margin < min_margin:
                min_margin = margin
                arg = j * m + i
            if not margin > 0:
                out[j, i] = 0.0
                continue
            rho = np.exp(c)
            fval = rho**p * (1.0 + eps * y[j, i])
            G = (1.0 / F - fval) * w / rho
            out[j, i] = G
            v = abs(rho * G)
            if v > max_dt_rho:
                max_dt_rho = v

            gap = hi - lo
            coef = 0.0
            if gap > 1e-12 * max(abs(hi), abs(lo)):
                coef = (f2 - f1) / gap
            fm = 0.5 * (f1 + f2)
            d11 = fm + coef * (a11 - mean)
            d12 = coef * a12
            d22 = fm + coef * (a22 - mean)
            q11 = g11 * d11 + g12 * d12
            q12 = g11 * d12 + g12 * d22
            q21 = g12 * d11 + g22 * d12
            q22 = g12 * d12 + g22 * d22
            b11 = q11 * g11 + q12 * g12
            b12 = q11 * g12 + q12 * g22
            b22 = q21 * g12 + q22 * g22
            radius = (0.5 * (b11 + b22) + np.hypot(0.5 * (b11 - b22), b12)) / (rho * F) ** 2
            if radius > max_radius:
                max_radius = radius
    return max_dt_rho, max_radius, min_margin, arg

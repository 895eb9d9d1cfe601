"""Prescribed function ``f(X) = |X|^p (1 + eps Y(X/|X|))`` and its admissibility scans.

``Y`` is either a degree-one harmonic ``c . x`` or a table of node values on a
:class:`~radialflow.grid.SphereGrid` (bilinearly interpolated off the nodes).
Strict inequalities are certified with a floor of ``STRICT_TOL``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import grid as sg
from .errors import AdmissibilityError, DomainError

STRICT_TOL = 1e-10
RADIAL_SAMPLES = 32
FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class PrescribedSpec:
    p: float
    epsilon: float = 0.0
    coeffs: tuple = (0.0, 0.0, 0.0)
    table: "np.ndarray | None" = None
    table_grid: "sg.SphereGrid | None" = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not all(np.isfinite(self.coeffs)) or not np.isfinite(self.p):
            raise ValueError("prescribed-function coefficients must be finite")
        if self.table is not None:
            if self.table_grid is None or np.shape(self.table) != self.table_grid.shape:
                raise ValueError("tabulated angular profile needs a matching grid")
            lo = float(np.min(self.table))
            hi = float(np.max(self.table))
        else:
            amp = float(np.linalg.norm(self.coeffs))
            lo, hi = -amp, amp
        if min(1.0 + self.epsilon * lo, 1.0 + self.epsilon * hi) <= 0:
            raise ValueError("1 + epsilon * Y must be positive on the sphere")

    @property
    def harmonic(self):
        return self.table is None


def angular(spec, x):
    """``Y`` at unit vectors ``x`` (last axis of length 3)."""
    x = np.asarray(x, dtype=float)
    if spec.harmonic:
        return x @ np.asarray(spec.coeffs)
    theta, phi = sg.angles(x)
    return sg.interpolate(spec.table_grid, spec.table, theta, phi)


def _check_rho(rho):
    rho = np.asarray(rho, dtype=float)
    if not np.all(rho > 0):
        raise DomainError("f is defined for rho > 0 only")
    return rho


def eval_f(spec, rho, x):
    rho = _check_rho(rho)
    return rho**spec.p * (1.0 + spec.epsilon * angular(spec, x))


def d_rho_f(spec, rho, x):
    rho = _check_rho(rho)
    return spec.p * rho ** (spec.p - 1.0) * (1.0 + spec.epsilon * angular(spec, x))


def eval_f_ambient(spec, points):
    """``f`` at ambient points (last axis of length 3)."""
    points = np.asarray(points, dtype=float)
    rad = np.linalg.norm(points, axis=-1)
    return eval_f(spec, rad, points / rad[..., None])


def sample_directions(spec, grid=None):
    """Unit vectors used by the scans: grid nodes plus the extremal directions of ``Y``.

    Adding ``+-c/|c|`` makes the angular extremes of a harmonic ``Y`` exact even
    though no node lies on them.
    """
    if grid is None:
        grid = sg.build_grid("full", 32, 64)
    dirs = [grid.nodes.reshape(-1, 3)]
    if spec.harmonic:
        c = np.asarray(spec.coeffs)
        norm = np.linalg.norm(c)
        if norm > 0:
            dirs.append(np.stack([c / norm, -c / norm]))
    return np.concatenate(dirs)


def _radii(lo, hi, samples):
    return np.linspace(lo, hi, samples) if hi > lo else np.array([float(lo)])


def check_monotonicity(spec, k, rho_range, samples=RADIAL_SAMPLES, grid=None):
    """Minimum of ``d/drho (rho^-k f) = (p - k) rho^(p-k-1) (1 + eps Y)`` over a scan lattice."""
    lo, hi = rho_range
    if not 0 < lo <= hi:
        raise ValueError("rho_range must be a positive interval")
    y = angular(spec, sample_directions(spec, grid))
    rho = _radii(lo, hi, samples)
    vals = (spec.p - k) * rho[:, None] ** (spec.p - k - 1.0) * (1.0 + spec.epsilon * y[None, :])
    return float(vals.min())


@dataclass
class BarrierCheck:
    passed: bool
    inner_margin: float  # r1^k - max f(r1 x)
    outer_margin: float  # min f(r2 x) - r2^k


def verify_barriers(spec, k, r1, r2, grid=None):
    """Check ``f <= r1^k`` on ``|X| = r1`` and ``f >= r2^k`` on ``|X| = r2``."""
    if not 0 < r1 <= r2:
        raise ValueError("need 0 < r1 <= r2")
    y = angular(spec, sample_directions(spec, grid))
    inner = r1**k - float(np.max(r1**spec.p * (1.0 + spec.epsilon * y)))
    outer = float(np.min(r2**spec.p * (1.0 + spec.epsilon * y))) - r2**k
    # equality is allowed; rounding of r^p vs r^k is not a violation
    tol = 1e-13 * max(1.0, r1**k, r2**k)
    return BarrierCheck(inner >= -tol and outer >= -tol, inner, outer)


def _delta0_scan(spec, k, R1, R2, samples, grid):
    y = angular(spec, sample_directions(spec, grid))
    rho = _radii(R1, R2, samples)
    vals = (spec.p - k) * rho[:, None] ** spec.p * (1.0 + spec.epsilon * y[None, :])
    return float(vals.min())


def delta0(spec, k, R1, R2, samples=RADIAL_SAMPLES, grid=None):
    """``min (rho d_rho f - k f) = min (p - k) rho^p (1 + eps Y)`` over ``[R1, R2] x S^2``."""
    value = _delta0_scan(spec, k, R1, R2, samples, grid)
    if value < STRICT_TOL:
        raise AdmissibilityError(f"rho d_rho f - k f is not positive on [{R1}, {R2}] (min {value:.3g})")
    return value


def min_f(spec, R1, R2, samples=RADIAL_SAMPLES, grid=None):
    """Minimum of ``f`` over the annulus ``R1 <= |X| <= R2``."""
    y = angular(spec, sample_directions(spec, grid))
    rho = _radii(R1, R2, samples)
    return float(np.min(rho[:, None] ** spec.p * (1.0 + spec.epsilon * y[None, :])))


def _annulus_points(spec, R1, R2, samples):
    # lattice that includes both poles; f itself has no coordinate singularity there
    theta = np.linspace(0.0, np.pi, 33)
    phi = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    t2, p2 = np.meshgrid(theta, phi, indexing="ij")
    dirs = [sg.unit_vectors(t2, p2).reshape(-1, 3)]
    if spec.harmonic and np.linalg.norm(spec.coeffs) > 0:
        c = np.asarray(spec.coeffs) / np.linalg.norm(spec.coeffs)
        dirs.append(np.stack([c, -c]))
    dirs = np.concatenate(dirs)
    rho = _radii(R1, R2, samples)
    return (rho[:, None, None] * dirs[None, :, :]).reshape(-1, 3)


def norms(spec, R1, R2, samples=RADIAL_SAMPLES):
    """``(sup |grad f|, max(sup |f|, sup |grad f|, sup ||Hess f||_2))`` over the annulus.

    Ambient derivatives use central differences with step ``1e-4 R1``.
    """
    pts = _annulus_points(spec, R1, R2, samples)
    hstep = FD_STEP * R1
    eye = np.eye(3) * hstep
    f0 = eval_f_ambient(spec, pts)
    fp = np.stack([eval_f_ambient(spec, pts + eye[i]) for i in range(3)], -1)
    fm = np.stack([eval_f_ambient(spec, pts - eye[i]) for i in range(3)], -1)
    grad = (fp - fm) / (2.0 * hstep)
    hess = np.empty(pts.shape[:1] + (3, 3))
    for i in range(3):
        hess[:, i, i] = (fp[:, i] - 2.0 * f0 + fm[:, i]) / hstep**2
        for j in range(i + 1, 3):
            fpp = eval_f_ambient(spec, pts + eye[i] + eye[j])
            fpm = eval_f_ambient(spec, pts + eye[i] - eye[j])
            fmp = eval_f_ambient(spec, pts - eye[i] + eye[j])
            fmm = eval_f_ambient(spec, pts - eye[i] - eye[j])
            hess[:, i, j] = hess[:, j, i] = (fpp - fpm - fmp + fmm) / (4.0 * hstep**2)
    c0_grad = float(np.linalg.norm(grad, axis=-1).max())
    hess_norm = float(np.abs(np.linalg.eigvalsh(hess)).max())
    return c0_grad, max(float(np.abs(f0).max()), c0_grad, hess_norm)


@dataclass
class AdmissibilityReport:
    k: float
    r1: float
    r2: float
    min_mono: float
    delta0: float
    c0_grad: float
    c2_norm: float
    barriers: BarrierCheck
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return (
            self.min_mono >= STRICT_TOL
            and self.r1 <= self.r2
            and self.delta0 >= STRICT_TOL
            and self.barriers.passed
        )

    def as_dict(self):
        return {
            "pass": bool(self.passed),
            "k": self.k,
            "r1": self.r1,
            "r2": self.r2,
            "min_mono": self.min_mono,
            "delta0": self.delta0,
            "c0_grad": self.c0_grad,
            "c2_norm": self.c2_norm,
            "barrier_inner_margin": self.barriers.inner_margin,
            "barrier_outer_margin": self.barriers.outer_margin,
            "notes": list(self.notes),
        }


def admissibility(spec, k, r1, r2, grid=None):
    """Monotonicity, barrier radii, delta0 and derivative norms on ``[r1, r2]``."""
    notes = []
    mono = check_monotonicity(spec, k, (r1, r2), grid=grid)
    barriers = verify_barriers(spec, k, r1, r2, grid=grid)
    d0 = _delta0_scan(spec, k, r1, r2, RADIAL_SAMPLES, grid)
    if d0 < STRICT_TOL:
        notes.append("rho d_rho f - k f is not positive on [r1, r2]")
    if not barriers.passed:
        notes.append("barrier inequalities fail")
    c0, c2 = norms(spec, r1, r2)
    return AdmissibilityReport(float(k), r1, r2, mono, d0, c0, c2, barriers, notes)


def scan_barrier_radii(spec, k, radii, grid=None):
    """Largest ``r1`` and smallest ``r2`` in ``radii`` satisfying the barrier inequalities."""
    y = angular(spec, sample_directions(spec, grid))
    r1 = [r for r in radii if np.max(r**spec.p * (1.0 + spec.epsilon * y)) <= r**k]
    r2 = [r for r in radii if np.min(r**spec.p * (1.0 + spec.epsilon * y)) >= r**k]
    return (max(r1) if r1 else None), (min(r2) if r2 else None)
